#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "pegx/errors.hpp"
#include "pegx/harness.hpp"

using namespace pegx;
namespace fs = std::filesystem;

namespace {

// Tiny networks and budgets so whole scenarios run in well under a second.
ExperimentConfig SmallConfig() {
  ExperimentConfig c;
  c.sac.actor_hidden = {16, 16};
  c.sac.critic_hidden = {32, 32};
  c.sac.batch_size = 16;
  c.sac.warmup_steps = 100;
  c.finetune.warmup_steps = 100;
  c.budget = {300, 300, 200};
  c.curve_interval = 100;
  c.eval.episodes = 9;
  return c;
}

fs::path FreshDir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("pegx_harness_" + name);
  fs::remove_all(d);
  return d;
}

std::vector<EpisodeRecord> Records(int successes, int total, int steps = 10) {
  std::vector<EpisodeRecord> r(total);
  for (int i = 0; i < total; ++i) {
    r[i].episode_id = i;
    r[i].success = i < successes;
    r[i].terminal = r[i].success ? TerminalReason::kSuccess : TerminalReason::kTimeout;
    r[i].steps = steps + i;
  }
  return r;
}

}  // namespace

TEST(Scenarios, TableMatchesProtocol) {
  struct Row {
    int id;
    const char* train;
    bool pretrained;
    const char* eval;
    ScenarioMode mode;
  };
  const Row expected[] = {
      {1, "A", false, "A", ScenarioMode::kScratch},
      {2, "B", false, "B", ScenarioMode::kScratch},
      {3, "A", true, "B", ScenarioMode::kZeroShot},
      {4, "B", true, "A", ScenarioMode::kZeroShot},
      {5, "A", true, "B", ScenarioMode::kFinetune},
  };
  ASSERT_EQ(AllScenarios().size(), 5u);
  for (const Row& row : expected) {
    const ScenarioSpec s = GetScenario(row.id);
    EXPECT_EQ(s.id, row.id);
    EXPECT_EQ(s.train_embodiment, row.train);
    EXPECT_EQ(s.pretrained, row.pretrained);
    EXPECT_EQ(s.eval_embodiment, row.eval);
    EXPECT_EQ(s.mode, row.mode);
  }
  EXPECT_THROW(GetScenario(0), DomainError);
  EXPECT_THROW(GetScenario(6), DomainError);
  EXPECT_STREQ(ToString(ScenarioMode::kZeroShot), "zero_shot");
}

TEST(EvalGrid, HundredStartsInsideWorkspaceOffTheMouth) {
  const ExperimentConfig cfg;
  for (const EmbodimentSpec& emb : {cfg.embodiment_a, cfg.embodiment_b}) {
    const EvalGrid g = MakeEvalGrid(cfg, emb, 100, 42);
    ASSERT_EQ(g.size(), 100);
    ASSERT_EQ(g.seeds.size(), 100u);
    for (const Vec3& p : g.starts) {
      EXPECT_TRUE(emb.Contains(p));
      EXPECT_DOUBLE_EQ(p.z(), cfg.geometry.hole_center.z() + 0.03);
      EXPECT_GE(cfg.geometry.LateralOffset(p), cfg.geometry.hole_radius - 1e-12);
      EXPECT_LE(std::abs(p.x() - cfg.geometry.hole_center.x()), 0.02 + 1e-12);
      EXPECT_LE(std::abs(p.y() - cfg.geometry.hole_center.y()), 0.02 + 1e-12);
    }
    std::vector<std::uint64_t> seeds = g.seeds;
    std::sort(seeds.begin(), seeds.end());
    EXPECT_EQ(std::unique(seeds.begin(), seeds.end()), seeds.end());
  }
  const EvalGrid a = MakeEvalGrid(cfg, cfg.embodiment_a, 100, 42);
  const EvalGrid b = MakeEvalGrid(cfg, cfg.embodiment_a, 100, 42);
  EXPECT_EQ(a.seeds, b.seeds);
  EXPECT_EQ(MakeEvalGrid(cfg, cfg.embodiment_a, 7, 1).size(), 7);
  EXPECT_THROW(MakeEvalGrid(cfg, cfg.embodiment_a, 0, 1), DomainError);
}

TEST(EvalGrid, RejectsStartsOutsideWorkspace) {
  ExperimentConfig cfg;
  cfg.eval.height = 0.5;
  EXPECT_THROW(MakeEvalGrid(cfg, cfg.embodiment_a, 100, 1), BoundsError);
}

TEST(Metrics, SuccessRate) {
  EXPECT_NEAR(SuccessRate(Records(78, 99)), 78.7879, 1e-4);
  EXPECT_NEAR(SuccessRate(Records(78, 99)), 7800.0 / 99.0, 1e-12);
  EXPECT_EQ(SuccessRate(Records(0, 50)), 0.0);
  EXPECT_EQ(SuccessRate(Records(50, 100)), 50.0);
  EXPECT_THROW(SuccessRate({}), DomainError);
}

TEST(Metrics, PermutationInvariance) {
  std::vector<EpisodeRecord> r = Records(61, 100);
  const double rate = SuccessRate(r), steps = AvgTimesteps(r);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 100; ++k) {
    std::shuffle(r.begin(), r.end(), rng);
    ASSERT_EQ(SuccessRate(r), rate);
    ASSERT_NEAR(AvgTimesteps(r), steps, 1e-12);
  }
}

TEST(Metrics, AvgTimesteps) {
  std::vector<EpisodeRecord> r(2);
  r[0].steps = 100;
  r[1].steps = 150;
  EXPECT_EQ(AvgTimesteps(r), 125.0);
  r.resize(1);
  r[0].steps = 126;
  EXPECT_EQ(AvgTimesteps(r), 126.0);
  std::vector<EpisodeRecord> all_timeout(10);
  for (auto& e : all_timeout) e.steps = 300;
  EXPECT_EQ(AvgTimesteps(all_timeout), 300.0);
  EXPECT_THROW(AvgTimesteps({}), DomainError);
  const SummaryStats s = Summarize(3, Records(97, 100, 85));
  EXPECT_EQ(s.scenario_id, 3);
  EXPECT_EQ(s.episodes, 100);
  EXPECT_EQ(s.success_rate_percent, 97.0);
  EXPECT_EQ(s.avg_steps, 85 + 49.5);
}

TEST(Evaluate, DeterministicAndFrozen) {
  const ExperimentConfig cfg = SmallConfig();
  const TrainOutcome t = TrainScratch(cfg, "A", 150, 3);
  const std::uint64_t before = WeightsChecksum(t.checkpoint);
  const EvalGrid grid = MakeEvalGrid(cfg, cfg.embodiment_b, 100, 9);
  const auto r1 = Evaluate(t.checkpoint, cfg, "B", grid, 3);
  const auto r2 = Evaluate(t.checkpoint, cfg, "B", grid, 3);
  ASSERT_EQ(r1.size(), 100u);
  for (std::size_t i = 0; i < r1.size(); ++i) {
    EXPECT_EQ(r1[i].episode_id, static_cast<int>(i));
    EXPECT_EQ(r1[i].scenario_id, 3);
    EXPECT_EQ(r1[i].seed, grid.seeds[i]);
    EXPECT_EQ(r1[i].steps, r2[i].steps);
    EXPECT_EQ(r1[i].terminal, r2[i].terminal);
    EXPECT_EQ(r1[i].cumulative_reward, r2[i].cumulative_reward);
    EXPECT_EQ(r1[i].success, r1[i].terminal == TerminalReason::kSuccess);
    EXPECT_LE(r1[i].steps, cfg.max_agent_steps);
  }
  EXPECT_EQ(WeightsChecksum(t.checkpoint), before);
}

TEST(Evaluate, ZeroActorGivesFixedActionOutcome) {
  const ExperimentConfig cfg = SmallConfig();
  PolicyCheckpoint c = TrainScratch(cfg, "A", 1, 0).checkpoint;
  for (auto& l : c.actor.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  const EvalGrid grid = MakeEvalGrid(cfg, cfg.embodiment_a, 4, 2);
  const auto a = Evaluate(c, cfg, "A", grid);
  const auto b = Evaluate(c, cfg, "A", grid);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].steps, b[i].steps);
    EXPECT_EQ(a[i].cumulative_reward, b[i].cumulative_reward);
  }
}

TEST(Evaluate, ArchitectureMismatchRejected) {
  ExperimentConfig cfg = SmallConfig();
  cfg.sac.actor_hidden = {32, 32};
  const PolicyCheckpoint c = TrainScratch(cfg, "A", 1, 0).checkpoint;
  ExperimentConfig other = cfg;
  other.sac.actor_hidden = {64, 64};
  EXPECT_THROW(Evaluate(c, other, "A", MakeEvalGrid(other, other.embodiment_a, 4, 1)),
               ValidationError);
}

TEST(Finetune, NoWeightChangeBeforeWarmupEnds) {
  const ExperimentConfig cfg = SmallConfig();
  const PolicyCheckpoint src = TrainScratch(cfg, "A", 200, 1).checkpoint;
  const TrainOutcome ft = Finetune(src, cfg, "B", cfg.finetune.warmup_steps, 5);
  EXPECT_EQ(WeightsChecksum(ft.checkpoint), WeightsChecksum(src));
  EXPECT_EQ(ft.result.updates, 0);
  EXPECT_EQ(ft.checkpoint.embodiment, "B");
  EXPECT_EQ(ft.checkpoint.train_steps, src.train_steps + cfg.finetune.warmup_steps);
  const TrainOutcome longer = Finetune(src, cfg, "B", cfg.finetune.warmup_steps + 20, 5);
  EXPECT_NE(WeightsChecksum(longer.checkpoint), WeightsChecksum(src));
}

TEST(Finetune, DeterministicPerSeed) {
  const ExperimentConfig cfg = SmallConfig();
  const PolicyCheckpoint src = TrainScratch(cfg, "A", 200, 1).checkpoint;
  const std::string a = SerializeCheckpoint(Finetune(src, cfg, "B", 150, 8).checkpoint);
  const std::string b = SerializeCheckpoint(Finetune(src, cfg, "B", 150, 8).checkpoint);
  EXPECT_EQ(a, b);
  EXPECT_THROW(Finetune(src, cfg, "B", 0, 8), DomainError);
}

TEST(RunScenario, ZeroShotNeedsCheckpoint) {
  const fs::path dir = FreshDir("dep");
  try {
    RunScenario(GetScenario(3), SmallConfig(), 0, dir.string());
    FAIL() << "expected DependencyError";
  } catch (const DependencyError& e) {
    EXPECT_NE(std::string(e.what()).find(ScratchCheckpointPath(dir.string(), "A")),
              std::string::npos);
  }
  EXPECT_THROW(RunScenario(GetScenario(5), SmallConfig(), 0, dir.string()), DependencyError);
}

TEST(RunScenario, WritesOutputsForEachMode) {
  const fs::path dir = FreshDir("modes");
  const ExperimentConfig cfg = SmallConfig();
  const ScenarioResult s1 = RunScenario(GetScenario(1), cfg, 11, dir.string());
  EXPECT_EQ(s1.records.size(), 9u);
  ASSERT_TRUE(s1.checkpoint_path.has_value());
  EXPECT_EQ(LoadCheckpoint(*s1.checkpoint_path).embodiment, "A");
  EXPECT_TRUE(fs::exists(dir / "scenario_1" / "curve.csv"));

  const ScenarioResult s3 = RunScenario(GetScenario(3), cfg, 11, dir.string());
  EXPECT_TRUE(s3.curve.empty());
  EXPECT_FALSE(fs::exists(dir / "scenario_3" / "curve.csv"));
  const std::string summary = ReadTextFile((dir / "scenario_3" / "summary.csv").string());
  EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 2);
  EXPECT_EQ(ParseRecordsCsv(ReadTextFile((dir / "scenario_3" / "records.csv").string()), "r")
                .size(),
            9u);

  const ScenarioResult s5 = RunScenario(GetScenario(5), cfg, 11, dir.string());
  EXPECT_EQ(LoadCheckpoint(FinetuneCheckpointPath(dir.string())).embodiment, "B");
  EXPECT_EQ(s5.summary.scenario_id, 5);
}

TEST(Csv, RecordsRoundTrip) {
  std::vector<EpisodeRecord> r = Records(2, 4);
  r[3].terminal = TerminalReason::kCollision;
  r[1].cumulative_reward = -0.1234567890123456789;
  r[2].seed = 18446744073709551615ull;
  const std::string text = RecordsCsv(r);
  EXPECT_EQ(text.substr(0, text.find('\n')), kRecordsHeader);
  const auto back = ParseRecordsCsv(text, "mem");
  ASSERT_EQ(back.size(), r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_EQ(back[i].seed, r[i].seed);
    EXPECT_EQ(back[i].terminal, r[i].terminal);
    EXPECT_EQ(back[i].cumulative_reward, r[i].cumulative_reward);
  }
  EXPECT_EQ(RecordsCsv(back), text);
}

TEST(Csv, CurveRoundTrip) {
  const std::vector<CurvePoint> c{{1000, -3.25, 10.0}, {2000, 55.5, 95.0}};
  EXPECT_EQ(CurveCsv(ParseCurveCsv(CurveCsv(c), "mem")), CurveCsv(c));
}

TEST(Csv, MalformedRowsNameTheLine) {
  const std::string good = RecordsCsv(Records(1, 2));
  try {
    ParseRecordsCsv(good + "3,0,1,1,notanumber,success,0\n", "recs.csv");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("recs.csv:4"), std::string::npos) << e.what();
  }
  EXPECT_THROW(ParseRecordsCsv("bad,header\n", "x"), ValidationError);
  EXPECT_THROW(ParseRecordsCsv(good + "1,2,3\n", "x"), ValidationError);
  EXPECT_THROW(ParseRecordsCsv(good + "3,0,1,1,5,exploded,0\n", "x"), ValidationError);
  EXPECT_THROW(ParseRecordsCsv(good + "3,0,1,1,5,timeout,0\n", "x"), ValidationError);
}
