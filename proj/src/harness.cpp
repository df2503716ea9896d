#include "pegx/harness.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pegx/errors.hpp"
#include "pegx/seeding.hpp"

namespace pegx {
namespace {

namespace fs = std::filesystem;

// Seed streams derived from the scenario base seed.
constexpr std::uint64_t kStreamTrainA = 1;
constexpr std::uint64_t kStreamTrainB = 2;
constexpr std::uint64_t kStreamFinetune = 3;
constexpr std::uint64_t kStreamEvalGrid = 4;

std::string FmtDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T ParseNumber(const std::string& s, const std::string& where, const char* what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError(where + ": bad " + what + " '" + s + "'");
  }
  return v;
}

// Lines of a CSV body with the header checked; returns (line number, text).
std::vector<std::pair<int, std::string>> CsvRows(const std::string& text,
                                                 const std::string& header,
                                                 const std::string& source) {
  std::stringstream ss(text);
  std::string line;
  int n = 0;
  std::vector<std::pair<int, std::string>> rows;
  bool saw_header = false;
  while (std::getline(ss, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!saw_header) {
      if (line != header) {
        throw ValidationError(source + ":" + std::to_string(n) +
                              ": expected header '" + header + "'");
      }
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;
    rows.emplace_back(n, line);
  }
  if (!saw_header) throw ValidationError(source + ":1: empty file, missing header");
  return rows;
}

std::int64_t BudgetFor(const ExperimentConfig& cfg, const std::string& emb) {
  return emb == "A" ? cfg.budget.scratch_steps_a : cfg.budget.scratch_steps_b;
}

}  // namespace

const char* ToString(ScenarioMode mode) {
  switch (mode) {
    case ScenarioMode::kScratch:
      return "scratch";
    case ScenarioMode::kZeroShot:
      return "zero_shot";
    case ScenarioMode::kFinetune:
      return "finetune";
  }
  return "unknown";
}

const std::vector<ScenarioSpec>& AllScenarios() {
  static const std::vector<ScenarioSpec> table{
      {1, "A", false, "A", ScenarioMode::kScratch},
      {2, "B", false, "B", ScenarioMode::kScratch},
      {3, "A", true, "B", ScenarioMode::kZeroShot},
      {4, "B", true, "A", ScenarioMode::kZeroShot},
      {5, "A", true, "B", ScenarioMode::kFinetune},
  };
  return table;
}

ScenarioSpec GetScenario(int id) {
  if (id < 1 || id > 5) {
    throw DomainError("scenario id must be 1..5, got " + std::to_string(id));
  }
  return AllScenarios()[id - 1];
}

EvalGrid MakeEvalGrid(const ExperimentConfig& cfg, const EmbodimentSpec& embodiment,
                      int episodes, std::uint64_t base_seed) {
  if (episodes <= 0) throw DomainError("eval grid: episodes must be > 0");
  const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(episodes))));
  const double half = 0.5 * cfg.eval.patch_size;
  const double spacing = side > 1 ? cfg.eval.patch_size / (side - 1) : 0.0;
  const Vec3& hole = cfg.geometry.hole_center;
  const double rim = cfg.geometry.hole_radius;

  EvalGrid g;
  for (int i = 0; i < episodes; ++i) {
    const int row = i / side;
    const int col = i % side;
    double dx = side > 1 ? -half + col * spacing : 0.0;
    double dy = side > 1 ? -half + row * spacing : 0.0;
    const double r = std::hypot(dx, dy);
    if (r < rim) {
      // Over the mouth: move out to the rim along the same bearing.
      if (r == 0.0) {
        dx = rim;
      } else {
        dx *= rim / r;
        dy *= rim / r;
      }
    }
    const Vec3 start = hole + Vec3(dx, dy, cfg.eval.height);
    if (!embodiment.Contains(start)) {
      throw BoundsError("eval grid: start outside the workspace of " + embodiment.id);
    }
    g.starts.push_back(start);
    g.seeds.push_back(DeriveSeed(base_seed, static_cast<std::uint64_t>(i)));
  }
  return g;
}

double SuccessRate(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) throw DomainError("success_rate: no records");
  int wins = 0;
  for (const auto& r : records) wins += r.success ? 1 : 0;
  return 100.0 * wins / static_cast<double>(records.size());
}

double AvgTimesteps(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) throw DomainError("avg_timesteps: no records");
  std::int64_t total = 0;
  for (const auto& r : records) total += r.steps;
  return static_cast<double>(total) / static_cast<double>(records.size());
}

SummaryStats Summarize(int scenario_id, const std::vector<EpisodeRecord>& records) {
  return {scenario_id, SuccessRate(records), AvgTimesteps(records),
          static_cast<int>(records.size())};
}

std::vector<EpisodeRecord> Evaluate(const PolicyCheckpoint& ckpt,
                                    const ExperimentConfig& cfg,
                                    const std::string& embodiment,
                                    const EvalGrid& grid, int scenario_id) {
  CheckArchitecture(ckpt, kObservationDim, sac::kPhysicalActionDim,
                    cfg.sac.actor_hidden, cfg.sac.critic_hidden);
  const sac::SacAgent agent = AgentFromCheckpoint(ckpt, cfg.sac, cfg.ObsScale());
  PegTask task(cfg.TaskConfig(embodiment, /*eval=*/true));
  std::vector<EpisodeRecord> records;
  records.reserve(grid.starts.size());
  for (int i = 0; i < grid.size(); ++i) {
    const EpisodeOutcome o = RunEvalEpisode(task, agent, grid.starts[i], grid.seeds[i]);
    EpisodeRecord r;
    r.episode_id = i;
    r.scenario_id = scenario_id;
    r.seed = grid.seeds[i];
    r.terminal = o.terminal;
    r.success = o.terminal == TerminalReason::kSuccess;
    r.steps = o.steps;
    r.cumulative_reward = o.cumulative_reward;
    records.push_back(r);
  }
  return records;
}

TrainOutcome TrainScratch(const ExperimentConfig& cfg, const std::string& embodiment,
                          std::int64_t steps, std::uint64_t seed) {
  cfg.Embodiment(embodiment);
  sac::SacAgent agent = sac::SacAgent::Create(kObservationDim, sac::kPhysicalActionDim,
                                              cfg.ObsScale(), cfg.sac, DeriveSeed(seed, 1));
  PegTask task(cfg.TaskConfig(embodiment, /*eval=*/false));
  TrainOptions opt;
  opt.total_steps = steps;
  opt.seed = DeriveSeed(seed, 2);
  opt.curve_interval = cfg.curve_interval;
  opt.window_episodes = cfg.window_episodes;
  opt.success_threshold_percent = cfg.success_threshold_percent;
  TrainOutcome out;
  out.result = Train(task, agent, opt);
  out.checkpoint = MakeCheckpoint(agent, embodiment, steps, seed, true);
  return out;
}

TrainOutcome Finetune(const PolicyCheckpoint& ckpt, const ExperimentConfig& cfg,
                      const std::string& embodiment, std::int64_t steps,
                      std::uint64_t seed) {
  if (steps <= 0) throw DomainError("finetune: steps must be > 0");
  CheckArchitecture(ckpt, kObservationDim, sac::kPhysicalActionDim,
                    cfg.sac.actor_hidden, cfg.sac.critic_hidden);
  sac::SacHyperparams hp = cfg.sac;
  hp.warmup_steps = cfg.finetune.warmup_steps;
  sac::SacAgent agent = AgentFromCheckpoint(ckpt, hp, cfg.ObsScale());
  // Stored Adam states carry the source run's learning rates; the current
  // config decides them here.
  agent.actor_opt.hp.lr = hp.lr_actor;
  agent.q1_opt.hp.lr = hp.lr_critic;
  agent.q2_opt.hp.lr = hp.lr_critic;
  agent.temp_opt.hp.lr = hp.lr_temp;
  if (cfg.finetune.reset_critics) {
    const sac::SacAgent fresh = sac::SacAgent::Create(
        kObservationDim, sac::kPhysicalActionDim, cfg.ObsScale(), hp, DeriveSeed(seed, 3));
    agent.critics = fresh.critics;
    agent.q1_opt = fresh.q1_opt;
    agent.q2_opt = fresh.q2_opt;
  }
  PegTask task(cfg.TaskConfig(embodiment, /*eval=*/false));
  TrainOptions opt;
  opt.total_steps = steps;
  opt.seed = DeriveSeed(seed, 2);
  opt.curve_interval = cfg.curve_interval;
  opt.window_episodes = cfg.window_episodes;
  opt.success_threshold_percent = cfg.success_threshold_percent;
  TrainOutcome out;
  out.result = Train(task, agent, opt);
  out.checkpoint = MakeCheckpoint(agent, embodiment, ckpt.train_steps + steps, seed, true);
  return out;
}

std::string ScratchCheckpointPath(const std::string& out_root, const std::string& emb) {
  return (fs::path(out_root) / "checkpoints" / ("policy_" + emb + ".json")).string();
}

std::string FinetuneCheckpointPath(const std::string& out_root) {
  return (fs::path(out_root) / "checkpoints" / "policy_A_finetuned_B.json").string();
}

ScenarioResult RunScenario(const ScenarioSpec& spec, const ExperimentConfig& cfg,
                           std::uint64_t base_seed, const std::string& out_root) {
  ScenarioResult res;
  res.spec = spec;
  PolicyCheckpoint policy;

  auto load_source = [&]() {
    const std::string path = ScratchCheckpointPath(out_root, spec.train_embodiment);
    if (!fs::exists(path)) {
      throw DependencyError("scenario " + std::to_string(spec.id) +
                            " needs the embodiment " + spec.train_embodiment +
                            " checkpoint '" + path + "'; run scenario " +
                            (spec.train_embodiment == "A" ? "1" : "2") + " first");
    }
    return LoadCheckpoint(path);
  };

  switch (spec.mode) {
    case ScenarioMode::kScratch: {
      const std::uint64_t seed =
          DeriveSeed(base_seed, spec.train_embodiment == "A" ? kStreamTrainA : kStreamTrainB);
      TrainOutcome t = TrainScratch(cfg, spec.train_embodiment,
                                    BudgetFor(cfg, spec.train_embodiment), seed);
      policy = std::move(t.checkpoint);
      res.curve = std::move(t.result.curve);
      res.steps_to_threshold = t.result.steps_to_threshold;
      res.checkpoint_path = ScratchCheckpointPath(out_root, spec.train_embodiment);
      break;
    }
    case ScenarioMode::kZeroShot:
      policy = load_source();
      break;
    case ScenarioMode::kFinetune: {
      const PolicyCheckpoint source = load_source();
      TrainOutcome t = Finetune(source, cfg, spec.eval_embodiment, cfg.budget.finetune_steps,
                                DeriveSeed(base_seed, kStreamFinetune));
      policy = std::move(t.checkpoint);
      res.curve = std::move(t.result.curve);
      res.steps_to_threshold = t.result.steps_to_threshold;
      res.checkpoint_path = FinetuneCheckpointPath(out_root);
      break;
    }
  }

  const EvalGrid grid = MakeEvalGrid(cfg, cfg.Embodiment(spec.eval_embodiment),
                                     cfg.eval.episodes, DeriveSeed(base_seed, kStreamEvalGrid));
  res.records = Evaluate(policy, cfg, spec.eval_embodiment, grid, spec.id);
  res.summary = Summarize(spec.id, res.records);

  const fs::path dir = fs::path(out_root) / ("scenario_" + std::to_string(spec.id));
  fs::create_directories(dir);
  if (res.checkpoint_path) SaveCheckpoint(policy, *res.checkpoint_path);
  WriteTextFile((dir / "records.csv").string(), RecordsCsv(res.records));
  WriteTextFile((dir / "summary.csv").string(), SummaryCsv({res.summary}));
  if (spec.mode != ScenarioMode::kZeroShot) {
    WriteTextFile((dir / "curve.csv").string(), CurveCsv(res.curve));
  }
  return res;
}

std::string RecordsCsv(const std::vector<EpisodeRecord>& records) {
  std::string out = std::string(kRecordsHeader) + "\n";
  for (const auto& r : records) {
    out += std::to_string(r.episode_id) + "," + std::to_string(r.scenario_id) + "," +
           std::to_string(r.seed) + "," + (r.success ? "1" : "0") + "," +
           std::to_string(r.steps) + "," + ToString(r.terminal) + "," +
           FmtDouble(r.cumulative_reward) + "\n";
  }
  return out;
}

std::string CurveCsv(const std::vector<CurvePoint>& curve) {
  std::string out = std::string(kCurveHeader) + "\n";
  for (const auto& p : curve) {
    out += std::to_string(p.step) + "," + FmtDouble(p.mean_episode_reward) + "," +
           FmtDouble(p.success_rate_window) + "\n";
  }
  return out;
}

std::string SummaryCsv(const std::vector<SummaryStats>& rows) {
  std::string out = std::string(kSummaryHeader) + "\n";
  for (const auto& s : rows) {
    out += std::to_string(s.scenario_id) + "," + FmtDouble(s.success_rate_percent) + "," +
           FmtDouble(s.avg_steps) + "," + std::to_string(s.episodes) + "\n";
  }
  return out;
}

std::vector<EpisodeRecord> ParseRecordsCsv(const std::string& text,
                                           const std::string& source) {
  std::vector<EpisodeRecord> out;
  for (const auto& [n, line] : CsvRows(text, kRecordsHeader, source)) {
    const std::string where = source + ":" + std::to_string(n);
    const auto cells = SplitCsvLine(line);
    if (cells.size() != 7) {
      throw ValidationError(where + ": expected 7 fields, got " +
                            std::to_string(cells.size()));
    }
    EpisodeRecord r;
    r.episode_id = ParseNumber<int>(cells[0], where, "episode_id");
    r.scenario_id = ParseNumber<int>(cells[1], where, "scenario_id");
    r.seed = ParseNumber<std::uint64_t>(cells[2], where, "seed");
    if (cells[3] != "0" && cells[3] != "1") {
      throw ValidationError(where + ": success must be 0 or 1");
    }
    r.success = cells[3] == "1";
    r.steps = ParseNumber<int>(cells[4], where, "steps");
    if (cells[5] != "success" && cells[5] != "collision" && cells[5] != "timeout") {
      throw ValidationError(where + ": bad terminal '" + cells[5] + "'");
    }
    r.terminal = TerminalReasonFromString(cells[5]);
    r.cumulative_reward = ParseNumber<double>(cells[6], where, "cumulative_reward");
    if (r.success != (r.terminal == TerminalReason::kSuccess)) {
      throw ValidationError(where + ": success flag disagrees with terminal");
    }
    if (r.steps < 0) throw ValidationError(where + ": negative steps");
    out.push_back(r);
  }
  return out;
}

std::vector<CurvePoint> ParseCurveCsv(const std::string& text, const std::string& source) {
  std::vector<CurvePoint> out;
  for (const auto& [n, line] : CsvRows(text, kCurveHeader, source)) {
    const std::string where = source + ":" + std::to_string(n);
    const auto cells = SplitCsvLine(line);
    if (cells.size() != 3) {
      throw ValidationError(where + ": expected 3 fields, got " +
                            std::to_string(cells.size()));
    }
    CurvePoint p;
    p.step = ParseNumber<std::int64_t>(cells[0], where, "step");
    p.mean_episode_reward = ParseNumber<double>(cells[1], where, "mean_episode_reward");
    p.success_rate_window = ParseNumber<double>(cells[2], where, "success_rate_window");
    out.push_back(p);
  }
  return out;
}

void WriteTextFile(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace pegx
