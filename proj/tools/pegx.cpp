// pegx: train, evaluate, fine-tune and compare peg-in-hole policies.
//
// Exit codes: 0 success, 2 usage error, 1 runtime error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pegx/config.hpp"
#include "pegx/errors.hpp"
#include "pegx/harness.hpp"
#include "pegx/report.hpp"
#include "pegx/seeding.hpp"

namespace fs = std::filesystem;
using namespace pegx;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Leftover "--dotted.key value" / "--dotted.key=value" pairs become config
// overrides; anything else is a usage error.
std::vector<ConfigEntry> ParseOverrides(const std::vector<std::string>& extras) {
  std::vector<ConfigEntry> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0) throw UsageError("unexpected argument '" + arg + "'");
    std::string key = arg.substr(2);
    std::string value;
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw UsageError("flag '" + arg + "' needs a value");
      value = extras[++i];
    }
    if (!IsConfigKey(key)) throw UsageError("unknown flag '--" + key + "'");
    out.push_back({key, value, "command line", 0});
  }
  return out;
}

struct Common {
  std::optional<std::string> config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
};

void AddCommon(CLI::App* cmd, Common& c, bool with_config = true) {
  if (with_config) cmd->add_option("--config", c.config_path, "flat key = value config file");
  cmd->add_option("--out", c.out_dir, "output directory")->required();
  cmd->add_option("--seed", c.seed, "base seed")->default_val(0);
  cmd->allow_extras();
}

ExperimentConfig LoadConfig(const Common& c, CLI::App* cmd) {
  return ResolveConfig(c.config_path, ParseOverrides(cmd->remaining()),
                       std::getenv("PEGX_CONFIG"));
}

void WriteEffectiveConfig(const ExperimentConfig& cfg, const std::string& out_dir) {
  WriteTextFile((fs::path(out_dir) / "config.txt").string(), DumpConfig(cfg));
}

void CheckEmbodiment(const std::string& e) {
  if (e != "A" && e != "B") throw UsageError("--embodiment must be A or B");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-embodiment peg-in-hole transfer experiments with SAC and "
               "hybrid motion/force control"};
  app.require_subcommand(1);
  app.footer("Any config key can be overridden as --<key> <value>, e.g. "
             "--sac.batch_size 64.\nPEGX_CONFIG names a config file applied "
             "before --config.");

  Common train_c, eval_c, ft_c, sc_c;
  std::string train_emb, eval_emb, ft_emb, eval_ckpt, ft_ckpt;
  std::optional<std::int64_t> train_steps, ft_steps;
  std::optional<int> eval_episodes;
  int scenario_id = 0;
  std::vector<std::string> report_in;
  std::string report_out;

  auto* train = app.add_subcommand("train", "train a policy from scratch");
  train->add_option("--embodiment", train_emb, "A or B")->required();
  train->add_option("--steps", train_steps, "agent steps (default: config budget)");
  AddCommon(train, train_c);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the start grid");
  eval->add_option("--ckpt", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--embodiment", eval_emb, "A or B")->required();
  eval->add_option("--episodes", eval_episodes, "grid size (default: config)");
  AddCommon(eval, eval_c);

  auto* ft = app.add_subcommand("finetune", "fine-tune a checkpoint on an embodiment");
  ft->add_option("--ckpt", ft_ckpt, "checkpoint file")->required();
  ft->add_option("--embodiment", ft_emb, "A or B")->required();
  ft->add_option("--steps", ft_steps, "agent steps (default: config budget)");
  AddCommon(ft, ft_c);

  auto* sc = app.add_subcommand("scenario", "run one of the five transfer scenarios");
  sc->add_option("--id", scenario_id, "scenario 1..5")->required();
  AddCommon(sc, sc_c);

  auto* report = app.add_subcommand("report", "summarize records/curve CSVs into charts");
  report->add_option("--in", report_in, "input CSV files or glob patterns")->required();
  report->add_option("--out", report_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (*train) {
      CheckEmbodiment(train_emb);
      const ExperimentConfig cfg = LoadConfig(train_c, train);
      const std::int64_t steps =
          train_steps.value_or(train_emb == "A" ? cfg.budget.scratch_steps_a
                                                : cfg.budget.scratch_steps_b);
      if (steps <= 0) throw UsageError("--steps must be positive");
      const TrainOutcome t = TrainScratch(cfg, train_emb, steps, train_c.seed);
      const fs::path dir(train_c.out_dir);
      SaveCheckpoint(t.checkpoint, (dir / ("policy_" + train_emb + ".json")).string());
      WriteTextFile((dir / "curve.csv").string(), CurveCsv(t.result.curve));
      WriteEffectiveConfig(cfg, train_c.out_dir);
      std::cout << "trained " << steps << " steps on " << train_emb << ", "
                << t.result.episodes << " episodes";
      if (t.result.steps_to_threshold) {
        std::cout << ", threshold reached at step " << *t.result.steps_to_threshold;
      }
      std::cout << "\n";
    } else if (*eval) {
      CheckEmbodiment(eval_emb);
      const ExperimentConfig cfg = LoadConfig(eval_c, eval);
      const int episodes = eval_episodes.value_or(cfg.eval.episodes);
      if (episodes <= 0) throw UsageError("--episodes must be positive");
      const PolicyCheckpoint ckpt = LoadCheckpoint(eval_ckpt);
      const EvalGrid grid =
          MakeEvalGrid(cfg, cfg.Embodiment(eval_emb), episodes, eval_c.seed);
      const auto records = Evaluate(ckpt, cfg, eval_emb, grid);
      const SummaryStats s = Summarize(0, records);
      const fs::path dir(eval_c.out_dir);
      WriteTextFile((dir / "records.csv").string(), RecordsCsv(records));
      WriteTextFile((dir / "summary.csv").string(), SummaryCsv({s}));
      std::cout << "success_rate " << s.success_rate_percent << " avg_steps " << s.avg_steps
                << " episodes " << s.episodes << "\n";
    } else if (*ft) {
      CheckEmbodiment(ft_emb);
      const ExperimentConfig cfg = LoadConfig(ft_c, ft);
      const std::int64_t steps = ft_steps.value_or(cfg.budget.finetune_steps);
      if (steps <= 0) throw UsageError("--steps must be positive");
      const PolicyCheckpoint source = LoadCheckpoint(ft_ckpt);
      const TrainOutcome t = Finetune(source, cfg, ft_emb, steps, ft_c.seed);
      const fs::path dir(ft_c.out_dir);
      SaveCheckpoint(t.checkpoint,
                     (dir / ("policy_" + source.embodiment + "_finetuned_" + ft_emb + ".json"))
                         .string());
      WriteTextFile((dir / "curve.csv").string(), CurveCsv(t.result.curve));
      WriteEffectiveConfig(cfg, ft_c.out_dir);
      std::cout << "fine-tuned " << steps << " steps on " << ft_emb;
      if (t.result.steps_to_threshold) {
        std::cout << ", threshold reached at step " << *t.result.steps_to_threshold;
      }
      std::cout << "\n";
    } else if (*sc) {
      if (scenario_id < 1 || scenario_id > 5) throw UsageError("--id must be 1..5");
      const ExperimentConfig cfg = LoadConfig(sc_c, sc);
      const ScenarioResult r = RunScenario(GetScenario(scenario_id), cfg, sc_c.seed,
                                           sc_c.out_dir);
      WriteEffectiveConfig(
          cfg, (fs::path(sc_c.out_dir) / ("scenario_" + std::to_string(scenario_id))).string());
      std::cout << "scenario " << scenario_id << " (" << ToString(r.spec.mode)
                << ", eval on " << r.spec.eval_embodiment << "): success_rate "
                << r.summary.success_rate_percent << " avg_steps " << r.summary.avg_steps;
      if (r.spec.mode != ScenarioMode::kZeroShot) {
        std::cout << " threshold_step ";
        if (r.steps_to_threshold) {
          std::cout << *r.steps_to_threshold;
        } else {
          std::cout << "none";
        }
      }
      std::cout << "\n";
    } else if (*report) {
      const auto paths = ExpandGlobs(report_in);
      const ReportSummary s = WriteReport(paths, report_out);
      std::cout << s.table;
      for (const auto& line : s.orderings) std::cout << line << "\n";
    }
  } catch (const UsageError& e) {
    std::cerr << "pegx: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "pegx: error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
