#pragma once

// Transfer experiments: the five train/evaluate scenarios, fixed-grid
// evaluation, success metrics, fine-tuning, and CSV/checkpoint outputs.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pegx/checkpoint.hpp"
#include "pegx/config.hpp"
#include "pegx/training.hpp"

namespace pegx {

enum class ScenarioMode { kScratch, kZeroShot, kFinetune };

const char* ToString(ScenarioMode mode);

struct ScenarioSpec {
  int id = 0;
  // Embodiment trained here, or whose checkpoint is loaded.
  std::string train_embodiment;
  bool pretrained = false;  // loads a checkpoint instead of training
  std::string eval_embodiment;
  ScenarioMode mode = ScenarioMode::kScratch;
};

// Ids 1..5; throws DomainError otherwise.
ScenarioSpec GetScenario(int id);
const std::vector<ScenarioSpec>& AllScenarios();

struct EvalGrid {
  std::vector<Vec3> starts;
  std::vector<std::uint64_t> seeds;
  int size() const { return static_cast<int>(starts.size()); }
};

// `episodes` starts on a near-square grid covering the configured patch
// above the hole; points that would sit over the hole mouth are pushed
// radially out to the mouth's rim. Throws BoundsError if a start leaves the
// workspace of `embodiment`.
EvalGrid MakeEvalGrid(const ExperimentConfig& cfg, const EmbodimentSpec& embodiment,
                      int episodes, std::uint64_t base_seed);

struct EpisodeRecord {
  int episode_id = 0;
  int scenario_id = 0;
  std::uint64_t seed = 0;
  bool success = false;
  int steps = 0;
  TerminalReason terminal = TerminalReason::kTimeout;
  double cumulative_reward = 0.0;
};

struct SummaryStats {
  int scenario_id = 0;
  double success_rate_percent = 0.0;
  double avg_steps = 0.0;
  int episodes = 0;
};

// Throw DomainError on an empty list.
double SuccessRate(const std::vector<EpisodeRecord>& records);
double AvgTimesteps(const std::vector<EpisodeRecord>& records);
SummaryStats Summarize(int scenario_id, const std::vector<EpisodeRecord>& records);

// One deterministic-policy episode per grid entry. Never updates weights.
// ValidationError when the checkpoint does not fit the configured
// architecture.
std::vector<EpisodeRecord> Evaluate(const PolicyCheckpoint& ckpt,
                                    const ExperimentConfig& cfg,
                                    const std::string& embodiment,
                                    const EvalGrid& grid, int scenario_id = 0);

struct TrainOutcome {
  PolicyCheckpoint checkpoint;
  TrainResult result;
};

TrainOutcome TrainScratch(const ExperimentConfig& cfg, const std::string& embodiment,
                          std::int64_t steps, std::uint64_t seed);

// Warm-starts every network from `ckpt` (critics re-initialized when
// cfg.finetune.reset_critics), fresh replay buffer, cfg.finetune.warmup_steps
// random steps, then SAC on the target embodiment.
TrainOutcome Finetune(const PolicyCheckpoint& ckpt, const ExperimentConfig& cfg,
                      const std::string& embodiment, std::int64_t steps,
                      std::uint64_t seed);

struct ScenarioResult {
  ScenarioSpec spec;
  SummaryStats summary;
  std::vector<EpisodeRecord> records;
  std::vector<CurvePoint> curve;  // empty for zero-shot
  std::optional<std::int64_t> steps_to_threshold;
  std::optional<std::string> checkpoint_path;  // written by training modes
};

// Checkpoint locations shared by the scenarios under `out_root`.
std::string ScratchCheckpointPath(const std::string& out_root, const std::string& emb);
std::string FinetuneCheckpointPath(const std::string& out_root);

// Runs one scenario and writes out_root/scenario_<id>/{records,summary,curve}.csv
// (curve only when training) and checkpoints under out_root/checkpoints/.
// Zero-shot and fine-tune scenarios need the scratch checkpoint of their
// source embodiment; DependencyError names the missing path.
ScenarioResult RunScenario(const ScenarioSpec& spec, const ExperimentConfig& cfg,
                           std::uint64_t base_seed, const std::string& out_root);

// CSV I/O. Readers throw ValidationError with the 1-based line number on a
// malformed row or header.
inline constexpr const char* kRecordsHeader =
    "episode_id,scenario_id,seed,success,steps,terminal,cumulative_reward";
inline constexpr const char* kCurveHeader = "step,mean_episode_reward,success_rate_window";
inline constexpr const char* kSummaryHeader =
    "scenario_id,success_rate_percent,avg_steps,episodes";

std::string RecordsCsv(const std::vector<EpisodeRecord>& records);
std::string CurveCsv(const std::vector<CurvePoint>& curve);
std::string SummaryCsv(const std::vector<SummaryStats>& rows);
std::vector<EpisodeRecord> ParseRecordsCsv(const std::string& text,
                                           const std::string& source);
std::vector<CurvePoint> ParseCurveCsv(const std::string& text, const std::string& source);

void WriteTextFile(const std::string& path, const std::string& text);
std::string ReadTextFile(const std::string& path);

}  // namespace pegx
