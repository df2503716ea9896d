#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "pegx/checkpoint.hpp"
#include "pegx/harness.hpp"

using namespace pegx;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "pegx_cli";

// Small networks and budgets so a full train/eval cycle takes seconds.
constexpr const char* kSmall =
    " --sac.actor_hidden 16,16 --sac.critic_hidden 32,32 --sac.batch_size 16"
    " --sac.warmup_steps 100 --finetune.warmup_steps 50 --budget.scratch_steps_a 300"
    " --budget.scratch_steps_b 300 --budget.finetune_steps 200";

struct CliRun {
  int code = -1;
  std::string output;  // stdout and stderr
};

CliRun Pegx(const std::string& args) {
  fs::create_directories(kRoot);
  const fs::path log = kRoot / "last.log";
  const std::string cmd = std::string(PEGX_BINARY) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ReadTextFile(log.string())};
}

fs::path Fresh(const std::string& name) {
  const fs::path d = kRoot / name;
  fs::remove_all(d);
  return d;
}

int DataRows(const fs::path& csv) {
  std::istringstream in(ReadTextFile(csv.string()));
  int n = -1;  // header
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

}  // namespace

TEST(Cli, HelpExitsZero) {
  const CliRun r = Pegx("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("scenario"), std::string::npos);
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  const CliRun r = Pegx("frobnicate");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("Usage"), std::string::npos) << r.output;
}

TEST(Cli, BadScenarioIdIsUsageErrorWithoutSideEffects) {
  const fs::path out = Fresh("bad_id");
  EXPECT_EQ(Pegx("scenario --id 6 --out " + out.string()).code, 2);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, UnknownFlagRejectedBeforeSideEffects) {
  const fs::path out = Fresh("bad_flag");
  const CliRun r = Pegx("train --embodiment A --out " + out.string() + " --sac.gama 0.9");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("sac.gama"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(out));
  EXPECT_EQ(Pegx("train --embodiment C --out " + out.string()).code, 2);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, MissingCheckpointIsRuntimeError) {
  const fs::path out = Fresh("missing");
  const CliRun r = Pegx("scenario --id 3 --out " + out.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find(ScratchCheckpointPath(out.string(), "A")), std::string::npos)
      << r.output;
  EXPECT_EQ(Pegx("eval --ckpt " + (out / "nope.json").string() + " --embodiment A --out " +
                 out.string())
                .code,
            1);
}

TEST(Cli, EmptyReportInputIsUsageError) {
  const fs::path out = Fresh("report_empty");
  EXPECT_EQ(Pegx("report --in '" + (kRoot / "nothing_*.csv").string() + "' --out " +
                 out.string())
                .code,
            2);
}

TEST(Cli, TrainThenEvalWritesHundredRows) {
  const fs::path out = Fresh("train_eval");
  ASSERT_EQ(Pegx("train --embodiment A --steps 200 --out " + out.string() + kSmall).code, 0);
  const fs::path ckpt = out / "policy_A.json";
  ASSERT_TRUE(fs::exists(ckpt));
  EXPECT_EQ(LoadCheckpoint(ckpt.string()).embodiment, "A");
  EXPECT_TRUE(fs::exists(out / "curve.csv"));
  EXPECT_TRUE(fs::exists(out / "config.txt"));

  const fs::path ev = out / "eval";
  const CliRun r = Pegx("eval --ckpt " + ckpt.string() + " --embodiment A --out " + ev.string() +
                     kSmall);
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(DataRows(ev / "records.csv"), 100);
  EXPECT_EQ(DataRows(ev / "summary.csv"), 1);
}

TEST(Cli, ScenarioChainAndReport) {
  const fs::path out = Fresh("chain");
  ASSERT_EQ(Pegx("scenario --id 1 --out " + out.string() + kSmall).code, 0);
  EXPECT_EQ(LoadCheckpoint(ScratchCheckpointPath(out.string(), "A")).embodiment, "A");
  ASSERT_EQ(Pegx("scenario --id 3 --out " + out.string() + kSmall).code, 0);
  EXPECT_EQ(DataRows(out / "scenario_3" / "summary.csv"), 1);
  EXPECT_FALSE(fs::exists(out / "scenario_3" / "curve.csv"));

  const fs::path rep = out / "report";
  const CliRun r = Pegx("report --in '" + (out / "scenario_*" / "records.csv").string() +
                     "' --out " + rep.string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(rep / "results.svg"));
  EXPECT_EQ(DataRows(rep / "summary.csv"), 2);
}

TEST(Cli, ConfigFileAndEnvironmentLayering) {
  const fs::path out = Fresh("layers");
  fs::create_directories(kRoot);
  const fs::path env_cfg = kRoot / "env.cfg";
  WriteTextFile(env_cfg.string(), "eval.episodes = 9\n");
  const CliRun r = Pegx("train --embodiment B --steps 150 --out " + out.string() + kSmall);
  ASSERT_EQ(r.code, 0) << r.output;
  const CliRun e = Pegx("eval --ckpt " + (out / "policy_B.json").string() +
                     " --embodiment B --out " + (out / "ev").string() + kSmall);
  ASSERT_EQ(e.code, 0);
  EXPECT_EQ(DataRows(out / "ev" / "records.csv"), 100);
  const std::string with_env = "PEGX_CONFIG=" + env_cfg.string() + " ";
  fs::create_directories(kRoot);
  const std::string cmd = with_env + PEGX_BINARY + " eval --ckpt " +
                          (out / "policy_B.json").string() + " --embodiment B --out " +
                          (out / "ev9").string() + kSmall + " > /dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(DataRows(out / "ev9" / "records.csv"), 9);
}
