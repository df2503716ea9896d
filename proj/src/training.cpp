#include "pegx/training.hpp"

#include <algorithm>
#include <numeric>

#include "pegx/errors.hpp"
#include "pegx/seeding.hpp"

namespace pegx {

PegTask::PegTask(PegTaskConfig config)
    : config_(std::move(config)), env_(config_.env) {
  config_.bounds.Validate();
  config_.selection.Validate();
}

Vector PegTask::Reset(std::uint64_t seed) {
  std::mt19937_64 rng(DeriveSeed(seed, 0));
  std::uniform_real_distribution<double> lateral(-config_.start.half_width,
                                                 config_.start.half_width);
  const Vec3& hole = config_.env.geometry.hole_center;
  Vec3 start = hole;
  start.x() += lateral(rng);
  start.y() += lateral(rng);
  start.z() += config_.start.height;
  return ResetAt(start, seed);
}

Vector PegTask::ResetAt(const Vec3& start, std::uint64_t seed) {
  hole_estimate_ = config_.env.geometry.hole_center;
  if (config_.hole_estimate_sigma > 0.0) {
    std::mt19937_64 rng(DeriveSeed(seed, 2));
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 3; ++i) {
      hole_estimate_[i] += config_.hole_estimate_sigma * unit(rng);
    }
  }
  controller_ = ResetController();
  return env_.Reset(start, DeriveSeed(seed, 1)).AsVector();
}

EnvStep PegTask::Step(const Vector& raw_action) {
  const sac::PhysicalAction action =
      sac::MapAction(raw_action, config_.bounds, hole_estimate_);
  const Vec3& hole = config_.env.geometry.hole_center;
  auto provider = [&](const Observation& o) {
    ControlErrors errors;
    errors.x_e = action.x_hat_a - (o.pos_err + hole);
    errors.x_dot_e = -o.vel;
    errors.f_e = -o.force;
    const HybridOutput out =
        HybridCommand(errors, action.gains, config_.selection, controller_,
                      kControlDt, config_.integral_limit);
    controller_ = out.state;
    return ComposeCommand(action.x_hat_a, out.u);
  };
  const StepResult r = env_.Step(provider);
  EnvStep out;
  out.obs = r.obs.AsVector();
  out.reason = r.reason;
  out.reward = ComputeReward(r.obs, r.reason, config_.env.reward);
  return out;
}

TrainResult Train(Environment& env, sac::SacAgent& agent,
                  const TrainOptions& options) {
  if (options.total_steps <= 0) {
    throw DomainError("train: total_steps must be positive");
  }
  if (env.obs_dim() != agent.obs_dim || env.action_dim() != agent.action_dim) {
    throw ValidationError("train: agent and environment dimensions differ");
  }
  const auto& hp = agent.hp;
  sac::ReplayBuffer buffer(hp.buffer_capacity, agent.obs_dim, agent.action_dim);
  std::mt19937_64 action_rng(DeriveSeed(options.seed, 10));
  std::mt19937_64 update_rng(DeriveSeed(options.seed, 11));
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  TrainResult result;
  std::deque<std::pair<double, bool>> window;  // (episode reward, success)
  auto episode_seed = [&](std::int64_t e) {
    return DeriveSeed(options.seed, 1000 + static_cast<std::uint64_t>(e));
  };

  Vector obs = env.Reset(episode_seed(0));
  double episode_reward = 0.0;
  for (std::int64_t step = 1; step <= options.total_steps; ++step) {
    Vector raw(agent.action_dim);
    if (step <= hp.warmup_steps) {
      for (int i = 0; i < agent.action_dim; ++i) raw[i] = uniform(action_rng);
    } else {
      raw = sac::SampleAction(agent, obs, action_rng).raw;
    }
    const EnvStep r = env.Step(raw);
    const bool true_terminal = r.reason == TerminalReason::kSuccess ||
                               r.reason == TerminalReason::kCollision;
    buffer.Push({obs, raw, r.reward, r.obs, true_terminal ? 1.0 : 0.0});
    episode_reward += r.reward;

    if (IsTerminal(r.reason)) {
      window.emplace_back(episode_reward, r.reason == TerminalReason::kSuccess);
      if (static_cast<int>(window.size()) > options.window_episodes) {
        window.pop_front();
      }
      ++result.episodes;
      if (!result.steps_to_threshold &&
          static_cast<int>(window.size()) == options.window_episodes) {
        const auto wins = std::count_if(window.begin(), window.end(),
                                        [](const auto& w) { return w.second; });
        if (100.0 * wins / window.size() >= options.success_threshold_percent) {
          result.steps_to_threshold = step;
        }
      }
      episode_reward = 0.0;
      obs = env.Reset(episode_seed(result.episodes));
    } else {
      obs = r.obs;
    }

    if (step > hp.warmup_steps) {
      for (int k = 0; k < hp.updates_per_env_step; ++k) {
        if (sac::UpdateStep(agent, buffer, update_rng)) ++result.updates;
      }
    }

    if (options.curve_interval > 0 && step % options.curve_interval == 0) {
      CurvePoint p;
      p.step = step;
      if (!window.empty()) {
        double sum = 0.0;
        int wins = 0;
        for (const auto& [reward, success] : window) {
          sum += reward;
          wins += success ? 1 : 0;
        }
        p.mean_episode_reward = sum / window.size();
        p.success_rate_window = 100.0 * wins / window.size();
      }
      result.curve.push_back(p);
      if (options.on_curve_point) options.on_curve_point(p, agent);
    }
  }
  return result;
}

EpisodeOutcome RunEvalEpisode(PegTask& task, const sac::SacAgent& agent,
                              const Vec3& start, std::uint64_t seed) {
  EpisodeOutcome out;
  Vector obs = task.ResetAt(start, seed);
  while (true) {
    const EnvStep r = task.Step(sac::DeterministicAction(agent, obs));
    ++out.steps;
    out.cumulative_reward += r.reward;
    if (IsTerminal(r.reason)) {
      out.terminal = r.reason;
      return out;
    }
    obs = r.obs;
  }
}

}  // namespace pegx
