#include "pegx/sac.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pegx/errors.hpp"
#include "pegx/seeding.hpp"

namespace pegx::sac {
namespace {

Matrix StandardNormal(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = unit(rng);
  }
  return m;
}

Matrix Concat(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

void SacHyperparams::Validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("sac: gamma must be in (0,1)");
  if (!(polyak_tau > 0.0 && polyak_tau < 1.0)) {
    throw DomainError("sac: polyak_tau must be in (0,1)");
  }
  if (!(lr_actor > 0.0) || !(lr_critic > 0.0) || !(lr_temp > 0.0)) {
    throw DomainError("sac: learning rates must be positive");
  }
  if (batch_size <= 0 || buffer_capacity <= 0 || batch_size > buffer_capacity) {
    throw DomainError("sac: need 0 < batch_size <= buffer_capacity");
  }
  if (warmup_steps < 0 || updates_per_env_step <= 0) {
    throw DomainError("sac: warmup_steps >= 0 and updates_per_env_step > 0");
  }
  if (!(initial_temp > 0.0)) throw DomainError("sac: initial_temp must be > 0");
}

// ---------------------------------------------------------------------------
// Replay buffer

ReplayBuffer::ReplayBuffer(int capacity, int obs_dim, int action_dim)
    : capacity_(capacity),
      obs_dim_(obs_dim),
      action_dim_(action_dim),
      obs_(obs_dim, capacity),
      action_(action_dim, capacity),
      reward_(capacity),
      next_obs_(obs_dim, capacity),
      done_(capacity) {
  if (capacity <= 0 || obs_dim <= 0 || action_dim <= 0) {
    throw DomainError("replay buffer: capacity and dims must be positive");
  }
}

void ReplayBuffer::Push(const Transition& t) {
  if (t.obs.size() != obs_dim_ || t.next_obs.size() != obs_dim_ ||
      t.raw_action.size() != action_dim_) {
    throw ShapeError("replay buffer: transition dimension mismatch");
  }
  if ((t.raw_action.array().abs() > 1.0).any()) {
    throw RangeError("replay buffer: raw action outside [-1, 1]");
  }
  obs_.col(head_) = t.obs;
  action_.col(head_) = t.raw_action;
  reward_[head_] = t.reward;
  next_obs_.col(head_) = t.next_obs;
  done_[head_] = t.done_mask;
  head_ = (head_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
  ++insertions_;
}

int ReplayBuffer::Slot(int index) const {
  const int oldest = size_ < capacity_ ? 0 : head_;
  return (oldest + index) % capacity_;
}

Transition ReplayBuffer::At(int index) const {
  if (index < 0 || index >= size_) {
    throw RangeError("replay buffer: index " + std::to_string(index) +
                     " out of range");
  }
  const int s = Slot(index);
  return {obs_.col(s), action_.col(s), reward_[s], next_obs_.col(s), done_[s]};
}

Batch ReplayBuffer::Sample(int n, std::mt19937_64& rng) const {
  if (size_ == 0) throw DomainError("replay buffer: sample from empty buffer");
  std::uniform_int_distribution<int> pick(0, size_ - 1);
  Batch b{Matrix(obs_dim_, n), Matrix(action_dim_, n), Vector(n),
          Matrix(obs_dim_, n), Vector(n)};
  for (int j = 0; j < n; ++j) {
    const int s = Slot(pick(rng));
    b.obs.col(j) = obs_.col(s);
    b.action.col(j) = action_.col(s);
    b.reward[j] = reward_[s];
    b.next_obs.col(j) = next_obs_.col(s);
    b.done[j] = done_[s];
  }
  return b;
}

// ---------------------------------------------------------------------------
// Agent

SacAgent SacAgent::Create(int obs_dim, int action_dim, const Vector& obs_scale,
                          const SacHyperparams& hp, std::uint64_t seed) {
  hp.Validate();
  if (obs_scale.size() != obs_dim) {
    throw ShapeError("sac: obs_scale must have obs_dim entries");
  }
  SacAgent a;
  a.obs_dim = obs_dim;
  a.action_dim = action_dim;
  a.obs_scale = obs_scale;
  a.hp = hp;
  a.actor = nn::InitParams({obs_dim, 2 * action_dim, hp.actor_hidden},
                           DeriveSeed(seed, 1));
  const nn::MlpSpec critic_spec{obs_dim + action_dim, 1, hp.critic_hidden};
  a.critics.q1 = nn::InitParams(critic_spec, DeriveSeed(seed, 2));
  a.critics.q2 = nn::InitParams(critic_spec, DeriveSeed(seed, 3));
  a.critics.target1 = a.critics.q1;
  a.critics.target2 = a.critics.q2;
  a.log_temp = std::log(hp.initial_temp);
  a.ResetOptimizers();
  return a;
}

void SacAgent::ResetOptimizers() {
  actor_opt = nn::OptimizerState::For(actor, {.lr = hp.lr_actor});
  q1_opt = nn::OptimizerState::For(critics.q1, {.lr = hp.lr_critic});
  q2_opt = nn::OptimizerState::For(critics.q2, {.lr = hp.lr_critic});
  temp_opt = nn::ScalarAdam{};
  temp_opt.hp.lr = hp.lr_temp;
}

double SacAgent::temp() const { return std::exp(log_temp); }

Matrix SacAgent::ScaleObs(const Matrix& obs) const {
  if (obs.rows() != obs_dim) {
    throw ShapeError("sac: observation has " + std::to_string(obs.rows()) +
                     " rows, expected " + std::to_string(obs_dim));
  }
  return obs_scale.asDiagonal() * obs;
}

double LogOneMinusTanhSquared(double u) {
  const double a = std::abs(u);
  return 2.0 * (std::numbers::ln2 - a - std::log1p(std::exp(-2.0 * a)));
}

SquashedSample Squash(const Matrix& actor_out, const Matrix& noise) {
  const Eigen::Index d = actor_out.rows() / 2;
  if (actor_out.rows() != 2 * d || noise.rows() != d ||
      noise.cols() != actor_out.cols()) {
    throw ShapeError("squash: actor output / noise shape mismatch");
  }
  const Eigen::Index n = actor_out.cols();
  SquashedSample s;
  const Matrix raw_log_std = actor_out.bottomRows(d);
  const Matrix log_std = raw_log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  s.log_std_clamped_mask =
      (raw_log_std.array() != log_std.array()).cast<double>().matrix();
  s.std = log_std.array().exp().matrix();
  s.pre_tanh = actor_out.topRows(d) + s.std.cwiseProduct(noise);
  s.action = s.pre_tanh.array().tanh().matrix();
  s.log_prob.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double lp = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      lp += -0.5 * noise(i, j) * noise(i, j) - log_std(i, j) - kHalfLog2Pi -
            LogOneMinusTanhSquared(s.pre_tanh(i, j));
    }
    s.log_prob[j] = lp;
  }
  return s;
}

ActionSample SampleAction(const SacAgent& agent, const Vector& obs,
                          std::mt19937_64& rng) {
  const Matrix out = nn::Forward(agent.actor, agent.ScaleObs(obs));
  const Matrix noise = StandardNormal(agent.action_dim, 1, rng);
  const SquashedSample s = Squash(out, noise);
  return {s.action.col(0), s.log_prob[0]};
}

Vector DeterministicAction(const SacAgent& agent, const Vector& obs) {
  const Matrix out = nn::Forward(agent.actor, agent.ScaleObs(obs));
  return out.topRows(agent.action_dim).col(0).array().tanh().matrix();
}

Vector CriticTarget(const Batch& batch, const SacAgent& agent, double temp,
                    const Matrix& next_noise) {
  if (batch.size() == 0) throw DomainError("critic_target: empty batch");
  const Matrix next_scaled = agent.ScaleObs(batch.next_obs);
  const SquashedSample next =
      Squash(nn::Forward(agent.actor, next_scaled), next_noise);
  const Matrix x = Concat(next_scaled, next.action);
  const Matrix q1 = nn::Forward(agent.critics.target1, x);
  const Matrix q2 = nn::Forward(agent.critics.target2, x);
  Vector y(batch.size());
  for (int j = 0; j < batch.size(); ++j) {
    const double soft_q = std::min(q1(0, j), q2(0, j)) - temp * next.log_prob[j];
    y[j] = batch.reward[j] + agent.hp.gamma * (1.0 - batch.done[j]) * soft_q;
  }
  return y;
}

std::optional<Losses> UpdateStep(SacAgent& agent, const ReplayBuffer& buffer,
                                 std::mt19937_64& rng) {
  const int n = agent.hp.batch_size;
  if (buffer.size() < n) return std::nullopt;
  const Batch batch = buffer.Sample(n, rng);
  const double temp = agent.temp();
  Losses losses;

  // Critics.
  const Vector y =
      CriticTarget(batch, agent, temp, StandardNormal(agent.action_dim, n, rng));
  const Matrix scaled = agent.ScaleObs(batch.obs);
  const Matrix x = Concat(scaled, batch.action);
  auto fit_critic = [&](nn::MlpParams& q, nn::OptimizerState& opt) {
    nn::ForwardCache cache;
    const Matrix pred = nn::Forward(q, x, &cache);
    const Matrix diff = pred - y.transpose();
    const double loss = diff.squaredNorm() / n;
    const auto back = nn::Backward(q, cache, (2.0 / n) * diff);
    nn::OptimizerStep(q, back.grads, opt);
    return loss;
  };
  losses.critic = 0.5 * (fit_critic(agent.critics.q1, agent.q1_opt) +
                         fit_critic(agent.critics.q2, agent.q2_opt));

  // Actor, reparameterized through the freshly updated critics.
  nn::ForwardCache actor_cache;
  const Matrix actor_out = nn::Forward(agent.actor, scaled, &actor_cache);
  const Matrix noise = StandardNormal(agent.action_dim, n, rng);
  const SquashedSample s = Squash(actor_out, noise);
  const Matrix xa = Concat(scaled, s.action);
  nn::ForwardCache c1;
  nn::ForwardCache c2;
  const Matrix q1 = nn::Forward(agent.critics.q1, xa, &c1);
  const Matrix q2 = nn::Forward(agent.critics.q2, xa, &c2);
  Matrix d_q1 = Matrix::Zero(1, n);
  Matrix d_q2 = Matrix::Zero(1, n);
  double actor_loss = 0.0;
  for (int j = 0; j < n; ++j) {
    const bool first = q1(0, j) <= q2(0, j);
    const double q_min = first ? q1(0, j) : q2(0, j);
    (first ? d_q1 : d_q2)(0, j) = -1.0 / n;
    actor_loss += temp * s.log_prob[j] - q_min;
  }
  losses.actor = actor_loss / n;
  const Matrix d_action =
      (nn::BackwardInput(agent.critics.q1, c1, d_q1) +
       nn::BackwardInput(agent.critics.q2, c2, d_q2))
          .bottomRows(agent.action_dim);
  const Matrix one_minus_a2 = (1.0 - s.action.array().square()).matrix();
  const Matrix d_pre = (temp / n) * 2.0 * s.action +
                       d_action.cwiseProduct(one_minus_a2);
  Matrix d_out(2 * agent.action_dim, n);
  d_out.topRows(agent.action_dim) = d_pre;
  d_out.bottomRows(agent.action_dim) =
      ((d_pre.cwiseProduct(s.std).cwiseProduct(noise)).array() - temp / n)
          .matrix()
          .cwiseProduct((1.0 - s.log_std_clamped_mask.array()).matrix());
  const auto actor_back = nn::Backward(agent.actor, actor_cache, d_out);
  nn::OptimizerStep(agent.actor, actor_back.grads, agent.actor_opt);

  // Temperature: minimize -log_temp * (log_pi + target).
  const double target = agent.hp.EntropyTarget(agent.action_dim);
  const double mean_lp_plus_target = s.log_prob.mean() + target;
  losses.temp = -agent.log_temp * mean_lp_plus_target;
  agent.temp_opt.Step(agent.log_temp, -mean_lp_plus_target);

  nn::PolyakUpdate(agent.critics.target1, agent.critics.q1, agent.hp.polyak_tau);
  nn::PolyakUpdate(agent.critics.target2, agent.critics.q2, agent.hp.polyak_tau);
  return losses;
}

// ---------------------------------------------------------------------------
// Action mapping

void ActionBounds::Validate() const {
  if (!(x_hat_half_range.array() > 0.0).all() || !(kp_x_lo < kp_x_hi) || !(kp_f_lo < kp_f_hi)) {
    throw DomainError("action bounds: need lo < hi for every component");
  }
  if (kp_x_lo < 0.0 || kp_f_lo < 0.0) {
    throw DomainError("action bounds: gains must be non-negative");
  }
}

PhysicalAction MapAction(const Vector& raw, const ActionBounds& b,
                         const Vec3& hole_estimate) {
  if (raw.size() != kPhysicalActionDim) {
    throw ShapeError("map_action: expected 9 raw components");
  }
  if (!raw.allFinite() || (raw.array().abs() > 1.0).any()) {
    throw RangeError("map_action: raw action outside [-1, 1]");
  }
  auto affine = [](double r, double lo, double hi) {
    return lo + 0.5 * (r + 1.0) * (hi - lo);
  };
  PhysicalAction a;
  for (int i = 0; i < 3; ++i) {
    a.x_hat_a[i] = hole_estimate[i] + b.x_hat_half_range[i] * raw[i];
    a.kp_x[i] = affine(raw[3 + i], b.kp_x_lo, b.kp_x_hi);
    a.kp_f[i] = affine(raw[6 + i], b.kp_f_lo, b.kp_f_hi);
  }
  a.gains = DeriveGains(a.kp_x, a.kp_f);
  return a;
}

}  // namespace pegx::sac
