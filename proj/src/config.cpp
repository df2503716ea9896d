#include "pegx/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "pegx/errors.hpp"

namespace pegx {
namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitComma(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(Trim(item));
  return out;
}

double ParseDouble(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("expected a number, got '" + s + "'");
  }
  return v;
}

std::int64_t ParseInt(const std::string& s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("expected an integer, got '" + s + "'");
  }
  return v;
}

bool ParseBool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("expected true/false, got '" + s + "'");
}

std::vector<double> ParseDoubles(const std::string& s, std::size_t n) {
  std::vector<double> out;
  for (const auto& part : SplitComma(s)) out.push_back(ParseDouble(part));
  if (n != 0 && out.size() != n) {
    throw ConfigError("expected " + std::to_string(n) +
                      " comma-separated numbers, got '" + s + "'");
  }
  return out;
}

Vec3 ParseVec3(const std::string& s) {
  const auto v = ParseDoubles(s, 3);
  return Vec3(v[0], v[1], v[2]);
}

std::vector<int> ParseInts(const std::string& s) {
  std::vector<int> out;
  for (const auto& part : SplitComma(s)) {
    out.push_back(static_cast<int>(ParseInt(part)));
  }
  return out;
}

std::string Fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string FmtList(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + Fmt(v[i]);
  return out;
}

std::string FmtVec3(const Vec3& v) { return FmtList({v.x(), v.y(), v.z()}); }

std::string FmtInts(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += (i ? "," : "") + std::to_string(v[i]);
  }
  return out;
}

struct Binding {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

using Registry = std::map<std::string, Binding>;

// Field accessors keep each registration a one-liner.
template <typename Get>
void Real(Registry& r, const std::string& key, Get field) {
  r[key] = {[field](ExperimentConfig& c, const std::string& s) {
              field(c) = ParseDouble(s);
            },
            [field](const ExperimentConfig& c) {
              return Fmt(field(const_cast<ExperimentConfig&>(c)));
            }};
}

template <typename Get>
void Int(Registry& r, const std::string& key, Get field) {
  r[key] = {[field](ExperimentConfig& c, const std::string& s) {
              using T = std::remove_reference_t<decltype(field(c))>;
              field(c) = static_cast<T>(ParseInt(s));
            },
            [field](const ExperimentConfig& c) {
              return std::to_string(field(const_cast<ExperimentConfig&>(c)));
            }};
}

template <typename Get>
void Bool(Registry& r, const std::string& key, Get field) {
  r[key] = {[field](ExperimentConfig& c, const std::string& s) {
              field(c) = ParseBool(s);
            },
            [field](const ExperimentConfig& c) {
              return std::string(field(const_cast<ExperimentConfig&>(c))
                                     ? "true"
                                     : "false");
            }};
}

template <typename Get>
void V3(Registry& r, const std::string& key, Get field) {
  r[key] = {[field](ExperimentConfig& c, const std::string& s) {
              field(c) = ParseVec3(s);
            },
            [field](const ExperimentConfig& c) {
              return FmtVec3(field(const_cast<ExperimentConfig&>(c)));
            }};
}

void RegisterEmbodiment(Registry& r, const std::string& id,
                        EmbodimentSpec ExperimentConfig::*member) {
  const std::string p = "embodiment." + id + ".";
  Real(r, p + "tau", [member](ExperimentConfig& c) -> double& { return (c.*member).tau; });
  Real(r, p + "zeta", [member](ExperimentConfig& c) -> double& { return (c.*member).zeta; });
  Real(r, p + "v_max", [member](ExperimentConfig& c) -> double& { return (c.*member).v_max; });
  Real(r, p + "force_noise_sigma",
       [member](ExperimentConfig& c) -> double& { return (c.*member).force_noise_sigma; });
  Real(r, p + "pos_noise_sigma",
       [member](ExperimentConfig& c) -> double& { return (c.*member).pos_noise_sigma; });
  V3(r, p + "workspace_lo",
     [member](ExperimentConfig& c) -> Vec3& { return (c.*member).workspace_lo; });
  V3(r, p + "workspace_hi",
     [member](ExperimentConfig& c) -> Vec3& { return (c.*member).workspace_hi; });
}

Registry BuildRegistry() {
  Registry r;
  using C = ExperimentConfig;
  V3(r, "geometry.hole_center", [](C& c) -> Vec3& { return c.geometry.hole_center; });
  Real(r, "geometry.hole_radius", [](C& c) -> double& { return c.geometry.hole_radius; });
  Real(r, "geometry.peg_radius", [](C& c) -> double& { return c.geometry.peg_radius; });
  Real(r, "geometry.surface_z", [](C& c) -> double& { return c.geometry.surface_z; });
  Real(r, "geometry.insert_depth", [](C& c) -> double& { return c.geometry.insert_depth; });
  Real(r, "geometry.contact_stiffness",
       [](C& c) -> double& { return c.geometry.contact_stiffness; });
  Real(r, "geometry.contact_damping",
       [](C& c) -> double& { return c.geometry.contact_damping; });
  Real(r, "geometry.collision_force_limit",
       [](C& c) -> double& { return c.geometry.collision_force_limit; });

  RegisterEmbodiment(r, "A", &C::embodiment_a);
  RegisterEmbodiment(r, "B", &C::embodiment_b);

  Real(r, "reward.alpha1", [](C& c) -> double& { return c.reward.alpha1; });
  Real(r, "reward.alpha2", [](C& c) -> double& { return c.reward.alpha2; });
  Real(r, "reward.r_success", [](C& c) -> double& { return c.reward.r_success; });
  Real(r, "reward.r_collision", [](C& c) -> double& { return c.reward.r_collision; });
  Real(r, "reward.r_timeout", [](C& c) -> double& { return c.reward.r_timeout; });

  Real(r, "env.effective_mass", [](C& c) -> double& { return c.effective_mass; });
  Int(r, "env.max_agent_steps", [](C& c) -> int& { return c.max_agent_steps; });
  Bool(r, "env.train_noise", [](C& c) -> bool& { return c.train_noise; });

  V3(r, "action.x_hat_half_range", [](C& c) -> Vec3& { return c.bounds.x_hat_half_range; });
  Real(r, "action.kp_x_lo", [](C& c) -> double& { return c.bounds.kp_x_lo; });
  Real(r, "action.kp_x_hi", [](C& c) -> double& { return c.bounds.kp_x_hi; });
  Real(r, "action.kp_f_lo", [](C& c) -> double& { return c.bounds.kp_f_lo; });
  Real(r, "action.kp_f_hi", [](C& c) -> double& { return c.bounds.kp_f_hi; });

  V3(r, "controller.selection", [](C& c) -> Vec3& { return c.selection.s; });
  Real(r, "controller.integral_limit", [](C& c) -> double& { return c.integral_limit; });

  Real(r, "task.start_height", [](C& c) -> double& { return c.start.height; });
  Real(r, "task.start_half_width", [](C& c) -> double& { return c.start.half_width; });
  Real(r, "task.hole_estimate_sigma", [](C& c) -> double& { return c.hole_estimate_sigma; });

  Real(r, "sac.gamma", [](C& c) -> double& { return c.sac.gamma; });
  Real(r, "sac.polyak_tau", [](C& c) -> double& { return c.sac.polyak_tau; });
  Real(r, "sac.lr_actor", [](C& c) -> double& { return c.sac.lr_actor; });
  Real(r, "sac.lr_critic", [](C& c) -> double& { return c.sac.lr_critic; });
  Real(r, "sac.lr_temp", [](C& c) -> double& { return c.sac.lr_temp; });
  Int(r, "sac.batch_size", [](C& c) -> int& { return c.sac.batch_size; });
  Int(r, "sac.buffer_capacity", [](C& c) -> int& { return c.sac.buffer_capacity; });
  Int(r, "sac.warmup_steps", [](C& c) -> int& { return c.sac.warmup_steps; });
  Int(r, "sac.updates_per_env_step", [](C& c) -> int& { return c.sac.updates_per_env_step; });
  Real(r, "sac.initial_temp", [](C& c) -> double& { return c.sac.initial_temp; });
  r["sac.entropy_target"] = {
      [](C& c, const std::string& s) {
        if (s == "auto") {
          c.sac.entropy_target.reset();
        } else {
          c.sac.entropy_target = ParseDouble(s);
        }
      },
      [](const C& c) {
        return c.sac.entropy_target ? Fmt(*c.sac.entropy_target) : std::string("auto");
      }};
  r["sac.actor_hidden"] = {
      [](C& c, const std::string& s) { c.sac.actor_hidden = ParseInts(s); },
      [](const C& c) { return FmtInts(c.sac.actor_hidden); }};
  r["sac.critic_hidden"] = {
      [](C& c, const std::string& s) { c.sac.critic_hidden = ParseInts(s); },
      [](const C& c) { return FmtInts(c.sac.critic_hidden); }};
  r["sac.obs_scale"] = {
      [](C& c, const std::string& s) { c.obs_scale = ParseDoubles(s, kObservationDim); },
      [](const C& c) { return FmtList(c.obs_scale); }};

  Int(r, "train.curve_interval", [](C& c) -> int& { return c.curve_interval; });
  Int(r, "train.window_episodes", [](C& c) -> int& { return c.window_episodes; });
  Real(r, "train.success_threshold_percent",
       [](C& c) -> double& { return c.success_threshold_percent; });

  Int(r, "budget.scratch_steps_a", [](C& c) -> std::int64_t& { return c.budget.scratch_steps_a; });
  Int(r, "budget.scratch_steps_b", [](C& c) -> std::int64_t& { return c.budget.scratch_steps_b; });
  Int(r, "budget.finetune_steps", [](C& c) -> std::int64_t& { return c.budget.finetune_steps; });

  Int(r, "finetune.warmup_steps", [](C& c) -> int& { return c.finetune.warmup_steps; });
  Bool(r, "finetune.reset_critics", [](C& c) -> bool& { return c.finetune.reset_critics; });

  Int(r, "eval.episodes", [](C& c) -> int& { return c.eval.episodes; });
  Real(r, "eval.patch_size", [](C& c) -> double& { return c.eval.patch_size; });
  Real(r, "eval.height", [](C& c) -> double& { return c.eval.height; });
  Bool(r, "eval.noise_enabled", [](C& c) -> bool& { return c.eval.noise_enabled; });
  return r;
}

const Registry& GetRegistry() {
  static const Registry registry = BuildRegistry();
  return registry;
}

std::string Where(const ConfigEntry& e) {
  return e.line > 0 ? e.source + ":" + std::to_string(e.line) : e.source;
}

}  // namespace

void ExperimentConfig::Validate() const {
  auto check = [](const char* group, const auto& fn) {
    try {
      fn();
    } catch (const std::runtime_error& e) {
      throw ConfigError(std::string("config ") + group + ": " + e.what());
    }
  };
  check("geometry", [&] { geometry.Validate(); });
  check("embodiment.A", [&] { embodiment_a.Validate(); });
  check("embodiment.B", [&] { embodiment_b.Validate(); });
  check("reward", [&] { reward.Validate(); });
  check("action", [&] { bounds.Validate(); });
  check("controller", [&] { selection.Validate(); });
  check("sac", [&] { sac.Validate(); });
  if (!(effective_mass > 0.0) || max_agent_steps <= 0) {
    throw ConfigError("config env: effective_mass and max_agent_steps must be > 0");
  }
  if (!(integral_limit >= 0.0)) {
    throw ConfigError("config controller: integral_limit must be >= 0");
  }
  if (!(start.height >= 0.0) || !(start.half_width >= 0.0) ||
      !(hole_estimate_sigma >= 0.0)) {
    throw ConfigError("config task: start region and hole_estimate_sigma must be >= 0");
  }
  if (obs_scale.size() != static_cast<std::size_t>(kObservationDim)) {
    throw ConfigError("config sac.obs_scale: need 9 entries");
  }
  if (curve_interval <= 0 || window_episodes <= 0 ||
      !(success_threshold_percent > 0.0 && success_threshold_percent <= 100.0)) {
    throw ConfigError(
        "config train: curve_interval and window_episodes must be > 0, "
        "threshold in (0, 100]");
  }
  if (budget.scratch_steps_a <= 0 || budget.scratch_steps_b <= 0 ||
      budget.finetune_steps <= 0) {
    throw ConfigError("config budget: step budgets must be > 0");
  }
  if (finetune.warmup_steps < 0) {
    throw ConfigError("config finetune: warmup_steps must be >= 0");
  }
  if (eval.episodes <= 0 || !(eval.patch_size >= 0.0) || !(eval.height >= 0.0)) {
    throw ConfigError("config eval: episodes > 0, patch_size and height >= 0");
  }
}

const EmbodimentSpec& ExperimentConfig::Embodiment(const std::string& id) const {
  if (id == "A") return embodiment_a;
  if (id == "B") return embodiment_b;
  throw ConfigError("unknown embodiment '" + id + "' (expected A or B)");
}

PegTaskConfig ExperimentConfig::TaskConfig(const std::string& embodiment_id,
                                           bool for_eval) const {
  PegTaskConfig t;
  t.env.geometry = geometry;
  t.env.embodiment = Embodiment(embodiment_id);
  t.env.reward = reward;
  t.env.effective_mass = effective_mass;
  t.env.max_agent_steps = max_agent_steps;
  t.env.noise_enabled = for_eval ? eval.noise_enabled : train_noise;
  t.bounds = bounds;
  t.selection = selection;
  t.integral_limit = integral_limit;
  t.start = start;
  t.hole_estimate_sigma = hole_estimate_sigma;
  return t;
}

nn::Vector ExperimentConfig::ObsScale() const {
  nn::Vector v(static_cast<int>(obs_scale.size()));
  for (std::size_t i = 0; i < obs_scale.size(); ++i) v[i] = obs_scale[i];
  return v;
}

std::vector<ConfigEntry> ParseConfigText(const std::string& text,
                                         const std::string& source) {
  std::vector<ConfigEntry> out;
  std::stringstream ss(text);
  std::string raw;
  int line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = Trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line) +
                        ": expected 'key = value'");
    }
    ConfigEntry e{Trim(body.substr(0, eq)), Trim(body.substr(eq + 1)), source, line};
    if (e.key.empty()) {
      throw ConfigError(source + ":" + std::to_string(line) + ": empty key");
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ConfigEntry> ReadConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfigText(ss.str(), path);
}

void ApplyConfig(ExperimentConfig& cfg, const std::vector<ConfigEntry>& entries) {
  const auto& reg = GetRegistry();
  for (const auto& e : entries) {
    const auto it = reg.find(e.key);
    if (it == reg.end()) {
      throw ConfigError(Where(e) + ": unknown config key '" + e.key + "'");
    }
    try {
      it->second.set(cfg, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(Where(e) + ": " + e.key + ": " + err.what());
    }
  }
}

bool IsConfigKey(const std::string& key) { return GetRegistry().count(key) > 0; }

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : GetRegistry()) keys.push_back(k);
  return keys;
}

std::string DumpConfig(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& [k, b] : GetRegistry()) out += k + " = " + b.get(cfg) + "\n";
  return out;
}

ExperimentConfig ResolveConfig(const std::optional<std::string>& config_path,
                               const std::vector<ConfigEntry>& overrides,
                               const char* env_config_path) {
  ExperimentConfig cfg;
  if (env_config_path != nullptr && *env_config_path != '\0') {
    ApplyConfig(cfg, ReadConfigFile(env_config_path));
  }
  if (config_path) ApplyConfig(cfg, ReadConfigFile(*config_path));
  ApplyConfig(cfg, overrides);
  cfg.Validate();
  return cfg;
}

}  // namespace pegx
