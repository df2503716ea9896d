#include "pegx/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "pegx/errors.hpp"

namespace pegx {
namespace {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Canonical emitter. nlohmann's object type is a std::map, so keys come out
// sorted; numbers are formatted here rather than by the library so floats
// always carry 17 significant digits.

void EmitDouble(std::string& out, double v) {
  if (!std::isfinite(v)) {
    throw ValidationError("checkpoint: cannot serialize a non-finite value");
  }
  if (v == 0.0 && std::signbit(v)) {
    out += "-0.0";  // "-0" would read back as the integer 0
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void Emit(std::string& out, const json& j) {
  switch (j.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out += ',';
        first = false;
        out += json(k).dump();
        out += ':';
        Emit(out, v);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        Emit(out, j[i]);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float:
      EmitDouble(out, j.get<double>());
      break;
    default:
      out += j.dump();
  }
}

// Doubles are stored as json floats even when integral so the emitter
// decides their text form.
json Floats(const Eigen::Ref<const nn::Vector>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(static_cast<double>(v[i]));
  return a;
}

json MatrixJson(const nn::Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(Floats(m.row(r).transpose()));
  return rows;
}

json LayersJson(const std::vector<nn::DenseLayer>& layers) {
  json a = json::array();
  for (const auto& l : layers) {
    a.push_back({{"bias", Floats(l.bias)}, {"weight", MatrixJson(l.weight)}});
  }
  return a;
}

json AdamHpJson(const nn::AdamHyperparams& hp) {
  return {{"beta1", hp.beta1}, {"beta2", hp.beta2}, {"eps", hp.eps}, {"lr", hp.lr}};
}

json OptimizerJson(const nn::OptimizerState& s) {
  return {{"hyperparams", AdamHpJson(s.hp)},
          {"step", s.step},
          {"first_moment", LayersJson(s.first_moment.layers)},
          {"second_moment", LayersJson(s.second_moment.layers)}};
}

// ---------------------------------------------------------------------------
// Reader. Any structural problem becomes CorruptFileError; shape checks
// against the declared architecture come afterwards.

const json& Field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw CorruptFileError(std::string("checkpoint: missing field '") + key + "'");
  }
  return j.at(key);
}

double ReadDouble(const json& j) {
  if (!j.is_number()) throw CorruptFileError("checkpoint: expected a number");
  return j.get<double>();
}

std::int64_t ReadInt(const json& j) {
  if (!j.is_number_integer()) throw CorruptFileError("checkpoint: expected an integer");
  return j.get<std::int64_t>();
}

std::vector<int> ReadInts(const json& j) {
  if (!j.is_array()) throw CorruptFileError("checkpoint: expected an integer array");
  std::vector<int> out;
  for (const auto& v : j) out.push_back(static_cast<int>(ReadInt(v)));
  return out;
}

nn::Vector ReadVector(const json& j) {
  if (!j.is_array()) throw CorruptFileError("checkpoint: expected an array");
  nn::Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = ReadDouble(j[i]);
  return v;
}

nn::Matrix ReadMatrix(const json& j) {
  if (!j.is_array()) throw CorruptFileError("checkpoint: expected a nested array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 && j[0].is_array() ? static_cast<Eigen::Index>(j[0].size()) : 0;
  nn::Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ShapeMismatchError("checkpoint: ragged weight matrix");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = ReadDouble(row[c]);
  }
  return m;
}

std::vector<nn::DenseLayer> ReadLayers(const json& j) {
  if (!j.is_array()) throw CorruptFileError("checkpoint: expected a layer array");
  std::vector<nn::DenseLayer> layers;
  for (const auto& l : j) {
    layers.push_back({ReadMatrix(Field(l, "weight")), ReadVector(Field(l, "bias"))});
  }
  return layers;
}

nn::AdamHyperparams ReadAdamHp(const json& j) {
  nn::AdamHyperparams hp;
  hp.beta1 = ReadDouble(Field(j, "beta1"));
  hp.beta2 = ReadDouble(Field(j, "beta2"));
  hp.eps = ReadDouble(Field(j, "eps"));
  hp.lr = ReadDouble(Field(j, "lr"));
  return hp;
}

void CheckLayers(const std::vector<nn::DenseLayer>& layers, const nn::MlpSpec& spec,
                 const std::string& what) {
  std::vector<int> dims{spec.input_dim};
  dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
  dims.push_back(spec.output_dim);
  bool ok = layers.size() + 1 == dims.size();
  for (std::size_t i = 0; ok && i < layers.size(); ++i) {
    ok = layers[i].weight.rows() == dims[i + 1] && layers[i].weight.cols() == dims[i] &&
         layers[i].bias.size() == dims[i + 1];
  }
  if (!ok) {
    throw ShapeMismatchError("checkpoint: " + what +
                             " weights do not match the declared architecture");
  }
}

nn::MlpParams ReadNetwork(const json& j, const nn::MlpSpec& spec, const std::string& what) {
  nn::MlpParams p;
  p.spec = spec;
  p.layers = ReadLayers(Field(j, "layers"));
  CheckLayers(p.layers, spec, what);
  return p;
}

nn::OptimizerState ReadOptimizer(const json& j, const nn::MlpParams& params,
                                 const std::string& what) {
  nn::OptimizerState s;
  s.hp = ReadAdamHp(Field(j, "hyperparams"));
  s.step = ReadInt(Field(j, "step"));
  s.first_moment.layers = ReadLayers(Field(j, "first_moment"));
  s.second_moment.layers = ReadLayers(Field(j, "second_moment"));
  CheckLayers(s.first_moment.layers, params.spec, what + " first moment");
  CheckLayers(s.second_moment.layers, params.spec, what + " second moment");
  return s;
}

std::string Join(const std::vector<int>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + "]";
}

void HashBytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;  // FNV-1a
  }
}

void HashNetwork(std::uint64_t& h, const nn::MlpParams& p) {
  for (const auto& l : p.layers) {
    HashBytes(h, l.weight.data(), sizeof(double) * l.weight.size());
    HashBytes(h, l.bias.data(), sizeof(double) * l.bias.size());
  }
}

}  // namespace

PolicyCheckpoint MakeCheckpoint(const sac::SacAgent& agent,
                                const std::string& embodiment,
                                std::int64_t train_steps, std::uint64_t seed,
                                bool include_optimizers) {
  PolicyCheckpoint c;
  c.obs_dim = agent.obs_dim;
  c.action_dim = agent.action_dim;
  c.actor_hidden = agent.actor.spec.hidden;
  c.critic_hidden = agent.critics.q1.spec.hidden;
  c.embodiment = embodiment;
  c.train_steps = train_steps;
  c.seed = seed;
  c.actor = agent.actor;
  c.critic1 = agent.critics.q1;
  c.critic2 = agent.critics.q2;
  c.target1 = agent.critics.target1;
  c.target2 = agent.critics.target2;
  c.log_entropy_temp = agent.log_temp;
  if (include_optimizers) {
    c.optimizers = CheckpointOptimizers{agent.actor_opt, agent.q1_opt, agent.q2_opt,
                                        agent.temp_opt};
  }
  return c;
}

void CheckArchitecture(const PolicyCheckpoint& ckpt, int obs_dim, int action_dim,
                       const std::vector<int>& actor_hidden,
                       const std::vector<int>& critic_hidden) {
  if (ckpt.obs_dim != obs_dim || ckpt.action_dim != action_dim ||
      ckpt.actor_hidden != actor_hidden || ckpt.critic_hidden != critic_hidden) {
    throw ShapeMismatchError(
        "checkpoint architecture (obs " + std::to_string(ckpt.obs_dim) + ", action " +
        std::to_string(ckpt.action_dim) + ", actor " + Join(ckpt.actor_hidden) +
        ", critic " + Join(ckpt.critic_hidden) + ") does not match the configured (obs " +
        std::to_string(obs_dim) + ", action " + std::to_string(action_dim) + ", actor " +
        Join(actor_hidden) + ", critic " + Join(critic_hidden) + ")");
  }
}

sac::SacAgent AgentFromCheckpoint(const PolicyCheckpoint& ckpt,
                                  const sac::SacHyperparams& hp,
                                  const nn::Vector& obs_scale) {
  CheckArchitecture(ckpt, ckpt.obs_dim, ckpt.action_dim, hp.actor_hidden,
                    hp.critic_hidden);
  sac::SacAgent a = sac::SacAgent::Create(ckpt.obs_dim, ckpt.action_dim, obs_scale, hp, 0);
  a.actor = ckpt.actor;
  a.critics.q1 = ckpt.critic1;
  a.critics.q2 = ckpt.critic2;
  a.critics.target1 = ckpt.target1;
  a.critics.target2 = ckpt.target2;
  a.log_temp = ckpt.log_entropy_temp;
  if (ckpt.optimizers) {
    a.actor_opt = ckpt.optimizers->actor;
    a.q1_opt = ckpt.optimizers->critic1;
    a.q2_opt = ckpt.optimizers->critic2;
    a.temp_opt = ckpt.optimizers->temperature;
  } else {
    a.ResetOptimizers();
  }
  return a;
}

std::string SerializeCheckpoint(const PolicyCheckpoint& c) {
  json j;
  j["format_version"] = c.format_version;
  j["architecture"] = {{"action_dim", c.action_dim},
                       {"actor_hidden", c.actor_hidden},
                       {"critic_hidden", c.critic_hidden},
                       {"obs_dim", c.obs_dim}};
  j["embodiment"] = c.embodiment;
  j["train_steps"] = c.train_steps;
  j["seed"] = c.seed;
  j["actor"] = {{"layers", LayersJson(c.actor.layers)}};
  j["critic1"] = {{"layers", LayersJson(c.critic1.layers)}};
  j["critic2"] = {{"layers", LayersJson(c.critic2.layers)}};
  j["target1"] = {{"layers", LayersJson(c.target1.layers)}};
  j["target2"] = {{"layers", LayersJson(c.target2.layers)}};
  j["log_entropy_temp"] = c.log_entropy_temp;
  if (c.optimizers) {
    const auto& o = *c.optimizers;
    j["optimizers"] = {{"actor", OptimizerJson(o.actor)},
                       {"critic1", OptimizerJson(o.critic1)},
                       {"critic2", OptimizerJson(o.critic2)},
                       {"temperature",
                        {{"hyperparams", AdamHpJson(o.temperature.hp)},
                         {"m", o.temperature.m},
                         {"step", o.temperature.step},
                         {"v", o.temperature.v}}}};
  }
  std::string out;
  Emit(out, j);
  out += '\n';
  return out;
}

PolicyCheckpoint ParseCheckpoint(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CorruptFileError(std::string("checkpoint: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw CorruptFileError("checkpoint: top level is not an object");

  PolicyCheckpoint c;
  c.format_version = static_cast<int>(ReadInt(Field(j, "format_version")));
  if (c.format_version != kCheckpointFormatVersion) {
    throw VersionMismatchError("checkpoint: format_version " +
                               std::to_string(c.format_version) + ", expected " +
                               std::to_string(kCheckpointFormatVersion));
  }
  try {
    const json& arch = Field(j, "architecture");
    c.obs_dim = static_cast<int>(ReadInt(Field(arch, "obs_dim")));
    c.action_dim = static_cast<int>(ReadInt(Field(arch, "action_dim")));
    c.actor_hidden = ReadInts(Field(arch, "actor_hidden"));
    c.critic_hidden = ReadInts(Field(arch, "critic_hidden"));
    const json& emb = Field(j, "embodiment");
    if (!emb.is_string()) throw CorruptFileError("checkpoint: embodiment must be a string");
    c.embodiment = emb.get<std::string>();
    c.train_steps = ReadInt(Field(j, "train_steps"));
    const json& seed = Field(j, "seed");
    if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
      throw CorruptFileError("checkpoint: seed must be an integer");
    }
    c.seed = seed.get<std::uint64_t>();
    c.log_entropy_temp = ReadDouble(Field(j, "log_entropy_temp"));

    const nn::MlpSpec actor_spec{c.obs_dim, 2 * c.action_dim, c.actor_hidden};
    const nn::MlpSpec critic_spec{c.obs_dim + c.action_dim, 1, c.critic_hidden};
    c.actor = ReadNetwork(Field(j, "actor"), actor_spec, "actor");
    c.critic1 = ReadNetwork(Field(j, "critic1"), critic_spec, "critic1");
    c.critic2 = ReadNetwork(Field(j, "critic2"), critic_spec, "critic2");
    c.target1 = ReadNetwork(Field(j, "target1"), critic_spec, "target1");
    c.target2 = ReadNetwork(Field(j, "target2"), critic_spec, "target2");

    if (j.contains("optimizers")) {
      const json& o = j.at("optimizers");
      CheckpointOptimizers opt;
      opt.actor = ReadOptimizer(Field(o, "actor"), c.actor, "actor optimizer");
      opt.critic1 = ReadOptimizer(Field(o, "critic1"), c.critic1, "critic1 optimizer");
      opt.critic2 = ReadOptimizer(Field(o, "critic2"), c.critic2, "critic2 optimizer");
      const json& t = Field(o, "temperature");
      opt.temperature.hp = ReadAdamHp(Field(t, "hyperparams"));
      opt.temperature.m = ReadDouble(Field(t, "m"));
      opt.temperature.step = ReadInt(Field(t, "step"));
      opt.temperature.v = ReadDouble(Field(t, "v"));
      c.optimizers = std::move(opt);
    }
  } catch (const json::exception& e) {
    throw CorruptFileError(std::string("checkpoint: ") + e.what());
  }
  return c;
}

void SaveCheckpoint(const PolicyCheckpoint& ckpt, const std::string& path) {
  const std::string text = SerializeCheckpoint(ckpt);
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + tmp + "'");
    out << text;
    if (!out) throw std::runtime_error("failed writing checkpoint '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

PolicyCheckpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptFileError("cannot read checkpoint '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return ParseCheckpoint(ss.str());
  } catch (const CorruptFileError& e) {
    throw CorruptFileError(path + ": " + e.what());
  }
}

std::uint64_t WeightsChecksum(const PolicyCheckpoint& c) {
  std::uint64_t h = 1469598103934665603ULL;
  HashNetwork(h, c.actor);
  HashNetwork(h, c.critic1);
  HashNetwork(h, c.critic2);
  HashNetwork(h, c.target1);
  HashNetwork(h, c.target2);
  HashBytes(h, &c.log_entropy_temp, sizeof(double));
  return h;
}

}  // namespace pegx
