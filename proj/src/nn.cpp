#include "pegx/nn.hpp"

#include <cmath>
#include <random>
#include <string>

#include "pegx/errors.hpp"

namespace pegx::nn {
namespace {

std::string Dims(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

void CheckSameShape(const MlpParams& params,
                    const std::vector<DenseLayer>& other, const char* what) {
  if (other.size() != params.layers.size()) {
    throw ShapeError(std::string(what) + ": layer count " +
                     std::to_string(other.size()) + " != " +
                     std::to_string(params.layers.size()));
  }
  for (std::size_t i = 0; i < other.size(); ++i) {
    const auto& p = params.layers[i];
    const auto& o = other[i];
    if (p.weight.rows() != o.weight.rows() ||
        p.weight.cols() != o.weight.cols() || p.bias.size() != o.bias.size()) {
      throw ShapeError(std::string(what) + ": layer " + std::to_string(i) +
                       " is " + Dims(o.weight.rows(), o.weight.cols()) +
                       ", expected " +
                       Dims(p.weight.rows(), p.weight.cols()));
    }
  }
}

void CheckCache(const MlpParams& params, const ForwardCache& cache,
                const Matrix& dLdy) {
  if (cache.owner != &params ||
      cache.inputs.size() != params.layers.size() ||
      cache.preactivations.size() != params.layers.size()) {
    throw ShapeError("backward: cache does not belong to these params");
  }
  const Matrix& out = cache.preactivations.back();
  if (dLdy.rows() != out.rows() || dLdy.cols() != out.cols()) {
    throw ShapeError("backward: dLdy is " + Dims(dLdy.rows(), dLdy.cols()) +
                     ", output is " + Dims(out.rows(), out.cols()));
  }
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    if (cache.inputs[i].rows() != params.layers[i].weight.cols()) {
      throw ShapeError("backward: stale cache at layer " + std::to_string(i));
    }
  }
}

// Propagate through the ReLU of the layer below `layer`.
void ReluBackwardInPlace(Matrix& grad, const Matrix& preactivation) {
  grad = (preactivation.array() > 0.0).select(grad, 0.0);
}

}  // namespace

void MlpSpec::Validate() const {
  if (input_dim <= 0 || output_dim <= 0) {
    throw ShapeError("mlp spec: input and output dims must be positive");
  }
  if (hidden.empty()) {
    throw ShapeError("mlp spec: at least one hidden layer is required");
  }
  for (int h : hidden) {
    if (h <= 0) throw ShapeError("mlp spec: hidden sizes must be positive");
  }
}

std::int64_t MlpParams::size() const {
  std::int64_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

bool MlpParams::AllFinite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

GradientBuffer GradientBuffer::ZerosLike(const MlpParams& params) {
  GradientBuffer g;
  g.layers.reserve(params.layers.size());
  for (const auto& l : params.layers) {
    g.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()),
                        Vector::Zero(l.bias.size())});
  }
  return g;
}

void GradientBuffer::SetZero() {
  for (auto& l : layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

MlpParams InitParams(const MlpSpec& spec, std::uint64_t seed) {
  spec.Validate();
  MlpParams params;
  params.spec = spec;
  std::mt19937_64 rng(seed);
  std::vector<int> dims;
  dims.push_back(spec.input_dim);
  dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
  dims.push_back(spec.output_dim);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const int fan_in = dims[i];
    const int fan_out = dims[i + 1];
    const double bound = std::sqrt(1.0 / fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Matrix(fan_out, fan_in), Vector::Zero(fan_out)};
    // Row-major draw order so the sequence matches the serialized layout.
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) layer.weight(r, c) = dist(rng);
    }
    params.layers.push_back(std::move(layer));
  }
  return params;
}

Matrix Forward(const MlpParams& params, const Matrix& x, ForwardCache* cache) {
  if (x.rows() != params.input_dim()) {
    throw ShapeError("forward: input has " + std::to_string(x.rows()) +
                     " rows, network expects " +
                     std::to_string(params.input_dim()));
  }
  if (cache != nullptr) {
    cache->owner = &params;
    cache->inputs.resize(params.layers.size());
    cache->preactivations.resize(params.layers.size());
  }
  Matrix h = x;
  const std::size_t n = params.layers.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& layer = params.layers[i];
    Matrix z = layer.weight * h;
    z.colwise() += layer.bias;
    if (cache != nullptr) {
      cache->inputs[i] = std::move(h);
      cache->preactivations[i] = z;
    }
    if (i + 1 < n) {
      h = z.cwiseMax(0.0);
    } else {
      h = std::move(z);
    }
  }
  return h;
}

Vector Forward(const MlpParams& params, const Vector& x) {
  return Forward(params, Matrix(x), nullptr).col(0);
}

BackwardResult Backward(const MlpParams& params, const ForwardCache& cache,
                        const Matrix& dLdy) {
  CheckCache(params, cache, dLdy);
  BackwardResult result;
  result.grads.layers.resize(params.layers.size());
  Matrix grad = dLdy;  // gradient w.r.t. the current layer's preactivation
  for (std::size_t i = params.layers.size(); i-- > 0;) {
    const auto& layer = params.layers[i];
    auto& g = result.grads.layers[i];
    g.weight.noalias() = grad * cache.inputs[i].transpose();
    g.bias = grad.rowwise().sum();
    Matrix below = layer.weight.transpose() * grad;
    if (i > 0) ReluBackwardInPlace(below, cache.preactivations[i - 1]);
    grad = std::move(below);
  }
  result.input_grad = std::move(grad);
  return result;
}

Matrix BackwardInput(const MlpParams& params, const ForwardCache& cache,
                     const Matrix& dLdy) {
  CheckCache(params, cache, dLdy);
  Matrix grad = dLdy;
  for (std::size_t i = params.layers.size(); i-- > 0;) {
    Matrix below = params.layers[i].weight.transpose() * grad;
    if (i > 0) ReluBackwardInPlace(below, cache.preactivations[i - 1]);
    grad = std::move(below);
  }
  return grad;
}

OptimizerState OptimizerState::For(const MlpParams& params,
                                   const AdamHyperparams& hp) {
  OptimizerState s;
  s.hp = hp;
  s.first_moment = GradientBuffer::ZerosLike(params);
  s.second_moment = GradientBuffer::ZerosLike(params);
  return s;
}

void OptimizerStep(MlpParams& params, const GradientBuffer& grads,
                   OptimizerState& opt) {
  CheckSameShape(params, grads.layers, "optimizer grads");
  CheckSameShape(params, opt.first_moment.layers, "optimizer first moment");
  CheckSameShape(params, opt.second_moment.layers, "optimizer second moment");
  ++opt.step;
  const auto& hp = opt.hp;
  const double t = static_cast<double>(opt.step);
  const double c1 = 1.0 - std::pow(hp.beta1, t);
  const double c2 = 1.0 - std::pow(hp.beta2, t);
  auto update = [&](auto& theta, const auto& g, auto& m, auto& v) {
    m = hp.beta1 * m + (1.0 - hp.beta1) * g;
    v = hp.beta2 * v + (1.0 - hp.beta2) * g.cwiseProduct(g);
    theta.array() -=
        hp.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + hp.eps);
  };
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    update(params.layers[i].weight, grads.layers[i].weight,
           opt.first_moment.layers[i].weight,
           opt.second_moment.layers[i].weight);
    update(params.layers[i].bias, grads.layers[i].bias,
           opt.first_moment.layers[i].bias, opt.second_moment.layers[i].bias);
  }
}

void PolyakUpdate(MlpParams& target, const MlpParams& online, double tau) {
  CheckSameShape(online, target.layers, "polyak target");
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    target.layers[i].weight =
        (1.0 - tau) * target.layers[i].weight + tau * online.layers[i].weight;
    target.layers[i].bias =
        (1.0 - tau) * target.layers[i].bias + tau * online.layers[i].bias;
  }
}

void ScalarAdam::Step(double& value, double grad) {
  ++step;
  const double t = static_cast<double>(step);
  m = hp.beta1 * m + (1.0 - hp.beta1) * grad;
  v = hp.beta2 * v + (1.0 - hp.beta2) * grad * grad;
  const double m_hat = m / (1.0 - std::pow(hp.beta1, t));
  const double v_hat = v / (1.0 - std::pow(hp.beta2, t));
  value -= hp.lr * m_hat / (std::sqrt(v_hat) + hp.eps);
}

}  // namespace pegx::nn
