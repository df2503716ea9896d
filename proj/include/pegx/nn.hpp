#pragma once

// Dense multilayer perceptron with ReLU hidden layers and a linear output,
// reverse-mode gradients, and an Adam optimizer.
//
// Batched throughout: inputs, activations and output gradients are
// matrices with one sample per column.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace pegx::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct MlpSpec {
  int input_dim = 0;
  int output_dim = 0;
  std::vector<int> hidden;

  void Validate() const;
  bool operator==(const MlpSpec&) const = default;
};

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

struct MlpParams {
  MlpSpec spec;
  std::vector<DenseLayer> layers;

  int input_dim() const { return spec.input_dim; }
  int output_dim() const { return spec.output_dim; }
  // Number of scalar parameters.
  std::int64_t size() const;
  bool AllFinite() const;
};

// Same layout as MlpParams; holds dL/dtheta.
struct GradientBuffer {
  std::vector<DenseLayer> layers;

  static GradientBuffer ZerosLike(const MlpParams& params);
  void SetZero();
};

// Activations retained by Forward for the matching Backward call.
struct ForwardCache {
  std::vector<Matrix> inputs;       // input to each layer
  std::vector<Matrix> preactivations;  // W x + b of each layer
  const MlpParams* owner = nullptr;
};

// Weights uniform in +-sqrt(1/fan_in), biases zero. Deterministic per seed.
MlpParams InitParams(const MlpSpec& spec, std::uint64_t seed);

// Forward pass for a batch (input_dim x batch). Throws ShapeError on a
// dimension mismatch. `cache` may be null when no backward pass follows.
Matrix Forward(const MlpParams& params, const Matrix& x,
               ForwardCache* cache = nullptr);

// Single-sample convenience overload.
Vector Forward(const MlpParams& params, const Vector& x);

struct BackwardResult {
  GradientBuffer grads;
  Matrix input_grad;  // dL/dx, input_dim x batch
};

// Reverse-mode gradients of sum over the batch of <dLdy, y>. The cache
// must come from a Forward call on the same params object.
BackwardResult Backward(const MlpParams& params, const ForwardCache& cache,
                        const Matrix& dLdy);

// Only dL/dx; skips the weight-gradient products.
Matrix BackwardInput(const MlpParams& params, const ForwardCache& cache,
                     const Matrix& dLdy);

struct AdamHyperparams {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  AdamHyperparams hp;
  std::int64_t step = 0;
  GradientBuffer first_moment;
  GradientBuffer second_moment;

  static OptimizerState For(const MlpParams& params,
                            const AdamHyperparams& hp = {});
};

// One bias-corrected Adam update, in place. Throws ShapeError when grads or
// moments do not match params.
void OptimizerStep(MlpParams& params, const GradientBuffer& grads,
                   OptimizerState& opt);

// theta_target <- (1 - tau) theta_target + tau theta_online.
void PolyakUpdate(MlpParams& target, const MlpParams& online, double tau);

// Scalar Adam used for the entropy temperature.
struct ScalarAdam {
  AdamHyperparams hp;
  std::int64_t step = 0;
  double m = 0.0;
  double v = 0.0;

  void Step(double& value, double grad);
};

}  // namespace pegx::nn
