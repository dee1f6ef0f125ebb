#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <utility>
#include <vector>

#include "equifl/fairness.hpp"

namespace equifl::nn {

struct LayerParams {
  Eigen::MatrixXd weights;  // out_dim x in_dim
  Eigen::VectorXd bias;     // out_dim

  Eigen::Index out_dim() const { return weights.rows(); }
  Eigen::Index in_dim() const { return weights.cols(); }
};

struct ModelParams {
  std::vector<LayerParams> layers;

  std::size_t depth() const { return layers.size(); }
  Eigen::Index input_dim() const { return layers.front().in_dim(); }
  bool same_shape(const ModelParams& other) const;
};

// Exact elementwise equality, used by the freeze/isolation tests.
bool bitwise_equal(const ModelParams& a, const ModelParams& b);

enum class HiddenActivation { kRelu };
enum class InitScheme { kUniformScaled };

struct NetConfig {
  std::vector<int> layer_dims;  // input dim, hidden dims..., 1
  HiddenActivation hidden_activation = HiddenActivation::kRelu;
  InitScheme init_scheme = InitScheme::kUniformScaled;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<LayerParams> first_moment;
  std::vector<LayerParams> second_moment;
  long step_count = 0;
  AdamConfig hyper;

  static AdamState zeros_like(const ModelParams& params, const AdamConfig& hyper);
};

struct Batch {
  Eigen::MatrixXd features;   // rows x input_dim
  std::vector<int> sensitive;
  Eigen::VectorXd labels;     // entries in {0, 1}

  Eigen::Index size() const { return features.rows(); }
};

// Weights uniform in +-1/sqrt(in_dim), biases zero; a pure function of cfg.
ModelParams init_params(const NetConfig& cfg);

// ReLU hidden layers, sigmoid output. Returns one probability per row.
Eigen::VectorXd forward(const ModelParams& params, const Eigen::MatrixXd& features);

struct LossGrad {
  double loss = 0.0;
  ModelParams grads;  // same shape as the model
};

// Mean binary cross-entropy plus mu times the soft demographic-parity
// surrogate (skipped when mu == 0 or penalty == kNone). Gradients are exact
// reverse-mode derivatives of the returned scalar.
LossGrad loss_and_grad(const ModelParams& params, const Batch& batch, double mu,
                       fairness::PenaltyKind penalty);

// Standard bias-corrected Adam update. Pure: inputs are left untouched.
std::pair<ModelParams, AdamState> adam_step(const ModelParams& params,
                                            const ModelParams& grads,
                                            const AdamState& state);

}  // namespace equifl::nn
