#include "equifl/nn.hpp"

#include <cmath>
#include <sstream>

#include "equifl/errors.hpp"
#include "equifl/rng.hpp"

namespace equifl::nn {

namespace {

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& z) {
  return 1.0 / (1.0 + (-z).exp());
}

void check_same_shape(const std::vector<LayerParams>& a,
                      const std::vector<LayerParams>& b, const char* what) {
  if (a.size() != b.size()) throw DimensionError(std::string(what) + ": depth differs");
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (a[l].weights.rows() != b[l].weights.rows() ||
        a[l].weights.cols() != b[l].weights.cols() ||
        a[l].bias.size() != b[l].bias.size()) {
      throw DimensionError(std::string(what) + ": layer shape differs");
    }
  }
}

std::vector<LayerParams> zero_layers(const ModelParams& params) {
  std::vector<LayerParams> out;
  out.reserve(params.layers.size());
  for (const LayerParams& layer : params.layers) {
    out.push_back({Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                   Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return out;
}

}  // namespace

bool ModelParams::same_shape(const ModelParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].weights.rows() != other.layers[l].weights.rows() ||
        layers[l].weights.cols() != other.layers[l].weights.cols() ||
        layers[l].bias.size() != other.layers[l].bias.size()) {
      return false;
    }
  }
  return true;
}

bool bitwise_equal(const ModelParams& a, const ModelParams& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (!(a.layers[l].weights.array() == b.layers[l].weights.array()).all()) return false;
    if (!(a.layers[l].bias.array() == b.layers[l].bias.array()).all()) return false;
  }
  return true;
}

void NetConfig::validate() const {
  if (layer_dims.size() < 2) {
    throw ConfigError("layer_dims needs an input dim and an output dim");
  }
  for (int d : layer_dims) {
    if (d <= 0) throw ConfigError("layer_dims entries must be positive");
  }
  if (layer_dims.back() != 1) {
    throw ConfigError("the output layer must have a single unit");
  }
}

AdamState AdamState::zeros_like(const ModelParams& params, const AdamConfig& hyper) {
  AdamState state;
  state.first_moment = zero_layers(params);
  state.second_moment = zero_layers(params);
  state.step_count = 0;
  state.hyper = hyper;
  return state;
}

ModelParams init_params(const NetConfig& cfg) {
  cfg.validate();
  DetRng rng(cfg.seed);
  ModelParams params;
  params.layers.reserve(cfg.layer_dims.size() - 1);
  for (std::size_t l = 0; l + 1 < cfg.layer_dims.size(); ++l) {
    const Eigen::Index in = cfg.layer_dims[l];
    const Eigen::Index out = cfg.layer_dims[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    LayerParams layer;
    layer.weights.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) {
        layer.weights(r, c) = rng.uniform(-scale, scale);
      }
    }
    layer.bias = Eigen::VectorXd::Zero(out);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

Eigen::VectorXd forward(const ModelParams& params, const Eigen::MatrixXd& features) {
  if (params.layers.empty()) throw DimensionError("forward: model has no layers");
  if (features.cols() != params.input_dim()) {
    std::ostringstream msg;
    msg << "forward: feature dim " << features.cols() << " != input dim "
        << params.input_dim();
    throw DimensionError(msg.str());
  }
  Eigen::MatrixXd h = features;
  const std::size_t m = params.depth();
  for (std::size_t l = 0; l + 1 < m; ++l) {
    h = ((h * params.layers[l].weights.transpose()).rowwise() +
         params.layers[l].bias.transpose())
            .cwiseMax(0.0);
  }
  const LayerParams& head = params.layers[m - 1];
  Eigen::VectorXd logits =
      ((h * head.weights.transpose()).rowwise() + head.bias.transpose()).col(0);
  return sigmoid(logits.array()).matrix();
}

LossGrad loss_and_grad(const ModelParams& params, const Batch& batch, double mu,
                       fairness::PenaltyKind penalty) {
  if (batch.size() == 0) throw InputError("loss_and_grad: empty batch");
  if (mu < 0.0) throw InputError("loss_and_grad: mu must be non-negative");
  if (batch.features.cols() != params.input_dim()) {
    throw DimensionError("loss_and_grad: feature dim mismatch");
  }
  if (static_cast<Eigen::Index>(batch.sensitive.size()) != batch.size() ||
      batch.labels.size() != batch.size()) {
    throw DimensionError("loss_and_grad: batch fields disagree on length");
  }

  const std::size_t m = params.depth();
  const Eigen::Index rows = batch.size();

  // Forward pass, caching layer inputs and hidden pre-activations.
  std::vector<Eigen::MatrixXd> inputs(m);   // inputs[l] feeds layer l
  std::vector<Eigen::MatrixXd> preacts(m);  // preacts[l] = inputs[l] * W_l^T + b_l
  inputs[0] = batch.features;
  for (std::size_t l = 0; l < m; ++l) {
    preacts[l] = (inputs[l] * params.layers[l].weights.transpose()).rowwise() +
                 params.layers[l].bias.transpose();
    if (l + 1 < m) inputs[l + 1] = preacts[l].cwiseMax(0.0);
  }

  const Eigen::ArrayXd z = preacts[m - 1].col(0).array();
  const Eigen::ArrayXd y = batch.labels.array();
  const Eigen::ArrayXd p = sigmoid(z);

  // Numerically stable BCE from logits: max(z,0) - z*y + log(1 + exp(-|z|)).
  const double bce =
      (z.max(0.0) - z * y + (1.0 + (-z.abs()).exp()).log()).mean();

  const double inv_rows = 1.0 / static_cast<double>(rows);
  Eigen::ArrayXd dz = (p - y) * inv_rows;

  double loss = bce;
  if (mu > 0.0 && penalty == fairness::PenaltyKind::kSoftDp) {
    const fairness::SoftDpResult pen =
        fairness::soft_dp_penalty(p.matrix(), batch.sensitive);
    loss += mu * pen.value;
    dz += mu * pen.grad.array() * p * (1.0 - p);
  }

  if (!std::isfinite(loss)) throw NumericError("loss_and_grad: non-finite loss");

  // Reverse pass.
  LossGrad out;
  out.loss = loss;
  out.grads.layers.resize(m);
  Eigen::MatrixXd delta = dz.matrix();
  for (std::size_t l = m; l-- > 0;) {
    out.grads.layers[l].weights = delta.transpose() * inputs[l];
    out.grads.layers[l].bias = delta.colwise().sum().transpose();
    if (l > 0) {
      delta = (delta * params.layers[l].weights)
                  .cwiseProduct((preacts[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  for (const LayerParams& g : out.grads.layers) {
    if (!g.weights.allFinite() || !g.bias.allFinite()) {
      throw NumericError("loss_and_grad: non-finite gradient");
    }
  }
  return out;
}

std::pair<ModelParams, AdamState> adam_step(const ModelParams& params,
                                            const ModelParams& grads,
                                            const AdamState& state) {
  if (!params.same_shape(grads)) throw DimensionError("adam_step: gradient shape mismatch");
  check_same_shape(params.layers, state.first_moment, "adam_step: first moment");
  check_same_shape(params.layers, state.second_moment, "adam_step: second moment");

  ModelParams next = params;
  AdamState st = state;
  st.step_count += 1;
  const AdamConfig& h = st.hyper;
  const double corr1 = 1.0 - std::pow(h.beta1, static_cast<double>(st.step_count));
  const double corr2 = 1.0 - std::pow(h.beta2, static_cast<double>(st.step_count));

  const auto update = [&](auto& m, auto& v, const auto& g, auto& theta) {
    m = h.beta1 * m + (1.0 - h.beta1) * g;
    v.array() = h.beta2 * v.array() + (1.0 - h.beta2) * g.array().square();
    theta.array() -=
        h.learning_rate * (m.array() / corr1) / ((v.array() / corr2).sqrt() + h.epsilon);
  };

  for (std::size_t l = 0; l < next.layers.size(); ++l) {
    update(st.first_moment[l].weights, st.second_moment[l].weights,
           grads.layers[l].weights, next.layers[l].weights);
    update(st.first_moment[l].bias, st.second_moment[l].bias, grads.layers[l].bias,
           next.layers[l].bias);
  }
  return {std::move(next), std::move(st)};
}

}  // namespace equifl::nn
