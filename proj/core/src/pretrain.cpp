#include "nimbus/pretrain.hpp"

#include <cmath>
#include <string>

#include "nimbus/error.hpp"

namespace nimbus::pretrain {

const char* to_string(VisibleType type) {
  return type == VisibleType::kGaussian ? "gaussian" : "bernoulli";
}

std::optional<VisibleType> parse_visible_type(std::string_view text) {
  if (text == "gaussian") return VisibleType::kGaussian;
  if (text == "bernoulli") return VisibleType::kBernoulli;
  return std::nullopt;
}

Rbm make_rbm(VisibleType type, int visible, int hidden, Rng& rng) {
  if (visible < 1 || hidden < 1) throw ConfigError("rbm needs positive layer sizes");
  Rbm rbm;
  rbm.visible_type = type;
  rbm.weights = neural::init_gaussian(hidden, visible, 0.01, rng);
  rbm.visible_bias = Eigen::VectorXd::Zero(visible);
  rbm.hidden_bias = Eigen::VectorXd::Zero(hidden);
  return rbm;
}

CdConfig gaussian_layer_defaults() {
  CdConfig config;
  config.epochs = 200;
  config.learning_rate = 0.001;
  return config;
}

CdConfig bernoulli_layer_defaults() {
  CdConfig config;
  config.epochs = 50;
  config.learning_rate = 0.1;
  return config;
}

namespace {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::MatrixXd hidden_probs(const Rbm& rbm, const Eigen::MatrixXd& v) {
  if (v.cols() != rbm.visible()) {
    throw DataError("visible batch has " + std::to_string(v.cols()) + " columns, rbm has " +
                    std::to_string(rbm.visible()) + " visible units");
  }
  Eigen::MatrixXd pre = v * rbm.weights.transpose();
  pre.rowwise() += rbm.hidden_bias.transpose();
  return pre.unaryExpr([](double x) { return logistic(x); });
}

Eigen::MatrixXd visible_pre(const Rbm& rbm, const Eigen::MatrixXd& h) {
  if (h.cols() != rbm.hidden()) {
    throw DataError("hidden batch has " + std::to_string(h.cols()) + " columns, rbm has " +
                    std::to_string(rbm.hidden()) + " hidden units");
  }
  Eigen::MatrixXd pre = h * rbm.weights;
  pre.rowwise() += rbm.visible_bias.transpose();
  return pre;
}

// Row-major sampling order is part of the determinism contract.
Eigen::MatrixXd sample_bernoulli(const Eigen::MatrixXd& probs, Rng& rng) {
  Eigen::MatrixXd samples(probs.rows(), probs.cols());
  for (int r = 0; r < probs.rows(); ++r) {
    for (int c = 0; c < probs.cols(); ++c) {
      samples(r, c) = rng.uniform() < probs(r, c) ? 1.0 : 0.0;
    }
  }
  return samples;
}

// Mean-field reconstruction, no random draws; used by CD-1 negatives and
// monitoring.
Eigen::MatrixXd reconstruct_mean(const Rbm& rbm, const Eigen::MatrixXd& h) {
  Eigen::MatrixXd pre = visible_pre(rbm, h);
  if (rbm.visible_type == VisibleType::kBernoulli) {
    return pre.unaryExpr([](double x) { return logistic(x); });
  }
  return pre;
}

}  // namespace

HiddenSample hidden_given_visible(const Rbm& rbm, const Eigen::MatrixXd& v, Rng& rng) {
  HiddenSample result;
  result.probs = hidden_probs(rbm, v);
  result.samples = sample_bernoulli(result.probs, rng);
  return result;
}

Eigen::MatrixXd visible_given_hidden(const Rbm& rbm, const Eigen::MatrixXd& h, Rng& rng) {
  Eigen::MatrixXd pre = visible_pre(rbm, h);
  if (rbm.visible_type == VisibleType::kBernoulli) {
    return sample_bernoulli(pre.unaryExpr([](double x) { return logistic(x); }), rng);
  }
  return pre;
}

PretrainState::PretrainState(const Rbm& rbm, std::uint64_t seed)
    : vel_weights(Eigen::MatrixXd::Zero(rbm.hidden(), rbm.visible())),
      vel_visible_bias(Eigen::VectorXd::Zero(rbm.visible())),
      vel_hidden_bias(Eigen::VectorXd::Zero(rbm.hidden())),
      rng(mix_seed(seed, kStreamSample)) {}

void cd1_update(Rbm& rbm, const Eigen::MatrixXd& batch, const CdConfig& config,
                PretrainState& state) {
  const Eigen::MatrixXd h_pos = hidden_probs(rbm, batch);
  const Eigen::MatrixXd h_samples = sample_bernoulli(h_pos, state.rng);
  Eigen::MatrixXd v_neg;
  if (rbm.visible_type == VisibleType::kBernoulli) {
    v_neg = sample_bernoulli(reconstruct_mean(rbm, h_samples), state.rng);
  } else {
    v_neg = reconstruct_mean(rbm, h_samples);
  }
  const Eigen::MatrixXd h_neg = hidden_probs(rbm, v_neg);

  const double inv_batch = 1.0 / static_cast<double>(batch.rows());
  const double eps = config.learning_rate;
  const Eigen::MatrixXd delta_w =
      eps * ((h_pos.transpose() * batch - h_neg.transpose() * v_neg) * inv_batch -
             config.weight_decay * rbm.weights);
  const Eigen::VectorXd delta_a =
      eps * inv_batch * (batch - v_neg).colwise().sum().transpose();
  const Eigen::VectorXd delta_b =
      eps * inv_batch * (h_pos - h_neg).colwise().sum().transpose();

  const double mu = optim::momentum_at_epoch(config.momentum, state.epoch);
  state.vel_weights = mu * state.vel_weights + delta_w;
  state.vel_visible_bias = mu * state.vel_visible_bias + delta_a;
  state.vel_hidden_bias = mu * state.vel_hidden_bias + delta_b;
  rbm.weights += state.vel_weights;
  rbm.visible_bias += state.vel_visible_bias;
  rbm.hidden_bias += state.vel_hidden_bias;

  if (!rbm.weights.allFinite() || !rbm.visible_bias.allFinite() ||
      !rbm.hidden_bias.allFinite()) {
    throw NumericError("cd-1 produced non-finite parameters at epoch " +
                       std::to_string(state.epoch));
  }
}

namespace {

inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

double free_energy(const Rbm& rbm, const Eigen::VectorXd& v) {
  if (v.size() != rbm.visible()) {
    throw DataError("free energy input width does not match the rbm");
  }
  const Eigen::VectorXd hidden_pre = rbm.hidden_bias + rbm.weights * v;
  double hidden_term = 0.0;
  for (int j = 0; j < hidden_pre.size(); ++j) hidden_term += softplus(hidden_pre[j]);
  if (rbm.visible_type == VisibleType::kBernoulli) {
    return -rbm.visible_bias.dot(v) - hidden_term;
  }
  return 0.5 * (v - rbm.visible_bias).squaredNorm() - hidden_term;
}

double reconstruction_error(const Rbm& rbm, const Eigen::MatrixXd& batch) {
  const Eigen::MatrixXd recon = reconstruct_mean(rbm, hidden_probs(rbm, batch));
  const double denom = static_cast<double>(batch.rows()) * batch.cols();
  return (batch - recon).squaredNorm() / denom;
}

Rbm train_rbm(VisibleType type, int hidden, const Eigen::MatrixXd& data,
              const CdConfig& config) {
  if (data.rows() < 1) throw DataError("rbm training needs at least one row");
  if (config.epochs < 1 || config.batch_size < 1) {
    throw ConfigError("rbm training needs epochs >= 1 and batch_size >= 1");
  }
  Rng init_rng(mix_seed(config.seed, kStreamInit));
  Rbm rbm = make_rbm(type, static_cast<int>(data.cols()), hidden, init_rng);
  PretrainState state(rbm, config.seed);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    state.epoch = epoch;
    const auto batches =
        minibatch_indices(static_cast<std::size_t>(data.rows()),
                          static_cast<std::size_t>(config.batch_size), config.seed, epoch);
    for (const auto& batch_rows : batches) {
      Eigen::MatrixXd batch(batch_rows.size(), data.cols());
      for (std::size_t i = 0; i < batch_rows.size(); ++i) {
        batch.row(static_cast<Eigen::Index>(i)) =
            data.row(static_cast<Eigen::Index>(batch_rows[i]));
      }
      cd1_update(rbm, batch, config, state);
    }
  }
  return rbm;
}

std::vector<Rbm> greedy_pretrain(const std::vector<int>& layer_sizes,
                                 const Eigen::MatrixXd& data,
                                 const std::vector<CdConfig>& configs, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw ConfigError("layer_sizes needs at least two entries");
  if (configs.size() != layer_sizes.size() - 1) {
    throw ConfigError("expected " + std::to_string(layer_sizes.size() - 1) +
                      " per-layer configs, got " + std::to_string(configs.size()));
  }
  if (data.cols() != layer_sizes.front()) {
    throw DataError("data width " + std::to_string(data.cols()) +
                    " does not match the first layer size " +
                    std::to_string(layer_sizes.front()));
  }

  std::vector<Rbm> rbms;
  Eigen::MatrixXd current = data;
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    CdConfig config = configs[i];
    config.seed = mix_seed(mix_seed(seed, kStreamLayer), i);
    const VisibleType type = i == 0 ? VisibleType::kGaussian : VisibleType::kBernoulli;
    rbms.push_back(train_rbm(type, layer_sizes[i + 1], current, config));
    current = hidden_probs(rbms.back(), current);
  }
  return rbms;
}

neural::Network unroll_to_network(const std::vector<Rbm>& rbms, const neural::HeadSpec& head,
                                  Rng& rng) {
  if (rbms.empty()) throw ConfigError("cannot unroll an empty rbm stack");
  for (std::size_t i = 1; i < rbms.size(); ++i) {
    if (rbms[i].visible() != rbms[i - 1].hidden()) {
      throw ConfigError("rbm stack does not chain at layer " + std::to_string(i));
    }
  }
  neural::Network net;
  net.head = head;
  for (const Rbm& rbm : rbms) {
    net.layers.push_back(
        neural::Layer{rbm.weights, rbm.hidden_bias, neural::Activation::kSigmoid});
  }
  const int top = rbms.back().hidden();
  neural::Layer output;
  output.weights = neural::init_normalized(top, head.total_outputs(), rng);
  output.bias = Eigen::VectorXd::Zero(head.total_outputs());
  output.activation = neural::Activation::kLinear;
  net.layers.push_back(std::move(output));
  net.validate();
  return net;
}

}  // namespace nimbus::pretrain
