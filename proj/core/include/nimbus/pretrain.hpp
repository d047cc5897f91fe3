#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "nimbus/neural.hpp"
#include "nimbus/optim.hpp"
#include "nimbus/rng.hpp"

namespace nimbus::pretrain {

enum class VisibleType { kGaussian, kBernoulli };

const char* to_string(VisibleType type);
std::optional<VisibleType> parse_visible_type(std::string_view text);

/// Restricted Boltzmann machine. Gaussian visible units are real-valued with
/// fixed unit variance; hidden units are always binary.
struct Rbm {
  VisibleType visible_type = VisibleType::kBernoulli;
  Eigen::MatrixXd weights;       // hidden x visible
  Eigen::VectorXd visible_bias;  // a
  Eigen::VectorXd hidden_bias;   // b

  int visible() const { return static_cast<int>(weights.cols()); }
  int hidden() const { return static_cast<int>(weights.rows()); }
};

/// Weights drawn N(0, 0.01^2) row-major, biases zero.
Rbm make_rbm(VisibleType type, int visible, int hidden, Rng& rng);

struct CdConfig {
  int epochs = 50;
  double learning_rate = 0.1;
  double weight_decay = 0.0002;
  optim::MomentumSchedule momentum{0.5, 0.9, 5};
  int batch_size = 100;
  std::uint64_t seed = 0;
};

/// Defaults matching the two stack positions: the real-valued input layer
/// trains longer at a much smaller rate.
CdConfig gaussian_layer_defaults();
CdConfig bernoulli_layer_defaults();

struct HiddenSample {
  Eigen::MatrixXd probs;    // batch x hidden
  Eigen::MatrixXd samples;  // 0/1 entries
};

/// p(h=1|v) = logistic(b + W v) for both visible types. Bernoulli samples
/// are drawn row-major (batch row, then hidden unit), one uniform per unit.
HiddenSample hidden_given_visible(const Rbm& rbm, const Eigen::MatrixXd& v, Rng& rng);

/// BERNOULLI: Bernoulli samples of logistic(a + W'h), drawn row-major.
/// GAUSSIAN: the conditional mean a + W'h with no noise.
Eigen::MatrixXd visible_given_hidden(const Rbm& rbm, const Eigen::MatrixXd& h, Rng& rng);

struct PretrainState {
  Eigen::MatrixXd vel_weights;
  Eigen::VectorXd vel_visible_bias;
  Eigen::VectorXd vel_hidden_bias;
  int epoch = 1;  // 1-based; the training loop advances it
  Rng rng;

  PretrainState(const Rbm& rbm, std::uint64_t seed);
};

/// One CD-1 update with classical momentum. Positive statistics use hidden
/// probabilities against the data; the reconstruction comes from sampled
/// hiddens; negative statistics use hidden probabilities against the
/// reconstruction. Weight decay applies to weights only.
void cd1_update(Rbm& rbm, const Eigen::MatrixXd& batch, const CdConfig& config,
                PretrainState& state);

/// BERNOULLI: -a.v - sum_j softplus(b_j + W_j.v)
/// GAUSSIAN:  0.5*|v-a|^2 - sum_j softplus(b_j + W_j.v)
double free_energy(const Rbm& rbm, const Eigen::VectorXd& v);

/// Mean squared reconstruction error over a batch; monitoring only.
double reconstruction_error(const Rbm& rbm, const Eigen::MatrixXd& batch);

/// Full CD-1 training loop: per-epoch reshuffled minibatches keyed by
/// (config.seed, epoch), weight init from mix_seed(config.seed, init
/// stream), sampling from its own stream.
Rbm train_rbm(VisibleType type, int hidden, const Eigen::MatrixXd& data,
              const CdConfig& config);

/// Greedy layer-wise stack: layer_sizes = (visible, h1, h2, ...). The first
/// RBM is Gaussian-visible and trains on `data`; each later RBM is
/// Bernoulli-visible and trains on the previous layer's hidden
/// probabilities. configs must have layer_sizes.size()-1 entries; their
/// seeds are overridden with mix_seed(seed, layer stream + index).
std::vector<Rbm> greedy_pretrain(const std::vector<int>& layer_sizes,
                                 const Eigen::MatrixXd& data,
                                 const std::vector<CdConfig>& configs, std::uint64_t seed);

/// Hidden layers copy each RBM's weights and hidden biases with sigmoid
/// activation; a linear output layer to the head gets normalized init and
/// zero biases.
neural::Network unroll_to_network(const std::vector<Rbm>& rbms, const neural::HeadSpec& head,
                                  Rng& rng);

}  // namespace nimbus::pretrain
