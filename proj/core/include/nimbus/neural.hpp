#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string_view>
#include <vector>

#include "nimbus/rng.hpp"

namespace nimbus::neural {

enum class Activation { kSigmoid, kTanh, kLinear };

const char* to_string(Activation activation);
std::optional<Activation> parse_activation(std::string_view text);

/// Output head: a block of softmax groups followed by independent logistic
/// units. Default is the 24-unit layout: groups (5, 4) plus 15 binaries,
/// 17 classifiers in total.
struct HeadSpec {
  std::vector<int> softmax_groups{5, 4};
  int sigmoid_count = 15;

  int total_outputs() const;
  int classifier_count() const;
};

struct Layer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation activation = Activation::kSigmoid;

  int fan_in() const { return static_cast<int>(weights.cols()); }
  int fan_out() const { return static_cast<int>(weights.rows()); }
};

struct Network {
  std::vector<Layer> layers;
  HeadSpec head;

  int input_size() const;
  int output_size() const;
  /// Layer dimensions must chain and the last layer must match the head.
  void validate() const;

  std::size_t parameter_count() const;
  /// Flat parameter vector: per layer, row-major weights then bias.
  Eigen::VectorXd pack() const;
  void unpack(const Eigen::VectorXd& flat);
};

/// Batch activations kept for backprop. `input` is the batch itself;
/// pre[i]/act[i] are batch x fan_out of layer i; probs applies the head to
/// the last pre-activations.
struct ForwardTrace {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> act;
  Eigen::MatrixXd probs;
};

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;

  Eigen::VectorXd pack() const;
};

/// I.i.d. Normal(0, std^2) entries, drawn row-major.
Eigen::MatrixXd init_gaussian(int rows, int cols, double std, Rng& rng);

/// I.i.d. Uniform(-b, b) with b = sqrt(6) / sqrt(fan_in + fan_out), endpoints
/// excluded; rows x cols = fan_out x fan_in, drawn row-major.
Eigen::MatrixXd init_normalized(int fan_in, int fan_out, Rng& rng);

/// Softmax per group (max-subtracted) and logistic on the trailing block.
Eigen::MatrixXd apply_head(const HeadSpec& head, const Eigen::MatrixXd& logits);

ForwardTrace forward(const Network& net, const Eigen::MatrixXd& batch);

/// Root mean square error over all batch x output entries.
double rmse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& targets);

/// Exact gradients of the mean squared error underlying rmse_loss, including
/// the softmax Jacobian and logistic derivative through the head.
Gradients backward(const Network& net, const ForwardTrace& trace,
                   const Eigen::MatrixXd& targets);

/// Hard labels: argmax per softmax group (lowest index wins ties), then
/// 1 iff value > 0.5 per sigmoid unit.
std::vector<int> harden(const Eigen::VectorXd& values, const HeadSpec& head);

struct ClassifierErrors {
  std::vector<double> rates;  // one per classifier
  double all_rate = 0.0;      // fraction of rows with every label correct
};

ClassifierErrors per_classifier_errors(const std::vector<std::vector<int>>& pred,
                                       const std::vector<std::vector<int>>& target);

}  // namespace nimbus::neural
