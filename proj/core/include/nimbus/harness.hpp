#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nimbus/config.hpp"
#include "nimbus/neural.hpp"
#include "nimbus/optim.hpp"
#include "nimbus/pretrain.hpp"

namespace nimbus::harness {

/// The three trained configurations: a 1-hidden-layer sigmoid net with
/// Gaussian init, a deep tanh net with normalized init, and a deep sigmoid
/// net initialized from a pretrained RBM stack.
enum class ModelKind { kShallowSigmoid, kDeepTanhNormalized, kDeepSigmoidDbn };

const char* to_string(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view text);

struct RunConfig {
  ModelKind model = ModelKind::kShallowSigmoid;
  int hidden_units = 1000;
  int hidden_layers = 1;  // 3 for the deep kinds unless overridden
  neural::HeadSpec head;
  optim::Rule rule = optim::Rule::kNag;
  double learning_rate = 0.12;
  optim::MomentumSchedule momentum;  // deep kinds default to a flat 0.5
  double weight_decay = 0.0;
  int patience = 2;
  int batch_size = 100;
  double split_ratio = 0.9;
  std::uint64_t seed = 0;
  int max_epochs = 200;
  pretrain::CdConfig gaussian_cd;   // input layer pretraining (DBN kind)
  pretrain::CdConfig bernoulli_cd;  // upper layers

  /// Applies model-conditional defaults, then explicit keys. Unknown keys
  /// are rejected.
  static RunConfig from_key_values(const config::KeyValues& kv);
  void validate() const;
};

struct DatasetRecord {
  std::string id;
  std::optional<std::string> text;     // `tweet` column, tagged or raw
  std::optional<long> features_ref;    // row index into a dense feature matrix
  Eigen::VectorXd targets;             // soft labels in [0,1]
};

/// Target column order of the labeled CSV: s1..s5, w1..w4, k1..k15.
const std::vector<std::string>& target_column_names();

/// Names for the head's classifiers in report order. The default two-group
/// head yields s, w, k1..k15.
std::vector<std::string> classifier_names(const neural::HeadSpec& head);

/// Labeled CSV with header `id`, one of `tweet`/`features_ref`, then the 24
/// target columns. Malformed rows and out-of-range targets are rejected with
/// the record number and column name.
std::vector<DatasetRecord> load_labeled_csv(const std::string& path);

/// Dense per-record matrices. gather_features resolves features_ref rows
/// into `all_features` and rejects records without a reference.
Eigen::MatrixXd gather_features(const std::vector<DatasetRecord>& records,
                                const Eigen::MatrixXd& all_features);
Eigen::MatrixXd gather_targets(const std::vector<DatasetRecord>& records);

/// Seeded uniform shuffle of {0..n-1}; first floor(ratio*n) indices train,
/// the rest validate.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_train_val(
    std::size_t n, double ratio, std::uint64_t seed);

struct EpochStat {
  int epoch = 0;
  double train_rmse = 0.0;
  double val_rmse = 0.0;
  double seconds = 0.0;  // wall clock; reported but never serialized
};

struct TrainReport {
  std::vector<EpochStat> epochs;
  int best_epoch = 0;  // 0 when no epoch ran
  double best_val_rmse = 0.0;
  neural::ClassifierErrors validation_errors;  // best network on the val split
};

using EpochCallback = std::function<void(const EpochStat&)>;

struct TrainResult {
  neural::Network network;
  TrainReport report;
};

/// Builds the configured model. The DBN kind pretrains on `features` unless
/// `pretrained` supplies a stack.
neural::Network build_network(const RunConfig& config, int input_dim,
                              const Eigen::MatrixXd& features,
                              const std::vector<pretrain::Rbm>* pretrained = nullptr);

/// Full training run: split, minibatched optimization with the momentum
/// schedule, per-epoch validation, early stopping with best-snapshot return.
TrainResult train_network(const RunConfig& config, const Eigen::MatrixXd& features,
                          const Eigen::MatrixXd& targets,
                          const EpochCallback& on_epoch = EpochCallback(),
                          const std::vector<pretrain::Rbm>* pretrained = nullptr);

struct Evaluation {
  double rmse = 0.0;
  neural::ClassifierErrors errors;
};

Evaluation evaluate(const neural::Network& net, const Eigen::MatrixXd& features,
                    const Eigen::MatrixXd& targets);

struct OptimizerTrace {
  optim::Rule rule;
  std::vector<double> train_rmse;  // one entry per epoch
};

/// Trains each rule from one shared initialization with a shared batch
/// schedule and no early stopping; the whole dataset is the training set.
std::vector<OptimizerTrace> compare_optimizers(const RunConfig& config,
                                               const Eigen::MatrixXd& features,
                                               const Eigen::MatrixXd& targets,
                                               const std::vector<optim::Rule>& rules,
                                               int epochs);

// Metrics files. epochs.csv rows are flushed as they arrive so interrupted
// runs keep their trace; wall-clock is deliberately left out to keep reruns
// byte-identical.
void write_epochs_header(std::ostream& out);
void append_epoch_row(std::ostream& out, const EpochStat& stat);
void write_classifiers_csv(const std::string& path, const neural::HeadSpec& head,
                           const neural::ClassifierErrors& errors);

}  // namespace nimbus::harness
