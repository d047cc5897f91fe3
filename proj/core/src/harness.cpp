#include "nimbus/harness.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include "nimbus/csv.hpp"
#include "nimbus/error.hpp"
#include "nimbus/rng.hpp"

namespace nimbus::harness {

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kShallowSigmoid: return "shallow_sigmoid";
    case ModelKind::kDeepTanhNormalized: return "deep_tanh_normalized";
    case ModelKind::kDeepSigmoidDbn: return "deep_sigmoid_dbn";
  }
  return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view text) {
  if (text == "shallow_sigmoid") return ModelKind::kShallowSigmoid;
  if (text == "deep_tanh_normalized") return ModelKind::kDeepTanhNormalized;
  if (text == "deep_sigmoid_dbn") return ModelKind::kDeepSigmoidDbn;
  return std::nullopt;
}

RunConfig RunConfig::from_key_values(const config::KeyValues& kv) {
  kv.require_keys_in({
      "model", "hidden_units", "hidden_layers", "head_groups", "head_sigmoids", "rule",
      "learning_rate", "momentum_initial", "momentum_later", "momentum_switch_epoch",
      "weight_decay", "patience", "batch_size", "split_ratio", "seed", "max_epochs",
      "pretrain_gaussian_epochs", "pretrain_gaussian_learning_rate",
      "pretrain_bernoulli_epochs", "pretrain_bernoulli_learning_rate",
      "pretrain_weight_decay", "pretrain_batch_size",
  });

  RunConfig config;
  const std::string model_name = kv.get_string_or("model", "shallow_sigmoid");
  const auto model = parse_model_kind(model_name);
  if (!model) throw ConfigError("unknown model kind '" + model_name + "'");
  config.model = *model;

  const bool deep = config.model != ModelKind::kShallowSigmoid;
  config.hidden_layers = static_cast<int>(kv.get_long_or("hidden_layers", deep ? 3 : 1));
  config.hidden_units = static_cast<int>(kv.get_long_or("hidden_units", 1000));

  if (kv.has("head_groups")) {
    config.head.softmax_groups.clear();
    std::istringstream parts(kv.get_string("head_groups"));
    std::string part;
    while (std::getline(parts, part, ',')) {
      config.head.softmax_groups.push_back(
          static_cast<int>(csv::parse_long(part, "head_groups")));
    }
  }
  config.head.sigmoid_count =
      static_cast<int>(kv.get_long_or("head_sigmoids", config.head.sigmoid_count));

  const std::string rule_name = kv.get_string_or("rule", "nag");
  const auto rule = optim::parse_rule(rule_name);
  if (!rule) throw ConfigError("unknown update rule '" + rule_name + "'");
  config.rule = *rule;

  config.learning_rate = kv.get_double_or("learning_rate", 0.12);
  config.momentum.initial = kv.get_double_or("momentum_initial", 0.5);
  config.momentum.later = kv.get_double_or("momentum_later", deep ? 0.5 : 0.9);
  config.momentum.switch_epoch =
      static_cast<int>(kv.get_long_or("momentum_switch_epoch", 5));
  config.weight_decay = kv.get_double_or("weight_decay", 0.0);
  config.patience = static_cast<int>(kv.get_long_or("patience", 2));
  config.batch_size = static_cast<int>(kv.get_long_or("batch_size", 100));
  config.split_ratio = kv.get_double_or("split_ratio", 0.9);
  config.seed = kv.get_u64_or("seed", 0);
  config.max_epochs = static_cast<int>(kv.get_long_or("max_epochs", 200));

  config.gaussian_cd = pretrain::gaussian_layer_defaults();
  config.bernoulli_cd = pretrain::bernoulli_layer_defaults();
  config.gaussian_cd.epochs =
      static_cast<int>(kv.get_long_or("pretrain_gaussian_epochs", config.gaussian_cd.epochs));
  config.gaussian_cd.learning_rate =
      kv.get_double_or("pretrain_gaussian_learning_rate", config.gaussian_cd.learning_rate);
  config.bernoulli_cd.epochs = static_cast<int>(
      kv.get_long_or("pretrain_bernoulli_epochs", config.bernoulli_cd.epochs));
  config.bernoulli_cd.learning_rate =
      kv.get_double_or("pretrain_bernoulli_learning_rate", config.bernoulli_cd.learning_rate);
  const double cd_decay = kv.get_double_or("pretrain_weight_decay", 0.0002);
  const int cd_batch = static_cast<int>(kv.get_long_or("pretrain_batch_size", 100));
  config.gaussian_cd.weight_decay = cd_decay;
  config.bernoulli_cd.weight_decay = cd_decay;
  config.gaussian_cd.batch_size = cd_batch;
  config.bernoulli_cd.batch_size = cd_batch;

  config.validate();
  return config;
}

void RunConfig::validate() const {
  if (hidden_units < 1) throw ConfigError("hidden_units must be >= 1");
  if (hidden_layers < 1) throw ConfigError("hidden_layers must be >= 1");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  if (momentum.initial < 0.0 || momentum.initial >= 1.0 || momentum.later < 0.0 ||
      momentum.later >= 1.0) {
    throw ConfigError("momentum coefficients must lie in [0, 1)");
  }
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (split_ratio <= 0.0 || split_ratio >= 1.0) {
    throw ConfigError("split_ratio must lie in (0, 1)");
  }
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (head.total_outputs() < 1) throw ConfigError("head has no outputs");
}

const std::vector<std::string>& target_column_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (int i = 1; i <= 5; ++i) v.push_back("s" + std::to_string(i));
    for (int i = 1; i <= 4; ++i) v.push_back("w" + std::to_string(i));
    for (int i = 1; i <= 15; ++i) v.push_back("k" + std::to_string(i));
    return v;
  }();
  return names;
}

std::vector<std::string> classifier_names(const neural::HeadSpec& head) {
  std::vector<std::string> names;
  if (head.softmax_groups.size() == 2) {
    names = {"s", "w"};
  } else {
    for (std::size_t g = 1; g <= head.softmax_groups.size(); ++g) {
      names.push_back("g" + std::to_string(g));
    }
  }
  for (int i = 1; i <= head.sigmoid_count; ++i) names.push_back("k" + std::to_string(i));
  return names;
}

std::vector<DatasetRecord> load_labeled_csv(const std::string& path) {
  const csv::Table table = csv::read_csv(path);
  const int id_col = table.column("id");
  if (id_col < 0) throw DataError(path + ": missing 'id' column");
  const int text_col = table.column("tweet");
  const int ref_col = table.column("features_ref");
  if ((text_col < 0) == (ref_col < 0)) {
    throw DataError(path + ": need exactly one of 'tweet' or 'features_ref'");
  }
  std::vector<int> target_cols;
  for (const std::string& name : target_column_names()) {
    const int col = table.column(name);
    if (col < 0) throw DataError(path + ": missing target column '" + name + "'");
    target_cols.push_back(col);
  }

  std::vector<DatasetRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    DatasetRecord record;
    record.id = row[static_cast<std::size_t>(id_col)];
    const std::string where = path + ": record " + std::to_string(r + 1);
    if (text_col >= 0) {
      record.text = row[static_cast<std::size_t>(text_col)];
    } else {
      record.features_ref =
          csv::parse_long(row[static_cast<std::size_t>(ref_col)], where.c_str());
    }
    record.targets.resize(static_cast<Eigen::Index>(target_cols.size()));
    for (std::size_t t = 0; t < target_cols.size(); ++t) {
      const std::string& cell = row[static_cast<std::size_t>(target_cols[t])];
      const double value = csv::parse_double(cell, where.c_str());
      if (value < 0.0 || value > 1.0) {
        throw DataError(where + " column " + target_column_names()[t] + ": value " + cell +
                        " outside [0, 1]");
      }
      record.targets[static_cast<Eigen::Index>(t)] = value;
    }
    records.push_back(std::move(record));
  }
  return records;
}

Eigen::MatrixXd gather_features(const std::vector<DatasetRecord>& records,
                                const Eigen::MatrixXd& all_features) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(records.size()), all_features.cols());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].features_ref) {
      throw DataError("record " + records[i].id + " carries no features_ref");
    }
    const long ref = *records[i].features_ref;
    if (ref < 0 || ref >= all_features.rows()) {
      throw DataError("record " + records[i].id + ": features_ref " + std::to_string(ref) +
                      " outside the feature matrix (" + std::to_string(all_features.rows()) +
                      " rows)");
    }
    out.row(static_cast<Eigen::Index>(i)) = all_features.row(ref);
  }
  return out;
}

Eigen::MatrixXd gather_targets(const std::vector<DatasetRecord>& records) {
  if (records.empty()) throw DataError("no records");
  const Eigen::Index width = records.front().targets.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(records.size()), width);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].targets.size() != width) {
      throw DataError("record " + records[i].id + " has inconsistent target width");
    }
    out.row(static_cast<Eigen::Index>(i)) = records[i].targets.transpose();
  }
  return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_train_val(
    std::size_t n, double ratio, std::uint64_t seed) {
  if (n < 2) throw DataError("need at least 2 records to split");
  if (ratio <= 0.0 || ratio >= 1.0) throw ConfigError("split ratio must lie in (0, 1)");
  Rng rng(mix_seed(seed, kStreamSplit));
  std::vector<std::size_t> order = shuffled_indices(n, rng);
  std::size_t train_count =
      static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
  // Keep both sides nonempty; extreme ratios on tiny n would otherwise
  // starve one split.
  if (train_count == 0) train_count = 1;
  if (train_count == n) train_count = n - 1;
  std::vector<std::size_t> train(order.begin(),
                                 order.begin() + static_cast<std::ptrdiff_t>(train_count));
  std::vector<std::size_t> val(order.begin() + static_cast<std::ptrdiff_t>(train_count),
                               order.end());
  return {std::move(train), std::move(val)};
}

namespace {

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace

neural::Network build_network(const RunConfig& config, int input_dim,
                              const Eigen::MatrixXd& features,
                              const std::vector<pretrain::Rbm>* pretrained) {
  config.validate();
  Rng rng(mix_seed(config.seed, kStreamInit));
  neural::Network net;
  net.head = config.head;
  const int outputs = config.head.total_outputs();

  switch (config.model) {
    case ModelKind::kShallowSigmoid: {
      for (int i = 0; i < config.hidden_layers; ++i) {
        const int fan_in = i == 0 ? input_dim : config.hidden_units;
        neural::Layer layer;
        layer.weights = neural::init_gaussian(config.hidden_units, fan_in, 0.1, rng);
        layer.bias = Eigen::VectorXd::Zero(config.hidden_units);
        layer.activation = neural::Activation::kSigmoid;
        net.layers.push_back(std::move(layer));
      }
      neural::Layer output;
      output.weights = neural::init_gaussian(outputs, config.hidden_units, 0.1, rng);
      output.bias = Eigen::VectorXd::Zero(outputs);
      output.activation = neural::Activation::kLinear;
      net.layers.push_back(std::move(output));
      break;
    }
    case ModelKind::kDeepTanhNormalized: {
      for (int i = 0; i < config.hidden_layers; ++i) {
        const int fan_in = i == 0 ? input_dim : config.hidden_units;
        neural::Layer layer;
        layer.weights = neural::init_normalized(fan_in, config.hidden_units, rng);
        layer.bias = Eigen::VectorXd::Zero(config.hidden_units);
        layer.activation = neural::Activation::kTanh;
        net.layers.push_back(std::move(layer));
      }
      neural::Layer output;
      output.weights = neural::init_normalized(config.hidden_units, outputs, rng);
      output.bias = Eigen::VectorXd::Zero(outputs);
      output.activation = neural::Activation::kLinear;
      net.layers.push_back(std::move(output));
      break;
    }
    case ModelKind::kDeepSigmoidDbn: {
      std::vector<pretrain::Rbm> local;
      const std::vector<pretrain::Rbm>* stack = pretrained;
      if (stack == nullptr) {
        std::vector<int> sizes{input_dim};
        std::vector<pretrain::CdConfig> cd;
        for (int i = 0; i < config.hidden_layers; ++i) {
          sizes.push_back(config.hidden_units);
          cd.push_back(i == 0 ? config.gaussian_cd : config.bernoulli_cd);
        }
        local = pretrain::greedy_pretrain(sizes, features, cd, config.seed);
        stack = &local;
      }
      if (stack->empty() || stack->front().visible() != input_dim) {
        throw ConfigError("pretrained stack does not match the input dimension");
      }
      return pretrain::unroll_to_network(*stack, config.head, rng);
    }
  }
  net.validate();
  return net;
}

TrainResult train_network(const RunConfig& config, const Eigen::MatrixXd& features,
                          const Eigen::MatrixXd& targets, const EpochCallback& on_epoch,
                          const std::vector<pretrain::Rbm>* pretrained) {
  config.validate();
  if (features.rows() != targets.rows()) {
    throw DataError("feature and target row counts differ");
  }
  if (targets.cols() != config.head.total_outputs()) {
    throw DataError("targets have " + std::to_string(targets.cols()) +
                    " columns, head expects " + std::to_string(config.head.total_outputs()));
  }

  const auto [train_rows, val_rows] =
      split_train_val(static_cast<std::size_t>(features.rows()), config.split_ratio,
                      config.seed);
  const Eigen::MatrixXd train_x = rows_of(features, train_rows);
  const Eigen::MatrixXd train_t = rows_of(targets, train_rows);
  const Eigen::MatrixXd val_x = rows_of(features, val_rows);
  const Eigen::MatrixXd val_t = rows_of(targets, val_rows);

  TrainResult result;
  result.network =
      build_network(config, static_cast<int>(features.cols()), train_x, pretrained);

  if (config.max_epochs == 0) {
    result.report.best_epoch = 0;
    result.report.best_val_rmse =
        neural::rmse_loss(neural::forward(result.network, val_x).probs, val_t);
    result.report.validation_errors = evaluate(result.network, val_x, val_t).errors;
    return result;
  }

  Eigen::VectorXd params = result.network.pack();
  Eigen::VectorXd best_params = params;
  neural::Network scratch = result.network;
  optim::Optimizer optimizer(config.rule, config.learning_rate, config.weight_decay);
  optim::EarlyStopper stopper(config.patience);

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const double mu = optim::momentum_at_epoch(config.momentum, epoch);
    const auto batches = minibatch_indices(train_rows.size(),
                                           static_cast<std::size_t>(config.batch_size),
                                           config.seed, epoch);
    for (const auto& batch_rows : batches) {
      const Eigen::MatrixXd x = rows_of(train_x, batch_rows);
      const Eigen::MatrixXd t = rows_of(train_t, batch_rows);
      optimizer.step(params, mu, [&scratch, &x, &t](const Eigen::VectorXd& point) {
        scratch.unpack(point);
        const neural::ForwardTrace trace = neural::forward(scratch, x);
        return neural::backward(scratch, trace, t).pack();
      });
    }

    scratch.unpack(params);
    EpochStat stat;
    stat.epoch = epoch;
    stat.train_rmse = neural::rmse_loss(neural::forward(scratch, train_x).probs, train_t);
    stat.val_rmse = neural::rmse_loss(neural::forward(scratch, val_x).probs, val_t);
    stat.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                       .count();
    result.report.epochs.push_back(stat);
    if (on_epoch) on_epoch(stat);

    const bool stop = stopper.observe(stat.val_rmse);
    if (stopper.best_updated()) best_params = params;
    if (stop) break;
  }

  result.network.unpack(best_params);
  result.report.best_epoch = stopper.best_epoch();
  result.report.best_val_rmse = stopper.best_error();
  result.report.validation_errors = evaluate(result.network, val_x, val_t).errors;
  return result;
}

Evaluation evaluate(const neural::Network& net, const Eigen::MatrixXd& features,
                    const Eigen::MatrixXd& targets) {
  if (features.rows() == 0) throw DataError("evaluation needs at least one record");
  if (features.rows() != targets.rows()) {
    throw DataError("feature and target row counts differ");
  }
  const neural::ForwardTrace trace = neural::forward(net, features);
  Evaluation result;
  result.rmse = neural::rmse_loss(trace.probs, targets);
  std::vector<std::vector<int>> pred_hard, target_hard;
  pred_hard.reserve(static_cast<std::size_t>(features.rows()));
  target_hard.reserve(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index r = 0; r < trace.probs.rows(); ++r) {
    pred_hard.push_back(neural::harden(trace.probs.row(r).transpose(), net.head));
    target_hard.push_back(neural::harden(targets.row(r).transpose(), net.head));
  }
  result.errors = neural::per_classifier_errors(pred_hard, target_hard);
  return result;
}

std::vector<OptimizerTrace> compare_optimizers(const RunConfig& config,
                                               const Eigen::MatrixXd& features,
                                               const Eigen::MatrixXd& targets,
                                               const std::vector<optim::Rule>& rules,
                                               int epochs) {
  config.validate();
  if (features.rows() != targets.rows()) {
    throw DataError("feature and target row counts differ");
  }
  if (epochs < 1) throw ConfigError("comparison needs epochs >= 1");

  neural::Network net =
      build_network(config, static_cast<int>(features.cols()), features, nullptr);
  const Eigen::VectorXd initial = net.pack();
  neural::Network scratch = net;

  std::vector<OptimizerTrace> traces;
  for (const optim::Rule rule : rules) {
    OptimizerTrace trace;
    trace.rule = rule;
    Eigen::VectorXd params = initial;
    optim::Optimizer optimizer(rule, config.learning_rate, config.weight_decay);
    for (int epoch = 1; epoch <= epochs; ++epoch) {
      const double mu = optim::momentum_at_epoch(config.momentum, epoch);
      const auto batches =
          minibatch_indices(static_cast<std::size_t>(features.rows()),
                            static_cast<std::size_t>(config.batch_size), config.seed, epoch);
      for (const auto& batch_rows : batches) {
        const Eigen::MatrixXd x = rows_of(features, batch_rows);
        const Eigen::MatrixXd t = rows_of(targets, batch_rows);
        optimizer.step(params, mu, [&scratch, &x, &t](const Eigen::VectorXd& point) {
          scratch.unpack(point);
          const neural::ForwardTrace fwd = neural::forward(scratch, x);
          return neural::backward(scratch, fwd, t).pack();
        });
      }
      scratch.unpack(params);
      trace.train_rmse.push_back(
          neural::rmse_loss(neural::forward(scratch, features).probs, targets));
    }
    traces.push_back(std::move(trace));
  }
  return traces;
}

void write_epochs_header(std::ostream& out) { out << "epoch,train_rmse,val_rmse\n"; }

void append_epoch_row(std::ostream& out, const EpochStat& stat) {
  out << stat.epoch << ',' << csv::format_double(stat.train_rmse) << ','
      << csv::format_double(stat.val_rmse) << '\n';
  out.flush();
}

void write_classifiers_csv(const std::string& path, const neural::HeadSpec& head,
                           const neural::ClassifierErrors& errors) {
  const std::vector<std::string> names = classifier_names(head);
  if (names.size() != errors.rates.size()) {
    throw DataError("classifier name/rate count mismatch");
  }
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < names.size(); ++i) {
    rows.push_back({names[i], csv::format_double(errors.rates[i])});
  }
  // Unlike the per-classifier rows, the closing row reports an accuracy:
  // the fraction of records with every label correct.
  rows.push_back({"all", csv::format_double(errors.all_rate)});
  csv::write_csv(path, {"classifier", "error_rate"}, rows);
}

}  // namespace nimbus::harness
