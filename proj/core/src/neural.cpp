#include "nimbus/neural.hpp"

#include <cmath>
#include <numeric>

#include "nimbus/error.hpp"

namespace nimbus::neural {

const char* to_string(Activation activation) {
  switch (activation) {
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
    case Activation::kLinear: return "linear";
  }
  return "?";
}

std::optional<Activation> parse_activation(std::string_view text) {
  if (text == "sigmoid") return Activation::kSigmoid;
  if (text == "tanh") return Activation::kTanh;
  if (text == "linear") return Activation::kLinear;
  return std::nullopt;
}

int HeadSpec::total_outputs() const {
  return std::accumulate(softmax_groups.begin(), softmax_groups.end(), sigmoid_count);
}

int HeadSpec::classifier_count() const {
  return static_cast<int>(softmax_groups.size()) + sigmoid_count;
}

int Network::input_size() const {
  return layers.empty() ? 0 : layers.front().fan_in();
}

int Network::output_size() const {
  return layers.empty() ? 0 : layers.back().fan_out();
}

void Network::validate() const {
  if (layers.empty()) throw ConfigError("network has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& layer = layers[i];
    if (layer.bias.size() != layer.fan_out()) {
      throw ConfigError("layer " + std::to_string(i) + " bias size mismatch");
    }
    if (i > 0 && layer.fan_in() != layers[i - 1].fan_out()) {
      throw ConfigError("layer " + std::to_string(i) + " fan-in " +
                        std::to_string(layer.fan_in()) + " does not chain from " +
                        std::to_string(layers[i - 1].fan_out()));
    }
  }
  if (layers.back().activation != Activation::kLinear) {
    throw ConfigError("final layer must be linear; the head owns the output nonlinearity");
  }
  for (const int g : head.softmax_groups) {
    if (g < 1) throw ConfigError("softmax group sizes must be >= 1");
  }
  if (head.sigmoid_count < 0) throw ConfigError("sigmoid count must be >= 0");
  if (output_size() != head.total_outputs()) {
    throw ConfigError("final layer has " + std::to_string(output_size()) +
                      " units, head expects " + std::to_string(head.total_outputs()));
  }
}

std::size_t Network::parameter_count() const {
  std::size_t count = 0;
  for (const Layer& layer : layers) {
    count += static_cast<std::size_t>(layer.fan_out()) * layer.fan_in() + layer.fan_out();
  }
  return count;
}

Eigen::VectorXd Network::pack() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index pos = 0;
  for (const Layer& layer : layers) {
    for (int r = 0; r < layer.fan_out(); ++r) {
      for (int c = 0; c < layer.fan_in(); ++c) flat[pos++] = layer.weights(r, c);
    }
    for (int r = 0; r < layer.fan_out(); ++r) flat[pos++] = layer.bias[r];
  }
  return flat;
}

void Network::unpack(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw ConfigError("parameter vector has " + std::to_string(flat.size()) +
                      " entries, network needs " + std::to_string(parameter_count()));
  }
  Eigen::Index pos = 0;
  for (Layer& layer : layers) {
    for (int r = 0; r < layer.fan_out(); ++r) {
      for (int c = 0; c < layer.fan_in(); ++c) layer.weights(r, c) = flat[pos++];
    }
    for (int r = 0; r < layer.fan_out(); ++r) layer.bias[r] = flat[pos++];
  }
}

Eigen::VectorXd Gradients::pack() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    count += static_cast<std::size_t>(weights[i].size()) + bias[i].size();
  }
  Eigen::VectorXd flat(count);
  Eigen::Index pos = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    for (int r = 0; r < weights[i].rows(); ++r) {
      for (int c = 0; c < weights[i].cols(); ++c) flat[pos++] = weights[i](r, c);
    }
    for (int r = 0; r < bias[i].size(); ++r) flat[pos++] = bias[i][r];
  }
  return flat;
}

Eigen::MatrixXd init_gaussian(int rows, int cols, double std, Rng& rng) {
  if (std <= 0.0) throw ConfigError("gaussian init needs std > 0");
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = std * rng.normal();
  }
  return m;
}

Eigen::MatrixXd init_normalized(int fan_in, int fan_out, Rng& rng) {
  if (fan_in < 1 || fan_out < 1) throw ConfigError("normalized init needs positive fans");
  const double b = std::sqrt(6.0) / std::sqrt(static_cast<double>(fan_in + fan_out));
  Eigen::MatrixXd m(fan_out, fan_in);
  for (int r = 0; r < fan_out; ++r) {
    for (int c = 0; c < fan_in; ++c) m(r, c) = rng.uniform_open(-b, b);
  }
  return m;
}

namespace {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::MatrixXd activate(const Eigen::MatrixXd& pre, Activation activation) {
  switch (activation) {
    case Activation::kSigmoid:
      return pre.unaryExpr([](double x) { return logistic(x); });
    case Activation::kTanh:
      return pre.array().tanh().matrix();
    case Activation::kLinear:
      return pre;
  }
  return pre;
}

}  // namespace

Eigen::MatrixXd apply_head(const HeadSpec& head, const Eigen::MatrixXd& logits) {
  if (logits.cols() != head.total_outputs()) {
    throw DataError("head expects " + std::to_string(head.total_outputs()) +
                    " logits, got " + std::to_string(logits.cols()));
  }
  Eigen::MatrixXd probs(logits.rows(), logits.cols());
  int offset = 0;
  for (const int group : head.softmax_groups) {
    auto block = logits.middleCols(offset, group);
    const Eigen::VectorXd row_max = block.rowwise().maxCoeff();
    Eigen::ArrayXXd shifted = (block.colwise() - row_max).array().exp();
    const Eigen::ArrayXd sums = shifted.rowwise().sum();
    probs.middleCols(offset, group) = (shifted.colwise() / sums).matrix();
    offset += group;
  }
  if (head.sigmoid_count > 0) {
    probs.middleCols(offset, head.sigmoid_count) =
        logits.middleCols(offset, head.sigmoid_count)
            .unaryExpr([](double x) { return logistic(x); });
  }
  return probs;
}

ForwardTrace forward(const Network& net, const Eigen::MatrixXd& batch) {
  net.validate();
  if (batch.cols() != net.input_size()) {
    throw DataError("batch has " + std::to_string(batch.cols()) + " columns, network takes " +
                    std::to_string(net.input_size()));
  }
  ForwardTrace trace;
  trace.input = batch;
  trace.pre.reserve(net.layers.size());
  trace.act.reserve(net.layers.size());
  const Eigen::MatrixXd* current = &trace.input;
  for (const Layer& layer : net.layers) {
    Eigen::MatrixXd pre = *current * layer.weights.transpose();
    pre.rowwise() += layer.bias.transpose();
    trace.act.push_back(activate(pre, layer.activation));
    trace.pre.push_back(std::move(pre));
    current = &trace.act.back();
  }
  trace.probs = apply_head(net.head, trace.pre.back());
  return trace;
}

double rmse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& targets) {
  if (pred.rows() != targets.rows() || pred.cols() != targets.cols()) {
    throw DataError("prediction/target shape mismatch");
  }
  const double denom = static_cast<double>(pred.rows()) * pred.cols();
  return std::sqrt((pred - targets).squaredNorm() / denom);
}

namespace {

// d(MSE)/d(logits) through the mixed head.
Eigen::MatrixXd head_backward(const HeadSpec& head, const Eigen::MatrixXd& probs,
                              const Eigen::MatrixXd& dprobs) {
  Eigen::MatrixXd dlogits(probs.rows(), probs.cols());
  int offset = 0;
  for (const int group : head.softmax_groups) {
    const Eigen::ArrayXXd p = probs.middleCols(offset, group).array();
    const Eigen::ArrayXXd d = dprobs.middleCols(offset, group).array();
    const Eigen::ArrayXd row_dot = (p * d).rowwise().sum();
    dlogits.middleCols(offset, group) = (p * (d.colwise() - row_dot)).matrix();
    offset += group;
  }
  if (head.sigmoid_count > 0) {
    const Eigen::ArrayXXd p = probs.middleCols(offset, head.sigmoid_count).array();
    const Eigen::ArrayXXd d = dprobs.middleCols(offset, head.sigmoid_count).array();
    dlogits.middleCols(offset, head.sigmoid_count) = (d * p * (1.0 - p)).matrix();
  }
  return dlogits;
}

Eigen::MatrixXd activation_deriv_from_output(const Eigen::MatrixXd& act, Activation activation) {
  switch (activation) {
    case Activation::kSigmoid:
      return (act.array() * (1.0 - act.array())).matrix();
    case Activation::kTanh:
      return (1.0 - act.array().square()).matrix();
    case Activation::kLinear:
      return Eigen::MatrixXd::Ones(act.rows(), act.cols());
  }
  return Eigen::MatrixXd::Ones(act.rows(), act.cols());
}

}  // namespace

Gradients backward(const Network& net, const ForwardTrace& trace,
                   const Eigen::MatrixXd& targets) {
  const std::size_t depth = net.layers.size();
  if (trace.pre.size() != depth || trace.act.size() != depth) {
    throw DataError("forward trace does not match the network depth");
  }
  if (trace.probs.rows() != targets.rows() || trace.probs.cols() != targets.cols()) {
    throw DataError("targets do not match traced output shape");
  }

  const double denom = static_cast<double>(targets.rows()) * targets.cols();
  const Eigen::MatrixXd dprobs = 2.0 / denom * (trace.probs - targets);

  Gradients grads;
  grads.weights.resize(depth);
  grads.bias.resize(depth);

  // The last layer is linear, so its pre-activation gradient is the head's.
  Eigen::MatrixXd delta = head_backward(net.head, trace.probs, dprobs);
  for (std::size_t i = depth; i-- > 0;) {
    const Eigen::MatrixXd& below = i == 0 ? trace.input : trace.act[i - 1];
    grads.weights[i] = delta.transpose() * below;
    grads.bias[i] = delta.colwise().sum().transpose();
    if (i > 0) {
      delta = (delta * net.layers[i].weights).cwiseProduct(
          activation_deriv_from_output(trace.act[i - 1], net.layers[i - 1].activation));
    }
  }
  return grads;
}

std::vector<int> harden(const Eigen::VectorXd& values, const HeadSpec& head) {
  if (values.size() != head.total_outputs()) {
    throw DataError("harden expects " + std::to_string(head.total_outputs()) + " values");
  }
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(head.classifier_count()));
  int offset = 0;
  for (const int group : head.softmax_groups) {
    int best = 0;
    for (int j = 1; j < group; ++j) {
      if (values[offset + j] > values[offset + best]) best = j;
    }
    labels.push_back(best);
    offset += group;
  }
  for (int j = 0; j < head.sigmoid_count; ++j) {
    labels.push_back(values[offset + j] > 0.5 ? 1 : 0);
  }
  return labels;
}

ClassifierErrors per_classifier_errors(const std::vector<std::vector<int>>& pred,
                                       const std::vector<std::vector<int>>& target) {
  if (pred.empty() || pred.size() != target.size()) {
    throw DataError("per-classifier error rates need matching nonempty label lists");
  }
  const std::size_t classifiers = pred.front().size();
  ClassifierErrors result;
  result.rates.assign(classifiers, 0.0);
  std::size_t all_correct = 0;
  for (std::size_t r = 0; r < pred.size(); ++r) {
    if (pred[r].size() != classifiers || target[r].size() != classifiers) {
      throw DataError("label row " + std::to_string(r) + " has inconsistent width");
    }
    bool row_clean = true;
    for (std::size_t c = 0; c < classifiers; ++c) {
      if (pred[r][c] != target[r][c]) {
        result.rates[c] += 1.0;
        row_clean = false;
      }
    }
    if (row_clean) ++all_correct;
  }
  const double n = static_cast<double>(pred.size());
  for (double& rate : result.rates) rate /= n;
  result.all_rate = static_cast<double>(all_correct) / n;
  return result;
}

}  // namespace nimbus::neural
