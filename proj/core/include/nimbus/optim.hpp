#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <optional>
#include <string_view>

namespace nimbus::optim {

enum class Rule { kSgd, kCm, kNag };

const char* to_string(Rule rule);
std::optional<Rule> parse_rule(std::string_view text);

/// `initial` holds through epoch `switch_epoch` (1-based), `later` after.
struct MomentumSchedule {
  double initial = 0.5;
  double later = 0.9;
  int switch_epoch = 5;
};

double momentum_at_epoch(const MomentumSchedule& schedule, int epoch);

/// Gradient of the objective at an arbitrary parameter point. NAG evaluates
/// it away from the current iterate, so the callable must not capture
/// position-dependent state.
using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Flat-vector optimizer. One instance owns the velocity for one parameter
/// vector across a training run.
///
///   SGD:  theta -= eps * g(theta)
///   CM:   v = mu*v - eps*g(theta);        theta += v
///   NAG:  v = mu*v - eps*g(theta + mu*v); theta += v
///
/// SGD runs through the CM path with mu forced to 0, which makes the mu=0
/// bit-equivalence between the rules hold by construction. When
/// weight_decay > 0 the term decay*point is added to the gradient at the
/// same point the data gradient is taken.
class Optimizer {
 public:
  Optimizer(Rule rule, double learning_rate, double weight_decay = 0.0);

  void step(Eigen::VectorXd& params, double mu, const GradFn& grad_fn);

  Rule rule() const { return rule_; }
  const Eigen::VectorXd& velocity() const { return velocity_; }

 private:
  Rule rule_;
  double learning_rate_;
  double weight_decay_;
  Eigen::VectorXd velocity_;  // sized lazily on the first step
};

/// Strictly-greater error comparisons against the immediately previous
/// epoch; `patience` consecutive increases stop the run. A non-increase
/// resets the counter. The caller snapshots whenever best_updated() reports
/// a new minimum.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience = 2);

  /// Records one epoch's validation error. Returns true when training
  /// should stop.
  bool observe(double epoch_error);

  bool best_updated() const { return best_updated_; }
  int best_epoch() const { return best_epoch_; }
  double best_error() const { return best_error_; }
  int consecutive_increases() const { return consecutive_increases_; }

 private:
  int patience_;
  int epoch_ = 0;
  int best_epoch_ = 0;
  int consecutive_increases_ = 0;
  bool best_updated_ = false;
  double best_error_ = std::numeric_limits<double>::infinity();
  double previous_error_ = std::numeric_limits<double>::infinity();
};

}  // namespace nimbus::optim
