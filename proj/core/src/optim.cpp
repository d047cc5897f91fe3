#include "nimbus/optim.hpp"

#include <cmath>

#include "nimbus/error.hpp"

namespace nimbus::optim {

const char* to_string(Rule rule) {
  switch (rule) {
    case Rule::kSgd: return "sgd";
    case Rule::kCm: return "cm";
    case Rule::kNag: return "nag";
  }
  return "?";
}

std::optional<Rule> parse_rule(std::string_view text) {
  if (text == "sgd") return Rule::kSgd;
  if (text == "cm") return Rule::kCm;
  if (text == "nag") return Rule::kNag;
  return std::nullopt;
}

double momentum_at_epoch(const MomentumSchedule& schedule, int epoch) {
  if (epoch < 1) throw ConfigError("epochs are 1-based");
  return epoch <= schedule.switch_epoch ? schedule.initial : schedule.later;
}

Optimizer::Optimizer(Rule rule, double learning_rate, double weight_decay)
    : rule_(rule), learning_rate_(learning_rate), weight_decay_(weight_decay) {
  if (learning_rate <= 0.0) throw ConfigError("learning rate must be > 0");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be >= 0");
}

void Optimizer::step(Eigen::VectorXd& params, double mu, const GradFn& grad_fn) {
  if (velocity_.size() == 0) velocity_ = Eigen::VectorXd::Zero(params.size());
  if (velocity_.size() != params.size()) {
    throw ConfigError("optimizer velocity does not match the parameter vector");
  }
  const double effective_mu = rule_ == Rule::kSgd ? 0.0 : mu;

  const auto gradient_at = [&](const Eigen::VectorXd& point) {
    Eigen::VectorXd g = grad_fn(point);
    if (g.size() != params.size()) {
      throw ConfigError("gradient size does not match the parameter vector");
    }
    if (weight_decay_ > 0.0) g += weight_decay_ * point;
    if (!g.allFinite()) {
      throw NumericError("non-finite gradient under rule " + std::string(to_string(rule_)));
    }
    return g;
  };

  Eigen::VectorXd g;
  if (rule_ == Rule::kNag && effective_mu != 0.0) {
    g = gradient_at(params + effective_mu * velocity_);
  } else {
    g = gradient_at(params);
  }
  velocity_ = effective_mu * velocity_ - learning_rate_ * g;
  params += velocity_;
}

EarlyStopper::EarlyStopper(int patience) : patience_(patience) {
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

bool EarlyStopper::observe(double epoch_error) {
  if (!std::isfinite(epoch_error)) throw NumericError("non-finite validation error");
  ++epoch_;
  best_updated_ = epoch_error < best_error_;
  if (best_updated_) {
    best_error_ = epoch_error;
    best_epoch_ = epoch_;
  }
  if (epoch_ > 1 && epoch_error > previous_error_) {
    ++consecutive_increases_;
  } else {
    consecutive_increases_ = 0;
  }
  previous_error_ = epoch_error;
  return consecutive_increases_ >= patience_;
}

}  // namespace nimbus::optim
