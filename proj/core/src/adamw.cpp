#include "reorder/adamw.hpp"

#include <cmath>

#include "reorder/error.hpp"

namespace reorder {

AdamW::AdamW(std::size_t size, AdamWConfig config)
    : config_(config), m_(size, 0.0), v_(size, 0.0) {}

void AdamW::step(std::span<double> params, std::span<const double> grads, double lr_override) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ValidationError("AdamW::step: size mismatch");
  }
  const double lr = lr_override >= 0.0 ? lr_override : config_.learning_rate;
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const double decay = 1.0 - lr * config_.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g * g;
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] = params[i] * decay - lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

}  // namespace reorder
