#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace reorder {

struct AdamWConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.03;
};

/// Adam with decoupled weight decay (p <- p * (1 - lr * wd) before the
/// moment step), bias-corrected moments.
class AdamW {
 public:
  AdamW() = default;
  AdamW(std::size_t size, AdamWConfig config);

  /// `lr_override` < 0 keeps config().learning_rate.
  void step(std::span<double> params, std::span<const double> grads, double lr_override = -1.0);

  const AdamWConfig& config() const noexcept { return config_; }
  std::size_t steps_taken() const noexcept { return t_; }

 private:
  AdamWConfig config_{};
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

}  // namespace reorder
