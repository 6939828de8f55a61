#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "reorder/backbone.hpp"
#include "reorder/dataset.hpp"
#include "reorder/permutation.hpp"
#include "reorder/rng.hpp"

namespace reorder::testing {

inline Permutation random_perm(std::size_t n, Rng& rng) {
  std::vector<std::size_t> m(n);
  std::iota(m.begin(), m.end(), std::size_t{0});
  std::shuffle(m.begin(), m.end(), rng);
  return Permutation(std::move(m));
}

inline std::vector<double> random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

inline std::vector<LabeledGridExample> random_batch(std::size_t count, const BackboneConfig& cfg, Rng& rng) {
  std::vector<LabeledGridExample> out;
  std::uniform_int_distribution<std::uint32_t> label(0, static_cast<std::uint32_t>(cfg.classes - 1));
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back({random_vector(cfg.patch_count() * cfg.channels, rng), label(rng)});
  }
  return out;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Norm-wise relative error of an analytic gradient block against central
/// differences of `loss` over the same parameters.
struct BlockError {
  std::string name;
  double relative = 0.0;
  double analytic_norm = 0.0;
};

inline std::vector<BlockError> finite_difference_check(ToyBackbone& model, const ParamSet& analytic,
                                                       const std::function<double()>& loss, double step = 1e-4) {
  std::vector<BlockError> out;
  auto flat = model.params().flat();
  const auto grads = analytic.flat();
  for (const auto& e : model.params().entries()) {
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t k = e.offset; k < e.offset + e.size(); ++k) {
      const double keep = flat[k];
      flat[k] = keep + step;
      const double up = loss();
      flat[k] = keep - step;
      const double down = loss();
      flat[k] = keep;
      const double fd = (up - down) / (2 * step);
      diff2 += (fd - grads[k]) * (fd - grads[k]);
      a2 += grads[k] * grads[k];
      n2 += fd * fd;
    }
    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-6});
    out.push_back({e.name, std::sqrt(diff2) / denom, std::sqrt(a2)});
  }
  return out;
}

/// pos[i] = sequence position item i lands at under `p`.
inline std::vector<std::size_t> positions_of(const Permutation& p) {
  std::vector<std::size_t> pos(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) pos[p[k]] = k;
  return pos;
}

}  // namespace reorder::testing
