#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "reorder/grid_linearize.hpp"

namespace reorder::ssm {

using Eigen::MatrixXd;
using ConstRef = Eigen::Ref<const MatrixXd>;
using MutRef = Eigen::Ref<MatrixXd>;

/// Selective diagonal state-space scan over tokens visited in `order`
/// (order[0] must be the CLS row). For the token x_t at step t:
///
///   delta_t = softplus(x_t . w_delta + b_delta)
///   a_t     = exp(-delta_t * exp(log_a))            (elementwise, S)
///   h_t     = a_t * h_{t-1} + delta_t * (x_t W_b) * (x_t W_u)
///   y_t     = ((x_t W_c) * h_t) W_out               (t >= 1)
///
/// The CLS row reads the final state: y_cls = ((x_0 W_c) * h_{T-1}) W_out.
struct ScanWeights {
  ConstRef w_u;      // d x S
  ConstRef w_b;      // d x S
  ConstRef w_c;      // d x S
  ConstRef w_delta;  // d x 1
  ConstRef b_delta;  // 1 x 1
  ConstRef log_a;    // 1 x S
  ConstRef w_out;    // S x d
};

struct ScanGrads {
  MutRef w_u;
  MutRef w_b;
  MutRef w_c;
  MutRef w_delta;
  MutRef b_delta;
  MutRef log_a;
  MutRef w_out;
};

struct ScanCache {
  std::vector<std::size_t> order;
  MatrixXd x;                      // T x d, rows in scan order
  MatrixXd u, b, c, a, h;          // T x S, rows in scan order
  Eigen::VectorXd pre, delta;      // T
};

MatrixXd scan_forward(const MatrixXd& input, std::span<const std::size_t> order,
                      const ScanWeights& w, ScanCache* cache);

/// Accumulates into `g`; returns dL/d input (rows in input order).
MatrixXd scan_backward(const MatrixXd& d_out, const ScanCache& cache, const ScanWeights& w,
                       ScanGrads g);

/// Scan orders over tokens 0..n where token k+1 is sequence slot k laid out
/// row-major on `grid`: forward, backward, column-wise down, column-wise up.
/// Every order starts with token 0 (CLS).
std::array<std::vector<std::size_t>, 4> four_direction_orders(const GridSpec& grid);

std::vector<std::size_t> forward_order(std::size_t tokens);

}  // namespace reorder::ssm
