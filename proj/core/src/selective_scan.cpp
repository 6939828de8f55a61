#include "reorder/selective_scan.hpp"

#include <cmath>

#include "reorder/error.hpp"

namespace reorder::ssm {

namespace {

double softplus(double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); }
double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

MatrixXd scan_forward(const MatrixXd& input, std::span<const std::size_t> order,
                      const ScanWeights& w, ScanCache* cache) {
  const auto t_len = static_cast<Eigen::Index>(order.size());
  if (t_len != input.rows() || t_len == 0) {
    throw ValidationError("scan_forward: order does not cover the input rows");
  }
  const Eigen::Index s = w.w_u.cols();
  ScanCache local;
  ScanCache& c = cache ? *cache : local;
  c.order.assign(order.begin(), order.end());
  c.x.resize(t_len, input.cols());
  for (Eigen::Index t = 0; t < t_len; ++t) c.x.row(t) = input.row(static_cast<Eigen::Index>(order[t]));

  c.u = c.x * w.w_u;
  c.b = c.x * w.w_b;
  c.c = c.x * w.w_c;
  c.pre = c.x * w.w_delta;
  c.pre.array() += w.b_delta(0, 0);
  c.delta = c.pre.unaryExpr([](double v) { return softplus(v); });
  const Eigen::RowVectorXd rate = w.log_a.row(0).array().exp();
  c.a.resize(t_len, s);
  c.h.resize(t_len, s);
  Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(s);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    c.a.row(t) = (-c.delta(t) * rate.array()).exp();
    h = c.a.row(t).cwiseProduct(h) + c.delta(t) * c.b.row(t).cwiseProduct(c.u.row(t));
    c.h.row(t) = h;
  }

  MatrixXd out(input.rows(), w.w_out.cols());
  for (Eigen::Index t = 1; t < t_len; ++t) {
    out.row(static_cast<Eigen::Index>(order[t])) = c.c.row(t).cwiseProduct(c.h.row(t)) * w.w_out;
  }
  out.row(static_cast<Eigen::Index>(order[0])) =
      c.c.row(0).cwiseProduct(c.h.row(t_len - 1)) * w.w_out;
  return out;
}

MatrixXd scan_backward(const MatrixXd& d_out, const ScanCache& c, const ScanWeights& w,
                       ScanGrads g) {
  const Eigen::Index t_len = c.x.rows();
  const Eigen::Index s = w.w_u.cols();
  const Eigen::RowVectorXd rate = w.log_a.row(0).array().exp();

  // Readout contributions.
  MatrixXd d_c = MatrixXd::Zero(t_len, s);
  MatrixXd d_h = MatrixXd::Zero(t_len, s);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    const Eigen::RowVectorXd dy = d_out.row(static_cast<Eigen::Index>(c.order[t]));
    const Eigen::Index state_t = t == 0 ? t_len - 1 : t;
    const Eigen::RowVectorXd gated = c.c.row(t).cwiseProduct(c.h.row(state_t));
    g.w_out += gated.transpose() * dy;
    const Eigen::RowVectorXd d_gated = dy * w.w_out.transpose();
    d_c.row(t) += d_gated.cwiseProduct(c.h.row(state_t));
    d_h.row(state_t) += d_gated.cwiseProduct(c.c.row(t));
  }

  MatrixXd d_u(t_len, s), d_b(t_len, s);
  Eigen::VectorXd d_pre(t_len);
  Eigen::RowVectorXd carry = Eigen::RowVectorXd::Zero(s);
  for (Eigen::Index t = t_len - 1; t >= 0; --t) {
    const Eigen::RowVectorXd dh = d_h.row(t) + carry;
    const double delta = c.delta(t);
    const Eigen::RowVectorXd h_prev =
        t > 0 ? Eigen::RowVectorXd(c.h.row(t - 1)) : Eigen::RowVectorXd::Zero(s);
    const Eigen::RowVectorXd da = dh.cwiseProduct(h_prev);
    // a = exp(-delta * rate)
    const Eigen::RowVectorXd da_dz = -(c.a.row(t).cwiseProduct(rate));
    double d_delta = da.cwiseProduct(da_dz).sum() + dh.cwiseProduct(c.b.row(t).cwiseProduct(c.u.row(t))).sum();
    g.log_a.row(0) += da.cwiseProduct(da_dz) * delta;
    d_b.row(t) = delta * dh.cwiseProduct(c.u.row(t));
    d_u.row(t) = delta * dh.cwiseProduct(c.b.row(t));
    d_pre(t) = d_delta * sigmoid(c.pre(t));
    carry = dh.cwiseProduct(c.a.row(t));
  }

  g.w_u += c.x.transpose() * d_u;
  g.w_b += c.x.transpose() * d_b;
  g.w_c += c.x.transpose() * d_c;
  g.w_delta += c.x.transpose() * d_pre;
  g.b_delta(0, 0) += d_pre.sum();

  const MatrixXd d_x = d_u * w.w_u.transpose() + d_b * w.w_b.transpose() +
                       d_c * w.w_c.transpose() + d_pre * w.w_delta.transpose();
  MatrixXd d_input = MatrixXd::Zero(d_out.rows(), c.x.cols());
  for (Eigen::Index t = 0; t < t_len; ++t) {
    d_input.row(static_cast<Eigen::Index>(c.order[t])) += d_x.row(t);
  }
  return d_input;
}

std::vector<std::size_t> forward_order(std::size_t tokens) {
  std::vector<std::size_t> o(tokens);
  for (std::size_t i = 0; i < tokens; ++i) o[i] = i;
  return o;
}

std::array<std::vector<std::size_t>, 4> four_direction_orders(const GridSpec& grid) {
  const std::size_t n = grid.size();
  std::array<std::vector<std::size_t>, 4> out;
  for (auto& o : out) {
    o.reserve(n + 1);
    o.push_back(0);
  }
  for (std::size_t k = 0; k < n; ++k) out[0].push_back(k + 1);
  for (std::size_t k = n; k-- > 0;) out[1].push_back(k + 1);
  for (std::size_t c = 0; c < grid.width; ++c) {
    for (std::size_t r = 0; r < grid.height; ++r) out[2].push_back(grid.flat_index(r, c) + 1);
  }
  for (std::size_t k = n; k-- > 0;) out[3].push_back(out[2][k + 1]);
  return out;
}

}  // namespace reorder::ssm
