#include "reorder/attention.hpp"

#include <cmath>
#include <limits>

#include "reorder/error.hpp"

namespace reorder::attention {

MatrixXd softmax_rows(const MatrixXd& m) {
  MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.row(i).maxCoeff();
    if (!std::isfinite(mx)) {
      throw NumericError("softmax_rows: row without a finite entry");
    }
    double total = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double e = std::exp(m(i, j) - mx);
      out(i, j) = e;
      total += e;
    }
    out.row(i) /= total;
  }
  return out;
}

MatrixXd self_attention(const MatrixXd& x, const MatrixXd& wq, const MatrixXd& wk,
                        const MatrixXd& wv) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.cols()));
  const MatrixXd q = x * wq;
  const MatrixXd k = x * wk;
  return softmax_rows(scale * q * k.transpose()) * (x * wv);
}

MatrixXd permutation_matrix(const Permutation& p) {
  const auto n = static_cast<Eigen::Index>(p.size());
  MatrixXd m = MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) m(k, static_cast<Eigen::Index>(p[k])) = 1.0;
  return m;
}

std::vector<std::size_t> AccessPattern::coverage() const {
  std::vector<std::size_t> out(tokens(), 0);
  const bool mem = memory.size() > 0;
  for (Eigen::Index j = 0; j < current.cols(); ++j) {
    for (Eigen::Index i = 0; i < current.rows(); ++i) {
      if (current(i, j) != 0.0 || (mem && memory(i, j) != 0.0)) ++out[j];
    }
  }
  return out;
}

namespace {

AccessPattern empty_pattern(std::size_t tokens) {
  const auto t = static_cast<Eigen::Index>(tokens);
  AccessPattern p;
  p.current = MatrixXd::Zero(t, t);
  p.memory = MatrixXd::Zero(t, t);
  p.relative = Eigen::MatrixXi::Constant(t, t, -1);
  return p;
}

}  // namespace

AccessPattern full_pattern(std::size_t tokens) {
  AccessPattern p = empty_pattern(tokens);
  p.current.setOnes();
  return p;
}

AccessPattern causal_pattern(std::size_t tokens) {
  AccessPattern p = empty_pattern(tokens);
  for (Eigen::Index i = 0; i < p.current.rows(); ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) p.current(i, j) = 1.0;
  }
  return p;
}

AccessPattern sliding_window_pattern(std::size_t tokens, std::size_t width) {
  if (width == 0) throw ValidationError("sliding_window_pattern: width must be >= 1");
  AccessPattern p = empty_pattern(tokens);
  const auto half = static_cast<Eigen::Index>(width / 2);
  const auto t = static_cast<Eigen::Index>(tokens);
  for (Eigen::Index i = 0; i < t; ++i) {
    p.current(i, 0) = 1.0;
    p.current(0, i) = 1.0;
    for (Eigen::Index j = 1; j < t; ++j) {
      if (i >= 1 && std::abs(i - j) <= half) p.current(i, j) = 1.0;
    }
  }
  return p;
}

AccessPattern segment_recurrence_pattern(std::size_t tokens, std::size_t segment_length,
                                         std::size_t memory_length) {
  if (segment_length == 0) throw ValidationError("segment_recurrence_pattern: segment length 0");
  if (memory_length > segment_length) {
    throw ValidationError("segment_recurrence_pattern: memory longer than a segment");
  }
  AccessPattern p = empty_pattern(tokens);
  p.relative_size = segment_length + memory_length;
  const auto t = static_cast<Eigen::Index>(tokens);
  const auto seg = static_cast<Eigen::Index>(segment_length);
  const auto mem = static_cast<Eigen::Index>(memory_length);
  for (Eigen::Index j = 0; j < t; ++j) p.current(0, j) = 1.0;
  for (Eigen::Index i = 1; i < t; ++i) {
    p.current(i, 0) = 1.0;
    const Eigen::Index s = (i - 1) / seg;
    const Eigen::Index seg_begin = 1 + s * seg;
    for (Eigen::Index j = seg_begin; j <= i; ++j) {
      p.current(i, j) = 1.0;
      p.relative(i, j) = static_cast<int>(i - j);
    }
    if (s > 0) {
      for (Eigen::Index j = std::max<Eigen::Index>(seg_begin - mem, 1); j < seg_begin; ++j) {
        p.memory(i, j) = 1.0;
        p.relative(i, j) = static_cast<int>(i - j);
      }
    }
  }
  return p;
}

MatrixXd masked_attention_forward(const MatrixXd& input, const MatrixXd& memory_input,
                                  const Eigen::Ref<const MatrixXd>& wq,
                                  const Eigen::Ref<const MatrixXd>& wk,
                                  const Eigen::Ref<const MatrixXd>& wv,
                                  std::span<const double> relative_bias,
                                  const AccessPattern& pattern, MaskedAttentionCache* cache) {
  const Eigen::Index t = input.rows();
  if (static_cast<std::size_t>(t) != pattern.tokens()) {
    throw ValidationError("masked_attention_forward: token count does not match pattern");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(wq.cols()));
  const bool mem = pattern.has_memory();

  MaskedAttentionCache local;
  MaskedAttentionCache& c = cache ? *cache : local;
  c.input = input;
  c.q = input * wq;
  c.k_cur = input * wk;
  c.v_cur = input * wv;

  MatrixXd scores = scale * (c.q * c.k_cur.transpose()).cwiseProduct(pattern.current);
  if (mem) {
    c.memory_input = memory_input;
    c.k_mem = memory_input * wk;
    c.v_mem = memory_input * wv;
    scores += scale * (c.q * c.k_mem.transpose()).cwiseProduct(pattern.memory);
  }
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = 0; j < t; ++j) {
      const bool legal = pattern.current(i, j) != 0.0 || (mem && pattern.memory(i, j) != 0.0);
      if (!legal) {
        scores(i, j) = neg_inf;
      } else if (pattern.relative(i, j) >= 0) {
        scores(i, j) += relative_bias[static_cast<std::size_t>(pattern.relative(i, j))];
      }
    }
  }
  c.weights = softmax_rows(scores);
  if (!mem) return c.weights * c.v_cur;
  return c.weights.cwiseProduct(pattern.current) * c.v_cur +
         c.weights.cwiseProduct(pattern.memory) * c.v_mem;
}

MatrixXd masked_attention_backward(const MatrixXd& d_out, const MaskedAttentionCache& c,
                                   const Eigen::Ref<const MatrixXd>& wq,
                                   const Eigen::Ref<const MatrixXd>& wk,
                                   const Eigen::Ref<const MatrixXd>& wv,
                                   const AccessPattern& pattern, MaskedAttentionGrads grads) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(wq.cols()));
  const bool mem = pattern.has_memory();
  const MatrixXd& a = c.weights;

  MatrixXd d_weights;
  if (mem) {
    d_weights = (d_out * c.v_cur.transpose()).cwiseProduct(pattern.current) +
                (d_out * c.v_mem.transpose()).cwiseProduct(pattern.memory);
  } else {
    d_weights = d_out * c.v_cur.transpose();
  }
  // softmax backward, row by row
  const Eigen::VectorXd row_dot = a.cwiseProduct(d_weights).rowwise().sum();
  MatrixXd d_scores = a.cwiseProduct(d_weights.colwise() - row_dot);

  if (!grads.relative_bias.empty()) {
    for (Eigen::Index i = 0; i < d_scores.rows(); ++i) {
      for (Eigen::Index j = 0; j < d_scores.cols(); ++j) {
        const int r = pattern.relative(i, j);
        if (r >= 0) grads.relative_bias[static_cast<std::size_t>(r)] += d_scores(i, j);
      }
    }
  }

  const MatrixXd ds_cur = scale * d_scores.cwiseProduct(pattern.current);
  MatrixXd d_q = ds_cur * c.k_cur;
  const MatrixXd d_k_cur = ds_cur.transpose() * c.q;
  const MatrixXd d_v_cur =
      (mem ? a.cwiseProduct(pattern.current) : a).transpose() * d_out;

  if (mem) {
    const MatrixXd ds_mem = scale * d_scores.cwiseProduct(pattern.memory);
    d_q += ds_mem * c.k_mem;
    const MatrixXd d_k_mem = ds_mem.transpose() * c.q;
    const MatrixXd d_v_mem = a.cwiseProduct(pattern.memory).transpose() * d_out;
    grads.wk += c.memory_input.transpose() * d_k_mem;
    grads.wv += c.memory_input.transpose() * d_v_mem;
  }

  grads.wq += c.input.transpose() * d_q;
  grads.wk += c.input.transpose() * d_k_cur;
  grads.wv += c.input.transpose() * d_v_cur;

  return d_q * wq.transpose() + d_k_cur * wk.transpose() + d_v_cur * wv.transpose();
}

}  // namespace reorder::attention
