#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "reorder/permutation.hpp"

namespace reorder::attention {

using Eigen::MatrixXd;

/// Row-wise softmax; -inf entries get weight 0.
MatrixXd softmax_rows(const MatrixXd& m);

/// softmax((X Wq)(X Wk)^T / sqrt(d)) X Wv with d = X.cols().
MatrixXd self_attention(const MatrixXd& x, const MatrixXd& wq, const MatrixXd& wk,
                        const MatrixXd& wv);

/// Row-permutation matrix: (P X).row(k) == X.row(p[k]).
MatrixXd permutation_matrix(const Permutation& p);

/// Which (query i, key j) pairs are legal over T tokens, and where the key is
/// read from. `current` marks keys taken from the layer input; `memory` marks
/// keys taken from the cached (stop-gradient) states of the previous segment.
/// `relative` holds an index into a learned relative-position bias (-1: none).
struct AccessPattern {
  MatrixXd current;
  MatrixXd memory;
  Eigen::MatrixXi relative;
  std::size_t relative_size = 0;

  std::size_t tokens() const noexcept { return static_cast<std::size_t>(current.rows()); }
  bool has_memory() const { return memory.size() > 0 && memory.any(); }

  /// Per key position: how many query positions can read it.
  std::vector<std::size_t> coverage() const;
};

AccessPattern full_pattern(std::size_t tokens);

/// Lower-triangular: query i reads keys j <= i.
AccessPattern causal_pattern(std::size_t tokens);

/// Symmetric window: patch query i reads patch keys with |i - j| <= width / 2.
/// Position 0 (CLS) is global in both directions.
AccessPattern sliding_window_pattern(std::size_t tokens, std::size_t width);

/// Patches (positions 1..T-1) are split into segments of `segment_length`.
/// A patch query reads CLS, causal keys of its own segment, and the last
/// `memory_length` positions of the previous segment through memory. CLS reads
/// every current key. Patch-patch pairs carry a relative bias index i - j.
AccessPattern segment_recurrence_pattern(std::size_t tokens, std::size_t segment_length,
                                         std::size_t memory_length);

struct MaskedAttentionCache {
  MatrixXd input;
  MatrixXd memory_input;
  MatrixXd q, k_cur, v_cur, k_mem, v_mem;
  MatrixXd weights;  // attention probabilities, T x T
};

/// One attention layer over `input` (T x d). `memory_input` supplies the rows
/// used for memory keys/values; pass `input` itself when no cached memory is
/// being replayed. Gradients never reach `memory_input`.
MatrixXd masked_attention_forward(const MatrixXd& input, const MatrixXd& memory_input,
                                  const Eigen::Ref<const MatrixXd>& wq,
                                  const Eigen::Ref<const MatrixXd>& wk,
                                  const Eigen::Ref<const MatrixXd>& wv,
                                  std::span<const double> relative_bias,
                                  const AccessPattern& pattern, MaskedAttentionCache* cache);

struct MaskedAttentionGrads {
  Eigen::Ref<MatrixXd> wq;
  Eigen::Ref<MatrixXd> wk;
  Eigen::Ref<MatrixXd> wv;
  std::span<double> relative_bias;
};

/// Accumulates parameter gradients into `grads` and returns dL/d input.
MatrixXd masked_attention_backward(const MatrixXd& d_out, const MaskedAttentionCache& cache,
                                   const Eigen::Ref<const MatrixXd>& wq,
                                   const Eigen::Ref<const MatrixXd>& wk,
                                   const Eigen::Ref<const MatrixXd>& wv,
                                   const AccessPattern& pattern, MaskedAttentionGrads grads);

}  // namespace reorder::attention
