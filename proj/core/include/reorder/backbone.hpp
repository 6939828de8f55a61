#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "reorder/attention.hpp"
#include "reorder/dataset.hpp"
#include "reorder/param_set.hpp"
#include "reorder/permutation.hpp"

namespace reorder {

enum class BackboneKind {
  full_attention,
  windowed_attention,
  segment_recurrence,
  ssm_scan,
  ssm_scan_4dir,
};

std::string_view to_string(BackboneKind kind) noexcept;
BackboneKind parse_backbone_kind(std::string_view name);
bool is_attention_kind(BackboneKind kind) noexcept;

/// Where a patch token's positional embedding comes from.
///  - sequence: row k+1 of the table, k being the token's sequence position.
///  - patch: row p+1, p being the token's source patch (the embedding travels
///    with the patch; the model is then blind to the ordering except through
///    the mixer).
enum class PositionMode { sequence, patch };

std::string_view to_string(PositionMode mode) noexcept;
PositionMode parse_position_mode(std::string_view name);

struct BackboneConfig {
  BackboneKind kind = BackboneKind::full_attention;
  GridSpec grid{4, 4};
  std::size_t channels = 4;
  std::size_t classes = 4;
  std::size_t embed_dim = 32;
  std::size_t depth = 2;
  std::size_t mlp_dim = 0;         // 0 -> 2 * embed_dim
  std::size_t window = 3;          // windowed_attention
  std::size_t segment_length = 0;  // segment_recurrence; 0 -> max(1, n / 4)
  long memory_length = -1;         // segment_recurrence; -1 -> segment_length
  std::size_t state_dim = 16;      // ssm kinds
  PositionMode position_mode = PositionMode::sequence;

  std::size_t patch_count() const noexcept { return grid.size(); }
  std::size_t tokens() const noexcept { return grid.size() + 1; }
  /// Defaults filled in; throws ValidationError on inconsistent values.
  BackboneConfig resolved() const;
};

/// Small sequence classifier: patch projection, CLS token at position 0,
/// learned absolute positional embeddings, `depth` residual blocks of
/// (mixer, tanh MLP), linear head on the CLS row.
class ToyBackbone {
 public:
  /// Per-layer inputs of one example; replaying them as segment memory makes
  /// the cached states constants of the loss.
  using LayerInputs = std::vector<Eigen::MatrixXd>;

  ToyBackbone(const BackboneConfig& config, std::uint64_t seed);
  ToyBackbone(const BackboneConfig& config, ParamSet params);

  ToyBackbone(const ToyBackbone&);
  ToyBackbone& operator=(const ToyBackbone&);
  ToyBackbone(ToyBackbone&&) noexcept;
  ToyBackbone& operator=(ToyBackbone&&) noexcept;
  ~ToyBackbone();

  const BackboneConfig& config() const noexcept;
  const ParamSet& params() const noexcept { return params_; }
  ParamSet& params() noexcept { return params_; }
  std::size_t patch_count() const noexcept;

  /// Class probabilities for one example presented in `perm` order.
  std::vector<double> forward(std::span<const double> features, const Permutation& perm) const;

  /// Final hidden states, (n + 1) x d, row 0 is CLS.
  Eigen::MatrixXd hidden_states(std::span<const double> features, const Permutation& perm) const;

  /// Inputs of every layer, for replaying segment memory.
  LayerInputs layer_inputs(std::span<const double> features, const Permutation& perm) const;

  struct BatchResult {
    double mean_loss = 0.0;
    std::size_t correct = 0;
    std::size_t cls_position = 0;  // sequence position the CLS token was written to
    std::vector<std::uint64_t> example_perm_hashes;  // token order actually used per example
  };

  /// Mean cross-entropy of `batch` under one shared permutation. When `grad`
  /// is non-null it is resized to the parameter layout, zeroed and filled with
  /// d(mean loss)/d(params). `replay_memory`, if given, holds one LayerInputs
  /// per example. Throws NumericError on a non-finite loss.
  BatchResult loss_and_gradient(std::span<const LabeledGridExample> batch, const Permutation& perm,
                                ParamSet* grad,
                                const std::vector<LayerInputs>* replay_memory = nullptr) const;

  /// Number of prediction rows whose class probabilities argmax to the label.
  std::size_t count_correct(std::span<const LabeledGridExample> batch, const Permutation& perm) const;

  /// Per sequence position (0 = CLS): how many output positions can read it.
  /// Attention kinds count from the access pattern; scan kinds count output
  /// tokens whose L2-norm gradient w.r.t. that input embedding exceeds
  /// `threshold` (evaluated on `probe` features or a fixed pseudo-random probe).
  std::vector<std::size_t> attention_coverage(double threshold = 0.0,
                                              std::span<const double> probe = {}) const;

  /// Access pattern used by attention kinds (empty pattern otherwise).
  const attention::AccessPattern& access_pattern() const;

 private:
  struct Impl;
  ParamSet params_;
  std::unique_ptr<Impl> impl_;
};

void save_checkpoint(const std::filesystem::path& path, const ToyBackbone& model);
ToyBackbone load_checkpoint(const std::filesystem::path& path);

}  // namespace reorder
