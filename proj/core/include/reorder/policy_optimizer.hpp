#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reorder/adamw.hpp"
#include "reorder/backbone.hpp"
#include "reorder/dataset.hpp"
#include "reorder/grid_linearize.hpp"
#include "reorder/pl_policy.hpp"
#include "reorder/rng.hpp"

namespace reorder {

struct BaselineState {
  double b = 0.0;
  double beta = 0.99;
};

/// b' = beta * b + (1 - beta) * r.
BaselineState update_baseline(BaselineState state, double reward);

struct CurriculumSchedule {
  std::size_t warmup_epochs = 15;   // N
  std::size_t policy_epochs = 30;   // M
  double peak_temperature = 0.2;
};

/// Triangle: 0 at epoch N, peak at N + M/2, back to 0 at N + M; 0 outside.
double temperature_at(const CurriculumSchedule& sched, std::size_t epoch);

enum class Phase { warmup, policy, freeze };

std::string_view to_string(Phase phase) noexcept;
Phase phase_at(const CurriculumSchedule& sched, std::size_t epoch);

struct PolicyLearnerConfig {
  AdamWConfig optimizer{};     // learning_rate is the policy rate
  double baseline_momentum = 0.99;
  /// Compute A = r - b with the baseline from before this step's update.
  /// Off: update b first, then A = r - b'.
  bool advantage_before_update = false;
  /// Seed b with the first observed reward instead of 0.
  bool baseline_warm_start = true;
};

struct PolicyStep {
  double reward = 0.0;
  double baseline = 0.0;   // after the update
  double advantage = 0.0;
  bool updated_logits = false;
};

/// Plackett-Luce logits, their optimizer and the reward baseline.
class PolicyLearner {
 public:
  PolicyLearner(PolicyLogits initial, PolicyLearnerConfig config);

  const PolicyLogits& logits() const noexcept { return z_; }
  const BaselineState& baseline() const noexcept { return baseline_; }
  const PolicyLearnerConfig& config() const noexcept { return config_; }

  SampledPermutation sample(double temperature, Rng& rng) const { return reorder::sample(z_, temperature, rng); }

  /// Records reward `r` for `perm`. When `update_logits` is set the logits
  /// take one optimizer step on -A * log P(perm | z).
  PolicyStep observe(const Permutation& perm, double reward, bool update_logits);

 private:
  PolicyLogits z_;
  PolicyLearnerConfig config_;
  AdamW optimizer_;
  BaselineState baseline_;
  bool seen_reward_ = false;
};

enum class TrainMode { reorder, fixed_order, static_random, per_batch_random, replay_learned };

std::string_view to_string(TrainMode mode) noexcept;
/// Accepts the enum names plus the short CLI aliases "fixed" and "replay".
TrainMode parse_train_mode(std::string_view name);

struct TrainConfig {
  TrainMode mode = TrainMode::reorder;
  BackboneConfig backbone{};
  ScanOrder base_order = ScanOrder::row_major;
  std::optional<Permutation> prior;          // defaults to the base order
  std::optional<PolicyLogits> replay_logits; // replay_learned
  CurriculumSchedule schedule{};
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double backbone_lr = 1e-4;
  double backbone_rl_lr = 1e-5;  // backbone rate while the policy trains
  AdamWConfig optimizer{};       // betas, eps, decay shared by both parameter sets
  PolicyLearnerConfig policy{};  // policy.optimizer.learning_rate = policy rate
  bool horizontal_flip = false;  // p = 0.5 per training example
  std::uint64_t seed = 0;
  bool record_batches = true;

  /// Throws ValidationError on inconsistent settings.
  void validate(const Dataset& train) const;
};

struct BatchRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  std::uint64_t perm_hash = 0;
  std::size_t cls_position = 0;
  std::size_t distinct_example_perms = 0;
  double temperature = 0.0;
  double loss = 0.0;
  double reward = 0.0;
  double baseline = 0.0;
  double advantage = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  Phase phase = Phase::warmup;
  double temperature = 0.0;
  double ce_loss = 0.0;
  double reward = 0.0;
  double baseline = 0.0;
  double advantage_mean = 0.0;
  std::optional<double> val_accuracy;
  std::uint64_t perm_hash = 0;  // fold of the epoch's batch permutations
  Permutation eval_perm;        // ordering used for validation
};

struct TrainResult {
  ToyBackbone model;
  PolicyLogits logits;
  Permutation final_perm;  // ordering a deployed model would use
  std::vector<EpochRecord> epochs;
  std::vector<BatchRecord> batches;
  std::vector<PolicySnapshot> snapshots;
};

/// Fraction of `data` classified correctly under `perm`.
double accuracy(const ToyBackbone& model, const Dataset& data, const Permutation& perm);

/// Runs the curriculum (mode reorder) or a baseline regime. `val` may be
/// empty. Throws NumericError naming the epoch and batch on a non-finite loss.
TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& val);

/// The three-phase REINFORCE curriculum.
TrainResult run_curriculum(TrainConfig config, const Dataset& train_set, const Dataset& val);
/// Non-learned permutation regimes; `mode` must not be reorder.
TrainResult run_baseline_mode(TrainMode mode, TrainConfig config, const Dataset& train_set, const Dataset& val);

}  // namespace reorder
