#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "reorder/permutation.hpp"
#include "reorder/rng.hpp"

namespace reorder {

/// One learnable score per patch slot (CLS excluded).
class PolicyLogits {
 public:
  PolicyLogits() = default;
  /// Throws ValidationError on non-finite entries.
  explicit PolicyLogits(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> mutable_values() noexcept { return values_; }

  friend bool operator==(const PolicyLogits&, const PolicyLogits&) = default;

 private:
  std::vector<double> values_;
};

struct SampledPermutation {
  Permutation perm;
  double log_prob = 0.0;
  double temperature = 0.0;
  std::uint64_t gumbel_seed = 0;  // reseeding an Rng with this reproduces the noise
};

/// Linear ramp 0 .. -1 over n slots, scattered so that slot prior[k] gets the
/// k-th ramp value. ml_permutation of the result equals `prior`.
PolicyLogits init_from_prior(std::size_t n, const Permutation& prior);

/// Standard Gumbel(0,1) draw, u clamped into (eps, 1 - eps).
double sample_gumbel(Rng& rng);

/// Gumbel-top-k: descending argsort of z + tau * g. With tau == 0 the result
/// is ml_permutation(z). The log-probability is under P(. | z).
SampledPermutation sample(const PolicyLogits& z, double temperature, Rng& rng);

/// Reference sampler: sequential softmax selection without replacement.
Permutation sample_sequential(const PolicyLogits& z, Rng& rng);

/// sum_i [ z_{pi_i} - logsumexp_{k>=i} z_{pi_k} ] via a max-shifted reverse
/// cumulative log-sum-exp.
double log_prob(const PolicyLogits& z, const Permutation& perm);

/// d log P(perm | z) / dz, indexed by slot.
std::vector<double> log_prob_gradient(const PolicyLogits& z, const Permutation& perm);

/// Descending argsort of z, lower slot index first on ties.
Permutation ml_permutation(const PolicyLogits& z);
Permutation ml_permutation(std::span<const double> scores);

/// Policy snapshot: logits plus metadata. Logits are stored as hex floats so
/// the round trip is bit-exact.
struct PolicySnapshot {
  PolicyLogits logits;
  std::string prior_name;
  long epoch = -1;
  std::size_t grid_height = 0;  // 0 when unknown
  std::size_t grid_width = 0;
};

std::string format_policy_snapshot(const PolicySnapshot& snap);
PolicySnapshot parse_policy_snapshot(std::string_view text);
void write_policy_snapshot(const std::filesystem::path& path, const PolicySnapshot& snap);
PolicySnapshot read_policy_snapshot(const std::filesystem::path& path);

std::string to_hex_float(double v);
double from_hex_float(const std::string& s);

}  // namespace reorder
