#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "reorder/error.hpp"

namespace reorder {

/// A bijection on {0, ..., n-1} in gather convention: position k of a
/// permuted sequence holds element `mapping[k]` of the source sequence.
class Permutation {
 public:
  Permutation() = default;

  /// Throws ValidationError unless `mapping` is a bijection.
  explicit Permutation(std::vector<std::size_t> mapping);

  static Permutation identity(std::size_t n);

  std::size_t size() const noexcept { return mapping_.size(); }
  bool empty() const noexcept { return mapping_.empty(); }
  std::size_t operator[](std::size_t k) const { return mapping_[k]; }
  std::span<const std::size_t> mapping() const noexcept { return mapping_; }

  bool is_identity() const noexcept;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::size_t> mapping_;
};

bool is_bijection(std::span<const std::size_t> mapping);

/// q with q[p[k]] = k.
Permutation invert(const Permutation& p);

/// (p o q)[k] = p[q[k]]. Throws ValidationError on length mismatch.
Permutation compose(const Permutation& p, const Permutation& q);

/// 64-bit FNV-1a over the mapping; stable across runs and platforms.
std::uint64_t permutation_hash(const Permutation& p);

/// Folds another permutation into a running FNV-1a state.
std::uint64_t fold_permutation_hash(std::uint64_t state, const Permutation& p);

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;

std::string to_string(const Permutation& p);

/// output[k] = items[p[k]].
template <typename T>
std::vector<T> apply_to_sequence(const Permutation& p, std::span<const T> items) {
  if (items.size() != p.size()) {
    throw ValidationError("apply_to_sequence: permutation of length " + std::to_string(p.size()) +
                          " applied to sequence of length " + std::to_string(items.size()));
  }
  std::vector<T> out;
  out.reserve(items.size());
  for (std::size_t k = 0; k < p.size(); ++k) out.push_back(items[p[k]]);
  return out;
}

template <typename T>
std::vector<T> apply_to_sequence(const Permutation& p, const std::vector<T>& items) {
  return apply_to_sequence(p, std::span<const T>(items));
}

}  // namespace reorder
