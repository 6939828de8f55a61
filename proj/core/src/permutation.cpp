#include "reorder/permutation.hpp"

#include <numeric>

namespace reorder {

bool is_bijection(std::span<const std::size_t> mapping) {
  std::vector<bool> seen(mapping.size(), false);
  for (std::size_t v : mapping) {
    if (v >= mapping.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

Permutation::Permutation(std::vector<std::size_t> mapping) : mapping_(std::move(mapping)) {
  if (!is_bijection(mapping_)) {
    throw ValidationError("Permutation: mapping of length " + std::to_string(mapping_.size()) +
                          " is not a bijection");
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::size_t> m(n);
  std::iota(m.begin(), m.end(), std::size_t{0});
  Permutation p;
  p.mapping_ = std::move(m);
  return p;
}

bool Permutation::is_identity() const noexcept {
  for (std::size_t k = 0; k < mapping_.size(); ++k) {
    if (mapping_[k] != k) return false;
  }
  return true;
}

Permutation invert(const Permutation& p) {
  std::vector<std::size_t> q(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) q[p[k]] = k;
  return Permutation(std::move(q));
}

Permutation compose(const Permutation& p, const Permutation& q) {
  if (p.size() != q.size()) {
    throw ValidationError("compose: length mismatch (" + std::to_string(p.size()) + " vs " +
                          std::to_string(q.size()) + ")");
  }
  std::vector<std::size_t> out(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) out[k] = p[q[k]];
  return Permutation(std::move(out));
}

std::uint64_t fold_permutation_hash(std::uint64_t state, const Permutation& p) {
  constexpr std::uint64_t kPrime = 1099511628211ULL;
  auto mix = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      state ^= (v >> (8 * b)) & 0xffU;
      state *= kPrime;
    }
  };
  mix(p.size());
  for (std::size_t v : p.mapping()) mix(v);
  return state;
}

std::uint64_t permutation_hash(const Permutation& p) {
  return fold_permutation_hash(kFnvOffsetBasis, p);
}

std::string to_string(const Permutation& p) {
  std::string s = "[";
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (k) s += ',';
    s += std::to_string(p[k]);
  }
  return s + "]";
}

}  // namespace reorder
