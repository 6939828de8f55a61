#include "reorder/analysis.hpp"

#include "reorder/error.hpp"

namespace reorder {

namespace {

std::pair<std::size_t, std::size_t> middle_band(std::size_t extent) {
  if (extent < 4) return {(extent - 1) / 2, extent / 2 + 1};
  return {extent / 4, extent - extent / 4};
}

}  // namespace

std::vector<bool> center_region(const GridSpec& grid) {
  grid.validate();
  const auto [r0, r1] = middle_band(grid.height);
  const auto [c0, c1] = middle_band(grid.width);
  std::vector<bool> region(grid.size(), false);
  for (std::size_t r = r0; r < r1; ++r) {
    for (std::size_t c = c0; c < c1; ++c) region[grid.flat_index(r, c)] = true;
  }
  return region;
}

std::vector<bool> region_from_patches(const GridSpec& grid, const std::vector<std::size_t>& patches) {
  std::vector<bool> region(grid.size(), false);
  for (auto p : patches) {
    if (p >= grid.size()) throw ValidationError("patch " + std::to_string(p) + " outside the grid");
    region[p] = true;
  }
  return region;
}

std::vector<std::size_t> patch_positions(const Permutation& perm) {
  const Permutation inv = invert(perm);
  return {inv.mapping().begin(), inv.mapping().end()};
}

double positional_shift_stats(const Permutation& learned, const Permutation& base, const std::vector<bool>& region) {
  if (learned.size() != base.size() || region.size() != base.size()) {
    throw ValidationError("positional_shift_stats: permutation and region sizes differ");
  }
  const auto pos_learned = patch_positions(learned);
  const auto pos_base = patch_positions(base);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < region.size(); ++p) {
    if (!region[p]) continue;
    sum += static_cast<double>(pos_base[p]) - static_cast<double>(pos_learned[p]);
    ++count;
  }
  if (count == 0) throw ValidationError("positional_shift_stats: empty region");
  return sum / static_cast<double>(count);
}

}  // namespace reorder
