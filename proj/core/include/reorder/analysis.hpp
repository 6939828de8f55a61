#pragma once

#include <vector>

#include "reorder/grid_linearize.hpp"
#include "reorder/permutation.hpp"

namespace reorder {

/// Row-major flags for the central block [H/4, H - H/4) x [W/4, W - W/4).
/// Grids smaller than 4 along an axis keep the middle row/column.
std::vector<bool> center_region(const GridSpec& grid);

/// Flags for an explicit list of patches.
std::vector<bool> region_from_patches(const GridSpec& grid, const std::vector<std::size_t>& patches);

/// Sequence position of every patch under `perm`: position[perm[k]] = k.
std::vector<std::size_t> patch_positions(const Permutation& perm);

/// Mean over flagged patches of (position under `base` - position under
/// `learned`). Positive means the region moved toward the front.
/// Throws ValidationError on an empty region or mismatched sizes.
double positional_shift_stats(const Permutation& learned, const Permutation& base, const std::vector<bool>& region);

}  // namespace reorder
