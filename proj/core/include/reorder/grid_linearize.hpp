#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "reorder/permutation.hpp"

namespace reorder {

/// Patch grid geometry. Patches are stored row-major: flat index r * width + c.
struct GridSpec {
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const noexcept { return height * width; }
  std::size_t flat_index(std::size_t r, std::size_t c) const noexcept { return r * width + c; }
  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

enum class ScanOrder { row_major, column_major, hilbert, spiral, diagonal, snake };

inline constexpr std::array<ScanOrder, 6> kAllScanOrders = {
    ScanOrder::row_major, ScanOrder::column_major, ScanOrder::hilbert,
    ScanOrder::spiral,    ScanOrder::diagonal,     ScanOrder::snake};

std::string_view to_string(ScanOrder order) noexcept;

/// Accepts the names produced by to_string. Throws ValidationError otherwise.
ScanOrder parse_scan_order(std::string_view name);

struct Cell {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// The (r_k, c_k) visit sequence of `order` over `grid`.
///
/// Conventions:
///  - diagonal: anti-diagonals s = r + c ascending, rows ascending inside each.
///  - snake: anti-diagonals ascending; columns ascending on even s, descending on odd s.
///  - spiral: starts at (0,0) and walks right, down, left, up along shrinking perimeters.
///  - hilbert: generalized Hilbert ("gilbert") construction starting at (0,0). On
///    2^k x 2^k grids it is the classical curve (unit steps); on other rectangles
///    it is a bijection that may contain a few diagonal steps.
std::vector<Cell> trajectory_points(ScanOrder order, const GridSpec& grid);

/// mapping[k] = r_k * W + c_k.
Permutation linearize(ScanOrder order, const GridSpec& grid);

}  // namespace reorder
