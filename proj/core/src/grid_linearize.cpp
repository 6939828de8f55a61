#include "reorder/grid_linearize.hpp"

#include <algorithm>
#include <cstdlib>

namespace reorder {

void GridSpec::validate() const {
  if (height == 0 || width == 0) {
    throw ValidationError("GridSpec: height and width must be >= 1 (got " + std::to_string(height) +
                          "x" + std::to_string(width) + ")");
  }
}

std::string_view to_string(ScanOrder order) noexcept {
  switch (order) {
    case ScanOrder::row_major: return "row_major";
    case ScanOrder::column_major: return "column_major";
    case ScanOrder::hilbert: return "hilbert";
    case ScanOrder::spiral: return "spiral";
    case ScanOrder::diagonal: return "diagonal";
    case ScanOrder::snake: return "snake";
  }
  return "unknown";
}

ScanOrder parse_scan_order(std::string_view name) {
  for (ScanOrder o : kAllScanOrders) {
    if (to_string(o) == name) return o;
  }
  throw ValidationError("unknown scan order '" + std::string(name) + "'");
}

namespace {

int sign(long v) { return (v > 0) - (v < 0); }

// Python-style floor division; the gilbert recursion relies on it for negative axes.
long floor_div2(long v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); }

// Generalized Hilbert curve over the rectangle spanned by the major axis (ax, ay)
// and the minor axis (bx, by), anchored at (x, y). x is the column, y the row.
void gilbert(long x, long y, long ax, long ay, long bx, long by, std::vector<Cell>& out) {
  const long w = std::labs(ax + ay);
  const long h = std::labs(bx + by);
  const long dax = sign(ax), day = sign(ay);
  const long dbx = sign(bx), dby = sign(by);

  if (h == 1) {
    for (long i = 0; i < w; ++i, x += dax, y += day) {
      out.push_back({static_cast<std::size_t>(y), static_cast<std::size_t>(x)});
    }
    return;
  }
  if (w == 1) {
    for (long i = 0; i < h; ++i, x += dbx, y += dby) {
      out.push_back({static_cast<std::size_t>(y), static_cast<std::size_t>(x)});
    }
    return;
  }

  long ax2 = floor_div2(ax), ay2 = floor_div2(ay);
  long bx2 = floor_div2(bx), by2 = floor_div2(by);
  const long w2 = std::labs(ax2 + ay2);
  const long h2 = std::labs(bx2 + by2);

  if (2 * w > 3 * h) {
    if ((w2 % 2) != 0 && w > 2) {
      ax2 += dax;
      ay2 += day;
    }
    gilbert(x, y, ax2, ay2, bx, by, out);
    gilbert(x + ax2, y + ay2, ax - ax2, ay - ay2, bx, by, out);
  } else {
    if ((h2 % 2) != 0 && h > 2) {
      bx2 += dbx;
      by2 += dby;
    }
    gilbert(x, y, bx2, by2, ax2, ay2, out);
    gilbert(x + bx2, y + by2, ax, ay, bx - bx2, by - by2, out);
    gilbert(x + (ax - dax) + (bx2 - dbx), y + (ay - day) + (by2 - dby), -bx2, -by2,
            -(ax - ax2), -(ay - ay2), out);
  }
}

std::vector<Cell> hilbert_points(const GridSpec& g) {
  std::vector<Cell> out;
  out.reserve(g.size());
  const long w = static_cast<long>(g.width);
  const long h = static_cast<long>(g.height);
  if (w >= h) {
    gilbert(0, 0, w, 0, 0, h, out);
  } else {
    gilbert(0, 0, 0, h, w, 0, out);
  }
  return out;
}

std::vector<Cell> spiral_points(const GridSpec& g) {
  std::vector<Cell> out;
  out.reserve(g.size());
  long top = 0, left = 0;
  long bottom = static_cast<long>(g.height) - 1;
  long right = static_cast<long>(g.width) - 1;
  auto push = [&](long r, long c) {
    out.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c)});
  };
  while (top <= bottom && left <= right) {
    for (long c = left; c <= right; ++c) push(top, c);
    for (long r = top + 1; r <= bottom; ++r) push(r, right);
    if (top < bottom) {
      for (long c = right - 1; c >= left; --c) push(bottom, c);
    }
    if (left < right) {
      for (long r = bottom - 1; r > top; --r) push(r, left);
    }
    ++top;
    ++left;
    --bottom;
    --right;
  }
  return out;
}

std::vector<Cell> antidiagonal_points(const GridSpec& g, bool alternate) {
  std::vector<Cell> out;
  out.reserve(g.size());
  const std::size_t last = g.height + g.width - 2;
  for (std::size_t s = 0; s <= last; ++s) {
    const std::size_t r_lo = s >= g.width ? s - g.width + 1 : 0;
    const std::size_t r_hi = std::min(s, g.height - 1);
    const std::size_t begin = out.size();
    if (!alternate) {
      // rows ascending
      for (std::size_t r = r_lo; r <= r_hi; ++r) out.push_back({r, s - r});
    } else {
      // columns ascending == rows descending
      for (std::size_t r = r_hi + 1; r-- > r_lo;) out.push_back({r, s - r});
      if (s % 2 == 1) std::reverse(out.begin() + static_cast<long>(begin), out.end());
    }
  }
  return out;
}

}  // namespace

std::vector<Cell> trajectory_points(ScanOrder order, const GridSpec& grid) {
  grid.validate();
  std::vector<Cell> out;
  switch (order) {
    case ScanOrder::row_major:
      out.reserve(grid.size());
      for (std::size_t k = 0; k < grid.size(); ++k) out.push_back({k / grid.width, k % grid.width});
      return out;
    case ScanOrder::column_major:
      out.reserve(grid.size());
      for (std::size_t k = 0; k < grid.size(); ++k) {
        out.push_back({k % grid.height, k / grid.height});
      }
      return out;
    case ScanOrder::hilbert: return hilbert_points(grid);
    case ScanOrder::spiral: return spiral_points(grid);
    case ScanOrder::diagonal: return antidiagonal_points(grid, false);
    case ScanOrder::snake: return antidiagonal_points(grid, true);
  }
  return out;
}

Permutation linearize(ScanOrder order, const GridSpec& grid) {
  const auto cells = trajectory_points(order, grid);
  std::vector<std::size_t> mapping;
  mapping.reserve(cells.size());
  for (const Cell& c : cells) mapping.push_back(grid.flat_index(c.row, c.col));
  return Permutation(std::move(mapping));
}

}  // namespace reorder
