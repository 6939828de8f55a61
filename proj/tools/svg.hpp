#pragma once

#include <string>
#include <vector>

#include "reorder/grid_linearize.hpp"

namespace reorder::cli {

/// Polyline through the patch centres in visit order, a red dot on the first
/// cell and a black dot on the last.
std::string render_trajectory_svg(const GridSpec& grid, const std::vector<Cell>& points, const std::string& title);

}  // namespace reorder::cli
