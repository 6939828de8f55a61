#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "reorder/grid_linearize.hpp"

namespace reorder {

/// One grid of patches. `features` is patch-major: patch p (row-major flat
/// index) occupies [p * channels, (p + 1) * channels).
struct LabeledGridExample {
  std::vector<double> features;
  std::uint32_t label = 0;

  friend bool operator==(const LabeledGridExample&, const LabeledGridExample&) = default;
};

struct Dataset {
  GridSpec grid;
  std::size_t channels = 4;
  std::size_t classes = 0;
  std::vector<LabeledGridExample> examples;
  std::string spec_echo;  // generator parameters, free-form text

  std::size_t size() const noexcept { return examples.size(); }
  bool empty() const noexcept { return examples.empty(); }
  /// Throws ValidationError on wrong feature lengths, non-finite values or
  /// out-of-range labels.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace reorder
