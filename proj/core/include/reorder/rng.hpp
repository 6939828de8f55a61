#pragma once

#include <random>

namespace reorder {

/// The one engine used everywhere; mt19937_64 output is fixed by the standard.
using Rng = std::mt19937_64;

}  // namespace reorder
