#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "reorder/dataset.hpp"
#include "reorder/rng.hpp"

namespace reorder {

enum class SynthFamily { quadrant, stripes_h, stripes_v, center_blob, checker };

std::string_view to_string(SynthFamily family) noexcept;
SynthFamily parse_synth_family(std::string_view name);

/// Generator parameters. Every patch carries `kSynthChannels` features.
///
///  - quadrant: one quadrant holds a bright patch texture, the class is the
///    quadrant index (row-major over quadrants, so at most 4 classes).
///  - stripes_h / stripes_v: bands of period 2 * classes; the class is the
///    band phase. Each example has its own amplitude and a slow random walk
///    along every stripe.
///  - center_blob: the class is a channel signature painted on the central
///    region [H/4, H - H/4) x [W/4, W - W/4); the border carries random
///    signatures unrelated to the label.
///  - checker: a +-1 checkerboard whose block size is class + 1.
struct SynthSpec {
  SynthFamily family = SynthFamily::quadrant;
  GridSpec grid{8, 8};
  std::size_t classes = 4;
  double noise_std = 0.1;
  std::size_t train_size = 2048;
  std::size_t val_size = 512;
  std::uint64_t seed = 0;

  /// Throws ValidationError when the class count does not fit the family.
  void validate() const;
  /// Canonical single-line description stored in dataset headers.
  std::string echo() const;
};

inline constexpr std::size_t kSynthChannels = 4;

struct SynthSplits {
  Dataset train;
  Dataset val;
};

/// Pure function of the spec.
SynthSplits generate(const SynthSpec& spec);

/// Mirror the patch grid left to right.
LabeledGridExample flip_horizontal(const LabeledGridExample& example, const GridSpec& grid,
                                   std::size_t channels);

/// Binary dataset container:
///   "REOSYNTH" | u32 version | u32 H | u32 W | u32 channels | u32 classes |
///   u64 count | u32 len + spec echo | u64 FNV-1a of the record bytes |
///   count x (channels * H * W f64, u32 label)
/// Everything little-endian.
void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);

/// One JSON object per line: {"index", "label", "features"}.
std::string export_dataset_text(const Dataset& data);

}  // namespace reorder
