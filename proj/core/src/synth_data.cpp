#include "reorder/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include <json.hpp>

#include "reorder/binary_io.hpp"
#include "reorder/error.hpp"
#include "reorder/permutation.hpp"

namespace reorder {

namespace {

constexpr char kMagic[8] = {'R', 'E', 'O', 'S', 'Y', 'N', 'T', 'H'};
constexpr std::uint32_t kVersion = 1;

struct FamilyName {
  SynthFamily family;
  std::string_view name;
};

constexpr FamilyName kFamilyNames[] = {
    {SynthFamily::quadrant, "quadrant"},       {SynthFamily::stripes_h, "stripes_h"},
    {SynthFamily::stripes_v, "stripes_v"},     {SynthFamily::center_blob, "center_blob"},
    {SynthFamily::checker, "checker"},
};

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Feature buffer of one example before noise.
class Canvas {
 public:
  Canvas(const GridSpec& grid) : grid_(grid), data_(grid.size() * kSynthChannels, 0.0) {}
  double& at(std::size_t r, std::size_t c, std::size_t ch) {
    return data_[grid_.flat_index(r, c) * kSynthChannels + ch];
  }
  void fill_patch(std::size_t r, std::size_t c, double v) {
    for (std::size_t ch = 0; ch < kSynthChannels; ++ch) at(r, c, ch) = v;
  }
  std::vector<double> take() { return std::move(data_); }

 private:
  GridSpec grid_;
  std::vector<double> data_;
};

class Painter {
 public:
  Painter(const SynthSpec& spec, Rng& rng) : spec_(spec), rng_(rng) {}

  std::vector<double> paint(std::uint32_t label) {
    Canvas canvas(spec_.grid);
    switch (spec_.family) {
      case SynthFamily::quadrant: quadrant(canvas, label); break;
      case SynthFamily::stripes_h: stripes(canvas, label, true); break;
      case SynthFamily::stripes_v: stripes(canvas, label, false); break;
      case SynthFamily::center_blob: center_blob(canvas, label); break;
      case SynthFamily::checker: checker(canvas, label); break;
    }
    std::vector<double> features = canvas.take();
    if (spec_.noise_std > 0.0) {
      std::normal_distribution<double> noise(0.0, spec_.noise_std);
      for (double& v : features) v += noise(rng_);
    }
    return features;
  }

 private:
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  void quadrant(Canvas& canvas, std::uint32_t label) {
    const std::size_t H = spec_.grid.height;
    const std::size_t W = spec_.grid.width;
    const std::size_t hr = (H + 1) / 2;
    const std::size_t hc = (W + 1) / 2;
    const std::size_t r0 = (label / 2) * hr;
    const std::size_t c0 = (label % 2) * hc;
    const double amp = uniform(0.8, 1.2);
    for (std::size_t r = r0; r < std::min(H, r0 + hr); ++r) {
      for (std::size_t c = c0; c < std::min(W, c0 + hc); ++c) {
        for (std::size_t ch = 0; ch < kSynthChannels; ++ch) {
          const double sign = ((r + c + ch) % 2 == 0) ? 1.0 : -0.5;
          canvas.at(r, c, ch) = amp * sign;
        }
      }
    }
  }

  void stripes(Canvas& canvas, std::uint32_t label, bool horizontal) {
    const std::size_t H = spec_.grid.height;
    const std::size_t W = spec_.grid.width;
    const std::size_t period = 2 * spec_.classes;
    const double amp = uniform(0.5, 1.5);
    std::normal_distribution<double> step(0.0, 0.15);
    const std::size_t across = horizontal ? H : W;
    const std::size_t along = horizontal ? W : H;
    for (std::size_t a = 0; a < across; ++a) {
      const bool on = (a + label) % period < period / 2;
      double walk = 0.0;
      for (std::size_t b = 0; b < along; ++b) {
        const double v = (on ? amp : 0.0) + walk;
        if (horizontal) canvas.fill_patch(a, b, v);
        else canvas.fill_patch(b, a, v);
        walk += step(rng_);
      }
    }
  }

  void signature(Canvas& canvas, std::size_t r, std::size_t c, std::uint32_t k, double amp) {
    // Classes 0..3 light one channel; 4..7 light the complementary three.
    for (std::size_t ch = 0; ch < kSynthChannels; ++ch) {
      const bool lit = (ch == k % kSynthChannels) != (k >= kSynthChannels);
      canvas.at(r, c, ch) = lit ? amp : 0.0;
    }
  }

  void center_blob(Canvas& canvas, std::uint32_t label) {
    const std::size_t H = spec_.grid.height;
    const std::size_t W = spec_.grid.width;
    std::uniform_int_distribution<std::uint32_t> other(0, static_cast<std::uint32_t>(spec_.classes - 1));
    for (std::size_t r = 0; r < H; ++r) {
      for (std::size_t c = 0; c < W; ++c) {
        const bool center = r >= H / 4 && r < H - H / 4 && c >= W / 4 && c < W - W / 4;
        const double amp = uniform(0.8, 1.2);
        signature(canvas, r, c, center ? label : other(rng_), amp);
      }
    }
  }

  void checker(Canvas& canvas, std::uint32_t label) {
    const std::size_t block = label + 1;
    const double amp = uniform(0.8, 1.2);
    for (std::size_t r = 0; r < spec_.grid.height; ++r) {
      for (std::size_t c = 0; c < spec_.grid.width; ++c) {
        canvas.fill_patch(r, c, ((r / block + c / block) % 2 == 0) ? amp : -amp);
      }
    }
  }

  const SynthSpec& spec_;
  Rng& rng_;
};

Dataset make_split(const SynthSpec& spec, std::size_t count, std::uint64_t stream) {
  Rng rng(splitmix(spec.seed ^ splitmix(stream)));
  std::vector<std::uint32_t> labels(count);
  for (std::size_t i = 0; i < count; ++i) labels[i] = static_cast<std::uint32_t>(i % spec.classes);
  std::shuffle(labels.begin(), labels.end(), rng);

  Dataset data;
  data.grid = spec.grid;
  data.channels = kSynthChannels;
  data.classes = spec.classes;
  data.spec_echo = spec.echo();
  data.examples.reserve(count);
  Painter painter(spec, rng);
  for (std::uint32_t label : labels) data.examples.push_back({painter.paint(label), label});
  return data;
}

std::string record_bytes(const Dataset& data) {
  std::ostringstream out(std::ios::binary);
  for (const auto& ex : data.examples) {
    out.write(reinterpret_cast<const char*>(ex.features.data()),
              static_cast<std::streamsize>(ex.features.size() * sizeof(double)));
    binary::put<std::uint32_t>(out, ex.label);
  }
  return std::move(out).str();
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = kFnvOffsetBasis;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::string_view to_string(SynthFamily family) noexcept {
  for (const auto& e : kFamilyNames) {
    if (e.family == family) return e.name;
  }
  return "unknown";
}

SynthFamily parse_synth_family(std::string_view name) {
  for (const auto& e : kFamilyNames) {
    if (e.name == name) return e.family;
  }
  throw ValidationError("unknown dataset family '" + std::string(name) + "'");
}

void SynthSpec::validate() const {
  grid.validate();
  if (classes < 2) throw ValidationError("a dataset needs at least 2 classes");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw ValidationError("noise_std must be finite and >= 0");
  }
  switch (family) {
    case SynthFamily::quadrant:
      if (classes > 4) throw ValidationError("quadrant supports at most 4 classes");
      if (grid.height < 2 || grid.width < 2) throw ValidationError("quadrant needs a grid of at least 2x2");
      break;
    case SynthFamily::stripes_h:
      if (classes > grid.height) throw ValidationError("stripes_h needs grid height >= classes");
      break;
    case SynthFamily::stripes_v:
      if (classes > grid.width) throw ValidationError("stripes_v needs grid width >= classes");
      break;
    case SynthFamily::center_blob:
      if (classes > 2 * kSynthChannels) throw ValidationError("center_blob supports at most 8 classes");
      if (grid.height < 3 || grid.width < 3) throw ValidationError("center_blob needs a grid of at least 3x3");
      break;
    case SynthFamily::checker:
      if (classes > std::max(grid.height, grid.width)) {
        throw ValidationError("checker supports at most max(H, W) classes");
      }
      break;
  }
}

std::string SynthSpec::echo() const {
  nlohmann::json j = {{"family", std::string(to_string(family))},
                      {"height", grid.height},
                      {"width", grid.width},
                      {"classes", classes},
                      {"noise_std", noise_std},
                      {"train_size", train_size},
                      {"val_size", val_size},
                      {"seed", seed}};
  return j.dump();
}

SynthSplits generate(const SynthSpec& spec) {
  spec.validate();
  return {make_split(spec, spec.train_size, 1), make_split(spec, spec.val_size, 2)};
}

LabeledGridExample flip_horizontal(const LabeledGridExample& example, const GridSpec& grid,
                                   std::size_t channels) {
  if (example.features.size() != grid.size() * channels) {
    throw ValidationError("flip_horizontal: feature length does not match grid");
  }
  LabeledGridExample out{std::vector<double>(example.features.size()), example.label};
  for (std::size_t r = 0; r < grid.height; ++r) {
    for (std::size_t c = 0; c < grid.width; ++c) {
      const auto src = example.features.begin() +
                       static_cast<std::ptrdiff_t>(grid.flat_index(r, grid.width - 1 - c) * channels);
      std::copy(src, src + static_cast<std::ptrdiff_t>(channels),
                out.features.begin() + static_cast<std::ptrdiff_t>(grid.flat_index(r, c) * channels));
    }
  }
  return out;
}

void Dataset::validate() const {
  grid.validate();
  if (channels == 0) throw ValidationError("dataset channels must be positive");
  if (classes == 0) throw ValidationError("dataset class count must be positive");
  const std::size_t expect = grid.size() * channels;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    if (ex.features.size() != expect) {
      throw ValidationError("example " + std::to_string(i) + " has " + std::to_string(ex.features.size()) +
                            " features, expected " + std::to_string(expect));
    }
    if (ex.label >= classes) throw ValidationError("example " + std::to_string(i) + " label out of range");
    for (double v : ex.features) {
      if (!std::isfinite(v)) throw ValidationError("example " + std::to_string(i) + " has a non-finite feature");
    }
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  data.validate();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  const std::string records = record_bytes(data);
  out.write(kMagic, sizeof kMagic);
  binary::put<std::uint32_t>(out, kVersion);
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(data.grid.height));
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(data.grid.width));
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(data.channels));
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(data.classes));
  binary::put<std::uint64_t>(out, data.examples.size());
  binary::put_string(out, data.spec_echo);
  binary::put<std::uint64_t>(out, fnv1a(records));
  out.write(records.data(), static_cast<std::streamsize>(records.size()));
  if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open dataset '" + path.string() + "'");
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (in.gcount() != sizeof magic || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw ValidationError("'" + path.string() + "' is not a dataset file (bad magic)");
  }
  if (binary::get<std::uint32_t>(in, "version") != kVersion) {
    throw ValidationError("unsupported dataset version");
  }
  Dataset data;
  data.grid.height = binary::get<std::uint32_t>(in, "grid height");
  data.grid.width = binary::get<std::uint32_t>(in, "grid width");
  data.channels = binary::get<std::uint32_t>(in, "channels");
  data.classes = binary::get<std::uint32_t>(in, "class count");
  const auto count = binary::get<std::uint64_t>(in, "example count");
  data.spec_echo = binary::get_string(in, "spec echo");
  const auto checksum = binary::get<std::uint64_t>(in, "checksum");
  data.grid.validate();

  const std::size_t per = data.grid.size() * data.channels;
  const std::size_t record = per * sizeof(double) + sizeof(std::uint32_t);
  std::string records((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (records.size() < count * record) {
    throw ValidationError("truncated dataset: expected " + std::to_string(count) + " records, found " +
                          std::to_string(records.size() / record));
  }
  if (records.size() > count * record) throw ValidationError("dataset has trailing bytes after the records");
  if (fnv1a(records) != checksum) throw ValidationError("dataset checksum mismatch");

  data.examples.resize(count);
  const char* p = records.data();
  for (auto& ex : data.examples) {
    ex.features.resize(per);
    std::memcpy(ex.features.data(), p, per * sizeof(double));
    std::memcpy(&ex.label, p + per * sizeof(double), sizeof ex.label);
    p += record;
  }
  data.validate();
  return data;
}

std::string export_dataset_text(const Dataset& data) {
  std::string out;
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    nlohmann::json j = {{"index", i}, {"label", data.examples[i].label}, {"features", data.examples[i].features}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace reorder
