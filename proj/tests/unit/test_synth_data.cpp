#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "reorder/error.hpp"
#include "reorder/synth_data.hpp"

using namespace reorder;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "reorder_synth_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

SynthSpec small(SynthFamily family, std::size_t classes = 4) {
  SynthSpec s;
  s.family = family;
  s.grid = {8, 8};
  s.classes = classes;
  s.train_size = 103;
  s.val_size = 41;
  s.seed = 5;
  return s;
}

constexpr SynthFamily kFamilies[] = {SynthFamily::quadrant, SynthFamily::stripes_h, SynthFamily::stripes_v,
                                     SynthFamily::center_blob, SynthFamily::checker};

}  // namespace

TEST_CASE("generation is deterministic and validated") {
  for (SynthFamily f : kFamilies) {
    const auto a = generate(small(f));
    const auto b = generate(small(f));
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK_NOTHROW(a.train.validate());
    CHECK(a.train.size() == 103);
    CHECK(a.val.size() == 41);
    auto other = small(f);
    other.seed = 6;
    CHECK_FALSE(generate(other).train == a.train);
  }
}

TEST_CASE("labels are balanced within one") {
  for (SynthFamily f : kFamilies) {
    const auto splits = generate(small(f));
    for (const Dataset* split : {&splits.train, &splits.val}) {
      std::map<std::uint32_t, std::size_t> counts;
      for (const auto& ex : split->examples) ++counts[ex.label];
      REQUIRE(counts.size() == 4);
      const double uniform = static_cast<double>(split->size()) / 4.0;
      for (auto [label, count] : counts) CHECK(std::abs(static_cast<double>(count) - uniform) <= 1.0);
    }
  }
}

TEST_CASE("class counts incompatible with the family are rejected") {
  CHECK_THROWS_AS(generate(small(SynthFamily::quadrant, 5)), ValidationError);
  CHECK_THROWS_AS(generate(small(SynthFamily::center_blob, 9)), ValidationError);
  CHECK_THROWS_AS(generate(small(SynthFamily::checker, 9)), ValidationError);
  CHECK_THROWS_AS(generate(small(SynthFamily::stripes_h, 1)), ValidationError);
  auto s = small(SynthFamily::quadrant);
  s.noise_std = -1;
  CHECK_THROWS_AS(generate(s), ValidationError);
}

TEST_CASE("noise-free quadrant data is separable by quadrant means") {
  auto s = small(SynthFamily::quadrant);
  s.noise_std = 0.0;
  const auto data = generate(s);
  for (const auto& ex : data.val.examples) {
    double best = -1e9;
    std::uint32_t arg = 0;
    for (std::uint32_t q = 0; q < 4; ++q) {
      double energy = 0.0;
      for (std::size_t r = (q / 2) * 4; r < (q / 2) * 4 + 4; ++r) {
        for (std::size_t c = (q % 2) * 4; c < (q % 2) * 4 + 4; ++c) {
          for (std::size_t ch = 0; ch < 4; ++ch) energy += std::abs(ex.features[(r * 8 + c) * 4 + ch]);
        }
      }
      if (energy > best) {
        best = energy;
        arg = q;
      }
    }
    CHECK(arg == ex.label);
  }
}

TEST_CASE("center blob border carries no label information by construction") {
  auto s = small(SynthFamily::center_blob);
  s.noise_std = 0.0;
  const auto data = generate(s);
  for (const auto& ex : data.train.examples) {
    // The label channel is lit on every central patch.
    for (std::size_t r = 2; r < 6; ++r) {
      for (std::size_t c = 2; c < 6; ++c) CHECK(ex.features[(r * 8 + c) * 4 + ex.label] > 0.5);
    }
  }
}

TEST_CASE("horizontal flip mirrors columns") {
  LabeledGridExample ex{{1, 2, 3, 4, 5, 6}, 1};
  const auto f = flip_horizontal(ex, {1, 3}, 2);
  CHECK(f.features == std::vector<double>{5, 6, 3, 4, 1, 2});
  CHECK(flip_horizontal(f, {1, 3}, 2) == ex);
}

TEST_CASE("dataset files round trip") {
  for (SynthFamily f : kFamilies) {
    const auto d = generate(small(f)).val;
    save_dataset(scratch("d.bin"), d);
    CHECK(load_dataset(scratch("d.bin")) == d);
  }
  Dataset empty;
  empty.grid = {2, 3};
  empty.classes = 2;
  save_dataset(scratch("empty.bin"), empty);
  const auto back = load_dataset(scratch("empty.bin"));
  CHECK(back.empty());
  CHECK(back.grid == empty.grid);
}

TEST_CASE("corrupt dataset files are rejected") {
  const auto d = generate(small(SynthFamily::checker)).val;
  save_dataset(scratch("c.bin"), d);
  const auto size = std::filesystem::file_size(scratch("c.bin"));

  std::filesystem::copy_file(scratch("c.bin"), scratch("t.bin"), std::filesystem::copy_options::overwrite_existing);
  std::filesystem::resize_file(scratch("t.bin"), size - 7);
  CHECK_THROWS_WITH_AS(load_dataset(scratch("t.bin")), doctest::Contains("truncated"), ValidationError);

  std::filesystem::copy_file(scratch("c.bin"), scratch("x.bin"), std::filesystem::copy_options::overwrite_existing);
  {
    std::fstream io(scratch("x.bin"), std::ios::binary | std::ios::in | std::ios::out);
    io.seekp(static_cast<std::streamoff>(size - 20));
    io.put('\x7f');
  }
  CHECK_THROWS_WITH_AS(load_dataset(scratch("x.bin")), doctest::Contains("checksum"), ValidationError);

  {
    std::ofstream bad(scratch("m.bin"), std::ios::binary);
    bad << "NOTADATASET";
  }
  CHECK_THROWS_WITH_AS(load_dataset(scratch("m.bin")), doctest::Contains("magic"), ValidationError);
}

TEST_CASE("text export has one record per example") {
  const auto d = generate(small(SynthFamily::stripes_v)).val;
  const auto text = export_dataset_text(d);
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(d.size()));
  CHECK(text.rfind("{\"features\":", 0) == 0);
}
