#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reorder/dataset.hpp"
#include "reorder/grid_linearize.hpp"
#include "reorder/permutation.hpp"

namespace reorder {

enum class Tokenization { unigram, bigram };

std::string_view to_string(Tokenization t) noexcept;
Tokenization parse_tokenization(std::string_view name);

/// Patch codes in row-major patch order, each in [0, codebook_size).
struct CodeSequence {
  std::vector<std::uint32_t> codes;
  std::uint32_t codebook_size = 16;
};

/// Observed range of per-patch channel means.
struct QuantizerRange {
  double lo = 0.0;
  double hi = 0.0;
  bool degenerate() const noexcept { return !(hi > lo); }
};

QuantizerRange calibrate(std::span<const LabeledGridExample> examples, std::size_t channels);

/// Patch mean binned into K uniform bins over `range`. A degenerate range
/// yields all-zero codes and, when `warning` is given, sets it to a message.
CodeSequence quantize(const LabeledGridExample& example, std::size_t channels, std::uint32_t codebook_size,
                      const QuantizerRange& range, std::string* warning = nullptr);

/// Fixed-width symbol stream. Width is the smallest of 1, 2 or 4 bytes that
/// holds the alphabet.
struct SymbolStream {
  std::vector<std::uint32_t> symbols;
  std::uint64_t alphabet = 0;
  std::size_t width = 1;
  bool empty_bigram = false;  // a length-1 code sequence had no pairs

  std::string bytes() const;
};

std::size_t symbol_width(std::uint64_t alphabet);

/// unigram: one symbol per code; bigram: codes[i] * K + codes[i+1].
/// `reserve_symbols` widens the alphabet (e.g. for a separator).
SymbolStream tokenize(const CodeSequence& codes, Tokenization mode, std::uint64_t reserve_symbols = 0);

inline constexpr std::string_view kCompressorId = "xz:lzma2:preset=6:check=crc64";
inline constexpr std::string_view kQuantizerId = "uniform-patch-mean";

/// Full .xz container, so header overhead is identical for every stream.
std::string compress(std::string_view bytes);
/// compressed size / raw size. Throws ValidationError on an empty stream.
double compression_ratio(std::string_view bytes);

struct CompressionRow {
  ScanOrder order = ScanOrder::row_major;
  Tokenization tokenization = Tokenization::unigram;
  std::size_t raw_bytes = 0;
  std::size_t compressed_bytes = 0;
  double ratio = 0.0;
  double reduction = 0.0;  // 1 - ratio
};

struct CompressionReport {
  std::vector<CompressionRow> rows;
  std::uint32_t codebook_size = 16;
  std::size_t sample_size = 0;
  std::string compressor_id{kCompressorId};
  std::string quantizer_id{kQuantizerId};
  std::vector<std::string> warnings;
  ScanOrder prior_order = ScanOrder::row_major;
  Permutation prior;
};

struct PriorConfig {
  std::vector<ScanOrder> orders{kAllScanOrders.begin(), kAllScanOrders.end()};
  std::vector<Tokenization> tokenizations{Tokenization::unigram, Tokenization::bigram};
  Tokenization prior_tokenization = Tokenization::unigram;
  std::uint32_t codebook_size = 16;
  std::size_t sample_size = 512;  // 0 = whole dataset
  std::uint64_t seed = 0;
};

/// Indices of the deterministic subsample used by rank_orderings.
std::vector<std::size_t> sample_indices(std::size_t dataset_size, std::size_t sample_size, std::uint64_t seed);

/// Concatenated stream of one ordering over `examples`, example boundaries
/// marked by the symbol equal to the tokenization alphabet size.
SymbolStream ordering_stream(std::span<const CodeSequence> codes, const Permutation& order, Tokenization mode);

/// Compresses every (order, tokenization) stream and picks the prior: the
/// order with the highest ratio under `prior_tokenization`, ties going to the
/// earlier entry of `orders`.
CompressionReport rank_orderings(const Dataset& data, const PriorConfig& config);

std::string format_report_csv(const CompressionReport& report);

}  // namespace reorder
