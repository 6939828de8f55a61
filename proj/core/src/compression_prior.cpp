#include "reorder/compression_prior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include <lzma.h>

#include "reorder/error.hpp"
#include "reorder/rng.hpp"

namespace reorder {

std::string_view to_string(Tokenization t) noexcept {
  return t == Tokenization::unigram ? "unigram" : "bigram";
}

Tokenization parse_tokenization(std::string_view name) {
  if (name == "unigram") return Tokenization::unigram;
  if (name == "bigram") return Tokenization::bigram;
  throw ValidationError("unknown tokenization '" + std::string(name) + "'");
}

namespace {

double patch_mean(const LabeledGridExample& ex, std::size_t patch, std::size_t channels) {
  double s = 0.0;
  for (std::size_t c = 0; c < channels; ++c) s += ex.features[patch * channels + c];
  return s / static_cast<double>(channels);
}

std::size_t patches_of(const LabeledGridExample& ex, std::size_t channels) {
  if (channels == 0 || ex.features.size() % channels != 0) {
    throw ValidationError("feature length is not a multiple of the channel count");
  }
  return ex.features.size() / channels;
}

}  // namespace

QuantizerRange calibrate(std::span<const LabeledGridExample> examples, std::size_t channels) {
  QuantizerRange range{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& ex : examples) {
    const std::size_t n = patches_of(ex, channels);
    for (std::size_t p = 0; p < n; ++p) {
      const double m = patch_mean(ex, p, channels);
      range.lo = std::min(range.lo, m);
      range.hi = std::max(range.hi, m);
    }
  }
  if (!std::isfinite(range.lo)) range = {0.0, 0.0};
  return range;
}

CodeSequence quantize(const LabeledGridExample& example, std::size_t channels, std::uint32_t codebook_size,
                      const QuantizerRange& range, std::string* warning) {
  if (codebook_size < 2) throw ValidationError("codebook size must be at least 2");
  const std::size_t n = patches_of(example, channels);
  CodeSequence out{std::vector<std::uint32_t>(n, 0), codebook_size};
  if (range.degenerate()) {
    if (warning) *warning = "degenerate quantizer range: all patches map to code 0";
    return out;
  }
  const double scale = static_cast<double>(codebook_size) / (range.hi - range.lo);
  for (std::size_t p = 0; p < n; ++p) {
    const double t = std::floor((patch_mean(example, p, channels) - range.lo) * scale);
    out.codes[p] = static_cast<std::uint32_t>(std::clamp(t, 0.0, static_cast<double>(codebook_size - 1)));
  }
  return out;
}

std::size_t symbol_width(std::uint64_t alphabet) {
  if (alphabet <= (1ull << 8)) return 1;
  if (alphabet <= (1ull << 16)) return 2;
  if (alphabet <= (1ull << 32)) return 4;
  throw ValidationError("alphabet of " + std::to_string(alphabet) + " symbols overflows a 4-byte encoding");
}

std::string SymbolStream::bytes() const {
  std::string out(symbols.size() * width, '\0');
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    for (std::size_t b = 0; b < width; ++b) {
      out[i * width + b] = static_cast<char>((symbols[i] >> (8 * b)) & 0xffu);
    }
  }
  return out;
}

SymbolStream tokenize(const CodeSequence& codes, Tokenization mode, std::uint64_t reserve_symbols) {
  const std::uint64_t K = codes.codebook_size;
  for (auto c : codes.codes) {
    if (c >= K) throw ValidationError("code " + std::to_string(c) + " outside codebook of size " + std::to_string(K));
  }
  SymbolStream s;
  s.alphabet = (mode == Tokenization::unigram ? K : K * K);
  s.width = symbol_width(s.alphabet + reserve_symbols);
  if (mode == Tokenization::unigram) {
    s.symbols = codes.codes;
  } else if (codes.codes.size() < 2) {
    s.empty_bigram = true;
  } else {
    s.symbols.reserve(codes.codes.size() - 1);
    for (std::size_t i = 0; i + 1 < codes.codes.size(); ++i) {
      s.symbols.push_back(static_cast<std::uint32_t>(codes.codes[i] * K + codes.codes[i + 1]));
    }
  }
  return s;
}

std::string compress(std::string_view bytes) {
  std::string out(lzma_stream_buffer_bound(bytes.size()), '\0');
  std::size_t pos = 0;
  const lzma_ret ret = lzma_easy_buffer_encode(6, LZMA_CHECK_CRC64, nullptr,
                                               reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size(),
                                               reinterpret_cast<std::uint8_t*>(out.data()), &pos, out.size());
  if (ret != LZMA_OK) throw NumericError("xz compression failed with code " + std::to_string(ret));
  out.resize(pos);
  return out;
}

double compression_ratio(std::string_view bytes) {
  if (bytes.empty()) throw ValidationError("cannot compute the compression ratio of an empty stream");
  return static_cast<double>(compress(bytes).size()) / static_cast<double>(bytes.size());
}

std::vector<std::size_t> sample_indices(std::size_t dataset_size, std::size_t sample_size, std::uint64_t seed) {
  std::vector<std::size_t> idx(dataset_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (sample_size == 0 || sample_size >= dataset_size) return idx;
  Rng rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(sample_size);
  std::sort(idx.begin(), idx.end());
  return idx;
}

SymbolStream ordering_stream(std::span<const CodeSequence> codes, const Permutation& order, Tokenization mode) {
  SymbolStream all;
  bool first = true;
  for (const auto& seq : codes) {
    CodeSequence reordered{apply_to_sequence(order, seq.codes), seq.codebook_size};
    SymbolStream one = tokenize(reordered, mode, 1);
    if (first) {
      all.alphabet = one.alphabet;
      all.width = one.width;
      first = false;
    } else {
      all.symbols.push_back(static_cast<std::uint32_t>(all.alphabet));
    }
    all.empty_bigram = all.empty_bigram || one.empty_bigram;
    all.symbols.insert(all.symbols.end(), one.symbols.begin(), one.symbols.end());
  }
  return all;
}

CompressionReport rank_orderings(const Dataset& data, const PriorConfig& config) {
  if (config.orders.empty()) throw ValidationError("rank_orderings needs at least one ordering");
  if (config.tokenizations.empty()) throw ValidationError("rank_orderings needs at least one tokenization");
  if (std::find(config.tokenizations.begin(), config.tokenizations.end(), config.prior_tokenization) ==
      config.tokenizations.end()) {
    throw ValidationError("prior tokenization '" + std::string(to_string(config.prior_tokenization)) +
                          "' is not among the reported tokenizations");
  }
  if (data.empty()) throw ValidationError("cannot rank orderings on an empty dataset");

  const auto idx = sample_indices(data.size(), config.sample_size, config.seed);
  std::vector<LabeledGridExample> sample;
  sample.reserve(idx.size());
  for (auto i : idx) sample.push_back(data.examples[i]);

  CompressionReport report;
  report.codebook_size = config.codebook_size;
  report.sample_size = sample.size();

  const QuantizerRange range = calibrate(sample, data.channels);
  std::vector<CodeSequence> codes;
  codes.reserve(sample.size());
  std::string warning;
  for (const auto& ex : sample) codes.push_back(quantize(ex, data.channels, config.codebook_size, range, &warning));
  if (!warning.empty()) report.warnings.push_back(warning);

  double best = -1.0;
  for (ScanOrder order : config.orders) {
    const Permutation perm = linearize(order, data.grid);
    for (Tokenization tok : config.tokenizations) {
      const SymbolStream stream = ordering_stream(codes, perm, tok);
      if (stream.empty_bigram) {
        report.warnings.push_back("bigram stream of a single-patch grid is empty for " + std::string(to_string(order)));
      }
      const std::string raw = stream.bytes();
      CompressionRow row{order, tok, raw.size(), 0, 0.0, 0.0};
      if (!raw.empty()) {
        row.compressed_bytes = compress(raw).size();
        row.ratio = static_cast<double>(row.compressed_bytes) / static_cast<double>(row.raw_bytes);
        row.reduction = 1.0 - row.ratio;
      }
      if (tok == config.prior_tokenization && row.ratio > best) {
        best = row.ratio;
        report.prior_order = order;
        report.prior = perm;
      }
      report.rows.push_back(row);
    }
  }
  return report;
}

std::string format_report_csv(const CompressionReport& report) {
  std::string out = "order,tokenization,raw_bytes,compressed_bytes,ratio,reduction_pct,K,compressor_id,sample_size\n";
  char buf[64];
  for (const auto& row : report.rows) {
    out += to_string(row.order);
    out += ',';
    out += to_string(row.tokenization);
    out += ',' + std::to_string(row.raw_bytes) + ',' + std::to_string(row.compressed_bytes) + ',';
    std::snprintf(buf, sizeof buf, "%.17g", row.ratio);
    out += buf;
    out += ',';
    std::snprintf(buf, sizeof buf, "%.17g", 100.0 * row.reduction);
    out += buf;
    out += ',' + std::to_string(report.codebook_size) + ',' + report.compressor_id + ',' +
           std::to_string(report.sample_size) + '\n';
  }
  return out;
}

}  // namespace reorder
