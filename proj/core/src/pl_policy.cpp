#include "reorder/pl_policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "reorder/perm_io.hpp"

namespace reorder {

PolicyLogits::PolicyLogits(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValidationError("PolicyLogits: non-finite entry");
  }
}

PolicyLogits init_from_prior(std::size_t n, const Permutation& prior) {
  if (n == 0) throw ValidationError("init_from_prior: n must be >= 1");
  if (prior.size() != n) {
    throw ValidationError("init_from_prior: prior has length " + std::to_string(prior.size()) +
                          ", expected " + std::to_string(n));
  }
  std::vector<double> z(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double ramp = n == 1 ? 0.0 : -static_cast<double>(k) / static_cast<double>(n - 1);
    z[prior[k]] = ramp;
  }
  return PolicyLogits(std::move(z));
}

double sample_gumbel(Rng& rng) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double u = std::clamp(uni(rng), eps, 1.0 - eps);
  return -std::log(-std::log(u));
}

Permutation ml_permutation(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return Permutation(std::move(idx));
}

Permutation ml_permutation(const PolicyLogits& z) { return ml_permutation(z.values()); }

SampledPermutation sample(const PolicyLogits& z, double temperature, Rng& rng) {
  if (!(temperature >= 0.0)) throw ValidationError("sample: temperature must be >= 0");
  SampledPermutation out;
  out.temperature = temperature;
  out.gumbel_seed = rng();
  if (temperature == 0.0) {
    out.perm = ml_permutation(z);
  } else {
    Rng noise(out.gumbel_seed);
    std::vector<double> perturbed(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      perturbed[i] = z[i] + temperature * sample_gumbel(noise);
    }
    out.perm = ml_permutation(perturbed);
  }
  out.log_prob = log_prob(z, out.perm);
  return out;
}

Permutation sample_sequential(const PolicyLogits& z, Rng& rng) {
  std::vector<std::size_t> remaining(z.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  std::vector<std::size_t> order;
  order.reserve(z.size());
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  while (!remaining.empty()) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t s : remaining) mx = std::max(mx, z[s]);
    double total = 0.0;
    for (std::size_t s : remaining) total += std::exp(z[s] - mx);
    double u = uni(rng) * total;
    std::size_t pick = remaining.size() - 1;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      u -= std::exp(z[remaining[i]] - mx);
      if (u <= 0.0) {
        pick = i;
        break;
      }
    }
    order.push_back(remaining[pick]);
    remaining.erase(remaining.begin() + static_cast<long>(pick));
  }
  return Permutation(std::move(order));
}

namespace {

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

void check_lengths(const PolicyLogits& z, const Permutation& perm, const char* who) {
  if (z.size() != perm.size()) {
    throw ValidationError(std::string(who) + ": logits of length " + std::to_string(z.size()) +
                          " vs permutation of length " + std::to_string(perm.size()));
  }
}

// suffix[i] = logsumexp_{k >= i} z[perm[k]]
std::vector<double> reverse_cumulative_lse(const PolicyLogits& z, const Permutation& perm) {
  const std::size_t n = perm.size();
  std::vector<double> suffix(n);
  double acc = -std::numeric_limits<double>::infinity();
  for (std::size_t i = n; i-- > 0;) {
    acc = log_add_exp(acc, z[perm[i]]);
    suffix[i] = acc;
  }
  return suffix;
}

}  // namespace

double log_prob(const PolicyLogits& z, const Permutation& perm) {
  check_lengths(z, perm, "log_prob");
  const auto suffix = reverse_cumulative_lse(z, perm);
  double total = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) total += z[perm[i]] - suffix[i];
  return std::min(total, 0.0);
}

std::vector<double> log_prob_gradient(const PolicyLogits& z, const Permutation& perm) {
  check_lengths(z, perm, "log_prob_gradient");
  const std::size_t n = perm.size();
  const auto suffix = reverse_cumulative_lse(z, perm);
  // Slot perm[j] appears in the denominators of steps 0..j, so
  // d/dz_{perm[j]} = 1 - sum_{i<=j} exp(z_{perm[j]} - suffix[i]).
  std::vector<double> grad(n, 0.0);
  double prefix = -std::numeric_limits<double>::infinity();  // logsumexp_{i<=j} -suffix[i]
  for (std::size_t j = 0; j < n; ++j) {
    prefix = log_add_exp(prefix, -suffix[j]);
    grad[perm[j]] = 1.0 - std::exp(z[perm[j]] + prefix);
  }
  return grad;
}

std::string to_hex_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double from_hex_float(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ValidationError("bad hex float '" + s + "'");
  return v;
}

std::string format_policy_snapshot(const PolicySnapshot& snap) {
  using nlohmann::json;
  json doc;
  doc["format"] = "reorder.policy";
  doc["version"] = 1;
  doc["n"] = snap.logits.size();
  doc["prior"] = snap.prior_name;
  doc["epoch"] = snap.epoch;
  doc["grid"] = {{"height", snap.grid_height}, {"width", snap.grid_width}};
  json hex = json::array();
  json dec = json::array();
  for (double v : snap.logits.values()) {
    hex.push_back(to_hex_float(v));
    dec.push_back(v);
  }
  doc["logits_hex"] = std::move(hex);
  doc["logits"] = std::move(dec);  // informational; logits_hex is authoritative
  return doc.dump() + "\n";
}

PolicySnapshot parse_policy_snapshot(std::string_view text) {
  using nlohmann::json;
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "reorder.policy") {
      throw ValidationError("policy snapshot: unexpected format tag");
    }
    PolicySnapshot snap;
    snap.prior_name = doc.at("prior").get<std::string>();
    snap.epoch = doc.at("epoch").get<long>();
    snap.grid_height = doc.at("grid").at("height").get<std::size_t>();
    snap.grid_width = doc.at("grid").at("width").get<std::size_t>();
    std::vector<double> values;
    for (const auto& h : doc.at("logits_hex")) values.push_back(from_hex_float(h.get<std::string>()));
    if (values.size() != doc.at("n").get<std::size_t>()) {
      throw ValidationError("policy snapshot: n does not match logits length");
    }
    snap.logits = PolicyLogits(std::move(values));
    return snap;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("policy snapshot: ") + e.what());
  }
}

void write_policy_snapshot(const std::filesystem::path& path, const PolicySnapshot& snap) {
  write_text_file(path, format_policy_snapshot(snap));
}

PolicySnapshot read_policy_snapshot(const std::filesystem::path& path) {
  return parse_policy_snapshot(read_text_file(path));
}

}  // namespace reorder
