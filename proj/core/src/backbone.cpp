#include "reorder/backbone.hpp"

#include <cmath>
#include <random>
#include <string>

#include "reorder/error.hpp"
#include "reorder/rng.hpp"
#include "reorder/selective_scan.hpp"

namespace reorder {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

std::string_view to_string(BackboneKind kind) noexcept {
  switch (kind) {
    case BackboneKind::full_attention: return "full_attention";
    case BackboneKind::windowed_attention: return "windowed_attention";
    case BackboneKind::segment_recurrence: return "segment_recurrence";
    case BackboneKind::ssm_scan: return "ssm_scan";
    case BackboneKind::ssm_scan_4dir: return "ssm_scan_4dir";
  }
  return "unknown";
}

BackboneKind parse_backbone_kind(std::string_view name) {
  for (auto k : {BackboneKind::full_attention, BackboneKind::windowed_attention,
                 BackboneKind::segment_recurrence, BackboneKind::ssm_scan,
                 BackboneKind::ssm_scan_4dir}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError("unknown backbone kind '" + std::string(name) + "'");
}

bool is_attention_kind(BackboneKind kind) noexcept {
  return kind == BackboneKind::full_attention || kind == BackboneKind::windowed_attention ||
         kind == BackboneKind::segment_recurrence;
}

std::string_view to_string(PositionMode mode) noexcept {
  return mode == PositionMode::sequence ? "sequence" : "patch";
}

PositionMode parse_position_mode(std::string_view name) {
  if (name == "sequence") return PositionMode::sequence;
  if (name == "patch") return PositionMode::patch;
  throw ValidationError("unknown position mode '" + std::string(name) + "'");
}

BackboneConfig BackboneConfig::resolved() const {
  BackboneConfig c = *this;
  c.grid.validate();
  if (c.channels == 0) throw ValidationError("backbone: channels must be >= 1");
  if (c.classes < 2) throw ValidationError("backbone: need at least 2 classes");
  if (c.embed_dim == 0) throw ValidationError("backbone: embed_dim must be >= 1");
  if (c.mlp_dim == 0) c.mlp_dim = 2 * c.embed_dim;
  const std::size_t n = c.patch_count();
  if (c.segment_length == 0) c.segment_length = std::max<std::size_t>(1, n / 4);
  if (c.memory_length < 0) c.memory_length = static_cast<long>(c.segment_length);
  if (static_cast<std::size_t>(c.memory_length) > c.segment_length) {
    throw ValidationError("backbone: memory_length must not exceed segment_length");
  }
  if (c.window == 0) throw ValidationError("backbone: window must be >= 1");
  if (c.state_dim == 0) throw ValidationError("backbone: state_dim must be >= 1");
  return c;
}

namespace {

constexpr std::size_t kScanTensors = 7;

struct LayerIndex {
  std::size_t wq = 0, wk = 0, wv = 0, rel = 0;
  std::vector<std::array<std::size_t, kScanTensors>> scan;  // per direction
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
};

struct LayerCache {
  MatrixXd input;
  attention::MaskedAttentionCache attn;
  std::vector<ssm::ScanCache> scans;
  MatrixXd mid;
  MatrixXd act;
};

struct ExampleCache {
  MatrixXd x;  // n x C, permuted
  std::vector<std::size_t> pos_rows;
  std::vector<LayerCache> layers;
  MatrixXd final;
};

}  // namespace

struct ToyBackbone::Impl {
  BackboneConfig config;
  std::size_t patch_w = 0, patch_b = 0, cls = 0, pos = 0, head_w = 0, head_b = 0;
  std::vector<LayerIndex> layers;
  attention::AccessPattern pattern;
  std::vector<std::vector<std::size_t>> scan_orders;

  void build_layout(ParamSet& p) {
    const std::size_t d = config.embed_dim;
    const std::size_t f = config.mlp_dim;
    const std::size_t s = config.state_dim;
    patch_w = p.add("patch_proj.weight", config.channels, d);
    patch_b = p.add("patch_proj.bias", 1, d);
    cls = p.add("cls_token", 1, d);
    pos = p.add("pos_embed", config.tokens(), d);
    layers.resize(config.depth);
    for (std::size_t l = 0; l < config.depth; ++l) {
      const std::string pre = "layers." + std::to_string(l) + ".";
      LayerIndex& li = layers[l];
      if (is_attention_kind(config.kind)) {
        li.wq = p.add(pre + "attn.wq", d, d);
        li.wk = p.add(pre + "attn.wk", d, d);
        li.wv = p.add(pre + "attn.wv", d, d);
        if (config.kind == BackboneKind::segment_recurrence) {
          li.rel = p.add(pre + "attn.rel_bias", 1, pattern.relative_size);
        }
      } else {
        const std::size_t dirs = scan_orders.size();
        li.scan.resize(dirs);
        for (std::size_t k = 0; k < dirs; ++k) {
          const std::string sp = pre + "ssm.dir" + std::to_string(k) + ".";
          li.scan[k] = {p.add(sp + "w_u", d, s),       p.add(sp + "w_b", d, s),
                        p.add(sp + "w_c", d, s),       p.add(sp + "w_delta", d, 1),
                        p.add(sp + "b_delta", 1, 1),   p.add(sp + "log_a", 1, s),
                        p.add(sp + "w_out", s, d)};
        }
      }
      li.w1 = p.add(pre + "mlp.w1", d, f);
      li.b1 = p.add(pre + "mlp.b1", 1, f);
      li.w2 = p.add(pre + "mlp.w2", f, d);
      li.b2 = p.add(pre + "mlp.b2", 1, d);
    }
    head_w = p.add("head.weight", d, config.classes);
    head_b = p.add("head.bias", 1, config.classes);
  }

  void build_structure() {
    const std::size_t t = config.tokens();
    switch (config.kind) {
      case BackboneKind::full_attention: pattern = attention::full_pattern(t); break;
      case BackboneKind::windowed_attention:
        pattern = attention::sliding_window_pattern(t, config.window);
        break;
      case BackboneKind::segment_recurrence:
        pattern = attention::segment_recurrence_pattern(
            t, config.segment_length, static_cast<std::size_t>(config.memory_length));
        break;
      case BackboneKind::ssm_scan: scan_orders = {ssm::forward_order(t)}; break;
      case BackboneKind::ssm_scan_4dir: {
        auto dirs = ssm::four_direction_orders(config.grid);
        scan_orders.assign(dirs.begin(), dirs.end());
        break;
      }
    }
  }

  void initialize(ParamSet& p, std::uint64_t seed) const {
    Rng rng(seed);
    auto fill = [&](std::size_t idx, double stddev) {
      std::normal_distribution<double> nd(0.0, stddev);
      auto m = p.tensor(idx);
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = nd(rng);
    };
    const double d = static_cast<double>(config.embed_dim);
    const double f = static_cast<double>(config.mlp_dim);
    const double s = static_cast<double>(config.state_dim);
    fill(patch_w, 1.0 / std::sqrt(static_cast<double>(config.channels)));
    fill(cls, 0.02);
    fill(pos, 0.02);
    for (const LayerIndex& li : layers) {
      if (is_attention_kind(config.kind)) {
        fill(li.wq, 1.0 / std::sqrt(d));
        fill(li.wk, 1.0 / std::sqrt(d));
        fill(li.wv, 1.0 / std::sqrt(d));
      } else {
        for (const auto& sc : li.scan) {
          fill(sc[0], 1.0 / std::sqrt(d));
          fill(sc[1], 1.0 / std::sqrt(d));
          fill(sc[2], 1.0 / std::sqrt(d));
          fill(sc[3], 0.1 / std::sqrt(d));
          p.tensor(sc[4])(0, 0) = std::log(std::expm1(0.5));  // softplus^-1(0.5)
          auto log_a = p.tensor(sc[5]);
          for (Eigen::Index k = 0; k < log_a.cols(); ++k) {
            log_a(0, k) = std::log(0.1 * static_cast<double>(k + 1));
          }
          fill(sc[6], 0.5 / std::sqrt(s));
        }
      }
      fill(li.w1, 1.0 / std::sqrt(d));
      fill(li.w2, 0.5 / std::sqrt(f));
    }
    fill(head_w, 1.0 / std::sqrt(d));
  }

  ssm::ScanWeights scan_weights(const ParamSet& p, const std::array<std::size_t, kScanTensors>& sc) const {
    return ssm::ScanWeights{p.tensor(sc[0]), p.tensor(sc[1]), p.tensor(sc[2]), p.tensor(sc[3]),
                            p.tensor(sc[4]), p.tensor(sc[5]), p.tensor(sc[6])};
  }

  void check_features(std::span<const double> features) const {
    if (features.size() != config.patch_count() * config.channels) {
      throw ValidationError("backbone: expected " +
                            std::to_string(config.patch_count() * config.channels) +
                            " feature values, got " + std::to_string(features.size()));
    }
  }

  void check_perm(const Permutation& perm) const {
    if (perm.size() != config.patch_count()) {
      throw ValidationError("backbone: permutation length " + std::to_string(perm.size()) +
                            " does not match patch count " + std::to_string(config.patch_count()));
    }
  }

  // Runs the model once; fills `cache`. `replay` replaces the memory source per layer.
  void forward(const ParamSet& p, std::span<const double> features, const Permutation& perm,
               const LayerInputs* replay, ExampleCache& cache) const {
    check_features(features);
    check_perm(perm);
    const std::size_t n = config.patch_count();
    const std::size_t ch = config.channels;
    const auto t = static_cast<Eigen::Index>(config.tokens());

    cache.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(ch));
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t c = 0; c < ch; ++c) {
        cache.x(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = features[perm[k] * ch + c];
      }
    }
    cache.pos_rows.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      cache.pos_rows[k] = config.position_mode == PositionMode::sequence ? k + 1 : perm[k] + 1;
    }

    const auto pos = p.tensor(this->pos);
    MatrixXd h(t, static_cast<Eigen::Index>(config.embed_dim));
    h.row(0) = p.tensor(cls).row(0) + pos.row(0);
    MatrixXd e = cache.x * p.tensor(patch_w);
    e.rowwise() += p.tensor(patch_b).row(0);
    for (std::size_t k = 0; k < n; ++k) {
      h.row(static_cast<Eigen::Index>(k + 1)) =
          e.row(static_cast<Eigen::Index>(k)) + pos.row(static_cast<Eigen::Index>(cache.pos_rows[k]));
    }

    cache.layers.resize(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const LayerIndex& li = layers[l];
      LayerCache& lc = cache.layers[l];
      lc.input = h;
      MatrixXd mix;
      if (is_attention_kind(config.kind)) {
        std::span<const double> rel;
        if (config.kind == BackboneKind::segment_recurrence) {
          const auto r = p.tensor(li.rel);
          rel = std::span<const double>(r.data(), static_cast<std::size_t>(r.size()));
        }
        const MatrixXd& mem_src = replay ? (*replay)[l] : h;
        mix = attention::masked_attention_forward(h, mem_src, p.tensor(li.wq), p.tensor(li.wk),
                                                  p.tensor(li.wv), rel, pattern, &lc.attn);
      } else {
        lc.scans.resize(scan_orders.size());
        mix = MatrixXd::Zero(h.rows(), h.cols());
        for (std::size_t d = 0; d < scan_orders.size(); ++d) {
          mix += ssm::scan_forward(h, scan_orders[d], scan_weights(p, li.scan[d]), &lc.scans[d]);
        }
      }
      lc.mid = h + mix;
      MatrixXd z = lc.mid * p.tensor(li.w1);
      z.rowwise() += p.tensor(li.b1).row(0);
      lc.act = z.array().tanh().matrix();
      h = lc.mid + lc.act * p.tensor(li.w2);
      h.rowwise() += p.tensor(li.b2).row(0);
    }
    cache.final = std::move(h);
  }

  VectorXd class_probs(const ParamSet& p, const ExampleCache& cache) const {
    RowVectorXd logits = cache.final.row(0) * p.tensor(head_w) + p.tensor(head_b).row(0);
    const double mx = logits.maxCoeff();
    VectorXd probs = (logits.array() - mx).exp().transpose();
    probs /= probs.sum();
    return probs;
  }

  // Backpropagates d(final) through the blocks and the embedding; returns d(H0).
  MatrixXd backward(const ParamSet& p, const ExampleCache& cache, MatrixXd d_h, ParamSet& g) const {
    for (std::size_t l = layers.size(); l-- > 0;) {
      const LayerIndex& li = layers[l];
      const LayerCache& lc = cache.layers[l];
      g.tensor(li.w2) += lc.act.transpose() * d_h;
      g.tensor(li.b2).row(0) += d_h.colwise().sum();
      MatrixXd d_z = (d_h * p.tensor(li.w2).transpose())
                         .cwiseProduct((1.0 - lc.act.array().square()).matrix());
      g.tensor(li.w1) += lc.mid.transpose() * d_z;
      g.tensor(li.b1).row(0) += d_z.colwise().sum();
      MatrixXd d_mid = d_h + d_z * p.tensor(li.w1).transpose();

      MatrixXd d_in = d_mid;
      if (is_attention_kind(config.kind)) {
        std::span<double> rel;
        if (config.kind == BackboneKind::segment_recurrence) {
          auto r = g.tensor(li.rel);
          rel = std::span<double>(r.data(), static_cast<std::size_t>(r.size()));
        }
        auto gq = g.tensor(li.wq);
        auto gk = g.tensor(li.wk);
        auto gv = g.tensor(li.wv);
        d_in += attention::masked_attention_backward(d_mid, lc.attn, p.tensor(li.wq),
                                                     p.tensor(li.wk), p.tensor(li.wv), pattern,
                                                     {gq, gk, gv, rel});
      } else {
        for (std::size_t d = 0; d < scan_orders.size(); ++d) {
          const auto& sc = li.scan[d];
          auto g0 = g.tensor(sc[0]);
          auto g1 = g.tensor(sc[1]);
          auto g2 = g.tensor(sc[2]);
          auto g3 = g.tensor(sc[3]);
          auto g4 = g.tensor(sc[4]);
          auto g5 = g.tensor(sc[5]);
          auto g6 = g.tensor(sc[6]);
          ssm::ScanGrads sg{g0, g1, g2, g3, g4, g5, g6};
          d_in += ssm::scan_backward(d_mid, lc.scans[d], scan_weights(p, sc), sg);
        }
      }
      d_h = std::move(d_in);
    }

    auto d_pos = g.tensor(pos);
    g.tensor(cls).row(0) += d_h.row(0);
    d_pos.row(0) += d_h.row(0);
    const auto n = static_cast<Eigen::Index>(config.patch_count());
    MatrixXd d_e(n, d_h.cols());
    for (Eigen::Index k = 0; k < n; ++k) {
      d_e.row(k) = d_h.row(k + 1);
      d_pos.row(static_cast<Eigen::Index>(cache.pos_rows[static_cast<std::size_t>(k)])) += d_h.row(k + 1);
    }
    g.tensor(patch_w) += cache.x.transpose() * d_e;
    g.tensor(patch_b).row(0) += d_e.colwise().sum();
    return d_h;
  }
};

ToyBackbone::ToyBackbone(const BackboneConfig& config, std::uint64_t seed)
    : impl_(std::make_unique<Impl>()) {
  impl_->config = config.resolved();
  impl_->build_structure();
  impl_->build_layout(params_);
  impl_->initialize(params_, seed);
}

ToyBackbone::ToyBackbone(const BackboneConfig& config, ParamSet params)
    : impl_(std::make_unique<Impl>()) {
  impl_->config = config.resolved();
  impl_->build_structure();
  impl_->build_layout(params_);
  if (!params_.same_layout(params)) {
    throw ValidationError("ToyBackbone: parameter tensors do not match the configuration");
  }
  params_ = std::move(params);
}

ToyBackbone::ToyBackbone(const ToyBackbone& o)
    : params_(o.params_), impl_(std::make_unique<Impl>(*o.impl_)) {}

ToyBackbone& ToyBackbone::operator=(const ToyBackbone& o) {
  if (this != &o) {
    params_ = o.params_;
    impl_ = std::make_unique<Impl>(*o.impl_);
  }
  return *this;
}

ToyBackbone::ToyBackbone(ToyBackbone&&) noexcept = default;
ToyBackbone& ToyBackbone::operator=(ToyBackbone&&) noexcept = default;
ToyBackbone::~ToyBackbone() = default;

const BackboneConfig& ToyBackbone::config() const noexcept { return impl_->config; }
std::size_t ToyBackbone::patch_count() const noexcept { return impl_->config.patch_count(); }
const attention::AccessPattern& ToyBackbone::access_pattern() const { return impl_->pattern; }

std::vector<double> ToyBackbone::forward(std::span<const double> features, const Permutation& perm) const {
  ExampleCache cache;
  impl_->forward(params_, features, perm, nullptr, cache);
  const VectorXd probs = impl_->class_probs(params_, cache);
  return {probs.data(), probs.data() + probs.size()};
}

MatrixXd ToyBackbone::hidden_states(std::span<const double> features, const Permutation& perm) const {
  ExampleCache cache;
  impl_->forward(params_, features, perm, nullptr, cache);
  return cache.final;
}

ToyBackbone::LayerInputs ToyBackbone::layer_inputs(std::span<const double> features,
                                                   const Permutation& perm) const {
  ExampleCache cache;
  impl_->forward(params_, features, perm, nullptr, cache);
  LayerInputs out;
  for (const auto& lc : cache.layers) out.push_back(lc.input);
  return out;
}

ToyBackbone::BatchResult ToyBackbone::loss_and_gradient(std::span<const LabeledGridExample> batch,
                                                        const Permutation& perm, ParamSet* grad,
                                                        const std::vector<LayerInputs>* replay_memory) const {
  if (batch.empty()) throw ValidationError("loss_and_gradient: empty batch");
  if (replay_memory && replay_memory->size() != batch.size()) {
    throw ValidationError("loss_and_gradient: replay memory must hold one entry per example");
  }
  if (grad) {
    if (!grad->same_layout(params_)) *grad = params_.zeros_like();
    grad->set_zero();
  }
  BatchResult result;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  ExampleCache cache;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const LabeledGridExample& ex = batch[i];
    if (ex.label >= impl_->config.classes) {
      throw ValidationError("loss_and_gradient: label out of range");
    }
    impl_->forward(params_, ex.features, perm, replay_memory ? &(*replay_memory)[i] : nullptr, cache);
    result.cls_position = 0;
    std::vector<std::size_t> used(cache.pos_rows.size());
    for (std::size_t k = 0; k < used.size(); ++k) used[k] = perm[k];
    result.example_perm_hashes.push_back(permutation_hash(Permutation(std::move(used))));

    const VectorXd probs = impl_->class_probs(params_, cache);
    const double p_true = probs(ex.label);
    const double loss = -std::log(p_true);
    if (!std::isfinite(loss)) {
      throw NumericError("non-finite loss on batch example " + std::to_string(i));
    }
    result.mean_loss += loss * inv_b;
    Eigen::Index arg = 0;
    probs.maxCoeff(&arg);
    if (static_cast<std::uint32_t>(arg) == ex.label) ++result.correct;

    if (grad) {
      RowVectorXd d_logits = probs.transpose() * inv_b;
      d_logits(ex.label) -= inv_b;
      grad->tensor(impl_->head_w) += cache.final.row(0).transpose() * d_logits;
      grad->tensor(impl_->head_b).row(0) += d_logits;
      MatrixXd d_final = MatrixXd::Zero(cache.final.rows(), cache.final.cols());
      d_final.row(0) = d_logits * params_.tensor(impl_->head_w).transpose();
      impl_->backward(params_, cache, std::move(d_final), *grad);
    }
  }
  if (!std::isfinite(result.mean_loss)) throw NumericError("non-finite batch loss");
  return result;
}

std::size_t ToyBackbone::count_correct(std::span<const LabeledGridExample> batch,
                                       const Permutation& perm) const {
  std::size_t correct = 0;
  ExampleCache cache;
  for (const auto& ex : batch) {
    impl_->forward(params_, ex.features, perm, nullptr, cache);
    const VectorXd probs = impl_->class_probs(params_, cache);
    Eigen::Index arg = 0;
    probs.maxCoeff(&arg);
    if (static_cast<std::uint32_t>(arg) == ex.label) ++correct;
  }
  return correct;
}

std::vector<std::size_t> ToyBackbone::attention_coverage(double threshold,
                                                         std::span<const double> probe) const {
  if (is_attention_kind(impl_->config.kind)) return impl_->pattern.coverage();

  const std::size_t n = impl_->config.patch_count();
  std::vector<double> features(probe.begin(), probe.end());
  if (features.empty()) {
    Rng rng(0x5eed);
    std::normal_distribution<double> nd(0.0, 1.0);
    features.resize(n * impl_->config.channels);
    for (double& v : features) v = nd(rng);
  }
  const Permutation id = Permutation::identity(n);
  ExampleCache cache;
  impl_->forward(params_, features, id, nullptr, cache);
  const auto t = cache.final.rows();
  std::vector<std::size_t> counts(static_cast<std::size_t>(t), 0);
  ParamSet scratch = params_.zeros_like();
  for (Eigen::Index out = 0; out < t; ++out) {
    const double norm = cache.final.row(out).norm();
    if (norm == 0.0) continue;
    MatrixXd seed = MatrixXd::Zero(t, cache.final.cols());
    seed.row(out) = cache.final.row(out) / norm;
    const MatrixXd d_in = impl_->backward(params_, cache, std::move(seed), scratch);
    for (Eigen::Index j = 0; j < t; ++j) {
      if (d_in.row(j).norm() > threshold) ++counts[static_cast<std::size_t>(j)];
    }
  }
  return counts;
}

}  // namespace reorder
