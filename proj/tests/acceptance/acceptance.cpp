#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "reorder/attention.hpp"
#include "reorder/compression_prior.hpp"
#include "reorder/grid_linearize.hpp"
#include "reorder/pl_policy.hpp"
#include "reorder/policy_optimizer.hpp"
#include "reorder/synth_data.hpp"
#include "support.hpp"
#include "witness.hpp"

using namespace reorder;
using Eigen::MatrixXd;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<Permutation> all_permutations(std::size_t n) {
  std::vector<std::size_t> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = i;
  std::vector<Permutation> out;
  do out.emplace_back(m);
  while (std::next_permutation(m.begin(), m.end()));
  return out;
}

// ------------------------------------------------------------------ 1

Outcome linearization_suite() {
  Outcome o;
  std::size_t checked = 0;
  for (std::size_t h = 1; h <= 32; ++h) {
    for (std::size_t w = 1; w <= 32; ++w) {
      const GridSpec grid{h, w};
      for (ScanOrder order : kAllScanOrders) {
        const Permutation p = linearize(order, grid);
        ++checked;
        if (p.size() != h * w || !is_bijection(p.mapping())) {
          o.require(false, std::string(to_string(order)) + " not a bijection on " + std::to_string(h) + "x" +
                               std::to_string(w));
        }
      }
      const Permutation rm = linearize(ScanOrder::row_major, grid);
      const Permutation cm = linearize(ScanOrder::column_major, grid);
      for (std::size_t k = 0; k < h * w; ++k) {
        if (rm[k] != (k / w) * w + k % w || cm[k] != (k % h) * w + k / h) {
          o.require(false, "closed form mismatch on " + std::to_string(h) + "x" + std::to_string(w));
          break;
        }
      }
    }
  }
  for (std::size_t side = 1; side <= 32; side *= 2) {
    const Permutation p = linearize(ScanOrder::hilbert, {side, side});
    for (std::size_t k = 1; k < p.size(); ++k) {
      const long dr = static_cast<long>(p[k] / side) - static_cast<long>(p[k - 1] / side);
      const long dc = static_cast<long>(p[k] % side) - static_cast<long>(p[k - 1] % side);
      if (std::abs(dr) + std::abs(dc) != 1) {
        o.require(false, "hilbert step " + std::to_string(k) + " on " + std::to_string(side) + "^2");
        break;
      }
    }
  }
  if (o.pass) o.detail = std::to_string(checked) + " linearizations, hilbert unit steps up to 32x32";
  return o;
}

// ------------------------------------------------------------------ 2

Outcome plackett_luce_exactness() {
  Outcome o;
  Rng rng(42);
  double worst_sum = 0.0;
  for (std::size_t n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 5; ++trial) {
      const PolicyLogits z(testing::random_vector(n, rng, 2.0));
      double total = 0.0;
      for (const auto& p : all_permutations(n)) total += std::exp(log_prob(z, p));
      worst_sum = std::max(worst_sum, std::abs(total - 1.0));
    }
  }
  o.require(worst_sum <= 1e-9, "probability mass off by " + fmt("%.3g", worst_sum));

  constexpr int kDraws = 200000;
  double worst_tv = 0.0;
  for (std::size_t n = 2; n <= 4; ++n) {
    const PolicyLogits z(testing::random_vector(n, rng));
    std::map<std::uint64_t, int> counts;
    for (int i = 0; i < kDraws; ++i) ++counts[permutation_hash(sample(z, 1.0, rng).perm)];
    double tv = 0.0;
    for (const auto& p : all_permutations(n)) {
      tv += std::abs(counts[permutation_hash(p)] / double(kDraws) - std::exp(log_prob(z, p)));
    }
    worst_tv = std::max(worst_tv, tv / 2);
  }
  o.require(worst_tv < 0.01, "total variation " + fmt("%.4f", worst_tv));
  if (o.pass) o.detail = "max |sum - 1| " + fmt("%.2g", worst_sum) + ", max TV " + fmt("%.4f", worst_tv);
  return o;
}

// ------------------------------------------------------------------ 3

Outcome gradient_fidelity() {
  Outcome o;
  Rng rng(7);
  double worst_policy = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + trial % 6;
    PolicyLogits z(testing::random_vector(n, rng));
    const Permutation p = testing::random_perm(n, rng);
    const auto g = log_prob_gradient(z, p);
    double d2 = 0.0, g2 = 0.0;
    auto v = z.mutable_values();
    for (std::size_t i = 0; i < n; ++i) {
      const double keep = v[i];
      v[i] = keep + 1e-5;
      const double up = log_prob(z, p);
      v[i] = keep - 1e-5;
      const double down = log_prob(z, p);
      v[i] = keep;
      const double fd = (up - down) / 2e-5;
      d2 += (fd - g[i]) * (fd - g[i]);
      g2 += std::max(fd * fd, g[i] * g[i]);
    }
    worst_policy = std::max(worst_policy, std::sqrt(d2 / std::max(g2, 1e-12)));
  }
  o.require(worst_policy < 1e-4, "log_prob gradient error " + fmt("%.3g", worst_policy));

  double worst_block = 0.0;
  std::string worst_name;
  for (BackboneKind kind : {BackboneKind::full_attention, BackboneKind::windowed_attention,
                            BackboneKind::segment_recurrence, BackboneKind::ssm_scan, BackboneKind::ssm_scan_4dir}) {
    BackboneConfig cfg;
    cfg.kind = kind;
    ToyBackbone model(cfg, 3);
    const auto batch = testing::random_batch(2, model.config(), rng);
    const Permutation perm = testing::random_perm(model.patch_count(), rng);
    std::vector<ToyBackbone::LayerInputs> replay;
    for (const auto& ex : batch) replay.push_back(model.layer_inputs(ex.features, perm));
    const auto* memory = kind == BackboneKind::segment_recurrence ? &replay : nullptr;
    ParamSet grad;
    model.loss_and_gradient(batch, perm, &grad, memory);
    const auto errors = testing::finite_difference_check(
        model, grad, [&] { return model.loss_and_gradient(batch, perm, nullptr, memory).mean_loss; });
    for (const auto& e : errors) {
      if (e.relative > worst_block) {
        worst_block = e.relative;
        worst_name = std::string(to_string(kind)) + "/" + e.name;
      }
    }
  }
  o.require(worst_block < 1e-4, "worst block " + worst_name + " error " + fmt("%.3g", worst_block));
  if (o.pass) {
    o.detail = "log_prob " + fmt("%.2g", worst_policy) + ", worst block " + fmt("%.2g", worst_block) + " (" +
               worst_name + ")";
  }
  return o;
}

// ------------------------------------------------------------------ 4

Outcome equivariance_dichotomy() {
  Outcome o;
  Rng rng(11);
  double worst_attn = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + trial % 20;
    const Eigen::Index d = 1 + (trial * 5) % 16;
    const MatrixXd x = testing::random_matrix(n, d, rng);
    const MatrixXd wq = testing::random_matrix(d, d, rng, 0.5);
    const MatrixXd wk = testing::random_matrix(d, d, rng, 0.5);
    const MatrixXd wv = testing::random_matrix(d, d, rng, 0.5);
    const MatrixXd P = attention::permutation_matrix(testing::random_perm(static_cast<std::size_t>(n), rng));
    const MatrixXd gap = attention::self_attention(P * x, wq, wk, wv) - P * attention::self_attention(x, wq, wk, wv);
    worst_attn = std::max(worst_attn, gap.cwiseAbs().maxCoeff());
  }
  o.require(worst_attn <= 1e-6, "attention equivariance gap " + fmt("%.3g", worst_attn));

  const ToyBackbone full(testing::witness_config(BackboneKind::full_attention), 5);
  double worst_model = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = testing::random_vector(full.patch_count() * full.config().channels, rng);
    worst_model = std::max(worst_model, testing::equivariance_gap(full, x, testing::random_perm(full.patch_count(), rng)));
  }
  o.require(worst_model <= 1e-6, "full-attention model gap " + fmt("%.3g", worst_model));

  double worst_conj = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + trial % 20;
    const MatrixXd m = testing::random_matrix(n, n, rng, 3.0);
    const MatrixXd P = attention::permutation_matrix(testing::random_perm(static_cast<std::size_t>(n), rng));
    const MatrixXd gap = attention::softmax_rows(P * m * P.transpose()) - P * attention::softmax_rows(m) * P.transpose();
    worst_conj = std::max(worst_conj, gap.cwiseAbs().maxCoeff());
  }
  o.require(worst_conj <= 1e-9, "softmax conjugation gap " + fmt("%.3g", worst_conj));

  std::ifstream in(REORDER_FIXTURE_DIR "/witnesses.json");
  if (!in) {
    o.require(false, "witness fixture missing");
    return o;
  }
  const auto witnesses = nlohmann::json::parse(in);
  std::set<BackboneKind> kinds;
  std::string gaps;
  for (const auto& j : witnesses) {
    const auto w = testing::witness_from_json(j);
    const ToyBackbone model(testing::witness_config(w.kind), w.model_seed);
    const double gap = testing::equivariance_gap(model, w.features, w.perm);
    o.require(gap > 1e-3, std::string(to_string(w.kind)) + " witness gap " + fmt("%.3g", gap));
    kinds.insert(w.kind);
    gaps += " " + std::string(to_string(w.kind)) + "=" + fmt("%.3g", gap);
  }
  o.require(kinds.size() == 3, "expected witnesses for three order-sensitive kinds");
  if (o.pass) {
    o.detail = "attention " + fmt("%.2g", worst_attn) + ", model " + fmt("%.2g", worst_model) + ", conjugation " +
               fmt("%.2g", worst_conj) + ", witnesses" + gaps;
  }
  return o;
}

// ------------------------------------------------------------------ 5

Outcome reinforce_mechanics() {
  Outcome o;
  Rng rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int t = 0; t < 1000; ++t) {
    const double b = u(rng), r = u(rng), beta = std::abs(u(rng)) / 3.0;
    const double expected = beta * b + (1 - beta) * r;
    if (update_baseline({b, beta}, r).b != expected) {
      o.require(false, "baseline update differs from the moving average");
      break;
    }
  }

  const PolicyLogits z({0.3, -0.4, 0.1});
  const auto perms = all_permutations(3);
  const std::vector<double> table{1.0, -0.5, 0.25, 2.0, -1.5, 0.75};
  std::map<std::uint64_t, double> reward;
  double mean_r = 0.0;
  std::vector<double> exact(3, 0.0);
  for (std::size_t i = 0; i < perms.size(); ++i) {
    reward[permutation_hash(perms[i])] = table[i];
    const double prob = std::exp(log_prob(z, perms[i]));
    mean_r += prob * table[i];
    const auto g = log_prob_gradient(z, perms[i]);
    for (int c = 0; c < 3; ++c) exact[c] += prob * table[i] * g[c];
  }
  constexpr int kSamples = 200000;
  std::vector<double> sum(3, 0.0), sum2(3, 0.0);
  for (int s = 0; s < kSamples; ++s) {
    const Permutation p = sample(z, 1.0, rng).perm;
    const double a = reward[permutation_hash(p)] - mean_r;
    const auto g = log_prob_gradient(z, p);
    for (int c = 0; c < 3; ++c) {
      sum[c] += a * g[c];
      sum2[c] += a * g[c] * a * g[c];
    }
  }
  double worst_z = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double mean = sum[c] / kSamples;
    const double se = std::sqrt((sum2[c] / kSamples - mean * mean) / kSamples);
    const double zscore = std::abs(mean - exact[c]) / se;
    worst_z = std::max(worst_z, zscore);
    o.require(zscore <= 3.0, "component " + std::to_string(c) + " off by " + fmt("%.2f", zscore) + " SE");
  }

  const CurriculumSchedule sched{15, 30, 0.2};
  o.require(temperature_at(sched, 15) == 0.0, "tau(15) != 0");
  o.require(temperature_at(sched, 30) == 0.2, "tau(30) != 0.2");
  o.require(temperature_at(sched, 45) == 0.0, "tau(45) != 0");
  if (o.pass) o.detail = "baseline exact, Monte Carlo within " + fmt("%.2f", worst_z) + " SE, schedule exact";
  return o;
}

// ------------------------------------------------------------------ 6

/// Rank-alignment bandit: reward -sum_i |pos(i) - target_pos(i)| / n.
bool bandit_converges(std::uint64_t seed, std::size_t steps, std::size_t* solved_at) {
  const Permutation target({3, 0, 4, 1, 2});
  const std::size_t n = target.size();
  const auto target_pos = testing::positions_of(target);
  PolicyLearnerConfig cfg;
  cfg.optimizer.learning_rate = 0.05;
  cfg.baseline_momentum = 0.9;
  PolicyLearner learner(init_from_prior(n, Permutation::identity(n)), cfg);
  Rng rng(seed);
  for (std::size_t step = 1; step <= steps; ++step) {
    const Permutation p = learner.sample(1.0, rng).perm;
    const auto pos = testing::positions_of(p);
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) r -= std::abs(double(pos[i]) - double(target_pos[i]));
    learner.observe(p, r / double(n), true);
    if (*solved_at == 0 && ml_permutation(learner.logits()) == target) *solved_at = step;
  }
  return ml_permutation(learner.logits()) == target;
}

Outcome policy_convergence() {
  Outcome o;
  int solved = 0;
  std::size_t latest = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::size_t at = 0;
    if (bandit_converges(seed, 2000, &at)) {
      ++solved;
      latest = std::max(latest, at);
    }
  }
  o.require(solved >= 9, std::to_string(solved) + "/10 seeds reached the optimal ordering");
  if (o.pass) {
    o.detail = std::to_string(solved) + "/10 seeds optimal at step 2000 (first hit by step " + std::to_string(latest) +
               ")";
  }
  return o;
}

// ------------------------------------------------------------------ 7

struct DirectionalRow {
  double reorder_acc, fixed_acc, per_batch_acc;
};

std::vector<DirectionalRow> directional_runs(SynthFamily family, BackboneKind kind, int seeds) {
  std::vector<DirectionalRow> rows;
  for (int s = 0; s < seeds; ++s) {
    SynthSpec spec;
    spec.family = family;
    spec.grid = {6, 6};
    spec.train_size = 512;
    spec.val_size = 512;
    spec.noise_std = 1.0;
    spec.seed = 100 + static_cast<std::uint64_t>(s);
    const auto data = generate(spec);
    TrainConfig c;
    c.backbone.kind = kind;
    c.backbone.grid = spec.grid;
    c.backbone.embed_dim = 16;
    c.backbone.depth = 2;
    c.backbone.state_dim = 8;
    c.schedule = {5, 10, 0.2};
    c.epochs = 40;
    c.batch_size = 32;
    c.backbone_lr = 3e-3;
    c.backbone_rl_lr = 3e-3;
    c.policy.optimizer.learning_rate = 1e-2;
    c.seed = static_cast<std::uint64_t>(s);
    c.record_batches = false;
    const auto r = run_curriculum(c, data.train, data.val);
    const auto f = run_baseline_mode(TrainMode::fixed_order, c, data.train, data.val);
    const auto p = run_baseline_mode(TrainMode::per_batch_random, c, data.train, data.val);
    rows.push_back({*r.epochs.back().val_accuracy, *f.epochs.back().val_accuracy, *p.epochs.back().val_accuracy});
  }
  return rows;
}

Outcome directional_analogue() {
  Outcome o;
  constexpr int kSeeds = 5;
  const std::pair<SynthFamily, BackboneKind> setups[] = {
      {SynthFamily::quadrant, BackboneKind::windowed_attention},
      {SynthFamily::center_blob, BackboneKind::ssm_scan},
  };
  for (const auto& [family, kind] : setups) {
    const auto rows = directional_runs(family, kind, kSeeds);
    int wins = 0, worse = 0;
    std::string table;
    for (const auto& r : rows) {
      wins += r.reorder_acc >= r.fixed_acc;
      worse += r.per_batch_acc < r.fixed_acc;
      table += " " + fmt("%.3f", r.reorder_acc) + "/" + fmt("%.3f", r.fixed_acc) + "/" + fmt("%.3f", r.per_batch_acc);
    }
    const std::string name = std::string(to_string(kind)) + " on " + std::string(to_string(family));
    if (!o.detail.empty()) o.detail += " | ";
    o.detail += name + ": reorder>=fixed " + std::to_string(wins) + "/" + std::to_string(kSeeds) +
                ", random<fixed " + std::to_string(worse) + "/" + std::to_string(kSeeds) + " [" + table.substr(1) + "]";
    if (2 * wins <= kSeeds || 2 * worse <= kSeeds) o.pass = false;
  }
  return o;
}

// ------------------------------------------------------------------ 8

Outcome compression_prior_check() {
  Outcome o;
  auto report_for = [](SynthFamily family) {
    SynthSpec spec;
    spec.family = family;
    spec.grid = {8, 8};
    spec.train_size = 256;
    spec.val_size = 1;
    spec.seed = 9;
    PriorConfig cfg;
    cfg.sample_size = 256;
    cfg.seed = 3;
    return rank_orderings(generate(spec).train, cfg);
  };
  auto ratio = [](const CompressionReport& r, ScanOrder order, Tokenization t) {
    for (const auto& row : r.rows) {
      if (row.order == order && row.tokenization == t) return row.ratio;
    }
    return std::nan("");
  };
  std::string summary;
  for (SynthFamily family : {SynthFamily::stripes_h, SynthFamily::stripes_v}) {
    const auto report = report_for(family);
    const auto again = report_for(family);
    o.require(format_report_csv(report) == format_report_csv(again), "report not reproducible");
    for (Tokenization t : {Tokenization::unigram, Tokenization::bigram}) {
      const double rm = ratio(report, ScanOrder::row_major, t);
      const double cm = ratio(report, ScanOrder::column_major, t);
      const bool ok = family == SynthFamily::stripes_h ? rm < cm : cm < rm;
      o.require(ok, std::string(to_string(family)) + "/" + std::string(to_string(t)) + " row " + fmt("%.4f", rm) +
                        " col " + fmt("%.4f", cm));
      if (t == Tokenization::unigram) {
        summary += " " + std::string(to_string(family)) + " row " + fmt("%.3f", rm) + " col " + fmt("%.3f", cm);
      }
    }
    double best = -1.0;
    ScanOrder best_order = ScanOrder::row_major;
    for (const auto& row : report.rows) {
      if (row.tokenization == Tokenization::unigram && row.ratio > best) {
        best = row.ratio;
        best_order = row.order;
      }
    }
    o.require(report.prior_order == best_order, "prior is not the argmax ordering");
    o.require(report.prior == linearize(best_order, {8, 8}), "prior permutation does not match its order");
  }
  if (o.pass) o.detail = "reproducible, prior = argmax ratio;" + summary;
  return o;
}

// ------------------------------------------------------------------ 9

Outcome curriculum_integrity() {
  Outcome o;
  SynthSpec spec;
  spec.family = SynthFamily::quadrant;
  spec.grid = {4, 4};
  spec.train_size = 128;
  spec.val_size = 32;
  spec.seed = 4;
  const auto data = generate(spec);
  TrainConfig c;
  c.backbone.kind = BackboneKind::windowed_attention;
  c.backbone.grid = {4, 4};
  c.backbone.embed_dim = 8;
  c.backbone.depth = 1;
  c.schedule = {3, 4, 0.5};
  c.epochs = 10;
  c.batch_size = 16;
  c.backbone_lr = 1e-3;
  c.policy.optimizer.learning_rate = 1e-2;
  c.prior = linearize(ScanOrder::snake, spec.grid);
  c.seed = 8;
  const auto r = train(c, data.train, data.val);
  const PolicyLogits initial = init_from_prior(16, *c.prior);

  o.require(!r.snapshots.empty() && r.snapshots.front().logits == initial, "initial logits differ from the prior");
  for (const auto& s : r.snapshots) {
    if (s.epoch >= 0 && s.epoch <= 3) o.require(s.logits == initial, "logits moved before the policy phase");
  }
  o.require(r.snapshots.size() >= 2 && r.logits == r.snapshots[r.snapshots.size() - 2].logits,
            "logits moved after the policy phase");
  bool changed = false;
  for (const auto& s : r.snapshots) changed |= !(s.logits == initial);
  o.require(changed, "policy never updated");

  const auto warm_hash = permutation_hash(*c.prior);
  const auto frozen_hash = permutation_hash(ml_permutation(r.logits));
  std::size_t policy_batches = 0;
  for (const auto& b : r.batches) {
    if (b.cls_position != 0) o.require(false, "CLS left position 0");
    if (b.distinct_example_perms != 1) o.require(false, "batch mixed permutations");
    if (b.epoch < 3 && b.perm_hash != warm_hash) o.require(false, "warmup batch off the prior order");
    if (b.epoch >= 7 && b.perm_hash != frozen_hash) o.require(false, "freeze batch off the ML permutation");
    policy_batches += b.epoch >= 3 && b.epoch < 7;
    if (!o.pass) break;
  }
  if (o.pass) {
    o.detail = std::to_string(r.batches.size()) + " batches (" + std::to_string(policy_batches) +
               " in the policy phase), " + std::to_string(r.snapshots.size()) + " snapshots";
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"linearization suite", linearization_suite},
      {"plackett-luce exactness", plackett_luce_exactness},
      {"gradient fidelity", gradient_fidelity},
      {"equivariance dichotomy", equivariance_dichotomy},
      {"reinforce mechanics", reinforce_mechanics},
      {"policy convergence bandit", policy_convergence},
      {"directional end-to-end runs", directional_analogue},
      {"compression prior", compression_prior_check},
      {"curriculum phase integrity", curriculum_integrity},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
