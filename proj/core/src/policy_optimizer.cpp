#include "reorder/policy_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "reorder/error.hpp"
#include "reorder/synth_data.hpp"

namespace reorder {

BaselineState update_baseline(BaselineState state, double reward) {
  state.b = state.beta * state.b + (1.0 - state.beta) * reward;
  return state;
}

double temperature_at(const CurriculumSchedule& sched, std::size_t epoch) {
  const std::size_t N = sched.warmup_epochs;
  const std::size_t M = sched.policy_epochs;
  if (epoch < N || epoch >= N + M) return 0.0;
  const double x = static_cast<double>(epoch - N);
  const double half = static_cast<double>(M) / 2.0;
  if (x <= half) return sched.peak_temperature * x / half;
  return sched.peak_temperature * (static_cast<double>(M) - x) / (static_cast<double>(M) - half);
}

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::warmup: return "warmup";
    case Phase::policy: return "policy";
    case Phase::freeze: return "freeze";
  }
  return "unknown";
}

Phase phase_at(const CurriculumSchedule& sched, std::size_t epoch) {
  if (epoch < sched.warmup_epochs) return Phase::warmup;
  if (epoch < sched.warmup_epochs + sched.policy_epochs) return Phase::policy;
  return Phase::freeze;
}

PolicyLearner::PolicyLearner(PolicyLogits initial, PolicyLearnerConfig config)
    : z_(std::move(initial)),
      config_(config),
      optimizer_(z_.size(), config.optimizer),
      baseline_{0.0, config.baseline_momentum} {
  if (!(config.baseline_momentum >= 0.0 && config.baseline_momentum < 1.0)) {
    throw ValidationError("baseline momentum must lie in [0, 1)");
  }
}

PolicyStep PolicyLearner::observe(const Permutation& perm, double reward, bool update_logits) {
  if (!std::isfinite(reward)) throw NumericError("non-finite reward");
  if (!seen_reward_ && config_.baseline_warm_start) baseline_.b = reward;
  seen_reward_ = true;

  PolicyStep step;
  step.reward = reward;
  if (config_.advantage_before_update) {
    step.advantage = reward - baseline_.b;
    baseline_ = update_baseline(baseline_, reward);
  } else {
    baseline_ = update_baseline(baseline_, reward);
    step.advantage = reward - baseline_.b;
  }
  step.baseline = baseline_.b;

  if (update_logits) {
    std::vector<double> grad = log_prob_gradient(z_, perm);
    for (double& g : grad) g *= -step.advantage;
    optimizer_.step(z_.mutable_values(), grad);
    for (double v : z_.values()) {
      if (!std::isfinite(v)) throw NumericError("policy logits became non-finite");
    }
    step.updated_logits = true;
  }
  return step;
}

std::string_view to_string(TrainMode mode) noexcept {
  switch (mode) {
    case TrainMode::reorder: return "reorder";
    case TrainMode::fixed_order: return "fixed_order";
    case TrainMode::static_random: return "static_random";
    case TrainMode::per_batch_random: return "per_batch_random";
    case TrainMode::replay_learned: return "replay_learned";
  }
  return "unknown";
}

TrainMode parse_train_mode(std::string_view name) {
  if (name == "reorder") return TrainMode::reorder;
  if (name == "fixed" || name == "fixed_order") return TrainMode::fixed_order;
  if (name == "static_random") return TrainMode::static_random;
  if (name == "per_batch_random") return TrainMode::per_batch_random;
  if (name == "replay" || name == "replay_learned") return TrainMode::replay_learned;
  throw ValidationError("unknown training mode '" + std::string(name) + "'");
}

void TrainConfig::validate(const Dataset& train_set) const {
  if (train_set.empty()) throw ValidationError("training set is empty");
  train_set.validate();
  const BackboneConfig b = backbone.resolved();
  if (!(b.grid == train_set.grid)) {
    throw ValidationError("backbone grid " + std::to_string(b.grid.height) + "x" + std::to_string(b.grid.width) +
                          " does not match dataset grid " + std::to_string(train_set.grid.height) + "x" +
                          std::to_string(train_set.grid.width));
  }
  if (b.channels != train_set.channels) throw ValidationError("backbone channels do not match dataset channels");
  if (b.classes < train_set.classes) throw ValidationError("backbone has fewer classes than the dataset");
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (epochs == 0) throw ValidationError("epochs must be positive");
  if (mode == TrainMode::reorder && schedule.warmup_epochs + schedule.policy_epochs > epochs) {
    throw ValidationError("warmup_epochs + policy_epochs (" +
                          std::to_string(schedule.warmup_epochs + schedule.policy_epochs) +
                          ") exceeds total epochs (" + std::to_string(epochs) + ")");
  }
  if (!(schedule.peak_temperature >= 0.0) || !std::isfinite(schedule.peak_temperature)) {
    throw ValidationError("peak_temperature must be finite and >= 0");
  }
  for (double lr : {backbone_lr, backbone_rl_lr, policy.optimizer.learning_rate}) {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ValidationError("learning rates must be finite and >= 0");
  }
  if (prior && prior->size() != train_set.grid.size()) {
    throw ValidationError("prior permutation length does not match the patch count");
  }
  if (mode == TrainMode::replay_learned) {
    if (!replay_logits) throw ValidationError("replay_learned requires a policy snapshot");
    if (replay_logits->size() != train_set.grid.size()) {
      throw ValidationError("policy snapshot length does not match the patch count");
    }
  }
}

double accuracy(const ToyBackbone& model, const Dataset& data, const Permutation& perm) {
  if (data.empty()) return 0.0;
  return static_cast<double>(model.count_correct(data.examples, perm)) / static_cast<double>(data.size());
}

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

Permutation random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> m(n);
  std::iota(m.begin(), m.end(), std::size_t{0});
  std::shuffle(m.begin(), m.end(), rng);
  return Permutation(std::move(m));
}

PolicySnapshot snapshot_of(const PolicyLogits& z, const TrainConfig& config, long epoch, const std::string& prior) {
  return {z, prior, epoch, config.backbone.grid.height, config.backbone.grid.width};
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& train_set, const Dataset& val) {
  config.validate(train_set);
  const std::size_t n = train_set.grid.size();
  const BackboneConfig bcfg = config.backbone.resolved();

  // Independent streams so paired runs share data order and initialization.
  Rng data_rng(derive_seed(config.seed, 0));
  Rng perm_rng(derive_seed(config.seed, 2));
  Rng static_rng(derive_seed(config.seed, 3));

  const Permutation base = linearize(config.base_order, train_set.grid);
  const Permutation prior = config.prior.value_or(base);
  const std::string prior_name = config.prior ? "prior" : std::string(to_string(config.base_order));

  PolicyLearnerConfig pcfg = config.policy;
  pcfg.optimizer.beta1 = config.optimizer.beta1;
  pcfg.optimizer.beta2 = config.optimizer.beta2;
  pcfg.optimizer.epsilon = config.optimizer.epsilon;
  pcfg.optimizer.weight_decay = config.optimizer.weight_decay;
  PolicyLearner learner(init_from_prior(n, prior), pcfg);

  Permutation static_perm = base;
  if (config.mode == TrainMode::static_random) static_perm = random_permutation(n, static_rng);
  if (config.mode == TrainMode::replay_learned) static_perm = ml_permutation(*config.replay_logits);

  TrainResult result{ToyBackbone(bcfg, derive_seed(config.seed, 1)), learner.logits(), base, {}, {}, {}};
  ToyBackbone& model = result.model;
  AdamWConfig bopt = config.optimizer;
  bopt.learning_rate = config.backbone_lr;
  AdamW backbone_opt(model.params().total_size(), bopt);
  ParamSet grad = model.params().zeros_like();

  const bool learning = config.mode == TrainMode::reorder;
  if (learning) result.snapshots.push_back(snapshot_of(learner.logits(), config, -1, prior_name));

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const Phase phase = learning ? phase_at(config.schedule, epoch) : Phase::warmup;
    const double tau = learning ? temperature_at(config.schedule, epoch) : 0.0;
    const bool policy_active = learning && phase == Phase::policy && tau > 0.0;
    const double backbone_lr = (learning && phase == Phase::policy) ? config.backbone_rl_lr : config.backbone_lr;

    std::shuffle(order.begin(), order.end(), data_rng);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.phase = phase;
    rec.temperature = tau;
    rec.perm_hash = kFnvOffsetBasis;
    std::size_t batches = 0;

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<LabeledGridExample> batch;
      batch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const auto& ex = train_set.examples[order[i]];
        if (config.horizontal_flip && std::bernoulli_distribution(0.5)(data_rng)) {
          batch.push_back(flip_horizontal(ex, train_set.grid, train_set.channels));
        } else {
          batch.push_back(ex);
        }
      }

      Permutation perm = base;
      switch (config.mode) {
        case TrainMode::reorder:
          if (phase == Phase::policy) perm = learner.sample(tau, perm_rng).perm;
          else perm = ml_permutation(learner.logits());
          break;
        case TrainMode::fixed_order: perm = base; break;
        case TrainMode::static_random:
        case TrainMode::replay_learned: perm = static_perm; break;
        case TrainMode::per_batch_random: perm = random_permutation(n, perm_rng); break;
      }

      ToyBackbone::BatchResult br;
      try {
        br = model.loss_and_gradient(batch, perm, &grad);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + " batch " + std::to_string(batches) + ": " + e.what());
      }
      const double reward = -br.mean_loss;
      const PolicyStep step = learner.observe(perm, reward, policy_active);
      backbone_opt.step(model.params().flat(), grad.flat(), backbone_lr);

      const std::uint64_t h = permutation_hash(perm);
      rec.perm_hash = fold_permutation_hash(rec.perm_hash, perm);
      rec.ce_loss += br.mean_loss;
      rec.reward += reward;
      rec.advantage_mean += step.advantage;
      rec.baseline = step.baseline;
      if (config.record_batches) {
        const std::set<std::uint64_t> distinct(br.example_perm_hashes.begin(), br.example_perm_hashes.end());
        result.batches.push_back({epoch, batches, h, br.cls_position, distinct.size(), tau, br.mean_loss, reward,
                                  step.baseline, step.advantage});
      }
      ++batches;
    }
    rec.ce_loss /= static_cast<double>(batches);
    rec.reward /= static_cast<double>(batches);
    rec.advantage_mean /= static_cast<double>(batches);

    switch (config.mode) {
      case TrainMode::reorder: rec.eval_perm = ml_permutation(learner.logits()); break;
      case TrainMode::static_random:
      case TrainMode::replay_learned: rec.eval_perm = static_perm; break;
      default: rec.eval_perm = base; break;
    }
    if (!val.empty()) rec.val_accuracy = accuracy(model, val, rec.eval_perm);
    if (learning && phase == Phase::policy) {
      result.snapshots.push_back(snapshot_of(learner.logits(), config, static_cast<long>(epoch), prior_name));
    }
    result.epochs.push_back(std::move(rec));
  }

  result.logits = learner.logits();
  result.final_perm = result.epochs.back().eval_perm;
  if (learning && result.snapshots.back().epoch != static_cast<long>(config.epochs - 1)) {
    result.snapshots.push_back(snapshot_of(learner.logits(), config, static_cast<long>(config.epochs - 1), prior_name));
  }
  return result;
}

TrainResult run_curriculum(TrainConfig config, const Dataset& train_set, const Dataset& val) {
  config.mode = TrainMode::reorder;
  return train(config, train_set, val);
}

TrainResult run_baseline_mode(TrainMode mode, TrainConfig config, const Dataset& train_set, const Dataset& val) {
  if (mode == TrainMode::reorder) throw ValidationError("run_baseline_mode needs a non-learned mode");
  config.mode = mode;
  return train(config, train_set, val);
}

}  // namespace reorder
