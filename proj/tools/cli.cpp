#include "cli.hpp"

#include <algorithm>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "reorder/analysis.hpp"
#include "reorder/backbone.hpp"
#include "reorder/compression_prior.hpp"
#include "reorder/error.hpp"
#include "reorder/grid_linearize.hpp"
#include "reorder/perm_io.hpp"
#include "reorder/pl_policy.hpp"
#include "reorder/policy_optimizer.hpp"
#include "reorder/synth_data.hpp"
#include "reorder/trace_io.hpp"
#include "svg.hpp"

namespace reorder::cli {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<ScanOrder> parse_orders(const std::string& text) {
  if (text == "all") return {kAllScanOrders.begin(), kAllScanOrders.end()};
  std::vector<ScanOrder> out;
  for (const auto& name : split_list(text)) out.push_back(parse_scan_order(name));
  if (out.empty()) throw ValidationError("no scan orders given");
  return out;
}

std::vector<std::size_t> parse_indices(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ValidationError("bad index '" + item + "'");
    }
  }
  return out;
}

/// Options every subcommand accepts.
struct Shared {
  std::uint64_t seed = 0;
  std::string out = "out";
};

/// Reads TOML/INI config files; keys outside any section belong to the
/// subcommand being run, so a `resolved_config.toml` can be fed straight back.
class SubcommandConfig : public CLI::ConfigTOML {
 public:
  explicit SubcommandConfig(const CLI::App* app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigTOML::from_config(input);
    const auto active = app_->get_subcommands();
    if (active.empty()) return items;
    for (auto& item : items) {
      if (item.parents.empty()) item.parents.push_back(active.front()->get_name());
    }
    return items;
  }

 private:
  const CLI::App* app_;
};

void add_shared(CLI::App* cmd, Shared& s) {
  cmd->add_option("--seed", s.seed, "Random seed")->capture_default_str();
  cmd->add_option("--out", s.out, "Output directory")->capture_default_str();
}

// ---------------------------------------------------------------- orders

struct OrdersOptions {
  Shared shared;
  std::size_t height = 14;
  std::size_t width = 14;
  std::string orders = "all";
};

void run_orders(const OrdersOptions& o, std::ostream& out) {
  const GridSpec grid{o.height, o.width};
  grid.validate();
  for (ScanOrder order : parse_orders(o.orders)) {
    const std::string name(to_string(order));
    PermutationFile file{linearize(order, grid), grid, name, {{"generator", "linearize"}}};
    write_permutation_file(fs::path(o.shared.out) / (name + ".json"), file);
    write_text_file(fs::path(o.shared.out) / (name + ".svg"),
                    render_trajectory_svg(grid, trajectory_points(order, grid),
                                          name + " " + std::to_string(o.height) + "x" + std::to_string(o.width)));
    out << name << ": " << grid.size() << " patches -> " << (fs::path(o.shared.out) / (name + ".json")).string()
        << "\n";
  }
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  Shared shared;
  std::string family = "quadrant";
  std::size_t height = 8;
  std::size_t width = 8;
  std::size_t classes = 4;
  double noise_std = 0.1;
  std::size_t train_size = 2048;
  std::size_t val_size = 512;
  bool text = false;

  SynthSpec spec() const {
    SynthSpec s;
    s.family = parse_synth_family(family);
    s.grid = {height, width};
    s.classes = classes;
    s.noise_std = noise_std;
    s.train_size = train_size;
    s.val_size = val_size;
    s.seed = shared.seed;
    return s;
  }
};

void add_synth_options(CLI::App* cmd, SynthOptions& o, bool with_shared) {
  if (with_shared) add_shared(cmd, o.shared);
  cmd->add_option("--family", o.family, "quadrant, stripes_h, stripes_v, center_blob or checker")->capture_default_str();
  cmd->add_option("--height", o.height, "Grid rows")->capture_default_str();
  cmd->add_option("--width", o.width, "Grid columns")->capture_default_str();
  cmd->add_option("--classes", o.classes, "Class count")->capture_default_str();
  cmd->add_option("--noise_std", o.noise_std, "Additive Gaussian feature noise")->capture_default_str();
  cmd->add_option("--train_size", o.train_size, "Training examples")->capture_default_str();
  cmd->add_option("--val_size", o.val_size, "Validation examples")->capture_default_str();
}

void run_synth(const SynthOptions& o, std::ostream& out) {
  const auto splits = generate(o.spec());
  const fs::path dir(o.shared.out);
  save_dataset(dir / "train.bin", splits.train);
  save_dataset(dir / "val.bin", splits.val);
  if (o.text) {
    write_text_file(dir / "train.jsonl", export_dataset_text(splits.train));
    write_text_file(dir / "val.jsonl", export_dataset_text(splits.val));
  }
  out << "wrote " << splits.train.size() << " train / " << splits.val.size() << " val examples to " << dir.string()
      << "\n";
}

// ---------------------------------------------------------------- prior

struct PriorOptions {
  Shared shared;
  std::string dataset;
  std::uint32_t codebook_size = 16;
  std::string orders = "all";
  std::string tokenizations = "unigram,bigram";
  std::string prior_tokenization = "unigram";
  std::size_t sample_size = 512;
};

void run_prior(const PriorOptions& o, std::ostream& out) {
  const Dataset data = load_dataset(o.dataset);
  if (data.empty()) throw ValidationError("dataset '" + o.dataset + "' is empty");
  PriorConfig cfg;
  cfg.orders = parse_orders(o.orders);
  cfg.tokenizations.clear();
  for (const auto& t : split_list(o.tokenizations)) cfg.tokenizations.push_back(parse_tokenization(t));
  cfg.prior_tokenization = parse_tokenization(o.prior_tokenization);
  cfg.codebook_size = o.codebook_size;
  cfg.sample_size = o.sample_size;
  cfg.seed = o.shared.seed;
  const CompressionReport report = rank_orderings(data, cfg);

  const fs::path dir(o.shared.out);
  write_text_file(dir / "compression_report.csv", format_report_csv(report));
  double ratio = 0.0;
  for (const auto& row : report.rows) {
    if (row.order == report.prior_order && row.tokenization == cfg.prior_tokenization) ratio = row.ratio;
  }
  PermutationFile prior{report.prior,
                        data.grid,
                        std::string(to_string(report.prior_order)),
                        {{"selected_by", "max_compression_ratio"},
                         {"tokenization", std::string(to_string(cfg.prior_tokenization))},
                         {"ratio", format_real(ratio)},
                         {"codebook_size", std::to_string(report.codebook_size)},
                         {"compressor_id", report.compressor_id},
                         {"quantizer_id", report.quantizer_id},
                         {"sample_size", std::to_string(report.sample_size)},
                         {"seed", std::to_string(o.shared.seed)}}};
  write_permutation_file(dir / "prior.json", prior);
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  out << "prior: " << to_string(report.prior_order) << " (ratio " << format_real(ratio) << ")\n";
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  Shared shared;
  SynthOptions synth;
  std::string train_path;
  std::string val_path;
  std::string mode = "reorder";
  std::string kind = "windowed_attention";
  std::string order = "row_major";
  std::string prior;
  std::string snapshot;
  std::size_t embed_dim = 32;
  std::size_t depth = 2;
  std::size_t mlp_dim = 0;
  std::size_t window = 3;
  std::size_t segment_length = 0;
  long memory_length = -1;
  std::size_t state_dim = 16;
  std::string position_mode = "sequence";
  std::size_t warmup_epochs = 15;
  std::size_t policy_epochs = 30;
  double peak_temperature = 0.2;
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double backbone_lr = 1e-4;
  double backbone_rl_lr = 1e-5;
  double policy_lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.03;
  double baseline_momentum = 0.99;
  bool advantage_before_update = false;
  bool baseline_warm_start = true;
  bool horizontal_flip = false;
  std::string seeds;
  std::size_t jobs = 1;
};

struct LoadedData {
  Dataset train;
  Dataset val;
};

LoadedData load_train_data(const TrainOptions& o) {
  if (o.train_path.empty()) {
    const auto splits = generate(o.synth.spec());
    return {splits.train, splits.val};
  }
  LoadedData d{load_dataset(o.train_path), {}};
  if (!o.val_path.empty()) d.val = load_dataset(o.val_path);
  if (!d.val.empty() && !(d.val.grid == d.train.grid)) {
    throw ValidationError("validation grid does not match the training grid");
  }
  return d;
}

TrainConfig make_train_config(const TrainOptions& o, const Dataset& train, std::uint64_t seed) {
  TrainConfig c;
  c.mode = parse_train_mode(o.mode);
  c.backbone.kind = parse_backbone_kind(o.kind);
  c.backbone.grid = train.grid;
  c.backbone.channels = train.channels;
  c.backbone.classes = train.classes;
  c.backbone.embed_dim = o.embed_dim;
  c.backbone.depth = o.depth;
  c.backbone.mlp_dim = o.mlp_dim;
  c.backbone.window = o.window;
  c.backbone.segment_length = o.segment_length;
  c.backbone.memory_length = o.memory_length;
  c.backbone.state_dim = o.state_dim;
  c.backbone.position_mode = parse_position_mode(o.position_mode);
  c.base_order = parse_scan_order(o.order);
  if (!o.prior.empty()) {
    const PermutationFile f = read_permutation_file(o.prior);
    if (!(f.grid == train.grid)) throw ValidationError("prior grid does not match the dataset grid");
    c.prior = f.perm;
  }
  if (!o.snapshot.empty()) c.replay_logits = read_policy_snapshot(o.snapshot).logits;
  c.schedule = {o.warmup_epochs, o.policy_epochs, o.peak_temperature};
  c.epochs = o.epochs;
  c.batch_size = o.batch_size;
  c.backbone_lr = o.backbone_lr;
  c.backbone_rl_lr = o.backbone_rl_lr;
  c.optimizer.beta1 = o.beta1;
  c.optimizer.beta2 = o.beta2;
  c.optimizer.weight_decay = o.weight_decay;
  c.policy.optimizer.learning_rate = o.policy_lr;
  c.policy.baseline_momentum = o.baseline_momentum;
  c.policy.advantage_before_update = o.advantage_before_update;
  c.policy.baseline_warm_start = o.baseline_warm_start;
  c.horizontal_flip = o.horizontal_flip;
  c.seed = seed;
  return c;
}

void write_run(const fs::path& dir, const TrainConfig& cfg, const TrainResult& r, const Dataset& train) {
  fs::create_directories(dir);
  write_text_file(dir / "epoch_trace.csv", format_epoch_trace_csv(r.epochs));
  if (cfg.record_batches) write_text_file(dir / "batch_trace.csv", format_batch_trace_csv(r.batches));
  save_checkpoint(dir / "model.ckpt", r.model);
  PermutationFile final_perm{r.final_perm, train.grid, cfg.mode == TrainMode::reorder ? "learned" : "fixed",
                             {{"mode", std::string(to_string(cfg.mode))}, {"seed", std::to_string(cfg.seed)}}};
  write_permutation_file(dir / "final_perm.json", final_perm);
  if (!r.snapshots.empty()) write_policy_snapshots(dir / "policy", r.snapshots);
  else if (cfg.mode == TrainMode::replay_learned) {
    write_policy_snapshot(dir / "policy" / "policy_epoch_replay.json",
                          {*cfg.replay_logits, "replay", -1, train.grid.height, train.grid.width});
  }
}

void run_train(const CLI::App& cmd, const TrainOptions& o, std::ostream& out) {
  const LoadedData data = load_train_data(o);
  std::vector<std::uint64_t> seeds;
  if (o.seeds.empty()) seeds.push_back(o.shared.seed);
  for (auto s : parse_indices(o.seeds)) seeds.push_back(s);

  std::vector<TrainConfig> configs;
  for (auto s : seeds) {
    configs.push_back(make_train_config(o, data.train, s));
    configs.back().validate(data.train);
  }
  const fs::path root(o.shared.out);
  fs::create_directories(root);
  write_text_file(root / "resolved_config.toml", cmd.config_to_str(true, false));

  std::vector<std::string> lines(seeds.size());
  std::vector<std::exception_ptr> failures(seeds.size());
  auto run_one = [&](std::size_t i) {
    try {
      const TrainResult r = train(configs[i], data.train, data.val);
      const fs::path dir = seeds.size() == 1 ? root : root / ("seed_" + std::to_string(seeds[i]));
      write_run(dir, configs[i], r, data.train);
      const auto& last = r.epochs.back();
      lines[i] = "seed " + std::to_string(seeds[i]) + ": final ce_loss " + format_real(last.ce_loss) +
                 (last.val_accuracy ? ", val_acc " + format_real(*last.val_accuracy) : std::string()) +
                 ", perm " + to_string(r.final_perm);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(o.jobs, seeds.size()));
  std::size_t next = 0;
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard lock(m);
          if (next >= seeds.size()) return;
          i = next++;
        }
        run_one(i);
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  for (const auto& l : lines) out << l << "\n";
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  Shared shared;
  std::string checkpoint;
  std::string policy;
  std::string perm;
  std::string dataset;
  std::string order = "row_major";
};

void run_eval(const EvalOptions& o, std::ostream& out) {
  const ToyBackbone model = load_checkpoint(o.checkpoint);
  const Dataset data = load_dataset(o.dataset);
  const BackboneConfig& mc = model.config();
  if (!(mc.grid == data.grid) || mc.channels != data.channels || mc.classes < data.classes) {
    throw ValidationError("checkpoint shape (" + std::to_string(mc.grid.height) + "x" + std::to_string(mc.grid.width) +
                          ", " + std::to_string(mc.channels) + " channels, " + std::to_string(mc.classes) +
                          " classes) does not match the dataset");
  }
  const Permutation base = linearize(parse_scan_order(o.order), data.grid);
  nlohmann::json report = {{"checkpoint", o.checkpoint},
                           {"dataset", o.dataset},
                           {"examples", data.size()},
                           {"base_order", o.order},
                           {"base_accuracy", accuracy(model, data, base)}};
  if (!o.policy.empty()) {
    const PolicySnapshot snap = read_policy_snapshot(o.policy);
    if (snap.logits.size() != data.grid.size()) {
      throw ValidationError("policy length does not match the dataset patch count");
    }
    const Permutation ml = ml_permutation(snap.logits);
    report["policy"] = o.policy;
    report["policy_accuracy"] = accuracy(model, data, ml);
    report["policy_perm"] = std::vector<std::size_t>(ml.mapping().begin(), ml.mapping().end());
  }
  if (!o.perm.empty()) {
    const PermutationFile f = read_permutation_file(o.perm);
    if (!(f.grid == data.grid)) throw ValidationError("permutation grid does not match the dataset");
    report["perm"] = o.perm;
    report["perm_accuracy"] = accuracy(model, data, f.perm);
  }
  write_text_file(fs::path(o.shared.out) / "eval.json", report.dump(2) + "\n");
  out << report.dump(2) << "\n";
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOptions {
  Shared shared;
  std::string trace;
  std::string order = "row_major";
  std::string region = "center";
  std::string track;
  std::size_t height = 0;
  std::size_t width = 0;
};

void run_analyze(const AnalyzeOptions& o, std::ostream& out) {
  const auto snaps = read_policy_snapshots(o.trace);
  if (snaps.empty()) throw ValidationError("no policy snapshots found below '" + o.trace + "'");
  GridSpec grid{o.height ? o.height : snaps.front().grid_height, o.width ? o.width : snaps.front().grid_width};
  if (grid.height == 0 || grid.width == 0) throw ValidationError("grid unknown: pass --height and --width");
  grid.validate();
  const std::size_t n = grid.size();
  for (const auto& s : snaps) {
    if (s.logits.size() != n) throw ValidationError("snapshot length does not match the grid");
  }
  const std::vector<bool> region = o.region == "center" ? center_region(grid)
                                   : o.region == "all"  ? std::vector<bool>(n, true)
                                                        : region_from_patches(grid, parse_indices(o.region));
  std::vector<std::size_t> tracked = parse_indices(o.track);
  if (tracked.empty()) {
    for (std::size_t p = 0; p < n; ++p) {
      if (region[p]) tracked.push_back(p);
    }
  }
  for (auto p : tracked) {
    if (p >= n) throw ValidationError("tracked patch " + std::to_string(p) + " outside the grid");
  }
  const Permutation base = linearize(parse_scan_order(o.order), grid);
  const Permutation first = ml_permutation(snaps.front().logits);

  std::string heat = "epoch";
  for (std::size_t k = 0; k < n; ++k) heat += ",slot_" + std::to_string(k);
  heat += '\n';
  std::string traj = "epoch,patch,position\n";
  std::string shift = "epoch,shift_vs_base,shift_vs_first\n";
  for (const auto& s : snaps) {
    const std::string e = std::to_string(s.epoch);
    heat += e;
    for (double v : s.logits.values()) heat += ',' + format_real(v);
    heat += '\n';
    const Permutation ml = ml_permutation(s.logits);
    const auto pos = patch_positions(ml);
    for (auto p : tracked) traj += e + ',' + std::to_string(p) + ',' + std::to_string(pos[p]) + '\n';
    shift += e + ',' + format_real(positional_shift_stats(ml, base, region)) + ',' +
             format_real(positional_shift_stats(ml, first, region)) + '\n';
  }
  const fs::path dir(o.shared.out);
  write_text_file(dir / "logits_heatmap.csv", heat);
  write_text_file(dir / "trajectories.csv", traj);
  write_text_file(dir / "shift_stats.csv", shift);
  const Permutation last = ml_permutation(snaps.back().logits);
  out << snaps.size() << " snapshots; final shift vs " << o.order << ": "
      << format_real(positional_shift_stats(last, base, region)) << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"REOrder at desk scale: scan orders, compression priors and learned patch orderings"};
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "Config file of key = value lines named like the flags; the command line wins");
  app.config_formatter(std::make_shared<SubcommandConfig>(&app));

  OrdersOptions orders;
  auto* c_orders = app.add_subcommand("orders", "Write every scan order as a permutation file and an SVG");
  add_shared(c_orders, orders.shared);
  c_orders->add_option("--height", orders.height, "Grid rows")->capture_default_str();
  c_orders->add_option("--width", orders.width, "Grid columns")->capture_default_str();
  c_orders->add_option("--orders", orders.orders, "Comma-separated order names or 'all'")->capture_default_str();

  SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic dataset (train.bin, val.bin)");
  add_synth_options(c_synth, synth, true);
  c_synth->add_flag("--text", synth.text, "Also write JSON-lines exports");

  PriorOptions prior;
  auto* c_prior = app.add_subcommand("prior", "Rank scan orders by compressibility and emit the prior");
  add_shared(c_prior, prior.shared);
  c_prior->add_option("--dataset", prior.dataset, "Dataset file")->required();
  c_prior->add_option("--K", prior.codebook_size, "Codebook size")->capture_default_str();
  c_prior->add_option("--orders", prior.orders, "Comma-separated order names or 'all'")->capture_default_str();
  c_prior->add_option("--tokenizations", prior.tokenizations, "unigram and/or bigram")->capture_default_str();
  c_prior->add_option("--prior_tokenization", prior.prior_tokenization, "Tokenization that picks the prior")
      ->capture_default_str();
  c_prior->add_option("--sample_size", prior.sample_size, "Examples compressed per ordering (0 = all)")
      ->capture_default_str();

  TrainOptions tr;
  auto* c_train = app.add_subcommand("train", "Train a backbone with REOrder or a baseline permutation regime");
  add_shared(c_train, tr.shared);
  add_synth_options(c_train, tr.synth, false);
  c_train->add_option("--train", tr.train_path, "Training dataset file (omit to generate from the synth options)");
  c_train->add_option("--val", tr.val_path, "Validation dataset file");
  c_train->add_option("--mode", tr.mode, "reorder, fixed, static_random, per_batch_random or replay")
      ->capture_default_str();
  c_train->add_option("--kind", tr.kind, "Backbone kind")->capture_default_str();
  c_train->add_option("--order", tr.order, "Base scan order")->capture_default_str();
  c_train->add_option("--prior", tr.prior, "Permutation file initializing the policy");
  c_train->add_option("--snapshot", tr.snapshot, "Policy snapshot replayed by --mode replay");
  c_train->add_option("--embed_dim", tr.embed_dim)->capture_default_str();
  c_train->add_option("--depth", tr.depth)->capture_default_str();
  c_train->add_option("--mlp_dim", tr.mlp_dim, "0 = 2 * embed_dim")->capture_default_str();
  c_train->add_option("--window", tr.window)->capture_default_str();
  c_train->add_option("--segment_length", tr.segment_length, "0 = patches / 4")->capture_default_str();
  c_train->add_option("--memory_length", tr.memory_length, "-1 = segment_length")->capture_default_str();
  c_train->add_option("--state_dim", tr.state_dim)->capture_default_str();
  c_train->add_option("--position_mode", tr.position_mode, "sequence or patch")->capture_default_str();
  c_train->add_option("--warmup_epochs", tr.warmup_epochs)->capture_default_str();
  c_train->add_option("--policy_epochs", tr.policy_epochs)->capture_default_str();
  c_train->add_option("--peak_temperature", tr.peak_temperature)->capture_default_str();
  c_train->add_option("--epochs", tr.epochs)->capture_default_str();
  c_train->add_option("--batch_size", tr.batch_size)->capture_default_str();
  c_train->add_option("--backbone_lr", tr.backbone_lr)->capture_default_str();
  c_train->add_option("--backbone_rl_lr", tr.backbone_rl_lr, "Backbone rate while the policy trains")
      ->capture_default_str();
  c_train->add_option("--policy_lr", tr.policy_lr)->capture_default_str();
  c_train->add_option("--beta1", tr.beta1)->capture_default_str();
  c_train->add_option("--beta2", tr.beta2)->capture_default_str();
  c_train->add_option("--weight_decay", tr.weight_decay)->capture_default_str();
  c_train->add_option("--baseline_momentum", tr.baseline_momentum)->capture_default_str();
  c_train->add_option("--advantage_before_update", tr.advantage_before_update,
                      "Use the pre-update baseline in the advantage")
      ->capture_default_str();
  c_train->add_option("--baseline_warm_start", tr.baseline_warm_start, "Seed the baseline with the first reward")
      ->capture_default_str();
  c_train->add_option("--horizontal_flip", tr.horizontal_flip, "Flip training examples with p = 0.5")
      ->capture_default_str();
  c_train->add_option("--seeds", tr.seeds, "Comma-separated seeds for a sweep (one run directory each)");
  c_train->add_option("--jobs", tr.jobs, "Parallel runs in a seed sweep")->capture_default_str();

  EvalOptions ev;
  auto* c_eval = app.add_subcommand("eval", "Top-1 accuracy of a checkpoint under the base order and a policy");
  add_shared(c_eval, ev.shared);
  c_eval->add_option("--checkpoint", ev.checkpoint)->required();
  c_eval->add_option("--dataset", ev.dataset)->required();
  c_eval->add_option("--policy", ev.policy, "Policy snapshot; its ML permutation is evaluated");
  c_eval->add_option("--perm", ev.perm, "Permutation file, e.g. a run's final_perm.json");
  c_eval->add_option("--order", ev.order, "Base scan order")->capture_default_str();

  AnalyzeOptions an;
  auto* c_an = app.add_subcommand("analyze", "Logit heatmaps, tracked patches and positional shift per snapshot");
  add_shared(c_an, an.shared);
  c_an->add_option("--trace", an.trace, "Run directory holding policy snapshots")->required();
  c_an->add_option("--order", an.order, "Base scan order")->capture_default_str();
  c_an->add_option("--region", an.region, "center, all, or comma-separated patch indices")->capture_default_str();
  c_an->add_option("--track", an.track, "Patches to track (default: the region)");
  c_an->add_option("--height", an.height, "Grid rows when snapshots lack them");
  c_an->add_option("--width", an.width, "Grid columns when snapshots lack them");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (c_orders->parsed()) run_orders(orders, out);
    else if (c_synth->parsed()) run_synth(synth, out);
    else if (c_prior->parsed()) run_prior(prior, out);
    else if (c_train->parsed()) {
      tr.synth.shared.seed = tr.shared.seed;
      run_train(*c_train, tr, out);
    } else if (c_eval->parsed()) run_eval(ev, out);
    else if (c_an->parsed()) run_analyze(an, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int run_cli(int argc, const char* const* argv) { return run_cli(argc, argv, std::cout, std::cerr); }

}  // namespace reorder::cli
