#include <doctest.h>

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "reorder/perm_io.hpp"
#include "reorder/pl_policy.hpp"
#include "reorder/trace_io.hpp"

using namespace reorder;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "reorder");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct Workspace {
  fs::path root;
  Workspace() {
    root = fs::temp_directory_path() / ("reorder_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  std::string operator/(const std::string& name) const { return (root / name).string(); }
};

std::vector<std::string> tiny_train(const Workspace& ws, const std::string& out,
                                    std::map<std::string, std::string> overrides = {}) {
  std::map<std::string, std::string> flags = {
      {"height", "4"},          {"width", "4"},         {"train_size", "64"}, {"val_size", "32"},
      {"embed_dim", "8"},       {"depth", "1"},         {"epochs", "4"},      {"warmup_epochs", "1"},
      {"policy_epochs", "2"},   {"batch_size", "16"},   {"backbone_lr", "1e-3"}, {"policy_lr", "1e-2"}};
  for (auto& [k, v] : overrides) flags[k] = v;
  std::vector<std::string> args{"train", "--out", ws / out};
  for (const auto& [k, v] : flags) {
    args.push_back("--" + k);
    args.push_back(v);
  }
  return args;
}

}  // namespace

TEST_CASE("argument errors exit with the validation code") {
  CHECK(run({}).code == cli::kExitValidation);
  CHECK(run({"orders", "--bogus"}).code == cli::kExitValidation);
  CHECK(run({"frobnicate"}).code == cli::kExitValidation);
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("orders writes a permutation file and an svg per order") {
  Workspace ws;
  const auto r = run({"orders", "--height", "3", "--width", "5", "--out", ws / "orders"});
  REQUIRE(r.code == cli::kExitOk);
  for (const char* name : {"row_major", "column_major", "hilbert", "spiral", "diagonal", "snake"}) {
    const auto file = read_permutation_file(ws.root / "orders" / (std::string(name) + ".json"));
    CHECK(file.order == name);
    CHECK(file.perm.size() == 15);
    const auto svg = read_text_file(ws.root / "orders" / (std::string(name) + ".svg"));
    CHECK(svg.find("class=\"start\"") != std::string::npos);
    CHECK(svg.find("class=\"end\"") != std::string::npos);
  }
  CHECK(run({"orders", "--height", "0", "--out", ws / "bad"}).code == cli::kExitValidation);
}

TEST_CASE("synth then prior picks the least compressible order") {
  Workspace ws;
  REQUIRE(run({"synth", "--family", "stripes_v", "--train_size", "128", "--val_size", "8", "--out", ws / "data"})
              .code == cli::kExitOk);
  REQUIRE(run({"prior", "--dataset", ws / "data/train.bin", "--out", ws / "prior"}).code == cli::kExitOk);
  const auto csv = read_text_file(ws.root / "prior" / "compression_report.csv");
  CHECK(csv.rfind("order,tokenization,raw_bytes,compressed_bytes,ratio,reduction_pct", 0) == 0);

  std::istringstream lines(csv);
  std::string line, best_order;
  double best = -1.0;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::istringstream cs(line);
    for (std::string c; std::getline(cs, c, ',');) cells.push_back(c);
    if (cells.at(1) == "unigram" && std::stod(cells.at(4)) > best) {
      best = std::stod(cells.at(4));
      best_order = cells.at(0);
    }
  }
  const auto prior = read_permutation_file(ws.root / "prior" / "prior.json");
  CHECK(prior.order == best_order);
  CHECK(prior.provenance.at("compressor_id").rfind("xz:", 0) == 0);

  CHECK(run({"prior", "--dataset", ws / "missing.bin", "--out", ws / "p2"}).code == cli::kExitValidation);
}

TEST_CASE("train writes traces, checkpoint, snapshots and a replayable config") {
  Workspace ws;
  const auto r = run(tiny_train(ws, "run"));
  REQUIRE_MESSAGE(r.code == cli::kExitOk, r.err);
  for (const char* f : {"epoch_trace.csv", "batch_trace.csv", "model.ckpt", "final_perm.json",
                        "resolved_config.toml", "policy/policy_epoch_init.json"}) {
    CHECK_MESSAGE(fs::exists(ws.root / "run" / f), f);
  }
  const auto rows = parse_epoch_trace_csv(read_text_file(ws.root / "run" / "epoch_trace.csv"));
  CHECK(rows.size() == 4);

  const auto again = run({"train", "--config", ws / "run/resolved_config.toml", "--out", ws / "replayed"});
  REQUIRE_MESSAGE(again.code == cli::kExitOk, again.err);
  CHECK(read_text_file(ws.root / "run" / "epoch_trace.csv") ==
        read_text_file(ws.root / "replayed" / "epoch_trace.csv"));

  const auto bad = run(tiny_train(ws, "bad", {{"epochs", "2"}}));
  CHECK(bad.code == cli::kExitValidation);
  CHECK(bad.err.find("exceeds total epochs") != std::string::npos);
  CHECK(run(tiny_train(ws, "bad", {{"mode", "sideways"}})).code == cli::kExitValidation);
}

TEST_CASE("unknown config keys are rejected") {
  Workspace ws;
  write_text_file(ws.root / "bad.toml", "no_such_option = 3\n");
  CHECK(run({"train", "--config", ws / "bad.toml"}).code == cli::kExitValidation);
}

TEST_CASE("seed sweeps get one directory per seed") {
  Workspace ws;
  REQUIRE(run(tiny_train(ws, "sweep", {{"seeds", "3,4"}, {"jobs", "2"}, {"mode", "fixed"}})).code == cli::kExitOk);
  CHECK(fs::exists(ws.root / "sweep" / "seed_3" / "model.ckpt"));
  CHECK(fs::exists(ws.root / "sweep" / "seed_4" / "model.ckpt"));
  CHECK_FALSE(fs::exists(ws.root / "sweep" / "seed_3" / "policy"));
}

TEST_CASE("eval reports base and policy accuracy") {
  Workspace ws;
  const auto init = tiny_train(ws, "init", {{"epochs", "1"}, {"warmup_epochs", "1"}, {"policy_epochs", "0"},
                                            {"backbone_lr", "1e-12"}, {"mode", "fixed"}});
  REQUIRE(run(init).code == cli::kExitOk);
  REQUIRE(run({"synth", "--height", "4", "--width", "4", "--train_size", "8", "--val_size", "400", "--out",
               ws / "data"})
              .code == cli::kExitOk);
  const auto r = run({"eval", "--checkpoint", ws / "init/model.ckpt", "--dataset", ws / "data/val.bin", "--policy",
                      ws / "init/final_perm.json", "--out", ws / "eval"});
  CHECK(r.code == cli::kExitValidation);

  write_policy_snapshot(ws.root / "p.json", {init_from_prior(16, Permutation::identity(16)), "row_major", 0, 4, 4});
  const auto ok = run({"eval", "--checkpoint", ws / "init/model.ckpt", "--dataset", ws / "data/val.bin", "--policy",
                       ws / "p.json", "--out", ws / "eval"});
  REQUIRE_MESSAGE(ok.code == cli::kExitOk, ok.err);
  const auto report = nlohmann::json::parse(read_text_file(ws.root / "eval" / "eval.json"));
  const double acc = report.at("base_accuracy").get<double>();
  CHECK(acc > 0.1);
  CHECK(acc < 0.4);
  CHECK(report.at("policy_accuracy").get<double>() == acc);

  const auto with_perm = run({"eval", "--checkpoint", ws / "init/model.ckpt", "--dataset", ws / "data/val.bin",
                              "--perm", ws / "init/final_perm.json", "--out", ws / "eval"});
  REQUIRE(with_perm.code == cli::kExitOk);
  CHECK(nlohmann::json::parse(read_text_file(ws.root / "eval" / "eval.json")).at("perm_accuracy").get<double>() == acc);

  REQUIRE(run({"synth", "--train_size", "8", "--val_size", "8", "--out", ws / "big"}).code == cli::kExitOk);
  CHECK(run({"eval", "--checkpoint", ws / "init/model.ckpt", "--dataset", ws / "big/val.bin", "--out", ws / "e2"})
            .code == cli::kExitValidation);
}

TEST_CASE("analyze emits heatmap, trajectories and shift statistics") {
  Workspace ws;
  CHECK(run({"analyze", "--trace", ws.root.string(), "--out", ws / "a0"}).code == cli::kExitValidation);

  write_policy_snapshot(ws.root / "one" / "policy_epoch_init.json",
                        {init_from_prior(16, Permutation::identity(16)), "row_major", -1, 4, 4});
  REQUIRE(run({"analyze", "--trace", ws / "one", "--out", ws / "a1"}).code == cli::kExitOk);
  const auto shift = read_text_file(ws.root / "a1" / "shift_stats.csv");
  CHECK(shift == "epoch,shift_vs_base,shift_vs_first\n-1,0,0\n");

  REQUIRE(run(tiny_train(ws, "run")).code == cli::kExitOk);
  REQUIRE(run({"analyze", "--trace", ws / "run", "--track", "0,5", "--out", ws / "a2"}).code == cli::kExitOk);
  const auto traj = read_text_file(ws.root / "a2" / "trajectories.csv");
  CHECK(traj.rfind("epoch,patch,position\n-1,0,0\n-1,5,5\n", 0) == 0);
  const auto heat = read_text_file(ws.root / "a2" / "logits_heatmap.csv");
  CHECK(heat.rfind("epoch,slot_0,", 0) == 0);
  CHECK(run({"analyze", "--trace", ws / "run", "--track", "99", "--out", ws / "a3"}).code == cli::kExitValidation);
}
