#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "reorder/pl_policy.hpp"
#include "reorder/policy_optimizer.hpp"

namespace reorder {

/// Columns: epoch, phase, tau, ce_loss, reward, baseline, advantage_mean,
/// val_acc, perm_hash. Reals use 17 significant digits; hashes are 16 hex
/// digits; a missing val_acc is an empty field.
std::string format_epoch_trace_csv(const std::vector<EpochRecord>& epochs);
std::string format_batch_trace_csv(const std::vector<BatchRecord>& batches);

struct EpochTraceRow {
  std::size_t epoch = 0;
  std::string phase;
  double tau = 0.0;
  double ce_loss = 0.0;
  double reward = 0.0;
  double baseline = 0.0;
  double advantage_mean = 0.0;
  std::optional<double> val_acc;
  std::string perm_hash;
};

std::vector<EpochTraceRow> parse_epoch_trace_csv(const std::string& text);

/// Writes each snapshot as <dir>/policy_epoch_<e>.json (e = "init" for -1)
/// and returns the written paths.
std::vector<std::filesystem::path> write_policy_snapshots(const std::filesystem::path& dir,
                                                          const std::vector<PolicySnapshot>& snapshots);

/// All policy snapshots below `dir`, sorted by epoch. Empty when none.
std::vector<PolicySnapshot> read_policy_snapshots(const std::filesystem::path& dir);

std::string format_real(double v);
std::string format_hash(std::uint64_t h);

}  // namespace reorder
