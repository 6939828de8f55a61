#include "reorder/trace_io.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "reorder/error.hpp"
#include "reorder/perm_io.hpp"

namespace reorder {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_hash(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_epoch_trace_csv(const std::vector<EpochRecord>& epochs) {
  std::string out = "epoch,phase,tau,ce_loss,reward,baseline,advantage_mean,val_acc,perm_hash\n";
  for (const auto& e : epochs) {
    out += std::to_string(e.epoch) + ',' + std::string(to_string(e.phase)) + ',' + format_real(e.temperature) + ',' +
           format_real(e.ce_loss) + ',' + format_real(e.reward) + ',' + format_real(e.baseline) + ',' +
           format_real(e.advantage_mean) + ',' + (e.val_accuracy ? format_real(*e.val_accuracy) : std::string()) +
           ',' + format_hash(e.perm_hash) + '\n';
  }
  return out;
}

std::string format_batch_trace_csv(const std::vector<BatchRecord>& batches) {
  std::string out = "epoch,batch,perm_hash,cls_position,distinct_example_perms,tau,loss,reward,baseline,advantage\n";
  for (const auto& b : batches) {
    out += std::to_string(b.epoch) + ',' + std::to_string(b.batch) + ',' + format_hash(b.perm_hash) + ',' +
           std::to_string(b.cls_position) + ',' + std::to_string(b.distinct_example_perms) + ',' +
           format_real(b.temperature) + ',' + format_real(b.loss) + ',' + format_real(b.reward) + ',' +
           format_real(b.baseline) + ',' + format_real(b.advantage) + '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_real(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("trace line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

}  // namespace

std::vector<EpochTraceRow> parse_epoch_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("epoch,phase,tau", 0) != 0) {
    throw ValidationError("epoch trace is missing its header");
  }
  std::vector<EpochTraceRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw ValidationError("trace line " + std::to_string(lineno) + ": expected 9 fields");
    EpochTraceRow r;
    r.epoch = static_cast<std::size_t>(parse_real(f[0], lineno));
    r.phase = f[1];
    r.tau = parse_real(f[2], lineno);
    r.ce_loss = parse_real(f[3], lineno);
    r.reward = parse_real(f[4], lineno);
    r.baseline = parse_real(f[5], lineno);
    r.advantage_mean = parse_real(f[6], lineno);
    if (!f[7].empty()) r.val_acc = parse_real(f[7], lineno);
    r.perm_hash = f[8];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<std::filesystem::path> write_policy_snapshots(const std::filesystem::path& dir,
                                                          const std::vector<PolicySnapshot>& snapshots) {
  std::vector<std::filesystem::path> paths;
  for (const auto& s : snapshots) {
    char name[48];
    if (s.epoch < 0) std::snprintf(name, sizeof name, "policy_epoch_init.json");
    else std::snprintf(name, sizeof name, "policy_epoch_%04ld.json", s.epoch);
    paths.push_back(dir / name);
    write_policy_snapshot(paths.back(), s);
  }
  return paths;
}

std::vector<PolicySnapshot> read_policy_snapshots(const std::filesystem::path& dir) {
  std::vector<PolicySnapshot> out;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("policy_epoch_", 0) == 0 && entry.path().extension() == ".json") {
      out.push_back(read_policy_snapshot(entry.path()));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.epoch < b.epoch; });
  return out;
}

}  // namespace reorder
