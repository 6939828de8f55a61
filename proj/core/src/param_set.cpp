#include "reorder/param_set.hpp"

#include <algorithm>

#include "reorder/error.hpp"

namespace reorder {

std::size_t ParamSet::add(std::string name, std::size_t rows, std::size_t cols) {
  if (contains(name)) throw ValidationError("ParamSet: duplicate tensor '" + name + "'");
  // Entries are appended, so earlier Maps into data_ would dangle; callers add
  // every tensor before taking views.
  Entry e{std::move(name), rows, cols, data_.size()};
  data_.resize(data_.size() + e.size(), 0.0);
  entries_.push_back(std::move(e));
  return entries_.size() - 1;
}

std::size_t ParamSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  throw ValidationError("ParamSet: no tensor named '" + name + "'");
}

bool ParamSet::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.name == name; });
}

ParamSet::Map ParamSet::tensor(std::size_t index) {
  const Entry& e = entries_.at(index);
  return Map(data_.data() + e.offset, static_cast<Eigen::Index>(e.rows),
             static_cast<Eigen::Index>(e.cols));
}

ParamSet::ConstMap ParamSet::tensor(std::size_t index) const {
  const Entry& e = entries_.at(index);
  return ConstMap(data_.data() + e.offset, static_cast<Eigen::Index>(e.rows),
                  static_cast<Eigen::Index>(e.cols));
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  out.entries_ = entries_;
  out.data_.assign(data_.size(), 0.0);
  return out;
}

void ParamSet::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

bool ParamSet::same_layout(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Entry& a = entries_[i];
    const Entry& b = other.entries_[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols) return false;
  }
  return true;
}

}  // namespace reorder
