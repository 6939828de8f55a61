#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace reorder {

/// Named dense tensors (all 2-D, column-major) packed in one flat buffer.
/// A gradient set shares the layout of the parameter set it was cloned from.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;
    std::size_t size() const noexcept { return rows * cols; }
  };

  using Map = Eigen::Map<Eigen::MatrixXd>;
  using ConstMap = Eigen::Map<const Eigen::MatrixXd>;

  /// Returns the index of the new tensor. Names must be unique.
  std::size_t add(std::string name, std::size_t rows, std::size_t cols);

  std::size_t index_of(const std::string& name) const;
  bool contains(const std::string& name) const;

  Map tensor(std::size_t index);
  ConstMap tensor(std::size_t index) const;
  Map tensor(const std::string& name) { return tensor(index_of(name)); }
  ConstMap tensor(const std::string& name) const { return tensor(index_of(name)); }

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }
  std::size_t total_size() const noexcept { return data_.size(); }

  /// Same layout, all zeros.
  ParamSet zeros_like() const;
  void set_zero();
  bool same_layout(const ParamSet& other) const;

 private:
  std::vector<Entry> entries_;
  std::vector<double> data_;
};

}  // namespace reorder
