#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "reorder/grid_linearize.hpp"
#include "reorder/permutation.hpp"

namespace reorder {

/// Text permutation document: one integer array (the gather mapping) plus a
/// metadata record with the grid, the order kind and free-form provenance.
struct PermutationFile {
  Permutation perm;
  GridSpec grid;
  std::string order;  // a ScanOrder name, or e.g. "learned", "prior", "random"
  std::map<std::string, std::string> provenance;
};

std::string format_permutation_file(const PermutationFile& file);
PermutationFile parse_permutation_file(std::string_view text);

void write_permutation_file(const std::filesystem::path& path, const PermutationFile& file);
PermutationFile read_permutation_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace reorder
