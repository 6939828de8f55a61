#include "reorder/perm_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace reorder {

namespace {
constexpr const char* kFormat = "reorder.permutation";
constexpr int kVersion = 1;
}  // namespace

std::string format_permutation_file(const PermutationFile& file) {
  using nlohmann::json;
  std::ostringstream os;
  os << "{\n";
  os << "  \"format\": " << json(kFormat).dump() << ",\n";
  os << "  \"version\": " << kVersion << ",\n";
  os << "  \"order\": " << json(file.order).dump() << ",\n";
  os << "  \"grid\": {\"height\": " << file.grid.height << ", \"width\": " << file.grid.width
     << "},\n";
  os << "  \"provenance\": " << json(file.provenance).dump() << ",\n";
  os << "  \"mapping\": [";
  for (std::size_t k = 0; k < file.perm.size(); ++k) {
    if (k) os << ", ";
    os << file.perm[k];
  }
  os << "]\n}\n";
  return os.str();
}

PermutationFile parse_permutation_file(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("permutation file: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat) {
      throw ValidationError("permutation file: unexpected format tag");
    }
    if (doc.at("version").get<int>() != kVersion) {
      throw ValidationError("permutation file: unsupported version");
    }
    PermutationFile out;
    out.order = doc.at("order").get<std::string>();
    out.grid.height = doc.at("grid").at("height").get<std::size_t>();
    out.grid.width = doc.at("grid").at("width").get<std::size_t>();
    out.grid.validate();
    if (doc.contains("provenance")) {
      out.provenance = doc.at("provenance").get<std::map<std::string, std::string>>();
    }
    auto mapping = doc.at("mapping").get<std::vector<std::size_t>>();
    if (mapping.size() != out.grid.size()) {
      throw ValidationError("permutation file: mapping length " + std::to_string(mapping.size()) +
                            " does not match grid size " + std::to_string(out.grid.size()));
    }
    out.perm = Permutation(std::move(mapping));
    return out;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("permutation file: ") + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

void write_permutation_file(const std::filesystem::path& path, const PermutationFile& file) {
  write_text_file(path, format_permutation_file(file));
}

PermutationFile read_permutation_file(const std::filesystem::path& path) {
  return parse_permutation_file(read_text_file(path));
}

}  // namespace reorder
