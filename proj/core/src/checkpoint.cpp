#include <fstream>

#include <json.hpp>

#include "reorder/backbone.hpp"
#include "reorder/binary_io.hpp"

namespace reorder {

namespace {

constexpr char kMagic[8] = {'R', 'E', 'O', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

nlohmann::json config_to_json(const BackboneConfig& c) {
  return {{"kind", std::string(to_string(c.kind))},
          {"grid_height", c.grid.height},
          {"grid_width", c.grid.width},
          {"channels", c.channels},
          {"classes", c.classes},
          {"embed_dim", c.embed_dim},
          {"depth", c.depth},
          {"mlp_dim", c.mlp_dim},
          {"window", c.window},
          {"segment_length", c.segment_length},
          {"memory_length", c.memory_length},
          {"state_dim", c.state_dim},
          {"position_mode", std::string(to_string(c.position_mode))}};
}

BackboneConfig config_from_json(const nlohmann::json& j) {
  BackboneConfig c;
  c.kind = parse_backbone_kind(j.at("kind").get<std::string>());
  c.grid.height = j.at("grid_height").get<std::size_t>();
  c.grid.width = j.at("grid_width").get<std::size_t>();
  c.channels = j.at("channels").get<std::size_t>();
  c.classes = j.at("classes").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.depth = j.at("depth").get<std::size_t>();
  c.mlp_dim = j.at("mlp_dim").get<std::size_t>();
  c.window = j.at("window").get<std::size_t>();
  c.segment_length = j.at("segment_length").get<std::size_t>();
  c.memory_length = j.at("memory_length").get<long>();
  c.state_dim = j.at("state_dim").get<std::size_t>();
  c.position_mode = parse_position_mode(j.at("position_mode").get<std::string>());
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ToyBackbone& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  out.write(kMagic, sizeof kMagic);
  binary::put<std::uint32_t>(out, kVersion);
  binary::put_string(out, config_to_json(model.config()).dump());
  const ParamSet& p = model.params();
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(p.entries().size()));
  for (std::size_t i = 0; i < p.entries().size(); ++i) {
    const auto& e = p.entries()[i];
    binary::put_string(out, e.name);
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(e.rows));
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(e.cols));
    const auto t = p.tensor(i);
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(e.size() * sizeof(double)));
  }
  if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

ToyBackbone load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint '" + path.string() + "'");
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (in.gcount() != sizeof magic || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw ValidationError("'" + path.string() + "' is not a checkpoint");
  }
  if (binary::get<std::uint32_t>(in, "checkpoint version") != kVersion) {
    throw ValidationError("unsupported checkpoint version");
  }
  BackboneConfig config;
  try {
    config = config_from_json(nlohmann::json::parse(binary::get_string(in, "checkpoint config")));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint config: ") + e.what());
  }
  ParamSet params;
  const auto count = binary::get<std::uint32_t>(in, "tensor count");
  std::vector<std::vector<double>> values;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = binary::get_string(in, "tensor name", 4096);
    const auto rows = binary::get<std::uint32_t>(in, "tensor rows");
    const auto cols = binary::get<std::uint32_t>(in, "tensor cols");
    std::vector<double> v(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(v.size() * sizeof(double))) {
      throw ValidationError("truncated checkpoint tensor '" + name + "'");
    }
    params.add(std::move(name), rows, cols);
    values.push_back(std::move(v));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto t = params.tensor(i);
    std::copy(values[i].begin(), values[i].end(), t.data());
  }
  return ToyBackbone(config, std::move(params));
}

}  // namespace reorder
