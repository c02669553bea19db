#include <fstream>

#include "vrgnn/error.hpp"
#include "vrgnn/trainer.hpp"

namespace vrgnn {

using nlohmann::json;

namespace {

json mask_indices(const std::vector<bool>& mask) {
  json out = json::array();
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(i);
  return out;
}

std::vector<bool> mask_from(const json& indices, std::size_t n) {
  std::vector<bool> mask(n, false);
  for (const auto& v : indices) {
    const auto i = v.get<std::size_t>();
    if (i >= n) throw DataError("checkpoint split index out of range");
    mask[i] = true;
  }
  return mask;
}

}  // namespace

json checkpoint_to_json(const Checkpoint& c) {
  json params = json::array();
  for (const auto& p : c.params)
    params.push_back({{"name", p.name}, {"shape", p.value.shape()}, {"decay", p.decay},
                      {"data", p.value.data()}});
  return {{"format", "vrgnn-checkpoint"},
          {"version", Checkpoint::kFormatVersion},
          {"config", to_json(c.config)},
          {"seed", c.seed},
          {"epoch", c.epoch},
          {"graph", {{"num_nodes", c.num_nodes}, {"num_edges", c.num_edges},
                     {"num_features", c.num_features}, {"num_classes", c.num_classes}}},
          {"split", {{"seed", c.split.seed}, {"train", mask_indices(c.split.train)},
                     {"valid", mask_indices(c.split.valid)}, {"test", mask_indices(c.split.test)}}},
          {"data", c.data_dir},
          {"params", std::move(params)}};
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    if (j.value("format", "") != "vrgnn-checkpoint") throw DataError("not a vrgnn checkpoint");
    if (j.at("version").get<int>() != Checkpoint::kFormatVersion)
      throw DataError("unsupported checkpoint version " + j.at("version").dump());
    Checkpoint c;
    c.config = apply_json(ExperimentConfig{}, j.at("config"));
    c.seed = j.at("seed").get<std::uint64_t>();
    c.epoch = j.at("epoch").get<std::size_t>();
    const json& g = j.at("graph");
    c.num_nodes = g.at("num_nodes").get<std::size_t>();
    c.num_edges = g.at("num_edges").get<std::size_t>();
    c.num_features = g.at("num_features").get<std::size_t>();
    c.num_classes = g.at("num_classes").get<std::size_t>();
    const json& s = j.at("split");
    c.split.seed = s.at("seed").get<std::uint64_t>();
    c.split.train = mask_from(s.at("train"), c.num_nodes);
    c.split.valid = mask_from(s.at("valid"), c.num_nodes);
    c.split.test = mask_from(s.at("test"), c.num_nodes);
    c.data_dir = j.value("data", "");
    for (const auto& p : j.at("params")) {
      Tensor value(p.at("shape").get<std::vector<std::size_t>>(),
                   p.at("data").get<std::vector<double>>());
      c.params.add(p.at("name").get<std::string>(), std::move(value), p.at("decay").get<bool>());
    }
    return c;
  } catch (const json::exception& ex) {
    throw DataError(std::string("malformed checkpoint: ") + ex.what());
  } catch (const ShapeError& ex) {
    throw DataError(std::string("malformed checkpoint: ") + ex.what());
  }
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write checkpoint: " + file.string());
  out << checkpoint_to_json(c).dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot read checkpoint: " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw DataError(file.string() + ": " + ex.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace vrgnn
