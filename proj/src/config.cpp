#include "vrgnn/config.hpp"

#include <cmath>
#include <fstream>

#include "vrgnn/error.hpp"

namespace vrgnn {

using nlohmann::json;

std::string to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::s: return "s";
    case Variant::f: return "f";
    case Variant::l: return "l";
    case Variant::zero: return "zero";
    case Variant::mlp: return "mlp";
  }
  return "full";
}

Variant parse_variant(std::string_view s) {
  if (s == "full") return Variant::full;
  if (s == "s") return Variant::s;
  if (s == "f") return Variant::f;
  if (s == "l") return Variant::l;
  if (s == "zero") return Variant::zero;
  if (s == "mlp") return Variant::mlp;
  throw ConfigError("unknown variant '" + std::string(s) + "' (full|s|f|l|zero|mlp)");
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(encoder.hidden_dim > 0, "hidden_dim must be positive");
  require(encoder.mlp_hidden > 0, "mlp_hidden must be positive");
  require(encoder.trunk_depth > 0, "trunk_depth must be positive");
  for (double a : {encoder.alpha_s, encoder.alpha_f, encoder.alpha_l})
    require(std::isfinite(a), "alpha weights must be finite");
  require(decoder.num_layers >= 1, "num_layers must be >= 1");
  require(decoder.classifier_depth >= 1, "classifier_depth must be >= 1");
  require(decoder.theta >= 0.0 && decoder.theta <= 1.0, "theta must lie in [0, 1]");
  require(decoder.hidden_dim == encoder.hidden_dim, "decoder and encoder widths differ");
  require(train.lr > 0.0, "lr must be positive");
  require(train.weight_decay >= 0.0, "weight_decay must be non-negative");
  require(train.gamma >= 0.0 && train.gamma <= 1.0, "gamma must lie in [0, 1]");
  require(train.dropout >= 0.0 && train.dropout < 1.0, "dropout must lie in [0, 1)");
  require(train.max_epochs >= 1, "max_epochs must be >= 1");
  require(train.patience <= train.max_epochs, "patience must not exceed max_epochs");
  require(runs >= 1, "runs must be >= 1");
  if (train.variant == Variant::full)
    require(encoder.alpha_s != 0.0 || encoder.alpha_f != 0.0 || encoder.alpha_l != 0.0,
            "variant full needs a nonzero alpha");
  if (train.variant == Variant::s) require(encoder.alpha_s != 0.0, "variant s needs alpha_s != 0");
  if (train.variant == Variant::f) require(encoder.alpha_f != 0.0, "variant f needs alpha_f != 0");
  if (train.variant == Variant::l) require(encoder.alpha_l != 0.0, "variant l needs alpha_l != 0");
}

json to_json(const ExperimentConfig& c) {
  return json{
      {"hidden_dim", c.encoder.hidden_dim},
      {"alpha_s", c.encoder.alpha_s},
      {"alpha_f", c.encoder.alpha_f},
      {"alpha_l", c.encoder.alpha_l},
      {"mlp_hidden", c.encoder.mlp_hidden},
      {"trunk_depth", c.encoder.trunk_depth},
      {"num_layers", c.decoder.num_layers},
      {"theta", c.decoder.theta},
      {"classifier_depth", c.decoder.classifier_depth},
      {"lr", c.train.lr},
      {"weight_decay", c.train.weight_decay},
      {"gamma", c.train.gamma},
      {"dropout", c.train.dropout},
      {"relation_dropout", c.train.relation_dropout},
      {"max_epochs", c.train.max_epochs},
      {"patience", c.train.patience},
      {"seed", c.train.seed},
      {"variant", to_string(c.train.variant)},
      {"fix_splits", c.train.fix_splits},
      {"runs", c.runs},
  };
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  const json defaults = to_json(ExperimentConfig{});
  for (const auto& [k, v] : defaults.items()) keys.push_back(k);
  return keys;
}

namespace {

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("config key '" + key + "' expects a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0))
        throw ConfigError("config key '" + key + "' expects a non-negative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError("config key '" + key + "' expects a number");
    } else {
      if (!v.is_string()) throw ConfigError("config key '" + key + "' expects a string");
    }
    return v.get<T>();
  } catch (const json::exception& ex) {
    throw ConfigError("config key '" + key + "': " + ex.what());
  }
}

void set_field(ExperimentConfig& c, const std::string& key, const json& v) {
  if (key == "hidden_dim") {
    c.encoder.hidden_dim = c.decoder.hidden_dim = get_as<std::size_t>(v, key);
  } else if (key == "alpha_s") {
    c.encoder.alpha_s = get_as<double>(v, key);
  } else if (key == "alpha_f") {
    c.encoder.alpha_f = get_as<double>(v, key);
  } else if (key == "alpha_l") {
    c.encoder.alpha_l = get_as<double>(v, key);
  } else if (key == "mlp_hidden") {
    c.encoder.mlp_hidden = get_as<std::size_t>(v, key);
  } else if (key == "trunk_depth") {
    c.encoder.trunk_depth = get_as<std::size_t>(v, key);
  } else if (key == "num_layers") {
    c.decoder.num_layers = get_as<std::size_t>(v, key);
  } else if (key == "theta") {
    c.decoder.theta = get_as<double>(v, key);
  } else if (key == "classifier_depth") {
    c.decoder.classifier_depth = get_as<std::size_t>(v, key);
  } else if (key == "lr") {
    c.train.lr = get_as<double>(v, key);
  } else if (key == "weight_decay") {
    c.train.weight_decay = get_as<double>(v, key);
  } else if (key == "gamma") {
    c.train.gamma = get_as<double>(v, key);
  } else if (key == "dropout") {
    c.train.dropout = get_as<double>(v, key);
  } else if (key == "relation_dropout") {
    c.train.relation_dropout = get_as<bool>(v, key);
  } else if (key == "max_epochs") {
    c.train.max_epochs = get_as<std::size_t>(v, key);
  } else if (key == "patience") {
    c.train.patience = get_as<std::size_t>(v, key);
  } else if (key == "seed") {
    c.train.seed = get_as<std::uint64_t>(v, key);
  } else if (key == "variant") {
    c.train.variant = parse_variant(get_as<std::string>(v, key));
  } else if (key == "fix_splits") {
    c.train.fix_splits = get_as<bool>(v, key);
  } else if (key == "runs") {
    c.runs = get_as<std::size_t>(v, key);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

/// Parses a CLI string into the JSON type the key expects.
json parse_scalar(const std::string& key, std::string_view text) {
  const json defaults = to_json(ExperimentConfig{});
  if (!defaults.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  const json& like = defaults.at(key);
  const std::string s(text);
  if (like.is_string()) return s;
  if (like.is_boolean()) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("config key '" + key + "' expects true/false, got '" + s + "'");
  }
  try {
    return json::parse(s);
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' got non-numeric value '" + s + "'");
  }
}

}  // namespace

ExperimentConfig apply_json(ExperimentConfig base, const json& obj) {
  if (!obj.is_object()) throw ConfigError("config must be a flat JSON object");
  for (const auto& [key, value] : obj.items()) set_field(base, key, value);
  return base;
}

ExperimentConfig with_value(ExperimentConfig base, std::string_view key, std::string_view value) {
  const std::string k(key);
  set_field(base, k, parse_scalar(k, value));
  return base;
}

ExperimentConfig apply_override(ExperimentConfig base, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override must look like key=value, got '" + std::string(assignment) + "'");
  return with_value(std::move(base), assignment.substr(0, eq), assignment.substr(eq + 1));
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  json obj;
  try {
    in >> obj;
  } catch (const json::exception& ex) {
    throw ConfigError(path + ": " + ex.what());
  }
  return apply_json(std::move(base), obj);
}

}  // namespace vrgnn
