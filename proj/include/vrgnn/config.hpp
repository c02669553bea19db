#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrgnn/decoder.hpp"
#include "vrgnn/encoder.hpp"

namespace vrgnn {

/// Which relation source feeds the decoder.
///  full: all three sub-relations; s/f/l: one sub-relation only;
///  zero: relation vectors fixed to 0; mlp: no message passing at all.
enum class Variant { full, s, f, l, zero, mlp };

std::string to_string(Variant v);
Variant parse_variant(std::string_view s);

struct TrainConfig {
  double lr = 0.01;
  double weight_decay = 5e-4;
  double gamma = 0.1;
  double dropout = 0.5;
  /// Also apply dropout to relation vectors before the first layer.
  bool relation_dropout = false;
  std::size_t max_epochs = 1000;
  std::size_t patience = 200;
  std::uint64_t seed = 0;
  Variant variant = Variant::full;
  /// multi_run: reuse the base seed's split for every run.
  bool fix_splits = false;
};

struct ExperimentConfig {
  encoder::EncoderConfig encoder;
  decoder::DecoderConfig decoder;
  TrainConfig train;
  std::size_t runs = 10;

  /// Throws ConfigError on out-of-domain values.
  void validate() const;
};

/// Flat JSON object, one key per field. Relation and node embeddings share
/// the single "hidden_dim" key.
nlohmann::json to_json(const ExperimentConfig& cfg);
/// Applies the keys of a flat JSON object on top of `base`. Unknown keys
/// and ill-typed values raise ConfigError.
ExperimentConfig apply_json(ExperimentConfig base, const nlohmann::json& obj);
/// Applies one "key=value" override.
ExperimentConfig apply_override(ExperimentConfig base, std::string_view assignment);
/// Sets a single field from its string value, as used by sweeps.
ExperimentConfig with_value(ExperimentConfig base, std::string_view key, std::string_view value);

std::vector<std::string> config_keys();

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});

}  // namespace vrgnn
