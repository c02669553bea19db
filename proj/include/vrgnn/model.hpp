#pragma once

#include <optional>

#include "vrgnn/config.hpp"
#include "vrgnn/decoder.hpp"
#include "vrgnn/encoder.hpp"
#include "vrgnn/graph.hpp"
#include "vrgnn/params.hpp"

namespace vrgnn {

/// Fresh parameters for `g` under `cfg`, drawn from `seed`.
ParamStore init_model(const Graph& g, const ExperimentConfig& cfg, std::uint64_t seed);

/// Sub-relation weights in effect for a variant.
encoder::Alphas effective_alphas(const ExperimentConfig& cfg);

struct ForwardInputs {
  decoder::Mode mode = decoder::Mode::infer;
  /// Noise source for reparameterization and dropout; unused in infer mode.
  Rng* noise_rng = nullptr;
  Rng* dropout_rng = nullptr;
  decoder::EdgeVisitCounter* counter = nullptr;
  /// When set, used as eps instead of drawing from noise_rng.
  const Tensor* fixed_noise = nullptr;
};

/// Everything one encoder + decoder pass produced on a tape.
struct ModelForward {
  std::optional<encoder::Gaussian> relation;  // absent for zero / mlp
  ad::Var z0;
  Tensor noise;  // eps used for z0 (train mode)
  /// Sum of per-edge KL terms; a constant 0 when there is no encoder.
  ad::Var encoder_loss;
  decoder::DecoderOutput decoder;
  ad::Var logits;
};

ModelForward model_forward(const BoundParams& params, const ExperimentConfig& cfg, const Graph& g,
                           const decoder::EdgeIndex& edges, const std::vector<bool>& train_mask,
                           const ForwardInputs& in);

/// Inference-mode logits as a plain tensor.
Tensor infer_logits(const ParamStore& params, const ExperimentConfig& cfg, const Graph& g,
                    const std::vector<bool>& train_mask);

/// Total objective gamma * KL + (1 - gamma) * CE.
ad::Var total_loss(ad::Var encoder_loss, ad::Var decoder_loss, double gamma);
double total_loss(double encoder_loss, double decoder_loss, double gamma);

}  // namespace vrgnn
