#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vrgnn/graph.hpp"
#include "vrgnn/ops.hpp"
#include "vrgnn/params.hpp"

namespace vrgnn::decoder {

struct DecoderConfig {
  std::size_t num_layers = 2;
  std::size_t hidden_dim = 64;
  /// Weight of the aggregated message against the initial embedding.
  double theta = 0.7;
  /// Affine layers in the classifier head (ReLU between them).
  std::size_t classifier_depth = 1;
};

/// Edge list in message direction: edge k carries src[k] -> dst[k].
struct EdgeIndex {
  ad::Index src;
  ad::Index dst;
  std::size_t num_nodes = 0;

  static EdgeIndex from_graph(const Graph& g);
  std::size_t size() const { return src.size(); }
};

/// Counts edge visits made by attention_aggregate.
struct EdgeVisitCounter {
  std::size_t visits = 0;
};

enum class Mode { train, infer };

struct ForwardOptions {
  Mode mode = Mode::infer;
  double dropout = 0.0;
  Rng* dropout_rng = nullptr;
  EdgeVisitCounter* counter = nullptr;
};

namespace names {
inline const std::string kInputW = "dec.input.w";
inline const std::string kInputB = "dec.input.b";
std::string layer_weight(std::size_t layer);
std::string relation_weight(std::size_t layer);
std::string classifier_weight(std::size_t layer);
std::string classifier_bias(std::size_t layer);
}  // namespace names

/// Registers decoder parameters. Relation transforms exist for layers
/// 0..L-2 only; the last layer's transformed relations would never be read.
void add_parameters(ParamStore& store, const DecoderConfig& cfg, std::size_t num_features,
                    std::size_t num_classes, Rng& rng);

struct DecoderNet {
  ad::Var input_w, input_b;
  std::vector<ad::Var> layer_w;
  std::vector<ad::Var> relation_w;
  std::vector<ad::Var> classifier_w, classifier_b;

  static DecoderNet bind(const BoundParams& params, const DecoderConfig& cfg);
};

/// h0 = ReLU(x W^T + b).
ad::Var init_embed(ad::Var features, ad::Var weight, ad::Var bias);

/// Per row: W h_j + z_ji.
ad::Var translate_message(ad::Var h_src, ad::Var z, ad::Var weight);

struct Aggregation {
  ad::Var messages;   // [E x H], phi(h_j, z_ji)
  ad::Var logits;     // [E], <h_i, phi(h_j, z_ji)>
  ad::Var attention;  // [E], softmax over each destination's in-edges
  ad::Var h_bar;      // [N x H]
};

/// Attention-weighted sum of translated messages into each destination.
/// Destinations without in-edges receive zero.
Aggregation attention_aggregate(ad::Var h, ad::Var z, const EdgeIndex& edges, ad::Var weight,
                                const ForwardOptions& opts = {});

/// theta * h_bar + (1 - theta) * h0.
ad::Var residual_update(ad::Var h_bar, ad::Var h0, double theta);

/// Per row: W_rel z.
ad::Var relation_layer_transform(ad::Var z, ad::Var relation_weight);

struct DecoderOutput {
  ad::Var h0;
  /// h[l] is the input of layer l; h[L] feeds the classifier.
  std::vector<ad::Var> h;
  /// z[l] is the relation matrix used by layer l.
  std::vector<ad::Var> z;
  std::vector<Aggregation> layers;
  ad::Var logits;
};

ad::Var classify(const DecoderNet& net, ad::Var h);

DecoderOutput forward(const DecoderNet& net, const DecoderConfig& cfg, ad::Var features,
                      ad::Var z0, const EdgeIndex& edges, const ForwardOptions& opts);

}  // namespace vrgnn::decoder
