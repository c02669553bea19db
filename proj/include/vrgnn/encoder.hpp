#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vrgnn/graph.hpp"
#include "vrgnn/ops.hpp"
#include "vrgnn/params.hpp"

namespace vrgnn::encoder {

struct EncoderConfig {
  std::size_t hidden_dim = 64;
  double alpha_s = 1.0;
  double alpha_f = 1.0;
  double alpha_l = 1.0;
  std::size_t mlp_hidden = 64;
  /// Hidden layers in the feature trunk (each followed by ReLU).
  std::size_t trunk_depth = 1;
};

/// Diagonal Gaussian over per-edge relation vectors: one row per edge.
struct Gaussian {
  ad::Var mu;
  ad::Var sigma;
};

/// Snapshot of a relation distribution and the sample drawn from it.
struct RelationDistribution {
  Tensor mu;
  Tensor sigma;
  Tensor sample;
  Tensor noise;
};

/// Parameter names, all under the "enc." prefix.
namespace names {
inline const std::string kStructMu = "enc.struct.mu";
inline const std::string kStructLogvar = "enc.struct.logvar";
std::string trunk_src_weight();
std::string trunk_dst_weight();
std::string trunk_weight(std::size_t layer);
std::string trunk_bias(std::size_t layer);
inline const std::string kFeatMuW = "enc.feat.mu.w";
inline const std::string kFeatMuB = "enc.feat.mu.b";
inline const std::string kFeatLogvarW = "enc.feat.logvar.w";
inline const std::string kFeatLogvarB = "enc.feat.logvar.b";
inline const std::string kLabelMuW = "enc.label.mu.w";
inline const std::string kLabelMuB = "enc.label.mu.b";
inline const std::string kLabelLogvarW = "enc.label.logvar.w";
inline const std::string kLabelLogvarB = "enc.label.logvar.b";
}  // namespace names

/// Registers every encoder parameter. The structure table starts at
/// mu ~ N(0, 0.01), logvar = 0; weights are Glorot, biases zero.
void add_parameters(ParamStore& store, const EncoderConfig& cfg, std::size_t num_edges,
                    std::size_t num_features, std::size_t num_classes, Rng& rng);

/// Rows of the per-edge tables; sigma = exp(logvar / 2).
Gaussian structure_subrelation(ad::Var mu_table, ad::Var logvar_table, const ad::Index& edge_ids);

struct FeatureNet {
  ad::Var trunk_src_w;  // [hidden x F], acts on the source half of [x_i | x_j]
  ad::Var trunk_dst_w;  // [hidden x F], acts on the destination half
  ad::Var trunk_b;
  std::vector<ad::Var> deep_w;  // extra trunk layers
  std::vector<ad::Var> deep_b;
  ad::Var mu_w, mu_b, logvar_w, logvar_b;

  static FeatureNet bind(const BoundParams& params, const EncoderConfig& cfg);
};

/// Per edge i->j: f = ReLU(MLP([x_i | x_j])), mu = head(f), sigma = exp(head(f) / 2).
Gaussian feature_subrelation(const FeatureNet& net, ad::Var features, const Graph& g,
                             const ad::Index& edge_ids);

struct LabelNet {
  ad::Var mu_w, mu_b, logvar_w, logvar_b;
  static LabelNet bind(const BoundParams& params);
};

/// Per edge i->j: heads over one-hot(y_i) when i is a training node, else
/// over the zero vector. Only the source label is read.
Gaussian label_subrelation(const LabelNet& net, const Graph& g, const std::vector<bool>& train_mask,
                           const ad::Index& edge_ids);

struct Weighted {
  double alpha;
  Gaussian sub;
};

/// mu = sum alpha_k mu_k, sigma^2 = sum alpha_k^2 sigma_k^2. Terms with
/// alpha = 0 should be left out by the caller.
Gaussian combine(const std::vector<Weighted>& terms);

/// z = mu + sigma * eps with eps ~ N(0, I). `noise_out` receives eps.
ad::Var reparameterize(const Gaussian& dist, Rng& rng, Tensor* noise_out = nullptr);
/// Same with caller-supplied eps.
ad::Var reparameterize(const Gaussian& dist, const Tensor& noise);

/// Sum over edges of KL(q(z_ij) || N(0, I)).
ad::Var encoder_loss(const Gaussian& dist);

/// Inference-time relation: the mean, unchanged.
ad::Var infer_relation(const Gaussian& dist);

/// Effective sub-relation weights for an encoder pass.
struct Alphas {
  double s = 1.0, f = 1.0, l = 1.0;
};

/// Builds the combined relation distribution for `edge_ids`, computing only
/// the sub-relations whose weight is nonzero.
Gaussian encode(const BoundParams& params, const EncoderConfig& cfg, const Alphas& alphas,
                ad::Var features, const Graph& g, const std::vector<bool>& train_mask,
                const ad::Index& edge_ids);

ad::Index all_edges(const Graph& g);

}  // namespace vrgnn::encoder
