#include "vrgnn/encoder.hpp"

#include <cmath>

#include "vrgnn/error.hpp"

namespace vrgnn::encoder {

namespace names {
std::string trunk_src_weight() { return "enc.feat.trunk0.w_src"; }
std::string trunk_dst_weight() { return "enc.feat.trunk0.w_dst"; }
std::string trunk_weight(std::size_t layer) {
  return "enc.feat.trunk" + std::to_string(layer) + ".w";
}
std::string trunk_bias(std::size_t layer) {
  return "enc.feat.trunk" + std::to_string(layer) + ".b";
}
}  // namespace names

void add_parameters(ParamStore& store, const EncoderConfig& cfg, std::size_t num_edges,
                    std::size_t num_features, std::size_t num_classes, Rng& rng) {
  if (cfg.hidden_dim == 0 || cfg.mlp_hidden == 0 || cfg.trunk_depth == 0)
    throw ConfigError("encoder dimensions must be positive");
  const std::size_t h = cfg.hidden_dim;
  const std::size_t hid = cfg.mlp_hidden;
  const std::size_t f = num_features;

  store.add(names::kStructMu, normal_tensor({num_edges, h}, 0.0, 0.1, rng), true);
  store.add(names::kStructLogvar, Tensor({num_edges, h}), true);

  // The first trunk layer maps [x_i | x_j] (2F) to hid; its weight is kept
  // as the two F-column halves so the product can be taken per node.
  Tensor first = glorot_uniform(hid, 2 * f, rng);
  Tensor src_half({hid, f}), dst_half({hid, f});
  for (std::size_t r = 0; r < hid; ++r)
    for (std::size_t c = 0; c < f; ++c) {
      src_half.at(r, c) = first.at(r, c);
      dst_half.at(r, c) = first.at(r, f + c);
    }
  store.add(names::trunk_src_weight(), std::move(src_half), true);
  store.add(names::trunk_dst_weight(), std::move(dst_half), true);
  store.add(names::trunk_bias(0), Tensor({hid}), false);
  for (std::size_t k = 1; k < cfg.trunk_depth; ++k) {
    store.add(names::trunk_weight(k), glorot_uniform(hid, hid, rng), true);
    store.add(names::trunk_bias(k), Tensor({hid}), false);
  }
  store.add(names::kFeatMuW, glorot_uniform(h, hid, rng), true);
  store.add(names::kFeatMuB, Tensor({h}), false);
  store.add(names::kFeatLogvarW, glorot_uniform(h, hid, rng), true);
  store.add(names::kFeatLogvarB, Tensor({h}), false);

  store.add(names::kLabelMuW, glorot_uniform(h, num_classes, rng), true);
  store.add(names::kLabelMuB, Tensor({h}), false);
  store.add(names::kLabelLogvarW, glorot_uniform(h, num_classes, rng), true);
  store.add(names::kLabelLogvarB, Tensor({h}), false);
}

namespace {

ad::Var sigma_from_logvar(ad::Var logvar) { return ad::exp(ad::scale(logvar, 0.5)); }

}  // namespace

Gaussian structure_subrelation(ad::Var mu_table, ad::Var logvar_table, const ad::Index& edge_ids) {
  return {ad::gather_rows(mu_table, edge_ids),
          sigma_from_logvar(ad::gather_rows(logvar_table, edge_ids))};
}

FeatureNet FeatureNet::bind(const BoundParams& params, const EncoderConfig& cfg) {
  FeatureNet net;
  net.trunk_src_w = params.get(names::trunk_src_weight());
  net.trunk_dst_w = params.get(names::trunk_dst_weight());
  net.trunk_b = params.get(names::trunk_bias(0));
  for (std::size_t k = 1; k < cfg.trunk_depth; ++k) {
    net.deep_w.push_back(params.get(names::trunk_weight(k)));
    net.deep_b.push_back(params.get(names::trunk_bias(k)));
  }
  net.mu_w = params.get(names::kFeatMuW);
  net.mu_b = params.get(names::kFeatMuB);
  net.logvar_w = params.get(names::kFeatLogvarW);
  net.logvar_b = params.get(names::kFeatLogvarB);
  return net;
}

Gaussian feature_subrelation(const FeatureNet& net, ad::Var features, const Graph& g,
                             const ad::Index& edge_ids) {
  const Tensor& x = features.value();
  if (x.rows() != g.num_nodes() || x.cols() != net.trunk_src_w.value().cols())
    throw ShapeError("feature_subrelation: features " + x.shape_string() +
                     " do not fit trunk input " + net.trunk_src_w.value().shape_string());
  ad::Index src, dst;
  src.reserve(edge_ids.size());
  dst.reserve(edge_ids.size());
  for (std::size_t e : edge_ids) {
    if (e >= g.num_edges()) throw ShapeError("feature_subrelation: edge id out of range");
    src.push_back(g.edge_src()[e]);
    dst.push_back(g.edge_dst()[e]);
  }
  // W [x_i | x_j] = W_src x_i + W_dst x_j, evaluated per node then gathered.
  ad::Var from_src = ad::gather_rows(ad::matmul_nt(features, net.trunk_src_w), std::move(src));
  ad::Var from_dst = ad::gather_rows(ad::matmul_nt(features, net.trunk_dst_w), std::move(dst));
  ad::Var f = ad::relu(ad::add_bias(ad::add(from_src, from_dst), net.trunk_b));
  for (std::size_t k = 0; k < net.deep_w.size(); ++k)
    f = ad::relu(ad::linear(f, net.deep_w[k], net.deep_b[k]));
  return {ad::linear(f, net.mu_w, net.mu_b),
          sigma_from_logvar(ad::linear(f, net.logvar_w, net.logvar_b))};
}

LabelNet LabelNet::bind(const BoundParams& params) {
  return {params.get(names::kLabelMuW), params.get(names::kLabelMuB),
          params.get(names::kLabelLogvarW), params.get(names::kLabelLogvarB)};
}

Gaussian label_subrelation(const LabelNet& net, const Graph& g, const std::vector<bool>& train_mask,
                           const ad::Index& edge_ids) {
  const std::size_t m = g.num_classes();
  if (net.mu_w.value().cols() != m || net.logvar_w.value().cols() != m)
    throw ShapeError("label_subrelation: net expects " +
                     std::to_string(net.mu_w.value().cols()) + " classes, graph has " +
                     std::to_string(m));
  if (train_mask.size() != g.num_nodes())
    throw ShapeError("label_subrelation: train mask length differs from node count");
  // Each edge's input is one of M one-hot rows or the zero row (index M),
  // so the heads are evaluated once per distinct input and gathered.
  Tensor inputs({m + 1, m});
  for (std::size_t c = 0; c < m; ++c) inputs.at(c, c) = 1.0;
  ad::Index code;
  code.reserve(edge_ids.size());
  for (std::size_t e : edge_ids) {
    if (e >= g.num_edges()) throw ShapeError("label_subrelation: edge id out of range");
    const std::size_t i = g.edge_src()[e];
    code.push_back(train_mask[i] && g.is_labeled(i) ? static_cast<std::size_t>(g.label(i)) : m);
  }
  ad::Var in = net.mu_w.tape->constant(std::move(inputs));
  ad::Var mu_rows = ad::linear(in, net.mu_w, net.mu_b);
  ad::Var sigma_rows = sigma_from_logvar(ad::linear(in, net.logvar_w, net.logvar_b));
  return {ad::gather_rows(mu_rows, code), ad::gather_rows(sigma_rows, code)};
}

Gaussian combine(const std::vector<Weighted>& terms) {
  if (terms.empty()) throw ConfigError("combine: no active sub-relation");
  for (const auto& t : terms) {
    if (!std::isfinite(t.alpha)) throw ConfigError("combine: non-finite alpha");
    if (!t.sub.mu.value().same_shape(terms[0].sub.mu.value()) ||
        !t.sub.sigma.value().same_shape(terms[0].sub.mu.value()))
      throw ShapeError("combine: sub-relation shapes differ");
  }
  if (terms.size() == 1) {
    const double a = terms[0].alpha;
    return {ad::scale(terms[0].sub.mu, a), ad::scale(terms[0].sub.sigma, std::abs(a))};
  }
  ad::Var mu = ad::scale(terms[0].sub.mu, terms[0].alpha);
  ad::Var var = ad::scale(ad::mul(terms[0].sub.sigma, terms[0].sub.sigma),
                          terms[0].alpha * terms[0].alpha);
  for (std::size_t k = 1; k < terms.size(); ++k) {
    const double a = terms[k].alpha;
    mu = ad::axpby(1.0, mu, a, terms[k].sub.mu);
    var = ad::axpby(1.0, var, a * a, ad::mul(terms[k].sub.sigma, terms[k].sub.sigma));
  }
  return {mu, ad::sqrt(var)};
}

ad::Var reparameterize(const Gaussian& dist, Rng& rng, Tensor* noise_out) {
  Tensor noise = Tensor::zeros_like(dist.mu.value());
  for (auto& v : noise.data()) v = rng.normal();
  if (noise_out) *noise_out = noise;
  return reparameterize(dist, noise);
}

ad::Var reparameterize(const Gaussian& dist, const Tensor& noise) {
  if (!noise.same_shape(dist.mu.value()))
    throw ShapeError("reparameterize: noise shape " + noise.shape_string() + " vs mu " +
                     dist.mu.value().shape_string());
  ad::Var eps = dist.mu.tape->constant(noise);
  return ad::add(dist.mu, ad::mul(dist.sigma, eps));
}

ad::Var encoder_loss(const Gaussian& dist) { return ad::gaussian_kl(dist.mu, dist.sigma); }

ad::Var infer_relation(const Gaussian& dist) { return dist.mu; }

Gaussian encode(const BoundParams& params, const EncoderConfig& cfg, const Alphas& alphas,
                ad::Var features, const Graph& g, const std::vector<bool>& train_mask,
                const ad::Index& edge_ids) {
  std::vector<Weighted> terms;
  if (alphas.s != 0.0)
    terms.push_back({alphas.s, structure_subrelation(params.get(names::kStructMu),
                                                     params.get(names::kStructLogvar), edge_ids)});
  if (alphas.f != 0.0)
    terms.push_back({alphas.f, feature_subrelation(FeatureNet::bind(params, cfg), features, g,
                                                   edge_ids)});
  if (alphas.l != 0.0)
    terms.push_back({alphas.l, label_subrelation(LabelNet::bind(params), g, train_mask, edge_ids)});
  return combine(terms);
}

ad::Index all_edges(const Graph& g) {
  ad::Index ids(g.num_edges());
  for (std::size_t e = 0; e < ids.size(); ++e) ids[e] = e;
  return ids;
}

}  // namespace vrgnn::encoder
