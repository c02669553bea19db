#include "vrgnn/decoder.hpp"

#include "vrgnn/error.hpp"

namespace vrgnn::decoder {

namespace names {
std::string layer_weight(std::size_t layer) { return "dec.layer" + std::to_string(layer) + ".w"; }
std::string relation_weight(std::size_t layer) {
  return "dec.layer" + std::to_string(layer) + ".w_rel";
}
std::string classifier_weight(std::size_t layer) {
  return "dec.cls" + std::to_string(layer) + ".w";
}
std::string classifier_bias(std::size_t layer) { return "dec.cls" + std::to_string(layer) + ".b"; }
}  // namespace names

EdgeIndex EdgeIndex::from_graph(const Graph& g) {
  return {g.edge_src(), g.edge_dst(), g.num_nodes()};
}

void add_parameters(ParamStore& store, const DecoderConfig& cfg, std::size_t num_features,
                    std::size_t num_classes, Rng& rng) {
  if (cfg.num_layers == 0) throw ConfigError("decoder needs at least one layer");
  if (cfg.hidden_dim == 0) throw ConfigError("decoder hidden_dim must be positive");
  if (cfg.classifier_depth == 0) throw ConfigError("classifier_depth must be positive");
  if (!(cfg.theta >= 0.0 && cfg.theta <= 1.0)) throw ConfigError("theta must lie in [0, 1]");
  const std::size_t h = cfg.hidden_dim;
  store.add(names::kInputW, glorot_uniform(h, num_features, rng), true);
  store.add(names::kInputB, Tensor({h}), false);
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    store.add(names::layer_weight(l), glorot_uniform(h, h, rng), true);
    if (l + 1 < cfg.num_layers)
      store.add(names::relation_weight(l), glorot_uniform(h, h, rng), true);
  }
  for (std::size_t k = 0; k < cfg.classifier_depth; ++k) {
    const std::size_t out = k + 1 == cfg.classifier_depth ? num_classes : h;
    store.add(names::classifier_weight(k), glorot_uniform(out, h, rng), true);
    store.add(names::classifier_bias(k), Tensor({out}), false);
  }
}

DecoderNet DecoderNet::bind(const BoundParams& params, const DecoderConfig& cfg) {
  DecoderNet net;
  net.input_w = params.get(names::kInputW);
  net.input_b = params.get(names::kInputB);
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    net.layer_w.push_back(params.get(names::layer_weight(l)));
    if (l + 1 < cfg.num_layers) net.relation_w.push_back(params.get(names::relation_weight(l)));
  }
  for (std::size_t k = 0; k < cfg.classifier_depth; ++k) {
    net.classifier_w.push_back(params.get(names::classifier_weight(k)));
    net.classifier_b.push_back(params.get(names::classifier_bias(k)));
  }
  return net;
}

ad::Var init_embed(ad::Var features, ad::Var weight, ad::Var bias) {
  return ad::relu(ad::linear(features, weight, bias));
}

ad::Var translate_message(ad::Var h_src, ad::Var z, ad::Var weight) {
  return ad::add(ad::matmul_nt(h_src, weight), z);
}

Aggregation attention_aggregate(ad::Var h, ad::Var z, const EdgeIndex& edges, ad::Var weight,
                                const ForwardOptions& opts) {
  const Tensor& hv = h.value();
  if (hv.rows() != edges.num_nodes)
    throw ShapeError("attention_aggregate: " + std::to_string(hv.rows()) + " node rows for " +
                     std::to_string(edges.num_nodes) + " nodes");
  if (z.value().rows() != edges.size() || z.value().cols() != hv.cols())
    throw ShapeError("attention_aggregate: relation matrix " + z.value().shape_string() +
                     " for " + std::to_string(edges.size()) + " edges of width " +
                     std::to_string(hv.cols()));
  if (opts.counter) opts.counter->visits += edges.size();

  Aggregation out;
  // W h_j is computed per node and then gathered per edge.
  ad::Var transformed = ad::gather_rows(ad::matmul_nt(h, weight), edges.src);
  out.messages = ad::add(transformed, z);
  out.logits = ad::row_dot(ad::gather_rows(h, edges.dst), out.messages);
  out.attention = ad::segment_softmax(out.logits, edges.dst, edges.num_nodes);
  ad::Var weights = out.attention;
  if (opts.mode == Mode::train && opts.dropout > 0.0) {
    if (!opts.dropout_rng) throw Error("attention dropout needs an rng");
    weights = ad::dropout(out.attention, opts.dropout, *opts.dropout_rng, true);
  }
  out.h_bar = ad::scatter_add_rows(ad::scale_rows(out.messages, weights), edges.dst, edges.num_nodes);
  return out;
}

ad::Var residual_update(ad::Var h_bar, ad::Var h0, double theta) {
  return ad::axpby(theta, h_bar, 1.0 - theta, h0);
}

ad::Var relation_layer_transform(ad::Var z, ad::Var relation_weight) {
  return ad::matmul_nt(z, relation_weight);
}

ad::Var classify(const DecoderNet& net, ad::Var h) {
  ad::Var out = h;
  for (std::size_t k = 0; k < net.classifier_w.size(); ++k) {
    out = ad::linear(out, net.classifier_w[k], net.classifier_b[k]);
    if (k + 1 < net.classifier_w.size()) out = ad::relu(out);
  }
  return out;
}

DecoderOutput forward(const DecoderNet& net, const DecoderConfig& cfg, ad::Var features,
                      ad::Var z0, const EdgeIndex& edges, const ForwardOptions& opts) {
  if (net.layer_w.size() != cfg.num_layers)
    throw ShapeError("decoder parameters do not match layer count");
  const bool train = opts.mode == Mode::train;
  if (train && opts.dropout > 0.0 && !opts.dropout_rng) throw Error("dropout needs an rng");

  DecoderOutput out;
  ad::Var h0 = init_embed(features, net.input_w, net.input_b);
  if (train && opts.dropout > 0.0) h0 = ad::dropout(h0, opts.dropout, *opts.dropout_rng, true);
  out.h0 = h0;
  out.h.push_back(h0);
  ad::Var z = z0;
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    out.z.push_back(z);
    Aggregation agg = attention_aggregate(out.h.back(), z, edges, net.layer_w[l], opts);
    out.h.push_back(residual_update(agg.h_bar, h0, cfg.theta));
    out.layers.push_back(agg);
    if (l + 1 < cfg.num_layers) z = relation_layer_transform(z, net.relation_w[l]);
  }
  out.logits = classify(net, out.h.back());
  return out;
}

}  // namespace vrgnn::decoder
