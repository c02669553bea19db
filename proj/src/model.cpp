#include "vrgnn/model.hpp"

#include "vrgnn/error.hpp"

namespace vrgnn {

ParamStore init_model(const Graph& g, const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ParamStore store;
  encoder::add_parameters(store, cfg.encoder, g.num_edges(), g.num_features(), g.num_classes(), rng);
  decoder::add_parameters(store, cfg.decoder, g.num_features(), g.num_classes(), rng);
  return store;
}

encoder::Alphas effective_alphas(const ExperimentConfig& cfg) {
  const auto& e = cfg.encoder;
  switch (cfg.train.variant) {
    case Variant::full: return {e.alpha_s, e.alpha_f, e.alpha_l};
    case Variant::s: return {e.alpha_s, 0.0, 0.0};
    case Variant::f: return {0.0, e.alpha_f, 0.0};
    case Variant::l: return {0.0, 0.0, e.alpha_l};
    case Variant::zero:
    case Variant::mlp: return {0.0, 0.0, 0.0};
  }
  return {};
}

ModelForward model_forward(const BoundParams& params, const ExperimentConfig& cfg, const Graph& g,
                           const decoder::EdgeIndex& edges, const std::vector<bool>& train_mask,
                           const ForwardInputs& in) {
  ad::Tape& tape = *params[0].tape;
  const bool train = in.mode == decoder::Mode::train;
  ad::Var x = tape.constant(g.features());
  ModelForward out;

  const decoder::DecoderNet net = decoder::DecoderNet::bind(params, cfg.decoder);
  const decoder::ForwardOptions opts{in.mode, train ? cfg.train.dropout : 0.0, in.dropout_rng,
                                     in.counter};

  if (cfg.train.variant == Variant::mlp) {
    ad::Var h0 = decoder::init_embed(x, net.input_w, net.input_b);
    if (train && cfg.train.dropout > 0.0) h0 = ad::dropout(h0, cfg.train.dropout, *in.dropout_rng, true);
    out.decoder.h0 = h0;
    out.decoder.h = {h0};
    out.decoder.logits = decoder::classify(net, h0);
    out.logits = out.decoder.logits;
    out.encoder_loss = tape.constant(Tensor::scalar(0.0));
    return out;
  }

  if (cfg.train.variant == Variant::zero) {
    out.z0 = tape.constant(Tensor({g.num_edges(), cfg.encoder.hidden_dim}));
    out.encoder_loss = tape.constant(Tensor::scalar(0.0));
  } else {
    const auto ids = encoder::all_edges(g);
    encoder::Gaussian dist =
        encoder::encode(params, cfg.encoder, effective_alphas(cfg), x, g, train_mask, ids);
    out.encoder_loss = encoder::encoder_loss(dist);
    if (train) {
      if (in.fixed_noise) {
        out.noise = *in.fixed_noise;
        out.z0 = encoder::reparameterize(dist, out.noise);
      } else {
        if (!in.noise_rng) throw Error("training forward needs a noise rng");
        out.z0 = encoder::reparameterize(dist, *in.noise_rng, &out.noise);
      }
    } else {
      out.z0 = encoder::infer_relation(dist);
    }
    out.relation = dist;
  }
  if (train && cfg.train.relation_dropout && cfg.train.dropout > 0.0)
    out.z0 = ad::dropout(out.z0, cfg.train.dropout, *in.dropout_rng, true);

  out.decoder = decoder::forward(net, cfg.decoder, x, out.z0, edges, opts);
  out.logits = out.decoder.logits;
  return out;
}

Tensor infer_logits(const ParamStore& params, const ExperimentConfig& cfg, const Graph& g,
                    const std::vector<bool>& train_mask) {
  ad::Tape tape;
  BoundParams bound(tape, params, false);
  const auto edges = decoder::EdgeIndex::from_graph(g);
  ForwardInputs in;
  in.mode = decoder::Mode::infer;
  return model_forward(bound, cfg, g, edges, train_mask, in).logits.value();
}

ad::Var total_loss(ad::Var encoder_loss, ad::Var decoder_loss, double gamma) {
  return ad::axpby(gamma, encoder_loss, 1.0 - gamma, decoder_loss);
}

double total_loss(double encoder_loss, double decoder_loss, double gamma) {
  return gamma * encoder_loss + (1.0 - gamma) * decoder_loss;
}

}  // namespace vrgnn
