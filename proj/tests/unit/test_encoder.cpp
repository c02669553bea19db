#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "vrgnn/adam.hpp"
#include "vrgnn/encoder.hpp"
#include "vrgnn/error.hpp"
#include "vrgnn/graph.hpp"

using namespace vrgnn;
using namespace vrgnn::encoder;
using vrgnn::testing::random_tensor;

namespace {

// 0 -- 1 -- 2 -- 3, classes 0 1 0 1.
Graph path4() {
  Tensor x({4, 2}, std::vector<double>{1, 0, 0, 1, 2, 0, 0, 2});
  return Graph::from_undirected(4, {{0, 1}, {1, 2}, {2, 3}}, x, {0, 1, 0, 1}, 2);
}

struct Fixture {
  Graph g = path4();
  EncoderConfig cfg;
  ParamStore store;

  explicit Fixture(std::size_t h = 3) {
    cfg.hidden_dim = h;
    cfg.mlp_hidden = 4;
    Rng rng(5);
    add_parameters(store, cfg, g.num_edges(), g.num_features(), g.num_classes(), rng);
  }
};

std::vector<bool> mask_of(std::initializer_list<int> on, std::size_t n) {
  std::vector<bool> m(n, false);
  for (int i : on) m[static_cast<std::size_t>(i)] = true;
  return m;
}

void expect_rows_equal(const Tensor& t, std::size_t a, std::size_t b) {
  for (std::size_t c = 0; c < t.cols(); ++c) EXPECT_EQ(t.at(a, c), t.at(b, c));
}

}  // namespace

TEST(StructureSubrelation, ZeroLogvarGivesUnitSigma) {
  Fixture f;
  ad::Tape tape;
  BoundParams p(tape, f.store, false);
  const Gaussian s = structure_subrelation(p.get(names::kStructMu), p.get(names::kStructLogvar),
                                           all_edges(f.g));
  for (double v : s.sigma.value().data()) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(s.mu.value().data(), f.store.get(names::kStructMu).value.data());
}

TEST(StructureSubrelation, RowsAreIndependent) {
  Fixture f;
  const Tensor before = f.store.get(names::kStructMu).value;
  f.store.get(names::kStructMu).value.at(0, 1) += 5.0;
  ad::Tape tape;
  BoundParams p(tape, f.store, false);
  const Gaussian s =
      structure_subrelation(p.get(names::kStructMu), p.get(names::kStructLogvar), {0, 1});
  EXPECT_EQ(s.mu.value().at(0, 1), before.at(0, 1) + 5.0);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(s.mu.value().at(1, c), before.at(1, c));
}

TEST(StructureSubrelation, OutOfRangeEdge) {
  Fixture f;
  ad::Tape tape;
  BoundParams p(tape, f.store, false);
  EXPECT_THROW(
      structure_subrelation(p.get(names::kStructMu), p.get(names::kStructLogvar), {99}),
      Error);
}

TEST(StructureSubrelation, KlOnlyAdamStepShrinksMu) {
  Fixture f;
  ParamStore s = f.store;
  const Tensor before = s.get(names::kStructMu).value;
  ad::Tape tape;
  BoundParams p(tape, s, true);
  const Gaussian q = structure_subrelation(p.get(names::kStructMu), p.get(names::kStructLogvar),
                                           all_edges(f.g));
  tape.backward(encoder_loss(q));
  AdamState adam(s, {0.001, 0.9, 0.999, 1e-8, 0.0});
  adam_step(s, p.gradients(), adam);
  const Tensor& after = s.get(names::kStructMu).value;
  for (std::size_t i = 0; i < after.size(); ++i) {
    if (before[i] == 0.0) continue;
    EXPECT_LT(std::abs(after[i]), std::abs(before[i])) << i;
  }
}

TEST(StructureSubrelation, KlGradientsMatchClosedForm) {
  Fixture f;
  ParamStore s = f.store;
  s.get(names::kStructLogvar).value = random_tensor({f.g.num_edges(), 3}, 8, -1.0, 1.0);
  ad::Tape tape;
  BoundParams p(tape, s, true);
  const Gaussian q = structure_subrelation(p.get(names::kStructMu), p.get(names::kStructLogvar),
                                           all_edges(f.g));
  tape.backward(encoder_loss(q));
  const Tensor& mu = s.get(names::kStructMu).value;
  const Tensor& lv = s.get(names::kStructLogvar).value;
  const Tensor& g_mu = p.get(names::kStructMu).grad();
  const Tensor& g_sigma = q.sigma.grad();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double sigma = std::exp(0.5 * lv[i]);
    EXPECT_NEAR(g_mu[i], mu[i], 1e-6);
    EXPECT_NEAR(g_sigma[i], sigma - 1.0 / sigma, 1e-6);
  }
}

TEST(FeatureSubrelation, ZeroFeaturesGiveBias) {
  Fixture f;
  const Graph g = Graph::from_undirected(4, {{0, 1}, {1, 2}, {2, 3}}, Tensor({4, 2}),
                                         {0, 1, 0, 1}, 2);
  ad::Tape tape;
  BoundParams p(tape, f.store, false);
  const Gaussian q = feature_subrelation(FeatureNet::bind(p, f.cfg),
                                         tape.constant(g.features()), g, all_edges(g));
  for (double v : q.mu.value().data()) EXPECT_EQ(v, 0.0);
  for (double v : q.sigma.value().data()) EXPECT_EQ(v, 1.0);
}

TEST(FeatureSubrelation, ConcatOrderMatters) {
  Fixture f;
  ad::Tape tape;
  BoundParams p(tape, f.store, false);
  // Edges sorted by (dst, src): edge 0 is 1->0, edge 1 is 0->1.
  ASSERT_EQ(f.g.edge(0), (DirectedEdge{1, 0}));
  ASSERT_EQ(f.g.edge(1), (DirectedEdge{0, 1}));
  const Gaussian q = feature_subrelation(FeatureNet::bind(p, f.cfg),
                                         tape.constant(f.g.features()), f.g, {0, 1});
  double diff = 0.0;
  for (std::size_t c = 0; c < 3; ++c) diff += std::abs(q.mu.value().at(0, c) - q.mu.value().at(1, c));
  EXPECT_GT(diff, 1e-6);
}

TEST(FeatureSubrelation, HandSetSingleUnitTrunk) {
  const Graph g = Graph::from_undirected(2, {{0, 1}}, Tensor({2, 1}, 1.0), {0, 1}, 2);
  EncoderConfig cfg;
  cfg.hidden_dim = 1;
  cfg.mlp_hidden = 1;
  ParamStore s;
  Rng rng(0);
  add_parameters(s, cfg, g.num_edges(), 1, 2, rng);
  s.get(names::trunk_src_weight()).value = Tensor({1, 1}, 1.0);
  s.get(names::trunk_dst_weight()).value = Tensor({1, 1}, 1.0);
  s.get(names::trunk_bias(0)).value = Tensor({1}, -0.5);
  s.get(names::kFeatMuW).value = Tensor({1, 1}, 3.0);
  s.get(names::kFeatMuB).value = Tensor({1}, 0.25);
  s.get(names::kFeatLogvarW).value = Tensor({1, 1}, 1.0);
  s.get(names::kFeatLogvarB).value = Tensor({1}, 0.0);
  ad::Tape tape;
  BoundParams p(tape, s, false);
  const Gaussian q =
      feature_subrelation(FeatureNet::bind(p, cfg), tape.constant(g.features()), g, {0});
  // trunk = ReLU(1 + 1 - 0.5) = 1.5; mu = 3 * 1.5 + 0.25; sigma = exp(1.5 / 2).
  EXPECT_DOUBLE_EQ(q.mu.value()[0], 4.75);
  EXPECT_DOUBLE_EQ(q.sigma.value()[0], std::exp(0.75));
}

TEST(FeatureSubrelation, FeatureWidthMismatch) {
  Fixture f;
  const Graph g = Graph::from_undirected(2, {{0, 1}}, Tensor({2, 5}), {0, 1}, 2);
  ad::Tape tape;
  BoundParams p(tape, f.store, false);
  EXPECT_THROW(feature_subrelation(FeatureNet::bind(p, f.cfg), tape.constant(g.features()), g,
                                   {0}),
               ShapeError);
}

TEST(LabelSubrelation, UnobservedSourceGivesBias) {
  Fixture f;
  ad::Tape tape;
  BoundParams p(tape, f.store, false);
  const Gaussian q =
      label_subrelation(LabelNet::bind(p), f.g, mask_of({}, 4), all_edges(f.g));
  for (double v : q.mu.value().data()) EXPECT_EQ(v, 0.0);
  for (double v : q.sigma.value().data()) EXPECT_EQ(v, 1.0);
}

TEST(LabelSubrelation, SameSourceSameRows) {
  Fixture f;
  ad::Tape tape;
  BoundParams p(tape, f.store, false);
  // Node 1 sends to 0 (edge 0) and to 2 (edge 3 in (dst, src) order).
  ASSERT_EQ(f.g.edge(0).src, 1u);
  ASSERT_EQ(f.g.edge(3), (DirectedEdge{1, 2}));
  const Gaussian q = label_subrelation(LabelNet::bind(p), f.g, mask_of({1}, 4), all_edges(f.g));
  expect_rows_equal(q.mu.value(), 0, 3);
  expect_rows_equal(q.sigma.value(), 0, 3);
  // A labeled source produces the weight column of its class.
  const Tensor& w = f.store.get(names::kLabelMuW).value;
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(q.mu.value().at(0, c), w.at(c, 1));
}

TEST(LabelSubrelation, MaskGovernsNotFileLabels) {
  Fixture f;
  ad::Tape tape;
  BoundParams p(tape, f.store, false);
  // Nodes 2 and 3 are labeled in the graph but outside the train mask.
  const Gaussian masked = label_subrelation(LabelNet::bind(p), f.g, mask_of({0, 1}, 4),
                                            all_edges(f.g));
  const Graph unlabeled = f.g.with_labels({0, 1, kUnknownLabel, kUnknownLabel});
  const Gaussian none = label_subrelation(LabelNet::bind(p), unlabeled, mask_of({0, 1}, 4),
                                          all_edges(f.g));
  EXPECT_EQ(masked.mu.value().data(), none.mu.value().data());
  EXPECT_EQ(masked.sigma.value().data(), none.sigma.value().data());
}

TEST(Combine, SingleActiveTermIsExact) {
  Fixture f;
  ad::Tape tape;
  BoundParams p(tape, f.store, false);
  const Gaussian s = structure_subrelation(p.get(names::kStructMu), p.get(names::kStructLogvar),
                                           all_edges(f.g));
  const Gaussian c = combine({{1.0, s}});
  EXPECT_EQ(c.mu.value().data(), s.mu.value().data());
  EXPECT_EQ(c.sigma.value().data(), s.sigma.value().data());
}

TEST(Combine, ThreeUnitSigmasGiveSqrtThree) {
  ad::Tape tape;
  const Gaussian unit{tape.constant(Tensor({2, 2})), tape.constant(Tensor({2, 2}, 1.0))};
  const Gaussian c = combine({{1.0, unit}, {1.0, unit}, {1.0, unit}});
  for (double v : c.sigma.value().data()) EXPECT_NEAR(v, std::sqrt(3.0), 1e-15);
}

TEST(Combine, HalfWeightsOfEqualMeans) {
  ad::Tape tape;
  const Tensor m = random_tensor({3, 2}, 4);
  const Gaussian a{tape.constant(m), tape.constant(Tensor({3, 2}, 1.0))};
  const Gaussian c = combine({{0.5, a}, {0.5, a}});
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_DOUBLE_EQ(c.mu.value()[i], m[i]);
}

TEST(Combine, MatchesWeightedFormulaOnRandomInputs) {
  ad::Tape tape;
  std::vector<Weighted> terms;
  const double alphas[] = {0.3, 0.9, 0.6};
  for (int k = 0; k < 3; ++k)
    terms.push_back({alphas[k],
                     {tape.constant(random_tensor({5, 4}, 10 + k)),
                      tape.constant(random_tensor({5, 4}, 20 + k, 0.1, 2.0))}});
  const Gaussian c = combine(terms);
  for (std::size_t i = 0; i < 20; ++i) {
    double mu = 0.0, var = 0.0;
    for (const auto& t : terms) {
      mu += t.alpha * t.sub.mu.value()[i];
      var += t.alpha * t.alpha * t.sub.sigma.value()[i] * t.sub.sigma.value()[i];
    }
    EXPECT_NEAR(c.mu.value()[i], mu, 1e-12);
    EXPECT_NEAR(c.sigma.value()[i] * c.sigma.value()[i], var, 1e-12);
  }
}

TEST(Combine, GradientsMatchFiniteDifferences) {
  const double err = vrgnn::testing::gradcheck(
      [](ad::Tape&, const std::vector<ad::Var>& v) {
        const Gaussian c = combine({{0.4, {v[0], v[1]}}, {0.8, {v[2], v[3]}}});
        return ad::add(vrgnn::testing::weighted_sum(c.mu), vrgnn::testing::weighted_sum(c.sigma, 7));
      },
      {random_tensor({3, 2}, 1), random_tensor({3, 2}, 2, 0.5, 1.5), random_tensor({3, 2}, 3),
       random_tensor({3, 2}, 4, 0.5, 1.5)});
  EXPECT_LT(err, 1e-4);
}

TEST(Reparameterize, ZeroNoiseGivesMean) {
  ad::Tape tape;
  const Tensor m = random_tensor({4, 3}, 6);
  const Gaussian q{tape.constant(m), tape.constant(Tensor({4, 3}, 2.0))};
  EXPECT_EQ(reparameterize(q, Tensor({4, 3})).value().data(), m.data());
}

TEST(Reparameterize, ScalesUnitNoise) {
  ad::Tape tape;
  const Gaussian q{tape.constant(Tensor({1, 1})), tape.constant(Tensor({1, 1}, 2.0))};
  EXPECT_EQ(reparameterize(q, Tensor({1, 1}, 1.0)).value()[0], 2.0);
}

TEST(Reparameterize, GradientReachesMuAndSigma) {
  ad::Tape tape;
  ad::Var mu = tape.leaf(Tensor({1, 2}, 0.5), true);
  ad::Var sigma = tape.leaf(Tensor({1, 2}, 1.5), true);
  const Tensor eps({1, 2}, std::vector<double>{0.3, -2.0});
  tape.backward(ad::sum(reparameterize({mu, sigma}, eps)));
  EXPECT_EQ(mu.grad()[0], 1.0);
  EXPECT_EQ(sigma.grad()[0], 0.3);
  EXPECT_EQ(sigma.grad()[1], -2.0);
}

TEST(Reparameterize, MonteCarloMean) {
  const std::size_t n = 100000;
  ad::Tape tape;
  const Gaussian q{tape.constant(Tensor({n, 1}, 1.25)), tape.constant(Tensor({n, 1}, 0.8))};
  Rng rng(13);
  Tensor eps;
  const Tensor z = reparameterize(q, rng, &eps).value();
  double mean = 0.0;
  for (double v : z.data()) mean += v;
  mean /= static_cast<double>(n);
  EXPECT_NEAR(mean, 1.25, 3.0 * 0.8 / std::sqrt(static_cast<double>(n)));
  for (std::size_t i = 0; i < n; i += 997) EXPECT_DOUBLE_EQ(z[i], 1.25 + 0.8 * eps[i]);
}

TEST(EncoderLoss, PriorIsZero) {
  ad::Tape tape;
  const Gaussian q{tape.constant(Tensor({6, 4})), tape.constant(Tensor({6, 4}, 1.0))};
  EXPECT_EQ(encoder_loss(q).value().item(), 0.0);
}

TEST(EncoderLoss, OneEdgeUnitMean) {
  ad::Tape tape;
  const Gaussian q{tape.constant(Tensor({1, 1}, 1.0)), tape.constant(Tensor({1, 1}, 1.0))};
  EXPECT_DOUBLE_EQ(encoder_loss(q).value().item(), 0.5);
}

TEST(EncoderLoss, AdditiveOverEdges) {
  ad::Tape tape;
  const Tensor m = random_tensor({3, 4}, 1);
  const Tensor s = random_tensor({3, 4}, 2, 0.3, 2.0);
  Tensor m2({6, 4}), s2({6, 4});
  for (std::size_t i = 0; i < 12; ++i) {
    m2[i] = m2[i + 12] = m[i];
    s2[i] = s2[i + 12] = s[i];
  }
  const double one = encoder_loss({tape.constant(m), tape.constant(s)}).value().item();
  const double two = encoder_loss({tape.constant(m2), tape.constant(s2)}).value().item();
  EXPECT_NEAR(two, 2.0 * one, 1e-12);
}

TEST(EncoderLoss, NonNegativeOnRandomDistributions) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ad::Tape tape;
    const Gaussian q{tape.constant(random_tensor({4, 3}, seed, -2.0, 2.0)),
                     tape.constant(random_tensor({4, 3}, seed + 100, 0.05, 3.0))};
    EXPECT_GT(encoder_loss(q).value().item(), 0.0);
  }
}

TEST(InferRelation, ReturnsMeanBitwise) {
  Fixture f;
  ad::Tape tape;
  BoundParams p(tape, f.store, false);
  const Gaussian q = encode(p, f.cfg, {}, tape.constant(f.g.features()), f.g,
                            mask_of({0, 1}, 4), all_edges(f.g));
  const Tensor a = infer_relation(q).value();
  const Tensor b = infer_relation(q).value();
  EXPECT_EQ(a.data(), q.mu.value().data());
  EXPECT_EQ(a.data(), b.data());
}

TEST(Encode, ZeroAlphaSkipsSubrelation) {
  Fixture f;
  ad::Tape tape;
  BoundParams p(tape, f.store, false);
  const Gaussian only_s = encode(p, f.cfg, {1.0, 0.0, 0.0}, tape.constant(f.g.features()), f.g,
                                 mask_of({0}, 4), all_edges(f.g));
  EXPECT_EQ(only_s.mu.value().data(), f.store.get(names::kStructMu).value.data());
}

TEST(Encode, NonTrainLabelsNeverChangeRelations) {
  Fixture f;
  const auto mask = mask_of({0, 1}, 4);
  ad::Tape tape;
  BoundParams p(tape, f.store, false);
  const Gaussian base =
      encode(p, f.cfg, {}, tape.constant(f.g.features()), f.g, mask, all_edges(f.g));
  const Graph flipped = f.g.with_labels({0, 1, 1, 0});
  const Gaussian other =
      encode(p, f.cfg, {}, tape.constant(flipped.features()), flipped, mask, all_edges(flipped));
  EXPECT_EQ(base.mu.value().data(), other.mu.value().data());
  EXPECT_EQ(base.sigma.value().data(), other.sigma.value().data());
}
