#include "vrgnn/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vrgnn/error.hpp"
#include "vrgnn/model.hpp"

namespace vrgnn::analysis {

namespace {

std::vector<double> apply(const Tensor& w, std::span<const double> x) {
  if (w.rank() != 2 || w.cols() != x.size())
    throw ShapeError("message transform " + w.shape_string() + " cannot apply to a vector of size " +
                     std::to_string(x.size()));
  std::vector<double> out(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) acc += w.at(r, c) * x[c];
    out[r] = acc;
  }
  return out;
}

std::vector<double> plus(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += b[k];
  return out;
}

bool labeled_edge(const Graph& g, std::size_t e) {
  return g.is_labeled(g.edge_src()[e]) && g.is_labeled(g.edge_dst()[e]);
}

void check_state(const MessageState& s, const Graph& g) {
  if (s.h.rows() != g.num_nodes() || s.h_centroid.rows() != g.num_nodes())
    throw ShapeError("message state has " + std::to_string(s.h.rows()) + " node rows for " +
                     std::to_string(g.num_nodes()) + " nodes");
  if (s.z.rows() != g.num_edges() || s.z.cols() != s.h.cols())
    throw ShapeError("relation matrix " + s.z.shape_string() + " does not match " +
                     std::to_string(g.num_edges()) + " edges of width " + std::to_string(s.h.cols()));
}

std::vector<bool> mask_for(const Checkpoint& ckpt, const AnalysisOptions& opts) {
  return opts.train_only_centroids ? ckpt.split.train : std::vector<bool>{};
}

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write " + file.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

std::vector<double> relation_message(std::span<const double> h_j, std::span<const double> z_ji,
                                     const Tensor& weight) {
  std::vector<double> m = apply(weight, h_j);
  if (z_ji.size() != m.size())
    throw ShapeError("relation vector of size " + std::to_string(z_ji.size()) +
                     " for a message of size " + std::to_string(m.size()));
  for (std::size_t k = 0; k < m.size(); ++k) m[k] += z_ji[k];
  return m;
}

std::vector<double> signed_message(std::span<const double> h_j, const Tensor& weight,
                                   bool same_class) {
  std::vector<double> m = apply(weight, h_j);
  if (!same_class)
    for (double& v : m) v = -v;
  return m;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("distance between vectors of different sizes");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b, bool* zero) {
  if (a.size() != b.size()) throw ShapeError("cosine between vectors of different sizes");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  const bool degenerate = na == 0.0 || nb == 0.0;
  if (zero) *zero = degenerate;
  if (degenerate) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

MessageState extract_state(const Checkpoint& ckpt, const Graph& g, const AnalysisOptions& opts) {
  ckpt.check_compatible(g);
  const ExperimentConfig& cfg = ckpt.config;
  if (cfg.train.variant == Variant::mlp)
    throw ConfigError("message diagnostics need a message-passing model, checkpoint is 'mlp'");
  const std::size_t L = cfg.decoder.num_layers;
  const std::size_t msg = opts.message_layer.value_or(L - 1);
  const std::size_t cen = opts.centroid_layer.value_or(L);
  if (msg >= L) throw ConfigError("message layer " + std::to_string(msg) + " out of range for " +
                                  std::to_string(L) + " layers");
  if (cen > L) throw ConfigError("centroid layer " + std::to_string(cen) + " out of range");

  ad::Tape tape;
  BoundParams bound(tape, ckpt.params, false);
  const auto edges = decoder::EdgeIndex::from_graph(g);
  ForwardInputs in;
  in.mode = decoder::Mode::infer;
  const ModelForward fwd = model_forward(bound, cfg, g, edges, ckpt.split.train, in);
  MessageState s;
  s.h = fwd.decoder.h[msg].value();
  s.z = fwd.decoder.z[msg].value();
  s.weight = ckpt.params.get(decoder::names::layer_weight(msg)).value;
  s.h_centroid = fwd.decoder.h[cen].value();
  return s;
}

std::vector<ClassCentroid> class_centroids(const Tensor& h, const Graph& g,
                                           const std::vector<bool>* mask) {
  if (h.rows() != g.num_nodes()) throw ShapeError("centroids: embedding rows do not match nodes");
  if (mask && mask->size() != g.num_nodes()) throw ShapeError("centroids: mask size mismatch");
  const std::size_t d = h.cols();
  std::vector<ClassCentroid> out;
  std::vector<std::vector<double>> sums(g.num_classes(), std::vector<double>(d, 0.0));
  std::vector<std::size_t> counts(g.num_classes(), 0);
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    if (!g.is_labeled(i) || (mask && !(*mask)[i])) continue;
    const auto c = static_cast<std::size_t>(g.label(i));
    for (std::size_t k = 0; k < d; ++k) sums[c][k] += h.at(i, k);
    ++counts[c];
  }
  for (std::size_t c = 0; c < g.num_classes(); ++c) {
    if (counts[c] == 0) continue;
    ClassCentroid cc{static_cast<int>(c), counts[c], std::move(sums[c])};
    for (double& v : cc.mean) v /= static_cast<double>(counts[c]);
    out.push_back(std::move(cc));
  }
  return out;
}

std::vector<MessageComparison> compare_messages(const MessageState& state, const Graph& g,
                                                const std::vector<bool>* centroid_mask) {
  check_state(state, g);
  const auto centroids = class_centroids(state.h_centroid, g, centroid_mask);
  std::vector<const ClassCentroid*> by_class(g.num_classes(), nullptr);
  for (const auto& c : centroids) by_class[static_cast<std::size_t>(c.label)] = &c;

  std::vector<MessageComparison> rows;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    if (!labeled_edge(g, e)) continue;
    MessageComparison r;
    r.edge = e;
    r.src = g.edge_src()[e];
    r.dst = g.edge_dst()[e];
    r.is_homophilic = g.label(r.src) == g.label(r.dst);
    const auto h_j = state.h.row(r.src);
    const auto h_i = state.h.row(r.dst);
    const auto m_rel = relation_message(h_j, state.z.row(e), state.weight);
    const auto m_sign = signed_message(h_j, state.weight, r.is_homophilic);
    r.dist_before = euclidean_distance(h_i, h_j);
    r.dist_after_rel = euclidean_distance(plus(h_i, m_rel), h_j);
    r.dist_after_sign = euclidean_distance(plus(h_i, m_sign), h_j);
    const ClassCentroid* c = by_class[static_cast<std::size_t>(g.label(r.dst))];
    if (c) {
      r.cos_rel = cosine_similarity(m_rel, c->mean, &r.zero_rel);
      r.cos_sign = cosine_similarity(m_sign, c->mean, &r.zero_sign);
    } else {
      r.zero_rel = r.zero_sign = true;
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<MessageComparison> compare_messages(const Checkpoint& ckpt, const Graph& g,
                                                const AnalysisOptions& opts) {
  const MessageState s = extract_state(ckpt, g, opts);
  const auto mask = mask_for(ckpt, opts);
  return compare_messages(s, g, opts.train_only_centroids ? &mask : nullptr);
}

std::vector<MessageComparison> distance_shift(const MessageState& state, const Graph& g) {
  auto rows = compare_messages(state, g, nullptr);
  for (auto& r : rows) {
    r.cos_rel = r.cos_sign = 0.0;
    r.zero_rel = r.zero_sign = false;
  }
  return rows;
}

std::vector<MessageComparison> distance_shift(const Checkpoint& ckpt, const Graph& g,
                                              const AnalysisOptions& opts) {
  return distance_shift(extract_state(ckpt, g, opts), g);
}

std::vector<MessageComparison> centroid_similarity(const MessageState& state, const Graph& g,
                                                   const std::vector<bool>* centroid_mask) {
  auto rows = compare_messages(state, g, centroid_mask);
  for (auto& r : rows) r.dist_before = r.dist_after_rel = r.dist_after_sign = 0.0;
  return rows;
}

std::vector<MessageComparison> centroid_similarity(const Checkpoint& ckpt, const Graph& g,
                                                   const AnalysisOptions& opts) {
  const auto mask = mask_for(ckpt, opts);
  return centroid_similarity(extract_state(ckpt, g, opts), g,
                             opts.train_only_centroids ? &mask : nullptr);
}

ComparisonSummary summarize(const std::vector<MessageComparison>& rows) {
  ComparisonSummary s;
  std::size_t het_rel = 0, het_sign = 0, hom_rel = 0, hom_sign = 0;
  for (const auto& r : rows) {
    if (r.is_homophilic) {
      ++s.homophilic_edges;
      hom_rel += r.dist_after_rel < r.dist_before;
      hom_sign += r.dist_after_sign < r.dist_before;
    } else {
      ++s.heterophilic_edges;
      het_rel += r.dist_after_rel > r.dist_before;
      het_sign += r.dist_after_sign > r.dist_before;
    }
    s.mean_cos_rel += r.cos_rel;
    s.mean_cos_sign += r.cos_sign;
  }
  auto frac = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  s.het_farther_rel = frac(het_rel, s.heterophilic_edges);
  s.het_farther_sign = frac(het_sign, s.heterophilic_edges);
  s.hom_closer_rel = frac(hom_rel, s.homophilic_edges);
  s.hom_closer_sign = frac(hom_sign, s.homophilic_edges);
  if (!rows.empty()) {
    s.mean_cos_rel /= static_cast<double>(rows.size());
    s.mean_cos_sign /= static_cast<double>(rows.size());
  }
  return s;
}

void write_comparisons_csv(const std::vector<MessageComparison>& rows,
                           const std::filesystem::path& file) {
  auto out = open_out(file);
  out << "edge,src,dst,is_homophilic,dist_before,dist_after_rel,dist_after_sign,cos_rel,cos_sign,"
         "zero_rel,zero_sign\n";
  for (const auto& r : rows)
    out << r.edge << ',' << r.src << ',' << r.dst << ',' << r.is_homophilic << ',' << r.dist_before
        << ',' << r.dist_after_rel << ',' << r.dist_after_sign << ',' << r.cos_rel << ','
        << r.cos_sign << ',' << r.zero_rel << ',' << r.zero_sign << '\n';
  if (!out) throw DataError("failed writing " + file.string());
}

ExportedFiles export_embeddings(const Checkpoint& ckpt, const Graph& g,
                                const std::filesystem::path& out) {
  ckpt.check_compatible(g);
  ad::Tape tape;
  BoundParams bound(tape, ckpt.params, false);
  const auto edges = decoder::EdgeIndex::from_graph(g);
  ForwardInputs in;
  in.mode = decoder::Mode::infer;
  const ModelForward fwd = model_forward(bound, ckpt.config, g, edges, ckpt.split.train, in);
  const Tensor& h = fwd.decoder.h.back().value();

  ExportedFiles files{out, out.parent_path() / (out.stem().string() + "_relations.csv")};
  {
    auto f = open_out(files.embeddings);
    f << "id,label";
    for (std::size_t k = 0; k < h.cols(); ++k) f << ",d" << k;
    f << '\n';
    for (std::size_t i = 0; i < h.rows(); ++i) {
      f << i << ',' << g.label(i);
      for (std::size_t k = 0; k < h.cols(); ++k) f << ',' << h.at(i, k);
      f << '\n';
    }
    if (!f) throw DataError("failed writing " + files.embeddings.string());
  }
  {
    auto f = open_out(files.relations);
    const Tensor z = fwd.relation ? fwd.relation->mu.value()
                                  : Tensor({g.num_edges(), ckpt.config.encoder.hidden_dim});
    f << "edge,src,dst";
    for (std::size_t k = 0; k < z.cols(); ++k) f << ",r" << k;
    f << '\n';
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      f << e << ',' << g.edge_src()[e] << ',' << g.edge_dst()[e];
      for (std::size_t k = 0; k < z.cols(); ++k) f << ',' << z.at(e, k);
      f << '\n';
    }
    if (!f) throw DataError("failed writing " + files.relations.string());
  }
  return files;
}

EmbeddingTable read_embeddings(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("missing file: " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(file.string() + ": empty file");
  const std::size_t dims = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) - 1;
  EmbeddingTable t;
  std::vector<double> values;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != dims + 2)
      throw DataError(file.string() + ":" + std::to_string(lineno) + ": ragged row");
    try {
      t.ids.push_back(std::stoull(cells[0]));
      t.labels.push_back(std::stoi(cells[1]));
      for (std::size_t k = 0; k < dims; ++k) values.push_back(std::stod(cells[k + 2]));
    } catch (const std::logic_error&) {
      throw DataError(file.string() + ":" + std::to_string(lineno) + ": non-numeric token");
    }
  }
  t.values = Tensor::matrix(t.ids.size(), dims, std::move(values));
  return t;
}

BenchmarkRow time_epochs(const Graph& g, const ExperimentConfig& cfg, std::size_t warmup,
                         std::size_t measured) {
  if (measured == 0) throw ConfigError("benchmark needs at least one measured epoch");
  const SplitMask split = make_split(g, cfg.train.seed);
  TrainingSession session(g, split, cfg);
  for (std::size_t k = 0; k < warmup; ++k) session.step();

  std::vector<double> ms;
  decoder::EdgeVisitCounter counter;
  for (std::size_t k = 0; k < measured; ++k) {
    counter.visits = 0;
    const auto t0 = std::chrono::steady_clock::now();
    session.step(&counter);
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  BenchmarkRow row;
  row.nodes = g.num_nodes();
  row.edges = g.num_edges();
  row.layers = cfg.decoder.num_layers;
  row.edge_visits_per_epoch = counter.visits;
  double sum = 0.0;
  for (double v : ms) sum += v;
  row.ms_per_epoch = sum / static_cast<double>(ms.size());
  double sq = 0.0;
  for (double v : ms) sq += (v - row.ms_per_epoch) * (v - row.ms_per_epoch);
  row.cv = ms.size() > 1 ? std::sqrt(sq / static_cast<double>(ms.size() - 1)) / row.ms_per_epoch : 0.0;
  std::sort(ms.begin(), ms.end());
  const std::size_t mid = ms.size() / 2;
  row.median_ms = ms.size() % 2 ? ms[mid] : 0.5 * (ms[mid - 1] + ms[mid]);
  return row;
}

BenchmarkTable scaling_benchmark(const std::vector<BenchmarkCase>& cases,
                                 const BenchmarkOptions& opts) {
  BenchmarkTable table;
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const BenchmarkCase& c = cases[k];
    SynthOptions so;
    so.avg_degree = c.avg_degree;
    so.tolerance = 1.0;  // speed only, homophily is irrelevant here
    const Graph g = synth_graph(c.nodes, opts.classes, opts.homophily, opts.feat_dim,
                                derive_seed(opts.seed, "bench-" + std::to_string(k)), so);
    ExperimentConfig cfg = opts.base;
    cfg.decoder.num_layers = c.layers;
    cfg.train.seed = opts.seed;
    const BenchmarkRow row = time_epochs(g, cfg, opts.warmup_epochs, opts.measured_epochs);
    xs.push_back(static_cast<double>(row.edges));
    ys.push_back(row.ms_per_epoch);
    table.rows.push_back(row);
  }
  if (xs.size() >= 2) {
    const LinearFit fit = least_squares(xs, ys);
    table.slope_ms_per_edge = fit.slope;
    table.intercept_ms = fit.intercept;
  }
  return table;
}

void write_benchmark_csv(const BenchmarkTable& table, const std::filesystem::path& file) {
  auto out = open_out(file);
  out << "nodes,edges,layers,ms_per_epoch,median_ms,cv,edge_visits_per_epoch\n";
  for (const auto& r : table.rows)
    out << r.nodes << ',' << r.edges << ',' << r.layers << ',' << r.ms_per_epoch << ','
        << r.median_ms << ',' << r.cv << ',' << r.edge_visits_per_epoch << '\n';
  if (!out) throw DataError("failed writing " + file.string());
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ShapeError("least squares needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  if (sxx == 0.0) throw ShapeError("least squares: all x values are equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace vrgnn::analysis
