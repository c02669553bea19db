#include "vrgnn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "vrgnn/error.hpp"
#include "vrgnn/rng.hpp"

namespace vrgnn {

namespace fs = std::filesystem;

Graph::Graph(std::size_t num_nodes, std::vector<DirectedEdge> edges, Tensor features,
             std::vector<int> labels, std::size_t num_classes, std::string name)
    : num_nodes_(num_nodes),
      features_(std::move(features)),
      labels_(std::move(labels)),
      num_classes_(num_classes),
      name_(std::move(name)) {
  if (features_.rank() != 2 || features_.rows() != num_nodes_)
    throw DataError("feature matrix has " + std::to_string(features_.rows()) +
                    " rows, expected " + std::to_string(num_nodes_));
  if (!features_.all_finite()) throw DataError("feature matrix contains NaN or Inf");
  if (labels_.size() != num_nodes_)
    throw DataError("label vector has " + std::to_string(labels_.size()) +
                    " entries, expected " + std::to_string(num_nodes_));
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const int y = labels_[i];
    if (y == kUnknownLabel) continue;
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes_)
      throw DataError("label out of range: node " + std::to_string(i) + " has class " +
                      std::to_string(y) + " with " + std::to_string(num_classes_) +
                      " classes");
  }
  for (const auto& e : edges) {
    if (e.src >= num_nodes_ || e.dst >= num_nodes_)
      throw DataError("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                      ") references a node outside 0.." + std::to_string(num_nodes_ - 1));
  }
  std::sort(edges.begin(), edges.end(), [](const DirectedEdge& a, const DirectedEdge& b) {
    return a.dst != b.dst ? a.dst < b.dst : a.src < b.src;
  });
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  src_.reserve(edges.size());
  dst_.reserve(edges.size());
  for (const auto& e : edges) {
    src_.push_back(e.src);
    dst_.push_back(e.dst);
  }
  in_offsets_.assign(num_nodes_ + 1, 0);
  for (std::size_t d : dst_) ++in_offsets_[d + 1];
  std::partial_sum(in_offsets_.begin(), in_offsets_.end(), in_offsets_.begin());

  for (std::size_t e = 0; e < src_.size(); ++e) {
    const std::size_t a = src_[e], b = dst_[e];
    // Reverse edge b->a lives in the in-run of a.
    const auto first = src_.begin() + static_cast<std::ptrdiff_t>(in_offsets_[a]);
    const auto last = src_.begin() + static_cast<std::ptrdiff_t>(in_offsets_[a + 1]);
    if (!std::binary_search(first, last, b))
      throw DataError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                      ") has no reverse edge");
  }
}

Graph Graph::from_undirected(std::size_t num_nodes,
                             const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                             Tensor features, std::vector<int> labels,
                             std::size_t num_classes, std::string name) {
  std::vector<DirectedEdge> edges;
  edges.reserve(2 * pairs.size());
  for (auto [a, b] : pairs) {
    edges.push_back({a, b});
    if (a != b) edges.push_back({b, a});
  }
  return Graph(num_nodes, std::move(edges), std::move(features), std::move(labels),
               num_classes, std::move(name));
}

std::vector<std::pair<std::size_t, std::size_t>> Graph::undirected_pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t e = 0; e < src_.size(); ++e)
    if (src_[e] <= dst_[e]) out.emplace_back(src_[e], dst_[e]);
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t Graph::num_undirected_edges() const {
  std::size_t n = 0;
  for (std::size_t e = 0; e < src_.size(); ++e)
    if (src_[e] <= dst_[e]) ++n;
  return n;
}

std::size_t Graph::in_degree(std::size_t node) const {
  return in_offsets_[node + 1] - in_offsets_[node];
}

std::size_t Graph::num_labeled() const {
  return static_cast<std::size_t>(
      std::count_if(labels_.begin(), labels_.end(), [](int y) { return y != kUnknownLabel; }));
}

Graph Graph::with_labels(std::vector<int> labels) const {
  std::vector<DirectedEdge> edges;
  edges.reserve(src_.size());
  for (std::size_t e = 0; e < src_.size(); ++e) edges.push_back({src_[e], dst_[e]});
  return Graph(num_nodes_, std::move(edges), features_, std::move(labels), num_classes_, name_);
}

std::size_t SplitMask::count(const std::vector<bool>& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

// ---------------------------------------------------------------------------
// Loading

namespace {

std::string where(const fs::path& file, std::size_t line) {
  return file.filename().string() + ":" + std::to_string(line);
}

std::vector<std::string> read_lines(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("missing file: " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  // Trailing blank lines are tolerated.
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view token, const fs::path& file, std::size_t line) {
  token = trim(token);
  T value{};
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (token.empty() || ec != std::errc() || ptr != end)
    throw DataError(where(file, line) + ": non-numeric token '" + std::string(token) + "'");
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

Graph load_graph(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("data directory not found: " + dir.string());
  const fs::path edges_file = dir / "edges.tsv";
  const fs::path features_file = dir / "features.csv";
  const fs::path labels_file = dir / "labels.csv";
  const fs::path meta_file = dir / "meta.json";

  const auto feature_lines = read_lines(features_file);
  const std::size_t n = feature_lines.size();
  if (n == 0) throw DataError(features_file.string() + ": no feature rows");
  std::size_t f = 0;
  std::vector<double> features;
  for (std::size_t r = 0; r < n; ++r) {
    const auto tokens = split(feature_lines[r], ',');
    if (r == 0) {
      f = tokens.size();
      features.reserve(n * f);
    } else if (tokens.size() != f) {
      throw DataError(where(features_file, r + 1) + ": ragged feature row with " +
                      std::to_string(tokens.size()) + " columns, expected " +
                      std::to_string(f));
    }
    for (auto tok : tokens) {
      const double v = parse_number<double>(tok, features_file, r + 1);
      if (!std::isfinite(v))
        throw DataError(where(features_file, r + 1) + ": non-finite feature value");
      features.push_back(v);
    }
  }

  const auto label_lines = read_lines(labels_file);
  if (label_lines.size() != n)
    throw DataError(labels_file.string() + ": " + std::to_string(label_lines.size()) +
                    " labels for " + std::to_string(n) + " nodes");
  std::vector<int> labels(n);
  int max_label = -1;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = parse_number<int>(label_lines[i], labels_file, i + 1);
    if (y < kUnknownLabel)
      throw DataError(where(labels_file, i + 1) + ": label out of range (" +
                      std::to_string(y) + ")");
    labels[i] = y;
    max_label = std::max(max_label, y);
  }

  std::size_t num_classes = static_cast<std::size_t>(max_label + 1);
  std::string name = dir.filename().string();
  if (fs::exists(meta_file)) {
    std::ifstream in(meta_file);
    nlohmann::json meta;
    try {
      in >> meta;
    } catch (const nlohmann::json::exception& ex) {
      throw DataError(meta_file.string() + ": " + ex.what());
    }
    if (meta.contains("num_classes")) num_classes = meta.at("num_classes").get<std::size_t>();
    if (meta.contains("name")) name = meta.at("name").get<std::string>();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != kUnknownLabel && static_cast<std::size_t>(labels[i]) >= num_classes)
      throw DataError(where(labels_file, i + 1) + ": label out of range (" +
                      std::to_string(labels[i]) + " with " + std::to_string(num_classes) +
                      " classes)");
  }

  const auto edge_lines = read_lines(edges_file);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(edge_lines.size());
  for (std::size_t l = 0; l < edge_lines.size(); ++l) {
    if (trim(edge_lines[l]).empty()) continue;
    const auto tokens = split(edge_lines[l], '\t');
    if (tokens.size() != 2)
      throw DataError(where(edges_file, l + 1) + ": expected two tab-separated node ids");
    const auto a = parse_number<std::size_t>(tokens[0], edges_file, l + 1);
    const auto b = parse_number<std::size_t>(tokens[1], edges_file, l + 1);
    if (a >= n || b >= n)
      throw DataError(where(edges_file, l + 1) + ": index out of range (" +
                      std::to_string(std::max(a, b)) + " >= " + std::to_string(n) + ")");
    pairs.emplace_back(a, b);
  }

  return Graph::from_undirected(n, pairs, Tensor::matrix(n, f, std::move(features)),
                                std::move(labels), num_classes, std::move(name));
}

void save_graph(const Graph& g, const fs::path& dir) {
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("edges.tsv");
    for (auto [a, b] : g.undirected_pairs()) out << a << '\t' << b << '\n';
  }
  {
    auto out = open("features.csv");
    out << std::setprecision(17);
    const Tensor& x = g.features();
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) {
        if (c) out << ',';
        out << x.at(r, c);
      }
      out << '\n';
    }
  }
  {
    auto out = open("labels.csv");
    for (int y : g.labels()) out << y << '\n';
  }
  {
    auto out = open("meta.json");
    nlohmann::json meta = {{"num_classes", g.num_classes()}, {"name", g.name()}};
    out << meta.dump(2) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Statistics and splits

double homophily_ratio(const Graph& g) {
  if (g.num_edges() == 0) throw DataError("undefined homophily: graph has no edges");
  if (g.num_labeled() != g.num_nodes())
    throw DataError("undefined homophily: graph has unlabeled nodes");
  std::vector<std::size_t> same(g.num_nodes(), 0), total(g.num_nodes(), 0);
  const auto& src = g.edge_src();
  const auto& dst = g.edge_dst();
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    ++total[dst[e]];
    if (g.label(src[e]) == g.label(dst[e])) ++same[dst[e]];
  }
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    if (total[i] == 0) continue;
    sum += static_cast<double>(same[i]) / static_cast<double>(total[i]);
    ++counted;
  }
  return sum / static_cast<double>(counted);
}

SplitMask make_split(const Graph& g, std::uint64_t seed) {
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < g.num_nodes(); ++i)
    if (g.is_labeled(i)) labeled.push_back(i);
  if (labeled.size() < 5)
    throw DataError("split needs at least 5 labeled nodes, got " +
                    std::to_string(labeled.size()));

  SplitMix64 rng(seed);
  for (std::size_t i = labeled.size() - 1; i > 0; --i) {
    const std::size_t j = rng.below(i + 1);
    std::swap(labeled[i], labeled[j]);
  }
  const std::size_t n = labeled.size();
  const std::size_t n_valid = n / 5;
  const std::size_t n_test = n / 5;
  const std::size_t n_train = n - n_valid - n_test;

  SplitMask split;
  split.seed = seed;
  split.train.assign(g.num_nodes(), false);
  split.valid.assign(g.num_nodes(), false);
  split.test.assign(g.num_nodes(), false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t node = labeled[k];
    if (k < n_train)
      split.train[node] = true;
    else if (k < n_train + n_valid)
      split.valid[node] = true;
    else
      split.test[node] = true;
  }
  return split;
}

GraphSummary summarize(const Graph& g) {
  GraphSummary s;
  s.name = g.name();
  s.num_nodes = g.num_nodes();
  s.num_directed_edges = g.num_edges();
  s.num_undirected_edges = g.num_undirected_edges();
  s.num_features = g.num_features();
  s.num_classes = g.num_classes();
  s.class_counts.assign(g.num_classes(), 0);
  for (int y : g.labels()) {
    if (y == kUnknownLabel)
      ++s.num_unlabeled;
    else
      ++s.class_counts[static_cast<std::size_t>(y)];
  }
  if (g.num_edges() > 0 && s.num_unlabeled == 0) s.homophily_ratio = homophily_ratio(g);
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic graphs

namespace {

struct PairSet {
  std::size_t n;
  std::unordered_set<std::uint64_t> keys;
  bool insert(std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    return keys.insert(static_cast<std::uint64_t>(a) * n + b).second;
  }
};

std::optional<Graph> synth_attempt(std::size_t n, std::size_t m, double target_h,
                                   std::size_t feat_dim, std::uint64_t seed,
                                   const SynthOptions& opt) {
  Rng rng(seed);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % m);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(labels[i], labels[rng.below(i + 1)]);

  std::vector<std::vector<std::size_t>> members(m);
  for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(labels[i])].push_back(i);

  auto pick_partner = [&](std::size_t u, bool intra) -> std::optional<std::size_t> {
    const auto cu = static_cast<std::size_t>(labels[u]);
    if (intra) {
      const auto& pool = members[cu];
      if (pool.size() < 2) return std::nullopt;
      std::size_t v = u;
      while (v == u) v = pool[rng.below(pool.size())];
      return v;
    }
    if (m < 2) return std::nullopt;
    std::size_t c = rng.below(m - 1);
    if (c >= cu) ++c;
    const auto& pool = members[c];
    return pool[rng.below(pool.size())];
  };

  PairSet seen{n, {}};
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> degree(n, 0);
  auto try_add = [&](std::size_t u) {
    const bool intra = rng.uniform() < target_h;
    auto v = pick_partner(u, intra);
    if (!v || !seen.insert(u, *v)) return false;
    pairs.emplace_back(std::min(u, *v), std::max(u, *v));
    ++degree[u];
    ++degree[*v];
    return true;
  };

  const auto target_edges = static_cast<std::size_t>(
      std::llround(opt.avg_degree * static_cast<double>(n) / 2.0));
  // Every node gets at least one edge so none is isolated.
  for (std::size_t u = 0; u < n; ++u) {
    for (int tries = 0; degree[u] == 0 && tries < 64; ++tries) try_add(u);
  }
  std::size_t stalls = 0;
  while (pairs.size() < target_edges && stalls < 100 * target_edges + 1000) {
    if (!try_add(rng.below(n))) ++stalls;
  }

  std::vector<double> feats(n * feat_dim);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < feat_dim; ++d)
      feats[i * feat_dim + d] = rng.normal() + (d == 0 ? static_cast<double>(labels[i]) : 0.0);

  Graph g = Graph::from_undirected(n, pairs, Tensor::matrix(n, feat_dim, std::move(feats)),
                                   std::move(labels), m, "synth");
  if (g.num_edges() == 0) return std::nullopt;
  if (std::abs(homophily_ratio(g) - target_h) > opt.tolerance) return std::nullopt;
  return g;
}

}  // namespace

Graph synth_graph(std::size_t n, std::size_t m_classes, double target_h, std::size_t feat_dim,
                  std::uint64_t seed, const SynthOptions& options) {
  if (m_classes == 0 || n < 2 * m_classes)
    throw ConfigError("synth_graph needs n >= 2 * classes (n=" + std::to_string(n) +
                      ", classes=" + std::to_string(m_classes) + ")");
  if (!(target_h >= 0.0 && target_h <= 1.0))
    throw ConfigError("target homophily must lie in [0, 1]");
  if (feat_dim == 0) throw ConfigError("synth_graph needs feat_dim >= 1");
  for (int attempt = 0; attempt < options.max_retries; ++attempt) {
    const std::uint64_t s =
        attempt == 0 ? seed : derive_seed(seed, "synth-retry-" + std::to_string(attempt));
    if (auto g = synth_attempt(n, m_classes, target_h, feat_dim, s, options)) return *g;
  }
  throw DataError("infeasible homophily target " + std::to_string(target_h) + " for n=" +
                  std::to_string(n) + ", classes=" + std::to_string(m_classes) + " after " +
                  std::to_string(options.max_retries) + " attempts");
}

}  // namespace vrgnn
