#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vrgnn/tensor.hpp"

namespace vrgnn {

inline constexpr int kUnknownLabel = -1;

struct DirectedEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  friend bool operator==(const DirectedEdge&, const DirectedEdge&) = default;
};

/// Node-classification graph. Immutable once built.
///
/// Directed edges are deduplicated and stored sorted by (dst, src), so all
/// edges entering a node form one contiguous run. An edge's id is its
/// position in that order; per-edge parameters are indexed by it.
class Graph {
 public:
  /// Builds from directed edges. Every (i,j) must have its reverse (j,i).
  Graph(std::size_t num_nodes, std::vector<DirectedEdge> edges, Tensor features,
        std::vector<int> labels, std::size_t num_classes, std::string name = {});

  /// Builds from undirected pairs; each pair becomes i->j and j->i.
  static Graph from_undirected(std::size_t num_nodes,
                               const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                               Tensor features, std::vector<int> labels,
                               std::size_t num_classes, std::string name = {});

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return src_.size(); }
  std::size_t num_features() const { return features_.cols(); }
  std::size_t num_classes() const { return num_classes_; }
  const std::string& name() const { return name_; }

  const std::vector<std::size_t>& edge_src() const { return src_; }
  const std::vector<std::size_t>& edge_dst() const { return dst_; }
  DirectedEdge edge(std::size_t e) const { return {src_[e], dst_[e]}; }
  /// Undirected pairs (i <= j), each listed once.
  std::vector<std::pair<std::size_t, std::size_t>> undirected_pairs() const;
  std::size_t num_undirected_edges() const;
  std::size_t in_degree(std::size_t node) const;

  const Tensor& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  int label(std::size_t node) const { return labels_[node]; }
  bool is_labeled(std::size_t node) const { return labels_[node] != kUnknownLabel; }
  std::size_t num_labeled() const;

  /// Same topology and features with a different label vector.
  Graph with_labels(std::vector<int> labels) const;

 private:
  std::size_t num_nodes_;
  std::vector<std::size_t> src_;
  std::vector<std::size_t> dst_;
  std::vector<std::size_t> in_offsets_;
  Tensor features_;
  std::vector<int> labels_;
  std::size_t num_classes_;
  std::string name_;
};

struct SplitMask {
  std::vector<bool> train;
  std::vector<bool> valid;
  std::vector<bool> test;
  std::uint64_t seed = 0;

  static std::size_t count(const std::vector<bool>& mask);
};

struct GraphSummary {
  std::string name;
  std::size_t num_nodes = 0;
  std::size_t num_directed_edges = 0;
  std::size_t num_undirected_edges = 0;
  std::size_t num_features = 0;
  std::size_t num_classes = 0;
  std::vector<std::size_t> class_counts;
  std::size_t num_unlabeled = 0;
  /// Absent when undefined (no edges or unlabeled nodes).
  std::optional<double> homophily_ratio;
};

/// Reads edges.tsv, features.csv, labels.csv and optional meta.json.
Graph load_graph(const std::filesystem::path& dir);
/// Writes the canonical dataset layout. load_graph(save_graph(g)) == g.
void save_graph(const Graph& g, const std::filesystem::path& dir);

/// Mean over non-isolated nodes of the fraction of in-neighbours sharing the
/// node's class. Throws if the graph has no edges or any node is unlabeled.
double homophily_ratio(const Graph& g);

/// Random 60/20/20 split of the labeled nodes. Valid and test sizes are
/// floor(0.2 n); the remainder goes to train.
SplitMask make_split(const Graph& g, std::uint64_t seed);

GraphSummary summarize(const Graph& g);

struct SynthOptions {
  double avg_degree = 4.0;
  /// Accepted deviation of the measured homophily from the target.
  double tolerance = 0.05;
  int max_retries = 25;
};

/// Random labeled graph with controlled homophily. Labels are balanced,
/// features are unit-variance Gaussians whose class-c mean is (c, 0, ..., 0).
Graph synth_graph(std::size_t n, std::size_t m_classes, double target_h,
                  std::size_t feat_dim, std::uint64_t seed, const SynthOptions& options = {});

}  // namespace vrgnn
