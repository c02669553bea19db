#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vrgnn/config.hpp"
#include "vrgnn/graph.hpp"
#include "vrgnn/tensor.hpp"
#include "vrgnn/trainer.hpp"

namespace vrgnn::analysis {

/// W h_j + z_ji, the message a relation vector produces.
std::vector<double> relation_message(std::span<const double> h_j, std::span<const double> z_ji,
                                     const Tensor& weight);

/// +W h_j for a same-class edge, -W h_j otherwise.
std::vector<double> signed_message(std::span<const double> h_j, const Tensor& weight,
                                   bool same_class);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Cosine similarity; 0 when either vector is zero, with *zero set.
double cosine_similarity(std::span<const double> a, std::span<const double> b,
                         bool* zero = nullptr);

/// Frozen decoder state the diagnostics read.
struct MessageState {
  Tensor h;          // [N x H] input of the message layer
  Tensor z;          // [E x H] relation vectors used by the message layer
  Tensor weight;     // [H x H] message transform of that layer
  Tensor h_centroid; // [N x H] embeddings the class centroids are built from
};

struct AnalysisOptions {
  /// Defaults to L-1.
  std::optional<std::size_t> message_layer;
  /// Defaults to L.
  std::optional<std::size_t> centroid_layer;
  /// Build centroids from training nodes only instead of all labeled nodes.
  bool train_only_centroids = false;
};

/// Runs an inference forward pass and pulls out the tensors named in `opts`.
MessageState extract_state(const Checkpoint& ckpt, const Graph& g, const AnalysisOptions& opts = {});

struct MessageComparison {
  std::size_t edge = 0;
  std::size_t src = 0;  // j
  std::size_t dst = 0;  // i
  bool is_homophilic = false;
  double dist_before = 0.0;
  double dist_after_rel = 0.0;
  double dist_after_sign = 0.0;
  double cos_rel = 0.0;
  double cos_sign = 0.0;
  bool zero_rel = false;
  bool zero_sign = false;
};

struct ClassCentroid {
  int label = 0;
  std::size_t count = 0;
  std::vector<double> mean;
};

/// One centroid per class that has at least one node in `mask` (all
/// labeled nodes when mask is null).
std::vector<ClassCentroid> class_centroids(const Tensor& h, const Graph& g,
                                           const std::vector<bool>* mask = nullptr);

/// For each edge j->i with both endpoints labeled: distances from h_j to h_i,
/// to h_i + m_rel and to h_i + m_sign. Cosine fields are left at 0.
std::vector<MessageComparison> distance_shift(const MessageState& state, const Graph& g);
std::vector<MessageComparison> distance_shift(const Checkpoint& ckpt, const Graph& g,
                                              const AnalysisOptions& opts = {});

/// Cosine of m_rel and m_sign against the class centroid of the destination.
/// Distance fields are left at 0.
std::vector<MessageComparison> centroid_similarity(const MessageState& state, const Graph& g,
                                                   const std::vector<bool>* centroid_mask = nullptr);
std::vector<MessageComparison> centroid_similarity(const Checkpoint& ckpt, const Graph& g,
                                                   const AnalysisOptions& opts = {});

/// Both diagnostics in one row per labeled edge.
std::vector<MessageComparison> compare_messages(const MessageState& state, const Graph& g,
                                                const std::vector<bool>* centroid_mask = nullptr);
std::vector<MessageComparison> compare_messages(const Checkpoint& ckpt, const Graph& g,
                                                const AnalysisOptions& opts = {});

struct ComparisonSummary {
  std::size_t homophilic_edges = 0;
  std::size_t heterophilic_edges = 0;
  /// Fraction of heterophilic edges pushed apart by each message.
  double het_farther_rel = 0.0;
  double het_farther_sign = 0.0;
  /// Fraction of homophilic edges pulled together by each message.
  double hom_closer_rel = 0.0;
  double hom_closer_sign = 0.0;
  double mean_cos_rel = 0.0;
  double mean_cos_sign = 0.0;
};

ComparisonSummary summarize(const std::vector<MessageComparison>& rows);

/// Header: edge,src,dst,is_homophilic,dist_before,dist_after_rel,
/// dist_after_sign,cos_rel,cos_sign,zero_rel,zero_sign
void write_comparisons_csv(const std::vector<MessageComparison>& rows,
                           const std::filesystem::path& file);

struct ExportedFiles {
  std::filesystem::path embeddings;
  std::filesystem::path relations;
};

/// Writes `out` with header id,label,d0..d{H-1} (final-layer embeddings, one
/// row per node; unlabeled nodes get label -1) and, next to it,
/// <stem>_relations.csv with header edge,src,dst,r0..r{H-1} holding relation
/// means.
ExportedFiles export_embeddings(const Checkpoint& ckpt, const Graph& g,
                                const std::filesystem::path& out);

struct EmbeddingTable {
  std::vector<std::size_t> ids;
  std::vector<int> labels;
  Tensor values;
};

EmbeddingTable read_embeddings(const std::filesystem::path& file);

struct BenchmarkCase {
  std::size_t nodes = 1000;
  double avg_degree = 8.0;
  std::size_t layers = 2;
};

struct BenchmarkOptions {
  std::size_t warmup_epochs = 5;
  std::size_t measured_epochs = 20;
  std::size_t classes = 2;
  double homophily = 0.5;
  std::size_t feat_dim = 16;
  std::uint64_t seed = 0;
  ExperimentConfig base;
};

struct BenchmarkRow {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t layers = 0;
  double ms_per_epoch = 0.0;  // mean
  double median_ms = 0.0;
  double cv = 0.0;            // stddev / mean over measured epochs
  std::size_t edge_visits_per_epoch = 0;
};

struct BenchmarkTable {
  std::vector<BenchmarkRow> rows;
  /// Least-squares fit of ms_per_epoch against directed edge count.
  double slope_ms_per_edge = 0.0;
  double intercept_ms = 0.0;
};

/// Times training epochs (forward, backward, Adam update) on `g`.
BenchmarkRow time_epochs(const Graph& g, const ExperimentConfig& cfg, std::size_t warmup,
                         std::size_t measured);

BenchmarkTable scaling_benchmark(const std::vector<BenchmarkCase>& cases,
                                 const BenchmarkOptions& opts = {});

/// Header: nodes,edges,layers,ms_per_epoch,median_ms,cv,edge_visits_per_epoch
void write_benchmark_csv(const BenchmarkTable& table, const std::filesystem::path& file);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace vrgnn::analysis
