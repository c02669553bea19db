#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrgnn/adam.hpp"
#include "vrgnn/config.hpp"
#include "vrgnn/decoder.hpp"
#include "vrgnn/graph.hpp"
#include "vrgnn/params.hpp"
#include "vrgnn/rng.hpp"

namespace vrgnn {

struct EpochRecord {
  std::size_t epoch = 0;
  double encoder_loss = 0.0;
  double decoder_loss = 0.0;
  double total_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
  /// Test accuracy of the restored best-validation parameters.
  double test_acc = 0.0;
  double train_acc = 0.0;
  std::size_t epochs_run = 0;
  bool early_stopped = false;
  /// Not serialized: reports must be byte-identical across reruns.
  double wall_seconds = 0.0;
};

/// Trained parameters plus what is needed to reproduce inference.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  ExperimentConfig config;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  SplitMask split;
  std::size_t num_nodes = 0;
  std::size_t num_edges = 0;
  std::size_t num_features = 0;
  std::size_t num_classes = 0;
  ParamStore params;
  /// Dataset directory given at training time; lets eval/analyze default to it.
  std::string data_dir;

  /// Throws DataError when `g` does not match the graph trained on.
  void check_compatible(const Graph& g) const;
};

struct TrainResult {
  TrainReport report;
  Checkpoint checkpoint;
};

struct StepLosses {
  double encoder_loss = 0.0;
  double decoder_loss = 0.0;
  double total_loss = 0.0;
};

/// Optimizer state for one run: parameters, Adam moments and the seeded
/// noise/dropout streams. step() runs one forward, backward and update.
class TrainingSession {
 public:
  TrainingSession(const Graph& g, const SplitMask& split, const ExperimentConfig& cfg);

  StepLosses step(decoder::EdgeVisitCounter* counter = nullptr);

  const ParamStore& params() const { return params_; }
  Tensor infer_logits() const;

 private:
  const Graph* graph_;
  const SplitMask* split_;
  ExperimentConfig cfg_;
  ParamStore params_;
  AdamState adam_;
  Rng noise_rng_;
  Rng dropout_rng_;
  decoder::EdgeIndex edges_;
  std::size_t steps_ = 0;
};

/// Full-graph training with early stopping on validation accuracy. The
/// earliest epoch reaching the best accuracy wins; training stops once
/// `patience` epochs pass without improvement, and the best epoch's
/// parameters are restored.
TrainResult train(const Graph& g, const SplitMask& split, const ExperimentConfig& cfg);

/// Fraction of masked nodes whose argmax logit equals the label, using the
/// mean relation vectors and no dropout.
double evaluate(const Checkpoint& ckpt, const Graph& g, const std::vector<bool>& mask);

/// Accuracy of argmax(logits) against labels over `mask`.
double accuracy(const Tensor& logits, const std::vector<int>& labels, const std::vector<bool>& mask);

struct RunOutcome {
  std::uint64_t seed = 0;
  double test_acc = 0.0;
  double best_val_acc = 0.0;
  std::size_t best_epoch = 0;
};

struct MultiRunSummary {
  std::vector<RunOutcome> runs;
  double mean = 0.0;
  double stddev = 0.0;
  /// 1.96 * stddev / sqrt(n), sample stddev.
  double ci95 = 0.0;
};

MultiRunSummary summarize_runs(std::vector<RunOutcome> runs);

/// Runs `n_runs` trainings with seeds base_seed + k. Each run draws its own
/// split unless cfg.train.fix_splits is set.
MultiRunSummary multi_run(const Graph& g, const ExperimentConfig& cfg, std::size_t n_runs,
                          std::uint64_t base_seed);

nlohmann::json report_to_json(const TrainReport& r);
std::string report_curve_csv(const TrainReport& r);
nlohmann::json summary_to_json(const MultiRunSummary& s);

nlohmann::json checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& file);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace vrgnn
