#include "vrgnn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "vrgnn/error.hpp"
#include "vrgnn/model.hpp"

namespace vrgnn {

double accuracy(const Tensor& logits, const std::vector<int>& labels, const std::vector<bool>& mask) {
  if (logits.rows() != labels.size() || mask.size() != labels.size())
    throw ShapeError("accuracy: logits/labels/mask sizes differ");
  std::size_t hit = 0, total = 0;
  const std::size_t m = logits.cols();
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (!mask[r]) continue;
    if (labels[r] < 0) throw DataError("accuracy: masked node " + std::to_string(r) + " is unlabeled");
    std::size_t best = 0;
    for (std::size_t c = 1; c < m; ++c)
      if (logits.at(r, c) > logits.at(r, best)) best = c;
    hit += best == static_cast<std::size_t>(labels[r]);
    ++total;
  }
  if (total == 0) throw DataError("accuracy: empty mask");
  return static_cast<double>(hit) / static_cast<double>(total);
}

void Checkpoint::check_compatible(const Graph& g) const {
  if (g.num_nodes() != num_nodes || g.num_edges() != num_edges ||
      g.num_features() != num_features || g.num_classes() != num_classes)
    throw DataError("checkpoint was trained on a graph with " + std::to_string(num_nodes) +
                    " nodes, " + std::to_string(num_edges) + " directed edges, " +
                    std::to_string(num_features) + " features, " + std::to_string(num_classes) +
                    " classes; got " + std::to_string(g.num_nodes()) + "/" +
                    std::to_string(g.num_edges()) + "/" + std::to_string(g.num_features()) + "/" +
                    std::to_string(g.num_classes()));
}

TrainingSession::TrainingSession(const Graph& g, const SplitMask& split,
                                 const ExperimentConfig& cfg)
    : graph_(&g),
      split_(&split),
      cfg_(cfg),
      params_(init_model(g, cfg, derive_seed(cfg.train.seed, "init"))),
      adam_(params_, {cfg.train.lr, 0.9, 0.999, 1e-8, cfg.train.weight_decay}),
      noise_rng_(derive_seed(cfg.train.seed, "epoch-noise")),
      dropout_rng_(derive_seed(cfg.train.seed, "dropout")),
      edges_(decoder::EdgeIndex::from_graph(g)) {
  if (split.train.size() != g.num_nodes() || split.valid.size() != g.num_nodes() ||
      split.test.size() != g.num_nodes())
    throw ShapeError("split masks do not match the node count");
}

StepLosses TrainingSession::step(decoder::EdgeVisitCounter* counter) {
  ++steps_;
  ad::Tape tape;
  BoundParams bound(tape, params_, true);
  ForwardInputs in;
  in.mode = decoder::Mode::train;
  in.noise_rng = &noise_rng_;
  in.dropout_rng = &dropout_rng_;
  in.counter = counter;
  ModelForward fwd = model_forward(bound, cfg_, *graph_, edges_, split_->train, in);
  ad::Var ce = ad::masked_cross_entropy(fwd.logits, graph_->labels(), split_->train);
  ad::Var loss = total_loss(fwd.encoder_loss, ce, cfg_.train.gamma);
  StepLosses out{fwd.encoder_loss.value().item(), ce.value().item(), loss.value().item()};
  if (!std::isfinite(out.total_loss))
    throw NumericError("training diverged at epoch " + std::to_string(steps_) +
                       ": total loss is " + std::to_string(out.total_loss) +
                       " (kl=" + std::to_string(out.encoder_loss) +
                       ", ce=" + std::to_string(out.decoder_loss) + ")");
  if (out.encoder_loss < 0.0 || out.decoder_loss < 0.0)
    throw NumericError("negative KL or cross-entropy at epoch " + std::to_string(steps_));
  tape.backward(loss);
  adam_step(params_, bound.gradients(), adam_);
  return out;
}

Tensor TrainingSession::infer_logits() const {
  return vrgnn::infer_logits(params_, cfg_, *graph_, split_->train);
}

TrainResult train(const Graph& g, const SplitMask& split, const ExperimentConfig& cfg) {
  cfg.validate();
  if (SplitMask::count(split.valid) == 0) throw DataError("validation mask is empty");
  const auto start = std::chrono::steady_clock::now();
  TrainingSession session(g, split, cfg);
  const bool has_test = SplitMask::count(split.test) > 0;

  TrainReport report;
  ParamStore best = session.params();
  double best_val = -1.0;
  std::size_t best_epoch = 0;

  for (std::size_t epoch = 1; epoch <= cfg.train.max_epochs; ++epoch) {
    const StepLosses losses = session.step();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.encoder_loss = losses.encoder_loss;
    rec.decoder_loss = losses.decoder_loss;
    rec.total_loss = losses.total_loss;

    const Tensor logits = session.infer_logits();
    rec.train_acc = accuracy(logits, g.labels(), split.train);
    rec.val_acc = accuracy(logits, g.labels(), split.valid);
    rec.test_acc = has_test ? accuracy(logits, g.labels(), split.test) : 0.0;
    report.epochs.push_back(rec);

    if (rec.val_acc > best_val) {
      best_val = rec.val_acc;
      best_epoch = epoch;
      best = session.params();
    } else if (epoch - best_epoch >= cfg.train.patience) {
      report.early_stopped = true;
      break;
    }
  }

  const EpochRecord& at_best = report.epochs[best_epoch - 1];
  report.best_epoch = best_epoch;
  report.best_val_acc = best_val;
  report.test_acc = at_best.test_acc;
  report.train_acc = at_best.train_acc;
  report.epochs_run = report.epochs.size();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.seed = cfg.train.seed;
  ckpt.epoch = best_epoch;
  ckpt.split = split;
  ckpt.num_nodes = g.num_nodes();
  ckpt.num_edges = g.num_edges();
  ckpt.num_features = g.num_features();
  ckpt.num_classes = g.num_classes();
  ckpt.params = std::move(best);
  return {std::move(report), std::move(ckpt)};
}

double evaluate(const Checkpoint& ckpt, const Graph& g, const std::vector<bool>& mask) {
  ckpt.check_compatible(g);
  const Tensor logits = infer_logits(ckpt.params, ckpt.config, g, ckpt.split.train);
  return accuracy(logits, g.labels(), mask);
}

MultiRunSummary summarize_runs(std::vector<RunOutcome> runs) {
  MultiRunSummary s;
  s.runs = std::move(runs);
  const double n = static_cast<double>(s.runs.size());
  if (s.runs.empty()) return s;
  double sum = 0.0;
  for (const auto& r : s.runs) sum += r.test_acc;
  s.mean = sum / n;
  if (s.runs.size() > 1) {
    double sq = 0.0;
    for (const auto& r : s.runs) sq += (r.test_acc - s.mean) * (r.test_acc - s.mean);
    s.stddev = std::sqrt(sq / (n - 1.0));
  }
  s.ci95 = 1.96 * s.stddev / std::sqrt(n);
  return s;
}

MultiRunSummary multi_run(const Graph& g, const ExperimentConfig& cfg, std::size_t n_runs,
                          std::uint64_t base_seed) {
  if (n_runs < 2) throw ConfigError("multi_run needs at least 2 runs");
  std::vector<RunOutcome> runs;
  for (std::size_t k = 0; k < n_runs; ++k) {
    const std::uint64_t run_seed = base_seed + k;
    ExperimentConfig run_cfg = cfg;
    run_cfg.train.seed = run_seed;
    const SplitMask split = make_split(g, cfg.train.fix_splits ? base_seed : run_seed);
    const TrainResult result = train(g, split, run_cfg);
    runs.push_back({run_seed, result.report.test_acc, result.report.best_val_acc,
                    result.report.best_epoch});
  }
  return summarize_runs(std::move(runs));
}

nlohmann::json report_to_json(const TrainReport& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"encoder_loss", e.encoder_loss},
                      {"decoder_loss", e.decoder_loss},
                      {"total_loss", e.total_loss},
                      {"train_acc", e.train_acc},
                      {"val_acc", e.val_acc},
                      {"test_acc", e.test_acc}});
  return {{"best_epoch", r.best_epoch},   {"best_val_acc", r.best_val_acc},
          {"test_acc", r.test_acc},       {"train_acc", r.train_acc},
          {"epochs_run", r.epochs_run},   {"early_stopped", r.early_stopped},
          {"epochs", std::move(epochs)}};
}

std::string report_curve_csv(const TrainReport& r) {
  std::ostringstream out;
  out << std::setprecision(12);
  out << "epoch,encoder_loss,decoder_loss,total_loss,train_acc,val_acc,test_acc\n";
  for (const auto& e : r.epochs)
    out << e.epoch << ',' << e.encoder_loss << ',' << e.decoder_loss << ',' << e.total_loss << ','
        << e.train_acc << ',' << e.val_acc << ',' << e.test_acc << '\n';
  return out.str();
}

nlohmann::json summary_to_json(const MultiRunSummary& s) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : s.runs)
    runs.push_back({{"seed", r.seed},
                    {"test_acc", r.test_acc},
                    {"best_val_acc", r.best_val_acc},
                    {"best_epoch", r.best_epoch}});
  return {{"mean", s.mean}, {"stddev", s.stddev}, {"ci95", s.ci95}, {"runs", std::move(runs)}};
}

}  // namespace vrgnn
