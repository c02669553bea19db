#include "vrgnn/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "vrgnn/analysis.hpp"
#include "vrgnn/error.hpp"
#include "vrgnn/trainer.hpp"

namespace vrgnn::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : Error {
  using Error::Error;
};

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  auto log = std::make_shared<spdlog::logger>("vrgnn", sink);
  log->set_pattern("[%l] %v");
  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv("VRGNN_LOG"); env && *env) {
    level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"
    if (level == spdlog::level::off && std::string(env) != "off") level = spdlog::level::info;
  }
  log->set_level(level);
  return log;
}

// Flags shared by the commands that build a config.
struct ConfigFlags {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "Flat JSON config file");
    cmd->add_option("--seed", seed, "Base seed for every random stream");
    cmd->add_option("--set", overrides, "Override a config key (key=value), repeatable");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg;
    if (!config_file.empty()) {
      if (!fs::exists(config_file)) throw UsageError("config file not found: " + config_file);
      cfg = load_config_file(config_file, cfg);
    }
    if (seed) cfg.train.seed = *seed;
    for (const auto& o : overrides) cfg = apply_override(cfg, o);
    cfg.validate();
    return cfg;
  }
};

Graph load_data(const std::string& dir) {
  if (dir.empty()) throw UsageError("--data is required");
  if (!fs::is_directory(dir)) throw UsageError("data directory not found: " + dir);
  return load_graph(dir);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write " + file.string());
  out << text;
  if (!out) throw DataError("failed writing " + file.string());
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string fmt_double(double v) {
  std::ostringstream o;
  o << std::setprecision(17) << v;
  return o.str();
}

std::vector<bool> mask_by_name(const Checkpoint& ckpt, const Graph& g, const std::string& name) {
  if (name == "test") return ckpt.split.test;
  if (name == "valid") return ckpt.split.valid;
  if (name == "train") return ckpt.split.train;
  if (name == "all") {
    std::vector<bool> m(g.num_nodes());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = g.is_labeled(i);
    return m;
  }
  throw UsageError("unknown mask '" + name + "' (train|valid|test|all)");
}

Checkpoint read_checkpoint(const std::string& path) {
  if (path.empty()) throw UsageError("--checkpoint is required");
  fs::path p(path);
  if (fs::is_directory(p)) p /= "checkpoint.json";
  if (!fs::exists(p)) throw UsageError("checkpoint not found: " + p.string());
  return load_checkpoint(p);
}

Graph data_for(const std::string& flag, const Checkpoint& ckpt) {
  return load_data(flag.empty() ? ckpt.data_dir : flag);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto log = make_logger(err);
  CLI::App app{"Variational relation vector GNN for node classification"};
  app.require_subcommand(1);

  ConfigFlags train_flags, sweep_flags, echo_flags, bench_flags;
  std::string data, out_dir, checkpoint, mask = "test", param, values;
  std::optional<std::size_t> runs;
  std::size_t synth_nodes = 200, synth_classes = 2, synth_feat = 16;
  double synth_h = 0.1, synth_degree = 4.0;
  std::uint64_t synth_seed = 0;
  analysis::AnalysisOptions aopts;
  std::optional<std::size_t> message_layer, centroid_layer;

  auto* train = app.add_subcommand("train", "Train one model (or --runs N models) on a dataset");
  train->add_option("--data", data, "Dataset directory")->required();
  train->add_option("--out", out_dir, "Output directory")->required();
  train->add_option("--runs", runs, "Number of seeded runs; writes summary.json when > 1");
  train_flags.attach(train);

  auto* eval = app.add_subcommand("eval", "Accuracy of a checkpoint on one split");
  eval->add_option("--checkpoint", checkpoint, "checkpoint.json or its directory")->required();
  eval->add_option("--data", data, "Dataset directory (defaults to the training data)");
  eval->add_option("--mask", mask, "train|valid|test|all");

  auto* sweep = app.add_subcommand("sweep", "multi_run per value of one hyper-parameter");
  sweep->add_option("--data", data, "Dataset directory")->required();
  sweep->add_option("--param", param, "Config key to sweep, e.g. gamma or theta")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--runs", runs, "Runs per value (default: config 'runs')");
  sweep->add_option("--out", out_dir, "Output directory for sweep.csv");
  sweep_flags.attach(sweep);

  auto* analyze = app.add_subcommand("analyze", "Relation vs signed message diagnostics and exports");
  analyze->add_option("--checkpoint", checkpoint, "checkpoint.json or its directory")->required();
  analyze->add_option("--data", data, "Dataset directory (defaults to the training data)");
  analyze->add_option("--out", out_dir, "Output directory (defaults to the checkpoint's)");
  analyze->add_option("--message-layer", message_layer, "Layer whose messages are compared");
  analyze->add_option("--centroid-layer", centroid_layer, "Layer the class centroids use");
  analyze->add_flag("--train-only-centroids", aopts.train_only_centroids,
                    "Build centroids from training nodes only");

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset with a target homophily");
  synth->add_option("--nodes", synth_nodes, "Node count");
  synth->add_option("--classes", synth_classes, "Class count");
  synth->add_option("--homophily", synth_h, "Target homophily ratio in [0, 1]");
  synth->add_option("--features", synth_feat, "Feature dimension");
  synth->add_option("--degree", synth_degree, "Average degree");
  synth->add_option("--seed", synth_seed, "Seed");
  synth->add_option("--out", out_dir, "Output dataset directory")->required();

  auto* summary = app.add_subcommand("summary", "Dataset statistics as JSON");
  summary->add_option("--data", data, "Dataset directory")->required();

  auto* echo = app.add_subcommand("echo-config", "Print the resolved config as JSON");
  echo_flags.attach(echo);

  auto* bench = app.add_subcommand("bench", "Per-epoch time on synthetic graphs of growing size");
  std::vector<std::size_t> bench_nodes{1000, 2000, 4000};
  double bench_degree = 8.0;
  bench->add_option("--nodes", bench_nodes, "Node counts");
  bench->add_option("--degree", bench_degree, "Average degree");
  bench->add_option("--out", out_dir, "Output directory for bench.csv");
  bench_flags.attach(bench);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*train) {
      const ExperimentConfig cfg = train_flags.resolve();
      const Graph g = load_data(data);
      ensure_dir(out_dir);
      log->info("train: {} nodes, {} directed edges, seed {}", g.num_nodes(), g.num_edges(),
                cfg.train.seed);
      if (runs && *runs > 1) {
        const MultiRunSummary s = multi_run(g, cfg, *runs, cfg.train.seed);
        write_text(fs::path(out_dir) / "summary.json", summary_to_json(s).dump(2) + "\n");
        out << "mean_test_acc=" << fmt_double(s.mean) << " ci95=" << fmt_double(s.ci95) << '\n';
        return kExitOk;
      }
      const SplitMask split = make_split(g, cfg.train.seed);
      TrainResult result = vrgnn::train(g, split, cfg);
      result.checkpoint.data_dir = data;
      save_checkpoint(result.checkpoint, fs::path(out_dir) / "checkpoint.json");
      write_text(fs::path(out_dir) / "report.json", report_to_json(result.report).dump(2) + "\n");
      write_text(fs::path(out_dir) / "curve.csv", report_curve_csv(result.report));
      log->info("best epoch {} of {}, val {:.4f}", result.report.best_epoch,
                result.report.epochs_run, result.report.best_val_acc);
      out << "test_acc=" << fmt_double(result.report.test_acc) << '\n';
      return kExitOk;
    }
    if (*eval) {
      const Checkpoint ckpt = read_checkpoint(checkpoint);
      const Graph g = data_for(data, ckpt);
      const double acc = evaluate(ckpt, g, mask_by_name(ckpt, g, mask));
      out << mask << "_acc=" << fmt_double(acc) << '\n';
      return kExitOk;
    }
    if (*sweep) {
      const ExperimentConfig cfg = sweep_flags.resolve();
      const auto list = split_list(values);
      if (list.empty()) throw UsageError("--values is empty");
      const Graph g = load_data(data);
      const std::size_t n = runs.value_or(cfg.runs);
      std::ostringstream csv;
      csv << std::setprecision(17) << "value,mean,ci95,stddev,runs\n";
      for (const auto& v : list) {
        const ExperimentConfig point = with_value(cfg, param, v);
        point.validate();
        log->info("sweep {}={} ({} runs)", param, v, n);
        const MultiRunSummary s = multi_run(g, point, n, point.train.seed);
        csv << v << ',' << s.mean << ',' << s.ci95 << ',' << s.stddev << ',' << n << '\n';
      }
      if (!out_dir.empty()) {
        ensure_dir(out_dir);
        write_text(fs::path(out_dir) / "sweep.csv", csv.str());
      }
      out << csv.str();
      return kExitOk;
    }
    if (*analyze) {
      const Checkpoint ckpt = read_checkpoint(checkpoint);
      const Graph g = data_for(data, ckpt);
      aopts.message_layer = message_layer;
      aopts.centroid_layer = centroid_layer;
      fs::path dir = out_dir.empty() ? fs::path(checkpoint) : fs::path(out_dir);
      if (out_dir.empty() && !fs::is_directory(dir)) dir = dir.parent_path();
      if (dir.empty()) dir = ".";
      ensure_dir(dir);
      const auto rows = analysis::compare_messages(ckpt, g, aopts);
      analysis::write_comparisons_csv(rows, dir / "messages.csv");
      analysis::export_embeddings(ckpt, g, dir / "embeddings.csv");
      const auto s = analysis::summarize(rows);
      const nlohmann::json j = {{"edges", rows.size()},
                                {"homophilic_edges", s.homophilic_edges},
                                {"heterophilic_edges", s.heterophilic_edges},
                                {"het_farther_rel", s.het_farther_rel},
                                {"het_farther_sign", s.het_farther_sign},
                                {"hom_closer_rel", s.hom_closer_rel},
                                {"hom_closer_sign", s.hom_closer_sign},
                                {"mean_cos_rel", s.mean_cos_rel},
                                {"mean_cos_sign", s.mean_cos_sign}};
      write_text(dir / "analysis.json", j.dump(2) + "\n");
      out << j.dump(2) << '\n';
      return kExitOk;
    }
    if (*synth) {
      SynthOptions so;
      so.avg_degree = synth_degree;
      const Graph g = synth_graph(synth_nodes, synth_classes, synth_h, synth_feat, synth_seed, so);
      ensure_dir(out_dir);
      save_graph(g, out_dir);
      out << "homophily=" << fmt_double(homophily_ratio(g)) << " nodes=" << g.num_nodes()
          << " edges=" << g.num_edges() << '\n';
      return kExitOk;
    }
    if (*summary) {
      const GraphSummary s = vrgnn::summarize(load_data(data));
      nlohmann::json j = {{"name", s.name},
                          {"num_nodes", s.num_nodes},
                          {"num_directed_edges", s.num_directed_edges},
                          {"num_undirected_edges", s.num_undirected_edges},
                          {"num_features", s.num_features},
                          {"num_classes", s.num_classes},
                          {"class_counts", s.class_counts},
                          {"num_unlabeled", s.num_unlabeled}};
      j["homophily_ratio"] = s.homophily_ratio ? nlohmann::json(*s.homophily_ratio) : nlohmann::json();
      out << j.dump(2) << '\n';
      return kExitOk;
    }
    if (*echo) {
      out << to_json(echo_flags.resolve()).dump(2) << '\n';
      return kExitOk;
    }
    if (*bench) {
      analysis::BenchmarkOptions bo;
      bo.base = bench_flags.resolve();
      bo.seed = bo.base.train.seed;
      std::vector<analysis::BenchmarkCase> cases;
      for (std::size_t n : bench_nodes) cases.push_back({n, bench_degree, bo.base.decoder.num_layers});
      const auto table = analysis::scaling_benchmark(cases, bo);
      if (!out_dir.empty()) {
        ensure_dir(out_dir);
        analysis::write_benchmark_csv(table, fs::path(out_dir) / "bench.csv");
      }
      out << "nodes,edges,layers,ms_per_epoch,cv\n";
      for (const auto& r : table.rows)
        out << r.nodes << ',' << r.edges << ',' << r.layers << ',' << r.ms_per_epoch << ','
            << r.cv << '\n';
      out << "slope_ms_per_edge=" << table.slope_ms_per_edge << '\n';
      return kExitOk;
    }
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& ex) {
    err << "config error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const DataError& ex) {
    err << "data error: " << ex.what() << '\n';
    return kExitData;
  } catch (const NumericError& ex) {
    err << "numeric error: " << ex.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace vrgnn::cli
