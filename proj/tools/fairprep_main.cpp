// fairprep: prepares graph-structured credit data with bias-mitigation
// methods (sparsification, feature reassignment, synthetic augmentation),
// trains a small GCN on each prepared variant and reports fairness metrics.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairprep/experiment.hpp"

namespace fs = std::filesystem;
using namespace fairprep;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 42;
  int repeats = 3;
  bool have_config = false;
};

ExperimentConfig resolve_config(const CommonOpts& opts, CLI::App* sub) {
  ExperimentConfig cfg;
  if (!opts.config_path.empty()) {
    cfg = ExperimentConfig::load(opts.config_path);
  }
  // command-line flags win over the config file
  if (sub->count("--out-dir") || cfg.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (sub->count("--seed")) cfg.base_seed = opts.seed;
  if (sub->count("--repeats")) cfg.repeats = opts.repeats;
  return cfg;
}

void add_common(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config_path, "experiment config file (JSON)");
  sub->add_option("--out-dir", opts.out_dir, "output directory");
  sub->add_option("--seed", opts.seed, "base seed");
  sub->add_option("--repeats", opts.repeats, "repeat count");
}

CreditGraph load_base_graph(const std::string& data, const std::string& schema_path, int k,
                            const std::string& metric) {
  const DatasetSchema schema = DatasetSchema::load(schema_path);
  CreditGraph g = ingest_dataset(data, schema);
  g.edges = build_knn_edges(g, k, parse_metric(metric));
  return g;
}

nlohmann::json base_provenance(const std::string& stage, std::uint64_t seed,
                               const CreditGraph& g) {
  nlohmann::json prov;
  prov["stage"] = stage;
  prov["seed"] = seed;
  prov["groups"] = {g.group_names[0], g.group_names[1]};
  return prov;
}

void print_counts(const CreditGraph& g) {
  const auto j = counts_json(group_counts(g), g.group_names);
  std::cout << j.dump(2) << "\n";
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph data preparation for fair credit scoring"};
  app.require_subcommand(1);

  // ---- ingest ----------------------------------------------------------
  std::string data_path, schema_path, metric = "euclidean";
  int knn_k = 10;
  CommonOpts ingest_opts;
  auto* ingest = app.add_subcommand("ingest", "read a CSV dataset and build the kNN graph");
  ingest->add_option("--data", data_path, "dataset CSV")->required();
  ingest->add_option("--schema", schema_path, "schema JSON")->required();
  ingest->add_option("--knn", knn_k, "neighbors per node");
  ingest->add_option("--metric", metric, "euclidean|cosine");
  add_common(ingest, ingest_opts);
  ingest->callback([&] {
    const CreditGraph g = load_base_graph(data_path, schema_path, knn_k, metric);
    auto prov = base_provenance("base", ingest_opts.seed, g);
    prov["config_hash"] = fnv1a_hex(data_path + "|" + schema_path + "|" + std::to_string(knn_k) + "|" + metric);
    const fs::path out(ingest_opts.out_dir);
    write_graph(g, out / "nodes.csv", out / "edges.csv", prov);
    print_counts(g);
    std::cout << "wrote " << (out / "nodes.csv").string() << " and " << (out / "edges.csv").string()
              << "\n";
  });

  // ---- prepare ---------------------------------------------------------
  std::string method_str;
  std::string nodes_path, edges_path;
  int gmm_k = 5, latent = 16;
  CommonOpts prep_opts;
  auto* prepare = app.add_subcommand("prepare", "apply one mitigation method to a graph");
  prepare->add_option("--method", method_str,
                      "original|random|stratified|weighted|feat-random|feat-equal|augment")
      ->required();
  prepare->add_option("--data", data_path, "dataset CSV (alternative to --nodes/--edges)");
  prepare->add_option("--schema", schema_path, "schema JSON");
  prepare->add_option("--nodes", nodes_path, "node table from a previous ingest");
  prepare->add_option("--edges", edges_path, "edge list from a previous ingest");
  prepare->add_option("--knn", knn_k, "neighbors per node (with --data)");
  prepare->add_option("--metric", metric, "euclidean|cosine");
  prepare->add_option("--gmm-k", gmm_k, "GMM components (augment)");
  prepare->add_option("--latent", latent, "latent dimension (augment)");
  add_common(prepare, prep_opts);
  prepare->callback([&] {
    ExperimentConfig cfg = resolve_config(prep_opts, prepare);
    if (prepare->count("--gmm-k")) cfg.augment.gmm_components = gmm_k;
    if (prepare->count("--latent")) cfg.augment.autoencoder.latent = latent;

    CreditGraph base;
    if (!nodes_path.empty() || !edges_path.empty()) {
      if (nodes_path.empty() || edges_path.empty())
        throw Error("prepare: --nodes and --edges must be given together");
      base = read_graph(nodes_path, edges_path);
    } else if (!data_path.empty() && !schema_path.empty()) {
      base = load_base_graph(data_path, schema_path, knn_k, metric);
    } else if (!cfg.data_path.empty()) {
      base = load_base_graph(cfg.data_path, cfg.schema_path, cfg.knn_k, metric_name(cfg.metric));
    } else {
      throw Error("prepare: provide --nodes/--edges, --data/--schema, or --config");
    }

    PreparedDataset prepared = prepare_dataset(base, parse_method(method_str), cfg.base_seed,
                                               cfg.augment);
    prepared.provenance["groups"] = {prepared.graph.group_names[0], prepared.graph.group_names[1]};
    const fs::path out = fs::path(cfg.out_dir) / method_str;
    write_graph(prepared.graph, out / "nodes.csv", out / "edges.csv", prepared.provenance);
    write_file_atomic(out / "provenance.json", prepared.provenance.dump(2) + "\n");
    print_counts(prepared.graph);
    std::cout << "wrote prepared graph under " << out.string() << "\n";
  });

  // ---- train -----------------------------------------------------------
  CommonOpts train_opts;
  std::string train_nodes, train_edges, predictions_out = "predictions.csv";
  auto* train = app.add_subcommand("train", "train the GCN on a prepared graph");
  train->add_option("--nodes", train_nodes, "node table (defaults to the config's base graph)");
  train->add_option("--edges", train_edges, "edge list");
  train->add_option("--predictions", predictions_out, "output predictions file");
  add_common(train, train_opts);
  train->callback([&] {
    ExperimentConfig cfg = resolve_config(train_opts, train);
    CreditGraph g;
    if (!train_nodes.empty()) {
      if (train_edges.empty()) throw Error("train: --edges required with --nodes");
      g = read_graph(train_nodes, train_edges);
    } else if (!cfg.data_path.empty()) {
      g = load_base_graph(cfg.data_path, cfg.schema_path, cfg.knn_k, metric_name(cfg.metric));
    } else {
      throw Error("train: provide --nodes/--edges or --config");
    }
    TrainConfig tc = cfg.train;
    tc.seed = cfg.base_seed;
    const EvaluatedRun run = evaluate_prepared(g, tc, cfg.metrics_on_all_nodes);
    nlohmann::json prov;
    prov["seed"] = tc.seed;
    prov["config_hash"] = cfg.config_hash();
    write_file_atomic(predictions_out, render_predictions(run.predictions, g.group_names, prov));
    std::cout << "final training loss " << run.trained.loss_curve.back() << "\n";
    std::cout << report_to_json(run.report).dump(2) << "\n";
    std::cout << "wrote " << predictions_out << "\n";
  });

  // ---- evaluate --------------------------------------------------------
  std::string predictions_path;
  bool all_nodes = false;
  auto* evaluate = app.add_subcommand("evaluate", "fairness metrics from a predictions file");
  evaluate->add_option("--predictions", predictions_path, "predictions CSV")->required();
  evaluate->add_flag("--all-nodes", all_nodes, "evaluate on all nodes, not just the test split");
  evaluate->callback([&] {
    const PredictionFile pf = read_predictions(predictions_path);
    const FairnessReport report = report_from_predictions(pf.rows, all_nodes);
    nlohmann::json j = report_to_json(report);
    j["groups"] = {pf.group_names[0], pf.group_names[1]};
    std::cout << j.dump(2) << "\n";
  });

  // ---- run-experiment ----------------------------------------------------
  CommonOpts run_opts;
  auto* run = app.add_subcommand("run-experiment", "full method-by-repeat grid");
  add_common(run, run_opts);
  run->callback([&] {
    if (run_opts.config_path.empty()) throw Error("run-experiment: --config is required");
    ExperimentConfig cfg = resolve_config(run_opts, run);
    const ExperimentBundle bundle = run_experiment(cfg);
    int ok = 0;
    for (const auto& r : bundle.runs)
      if (r.ok) ++ok;
    std::cout << "completed " << ok << "/" << bundle.runs.size() << " grid cells"
              << (bundle.partial ? " (partial)" : "") << "\n";
    for (Method m : cfg.methods) {
      const auto agg = bundle.aggregate(m);
      if (!agg) continue;
      std::cout << method_name(m) << ": parity delta "
                << (agg->parity.mean_delta ? format_double(*agg->parity.mean_delta) : "n/a")
                << ", accuracy " << format_double(agg->accuracy_mean) << "\n";
    }
    std::cout << "artifacts under " << cfg.out_dir << "\n";
    if (bundle.partial) throw Error("experiment completed partially");
  });

  // ---- report ------------------------------------------------------------
  std::string bundle_dir, format = "structured-records";
  std::string report_out;
  auto* report = app.add_subcommand("report", "re-emit reports from an experiment directory");
  report->add_option("--bundle", bundle_dir, "experiment output directory")->required();
  report->add_option("--format", format, "structured-records|delimited-table|plot-data");
  report->add_option("--to", report_out, "destination directory (defaults to the bundle)");
  report->callback([&] {
    const ExperimentBundle bundle = load_bundle(bundle_dir);
    const auto where = report_out.empty() ? bundle_dir : report_out;
    for (const auto& p : emit_report(bundle, parse_report_format(format), where))
      std::cout << "wrote " << p.string() << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
