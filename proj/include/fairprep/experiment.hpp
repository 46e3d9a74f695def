#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairprep/gcn.hpp"
#include "fairprep/ingest.hpp"
#include "fairprep/io.hpp"
#include "fairprep/metrics.hpp"
#include "fairprep/prepare.hpp"

namespace fairprep {

/// Everything one experiment run needs: dataset, edge construction, the
/// method grid, training setup, repeat protocol and output location.
struct ExperimentConfig {
  std::string data_path;
  std::string schema_path;
  int knn_k = 10;
  DistanceMetric metric = DistanceMetric::Euclidean;
  std::vector<Method> methods{all_methods().begin(), all_methods().end()};
  TrainConfig train;
  AugmentConfig augment;
  int repeats = 3;
  std::uint64_t base_seed = 42;
  std::uint64_t seed_stride = 1; // 0 forces identical per-repeat seeds
  bool shared_split = true;      // all methods in repeat r share split randomness
  bool metrics_on_all_nodes = false;
  std::string out_dir = "out";

  /// Repeat seeds derive from the base seed; with shared_split every
  /// method sees the same seed in repeat r, otherwise the method index is
  /// mixed in.
  std::uint64_t cell_seed(int repeat, std::size_t method_index) const {
    const std::uint64_t r = base_seed + seed_stride * static_cast<std::uint64_t>(repeat);
    if (shared_split) return r;
    return r + 0x9e3779b97f4a7c15ULL * (method_index + 1);
  }

  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    ExperimentConfig c;
    auto resolve = [&](const std::string& p) {
      const std::filesystem::path path(p);
      return path.is_absolute() ? path.string() : (base_dir / path).string();
    };
    if (!j.contains("dataset")) throw Error("experiment config: missing \"dataset\"");
    c.data_path = resolve(j["dataset"].at("data").get<std::string>());
    c.schema_path = resolve(j["dataset"].at("schema").get<std::string>());
    if (j.contains("edges")) {
      c.knn_k = j["edges"].value("k", c.knn_k);
      c.metric = parse_metric(j["edges"].value("metric", std::string("euclidean")));
    }
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j["methods"]) c.methods.push_back(parse_method(m.get<std::string>()));
      if (c.methods.empty()) throw Error("experiment config: empty method list");
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      c.train.epochs = t.value("epochs", c.train.epochs);
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
      c.train.hidden1 = t.value("hidden1", c.train.hidden1);
      c.train.hidden2 = t.value("hidden2", c.train.hidden2);
      c.train.train_fraction = t.value("train_fraction", c.train.train_fraction);
      c.train.sensitive_as_input = t.value("sensitive_as_input", c.train.sensitive_as_input);
    }
    if (j.contains("augment")) {
      const auto& a = j["augment"];
      c.augment.autoencoder.epochs = a.value("epochs", c.augment.autoencoder.epochs);
      c.augment.autoencoder.learning_rate =
          a.value("learning_rate", c.augment.autoencoder.learning_rate);
      c.augment.autoencoder.hidden = a.value("hidden", c.augment.autoencoder.hidden);
      c.augment.autoencoder.latent = a.value("latent", c.augment.autoencoder.latent);
      c.augment.gmm_components = a.value("gmm_components", c.augment.gmm_components);
      c.augment.vote_k = a.value("vote_k", c.augment.vote_k);
      c.augment.attach_k = a.value("attach_k", c.augment.attach_k);
      c.augment.retry_factor = a.value("retry_factor", c.augment.retry_factor);
    }
    c.repeats = j.value("repeats", c.repeats);
    if (c.repeats < 1) throw Error("experiment config: repeats must be at least 1");
    c.base_seed = j.value("base_seed", c.base_seed);
    c.seed_stride = j.value("seed_stride", c.seed_stride);
    c.shared_split = j.value("shared_split", c.shared_split);
    c.metrics_on_all_nodes = j.value("metrics_on_all_nodes", c.metrics_on_all_nodes);
    c.out_dir = j.value("out_dir", c.out_dir);
    return c;
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open experiment config: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j, std::filesystem::path(path).parent_path());
  }

  /// Canonical form used for the config hash and provenance. The output
  /// directory is excluded so relocating results does not change their
  /// contents.
  nlohmann::json canonical() const {
    nlohmann::json j;
    j["dataset"] = {{"data", data_path}, {"schema", schema_path}};
    j["edges"] = {{"k", knn_k}, {"metric", metric_name(metric)}};
    nlohmann::json ms = nlohmann::json::array();
    for (Method m : methods) ms.push_back(method_name(m));
    j["methods"] = ms;
    j["train"] = {{"epochs", train.epochs},
                  {"learning_rate", train.learning_rate},
                  {"hidden1", train.hidden1},
                  {"hidden2", train.hidden2},
                  {"train_fraction", train.train_fraction},
                  {"sensitive_as_input", train.sensitive_as_input}};
    j["augment"] = {{"epochs", augment.autoencoder.epochs},
                    {"learning_rate", augment.autoencoder.learning_rate},
                    {"hidden", augment.autoencoder.hidden},
                    {"latent", augment.autoencoder.latent},
                    {"gmm_components", augment.gmm_components},
                    {"vote_k", augment.vote_k},
                    {"attach_k", augment.attach_k},
                    {"retry_factor", augment.retry_factor}};
    j["repeats"] = repeats;
    j["base_seed"] = base_seed;
    j["seed_stride"] = seed_stride;
    j["shared_split"] = shared_split;
    j["metrics_on_all_nodes"] = metrics_on_all_nodes;
    return j;
  }

  std::string config_hash() const { return fnv1a_hex(canonical().dump()); }
};

inline nlohmann::json metric_to_json(const MetricValue& m) {
  nlohmann::json j;
  j["group_a"] = m.group[0] ? nlohmann::json(*m.group[0]) : nlohmann::json();
  j["group_b"] = m.group[1] ? nlohmann::json(*m.group[1]) : nlohmann::json();
  j["delta"] = m.delta() ? nlohmann::json(*m.delta()) : nlohmann::json();
  return j;
}

inline MetricValue metric_from_json(const nlohmann::json& j) {
  MetricValue m;
  if (!j["group_a"].is_null()) m.group[0] = j["group_a"].get<double>();
  if (!j["group_b"].is_null()) m.group[1] = j["group_b"].get<double>();
  return m;
}

inline nlohmann::json report_to_json(const FairnessReport& r) {
  nlohmann::json j;
  j["statistical_parity"] = metric_to_json(r.parity);
  j["equal_opportunity"] = metric_to_json(r.opportunity);
  j["false_positive_rate"] = metric_to_json(r.fpr);
  j["accuracy"] = metric_to_json(r.acc.per_group);
  j["accuracy"]["overall"] = r.acc.overall;
  j["evaluated_nodes"] = r.evaluated_nodes;
  return j;
}

inline FairnessReport report_from_json(const nlohmann::json& j) {
  FairnessReport r;
  r.parity = metric_from_json(j.at("statistical_parity"));
  r.opportunity = metric_from_json(j.at("equal_opportunity"));
  r.fpr = metric_from_json(j.at("false_positive_rate"));
  r.acc.per_group = metric_from_json(j.at("accuracy"));
  r.acc.overall = j.at("accuracy").at("overall").get<double>();
  r.evaluated_nodes = j.value("evaluated_nodes", 0);
  return r;
}

/// One grid cell: a (method, repeat) pair and what came out of it.
struct RunRecord {
  Method method = Method::Original;
  int repeat = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  nlohmann::json prepare_provenance;
  std::optional<FairnessReport> report;
};

struct ExperimentBundle {
  ExperimentConfig config;
  std::string config_hash;
  std::array<std::string, 2> group_names{};
  std::vector<RunRecord> runs;
  bool partial = false; // any cell failed

  std::vector<const RunRecord*> runs_of(Method m) const {
    std::vector<const RunRecord*> out;
    for (const auto& r : runs)
      if (r.method == m) out.push_back(&r);
    return out;
  }

  std::optional<AggregatedReport> aggregate(Method m) const {
    std::vector<FairnessReport> reports;
    for (const auto* r : runs_of(m))
      if (r->ok && r->report) reports.push_back(*r->report);
    if (reports.empty()) return std::nullopt;
    return aggregate_repeats(reports);
  }
};

namespace detail {

inline nlohmann::json run_to_json(const RunRecord& r) {
  nlohmann::json j;
  j["method"] = method_name(r.method);
  j["repeat"] = r.repeat;
  j["seed"] = r.seed;
  j["status"] = r.ok ? "ok" : "error";
  if (!r.ok) j["error"] = r.error;
  if (!r.prepare_provenance.is_null()) j["prepare"] = r.prepare_provenance;
  if (r.report) j["report"] = report_to_json(*r.report);
  return j;
}

inline RunRecord run_from_json(const nlohmann::json& j) {
  RunRecord r;
  r.method = parse_method(j.at("method").get<std::string>());
  r.repeat = j.at("repeat").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.ok = j.at("status").get<std::string>() == "ok";
  if (j.contains("error")) r.error = j["error"].get<std::string>();
  if (j.contains("prepare")) r.prepare_provenance = j["prepare"];
  if (j.contains("report")) r.report = report_from_json(j["report"]);
  return r;
}

} // namespace detail

/// Scores one prepared graph: trains the GCN and evaluates the fairness
/// metrics on the test nodes (or every node when configured so). Returns
/// the report together with the full prediction rows.
struct EvaluatedRun {
  TrainResult trained;
  std::vector<PredictionRow> predictions;
  FairnessReport report;
};

inline EvaluatedRun evaluate_prepared(const CreditGraph& g, TrainConfig train_cfg,
                                      bool metrics_on_all_nodes) {
  EvaluatedRun out;
  out.trained = train_gcn(g, train_cfg);

  auto index = g.id_index();
  std::vector<char> in_test(g.node_count(), 0);
  for (NodeId id : out.trained.split.test_ids) in_test[index.at(id)] = 1;

  out.predictions.reserve(g.node_count());
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    PredictionRow r;
    r.node_id = g.node_ids[i];
    r.true_label = g.labels[i];
    r.predicted_label = out.trained.predicted[i];
    r.p_positive = out.trained.probabilities(static_cast<Eigen::Index>(i), kGood);
    r.group = g.sensitive[i];
    r.in_test = in_test[i] != 0;
    out.predictions.push_back(r);
  }

  std::vector<std::uint8_t> pred, label, group;
  for (const auto& r : out.predictions) {
    if (!metrics_on_all_nodes && !r.in_test) continue;
    pred.push_back(r.predicted_label);
    label.push_back(r.true_label);
    group.push_back(r.group);
  }
  out.report = FairnessReport::compute(pred, label, group);
  return out;
}

/// Computes a fairness report straight from prediction rows (the
/// `evaluate` CLI path).
inline FairnessReport report_from_predictions(const std::vector<PredictionRow>& rows,
                                              bool all_nodes) {
  std::vector<std::uint8_t> pred, label, group;
  for (const auto& r : rows) {
    if (!all_nodes && !r.in_test) continue;
    pred.push_back(r.predicted_label);
    label.push_back(r.true_label);
    group.push_back(r.group);
  }
  return FairnessReport::compute(pred, label, group);
}

inline std::vector<std::filesystem::path> emit_all_reports(const ExperimentBundle& bundle);

/// Runs the full method-by-repeat grid: prepare, train, evaluate, persist.
/// A failing cell is recorded and the rest of the grid continues.
inline ExperimentBundle run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  ExperimentBundle bundle;
  bundle.config = cfg;
  bundle.config_hash = cfg.config_hash();

  const DatasetSchema schema = DatasetSchema::load(cfg.schema_path);
  CreditGraph base = ingest_dataset(cfg.data_path, schema);
  base.edges = build_knn_edges(base, cfg.knn_k, cfg.metric);
  bundle.group_names = base.group_names;

  const fs::path out(cfg.out_dir);
  nlohmann::json base_prov;
  base_prov["config_hash"] = bundle.config_hash;
  base_prov["seed"] = cfg.base_seed;
  base_prov["stage"] = "base";
  base_prov["groups"] = {base.group_names[0], base.group_names[1]};
  write_graph(base, out / "base" / "nodes.csv", out / "base" / "edges.csv", base_prov);

  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const Method method = cfg.methods[mi];
    for (int rep = 0; rep < cfg.repeats; ++rep) {
      RunRecord rec;
      rec.method = method;
      rec.repeat = rep;
      rec.seed = cfg.cell_seed(rep, mi);
      const fs::path cell_dir = out / "prepared" / method_name(method) / ("r" + std::to_string(rep));
      try {
        PreparedDataset prepared = prepare_dataset(base, method, rec.seed, cfg.augment);
        prepared.provenance["config_hash"] = bundle.config_hash;
        prepared.provenance["repeat"] = rep;
        prepared.provenance["groups"] = {prepared.graph.group_names[0],
                                         prepared.graph.group_names[1]};
        rec.prepare_provenance = prepared.provenance;
        write_graph(prepared.graph, cell_dir / "nodes.csv", cell_dir / "edges.csv",
                    prepared.provenance);
        write_file_atomic(cell_dir / "provenance.json", prepared.provenance.dump(2) + "\n");

        TrainConfig train_cfg = cfg.train;
        train_cfg.seed = rec.seed;
        EvaluatedRun run = evaluate_prepared(prepared.graph, train_cfg, cfg.metrics_on_all_nodes);
        if (run.trained.split.fallback_cells > 0)
          rec.prepare_provenance["split_fallback_cells"] = run.trained.split.fallback_cells;

        nlohmann::json pred_prov;
        pred_prov["config_hash"] = bundle.config_hash;
        pred_prov["method"] = method_name(method);
        pred_prov["repeat"] = rep;
        pred_prov["seed"] = rec.seed;
        write_file_atomic(out / "predictions" / (method_name(method) + "_r" + std::to_string(rep) + ".csv"),
                          render_predictions(run.predictions, prepared.graph.group_names, pred_prov));

        rec.report = run.report;
        rec.ok = true;
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
        bundle.partial = true;
      }
      nlohmann::json run_json = detail::run_to_json(rec);
      run_json["config_hash"] = bundle.config_hash;
      write_file_atomic(out / "reports" / "per_run" /
                            (method_name(method) + "_r" + std::to_string(rep) + ".json"),
                        run_json.dump(2) + "\n");
      bundle.runs.push_back(std::move(rec));
    }
  }

  // experiment.json carries the whole bundle so reports can be re-emitted
  // without re-running.
  nlohmann::json doc;
  doc["config"] = cfg.canonical();
  doc["config_hash"] = bundle.config_hash;
  doc["groups"] = {bundle.group_names[0], bundle.group_names[1]};
  doc["partial"] = bundle.partial;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : bundle.runs) runs.push_back(detail::run_to_json(r));
  doc["runs"] = runs;
  write_file_atomic(out / "experiment.json", doc.dump(2) + "\n");
  emit_all_reports(bundle);
  return bundle;
}

/// Loads a bundle previously written by run_experiment.
inline ExperimentBundle load_bundle(const std::string& dir) {
  const auto path = std::filesystem::path(dir) / "experiment.json";
  std::ifstream in(path);
  if (!in) throw Error("empty bundle: cannot open " + path.string());
  nlohmann::json doc;
  in >> doc;
  ExperimentBundle bundle;
  bundle.config_hash = doc.at("config_hash").get<std::string>();
  bundle.group_names = {doc.at("groups")[0].get<std::string>(),
                        doc.at("groups")[1].get<std::string>()};
  bundle.partial = doc.value("partial", false);
  for (const auto& r : doc.at("runs")) bundle.runs.push_back(detail::run_from_json(r));
  if (bundle.runs.empty()) throw Error("empty bundle: no runs recorded");
  // reconstruct the method list in first-seen order
  bundle.config.methods.clear();
  for (const auto& r : bundle.runs) {
    bool seen = false;
    for (Method m : bundle.config.methods) seen = seen || m == r.method;
    if (!seen) bundle.config.methods.push_back(r.method);
  }
  bundle.config.out_dir = dir;
  return bundle;
}

enum class ReportFormat { StructuredRecords, DelimitedTable, PlotData };

inline ReportFormat parse_report_format(const std::string& name) {
  if (name == "structured-records") return ReportFormat::StructuredRecords;
  if (name == "delimited-table") return ReportFormat::DelimitedTable;
  if (name == "plot-data") return ReportFormat::PlotData;
  throw Error("unknown format: " + name);
}

namespace detail {

inline std::string distribution_cell(const nlohmann::json& counts,
                                     const std::array<std::string, 2>& names, const char* field) {
  if (counts.is_null()) return "-";
  const auto& groups = counts.at("groups");
  return groups.at(names[0]).at(field).dump() + " / " + groups.at(names[1]).at(field).dump();
}

} // namespace detail

/// Emits one report artifact from a bundle. Returns the written paths.
inline std::vector<std::filesystem::path> emit_report(const ExperimentBundle& bundle,
                                                      ReportFormat format,
                                                      const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (bundle.runs.empty()) throw Error("empty bundle: nothing to report");
  const fs::path reports = fs::path(out_dir) / "reports";
  std::vector<fs::path> written;

  const auto& names = bundle.group_names;
  struct MetricRef {
    const char* name;
    AggregatedValue AggregatedReport::* field;
  };
  static constexpr std::array<MetricRef, 4> kMetrics = {{
      {"statistical_parity", &AggregatedReport::parity},
      {"equal_opportunity", &AggregatedReport::opportunity},
      {"false_positive_rate", &AggregatedReport::fpr},
      {"accuracy", &AggregatedReport::accuracy_group},
  }};

  auto fmt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };

  switch (format) {
    case ReportFormat::StructuredRecords: {
      std::string lines;
      for (Method m : bundle.config.methods) {
        const auto agg = bundle.aggregate(m);
        if (!agg) continue;
        for (const auto& mr : kMetrics) {
          const AggregatedValue& v = (*agg).*(mr.field);
          for (int side = 0; side < 2; ++side) {
            nlohmann::json row;
            row["config_hash"] = bundle.config_hash;
            row["method"] = method_name(m);
            row["metric"] = mr.name;
            row["scope"] = "group";
            row["group"] = names[side];
            row["mean"] = side == 0 ? (v.mean_a ? nlohmann::json(*v.mean_a) : nlohmann::json())
                                    : (v.mean_b ? nlohmann::json(*v.mean_b) : nlohmann::json());
            row["std"] = side == 0 ? (v.std_a ? nlohmann::json(*v.std_a) : nlohmann::json())
                                   : (v.std_b ? nlohmann::json(*v.std_b) : nlohmann::json());
            lines += row.dump() + "\n";
          }
          nlohmann::json row;
          row["config_hash"] = bundle.config_hash;
          row["method"] = method_name(m);
          row["metric"] = mr.name;
          row["scope"] = "delta";
          row["mean"] = v.mean_delta ? nlohmann::json(*v.mean_delta) : nlohmann::json();
          row["std"] = v.std_delta ? nlohmann::json(*v.std_delta) : nlohmann::json();
          row["undefined_runs"] = v.undefined_runs;
          lines += row.dump() + "\n";
        }
        nlohmann::json overall;
        overall["config_hash"] = bundle.config_hash;
        overall["method"] = method_name(m);
        overall["metric"] = "accuracy";
        overall["scope"] = "overall";
        overall["mean"] = agg->accuracy_mean;
        overall["std"] = agg->accuracy_std;
        lines += overall.dump() + "\n";
      }
      const auto path = reports / "aggregated.jsonl";
      write_file_atomic(path, lines);
      written.push_back(path);
      break;
    }
    case ReportFormat::DelimitedTable: {
      // distribution table mirroring the group-size / bad / good layout
      std::string table = "# config " + bundle.config_hash + "\nquantity";
      for (Method m : bundle.config.methods) table += "," + method_name(m);
      table += "\n";
      const char* row_names[3] = {"group_sizes", "bad_customers", "good_customers"};
      const char* fields[3] = {"size", "bad", "good"};
      for (int r = 0; r < 3; ++r) {
        table += row_names[r];
        for (Method m : bundle.config.methods) {
          const auto runs = bundle.runs_of(m);
          nlohmann::json counts;
          if (!runs.empty() && runs.front()->ok)
            counts = runs.front()->prepare_provenance.value("counts", nlohmann::json());
          table += "," + detail::distribution_cell(counts, names, fields[r]);
        }
        table += "\n";
      }
      const auto path = reports / "distribution_table.csv";
      write_file_atomic(path, table);
      written.push_back(path);
      break;
    }
    case ReportFormat::PlotData: {
      std::string csv = "# config " + bundle.config_hash +
                        "\nmethod,metric,group_a,group_a_std,group_b,group_b_std,delta,delta_std,"
                        "overall_mean,overall_std,undefined_runs\n";
      for (Method m : bundle.config.methods) {
        const auto agg = bundle.aggregate(m);
        if (!agg) continue;
        for (const auto& mr : kMetrics) {
          const AggregatedValue& v = (*agg).*(mr.field);
          csv += method_name(m);
          csv += ",";
          csv += mr.name;
          csv += "," + fmt(v.mean_a) + "," + fmt(v.std_a);
          csv += "," + fmt(v.mean_b) + "," + fmt(v.std_b);
          csv += "," + fmt(v.mean_delta) + "," + fmt(v.std_delta);
          if (std::string(mr.name) == "accuracy") {
            csv += "," + format_double(agg->accuracy_mean) + "," + format_double(agg->accuracy_std);
          } else {
            csv += ",,";
          }
          csv += "," + std::to_string(v.undefined_runs) + "\n";
        }
      }
      const auto path = reports / "plot_data.csv";
      write_file_atomic(path, csv);
      written.push_back(path);
      break;
    }
  }
  return written;
}

/// Writes every report format; run_experiment callers use this to land the
/// aggregated artifacts next to the per-run ones.
inline std::vector<std::filesystem::path> emit_all_reports(const ExperimentBundle& bundle) {
  std::vector<std::filesystem::path> written;
  for (auto f : {ReportFormat::StructuredRecords, ReportFormat::DelimitedTable, ReportFormat::PlotData}) {
    auto w = emit_report(bundle, f, bundle.config.out_dir);
    written.insert(written.end(), w.begin(), w.end());
  }
  return written;
}

} // namespace fairprep
