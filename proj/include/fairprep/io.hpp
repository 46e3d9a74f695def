#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairprep/graph.hpp"

namespace fairprep {

/// Stable 64-bit FNV-1a over a string; used to stamp output files with a
/// config fingerprint that is reproducible across runs and platforms.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Writes `content` to `path` atomically (temp file + rename), creating
/// parent directories as needed.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + tmp.string());
    out << content;
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Full-precision, locale-independent double rendering (round-trip safe).
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::string provenance_block(const std::string& kind, const nlohmann::json& provenance) {
  std::string s = "# fairprep " + kind + " v1\n";
  if (!provenance.is_null()) s += "# provenance " + provenance.dump() + "\n";
  return s;
}

/// Strips leading '#' comment lines; returns them (for provenance recovery).
inline std::vector<std::string> split_comment_header(std::istream& in, std::string& first_data_line) {
  std::vector<std::string> comments;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') {
      comments.push_back(line);
    } else {
      first_data_line = line;
      return comments;
    }
  }
  first_data_line.clear();
  return comments;
}

inline nlohmann::json provenance_from_comments(const std::vector<std::string>& comments) {
  const std::string tag = "# provenance ";
  for (const auto& c : comments)
    if (c.rfind(tag, 0) == 0) return nlohmann::json::parse(c.substr(tag.size()));
  return nlohmann::json();
}

} // namespace detail

/// Node table: id, group, label, then one column per feature.
inline std::string render_node_table(const CreditGraph& g, const nlohmann::json& provenance) {
  std::string out = detail::provenance_block("nodes", provenance);
  out += "id,group,label";
  for (const auto& c : g.columns) out += "," + c.display_name();
  out += "\n";
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    out += std::to_string(g.node_ids[i]);
    out += ",";
    out += g.group_names[g.sensitive[i]];
    out += ",";
    out += g.labels[i] == kGood ? "good" : "bad";
    for (Eigen::Index c = 0; c < g.features.cols(); ++c)
      out += "," + format_double(g.features(static_cast<Eigen::Index>(i), c));
    out += "\n";
  }
  return out;
}

/// Edge list: one `id,id` pair per line.
inline std::string render_edge_list(const CreditGraph& g, const nlohmann::json& provenance) {
  std::string out = detail::provenance_block("edges", provenance);
  out += "id,id\n";
  for (const Edge& e : g.edges)
    out += std::to_string(e.a) + "," + std::to_string(e.b) + "\n";
  return out;
}

inline void write_graph(const CreditGraph& g, const std::filesystem::path& node_path,
                        const std::filesystem::path& edge_path,
                        const nlohmann::json& provenance = {}) {
  write_file_atomic(node_path, render_node_table(g, provenance));
  write_file_atomic(edge_path, render_edge_list(g, provenance));
}

/// Reads a node table + edge list pair back into a CreditGraph.
/// Column kinds are recovered from the header naming convention
/// (`source=level` marks one-hot columns); group tag order is recovered
/// from the provenance record when present, else from first appearance.
inline CreditGraph read_graph(const std::filesystem::path& node_path,
                              const std::filesystem::path& edge_path) {
  std::ifstream nodes(node_path);
  if (!nodes) throw Error("cannot open node file: " + node_path.string());
  std::string header_line;
  auto comments = detail::split_comment_header(nodes, header_line);
  if (header_line.empty()) throw Error("node file has no header: " + node_path.string());

  std::vector<std::string> header;
  {
    std::stringstream ss(header_line);
    std::string f;
    while (std::getline(ss, f, ',')) header.push_back(f);
  }
  if (header.size() < 3 || header[0] != "id" || header[1] != "group" || header[2] != "label")
    throw Error("node file header must start with id,group,label");

  CreditGraph g;
  for (std::size_t c = 3; c < header.size(); ++c) {
    const auto eq = header[c].find('=');
    if (eq == std::string::npos)
      g.columns.push_back({header[c], ""});
    else
      g.columns.push_back({header[c].substr(0, eq), header[c].substr(eq + 1)});
  }

  nlohmann::json prov = detail::provenance_from_comments(comments);
  bool groups_fixed = false;
  if (prov.contains("groups") && prov["groups"].is_array() && prov["groups"].size() == 2) {
    g.group_names = {prov["groups"][0].get<std::string>(), prov["groups"][1].get<std::string>()};
    groups_fixed = true;
  }

  std::vector<std::vector<double>> feats;
  std::string line;
  auto consume_row = [&](const std::string& row_line) {
    std::vector<std::string> f;
    std::stringstream ss(row_line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != header.size())
      throw Error("node file row has wrong field count: " + node_path.string());
    g.node_ids.push_back(std::stoll(f[0]));
    if (!groups_fixed) {
      if (g.group_names[0].empty()) {
        g.group_names[0] = f[1];
      } else if (g.group_names[1].empty() && f[1] != g.group_names[0]) {
        g.group_names[1] = f[1];
      }
    }
    if (f[1] == g.group_names[0]) {
      g.sensitive.push_back(0);
    } else if (f[1] == g.group_names[1]) {
      g.sensitive.push_back(1);
    } else {
      throw Error("node file: more than two group names");
    }
    if (f[2] != "good" && f[2] != "bad") throw Error("node file: label must be good or bad");
    g.labels.push_back(f[2] == "good" ? kGood : kBad);
    std::vector<double> row(header.size() - 3);
    for (std::size_t c = 3; c < header.size(); ++c) row[c - 3] = std::stod(f[c]);
    feats.push_back(std::move(row));
  };
  while (std::getline(nodes, line)) {
    if (line.empty() || line[0] == '#') continue;
    consume_row(line);
  }

  g.features.resize(static_cast<Eigen::Index>(feats.size()),
                    static_cast<Eigen::Index>(header.size() - 3));
  for (std::size_t r = 0; r < feats.size(); ++r)
    for (std::size_t c = 0; c < feats[r].size(); ++c)
      g.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = feats[r][c];

  std::ifstream edges(edge_path);
  if (!edges) throw Error("cannot open edge file: " + edge_path.string());
  std::string edge_header;
  detail::split_comment_header(edges, edge_header);
  if (edge_header != "id,id") throw Error("edge file header must be id,id");
  std::vector<Edge> es;
  while (std::getline(edges, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("edge file: malformed line " + line);
    es.push_back({std::stoll(line.substr(0, comma)), std::stoll(line.substr(comma + 1))});
  }
  g.edges = normalize_edges(std::move(es));
  g.validate();
  return g;
}

/// One scored node as emitted by the trainer and consumed by the metrics.
struct PredictionRow {
  NodeId node_id = 0;
  std::uint8_t true_label = 0;
  std::uint8_t predicted_label = 0;
  double p_positive = 0.0;
  std::uint8_t group = 0;
  bool in_test = false;
};

inline std::string render_predictions(const std::vector<PredictionRow>& rows,
                                      const std::array<std::string, 2>& group_names,
                                      const nlohmann::json& provenance) {
  nlohmann::json prov = provenance;
  prov["groups"] = {group_names[0], group_names[1]};
  std::string out = detail::provenance_block("predictions", prov);
  out += "node_id,true_label,predicted_label,p_positive,group,split\n";
  for (const auto& r : rows) {
    out += std::to_string(r.node_id);
    out += r.true_label == kGood ? ",good" : ",bad";
    out += r.predicted_label == kGood ? ",good" : ",bad";
    out += "," + format_double(r.p_positive);
    out += "," + group_names[r.group];
    out += r.in_test ? ",test" : ",train";
    out += "\n";
  }
  return out;
}

struct PredictionFile {
  std::vector<PredictionRow> rows;
  std::array<std::string, 2> group_names{};
  nlohmann::json provenance;
};

inline PredictionFile read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open predictions file: " + path.string());
  std::string header;
  auto comments = detail::split_comment_header(in, header);
  if (header != "node_id,true_label,predicted_label,p_positive,group,split")
    throw Error("predictions file: unexpected header");
  PredictionFile pf;
  pf.provenance = detail::provenance_from_comments(comments);
  if (!pf.provenance.contains("groups"))
    throw Error("predictions file: provenance lacks group names");
  pf.group_names = {pf.provenance["groups"][0].get<std::string>(),
                    pf.provenance["groups"][1].get<std::string>()};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 6) throw Error("predictions file: malformed row");
    PredictionRow r;
    r.node_id = std::stoll(f[0]);
    r.true_label = f[1] == "good" ? kGood : kBad;
    r.predicted_label = f[2] == "good" ? kGood : kBad;
    r.p_positive = std::stod(f[3]);
    if (f[4] == pf.group_names[0]) {
      r.group = 0;
    } else if (f[4] == pf.group_names[1]) {
      r.group = 1;
    } else {
      throw Error("predictions file: unknown group name " + f[4]);
    }
    r.in_test = f[5] == "test";
    pf.rows.push_back(r);
  }
  return pf;
}

} // namespace fairprep
