#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairprep/graph.hpp"

namespace fairprep {

enum class ColumnRole { FeatureContinuous, FeatureCategorical, Sensitive, Label, Ignore };

inline ColumnRole parse_column_role(const std::string& name) {
  if (name == "feature-continuous") return ColumnRole::FeatureContinuous;
  if (name == "feature-categorical") return ColumnRole::FeatureCategorical;
  if (name == "sensitive") return ColumnRole::Sensitive;
  if (name == "label") return ColumnRole::Label;
  if (name == "ignore") return ColumnRole::Ignore;
  throw Error("unknown column role: " + name);
}

/// Column-role map plus label polarity for one tabular dataset.
struct DatasetSchema {
  std::map<std::string, ColumnRole> columns;
  std::string good_label;                      // raw value meaning "good"
  bool sensitive_as_feature = false;           // encode the sensitive column as a feature too
  std::vector<std::string> group_order;        // optional: fixes tag 0 / tag 1 naming

  static DatasetSchema from_json(const nlohmann::json& j) {
    DatasetSchema s;
    if (!j.contains("columns") || !j["columns"].is_object())
      throw Error("schema: missing \"columns\" object");
    for (const auto& [name, role] : j["columns"].items())
      s.columns[name] = parse_column_role(role.get<std::string>());
    if (!j.contains("good_label")) throw Error("schema: missing \"good_label\"");
    s.good_label = j["good_label"].get<std::string>();
    s.sensitive_as_feature = j.value("sensitive_as_feature", false);
    if (j.contains("group_order"))
      s.group_order = j["group_order"].get<std::vector<std::string>>();
    int sensitive = 0, label = 0;
    for (const auto& [name, role] : s.columns) {
      if (role == ColumnRole::Sensitive) ++sensitive;
      if (role == ColumnRole::Label) ++label;
    }
    if (sensitive != 1) throw Error("schema: exactly one sensitive column required");
    if (label != 1) throw Error("schema: exactly one label column required");
    return s;
  }

  static DatasetSchema load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open schema file: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }
};

namespace detail {

/// Splits one CSV record. Handles double-quoted fields with "" escapes;
/// whitespace around unquoted fields is trimmed.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(field);
  for (std::string& f : out) {
    const auto b = f.find_first_not_of(" \t\r");
    const auto e = f.find_last_not_of(" \t\r");
    f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
  }
  return out;
}

inline double parse_double(const std::string& s, std::size_t row, const std::string& column) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw Error("unparseable numeric cell \"" + s + "\" in column " + column + ", data row " +
                std::to_string(row + 1));
  return v;
}

} // namespace detail

/// Reads a comma-separated file with a header row and encodes it into an
/// edgeless CreditGraph:
///   - continuous features are min-max scaled to [0,1] over the full file
///     (a constant column maps to all zeros),
///   - categorical features are one-hot encoded over the observed levels,
///     levels ordered lexicographically,
///   - the label column never enters the features; the sensitive column
///     enters only when the schema opts in (as a 0/1 indicator of tag 1).
/// Node ids are the 0-based data row numbers. Deterministic: the same file
/// and schema produce a bit-identical feature matrix.
inline CreditGraph ingest_dataset(const std::string& path, const DatasetSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw Error("no rows: " + path + " is empty");
  const std::vector<std::string> header = detail::split_csv_line(line);

  for (const auto& [name, role] : schema.columns) {
    (void)role;
    if (std::find(header.begin(), header.end(), name) == header.end())
      throw Error("unknown column in schema: " + name);
  }

  std::vector<ColumnRole> roles(header.size(), ColumnRole::Ignore);
  std::optional<std::size_t> sensitive_col, label_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    auto it = schema.columns.find(header[c]);
    if (it == schema.columns.end()) continue; // columns absent from the schema are ignored
    roles[c] = it->second;
    if (it->second == ColumnRole::Sensitive) sensitive_col = c;
    if (it->second == ColumnRole::Label) label_col = c;
  }

  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw Error("data row " + std::to_string(rows.size() + 1) + " has " +
                  std::to_string(fields.size()) + " fields, header has " +
                  std::to_string(header.size()));
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw Error("no rows: " + path + " has a header but no data");
  const std::size_t n = rows.size();

  // Sensitive column: exactly two distinct raw values.
  std::set<std::string> group_values;
  for (const auto& r : rows) group_values.insert(r[*sensitive_col]);
  if (group_values.size() != 2)
    throw Error("sensitive column " + header[*sensitive_col] + " has " +
                std::to_string(group_values.size()) + " distinct values, expected 2");
  std::array<std::string, 2> group_names;
  if (!schema.group_order.empty()) {
    if (schema.group_order.size() != 2 || !group_values.count(schema.group_order[0]) ||
        !group_values.count(schema.group_order[1]) || schema.group_order[0] == schema.group_order[1])
      throw Error("schema group_order does not match the sensitive column's values");
    group_names = {schema.group_order[0], schema.group_order[1]};
  } else {
    auto it = group_values.begin();
    group_names[0] = *it++;
    group_names[1] = *it;
  }

  // Label column: two distinct raw values, one of them the good label.
  std::set<std::string> label_values;
  for (const auto& r : rows) label_values.insert(r[*label_col]);
  if (label_values.size() > 2)
    throw Error("label column " + header[*label_col] + " has more than 2 distinct values");
  if (!label_values.count(schema.good_label))
    throw Error("label column " + header[*label_col] + " never takes the good value \"" +
                schema.good_label + "\"");

  // Feature layout. Header order decides column order; categorical levels
  // are the lexicographically sorted observed values.
  struct Encoded {
    std::size_t src;
    bool categorical;
    std::vector<std::string> levels;
  };
  std::vector<Encoded> plan;
  std::vector<FeatureColumn> columns;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const bool as_feature = roles[c] == ColumnRole::FeatureContinuous ||
                            roles[c] == ColumnRole::FeatureCategorical ||
                            (roles[c] == ColumnRole::Sensitive && schema.sensitive_as_feature);
    if (!as_feature) continue;
    if (roles[c] == ColumnRole::FeatureContinuous) {
      plan.push_back({c, false, {}});
      columns.push_back({header[c], ""});
    } else if (roles[c] == ColumnRole::FeatureCategorical) {
      std::set<std::string> levels;
      for (const auto& r : rows) levels.insert(r[c]);
      plan.push_back({c, true, {levels.begin(), levels.end()}});
      for (const auto& lv : plan.back().levels) columns.push_back({header[c], lv});
    } else {
      // Sensitive-as-feature: a single indicator column for tag 1.
      plan.push_back({c, true, {group_names[1]}});
      columns.push_back({header[c], group_names[1]});
    }
  }

  CreditGraph g;
  g.columns = std::move(columns);
  g.group_names = group_names;
  g.features.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(g.columns.size()));
  g.sensitive.resize(n);
  g.labels.resize(n);
  g.node_ids.resize(n);

  Eigen::Index col = 0;
  for (const Encoded& enc : plan) {
    if (!enc.categorical) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      std::vector<double> vals(n);
      for (std::size_t r = 0; r < n; ++r) {
        vals[r] = detail::parse_double(rows[r][enc.src], r, header[enc.src]);
        lo = std::min(lo, vals[r]);
        hi = std::max(hi, vals[r]);
      }
      const double span = hi - lo;
      for (std::size_t r = 0; r < n; ++r)
        g.features(static_cast<Eigen::Index>(r), col) = span > 0.0 ? (vals[r] - lo) / span : 0.0;
      ++col;
    } else {
      for (std::size_t r = 0; r < n; ++r) {
        const std::string& v = rows[r][enc.src];
        auto it = std::lower_bound(enc.levels.begin(), enc.levels.end(), v);
        if (it != enc.levels.end() && *it == v)
          g.features(static_cast<Eigen::Index>(r),
                     col + static_cast<Eigen::Index>(it - enc.levels.begin())) = 1.0;
      }
      col += static_cast<Eigen::Index>(enc.levels.size());
    }
  }

  for (std::size_t r = 0; r < n; ++r) {
    g.sensitive[r] = rows[r][*sensitive_col] == group_names[1] ? 1 : 0;
    g.labels[r] = rows[r][*label_col] == schema.good_label ? kGood : kBad;
    g.node_ids[r] = static_cast<NodeId>(r);
  }
  g.validate();
  return g;
}

} // namespace fairprep
