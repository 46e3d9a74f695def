#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "fairprep/error.hpp"

namespace fairprep {

using NodeId = std::int64_t;

inline constexpr std::uint8_t kBad = 0;
inline constexpr std::uint8_t kGood = 1;

/// Undirected edge, stored orientation-normalized (a < b).
struct Edge {
  NodeId a = 0;
  NodeId b = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// One encoded feature column. Categorical source columns expand to one
/// indicator column per observed level; `category` is empty for continuous.
struct FeatureColumn {
  std::string source;
  std::string category;

  bool categorical() const { return !category.empty(); }
  std::string display_name() const {
    return categorical() ? source + "=" + category : source;
  }

  friend bool operator==(const FeatureColumn&, const FeatureColumn&) = default;
};

/// Node-attributed undirected graph over credit applicants.
///
/// `features` excludes the label always and the sensitive column unless the
/// ingestion schema opted in. `sensitive` holds the binary group tag per
/// node; `group_names[tag]` gives its display name. Node ids are stable
/// across subsetting, so rows of a subgraph can be traced back to the
/// original dataset.
struct CreditGraph {
  Eigen::MatrixXd features;                 // rows follow node order
  std::vector<FeatureColumn> columns;       // one entry per feature column
  std::vector<std::uint8_t> sensitive;      // group tag, 0 or 1
  std::array<std::string, 2> group_names{}; // tag -> name
  std::vector<std::uint8_t> labels;         // kGood / kBad
  std::vector<Edge> edges;                  // normalized, sorted, unique
  std::vector<NodeId> node_ids;

  std::size_t node_count() const { return node_ids.size(); }

  std::unordered_map<NodeId, std::size_t> id_index() const {
    std::unordered_map<NodeId, std::size_t> m;
    m.reserve(node_ids.size());
    for (std::size_t i = 0; i < node_ids.size(); ++i) m.emplace(node_ids[i], i);
    return m;
  }

  /// Checks every structural invariant; throws on the first violation.
  void validate() const {
    const std::size_t n = node_count();
    if (static_cast<std::size_t>(features.rows()) != n)
      throw Error("CreditGraph: feature row count does not match node count");
    if (!columns.empty() && static_cast<std::size_t>(features.cols()) != columns.size())
      throw Error("CreditGraph: column descriptor count does not match feature width");
    if (sensitive.size() != n) throw Error("CreditGraph: sensitive tag count does not match node count");
    if (labels.size() != n) throw Error("CreditGraph: label count does not match node count");
    if (!features.allFinite()) throw Error("CreditGraph: feature matrix has non-finite entries");
    for (std::uint8_t t : sensitive)
      if (t > 1) throw Error("CreditGraph: sensitive tag out of range");
    for (std::uint8_t l : labels)
      if (l > 1) throw Error("CreditGraph: label out of range");
    auto index = id_index();
    if (index.size() != n) throw Error("CreditGraph: duplicate node ids");
    for (std::size_t i = 1; i < edges.size(); ++i)
      if (!(edges[i - 1] < edges[i])) throw Error("CreditGraph: edges not sorted and unique");
    for (const Edge& e : edges) {
      if (e.a >= e.b) throw Error("CreditGraph: edge not orientation-normalized or self-loop");
      if (!index.count(e.a) || !index.count(e.b)) throw Error("CreditGraph: edge references unknown node id");
    }
  }
};

/// Group/label tallies of a graph. `over`/`under` are the larger and
/// smaller group sizes; a tie resolves the overrepresented tag to 0.
struct BalanceCounts {
  std::int64_t total = 0;                       // X
  std::int64_t over = 0;                        // O
  std::int64_t under = 0;                       // U
  std::uint8_t over_tag = 0;                    // which tag value O refers to
  std::int64_t good = 0;                        // G
  std::int64_t bad = 0;                         // B
  std::array<std::array<std::int64_t, 2>, 2> cell{}; // cell[tag][label]

  std::uint8_t under_tag() const { return static_cast<std::uint8_t>(1 - over_tag); }

  std::int64_t group_size(std::uint8_t tag) const { return cell[tag][kBad] + cell[tag][kGood]; }

  void validate() const {
    if (over + under != total) throw Error("BalanceCounts: O + U != X");
    if (good + bad != total) throw Error("BalanceCounts: G + B != X");
    if (over < under) throw Error("BalanceCounts: O smaller than U");
    std::int64_t cells = 0;
    for (int t = 0; t < 2; ++t)
      for (int l = 0; l < 2; ++l) cells += cell[t][l];
    if (cells != total) throw Error("BalanceCounts: cells do not sum to X");
    if (cell[0][kGood] + cell[1][kGood] != good || cell[0][kBad] + cell[1][kBad] != bad)
      throw Error("BalanceCounts: cells do not reconcile with G/B");
    if (group_size(over_tag) != over || group_size(under_tag()) != under)
      throw Error("BalanceCounts: cells do not reconcile with O/U");
  }
};

inline BalanceCounts group_counts(const CreditGraph& g) {
  BalanceCounts c;
  c.total = static_cast<std::int64_t>(g.node_count());
  for (std::size_t i = 0; i < g.node_count(); ++i) ++c.cell[g.sensitive[i]][g.labels[i]];
  c.good = c.cell[0][kGood] + c.cell[1][kGood];
  c.bad = c.cell[0][kBad] + c.cell[1][kBad];
  const std::int64_t size0 = c.group_size(0);
  const std::int64_t size1 = c.group_size(1);
  c.over_tag = size1 > size0 ? 1 : 0;
  c.over = std::max(size0, size1);
  c.under = std::min(size0, size1);
  return c;
}

/// Normalizes an arbitrary undirected edge set: orients each pair low-high,
/// sorts, removes duplicates. Self-loops are rejected.
inline std::vector<Edge> normalize_edges(std::vector<Edge> edges) {
  for (Edge& e : edges) {
    if (e.a == e.b) throw Error("normalize_edges: self-loop");
    if (e.a > e.b) std::swap(e.a, e.b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

enum class DistanceMetric { Euclidean, Cosine };

inline DistanceMetric parse_metric(const std::string& name) {
  if (name == "euclidean") return DistanceMetric::Euclidean;
  if (name == "cosine") return DistanceMetric::Cosine;
  throw Error("unknown distance metric: " + name);
}

inline std::string metric_name(DistanceMetric m) {
  return m == DistanceMetric::Euclidean ? "euclidean" : "cosine";
}

/// Symmetrized k-nearest-neighbor edges over the scaled feature rows.
/// Each node links to its k nearest others; the union of the directed
/// relations is normalized into an undirected edge set. Distance ties
/// break toward the lower node id, which makes the result deterministic.
inline std::vector<Edge> build_knn_edges(const CreditGraph& g, int k,
                                         DistanceMetric metric = DistanceMetric::Euclidean) {
  const std::size_t n = g.node_count();
  if (k <= 0) throw Error("build_knn_edges: k must be positive");
  if (static_cast<std::size_t>(k) >= n) throw Error("build_knn_edges: k must be smaller than the node count");

  Eigen::VectorXd norms;
  if (metric == DistanceMetric::Cosine) norms = g.features.rowwise().norm();

  std::vector<Edge> directed;
  directed.reserve(n * static_cast<std::size_t>(k));
  std::vector<std::pair<double, NodeId>> cand;
  cand.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double d;
      if (metric == DistanceMetric::Euclidean) {
        d = (g.features.row(i) - g.features.row(j)).norm();
      } else {
        const double denom = norms(static_cast<Eigen::Index>(i)) * norms(static_cast<Eigen::Index>(j));
        // A zero-norm row has no direction; treat it as maximally distant.
        d = denom > 0.0 ? 1.0 - g.features.row(i).dot(g.features.row(j)) / denom : 1.0;
      }
      cand.emplace_back(d, g.node_ids[j]);
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int t = 0; t < k; ++t) {
      const NodeId self = g.node_ids[i];
      const NodeId other = cand[static_cast<std::size_t>(t)].second;
      directed.push_back(self < other ? Edge{self, other} : Edge{other, self});
    }
  }
  return normalize_edges(std::move(directed));
}

/// Subgraph induced by `keep`: rows, tags and labels restricted to the kept
/// ids (in original row order), edges restricted to pairs with both
/// endpoints kept. Original node ids are preserved.
inline CreditGraph induced_subgraph(const CreditGraph& g, const std::vector<NodeId>& keep) {
  auto index = g.id_index();
  std::unordered_set<NodeId> keep_set;
  keep_set.reserve(keep.size());
  for (NodeId id : keep) {
    if (!index.count(id)) throw Error("induced_subgraph: unknown node id " + std::to_string(id));
    keep_set.insert(id);
  }

  CreditGraph out;
  out.columns = g.columns;
  out.group_names = g.group_names;
  std::vector<std::size_t> rows;
  rows.reserve(keep_set.size());
  for (std::size_t i = 0; i < g.node_count(); ++i)
    if (keep_set.count(g.node_ids[i])) rows.push_back(i);

  out.features.resize(static_cast<Eigen::Index>(rows.size()), g.features.cols());
  out.sensitive.reserve(rows.size());
  out.labels.reserve(rows.size());
  out.node_ids.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.features.row(static_cast<Eigen::Index>(r)) = g.features.row(static_cast<Eigen::Index>(rows[r]));
    out.sensitive.push_back(g.sensitive[rows[r]]);
    out.labels.push_back(g.labels[rows[r]]);
    out.node_ids.push_back(g.node_ids[rows[r]]);
  }
  for (const Edge& e : g.edges)
    if (keep_set.count(e.a) && keep_set.count(e.b)) out.edges.push_back(e);
  return out;
}

} // namespace fairprep
