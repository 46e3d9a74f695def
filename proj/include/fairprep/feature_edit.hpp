#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <vector>

#include "fairprep/graph.hpp"
#include "fairprep/rng.hpp"

namespace fairprep {

/// Number of overrepresented-group nodes whose tag must flip to reach an
/// even split: O - X/2.
inline std::int64_t compute_nc(const BalanceCounts& c) {
  if (c.total % 2 != 0)
    throw Error("compute_nc: node count " + std::to_string(c.total) +
                " is odd; an even split is unreachable by tag flips");
  if (c.over < c.total / 2)
    throw Error("compute_nc: overrepresented group smaller than X/2; group roles are inverted");
  return c.over - c.total / 2;
}

/// Joint rebalance count over group and label: |G - X/4| + |B - X/4|,
/// evaluated exactly as written on the dataset-wide good/bad totals.
inline std::int64_t compute_nc2(const BalanceCounts& c) {
  if (c.total % 4 != 0)
    throw Error("compute_nc2: node count " + std::to_string(c.total) + " is not divisible by 4");
  const std::int64_t quarter = c.total / 4;
  return std::llabs(c.good - quarter) + std::llabs(c.bad - quarter);
}

/// Flips the sensitive tag of exactly NC uniformly chosen overrepresented
/// nodes, leaving features, labels and edges untouched. The result has
/// X/2 nodes in each group. A balanced input comes back unchanged.
inline CreditGraph reassign_sensitive_random(const CreditGraph& g, std::uint64_t seed) {
  const BalanceCounts c = group_counts(g);
  const std::int64_t nc = compute_nc(c);
  CreditGraph out = g;
  if (nc == 0) return out;

  std::vector<std::size_t> over_rows;
  for (std::size_t i = 0; i < g.node_count(); ++i)
    if (g.sensitive[i] == c.over_tag) over_rows.push_back(i);

  Rng rng(seed);
  for (std::size_t pick : rng.sample_without_replacement(over_rows.size(), static_cast<std::size_t>(nc)))
    out.sensitive[over_rows[pick]] = c.under_tag();
  return out;
}

namespace detail {

/// Max units shippable from surplus to deficit cells over single-field
/// moves (tag flip or label flip, never both). Edmonds-Karp on a network
/// of at most ten vertices; everything integral and deterministic.
struct CellFlowSolver {
  // vertices: 0 = source, 1..4 = cells as surplus, 5..8 = cells as deficit, 9 = sink
  static constexpr int kV = 10;
  std::array<std::array<std::int64_t, kV>, kV> cap{};

  static int cell_vertex(int tag, int label, bool deficit_side) {
    return 1 + (deficit_side ? 4 : 0) + tag * 2 + label;
  }

  void add(int from, int to, std::int64_t c) { cap[from][to] += c; }

  std::int64_t max_flow() {
    std::int64_t total = 0;
    while (true) {
      std::array<int, kV> parent;
      parent.fill(-1);
      parent[0] = 0;
      std::deque<int> queue{0};
      while (!queue.empty() && parent[kV - 1] == -1) {
        const int u = queue.front();
        queue.pop_front();
        for (int v = 0; v < kV; ++v) {
          if (parent[v] == -1 && cap[u][v] > 0) {
            parent[v] = u;
            queue.push_back(v);
          }
        }
      }
      if (parent[kV - 1] == -1) return total;
      std::int64_t bottleneck = std::numeric_limits<std::int64_t>::max();
      for (int v = kV - 1; v != 0; v = parent[v]) bottleneck = std::min(bottleneck, cap[parent[v]][v]);
      for (int v = kV - 1; v != 0; v = parent[v]) {
        cap[parent[v]][v] -= bottleneck;
        cap[v][parent[v]] += bottleneck;
      }
      total += bottleneck;
    }
  }
};

struct CellShipment {
  int from_tag, from_label;
  int to_tag, to_label;
  std::int64_t count;
};

/// Minimal-edit shipment plan moving every cell to exactly X/4 nodes.
/// Total field flips are minimized by routing as many units as possible
/// through single-flip moves and only the remainder through double flips.
inline std::vector<CellShipment> plan_equal_cells(const BalanceCounts& c) {
  const std::int64_t t = c.total / 4;
  std::array<std::array<std::int64_t, 2>, 2> surplus{}, deficit{};
  for (int tag = 0; tag < 2; ++tag) {
    for (int label = 0; label < 2; ++label) {
      const std::int64_t d = c.cell[tag][label] - t;
      if (d > 0) surplus[tag][label] = d;
      if (d < 0) deficit[tag][label] = -d;
    }
  }

  CellFlowSolver solver;
  for (int tag = 0; tag < 2; ++tag) {
    for (int label = 0; label < 2; ++label) {
      if (surplus[tag][label] > 0)
        solver.add(0, CellFlowSolver::cell_vertex(tag, label, false), surplus[tag][label]);
      if (deficit[tag][label] > 0)
        solver.add(CellFlowSolver::cell_vertex(tag, label, true), CellFlowSolver::kV - 1,
                   deficit[tag][label]);
      // single-flip neighbors
      solver.add(CellFlowSolver::cell_vertex(tag, label, false),
                 CellFlowSolver::cell_vertex(1 - tag, label, true),
                 std::numeric_limits<std::int64_t>::max() / 4);
      solver.add(CellFlowSolver::cell_vertex(tag, label, false),
                 CellFlowSolver::cell_vertex(tag, 1 - label, true),
                 std::numeric_limits<std::int64_t>::max() / 4);
    }
  }
  solver.max_flow();

  std::vector<CellShipment> plan;
  std::array<std::array<std::int64_t, 2>, 2> left_surplus = surplus, left_deficit = deficit;
  for (int tag = 0; tag < 2; ++tag) {
    for (int label = 0; label < 2; ++label) {
      for (auto [to_tag, to_label] : {std::pair{1 - tag, label}, std::pair{tag, 1 - label}}) {
        // shipped = reverse residual on the surplus->deficit arc
        const std::int64_t shipped =
            solver.cap[CellFlowSolver::cell_vertex(to_tag, to_label, true)]
                      [CellFlowSolver::cell_vertex(tag, label, false)];
        if (shipped > 0) {
          plan.push_back({tag, label, to_tag, to_label, shipped});
          left_surplus[tag][label] -= shipped;
          left_deficit[to_tag][to_label] -= shipped;
        }
      }
    }
  }
  // whatever remains can only pair up diagonally
  for (int tag = 0; tag < 2; ++tag) {
    for (int label = 0; label < 2; ++label) {
      if (left_surplus[tag][label] > 0) {
        const std::int64_t amount = left_surplus[tag][label];
        plan.push_back({tag, label, 1 - tag, 1 - label, amount});
        left_deficit[1 - tag][1 - label] -= amount;
        left_surplus[tag][label] = 0;
      }
    }
  }
  for (int tag = 0; tag < 2; ++tag)
    for (int label = 0; label < 2; ++label)
      if (left_deficit[tag][label] != 0) throw Error("plan_equal_cells: unbalanced shipment plan");
  return plan;
}

} // namespace detail

/// Rewrites sensitive tags and labels so every (group, label) cell holds
/// exactly X/4 nodes, flipping as few fields as possible; the nodes to
/// rewrite are drawn uniformly per donor cell. Features and edges are
/// untouched.
inline CreditGraph reassign_sensitive_and_label(const CreditGraph& g, std::uint64_t seed) {
  const BalanceCounts c = group_counts(g);
  if (c.total % 4 != 0)
    throw Error("reassign_sensitive_and_label: node count " + std::to_string(c.total) +
                " is not divisible by 4");
  const auto plan = detail::plan_equal_cells(c);

  std::array<std::array<std::vector<std::size_t>, 2>, 2> pool;
  for (std::size_t i = 0; i < g.node_count(); ++i) pool[g.sensitive[i]][g.labels[i]].push_back(i);

  CreditGraph out = g;
  Rng rng(seed);
  for (const auto& ship : plan) {
    auto& donors = pool[ship.from_tag][ship.from_label];
    const auto picks = rng.sample_without_replacement(donors.size(), static_cast<std::size_t>(ship.count));
    std::vector<bool> taken(donors.size(), false);
    for (std::size_t p : picks) {
      const std::size_t row = donors[p];
      out.sensitive[row] = static_cast<std::uint8_t>(ship.to_tag);
      out.labels[row] = static_cast<std::uint8_t>(ship.to_label);
      taken[p] = true;
    }
    std::vector<std::size_t> rest;
    rest.reserve(donors.size() - picks.size());
    for (std::size_t j = 0; j < donors.size(); ++j)
      if (!taken[j]) rest.push_back(donors[j]);
    donors = std::move(rest);
  }
  return out;
}

/// Field flips (tag + label changes, counted separately) between two
/// equally sized graphs. Convenience for provenance records.
inline std::int64_t count_field_flips(const CreditGraph& before, const CreditGraph& after) {
  if (before.node_count() != after.node_count())
    throw Error("count_field_flips: node counts differ");
  std::int64_t flips = 0;
  for (std::size_t i = 0; i < before.node_count(); ++i) {
    if (before.sensitive[i] != after.sensitive[i]) ++flips;
    if (before.labels[i] != after.labels[i]) ++flips;
  }
  return flips;
}

} // namespace fairprep
