#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "fairprep/graph.hpp"
#include "fairprep/rng.hpp"

namespace fairprep {

enum class SamplingMethod { Random, Stratified, Weighted };

inline SamplingMethod parse_sampling_method(const std::string& name) {
  if (name == "random") return SamplingMethod::Random;
  if (name == "stratified") return SamplingMethod::Stratified;
  if (name == "weighted") return SamplingMethod::Weighted;
  throw Error("unknown sampling method: " + name);
}

/// How to downsample. The target rule is fixed to the default the balance
/// methods share: shrink the overrepresented group to the underrepresented
/// group's size, keeping the latter whole.
struct SamplingSpec {
  SamplingMethod method = SamplingMethod::Random;
  std::uint64_t seed = 0;
};

namespace detail {

/// Row indices of each (tag, label) cell, in node order.
inline std::array<std::array<std::vector<std::size_t>, 2>, 2> cell_rows(const CreditGraph& g) {
  std::array<std::array<std::vector<std::size_t>, 2>, 2> rows;
  for (std::size_t i = 0; i < g.node_count(); ++i) rows[g.sensitive[i]][g.labels[i]].push_back(i);
  return rows;
}

inline std::vector<NodeId> sorted_ids(std::vector<NodeId> ids) {
  std::sort(ids.begin(), ids.end());
  return ids;
}

} // namespace detail

/// Keeps every underrepresented-group node and a uniform subset of the
/// overrepresented group of matching size, drawn without replacement.
inline std::vector<NodeId> random_downsample(const CreditGraph& g, const SamplingSpec& spec) {
  if (spec.method != SamplingMethod::Random) throw Error("random_downsample: spec.method must be random");
  const BalanceCounts c = group_counts(g);
  if (c.under > c.over) throw Error("random_downsample: target exceeds group size");

  std::vector<std::size_t> over_rows;
  std::vector<NodeId> keep;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (g.sensitive[i] == c.over_tag && c.over != c.under) {
      over_rows.push_back(i);
    } else {
      keep.push_back(g.node_ids[i]);
    }
  }
  if (c.over == c.under) return detail::sorted_ids(std::move(keep)); // already balanced

  Rng rng(spec.seed);
  for (std::size_t pick : rng.sample_without_replacement(over_rows.size(), static_cast<std::size_t>(c.under)))
    keep.push_back(g.node_ids[over_rows[pick]]);
  return detail::sorted_ids(std::move(keep));
}

/// Per (group, label) cell, keeps exactly the size of the smaller group's
/// cell from both groups, sampled uniformly within each cell. Requires every
/// overrepresented cell to be at least as large as its counterpart.
inline std::vector<NodeId> stratified_downsample(const CreditGraph& g, const SamplingSpec& spec) {
  if (spec.method != SamplingMethod::Stratified)
    throw Error("stratified_downsample: spec.method must be stratified");
  const BalanceCounts c = group_counts(g);
  const auto rows = detail::cell_rows(g);
  const std::uint8_t over = c.over_tag;
  const std::uint8_t under = c.under_tag();
  for (int label = 0; label < 2; ++label) {
    if (c.cell[over][label] < c.cell[under][label])
      throw Error("stratified_downsample: overrepresented cell for label " +
                  std::string(label == kGood ? "good" : "bad") +
                  " is smaller than its underrepresented counterpart");
  }

  Rng rng(spec.seed);
  std::vector<NodeId> keep;
  for (int label : {int(kBad), int(kGood)}) {
    const std::size_t m = rows[under][label].size();
    for (std::size_t r : rows[under][label]) keep.push_back(g.node_ids[r]);
    const auto& pool = rows[over][label];
    if (pool.size() == m) {
      for (std::size_t r : pool) keep.push_back(g.node_ids[r]);
    } else {
      for (std::size_t pick : rng.sample_without_replacement(pool.size(), m))
        keep.push_back(g.node_ids[pool[pick]]);
    }
  }
  return detail::sorted_ids(std::move(keep));
}

/// Downsamples the overrepresented group to the underrepresented group's
/// size by weighted draws without replacement, weighting each node by the
/// inverse size of its (group, label) cell so minority-label nodes are
/// favored. The underrepresented group is kept whole.
inline std::vector<NodeId> weighted_downsample(const CreditGraph& g, const SamplingSpec& spec) {
  if (spec.method != SamplingMethod::Weighted) throw Error("weighted_downsample: spec.method must be weighted");
  const BalanceCounts c = group_counts(g);
  if (c.under > c.over) throw Error("weighted_downsample: target exceeds group size");

  std::vector<std::size_t> over_rows;
  std::vector<NodeId> keep;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (g.sensitive[i] == c.over_tag && c.over != c.under) {
      over_rows.push_back(i);
    } else {
      keep.push_back(g.node_ids[i]);
    }
  }
  if (c.over == c.under) return detail::sorted_ids(std::move(keep));

  std::vector<double> weights(over_rows.size());
  for (std::size_t j = 0; j < over_rows.size(); ++j) {
    const std::size_t i = over_rows[j];
    weights[j] = 1.0 / static_cast<double>(c.cell[g.sensitive[i]][g.labels[i]]);
  }
  Rng rng(spec.seed);
  for (std::size_t pick : rng.weighted_sample_without_replacement(weights, static_cast<std::size_t>(c.under)))
    keep.push_back(g.node_ids[over_rows[pick]]);
  return detail::sorted_ids(std::move(keep));
}

inline std::vector<NodeId> downsample(const CreditGraph& g, const SamplingSpec& spec) {
  switch (spec.method) {
    case SamplingMethod::Random: return random_downsample(g, spec);
    case SamplingMethod::Stratified: return stratified_downsample(g, spec);
    case SamplingMethod::Weighted: return weighted_downsample(g, spec);
  }
  throw Error("downsample: invalid method");
}

} // namespace fairprep
