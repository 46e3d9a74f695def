#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairprep/error.hpp"
#include "fairprep/graph.hpp"

namespace fairprep {

/// Per-group confusion tallies. "Positive" is the favorable outcome: a
/// good-customer prediction.
struct GroupOutcome {
  std::int64_t size = 0;
  std::int64_t predicted_positive = 0;
  std::int64_t true_positive = 0;
  std::int64_t false_positive = 0;
  std::int64_t condition_positive = 0;
  std::int64_t condition_negative = 0;
  std::int64_t correct = 0;
};

inline std::array<GroupOutcome, 2> tally_groups(std::span<const std::uint8_t> predicted,
                                                std::span<const std::uint8_t> labels,
                                                std::span<const std::uint8_t> groups) {
  if (predicted.size() != labels.size() || predicted.size() != groups.size())
    throw Error("tally_groups: input arrays differ in length");
  std::array<GroupOutcome, 2> out{};
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    GroupOutcome& o = out[groups[i]];
    ++o.size;
    if (predicted[i] == kGood) ++o.predicted_positive;
    if (labels[i] == kGood) {
      ++o.condition_positive;
      if (predicted[i] == kGood) ++o.true_positive;
    } else {
      ++o.condition_negative;
      if (predicted[i] == kGood) ++o.false_positive;
    }
    if (predicted[i] == labels[i]) ++o.correct;
  }
  return out;
}

/// One fairness metric evaluated per group. A group with an empty
/// denominator leaves its value (and the delta) unset rather than zero.
struct MetricValue {
  std::optional<double> group[2];

  std::optional<double> delta() const {
    if (group[0] && group[1]) return std::abs(*group[0] - *group[1]);
    return std::nullopt;
  }
  bool defined() const { return group[0] && group[1]; }
};

/// P(predicted positive | group), both groups and the absolute gap.
inline MetricValue statistical_parity(std::span<const std::uint8_t> predicted,
                                      std::span<const std::uint8_t> groups) {
  if (predicted.size() != groups.size())
    throw Error("statistical_parity: input arrays differ in length");
  std::int64_t size[2] = {0, 0}, positive[2] = {0, 0};
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    ++size[groups[i]];
    if (predicted[i] == kGood) ++positive[groups[i]];
  }
  if (size[0] == 0 || size[1] == 0) throw Error("statistical_parity: empty group");
  MetricValue m;
  for (int g = 0; g < 2; ++g)
    m.group[g] = static_cast<double>(positive[g]) / static_cast<double>(size[g]);
  return m;
}

/// True positive rate per group. Undefined for a group without condition
/// positives.
inline MetricValue equal_opportunity(std::span<const std::uint8_t> predicted,
                                     std::span<const std::uint8_t> labels,
                                     std::span<const std::uint8_t> groups) {
  const auto t = tally_groups(predicted, labels, groups);
  if (t[0].size == 0 || t[1].size == 0) throw Error("equal_opportunity: empty group");
  MetricValue m;
  for (int g = 0; g < 2; ++g)
    if (t[g].condition_positive > 0)
      m.group[g] = static_cast<double>(t[g].true_positive) / static_cast<double>(t[g].condition_positive);
  return m;
}

/// False positive rate per group. Undefined for a group without condition
/// negatives.
inline MetricValue fpr_difference(std::span<const std::uint8_t> predicted,
                                  std::span<const std::uint8_t> labels,
                                  std::span<const std::uint8_t> groups) {
  const auto t = tally_groups(predicted, labels, groups);
  if (t[0].size == 0 || t[1].size == 0) throw Error("fpr_difference: empty group");
  MetricValue m;
  for (int g = 0; g < 2; ++g)
    if (t[g].condition_negative > 0)
      m.group[g] = static_cast<double>(t[g].false_positive) / static_cast<double>(t[g].condition_negative);
  return m;
}

struct AccuracyValue {
  double overall = 0.0;
  MetricValue per_group;
};

inline AccuracyValue accuracy(std::span<const std::uint8_t> predicted,
                              std::span<const std::uint8_t> labels,
                              std::span<const std::uint8_t> groups) {
  if (predicted.empty()) throw Error("accuracy: empty prediction set");
  const auto t = tally_groups(predicted, labels, groups);
  AccuracyValue a;
  a.overall = static_cast<double>(t[0].correct + t[1].correct) / static_cast<double>(predicted.size());
  for (int g = 0; g < 2; ++g)
    if (t[g].size > 0)
      a.per_group.group[g] = static_cast<double>(t[g].correct) / static_cast<double>(t[g].size);
  return a;
}

/// All four metrics of one evaluation run. Group indices follow the
/// graph's tag order; deltas are absolute gaps, so the report is invariant
/// to which group is called A or B.
struct FairnessReport {
  MetricValue parity;
  MetricValue opportunity;
  MetricValue fpr;
  AccuracyValue acc;
  std::int64_t evaluated_nodes = 0;

  static FairnessReport compute(std::span<const std::uint8_t> predicted,
                                std::span<const std::uint8_t> labels,
                                std::span<const std::uint8_t> groups) {
    FairnessReport r;
    r.parity = statistical_parity(predicted, groups);
    r.opportunity = equal_opportunity(predicted, labels, groups);
    r.fpr = fpr_difference(predicted, labels, groups);
    r.acc = accuracy(predicted, labels, groups);
    r.evaluated_nodes = static_cast<std::int64_t>(predicted.size());
    return r;
  }
};

/// Mean and population standard deviation of a metric over repeats, with
/// undefined runs excluded and counted.
struct AggregatedValue {
  std::optional<double> mean_a, std_a;
  std::optional<double> mean_b, std_b;
  std::optional<double> mean_delta, std_delta;
  int undefined_runs = 0;
};

struct AggregatedReport {
  AggregatedValue parity, opportunity, fpr, accuracy_group;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  int runs = 0;
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  bool all_equal = true;
  for (double x : xs) all_equal = all_equal && x == xs.front();
  if (all_equal) return {xs.front(), 0.0}; // identical repeats: exactly zero spread
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / n)};
}

inline AggregatedValue aggregate_metric(const std::vector<FairnessReport>& reports,
                                        MetricValue FairnessReport::* field) {
  AggregatedValue out;
  std::vector<double> a, b, d;
  for (const auto& r : reports) {
    const MetricValue& m = r.*field;
    if (!m.defined()) {
      ++out.undefined_runs;
      continue;
    }
    a.push_back(*m.group[0]);
    b.push_back(*m.group[1]);
    d.push_back(*m.delta());
  }
  if (!a.empty()) {
    auto [ma, sa] = mean_std(a);
    auto [mb, sb] = mean_std(b);
    auto [md, sd] = mean_std(d);
    out.mean_a = ma;
    out.std_a = sa;
    out.mean_b = mb;
    out.std_b = sb;
    out.mean_delta = md;
    out.std_delta = sd;
  }
  return out;
}

} // namespace detail

/// Aggregates per-run reports. Deltas aggregate as the mean of per-run
/// deltas, not the delta of means.
inline AggregatedReport aggregate_repeats(const std::vector<FairnessReport>& reports) {
  if (reports.empty()) throw Error("aggregate_repeats: no reports");
  AggregatedReport out;
  out.runs = static_cast<int>(reports.size());
  out.parity = detail::aggregate_metric(reports, &FairnessReport::parity);
  out.opportunity = detail::aggregate_metric(reports, &FairnessReport::opportunity);
  out.fpr = detail::aggregate_metric(reports, &FairnessReport::fpr);

  std::vector<double> overall;
  std::vector<double> a, b;
  AggregatedValue group_acc;
  for (const auto& r : reports) {
    overall.push_back(r.acc.overall);
    if (r.acc.per_group.defined()) {
      a.push_back(*r.acc.per_group.group[0]);
      b.push_back(*r.acc.per_group.group[1]);
    } else {
      ++group_acc.undefined_runs;
    }
  }
  auto [mo, so] = detail::mean_std(overall);
  out.accuracy_mean = mo;
  out.accuracy_std = so;
  if (!a.empty()) {
    auto [ma, sa] = detail::mean_std(a);
    auto [mb, sb] = detail::mean_std(b);
    group_acc.mean_a = ma;
    group_acc.std_a = sa;
    group_acc.mean_b = mb;
    group_acc.std_b = sb;
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) d.push_back(std::abs(a[i] - b[i]));
    auto [md, sd] = detail::mean_std(d);
    group_acc.mean_delta = md;
    group_acc.std_delta = sd;
  }
  out.accuracy_group = group_acc;
  return out;
}

} // namespace fairprep
