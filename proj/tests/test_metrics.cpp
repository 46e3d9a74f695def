#include <catch_amalgamated.hpp>

#include "fairprep/metrics.hpp"
#include "fairprep/rng.hpp"

using namespace fairprep;

namespace {

struct Oracle {
  // brute-force confusion table per group, computed with plain loops
  std::int64_t size[2] = {0, 0};
  std::int64_t pred_pos[2] = {0, 0};
  std::int64_t tp[2] = {0, 0};
  std::int64_t fp[2] = {0, 0};
  std::int64_t cp[2] = {0, 0};
  std::int64_t cn[2] = {0, 0};
  std::int64_t correct[2] = {0, 0};

  Oracle(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& label,
         const std::vector<std::uint8_t>& group) {
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const int g = group[i];
      size[g]++;
      if (pred[i] == kGood) pred_pos[g]++;
      if (label[i] == kGood) cp[g]++;
      if (label[i] == kBad) cn[g]++;
      if (pred[i] == kGood && label[i] == kGood) tp[g]++;
      if (pred[i] == kGood && label[i] == kBad) fp[g]++;
      if (pred[i] == label[i]) correct[g]++;
    }
  }
};

} // namespace

TEST_CASE("statistical parity hand cases", "[metrics]") {
  SECTION("all predictions positive gives zero delta") {
    std::vector<std::uint8_t> pred(10, kGood);
    std::vector<std::uint8_t> group = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    const auto m = statistical_parity(pred, group);
    CHECK(*m.group[0] == 1.0);
    CHECK(*m.group[1] == 1.0);
    CHECK(*m.delta() == 0.0);
  }
  SECTION("hand-built 10-node case: 4/6 vs 1/4") {
    std::vector<std::uint8_t> pred = {1, 1, 1, 1, 0, 0, 1, 0, 0, 0};
    std::vector<std::uint8_t> group = {0, 0, 0, 0, 0, 0, 1, 1, 1, 1};
    const auto m = statistical_parity(pred, group);
    CHECK(*m.group[0] == Catch::Approx(4.0 / 6.0));
    CHECK(*m.group[1] == Catch::Approx(0.25));
    CHECK(*m.delta() == Catch::Approx(4.0 / 6.0 - 0.25)); // ~0.417
  }
  SECTION("empty group") {
    std::vector<std::uint8_t> pred = {1, 0};
    std::vector<std::uint8_t> group = {0, 0};
    CHECK_THROWS_WITH(statistical_parity(pred, group),
                      Catch::Matchers::ContainsSubstring("empty group"));
  }
}

TEST_CASE("equal opportunity hand cases", "[metrics]") {
  SECTION("perfect classifier") {
    std::vector<std::uint8_t> label = {1, 0, 1, 0, 1, 0};
    std::vector<std::uint8_t> group = {0, 0, 0, 1, 1, 1};
    const auto m = equal_opportunity(label, label, group);
    CHECK(*m.group[0] == 1.0);
    CHECK(*m.group[1] == 1.0);
    CHECK(*m.delta() == 0.0);
  }
  SECTION("TP/CP of 3/4 vs 1/2") {
    std::vector<std::uint8_t> pred = {1, 1, 1, 0, 1, 0};
    std::vector<std::uint8_t> label = {1, 1, 1, 1, 1, 1};
    std::vector<std::uint8_t> group = {0, 0, 0, 0, 1, 1};
    const auto m = equal_opportunity(pred, label, group);
    CHECK(*m.group[0] == Catch::Approx(0.75));
    CHECK(*m.group[1] == Catch::Approx(0.5));
    CHECK(*m.delta() == Catch::Approx(0.25));
  }
  SECTION("group without condition positives is undefined, not zero") {
    std::vector<std::uint8_t> pred = {1, 0, 1, 1};
    std::vector<std::uint8_t> label = {1, 1, 0, 0};
    std::vector<std::uint8_t> group = {0, 0, 1, 1};
    const auto m = equal_opportunity(pred, label, group);
    CHECK(m.group[0].has_value());
    CHECK(!m.group[1].has_value());
    CHECK(!m.delta().has_value());
    CHECK(!m.defined());
  }
}

TEST_CASE("false positive rate hand cases", "[metrics]") {
  SECTION("never-positive classifier has zero FPRs") {
    std::vector<std::uint8_t> pred(8, kBad);
    std::vector<std::uint8_t> label = {0, 0, 1, 0, 0, 0, 1, 0};
    std::vector<std::uint8_t> group = {0, 0, 0, 0, 1, 1, 1, 1};
    const auto m = fpr_difference(pred, label, group);
    CHECK(*m.group[0] == 0.0);
    CHECK(*m.group[1] == 0.0);
    CHECK(*m.delta() == 0.0);
  }
  SECTION("FP/CN of 2/5 vs 1/5") {
    std::vector<std::uint8_t> pred = {1, 1, 0, 0, 0, 1, 0, 0, 0, 0};
    std::vector<std::uint8_t> label(10, kBad);
    std::vector<std::uint8_t> group = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    const auto m = fpr_difference(pred, label, group);
    CHECK(*m.group[0] == Catch::Approx(0.4));
    CHECK(*m.group[1] == Catch::Approx(0.2));
    CHECK(*m.delta() == Catch::Approx(0.2));
  }
  SECTION("no condition negatives flags undefined") {
    std::vector<std::uint8_t> pred = {1, 1, 1, 1};
    std::vector<std::uint8_t> label = {1, 1, 0, 1};
    std::vector<std::uint8_t> group = {0, 0, 1, 1};
    const auto m = fpr_difference(pred, label, group);
    CHECK(!m.group[0].has_value());
    CHECK(m.group[1].has_value());
    CHECK(!m.defined());
  }
}

TEST_CASE("accuracy hand cases", "[metrics]") {
  std::vector<std::uint8_t> pred = {1, 1, 0, 0, 1, 0, 1, 1, 0, 1};
  std::vector<std::uint8_t> label = {1, 1, 0, 1, 1, 0, 0, 1, 1, 1};
  std::vector<std::uint8_t> group = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const auto a = accuracy(pred, label, group);
  CHECK(a.overall == Catch::Approx(0.7));
  CHECK(*a.per_group.group[0] == Catch::Approx(0.8));
  CHECK(*a.per_group.group[1] == Catch::Approx(0.6));

  std::vector<std::uint8_t> all = {1, 0, 1};
  std::vector<std::uint8_t> grp = {0, 1, 0};
  CHECK(accuracy(all, all, grp).overall == 1.0);
  const std::vector<std::uint8_t> none;
  CHECK_THROWS_WITH(accuracy(none, none, none), Catch::Matchers::ContainsSubstring("empty"));
}

TEST_CASE("all four metrics equal the brute-force oracle on 1000 random instances", "[metrics]") {
  Rng rng(2026);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(29);
    std::vector<std::uint8_t> pred(n), label(n), group(n);
    bool has[2] = {false, false};
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = static_cast<std::uint8_t>(rng.below(2));
      label[i] = static_cast<std::uint8_t>(rng.below(2));
      group[i] = static_cast<std::uint8_t>(rng.below(2));
      has[group[i]] = true;
    }
    if (!has[0] || !has[1]) {
      group[0] = 0;
      group[n - 1] = 1;
    }
    const Oracle o(pred, label, group);

    const auto parity = statistical_parity(pred, group);
    for (int g = 0; g < 2; ++g)
      REQUIRE(*parity.group[g] == static_cast<double>(o.pred_pos[g]) / static_cast<double>(o.size[g]));

    const auto eo = equal_opportunity(pred, label, group);
    for (int g = 0; g < 2; ++g) {
      if (o.cp[g] == 0) {
        REQUIRE(!eo.group[g].has_value());
      } else {
        REQUIRE(*eo.group[g] == static_cast<double>(o.tp[g]) / static_cast<double>(o.cp[g]));
      }
    }

    const auto fpr = fpr_difference(pred, label, group);
    for (int g = 0; g < 2; ++g) {
      if (o.cn[g] == 0) {
        REQUIRE(!fpr.group[g].has_value());
      } else {
        REQUIRE(*fpr.group[g] == static_cast<double>(o.fp[g]) / static_cast<double>(o.cn[g]));
      }
    }

    const auto acc = accuracy(pred, label, group);
    REQUIRE(acc.overall ==
            static_cast<double>(o.correct[0] + o.correct[1]) / static_cast<double>(n));
    for (int g = 0; g < 2; ++g)
      REQUIRE(*acc.per_group.group[g] ==
              static_cast<double>(o.correct[g]) / static_cast<double>(o.size[g]));
  }
}

TEST_CASE("deltas are invariant to swapping which group is A or B", "[metrics]") {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 4 + rng.below(27);
    std::vector<std::uint8_t> pred(n), label(n), group(n), flipped(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = static_cast<std::uint8_t>(rng.below(2));
      label[i] = static_cast<std::uint8_t>(rng.below(2));
      group[i] = static_cast<std::uint8_t>(rng.below(2));
      flipped[i] = static_cast<std::uint8_t>(1 - group[i]);
    }
    group[0] = 0;
    group[1] = 1;
    flipped[0] = 1;
    flipped[1] = 0;

    const auto pa = statistical_parity(pred, group).delta();
    const auto pb = statistical_parity(pred, flipped).delta();
    REQUIRE(pa == pb);
    const auto ea = equal_opportunity(pred, label, group).delta();
    const auto eb = equal_opportunity(pred, label, flipped).delta();
    REQUIRE(ea == eb);
    const auto fa = fpr_difference(pred, label, group).delta();
    const auto fb = fpr_difference(pred, label, flipped).delta();
    REQUIRE(fa == fb);
  }
}

TEST_CASE("mirror-symmetric predictions give exactly zero deltas", "[metrics]") {
  // group 1 is a literal mirror of group 0
  std::vector<std::uint8_t> pred, label, group;
  Rng rng(12);
  for (int i = 0; i < 40; ++i) {
    const auto p = static_cast<std::uint8_t>(rng.below(2));
    const auto l = static_cast<std::uint8_t>(rng.below(2));
    pred.push_back(p);
    label.push_back(l);
    group.push_back(0);
    pred.push_back(p);
    label.push_back(l);
    group.push_back(1);
  }
  CHECK(*statistical_parity(pred, group).delta() == 0.0);
  CHECK(*equal_opportunity(pred, label, group).delta() == 0.0);
  CHECK(*fpr_difference(pred, label, group).delta() == 0.0);
}

TEST_CASE("aggregate_repeats means, deviations and undefined handling", "[metrics]") {
  auto make_report = [](double pa, double pb) {
    FairnessReport r;
    r.parity.group[0] = pa;
    r.parity.group[1] = pb;
    r.opportunity.group[0] = 0.9;
    r.opportunity.group[1] = 0.8;
    r.fpr.group[0] = 0.2;
    r.fpr.group[1] = 0.1;
    r.acc.overall = 0.75;
    r.acc.per_group.group[0] = 0.7;
    r.acc.per_group.group[1] = 0.8;
    return r;
  };

  SECTION("identical reports have zero std everywhere") {
    const auto agg = aggregate_repeats({make_report(0.6, 0.4), make_report(0.6, 0.4), make_report(0.6, 0.4)});
    CHECK(*agg.parity.std_a == 0.0);
    CHECK(*agg.parity.std_delta == 0.0);
    CHECK(agg.accuracy_std == 0.0);
    CHECK(*agg.parity.mean_delta == Catch::Approx(0.2));
  }
  SECTION("deltas 0.1/0.2/0.3 aggregate to mean 0.2, std ~0.0816") {
    const auto agg = aggregate_repeats({make_report(0.5, 0.4), make_report(0.6, 0.4), make_report(0.7, 0.4)});
    CHECK(*agg.parity.mean_delta == Catch::Approx(0.2));
    CHECK(*agg.parity.std_delta == Catch::Approx(0.081649658).epsilon(1e-6)); // population std
  }
  SECTION("single report aggregates to itself with zero std") {
    const auto agg = aggregate_repeats({make_report(0.55, 0.35)});
    CHECK(*agg.parity.mean_delta == Catch::Approx(0.2));
    CHECK(*agg.parity.std_delta == 0.0);
    CHECK(agg.runs == 1);
  }
  SECTION("undefined runs are excluded and counted") {
    auto r1 = make_report(0.5, 0.4);
    auto r2 = make_report(0.7, 0.4);
    r2.opportunity.group[1].reset();
    const auto agg = aggregate_repeats({r1, r2});
    CHECK(agg.opportunity.undefined_runs == 1);
    CHECK(*agg.opportunity.mean_delta == Catch::Approx(0.1));
    CHECK(agg.parity.undefined_runs == 0);
  }
  SECTION("empty input is an error") {
    CHECK_THROWS_WITH(aggregate_repeats({}), Catch::Matchers::ContainsSubstring("no reports"));
  }
}
