#include <set>

#include <catch_amalgamated.hpp>

#include "fairprep/augment.hpp"
#include "support/generators.hpp"

using namespace fairprep;

namespace {

BalanceCounts counts_of(std::int64_t bad0, std::int64_t good0, std::int64_t bad1, std::int64_t good1) {
  Rng rng(50);
  return group_counts(testsupport::graph_with_cells(rng, bad0, good0, bad1, good1));
}

AugmentConfig small_config() {
  AugmentConfig cfg;
  cfg.autoencoder.epochs = 80;
  cfg.autoencoder.hidden = 6;
  cfg.autoencoder.latent = 3;
  cfg.gmm_components = 2;
  cfg.attach_k = 3;
  return cfg;
}

} // namespace

TEST_CASE("compute_na is the group-size gap", "[augment]") {
  CHECK(compute_na(counts_of(191, 499, 109, 201)) == 380);
  CHECK(compute_na(counts_of(5, 5, 5, 5)) == 0);
  CHECK(compute_na(counts_of(3, 4, 2, 1)) == 4); // O=7, U=3
  BalanceCounts inverted;
  inverted.over = 2;
  inverted.under = 5;
  CHECK_THROWS_WITH(compute_na(inverted), Catch::Matchers::ContainsSubstring("inverted"));
}

TEST_CASE("validity rules come from the data and snap categorical blocks", "[augment]") {
  Rng rng(3);
  auto g = testsupport::random_graph(rng, {.nodes = 12, .features = 2, .one_hot_block = true});
  const auto rules = ValidityRules::from_graph(g);
  REQUIRE(rules.continuous.size() == 2);
  REQUIRE(rules.categorical.size() == 1);
  CHECK(rules.categorical[0].width == 3);

  Eigen::RowVectorXd row(5);
  row << 0.5, 0.5, 0.2, 0.7, 0.4; // smeared one-hot
  Eigen::RowVectorXd snapped = row;
  rules.snap_categorical(snapped);
  CHECK(snapped(2) == 0.0);
  CHECK(snapped(3) == 1.0);
  CHECK(snapped(4) == 0.0);
  CHECK(rules.admissible(snapped));

  // narrow a continuous range until the row fails
  auto narrowed = rules;
  narrowed.restrict_continuous(0, 0.9, 1.0);
  CHECK(!narrowed.admissible(snapped));
}

TEST_CASE("validity rules reject never-seen categorical levels", "[augment]") {
  Rng rng(4);
  auto g = testsupport::random_graph(rng, {.nodes = 20, .features = 1, .one_hot_block = true});
  // erase level 2 from the data: move those nodes to level 0
  for (Eigen::Index i = 0; i < g.features.rows(); ++i) {
    if (g.features(i, 3) == 1.0) {
      g.features(i, 3) = 0.0;
      g.features(i, 1) = 1.0;
    }
  }
  const auto rules = ValidityRules::from_graph(g);
  Eigen::RowVectorXd row(4);
  row << 0.5, 0.1, 0.2, 0.9; // argmax lands on the unseen level
  Eigen::RowVectorXd snapped = row;
  rules.snap_categorical(snapped);
  CHECK(!rules.admissible(snapped));
}

TEST_CASE("sample_synthetic returns an empty batch for na=0", "[augment]") {
  Rng rng(5);
  auto g = testsupport::random_graph(rng, {.nodes = 10, .features = 4, .edge_prob = 0.3});
  const auto cfg = small_config();
  auto trained = train_autoencoder(g, [&] {
    auto c = cfg.autoencoder;
    c.epochs = 10;
    return c;
  }());
  const auto latents = encode_graph(g, trained.encoder);
  const auto fit = fit_gmm(latents, 2, 1);
  const auto rules = ValidityRules::from_graph(g);
  const auto synth = sample_synthetic(fit.gmm, trained.decoder, 0, rules, latents, g.labels, 3);
  CHECK(synth.features.rows() == 0);
  CHECK(synth.labels.empty());
  CHECK(synth.draws == 0);
}

TEST_CASE("sample_synthetic exhausts the retry cap under unsatisfiable rules", "[augment]") {
  Rng rng(6);
  auto g = testsupport::random_graph(rng, {.nodes = 15, .features = 4, .edge_prob = 0.3});
  AutoencoderConfig acfg;
  acfg.epochs = 20;
  acfg.hidden = 5;
  acfg.latent = 2;
  auto trained = train_autoencoder(g, acfg);
  const auto latents = encode_graph(g, trained.encoder);
  const auto fit = fit_gmm(latents, 1, 2);
  auto rules = ValidityRules::from_graph(g);
  rules.restrict_continuous(0, 2.0, 3.0); // empty range: features live in [0,1]
  CHECK_THROWS_WITH(sample_synthetic(fit.gmm, trained.decoder, 5, rules, latents, g.labels, 7),
                    Catch::Matchers::ContainsSubstring("retry cap"));
}

TEST_CASE("attach_synthetic with zero nodes is the identity", "[augment]") {
  Rng rng(7);
  auto g = testsupport::random_graph(rng, {.nodes = 8, .features = 3, .edge_prob = 0.4});
  SyntheticNodes none;
  none.features.resize(0, 3);
  none.latents.resize(0, 2);
  const Eigen::MatrixXd latents = Eigen::MatrixXd::Zero(8, 2);
  const auto out = attach_synthetic(g, none, latents, 3);
  CHECK(out.node_ids == g.node_ids);
  CHECK(out.edges == g.edges);
}

TEST_CASE("attach_synthetic wires one node to its k nearest reals", "[augment]") {
  Rng rng(8);
  auto g = testsupport::random_graph(rng, {.nodes = 3, .features = 2, .edge_prob = 0.0});
  g.sensitive = {0, 0, 1}; // group 1 underrepresented
  Eigen::MatrixXd latents(3, 2);
  latents << 0.0, 0.0,
             1.0, 0.0,
             5.0, 5.0;
  SyntheticNodes one;
  one.features = Eigen::MatrixXd::Constant(1, 2, 0.5);
  one.latents = Eigen::MatrixXd::Zero(1, 2); // nearest reals: rows 0 and 1
  one.labels = {kGood};

  const auto out = attach_synthetic(g, one, latents, 2);
  REQUIRE(out.node_count() == 4);
  CHECK(out.sensitive.back() == 1);
  CHECK(out.node_ids.back() == 3);
  REQUIRE(out.edges.size() == g.edges.size() + 2);
  CHECK(out.edges == std::vector<Edge>{{0, 3}, {1, 3}});

  CHECK_THROWS_WITH(attach_synthetic(g, one, latents, 4),
                    Catch::Matchers::ContainsSubstring("between 1 and the real-node count"));
}

TEST_CASE("augment_dataset levels the groups end to end", "[augment]") {
  Rng rng(9);
  auto g = testsupport::graph_with_cells(rng, 8, 12, 4, 6, 6, 0.2); // groups 20 / 10
  const auto result = augment_dataset(g, small_config(), 17);
  CHECK(result.na == 10);
  const auto c = group_counts(result.graph);
  CHECK(c.over == 20);
  CHECK(c.under == 20);

  // originals untouched
  const auto original_rows = g.features.rows();
  CHECK(result.graph.features.topRows(original_rows) == g.features);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    CHECK(result.graph.sensitive[i] == g.sensitive[i]);
    CHECK(result.graph.labels[i] == g.labels[i]);
    CHECK(result.graph.node_ids[i] == g.node_ids[i]);
  }
  std::set<Edge> new_edges(result.graph.edges.begin(), result.graph.edges.end());
  for (const Edge& e : g.edges) CHECK(new_edges.count(e));

  // synthetic rows respect the original continuous ranges
  const auto rules = ValidityRules::from_graph(g);
  for (Eigen::Index r = original_rows; r < result.graph.features.rows(); ++r)
    CHECK(rules.admissible(result.graph.features.row(r)));
}

TEST_CASE("augment_dataset is deterministic under a fixed seed", "[augment]") {
  Rng rng(10);
  auto g = testsupport::graph_with_cells(rng, 5, 7, 3, 4, 5, 0.25);
  const auto a = augment_dataset(g, small_config(), 23);
  const auto b = augment_dataset(g, small_config(), 23);
  CHECK(a.graph.features == b.graph.features);
  CHECK(a.graph.labels == b.graph.labels);
  CHECK(a.graph.edges == b.graph.edges);
  CHECK(a.draws == b.draws);
}

TEST_CASE("augment_dataset with balanced groups returns the graph unchanged", "[augment]") {
  Rng rng(11);
  auto g = testsupport::graph_with_cells(rng, 4, 4, 5, 3, 4, 0.3);
  const auto result = augment_dataset(g, small_config(), 3);
  CHECK(result.na == 0);
  CHECK(result.graph.node_ids == g.node_ids);
  CHECK(result.graph.features == g.features);
}
