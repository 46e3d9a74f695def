#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <catch_amalgamated.hpp>

#include "fairprep/graph.hpp"
#include "fairprep/ingest.hpp"
#include "support/generators.hpp"

using namespace fairprep;

namespace {

namespace fs = std::filesystem;

fs::path write_temp(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << content;
  return p;
}

DatasetSchema tiny_schema() {
  return DatasetSchema::from_json(nlohmann::json::parse(R"({
    "columns": {
      "color": "feature-categorical",
      "amount": "feature-continuous",
      "sex": "sensitive",
      "outcome": "label"
    },
    "good_label": "good"
  })"));
}

} // namespace

TEST_CASE("ingest encodes categorical columns one-hot against a hand encoding", "[graph]") {
  const auto path = write_temp("tiny.csv",
                               "color,amount,sex,outcome\n"
                               "red,10,male,good\n"
                               "green,20,female,bad\n"
                               "blue,30,male,good\n"
                               "red,40,female,bad\n");
  const CreditGraph g = ingest_dataset(path.string(), tiny_schema());

  REQUIRE(g.node_count() == 4);
  // columns: blue, green, red (lexicographic), amount
  REQUIRE(g.columns.size() == 4);
  CHECK(g.columns[0].display_name() == "color=blue");
  CHECK(g.columns[1].display_name() == "color=green");
  CHECK(g.columns[2].display_name() == "color=red");
  CHECK(g.columns[3].display_name() == "amount");

  Eigen::MatrixXd expected(4, 4);
  // hand encoding: one-hot + min-max over {10,20,30,40}
  expected << 0, 0, 1, 0.0,
              0, 1, 0, 1.0 / 3.0,
              1, 0, 0, 2.0 / 3.0,
              0, 0, 1, 1.0;
  CHECK((g.features - expected).cwiseAbs().maxCoeff() == 0.0);

  CHECK(g.group_names[0] == "female");
  CHECK(g.group_names[1] == "male");
  CHECK(g.sensitive == std::vector<std::uint8_t>{1, 0, 1, 0});
  CHECK(g.labels == std::vector<std::uint8_t>{kGood, kBad, kGood, kBad});
  CHECK(g.edges.empty());
}

TEST_CASE("ingest error paths", "[graph]") {
  const auto schema = tiny_schema();
  SECTION("missing file") {
    CHECK_THROWS_WITH(ingest_dataset("/nonexistent/file.csv", schema),
                      Catch::Matchers::ContainsSubstring("cannot open dataset file"));
  }
  SECTION("empty file") {
    const auto p = write_temp("empty.csv", "");
    CHECK_THROWS_WITH(ingest_dataset(p.string(), schema),
                      Catch::Matchers::ContainsSubstring("no rows"));
  }
  SECTION("header only") {
    const auto p = write_temp("header_only.csv", "color,amount,sex,outcome\n");
    CHECK_THROWS_WITH(ingest_dataset(p.string(), schema),
                      Catch::Matchers::ContainsSubstring("no rows"));
  }
  SECTION("unknown column in schema") {
    const auto p = write_temp("missing_col.csv", "color,amount,outcome\nred,1,good\n");
    CHECK_THROWS_WITH(ingest_dataset(p.string(), schema),
                      Catch::Matchers::ContainsSubstring("unknown column in schema: sex"));
  }
  SECTION("sensitive column with one value") {
    const auto p = write_temp("one_group.csv",
                              "color,amount,sex,outcome\nred,1,male,good\nblue,2,male,bad\n");
    CHECK_THROWS_WITH(ingest_dataset(p.string(), schema),
                      Catch::Matchers::ContainsSubstring("distinct values, expected 2"));
  }
  SECTION("sensitive column with three values") {
    const auto p = write_temp("three_groups.csv",
                              "color,amount,sex,outcome\n"
                              "red,1,male,good\nblue,2,female,bad\ngreen,3,other,good\n");
    CHECK_THROWS_WITH(ingest_dataset(p.string(), schema),
                      Catch::Matchers::ContainsSubstring("distinct values, expected 2"));
  }
  SECTION("unparseable numeric cell") {
    const auto p = write_temp("bad_cell.csv",
                              "color,amount,sex,outcome\nred,1,male,good\nblue,oops,female,bad\n");
    CHECK_THROWS_WITH(ingest_dataset(p.string(), schema),
                      Catch::Matchers::ContainsSubstring("unparseable numeric cell \"oops\""));
  }
}

TEST_CASE("ingest is deterministic and scales continuous columns to [0,1]", "[graph]") {
  Rng rng(11);
  std::string csv = "color,amount,sex,outcome\n";
  const char* colors[] = {"red", "green", "blue"};
  const char* sexes[] = {"male", "female"};
  for (int i = 0; i < 60; ++i) {
    csv += colors[rng.below(3)];
    csv += "," + std::to_string(-50.0 + 200.0 * rng.uniform());
    csv += ",";
    csv += sexes[rng.below(2)];
    csv += (rng.below(2) ? ",good\n" : ",bad\n");
  }
  const auto p = write_temp("scale.csv", csv);
  const CreditGraph a = ingest_dataset(p.string(), tiny_schema());
  const CreditGraph b = ingest_dataset(p.string(), tiny_schema());
  REQUIRE(a.features == b.features); // bit-identical

  const auto amount = a.features.col(3);
  CHECK(amount.minCoeff() == 0.0);
  CHECK(amount.maxCoeff() == 1.0);
  CHECK((amount.array() >= 0.0).all());
  CHECK((amount.array() <= 1.0).all());
}

TEST_CASE("ingest respects sensitive_as_feature and group_order", "[graph]") {
  const auto path = write_temp("sens.csv",
                               "color,amount,sex,outcome\n"
                               "red,1,male,good\n"
                               "blue,2,female,bad\n");
  auto j = nlohmann::json::parse(R"({
    "columns": {"amount": "feature-continuous", "sex": "sensitive", "outcome": "label"},
    "good_label": "good",
    "sensitive_as_feature": true,
    "group_order": ["male", "female"]
  })");
  const CreditGraph g = ingest_dataset(path.string(), DatasetSchema::from_json(j));
  REQUIRE(g.group_names[0] == "male");
  REQUIRE(g.group_names[1] == "female");
  REQUIRE(g.columns.size() == 2); // amount + sex indicator; color ignored (absent from schema)
  CHECK(g.columns[1].display_name() == "sex=female");
  CHECK(g.features(0, 1) == 0.0); // male row
  CHECK(g.features(1, 1) == 1.0); // female row
}

TEST_CASE("build_knn_edges on two nodes yields the only possible edge", "[graph]") {
  Rng rng(1);
  auto g = testsupport::random_graph(rng, {.nodes = 2, .features = 3, .edge_prob = 0.0});
  const auto edges = build_knn_edges(g, 1);
  REQUIRE(edges == std::vector<Edge>{{0, 1}});
}

TEST_CASE("build_knn_edges matches the exhaustive pairwise-distance oracle on a line", "[graph]") {
  CreditGraph g;
  g.features.resize(4, 1);
  g.features << 0.0, 1.0, 2.0, 10.0;
  g.columns = {{"x", ""}};
  g.group_names = {"a", "b"};
  g.sensitive = {0, 0, 1, 1};
  g.labels = {kGood, kBad, kGood, kBad};
  g.node_ids = {0, 1, 2, 3};

  const auto edges = build_knn_edges(g, 1, DistanceMetric::Euclidean);
  // node 1 ties between 0 and 2 at distance 1; lower id wins
  REQUIRE(edges == std::vector<Edge>{{0, 1}, {1, 2}, {2, 3}});
}

TEST_CASE("build_knn_edges symmetrization only adds degree", "[graph]") {
  Rng rng(5);
  auto g = testsupport::random_graph(rng, {.nodes = 60, .features = 5, .edge_prob = 0.0});
  const int k = 7;
  g.edges = build_knn_edges(g, k);

  std::map<NodeId, int> degree;
  for (const auto& e : g.edges) {
    degree[e.a]++;
    degree[e.b]++;
  }
  for (const auto& [id, d] : degree) CHECK(d >= k);
  CHECK(degree.size() == g.node_count());

  // normalized form: a < b, sorted, unique
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    CHECK(g.edges[i].a < g.edges[i].b);
    if (i > 0) CHECK(g.edges[i - 1] < g.edges[i]);
  }
}

TEST_CASE("build_knn_edges rejects k >= node count and supports cosine", "[graph]") {
  Rng rng(2);
  auto g = testsupport::random_graph(rng, {.nodes = 5, .features = 3});
  CHECK_THROWS_AS(build_knn_edges(g, 5), Error);
  CHECK_THROWS_AS(build_knn_edges(g, 0), Error);
  const auto edges = build_knn_edges(g, 2, DistanceMetric::Cosine);
  CHECK(!edges.empty());
}

TEST_CASE("induced_subgraph identity, empty and triangle cases", "[graph]") {
  Rng rng(7);
  auto g = testsupport::random_graph(rng, {.nodes = 8, .features = 3, .edge_prob = 0.5});

  SECTION("keep everything") {
    const auto sub = induced_subgraph(g, g.node_ids);
    CHECK(sub.features == g.features);
    CHECK(sub.sensitive == g.sensitive);
    CHECK(sub.labels == g.labels);
    CHECK(sub.edges == g.edges);
    CHECK(sub.node_ids == g.node_ids);
  }
  SECTION("keep nothing") {
    const auto sub = induced_subgraph(g, {});
    CHECK(sub.node_count() == 0);
    CHECK(sub.edges.empty());
  }
  SECTION("triangle loses the edge whose endpoint is dropped") {
    CreditGraph tri;
    tri.features = Eigen::MatrixXd::Zero(3, 1);
    tri.columns = {{"x", ""}};
    tri.group_names = {"a", "b"};
    tri.sensitive = {0, 1, 0};
    tri.labels = {kGood, kGood, kBad};
    tri.node_ids = {0, 1, 2};
    tri.edges = {{0, 1}, {0, 2}, {1, 2}};
    const auto sub = induced_subgraph(tri, {0, 2});
    REQUIRE(sub.edges == std::vector<Edge>{{0, 2}});
    CHECK(sub.node_ids == std::vector<NodeId>{0, 2});
  }
  SECTION("unknown id") {
    CHECK_THROWS_WITH(induced_subgraph(g, {999}),
                      Catch::Matchers::ContainsSubstring("unknown node id 999"));
  }
}

TEST_CASE("group_counts on hand-built and empty graphs", "[graph]") {
  SECTION("empty graph") {
    CreditGraph g;
    g.group_names = {"a", "b"};
    const auto c = group_counts(g);
    CHECK(c.total == 0);
    CHECK(c.over == 0);
    CHECK(c.under == 0);
    CHECK(c.good == 0);
    CHECK(c.bad == 0);
  }
  SECTION("six nodes tallied by hand") {
    Rng rng(3);
    auto g = testsupport::graph_with_cells(rng, 1, 2, 2, 1);
    const auto c = group_counts(g);
    c.validate();
    CHECK(c.total == 6);
    CHECK(c.cell[0][kBad] == 1);
    CHECK(c.cell[0][kGood] == 2);
    CHECK(c.cell[1][kBad] == 2);
    CHECK(c.cell[1][kGood] == 1);
    CHECK(c.good == 3);
    CHECK(c.bad == 3);
    CHECK(c.over == 3);
    CHECK(c.under == 3);
  }
}

TEST_CASE("group_counts after induced_subgraph equals a direct tally", "[graph]") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    auto g = testsupport::random_graph(
        rng, {.nodes = 3 + rng.below(20), .features = 2, .edge_prob = 0.3});
    std::vector<NodeId> keep;
    for (NodeId id : g.node_ids)
      if (rng.below(2)) keep.push_back(id);

    const auto sub = induced_subgraph(g, keep);
    const auto counts = group_counts(sub);
    counts.validate();

    std::set<NodeId> keep_set(keep.begin(), keep.end());
    std::int64_t cell[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < g.node_count(); ++i)
      if (keep_set.count(g.node_ids[i])) cell[g.sensitive[i]][g.labels[i]]++;
    REQUIRE(counts.cell[0][0] == cell[0][0]);
    REQUIRE(counts.cell[0][1] == cell[0][1]);
    REQUIRE(counts.cell[1][0] == cell[1][0]);
    REQUIRE(counts.cell[1][1] == cell[1][1]);
  }
}
