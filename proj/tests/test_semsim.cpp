#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "ltrel/semsim.hpp"

using namespace ltrel;

namespace {
std::string tmp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

// root -> a -> {b, c}, b -> x  (max depth 4)
Taxonomy tree() {
  return make_taxonomy({{"a", "root"}, {"b", "a"}, {"c", "a"}, {"x", "b"}});
}
}  // namespace

TEST_CASE("path similarity is the reciprocal of path length plus one",
          "[semsim]") {
  Taxonomy t = tree();
  REQUIRE(path_similarity(t, t.node("b"), t.node("b")) == 1.0);
  REQUIRE(path_similarity(t, t.node("b"), t.node("c")) ==
          Catch::Approx(1.0 / 3.0));
  REQUIRE(path_similarity(t, t.node("x"), t.node("c")) ==
          Catch::Approx(1.0 / 4.0));
}

TEST_CASE("depth-scaled subsumer similarity matches hand values", "[semsim]") {
  Taxonomy t = tree();
  // lcs(b, c) = a: 2*2 / (3+3)
  REQUIRE(wup_similarity(t, t.node("b"), t.node("c")) ==
          Catch::Approx(2.0 / 3.0));
  // lcs(x, b) = b: 2*3 / (4+3)
  REQUIRE(wup_similarity(t, t.node("x"), t.node("b")) ==
          Catch::Approx(6.0 / 7.0));
  REQUIRE(wup_similarity(t, t.node("c"), t.node("c")) == 1.0);
}

TEST_CASE("log-depth similarity matches hand values and guards bounds",
          "[semsim]") {
  Taxonomy t = tree();
  // d(b,c)=2, max depth 4: -ln(3/8)
  REQUIRE(lch_similarity(t, t.node("b"), t.node("c")) ==
          Catch::Approx(0.9808292530117262));
  // identical nodes: -ln(1/8) = ln 8
  REQUIRE(lch_similarity(t, t.node("b"), t.node("b")) ==
          Catch::Approx(std::log(8.0)));
  REQUIRE(lch_from_distance(0, 1) == Catch::Approx(std::log(2.0)));
  REQUIRE_THROWS_AS(lch_from_distance(-1, 4), std::invalid_argument);
  REQUIRE_THROWS_AS(lch_from_distance(0, 0), std::invalid_argument);
}

TEST_CASE("information-content similarities match hand values", "[semsim]") {
  Taxonomy t = tree();
  ICTable ic = make_ic(
      t, {{"root", 0.0}, {"a", 1.0}, {"b", 2.0}, {"c", 2.5}, {"x", 3.0}});
  int b = t.node("b"), c = t.node("c");
  REQUIRE(ic_similarity(t, ic, b, c, IcMetric::res) == 1.0);
  REQUIRE(ic_similarity(t, ic, b, c, IcMetric::lin) ==
          Catch::Approx(2.0 / 4.5));
  // jcn: 1 / (2 + 2.5 - 2*1)
  REQUIRE(ic_similarity(t, ic, b, c, IcMetric::jcn) ==
          Catch::Approx(1.0 / 2.5));
  // degenerate distance is capped
  REQUIRE(ic_similarity(t, ic, b, b, IcMetric::jcn) == kDefaultJcnCap);
  REQUIRE(ic_similarity(t, ic, b, b, IcMetric::jcn, 99.0) == 99.0);
}

TEST_CASE("cosine similarity matches a hand value and rejects bad vectors",
          "[semsim]") {
  REQUIRE(cosine_similarity({1, 2, 0}, {2, 1, 1}) ==
          Catch::Approx(0.7302967433402214));
  REQUIRE(cosine_similarity({1, 0}, {0, 3}) == Catch::Approx(0.0));
  REQUIRE_THROWS_AS(cosine_similarity({1, 2}, {1, 2, 3}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(cosine_similarity({0, 0}, {1, 2}), std::invalid_argument);
}

TEST_CASE("similarity matrices are symmetric with maximal diagonal",
          "[semsim]") {
  Taxonomy t = tree();
  ClassVocabulary v =
      make_vocabulary({"b", "c", "x"}, {9, 5, 1}, Branch::entity);
  for (TaxMetric metric : {TaxMetric::path, TaxMetric::wup, TaxMetric::lch}) {
    SimilarityMatrix m = build_similarity_matrix(v, t, metric);
    REQUIRE_NOTHROW(validate_similarity(m));
    REQUIRE(m.size() == 3);
    REQUIRE(m.labels == v.labels);
  }
  ICTable ic = make_ic(
      t, {{"root", 0.0}, {"a", 1.0}, {"b", 2.0}, {"c", 2.5}, {"x", 3.0}});
  for (TaxMetric metric : {TaxMetric::res, TaxMetric::jcn, TaxMetric::lin}) {
    SimilarityMatrix m = build_similarity_matrix(v, t, metric, &ic);
    REQUIRE_NOTHROW(validate_similarity(m));
  }
  // IC metrics require the table
  REQUIRE_THROWS_AS(build_similarity_matrix(v, t, TaxMetric::res),
                    std::invalid_argument);
  // unknown label
  ClassVocabulary bad =
      make_vocabulary({"b", "zebra"}, {9, 5}, Branch::entity);
  REQUIRE_THROWS_AS(build_similarity_matrix(bad, t, TaxMetric::path),
                    std::invalid_argument);
}

TEST_CASE("matrix validation catches asymmetry and inflated off-diagonals",
          "[semsim]") {
  SimilarityMatrix m;
  m.labels = {"a", "b"};
  m.metric_name = "test";
  m.sim = Matrix(2, 2);
  m.sim(0, 0) = 1.0;
  m.sim(1, 1) = 1.0;
  m.sim(0, 1) = 0.5;
  m.sim(1, 0) = 0.4;
  REQUIRE_THROWS_AS(validate_similarity(m), std::invalid_argument);
  m.sim(1, 0) = 0.5;
  REQUIRE_NOTHROW(validate_similarity(m));
  m.sim(0, 1) = m.sim(1, 0) = 1.5;  // exceeds both diagonals
  REQUIRE_THROWS_AS(validate_similarity(m), std::invalid_argument);
}

TEST_CASE("similarity matrices round-trip through CSV and binary files",
          "[semsim]") {
  Taxonomy t = tree();
  ClassVocabulary v =
      make_vocabulary({"b", "c", "x"}, {9, 5, 1}, Branch::entity);
  SimilarityMatrix m = build_similarity_matrix(v, t, TaxMetric::wup);

  std::string csv = tmp_path("sim_roundtrip.csv");
  save_similarity_csv(m, csv);
  SimilarityMatrix from_csv = load_similarity_csv(csv);
  REQUIRE(from_csv.labels == m.labels);
  for (std::size_t i = 0; i < m.sim.data().size(); ++i)
    REQUIRE(from_csv.sim.data()[i] == m.sim.data()[i]);
  std::remove(csv.c_str());

  std::string bin = tmp_path("sim_roundtrip.bin");
  save_similarity_bin(m, bin);
  SimilarityMatrix from_bin = load_similarity_bin(bin);
  REQUIRE(from_bin.labels == m.labels);
  REQUIRE(from_bin.metric_name == "wup");
  for (std::size_t i = 0; i < m.sim.data().size(); ++i)
    REQUIRE(from_bin.sim.data()[i] == m.sim.data()[i]);
  std::remove(bin.c_str());
  std::remove((bin + ".meta.json").c_str());
}

TEST_CASE("alignment reorders a matrix to vocabulary order", "[semsim]") {
  SimilarityMatrix m;
  m.labels = {"c", "a", "b"};
  m.metric_name = "test";
  m.sim = Matrix(3, 3);
  double vals[3][3] = {{1.0, 0.2, 0.3}, {0.2, 1.0, 0.4}, {0.3, 0.4, 1.0}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m.sim(i, j) = vals[i][j];

  ClassVocabulary v = make_vocabulary({"a", "b", "c"}, {9, 5, 1},
                                      Branch::entity);
  SimilarityMatrix aligned = align_similarity(m, v);
  REQUIRE(aligned.labels == v.labels);
  REQUIRE(aligned.sim(0, 1) == 0.4);  // sim(a, b)
  REQUIRE(aligned.sim(0, 2) == 0.2);  // sim(a, c)
  REQUIRE(aligned.sim(1, 2) == 0.3);  // sim(b, c)
  for (int i = 0; i < 3; ++i) REQUIRE(aligned.sim(i, i) == 1.0);

  ClassVocabulary missing =
      make_vocabulary({"a", "zebra"}, {9, 5}, Branch::entity);
  REQUIRE_THROWS_AS(align_similarity(m, missing), std::invalid_argument);
}

TEST_CASE("embedding tables round-trip and build cosine matrices", "[semsim]") {
  EmbeddingTable table;
  table.labels = {"a", "b", "c"};
  table.vectors = Matrix(3, 3);
  double rows[3][3] = {{1, 2, 0}, {2, 1, 1}, {0, 0, 1}};
  for (int i = 0; i < 3; ++i) {
    table.index[table.labels[i]] = i;
    for (int j = 0; j < 3; ++j) table.vectors(i, j) = rows[i][j];
  }
  std::string path = tmp_path("embed_roundtrip.txt");
  save_embeddings(table, path);
  EmbeddingTable loaded = load_embeddings(path);
  REQUIRE(loaded.labels == table.labels);
  REQUIRE(loaded.vectors.data() == table.vectors.data());
  std::remove(path.c_str());

  ClassVocabulary v = make_vocabulary({"a", "b"}, {9, 5}, Branch::entity);
  SimilarityMatrix m = build_similarity_matrix(v, loaded);
  REQUIRE(m.metric_name == "cosine");
  REQUIRE(m.sim(0, 1) == Catch::Approx(0.7302967433402214));
  REQUIRE(m.sim(0, 0) == 1.0);
}
