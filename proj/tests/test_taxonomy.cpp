#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "ltrel/taxonomy.hpp"

using namespace ltrel;

namespace {
std::string tmp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

// root -> a -> b -> x, a -> c
Taxonomy tree() {
  return make_taxonomy({{"a", "root"}, {"b", "a"}, {"c", "a"}, {"x", "b"}});
}
}  // namespace

TEST_CASE("taxonomy assigns node depths from the root", "[taxonomy]") {
  Taxonomy t = tree();
  REQUIRE(t.depth[t.node("root")] == 1);
  REQUIRE(t.depth[t.node("a")] == 2);
  REQUIRE(t.depth[t.node("b")] == 3);
  REQUIRE(t.depth[t.node("c")] == 3);
  REQUIRE(t.depth[t.node("x")] == 4);
  REQUIRE(t.max_depth == 4);
  REQUIRE(t.root == t.node("root"));
}

TEST_CASE("taxonomy rejects malformed edge lists", "[taxonomy]") {
  // two parents for one child
  REQUIRE_THROWS_AS(make_taxonomy({{"a", "r"}, {"a", "s"}, {"s", "r"}}),
                    std::invalid_argument);
  // self loop
  REQUIRE_THROWS_AS(make_taxonomy({{"a", "a"}}), std::invalid_argument);
  // two roots
  REQUIRE_THROWS_AS(make_taxonomy({{"a", "r"}, {"b", "s"}}),
                    std::invalid_argument);
  // cycle
  REQUIRE_THROWS_AS(make_taxonomy({{"a", "b"}, {"b", "c"}, {"c", "a"}}),
                    std::invalid_argument);
  // empty
  REQUIRE_THROWS_AS(make_taxonomy({}), std::invalid_argument);
}

TEST_CASE("lowest common subsumer walks both lineages", "[taxonomy]") {
  Taxonomy t = tree();
  REQUIRE(lowest_common_subsumer(t, t.node("b"), t.node("c")) == t.node("a"));
  REQUIRE(lowest_common_subsumer(t, t.node("x"), t.node("c")) == t.node("a"));
  REQUIRE(lowest_common_subsumer(t, t.node("x"), t.node("b")) == t.node("b"));
  REQUIRE(lowest_common_subsumer(t, t.node("x"), t.node("x")) == t.node("x"));
  REQUIRE(lowest_common_subsumer(t, t.node("x"), t.node("root")) ==
          t.node("root"));
}

TEST_CASE("path length counts edges through the subsumer", "[taxonomy]") {
  Taxonomy t = tree();
  REQUIRE(path_edges(t, t.node("b"), t.node("c")) == 2);
  REQUIRE(path_edges(t, t.node("x"), t.node("c")) == 3);
  REQUIRE(path_edges(t, t.node("x"), t.node("x")) == 0);
  REQUIRE(path_edges(t, t.node("x"), t.node("root")) == 3);
}

TEST_CASE("taxonomy TSV round-trips", "[taxonomy]") {
  Taxonomy t = tree();
  std::string path = tmp_path("taxonomy_roundtrip.tsv");
  save_taxonomy(t, path);
  Taxonomy loaded = load_taxonomy(path);
  REQUIRE(loaded.size() == t.size());
  for (const auto& name : t.names) {
    REQUIRE(loaded.contains(name));
    REQUIRE(loaded.depth[loaded.node(name)] == t.depth[t.node(name)]);
  }
  std::remove(path.c_str());
}

TEST_CASE("IC tables demand full coverage and round-trip", "[taxonomy]") {
  Taxonomy t = tree();
  std::unordered_map<std::string, double> values{
      {"root", 0.0}, {"a", 1.0}, {"b", 2.0}, {"c", 2.5}, {"x", 3.0}};
  ICTable table = make_ic(t, values);
  REQUIRE(table.at(t.node("c")) == 2.5);

  std::string path = tmp_path("ic_roundtrip.tsv");
  save_ic(table, t, path);
  ICTable loaded = load_ic(path, t);
  for (int i = 0; i < t.size(); ++i) REQUIRE(loaded.at(i) == table.at(i));
  std::remove(path.c_str());

  values.erase("x");
  REQUIRE_THROWS_AS(make_ic(t, values), std::invalid_argument);
  values["x"] = -1.0;
  REQUIRE_THROWS_AS(make_ic(t, values), std::invalid_argument);
}
