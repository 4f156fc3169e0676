#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ltrel/metrics.hpp"
#include "ltrel/rng.hpp"

using namespace ltrel;

namespace {

std::string tmp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string read_file(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// K classes, identity-ish similarity with chosen off-diagonal entries.
SimilarityMatrix diag_sim(int k) {
  SimilarityMatrix m;
  m.metric_name = "test";
  m.sim = Matrix(k, k);
  for (int i = 0; i < k; ++i) {
    m.labels.push_back("c" + std::to_string(i));
    m.sim(i, i) = 1.0;
  }
  return m;
}

FrequencyBands bands_for(int k) {
  std::vector<std::string> labels;
  std::vector<long long> freqs;
  for (int i = 0; i < k; ++i) {
    labels.push_back("c" + std::to_string(i));
    freqs.push_back(1000 - i);
  }
  return split_bands(make_vocabulary(labels, freqs, Branch::entity));
}

}  // namespace

TEST_CASE("per-class accuracy counts each class separately", "[metrics]") {
  //           gold: 0 0 0 1 1 2
  //           pred: 0 0 1 1 0 2
  PerClassAccuracy pc =
      per_class_accuracy({0, 0, 1, 1, 0, 2}, {0, 0, 0, 1, 1, 2}, 4);
  REQUIRE(pc.acc_pct[0] == Catch::Approx(200.0 / 3.0));
  REQUIRE(pc.acc_pct[1] == 50.0);
  REQUIRE(pc.acc_pct[2] == 100.0);
  REQUIRE(pc.acc_pct[3] == 0.0);
  REQUIRE(pc.gold_count[3] == 0);
  REQUIRE_THROWS_AS(per_class_accuracy({0}, {5}, 3), std::invalid_argument);
}

TEST_CASE("class balance separates per-example from per-class accuracy",
          "[metrics]") {
  // 90/10 split, predictor always answers the majority class.
  std::vector<int> gold, pred;
  for (int i = 0; i < 90; ++i) gold.push_back(0);
  for (int i = 0; i < 10; ++i) gold.push_back(1);
  pred.assign(100, 0);
  REQUIRE(per_example_accuracy(pred, gold) == 90.0);
  PerClassAccuracy pc = per_class_accuracy(pred, gold, 2);
  double balanced = (pc.acc_pct[0] + pc.acc_pct[1]) / 2.0;
  REQUIRE(balanced == 50.0);
}

TEST_CASE("band report averages inside bands and skips absent classes",
          "[metrics]") {
  FrequencyBands bands = bands_for(20);  // many={0} medium={1,2,3} few={4..19}
  PerClassAccuracy pc;
  pc.acc_pct.assign(20, 0.0);
  pc.gold_count.assign(20, 0);
  pc.acc_pct[0] = 80.0;
  pc.gold_count[0] = 10;
  pc.acc_pct[1] = 60.0;
  pc.gold_count[1] = 5;
  pc.acc_pct[3] = 20.0;
  pc.gold_count[3] = 5;  // class 2 absent
  pc.acc_pct[5] = 10.0;
  pc.gold_count[5] = 2;

  BandReport r = band_report(pc, bands);
  REQUIRE(r.many == 80.0);
  REQUIRE(r.medium == 40.0);  // mean of 60 and 20, class 2 excluded
  REQUIRE(r.few == 10.0);
  REQUIRE(r.all == Catch::Approx((80.0 + 60.0 + 20.0 + 10.0) / 4.0));

  // Empty band: nothing from the tail was observed.
  pc.gold_count[5] = 0;
  BandReport r2 = band_report(pc, bands);
  REQUIRE_FALSE(r2.few.has_value());
  REQUIRE(r2.many == 80.0);
}

TEST_CASE("triplet counting accumulates duplicate types", "[metrics]") {
  TripletCounts c = count_triplets({0, 0, 1}, {2, 2, 2}, {3, 3, 4});
  REQUIRE(c.size() == 2);
  REQUIRE(c.at({0, 2, 3}) == 2);
  REQUIRE(c.at({1, 2, 4}) == 1);
}

TEST_CASE("full-triplet accuracy bands types by training frequency",
          "[metrics]") {
  // Train: 5 types with counts 10, 6, 3, 2, 1 -> bands many={t0},
  // medium=none, few={t3, t4} with K=5 -> sizes 1/0/4? split(5): many=1,
  // few=4, medium=0.
  std::vector<int> ts, tr, to;
  auto add = [&](int s, int r, int o, int n) {
    for (int i = 0; i < n; ++i) {
      ts.push_back(s);
      tr.push_back(r);
      to.push_back(o);
    }
  };
  add(0, 0, 0, 10);
  add(1, 0, 0, 6);
  add(2, 0, 0, 3);
  add(3, 0, 0, 2);
  add(4, 0, 0, 1);
  TripletCounts counts = count_triplets(ts, tr, to);

  // Test set: two examples of the head type (one right), one of type (2,0,0)
  // (right), one unseen type (wrong), one unseen type (right).
  std::vector<int> gs{0, 0, 2, 7, 8};
  std::vector<int> gr{0, 0, 0, 0, 0};
  std::vector<int> go{0, 0, 0, 7, 8};
  std::vector<int> ps{0, 1, 2, 0, 8};
  std::vector<int> pr{0, 0, 0, 0, 0};
  std::vector<int> po{0, 0, 0, 0, 8};
  TripletEval e = triplet_accuracy(ps, pr, po, gs, gr, go, counts);
  REQUIRE(e.overall_pct == 60.0);  // 3 of 5 examples exact
  BandSizes sizes = split_band_sizes(5);
  REQUIRE(sizes.many == 1);
  REQUIRE(sizes.medium == 0);
  REQUIRE(sizes.few == 4);
  REQUIRE(e.many == 50.0);                    // type (0,0,0): 1 of 2
  REQUIRE_FALSE(e.medium.has_value());        // no medium type observed
  // few band: type (2,0,0) 100, unseen (7,0,7) 0, unseen (8,0,8) 100
  REQUIRE(e.few == Catch::Approx(200.0 / 3.0));
  REQUIRE(e.all == Catch::Approx((50.0 + 100.0 + 0.0 + 100.0) / 4.0));
}

TEST_CASE("triplet banding needs at least three training types", "[metrics]") {
  TripletCounts counts = count_triplets({0, 1}, {0, 0}, {0, 1});
  TripletEval e = triplet_accuracy({0}, {0}, {0}, {0}, {0}, {0}, counts);
  REQUIRE(e.overall_pct == 100.0);
  REQUIRE_FALSE(e.many.has_value());
  REQUIRE_FALSE(e.all.has_value());
}

TEST_CASE("pair-grouped accuracy weights every observed pair equally",
          "[metrics]") {
  // Two (s,o) groups: group A has 2 examples (1 fully correct), group B has
  // 1 example (correct). Mean over groups: (50 + 100)/2.
  std::vector<int> gs{0, 0, 1};
  std::vector<int> gr{0, 1, 0};
  std::vector<int> go{5, 5, 6};
  std::vector<int> ps{0, 0, 1};
  std::vector<int> pr{0, 0, 0};
  std::vector<int> po{5, 9, 6};
  REQUIRE(grouped_pair_accuracy(ps, pr, po, gs, gr, go, PairGroup::so) ==
          75.0);
  // (s,r) groups: (0,0) correct 1/1, (0,1) 0/1, (1,0) 1/1
  REQUIRE(grouped_pair_accuracy(ps, pr, po, gs, gr, go, PairGroup::sr) ==
          Catch::Approx(200.0 / 3.0));
}

TEST_CASE("soft AP hits five sixths with two relevant in the top five",
          "[metrics]") {
  SimilarityMatrix sim = diag_sim(6);
  // gold 0; candidate 2 is its nearest neighbour
  sim.sim(0, 2) = sim.sim(2, 0) = 0.9;
  sim.sim(0, 1) = sim.sim(1, 0) = 0.1;
  std::vector<int> ranked{0, 1, 2, 3, 4, 5};  // relevant at ranks 1 and 3
  std::vector<double> ap = soft_ap(ranked, 0, sim, 1, {5});
  REQUIRE(ap[0] == Catch::Approx(5.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("soft AP degenerates to exact-match AP without widening",
          "[metrics]") {
  SimilarityMatrix sim = diag_sim(5);
  // gold first
  REQUIRE(soft_ap({2, 0, 1, 3, 4}, 2, sim, 0, {1, 5})[0] == 1.0);
  // gold at rank 3: AP@5 = (1/3) / 1
  REQUIRE(soft_ap({0, 1, 2, 3, 4}, 2, sim, 0, {5})[0] ==
          Catch::Approx(1.0 / 3.0));
  // gold missing from the list entirely
  REQUIRE(soft_ap({0, 1, 3}, 4, sim, 0, {3})[0] == 0.0);
  // cutoff before the gold position: empty prefix, normalizer min(R, c)
  REQUIRE(soft_ap({0, 1, 2, 3, 4}, 2, sim, 0, {1})[0] == 0.0);
}

TEST_CASE("soft AP tie-breaks the widened set toward smaller ids",
          "[metrics]") {
  SimilarityMatrix sim = diag_sim(4);
  // classes 1 and 2 equally similar to gold 0; T=1 must pick class 1
  sim.sim(0, 1) = sim.sim(1, 0) = 0.5;
  sim.sim(0, 2) = sim.sim(2, 0) = 0.5;
  // list: 2, 1, 0, 3. relevant = {0, 1}: hits at ranks 2, 3
  std::vector<double> ap = soft_ap({2, 1, 0, 3}, 0, sim, 1, {4});
  REQUIRE(ap[0] == Catch::Approx((0.5 + 2.0 / 3.0) / 2.0));
}

TEST_CASE("soft AP validates its inputs", "[metrics]") {
  SimilarityMatrix sim = diag_sim(4);
  REQUIRE_THROWS_AS(soft_ap({}, 0, sim, 1, {1}), std::invalid_argument);
  REQUIRE_THROWS_AS(soft_ap({0, 0}, 0, sim, 1, {1}), std::invalid_argument);
  REQUIRE_THROWS_AS(soft_ap({0, 9}, 0, sim, 1, {1}), std::invalid_argument);
  REQUIRE_THROWS_AS(soft_ap({0, 1}, 9, sim, 1, {1}), std::invalid_argument);
  REQUIRE_THROWS_AS(soft_ap({0, 1}, 0, sim, -1, {1}), std::invalid_argument);
  REQUIRE_THROWS_AS(soft_ap({0, 1}, 0, sim, 1, {3}), std::invalid_argument);
  REQUIRE_THROWS_AS(soft_ap({0, 1}, 0, sim, 1, {0}), std::invalid_argument);
}

TEST_CASE("mean soft AP averages example-level values", "[metrics]") {
  SimilarityMatrix sim = diag_sim(3);
  std::vector<std::vector<int>> lists{{0, 1, 2}, {1, 0, 2}};
  std::vector<int> golds{0, 0};
  // example 1: AP@3 = 1; example 2: gold at rank 2 -> 1/2
  std::vector<double> m = mean_soft_ap(lists, golds, sim, 0, {3});
  REQUIRE(m[0] == Catch::Approx(0.75));
}

TEST_CASE("prediction records round-trip through JSONL", "[metrics]") {
  std::vector<PredictionRecord> recs(2);
  recs[0].id = 7;
  recs[0].gold_s = 1;
  recs[0].gold_r = 0;
  recs[0].gold_o = 2;
  recs[0].rank_s = {2, 0, 1};
  recs[0].score_s = {0.9, 0.5, 0.1};
  recs[0].rank_r = {0, 1};
  recs[0].score_r = {1.0, -1.0};
  recs[0].rank_o = {1, 2, 0};
  recs[0].score_o = {2.0, 1.5, 0.25};
  recs[1] = recs[0];
  recs[1].id = 8;
  recs[1].rank_s = {0, 1, 2};
  recs[1].score_s = {3.0, 3.0, 3.0};  // ties, indices ascending

  std::string path = tmp_path("preds_roundtrip.jsonl");
  save_predictions_jsonl(recs, path);
  std::vector<PredictionRecord> loaded = load_predictions_jsonl(path);
  REQUIRE(loaded.size() == 2);
  REQUIRE(loaded[0].id == 7);
  REQUIRE(loaded[0].rank_s == recs[0].rank_s);
  REQUIRE(loaded[0].score_o == recs[0].score_o);
  REQUIRE(loaded[1].rank_s == recs[1].rank_s);
  std::remove(path.c_str());

  // An unsorted ranking is rejected on load.
  recs[1].score_s = {1.0, 2.0, 3.0};
  save_predictions_jsonl(recs, path);
  REQUIRE_THROWS_AS(load_predictions_jsonl(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("band report CSV layout is pinned", "[metrics]") {
  BandReport subject{100.0, 50.0, 12.5, 40.125};
  BandReport object{90.0, std::nullopt, 10.0, 35.0};
  BandReport sbj_obj{95.0, 50.0, 11.25, 37.5625};
  BandReport relation{80.0, 70.0, 5.0, 30.0};
  std::string path = tmp_path("band_report.csv");
  save_band_report_csv(subject, object, sbj_obj, relation, path);
  REQUIRE(read_file(path) ==
          "branch,many,medium,few,all\n"
          "subject,100.0000,50.0000,12.5000,40.1250\n"
          "object,90.0000,na,10.0000,35.0000\n"
          "sbj_obj,95.0000,50.0000,11.2500,37.5625\n"
          "relation,80.0000,70.0000,5.0000,30.0000\n");
  std::remove(path.c_str());
}

TEST_CASE("triplet report CSV layout is pinned", "[metrics]") {
  TripletEval t;
  t.overall_pct = 41.5;
  t.many = 60.0;
  t.medium = 30.0;
  t.few = 5.0;
  t.all = 25.0;
  std::string path = tmp_path("triplet_report.csv");
  save_triplet_report_csv(t, 11.25, 12.5, 13.75, path);
  REQUIRE(read_file(path) ==
          "metric,many,medium,few,all\n"
          "triplet_per_type,60.0000,30.0000,5.0000,25.0000\n"
          "triplet_per_example,,,,41.5000\n"
          "pair_s_o,,,,11.2500\n"
          "pair_s_r,,,,12.5000\n"
          "pair_o_r,,,,13.7500\n");
  std::remove(path.c_str());
}

TEST_CASE("soft AP CSV layout is pinned", "[metrics]") {
  std::vector<SoftApRow> rows{{"subject:wup", 1, 0.5},
                              {"subject:wup", 5, 2.0 / 3.0}};
  std::string path = tmp_path("soft_ap.csv");
  save_soft_ap_csv(rows, path);
  REQUIRE(read_file(path) ==
          "metric,cutoff,ap\n"
          "subject:wup,1,0.500000\n"
          "subject:wup,5,0.666667\n");
  std::remove(path.c_str());
}
