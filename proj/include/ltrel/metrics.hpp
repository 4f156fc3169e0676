#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "ltrel/semsim.hpp"
#include "ltrel/vocab.hpp"

namespace ltrel {

// ---------------------------------------------------------------------------
// Long-tail evaluation: per-class accuracy averaged inside frequency bands,
// full-triplet metrics banded by training triplet frequency, and soft average
// precision where labels semantically close to the gold one count as
// relevant.
// ---------------------------------------------------------------------------

struct PerClassAccuracy {
  std::vector<double> acc_pct;      // 0 for classes with no gold example
  std::vector<long long> gold_count;
};

inline PerClassAccuracy per_class_accuracy(const std::vector<int>& top1,
                                           const std::vector<int>& gold,
                                           int num_classes) {
  if (top1.size() != gold.size())
    throw std::invalid_argument("per-class accuracy: size mismatch");
  PerClassAccuracy out;
  out.acc_pct.assign(num_classes, 0.0);
  out.gold_count.assign(num_classes, 0);
  std::vector<long long> correct(num_classes, 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || gold[i] >= num_classes)
      throw std::invalid_argument("per-class accuracy: gold label out of range");
    ++out.gold_count[gold[i]];
    if (top1[i] == gold[i]) ++correct[gold[i]];
  }
  for (int c = 0; c < num_classes; ++c)
    if (out.gold_count[c] > 0)
      out.acc_pct[c] = 100.0 * correct[c] / out.gold_count[c];
  return out;
}

inline double per_example_accuracy(const std::vector<int>& top1,
                                   const std::vector<int>& gold) {
  if (top1.size() != gold.size() || gold.empty())
    throw std::invalid_argument("per-example accuracy: bad inputs");
  long long correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (top1[i] == gold[i]) ++correct;
  return 100.0 * correct / gold.size();
}

/// Mean per-class accuracy inside each frequency band. A band with no class
/// present in the evaluation split reports no value.
struct BandReport {
  std::optional<double> many, medium, few, all;
};

inline BandReport band_report(const PerClassAccuracy& pc,
                              const FrequencyBands& bands) {
  if (static_cast<int>(pc.acc_pct.size()) != bands.total())
    throw std::invalid_argument("band report: class count mismatch");
  auto mean_over = [&](const std::vector<int>& ids) -> std::optional<double> {
    double sum = 0.0;
    long long n = 0;
    for (int c : ids) {
      if (pc.gold_count[c] == 0) continue;
      sum += pc.acc_pct[c];
      ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / n;
  };
  BandReport r;
  r.many = mean_over(bands.many);
  r.medium = mean_over(bands.medium);
  r.few = mean_over(bands.few);
  std::vector<int> everything;
  everything.insert(everything.end(), bands.many.begin(), bands.many.end());
  everything.insert(everything.end(), bands.medium.begin(), bands.medium.end());
  everything.insert(everything.end(), bands.few.begin(), bands.few.end());
  r.all = mean_over(everything);
  return r;
}

// --- full-triplet metrics -----------------------------------------------------

struct TripletKey {
  int s = 0, r = 0, o = 0;
  bool operator==(const TripletKey& x) const {
    return s == x.s && r == x.r && o == x.o;
  }
  bool operator<(const TripletKey& x) const {
    if (s != x.s) return s < x.s;
    if (r != x.r) return r < x.r;
    return o < x.o;
  }
};

struct TripletKeyHash {
  std::size_t operator()(const TripletKey& k) const {
    std::size_t h = static_cast<std::size_t>(k.s);
    h = h * 1000003u ^ static_cast<std::size_t>(k.r);
    h = h * 1000003u ^ static_cast<std::size_t>(k.o);
    return h;
  }
};

using TripletCounts = std::unordered_map<TripletKey, long long, TripletKeyHash>;

inline TripletCounts count_triplets(const std::vector<int>& s,
                                    const std::vector<int>& r,
                                    const std::vector<int>& o) {
  if (s.size() != r.size() || s.size() != o.size())
    throw std::invalid_argument("triplet counts: size mismatch");
  TripletCounts counts;
  for (std::size_t i = 0; i < s.size(); ++i)
    ++counts[TripletKey{s[i], r[i], o[i]}];
  return counts;
}

/// Full-triplet accuracy. `overall_pct` is per example; the band values
/// average per-triplet-type accuracy, with types banded by their training
/// frequency (types unseen in training fall in the tail band). Band values
/// are absent when training has fewer than 3 distinct types.
struct TripletEval {
  double overall_pct = 0.0;
  std::optional<double> many, medium, few, all;
};

inline TripletEval triplet_accuracy(
    const std::vector<int>& pred_s, const std::vector<int>& pred_r,
    const std::vector<int>& pred_o, const std::vector<int>& gold_s,
    const std::vector<int>& gold_r, const std::vector<int>& gold_o,
    const TripletCounts& train_counts) {
  const std::size_t n = gold_s.size();
  if (pred_s.size() != n || pred_r.size() != n || pred_o.size() != n ||
      gold_r.size() != n || gold_o.size() != n || n == 0)
    throw std::invalid_argument("triplet accuracy: bad input sizes");

  // Rank training types by count (ties by ascending key) and band the ranks.
  std::unordered_map<TripletKey, int, TripletKeyHash> band_of_type;
  const int n_types = static_cast<int>(train_counts.size());
  if (n_types >= 3) {
    std::vector<std::pair<TripletKey, long long>> ranked(train_counts.begin(),
                                                         train_counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    BandSizes sizes = split_band_sizes(n_types);
    for (int i = 0; i < n_types; ++i) {
      int band = i < sizes.many ? 0 : (i < sizes.many + sizes.medium ? 1 : 2);
      band_of_type[ranked[i].first] = band;
    }
  }

  struct TypeStat {
    long long total = 0;
    long long correct = 0;
  };
  std::map<TripletKey, TypeStat> stats;
  long long correct_examples = 0;
  for (std::size_t i = 0; i < n; ++i) {
    TripletKey g{gold_s[i], gold_r[i], gold_o[i]};
    bool ok = pred_s[i] == gold_s[i] && pred_r[i] == gold_r[i] &&
              pred_o[i] == gold_o[i];
    auto& st = stats[g];
    ++st.total;
    if (ok) {
      ++st.correct;
      ++correct_examples;
    }
  }
  TripletEval out;
  out.overall_pct = 100.0 * correct_examples / n;
  if (n_types < 3) return out;
  double sum[3] = {0, 0, 0}, sum_all = 0;
  long long cnt[3] = {0, 0, 0}, cnt_all = 0;
  for (const auto& [key, st] : stats) {
    auto it = band_of_type.find(key);
    int band = it == band_of_type.end() ? 2 : it->second;  // unseen -> tail
    double acc = 100.0 * st.correct / st.total;
    sum[band] += acc;
    ++cnt[band];
    sum_all += acc;
    ++cnt_all;
  }
  if (cnt[0] > 0) out.many = sum[0] / cnt[0];
  if (cnt[1] > 0) out.medium = sum[1] / cnt[1];
  if (cnt[2] > 0) out.few = sum[2] / cnt[2];
  if (cnt_all > 0) out.all = sum_all / cnt_all;
  return out;
}

enum class PairGroup { so, sr, or_ };

inline const char* pair_group_name(PairGroup g) {
  switch (g) {
    case PairGroup::so: return "s_o";
    case PairGroup::sr: return "s_r";
    case PairGroup::or_: return "o_r";
  }
  return "?";
}

/// Groups test examples by a gold label pair and averages the per-group
/// full-triplet accuracy, weighting every observed pair equally.
inline double grouped_pair_accuracy(
    const std::vector<int>& pred_s, const std::vector<int>& pred_r,
    const std::vector<int>& pred_o, const std::vector<int>& gold_s,
    const std::vector<int>& gold_r, const std::vector<int>& gold_o,
    PairGroup group) {
  const std::size_t n = gold_s.size();
  if (pred_s.size() != n || pred_r.size() != n || pred_o.size() != n ||
      gold_r.size() != n || gold_o.size() != n || n == 0)
    throw std::invalid_argument("pair accuracy: bad input sizes");
  struct Stat {
    long long total = 0, correct = 0;
  };
  std::map<std::pair<int, int>, Stat> groups;
  for (std::size_t i = 0; i < n; ++i) {
    std::pair<int, int> key;
    switch (group) {
      case PairGroup::so: key = {gold_s[i], gold_o[i]}; break;
      case PairGroup::sr: key = {gold_s[i], gold_r[i]}; break;
      case PairGroup::or_: key = {gold_o[i], gold_r[i]}; break;
    }
    auto& st = groups[key];
    ++st.total;
    if (pred_s[i] == gold_s[i] && pred_r[i] == gold_r[i] &&
        pred_o[i] == gold_o[i])
      ++st.correct;
  }
  double sum = 0.0;
  for (const auto& [key, st] : groups) sum += 100.0 * st.correct / st.total;
  return sum / groups.size();
}

// --- soft average precision ---------------------------------------------------

/// AP of a ranked candidate list against a widened relevance set: the gold
/// class plus the `t_rel` candidates most similar to it under `sim`
/// (similarity ties broken toward the smaller class id). Returns one AP per
/// cutoff; the normalizer is min(#relevant in the list, cutoff). A list
/// containing no relevant candidate scores 0.
inline std::vector<double> soft_ap(const std::vector<int>& ranked, int gold,
                                   const SimilarityMatrix& sim, int t_rel,
                                   const std::vector<int>& cutoffs) {
  const int n = static_cast<int>(ranked.size());
  if (n == 0) throw std::invalid_argument("soft AP: empty candidate list");
  if (t_rel < 0) throw std::invalid_argument("soft AP: negative widening");
  if (gold < 0 || gold >= sim.size())
    throw std::invalid_argument("soft AP: gold class outside the matrix");
  std::unordered_set<int> seen;
  for (int c : ranked) {
    if (c < 0 || c >= sim.size())
      throw std::invalid_argument("soft AP: candidate outside the matrix");
    if (!seen.insert(c).second)
      throw std::invalid_argument("soft AP: duplicate candidate");
  }
  for (int c : cutoffs)
    if (c < 1 || c > n)
      throw std::invalid_argument(
          "soft AP: cutoff " + std::to_string(c) +
          " outside the candidate list of size " + std::to_string(n));

  std::vector<int> others;
  others.reserve(n);
  for (int c : ranked)
    if (c != gold) others.push_back(c);
  std::sort(others.begin(), others.end(), [&](int a, int b) {
    double sa = sim.sim(gold, a), sb = sim.sim(gold, b);
    if (sa != sb) return sa > sb;
    return a < b;
  });
  std::unordered_set<int> relevant{gold};
  for (int i = 0; i < t_rel && i < static_cast<int>(others.size()); ++i)
    relevant.insert(others[i]);

  long long pool = 0;
  for (int c : ranked)
    if (relevant.count(c)) ++pool;

  std::vector<double> out(cutoffs.size(), 0.0);
  std::vector<double> prec_sum(n + 1, 0.0);
  long long hits = 0;
  for (int i = 0; i < n; ++i) {
    prec_sum[i + 1] = prec_sum[i];
    if (relevant.count(ranked[i])) {
      ++hits;
      prec_sum[i + 1] += static_cast<double>(hits) / (i + 1);
    }
  }
  for (std::size_t ci = 0; ci < cutoffs.size(); ++ci) {
    long long denom = std::min<long long>(pool, cutoffs[ci]);
    out[ci] = denom == 0 ? 0.0 : prec_sum[cutoffs[ci]] / denom;
  }
  return out;
}

/// Mean soft AP over examples, one value per cutoff.
inline std::vector<double> mean_soft_ap(
    const std::vector<std::vector<int>>& ranked_lists,
    const std::vector<int>& golds, const SimilarityMatrix& sim, int t_rel,
    const std::vector<int>& cutoffs) {
  if (ranked_lists.size() != golds.size() || golds.empty())
    throw std::invalid_argument("mean soft AP: bad input sizes");
  std::vector<double> mean(cutoffs.size(), 0.0);
  for (std::size_t i = 0; i < golds.size(); ++i) {
    std::vector<double> ap = soft_ap(ranked_lists[i], golds[i], sim, t_rel,
                                     cutoffs);
    for (std::size_t c = 0; c < ap.size(); ++c) mean[c] += ap[c];
  }
  for (double& v : mean) v /= golds.size();
  return mean;
}

// --- prediction records --------------------------------------------------------

constexpr int kPredictionFormatVersion = 1;

/// Per-example top-k rankings and scores for the three branches.
struct PredictionRecord {
  long long id = 0;
  int gold_s = -1, gold_r = -1, gold_o = -1;
  std::vector<int> rank_s, rank_r, rank_o;
  Vec score_s, score_r, score_o;
};

inline void save_predictions_jsonl(const std::vector<PredictionRecord>& recs,
                                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write predictions: " + path);
  for (const auto& r : recs) {
    nlohmann::json j{
        {"v", kPredictionFormatVersion},
        {"id", r.id},
        {"gold", {{"s", r.gold_s}, {"r", r.gold_r}, {"o", r.gold_o}}},
        {"rank", {{"s", r.rank_s}, {"r", r.rank_r}, {"o", r.rank_o}}},
        {"score", {{"s", r.score_s}, {"r", r.score_r}, {"o", r.score_o}}}};
    out << j.dump() << '\n';
  }
}

namespace detail {

inline void check_ranking(const std::vector<int>& rank, const Vec& score,
                          const std::string& where) {
  if (rank.size() != score.size() || rank.empty())
    throw std::runtime_error(where + ": rank/score arrays disagree");
  for (std::size_t i = 1; i < rank.size(); ++i) {
    bool ok = score[i - 1] > score[i] ||
              (score[i - 1] == score[i] && rank[i - 1] < rank[i]);
    if (!ok)
      throw std::runtime_error(where +
                               ": ranking is not sorted by descending score");
  }
}

}  // namespace detail

// --- report files ----------------------------------------------------------------

namespace detail {

inline std::string fmt_cell(const std::optional<double>& v) {
  if (!v) return "na";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

}  // namespace detail

/// Main accuracy report: one row per branch, banded columns.
inline void save_band_report_csv(const BandReport& subject,
                                 const BandReport& object,
                                 const BandReport& sbj_obj,
                                 const BandReport& relation,
                                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << "branch,many,medium,few,all\n";
  auto row = [&](const char* name, const BandReport& r) {
    out << name << ',' << detail::fmt_cell(r.many) << ','
        << detail::fmt_cell(r.medium) << ',' << detail::fmt_cell(r.few) << ','
        << detail::fmt_cell(r.all) << '\n';
  };
  row("subject", subject);
  row("object", object);
  row("sbj_obj", sbj_obj);
  row("relation", relation);
}

/// Compositional metrics: banded full-triplet accuracy plus pair-grouped
/// accuracy rows.
inline void save_triplet_report_csv(const TripletEval& t, double pair_so,
                                    double pair_sr, double pair_or,
                                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << "metric,many,medium,few,all\n";
  out << "triplet_per_type," << detail::fmt_cell(t.many) << ','
      << detail::fmt_cell(t.medium) << ',' << detail::fmt_cell(t.few) << ','
      << detail::fmt_cell(t.all) << '\n';
  out << "triplet_per_example,,,," << detail::fmt_cell(t.overall_pct) << '\n';
  out << "pair_s_o,,,," << detail::fmt_cell(pair_so) << '\n';
  out << "pair_s_r,,,," << detail::fmt_cell(pair_sr) << '\n';
  out << "pair_o_r,,,," << detail::fmt_cell(pair_or) << '\n';
}

struct SoftApRow {
  std::string metric;
  int cutoff = 0;
  double ap = 0.0;
};

inline void save_soft_ap_csv(const std::vector<SoftApRow>& rows,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << "metric,cutoff,ap\n";
  char buf[40];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f", r.ap);
    out << r.metric << ',' << r.cutoff << ',' << buf << '\n';
  }
}

inline std::vector<PredictionRecord> load_predictions_jsonl(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions: " + path);
  std::vector<PredictionRecord> recs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
    if (j.value("v", 0) != kPredictionFormatVersion)
      throw std::runtime_error(where + ": unsupported prediction record version");
    PredictionRecord r;
    try {
      r.id = j.at("id").get<long long>();
      r.gold_s = j.at("gold").at("s").get<int>();
      r.gold_r = j.at("gold").at("r").get<int>();
      r.gold_o = j.at("gold").at("o").get<int>();
      r.rank_s = j.at("rank").at("s").get<std::vector<int>>();
      r.rank_r = j.at("rank").at("r").get<std::vector<int>>();
      r.rank_o = j.at("rank").at("o").get<std::vector<int>>();
      r.score_s = j.at("score").at("s").get<Vec>();
      r.score_r = j.at("score").at("r").get<Vec>();
      r.score_o = j.at("score").at("o").get<Vec>();
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
    detail::check_ranking(r.rank_s, r.score_s, where);
    detail::check_ranking(r.rank_r, r.score_r, where);
    detail::check_ranking(r.rank_o, r.score_o, where);
    recs.push_back(std::move(r));
  }
  return recs;
}

}  // namespace ltrel
