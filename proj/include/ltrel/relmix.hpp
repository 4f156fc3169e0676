#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ltrel/data.hpp"
#include "ltrel/losses.hpp"
#include "ltrel/rng.hpp"
#include "ltrel/vocab.hpp"

namespace ltrel {

// ---------------------------------------------------------------------------
// Tail-oriented triplet interpolation. Each synthetic example blends a base
// example i with a convex combination of two donors j and k, using the same
// coefficients for the features of all three branches and for their labels:
//
//   x~ = lambda * x_i + (1 - lambda) * (alpha * x_j + (1 - alpha) * x_k)
//
// with alpha in {0, 1}. i and j are drawn from the medium+few bands and k
// from the few band, so the synthetic mass concentrates on the tail.
// ---------------------------------------------------------------------------

struct RelMixConfig {
  double lambda_min = 0.7;
  double lambda_max = 0.8;
  double alpha_p = 0.5;  // probability that the donor branch picks j
  double eta = 0.5;      // synthetic examples per real example, per epoch
  enum class BandBy { relation, entity } band_by = BandBy::relation;
  bool same_scene = true;  // restrict draws to one scene when ids exist
};

inline void validate_relmix_config(const RelMixConfig& cfg) {
  if (!(cfg.lambda_min >= 0.0 && cfg.lambda_min <= cfg.lambda_max &&
        cfg.lambda_max <= 1.0))
    throw std::invalid_argument("relmix: need 0 <= lambda_min <= lambda_max <= 1");
  if (!(cfg.alpha_p >= 0.0 && cfg.alpha_p <= 1.0))
    throw std::invalid_argument("relmix: alpha probability outside [0, 1]");
  if (!(cfg.eta >= 0.0))
    throw std::invalid_argument("relmix: negative augmentation ratio");
}

/// A mixed example: interpolated features plus sparse label distributions,
/// with provenance for auditing.
struct AugmentedExample {
  Vec x_s, x_r, x_o;
  SoftLabel y_s, y_r, y_o;
  int src_i = -1;
  int src_j = -1;
  int src_k = -1;
  double lambda = 1.0;
  int alpha = 1;
};

/// Blends (i, j, k) with the given coefficients. lambda == 1 returns example
/// i unchanged; lambda == 0 with alpha == 1 returns example j.
inline AugmentedExample mix_examples(const TripletExample& ei,
                                     const TripletExample& ej,
                                     const TripletExample& ek, double lambda,
                                     int alpha) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("relmix: lambda outside [0, 1]");
  if (alpha != 0 && alpha != 1)
    throw std::invalid_argument("relmix: alpha must be 0 or 1");
  if (ei.x_s.size() != ej.x_s.size() || ei.x_s.size() != ek.x_s.size())
    throw std::invalid_argument("relmix: feature dimension mismatch");
  const double ci = lambda;
  const double cj = (1.0 - lambda) * alpha;
  const double ck = (1.0 - lambda) * (1 - alpha);
  auto mix_vec = [&](const Vec& a, const Vec& b, const Vec& c) {
    Vec out(a.size(), 0.0);
    for (std::size_t d = 0; d < a.size(); ++d)
      out[d] = ci * a[d] + cj * b[d] + ck * c[d];
    return out;
  };
  auto mix_label = [&](int ya, int yb, int yc) {
    SoftLabel out;
    auto add = [&out](int cls, double w) {
      if (w == 0.0) return;
      for (auto& [c0, w0] : out)
        if (c0 == cls) {
          w0 += w;
          return;
        }
      out.emplace_back(cls, w);
    };
    add(ya, ci);
    add(yb, cj);
    add(yc, ck);
    std::sort(out.begin(), out.end());
    return out;
  };
  AugmentedExample a;
  a.x_s = mix_vec(ei.x_s, ej.x_s, ek.x_s);
  a.x_r = mix_vec(ei.x_r, ej.x_r, ek.x_r);
  a.x_o = mix_vec(ei.x_o, ej.x_o, ek.x_o);
  a.y_s = mix_label(ei.y_s, ej.y_s, ek.y_s);
  a.y_r = mix_label(ei.y_r, ej.y_r, ek.y_r);
  a.y_o = mix_label(ei.y_o, ej.y_o, ek.y_o);
  a.lambda = lambda;
  a.alpha = alpha;
  return a;
}

/// Example pools the sampler draws from, optionally grouped by scene.
struct MixPools {
  std::vector<int> mid_few;  // base/donor pool (medium + few bands)
  std::vector<int> few;      // tail donor pool
  bool by_scene = false;
  std::vector<std::vector<int>> scene_mid_few;  // aligned, per eligible scene
  std::vector<std::vector<int>> scene_few;
};

/// Band of one example: its relation label's band, or with entity banding the
/// rarer of its subject/object labels.
inline int example_band(const TripletExample& e,
                        const std::vector<int>& ent_band_of_class,
                        const std::vector<int>& rel_band_of_class,
                        RelMixConfig::BandBy by) {
  if (by == RelMixConfig::BandBy::relation) return rel_band_of_class[e.y_r];
  return std::max(ent_band_of_class[e.y_s], ent_band_of_class[e.y_o]);
}

inline MixPools build_mix_pools(const Dataset& ds,
                                const FrequencyBands& ent_bands,
                                const FrequencyBands& rel_bands,
                                const RelMixConfig& cfg) {
  validate_relmix_config(cfg);
  std::vector<int> ent_band = band_of_class(ent_bands);
  std::vector<int> rel_band = band_of_class(rel_bands);
  MixPools pools;
  for (int i = 0; i < ds.size(); ++i) {
    int band = example_band(ds.examples[i], ent_band, rel_band, cfg.band_by);
    if (band >= 1) pools.mid_few.push_back(i);
    if (band == 2) pools.few.push_back(i);
  }
  if (pools.few.empty())
    throw std::invalid_argument(
        "relmix: no training example carries a few-band label; regenerate the "
        "dataset with more examples or a larger tail");
  if (ds.has_scenes() && cfg.same_scene) {
    pools.by_scene = true;
    std::map<int, std::pair<std::vector<int>, std::vector<int>>> by_scene;
    for (int idx : pools.mid_few) by_scene[ds.scenes[idx]].first.push_back(idx);
    for (int idx : pools.few) by_scene[ds.scenes[idx]].second.push_back(idx);
    for (auto& [scene, lists] : by_scene) {
      if (lists.second.empty()) continue;  // scene has no tail example
      pools.scene_mid_few.push_back(std::move(lists.first));
      pools.scene_few.push_back(std::move(lists.second));
    }
    if (pools.scene_few.empty())
      throw std::invalid_argument(
          "relmix: no scene contains a few-band example; regenerate the "
          "dataset or disable same-scene sampling");
  }
  return pools;
}

/// Draws (i, j, k): i, j uniform over medium+few, k uniform over few, all
/// from one uniformly chosen eligible scene when scene grouping is active.
/// Repeats are allowed.
inline std::array<int, 3> sample_mix_indices(const MixPools& pools, Rng& rng) {
  const std::vector<int>* mf = &pools.mid_few;
  const std::vector<int>* fw = &pools.few;
  if (pools.by_scene) {
    std::size_t s = rng.uniform_index(pools.scene_few.size());
    mf = &pools.scene_mid_few[s];
    fw = &pools.scene_few[s];
  }
  int i = (*mf)[rng.uniform_index(mf->size())];
  int j = (*mf)[rng.uniform_index(mf->size())];
  int k = (*fw)[rng.uniform_index(fw->size())];
  return {i, j, k};
}

/// Generates round(eta * N) mixed examples. Randomness is partitioned per
/// output index, so example t is reproducible independent of the others.
inline std::vector<AugmentedExample> augment_epoch(const Dataset& ds,
                                                   const MixPools& pools,
                                                   const RelMixConfig& cfg,
                                                   Rng& rng) {
  validate_relmix_config(cfg);
  const long long n_aug = std::llround(cfg.eta * ds.size());
  std::vector<AugmentedExample> out;
  out.reserve(static_cast<std::size_t>(n_aug));
  const std::uint64_t base = rng.next_u64();
  for (long long t = 0; t < n_aug; ++t) {
    Rng r(mix_key(base, static_cast<std::uint64_t>(t)));
    auto [i, j, k] = sample_mix_indices(pools, r);
    double lambda = r.uniform(cfg.lambda_min, cfg.lambda_max);
    int alpha = r.bernoulli(cfg.alpha_p) ? 1 : 0;
    AugmentedExample a =
        mix_examples(ds.examples[i], ds.examples[j], ds.examples[k], lambda,
                     alpha);
    a.src_i = i;
    a.src_j = j;
    a.src_k = k;
    out.push_back(std::move(a));
  }
  return out;
}

inline std::vector<AugmentedExample> augment_epoch(
    const Dataset& ds, const FrequencyBands& ent_bands,
    const FrequencyBands& rel_bands, const RelMixConfig& cfg, Rng& rng) {
  MixPools pools = build_mix_pools(ds, ent_bands, rel_bands, cfg);
  return augment_epoch(ds, pools, cfg, rng);
}

/// One JSON object per mixed example, for offline inspection.
inline void save_augmented_jsonl(const std::vector<AugmentedExample>& aug,
                                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write augmentation audit: " + path);
  auto label_json = [](const SoftLabel& y) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [cls, w] : y) j.push_back({cls, w});
    return j;
  };
  for (const auto& a : aug) {
    nlohmann::json j{{"i", a.src_i},       {"j", a.src_j},
                     {"k", a.src_k},       {"lambda", a.lambda},
                     {"alpha", a.alpha},   {"ys", label_json(a.y_s)},
                     {"yr", label_json(a.y_r)}, {"yo", label_json(a.y_o)}};
    out << j.dump() << '\n';
  }
}

}  // namespace ltrel
