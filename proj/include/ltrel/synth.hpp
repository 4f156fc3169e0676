#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ltrel/data.hpp"
#include "ltrel/matrix.hpp"
#include "ltrel/rng.hpp"
#include "ltrel/semsim.hpp"
#include "ltrel/taxonomy.hpp"
#include "ltrel/vocab.hpp"

namespace ltrel {

// ---------------------------------------------------------------------------
// Synthetic scene-graph generator. Labels follow a Zipf law; each class has a
// latent unit-norm prototype in feature space and examples are the prototype
// plus isotropic Gaussian noise. Relations are mostly a deterministic
// function of the (subject, object) pair, so triplets carry compositional
// structure, with a small label-noise rate on top.
// ---------------------------------------------------------------------------

struct GenConfig {
  int k_ent = 100;
  int k_rel = 30;
  double zipf_s = 1.5;        // skew of the label distribution
  int d_in = 32;              // feature dimension
  double noise_sigma = 0.35;  // feature noise around the class prototype
  int n_train = 20000;
  int n_val = 2000;
  int n_test = 5000;
  double scene_mean = 4.0;      // mean triplets per scene
  double relation_noise = 0.1;  // chance a relation label is re-drawn iid
  std::uint64_t seed = 0;
};

inline void validate_gen_config(const GenConfig& c) {
  if (c.k_ent < 3 || c.k_rel < 3)
    throw std::invalid_argument("gen config: need at least 3 classes per branch");
  if (c.d_in < 1) throw std::invalid_argument("gen config: feature dim < 1");
  if (c.noise_sigma < 0.0)
    throw std::invalid_argument("gen config: negative noise");
  if (c.zipf_s < 0.0) throw std::invalid_argument("gen config: negative skew");
  if (c.n_train < std::max(c.k_ent, c.k_rel))
    throw std::invalid_argument(
        "gen config: n_train must cover every class at least once");
  if (c.n_val < 1 || c.n_test < 1)
    throw std::invalid_argument("gen config: empty evaluation split");
  if (c.scene_mean <= 0.0 || c.scene_mean > 50.0)
    throw std::invalid_argument("gen config: scene mean outside (0, 50]");
  if (c.relation_noise < 0.0 || c.relation_noise > 1.0)
    throw std::invalid_argument("gen config: relation noise outside [0, 1]");
}

/// Integer counts proportional to rank^(-s), summing exactly to `total` with
/// every class getting at least one. Rounded by largest remainder, remainder
/// ties going to the lower rank.
inline std::vector<long long> zipf_frequencies(int k, double s,
                                               long long total) {
  if (k <= 0) throw std::invalid_argument("zipf: need at least one class");
  if (total < k)
    throw std::invalid_argument("zipf: total " + std::to_string(total) +
                                " cannot cover " + std::to_string(k) +
                                " classes");
  std::vector<double> w(k);
  double wsum = 0.0;
  for (int r = 0; r < k; ++r) {
    w[r] = std::pow(static_cast<double>(r + 1), -s);
    wsum += w[r];
  }
  std::vector<long long> count(k);
  std::vector<std::pair<double, int>> frac(k);
  long long assigned = 0;
  for (int r = 0; r < k; ++r) {
    double quota = static_cast<double>(total) * w[r] / wsum;
    count[r] = static_cast<long long>(std::floor(quota));
    assigned += count[r];
    frac[r] = {quota - std::floor(quota), r};
  }
  std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (long long i = 0; i < total - assigned; ++i) ++count[frac[i % k].second];
  // Give every class at least one, taking from the current maximum.
  for (int r = 0; r < k; ++r) {
    while (count[r] == 0) {
      int donor = static_cast<int>(
          std::max_element(count.begin(), count.end()) - count.begin());
      if (count[donor] < 2)
        throw std::logic_error("zipf: cannot give every class one sample");
      --count[donor];
      ++count[r];
    }
  }
  return count;
}

namespace detail {

/// Cumulative distribution over ranks with Zipf weights.
inline std::vector<double> zipf_cdf(int k, double s) {
  std::vector<double> cdf(k);
  double acc = 0.0;
  for (int r = 0; r < k; ++r) {
    acc += std::pow(static_cast<double>(r + 1), -s);
    cdf[r] = acc;
  }
  for (double& v : cdf) v /= acc;
  cdf.back() = 1.0;
  return cdf;
}

inline int draw_from_cdf(const std::vector<double>& cdf, double u) {
  return static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) -
                          cdf.begin());
}

inline int poisson(Rng& rng, double mean) {
  double limit = std::exp(-mean);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= rng.uniform();
  } while (p > limit);
  return k - 1;
}

inline std::string padded_label(const char* prefix, int index, int k) {
  std::size_t width = 1;
  for (int v = k - 1; v >= 10; v /= 10) ++width;
  width = std::max<std::size_t>(width, 3);
  std::string digits = std::to_string(index);
  if (digits.size() < width)
    digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

inline void shuffle(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[rng.uniform_index(i)]);
}

}  // namespace detail

/// Everything one generation run produces, with labels already remapped to
/// frequency-sorted vocabulary ids.
struct SynthData {
  Dataset train, val, test;
  ClassVocabulary vocab_ent, vocab_rel;
  FrequencyBands bands_ent, bands_rel;
  Matrix means_ent, means_rel;  // latent prototypes, rows in vocabulary order
  Taxonomy tax_ent, tax_rel;    // random is-a trees over the labels
  ICTable ic_ent, ic_rel;
};

inline SynthData generate_dataset(const GenConfig& cfg) {
  validate_gen_config(cfg);
  const std::uint64_t seed = cfg.seed;

  auto draw_means = [&](int k, const char* tag) {
    Matrix m(k, cfg.d_in);
    for (int c = 0; c < k; ++c) {
      Rng rng = substream(seed, tag, c);
      double* row = m.row(c);
      for (int d = 0; d < cfg.d_in; ++d) row[d] = rng.normal();
      double n = norm2(row, cfg.d_in);
      if (n < 1e-9) {
        row[0] = 1.0;
        n = 1.0;
      }
      for (int d = 0; d < cfg.d_in; ++d) row[d] /= n;
    }
    return m;
  };
  Matrix means_ent = draw_means(cfg.k_ent, "means/ent");
  Matrix means_rel = draw_means(cfg.k_rel, "means/rel");

  const std::vector<double> cdf_ent = detail::zipf_cdf(cfg.k_ent, cfg.zipf_s);
  const std::vector<double> cdf_rel = detail::zipf_cdf(cfg.k_rel, cfg.zipf_s);

  // Train subjects and objects: exact Zipf counts, independently shuffled, so
  // every entity class is seen and empirical ranks match the target law.
  std::vector<long long> ent_counts =
      zipf_frequencies(cfg.k_ent, cfg.zipf_s, cfg.n_train);
  std::vector<int> subj, obj;
  subj.reserve(cfg.n_train);
  for (int c = 0; c < cfg.k_ent; ++c)
    for (long long n = 0; n < ent_counts[c]; ++n) subj.push_back(c);
  obj = subj;
  {
    Rng rs = substream(seed, "train/subj_shuffle");
    Rng ro = substream(seed, "train/obj_shuffle");
    detail::shuffle(subj, rs);
    detail::shuffle(obj, ro);
  }

  // Relation for a (subject, object) pair: a fixed table draw, re-drawn iid
  // with probability relation_noise.
  auto table_relation = [&](int s, int o) {
    std::uint64_t key = static_cast<std::uint64_t>(s) * cfg.k_ent + o;
    Rng rng = substream(seed, "rel_table", key);
    return detail::draw_from_cdf(cdf_rel, rng.uniform());
  };
  auto relation_for = [&](int s, int o, Rng& rng) {
    double u = rng.uniform();
    if (u < cfg.relation_noise) return detail::draw_from_cdf(cdf_rel, rng.uniform());
    return table_relation(s, o);
  };

  const long long n_total =
      static_cast<long long>(cfg.n_train) + cfg.n_val + cfg.n_test;
  std::vector<int> ys(n_total), yr(n_total), yo(n_total);
  for (int i = 0; i < cfg.n_train; ++i) {
    ys[i] = subj[i];
    yo[i] = obj[i];
    Rng rng = substream(seed, "labels/rel", static_cast<std::uint64_t>(i));
    yr[i] = relation_for(ys[i], yo[i], rng);
  }
  for (long long i = cfg.n_train; i < n_total; ++i) {
    Rng rng = substream(seed, "labels/iid", static_cast<std::uint64_t>(i));
    ys[i] = detail::draw_from_cdf(cdf_ent, rng.uniform());
    yo[i] = detail::draw_from_cdf(cdf_ent, rng.uniform());
    yr[i] = relation_for(ys[i], yo[i], rng);
  }

  // Patch train relations so no class is unseen: overwrite examples from the
  // back whose current label can spare an occurrence.
  {
    std::vector<long long> rel_counts(cfg.k_rel, 0);
    for (int i = 0; i < cfg.n_train; ++i) ++rel_counts[yr[i]];
    int cursor = cfg.n_train - 1;
    for (int c = 0; c < cfg.k_rel; ++c) {
      if (rel_counts[c] > 0) continue;
      while (cursor >= 0 && rel_counts[yr[cursor]] < 2) --cursor;
      if (cursor < 0)
        throw std::logic_error("generator: cannot cover every relation class");
      --rel_counts[yr[cursor]];
      yr[cursor] = c;
      rel_counts[c] = 1;
      --cursor;
    }
  }

  // Vocabularies from train occurrences (entities count both roles).
  std::vector<long long> ent_freq(cfg.k_ent, 0), rel_freq(cfg.k_rel, 0);
  for (int i = 0; i < cfg.n_train; ++i) {
    ++ent_freq[ys[i]];
    ++ent_freq[yo[i]];
    ++rel_freq[yr[i]];
  }
  std::vector<std::string> ent_names(cfg.k_ent), rel_names(cfg.k_rel);
  for (int c = 0; c < cfg.k_ent; ++c)
    ent_names[c] = detail::padded_label("ent_", c, cfg.k_ent);
  for (int c = 0; c < cfg.k_rel; ++c)
    rel_names[c] = detail::padded_label("rel_", c, cfg.k_rel);

  SynthData out;
  out.vocab_ent = make_vocabulary(ent_names, ent_freq, Branch::entity);
  out.vocab_rel = make_vocabulary(rel_names, rel_freq, Branch::relation);
  out.bands_ent = split_bands(out.vocab_ent);
  out.bands_rel = split_bands(out.vocab_rel);

  // Latent index -> vocabulary id.
  auto remap_of = [](const std::vector<std::string>& latent_names,
                     const ClassVocabulary& vocab) {
    std::unordered_map<std::string, int> pos;
    for (int i = 0; i < vocab.size(); ++i) pos[vocab.labels[i]] = i;
    std::vector<int> map(latent_names.size());
    for (std::size_t c = 0; c < latent_names.size(); ++c)
      map[c] = pos.at(latent_names[c]);
    return map;
  };
  std::vector<int> ent_map = remap_of(ent_names, out.vocab_ent);
  std::vector<int> rel_map = remap_of(rel_names, out.vocab_rel);

  out.means_ent = Matrix(cfg.k_ent, cfg.d_in);
  out.means_rel = Matrix(cfg.k_rel, cfg.d_in);
  for (int c = 0; c < cfg.k_ent; ++c)
    std::copy(means_ent.row(c), means_ent.row(c) + cfg.d_in,
              out.means_ent.row(ent_map[c]));
  for (int c = 0; c < cfg.k_rel; ++c)
    std::copy(means_rel.row(c), means_rel.row(c) + cfg.d_in,
              out.means_rel.row(rel_map[c]));

  // Features and split assembly.
  long long next_id = 0;
  int next_scene = 0;
  auto build_split = [&](int count, const char* scene_tag) {
    Dataset d;
    d.dim = cfg.d_in;
    Rng scene_rng = substream(seed, scene_tag);
    int left_in_scene = 0;
    for (int n = 0; n < count; ++n, ++next_id) {
      if (left_in_scene == 0) {
        left_in_scene = std::max(1, detail::poisson(scene_rng, cfg.scene_mean));
        ++next_scene;
      }
      --left_in_scene;
      TripletExample e;
      const long long id = next_id;
      Rng rng = substream(seed, "features", static_cast<std::uint64_t>(id));
      auto draw = [&](const Matrix& means, int latent) {
        Vec x(cfg.d_in);
        const double* mu = means.row(latent);
        for (int dd = 0; dd < cfg.d_in; ++dd)
          x[dd] = mu[dd] + cfg.noise_sigma * rng.normal();
        return x;
      };
      e.x_s = draw(means_ent, ys[id]);
      e.x_r = draw(means_rel, yr[id]);
      e.x_o = draw(means_ent, yo[id]);
      e.y_s = ent_map[ys[id]];
      e.y_r = rel_map[yr[id]];
      e.y_o = ent_map[yo[id]];
      d.examples.push_back(std::move(e));
      d.ids.push_back(id);
      d.scenes.push_back(next_scene - 1);
    }
    return d;
  };
  out.train = build_split(cfg.n_train, "scenes/train");
  out.val = build_split(cfg.n_val, "scenes/val");
  out.test = build_split(cfg.n_test, "scenes/test");
  validate_dataset(out.train, cfg.k_ent, cfg.k_rel);
  validate_dataset(out.val, cfg.k_ent, cfg.k_rel);
  validate_dataset(out.test, cfg.k_ent, cfg.k_rel);

  // Random is-a trees and information content, for similarity oracles.
  auto build_tax = [&](const ClassVocabulary& vocab, const char* tag) {
    std::vector<std::pair<std::string, std::string>> edges;
    Rng rng = substream(seed, tag);
    for (int i = 0; i < vocab.size(); ++i) {
      std::uint64_t pick = rng.uniform_index(static_cast<std::uint64_t>(i) + 1);
      std::string parent =
          pick == 0 ? "__root__" : vocab.labels[static_cast<int>(pick) - 1];
      edges.emplace_back(vocab.labels[i], parent);
    }
    return make_taxonomy(edges);
  };
  out.tax_ent = build_tax(out.vocab_ent, "taxonomy/ent");
  out.tax_rel = build_tax(out.vocab_rel, "taxonomy/rel");
  auto build_ic = [&](const Taxonomy& tax, const char* tag) {
    Rng rng = substream(seed, tag);
    ICTable t;
    t.ic.assign(tax.size(), 0.0);
    // Node ids are topological (parents interned before children except the
    // root, which has no stored value dependency), so fill by depth order.
    std::vector<int> order(tax.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (tax.depth[a] != tax.depth[b]) return tax.depth[a] < tax.depth[b];
      return a < b;
    });
    for (int node : order) {
      if (tax.parent[node] == -1)
        t.ic[node] = 0.0;
      else
        t.ic[node] = t.ic[tax.parent[node]] + rng.uniform(0.2, 1.0);
    }
    return t;
  };
  out.ic_ent = build_ic(out.tax_ent, "ic/ent");
  out.ic_rel = build_ic(out.tax_rel, "ic/rel");
  return out;
}

// --- dataset directory layout ------------------------------------------------

constexpr int kDataFormatVersion = 1;

/// Writes the full directory: three JSONL splits, vocabularies, band files,
/// prototype embeddings, taxonomies with IC tables, and a manifest.
inline void write_dataset_dir(const SynthData& d, const GenConfig& cfg,
                              const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto p = [&](const char* name) { return dir + "/" + name; };
  save_dataset_jsonl(d.train, p("train.jsonl"));
  save_dataset_jsonl(d.val, p("val.jsonl"));
  save_dataset_jsonl(d.test, p("test.jsonl"));
  save_vocab(d.vocab_ent, p("vocab_ent.tsv"));
  save_vocab(d.vocab_rel, p("vocab_rel.tsv"));
  save_bands(d.bands_ent, d.vocab_ent, p("bands_ent.json"));
  save_bands(d.bands_rel, d.vocab_rel, p("bands_rel.json"));
  auto save_means = [&](const Matrix& m, const ClassVocabulary& v,
                        const char* name) {
    EmbeddingTable t;
    t.labels = v.labels;
    t.vectors = m;
    save_embeddings(t, p(name));
  };
  save_means(d.means_ent, d.vocab_ent, "embed_ent.txt");
  save_means(d.means_rel, d.vocab_rel, "embed_rel.txt");
  save_taxonomy(d.tax_ent, p("taxonomy_ent.tsv"));
  save_taxonomy(d.tax_rel, p("taxonomy_rel.tsv"));
  save_ic(d.ic_ent, d.tax_ent, p("ic_ent.tsv"));
  save_ic(d.ic_rel, d.tax_rel, p("ic_rel.tsv"));
  nlohmann::json manifest{
      {"format_version", kDataFormatVersion},
      {"config",
       {{"k_ent", cfg.k_ent},
        {"k_rel", cfg.k_rel},
        {"zipf_s", cfg.zipf_s},
        {"d_in", cfg.d_in},
        {"noise_sigma", cfg.noise_sigma},
        {"n_train", cfg.n_train},
        {"n_val", cfg.n_val},
        {"n_test", cfg.n_test},
        {"scene_mean", cfg.scene_mean},
        {"relation_noise", cfg.relation_noise},
        {"seed", cfg.seed}}},
      {"files",
       {"train.jsonl", "val.jsonl", "test.jsonl", "vocab_ent.tsv",
        "vocab_rel.tsv", "bands_ent.json", "bands_rel.json", "embed_ent.txt",
        "embed_rel.txt", "taxonomy_ent.tsv", "taxonomy_rel.tsv", "ic_ent.tsv",
        "ic_rel.tsv"}}};
  std::ofstream mf(p("manifest.json"));
  if (!mf) throw std::runtime_error("cannot write manifest in " + dir);
  mf << manifest.dump(2) << '\n';
}

/// In-memory view of a dataset directory.
struct DataDir {
  Dataset train, val, test;
  ClassVocabulary vocab_ent, vocab_rel;
  FrequencyBands bands_ent, bands_rel;
  EmbeddingTable embed_ent, embed_rel;  // empty when the files are absent
  bool has_embeddings = false;
};

inline DataDir load_data_dir(const std::string& dir) {
  auto p = [&](const char* name) { return dir + "/" + name; };
  DataDir d;
  d.vocab_ent = load_vocab(p("vocab_ent.tsv"), Branch::entity);
  d.vocab_rel = load_vocab(p("vocab_rel.tsv"), Branch::relation);
  d.bands_ent = load_bands(p("bands_ent.json"), d.vocab_ent);
  d.bands_rel = load_bands(p("bands_rel.json"), d.vocab_rel);
  d.train = load_dataset_jsonl(p("train.jsonl"));
  d.val = load_dataset_jsonl(p("val.jsonl"));
  d.test = load_dataset_jsonl(p("test.jsonl"));
  validate_dataset(d.train, d.vocab_ent.size(), d.vocab_rel.size());
  validate_dataset(d.val, d.vocab_ent.size(), d.vocab_rel.size());
  validate_dataset(d.test, d.vocab_ent.size(), d.vocab_rel.size());
  if (std::filesystem::exists(p("embed_ent.txt")) &&
      std::filesystem::exists(p("embed_rel.txt"))) {
    d.embed_ent = load_embeddings(p("embed_ent.txt"));
    d.embed_rel = load_embeddings(p("embed_rel.txt"));
    d.has_embeddings = true;
  }
  return d;
}

}  // namespace ltrel
