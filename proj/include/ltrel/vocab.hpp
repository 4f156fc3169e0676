#pragma once

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "ltrel/matrix.hpp"

namespace ltrel {

enum class Branch { entity, relation };

inline const char* branch_name(Branch b) {
  return b == Branch::entity ? "entity" : "relation";
}

/// Label set for one classification branch, ordered by descending training
/// frequency (ties broken lexicographically). Index in `labels` is the class
/// id used everywhere else.
struct ClassVocabulary {
  std::vector<std::string> labels;
  std::vector<long long> frequencies;
  Branch branch = Branch::entity;

  int size() const { return static_cast<int>(labels.size()); }
};

/// Validates and canonically orders a vocabulary.
inline ClassVocabulary make_vocabulary(std::vector<std::string> labels,
                                       std::vector<long long> frequencies,
                                       Branch branch) {
  if (labels.size() != frequencies.size())
    throw std::invalid_argument("vocabulary: labels/frequencies size mismatch");
  if (labels.empty())
    throw std::invalid_argument("vocabulary: needs at least one class");
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty())
      throw std::invalid_argument("vocabulary: empty label at row " +
                                  std::to_string(i));
    if (frequencies[i] < 0)
      throw std::invalid_argument("vocabulary: negative count for label '" +
                                  labels[i] + "'");
    if (!seen.insert(labels[i]).second)
      throw std::invalid_argument("vocabulary: duplicate label '" + labels[i] +
                                  "'");
  }
  std::vector<int> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (frequencies[a] != frequencies[b]) return frequencies[a] > frequencies[b];
    return labels[a] < labels[b];
  });
  ClassVocabulary v;
  v.branch = branch;
  v.labels.reserve(labels.size());
  v.frequencies.reserve(labels.size());
  for (int i : order) {
    v.labels.push_back(std::move(labels[i]));
    v.frequencies.push_back(frequencies[i]);
  }
  return v;
}

/// Reads a `label<TAB>count` file. Blank lines are ignored.
inline ClassVocabulary load_vocab(const std::string& path, Branch branch) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  std::vector<std::string> labels;
  std::vector<long long> freqs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected label<TAB>count");
    std::string label = line.substr(0, tab);
    std::string rest = line.substr(tab + 1);
    long long count = 0;
    try {
      std::size_t pos = 0;
      count = std::stoll(rest, &pos);
      if (pos != rest.size()) throw std::invalid_argument("trailing chars");
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": bad count '" + rest + "'");
    }
    labels.push_back(std::move(label));
    freqs.push_back(count);
  }
  return make_vocabulary(std::move(labels), std::move(freqs), branch);
}

inline void save_vocab(const ClassVocabulary& v, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vocabulary file: " + path);
  for (int i = 0; i < v.size(); ++i)
    out << v.labels[i] << '\t' << v.frequencies[i] << '\n';
}

struct BandSizes {
  int many = 0;
  int medium = 0;
  int few = 0;
};

/// Head/torso/tail partition sizes for K ranked classes: the most frequent
/// 5% (rounded up) are "many", the least frequent 80% (rounded down) are
/// "few", the remainder is "medium". Computed in integer arithmetic so the
/// split depends only on K.
inline BandSizes split_band_sizes(int k) {
  if (k < 3)
    throw std::invalid_argument(
        "band split requires at least 3 classes, got " + std::to_string(k));
  BandSizes s;
  s.many = (5 * k + 99) / 100;   // ceil(0.05 K)
  s.few = (80 * k) / 100;        // floor(0.80 K)
  s.medium = k - s.many - s.few;
  if (s.medium < 0) {  // tiny K where ceil+floor overshoot; shrink the tail
    s.few += s.medium;
    s.medium = 0;
  }
  return s;
}

/// Class ids per frequency band, in vocabulary (rank) order.
struct FrequencyBands {
  std::vector<int> many;
  std::vector<int> medium;
  std::vector<int> few;

  int total() const {
    return static_cast<int>(many.size() + medium.size() + few.size());
  }
};

inline FrequencyBands split_bands(const ClassVocabulary& v) {
  for (int i = 1; i < v.size(); ++i)
    if (v.frequencies[i - 1] < v.frequencies[i])
      throw std::invalid_argument(
          "band split requires frequency-sorted vocabulary");
  BandSizes s = split_band_sizes(v.size());
  FrequencyBands b;
  for (int i = 0; i < s.many; ++i) b.many.push_back(i);
  for (int i = s.many; i < s.many + s.medium; ++i) b.medium.push_back(i);
  for (int i = s.many + s.medium; i < v.size(); ++i) b.few.push_back(i);
  return b;
}

/// 0 = many, 1 = medium, 2 = few, indexed by class id.
inline std::vector<int> band_of_class(const FrequencyBands& b) {
  std::vector<int> band(b.total(), -1);
  for (int c : b.many) band[c] = 0;
  for (int c : b.medium) band[c] = 1;
  for (int c : b.few) band[c] = 2;
  return band;
}

inline nlohmann::json bands_to_json(const FrequencyBands& b,
                                    const ClassVocabulary& v) {
  auto names = [&](const std::vector<int>& ids) {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int c : ids) out.push_back(v.labels.at(c));
    return out;
  };
  return nlohmann::json{{"many", names(b.many)},
                        {"medium", names(b.medium)},
                        {"few", names(b.few)}};
}

inline void save_bands(const FrequencyBands& b, const ClassVocabulary& v,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write bands file: " + path);
  out << bands_to_json(b, v).dump(2) << '\n';
}

inline FrequencyBands load_bands(const std::string& path,
                                 const ClassVocabulary& v) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bands file: " + path);
  nlohmann::json j;
  in >> j;
  std::unordered_map<std::string, int> index;
  for (int i = 0; i < v.size(); ++i) index[v.labels[i]] = i;
  auto ids = [&](const char* key) {
    std::vector<int> out;
    for (const auto& name : j.at(key)) {
      auto it = index.find(name.get<std::string>());
      if (it == index.end())
        throw std::runtime_error("bands file references unknown label '" +
                                 name.get<std::string>() + "'");
      out.push_back(it->second);
    }
    return out;
  };
  FrequencyBands b{ids("many"), ids("medium"), ids("few")};
  if (b.total() != v.size())
    throw std::runtime_error("bands file does not cover the vocabulary");
  return b;
}

enum class WeightMode { uniform, inverse_frequency };

inline WeightMode weight_mode_from_string(const std::string& s) {
  if (s == "uniform") return WeightMode::uniform;
  if (s == "inverse" || s == "inverse_frequency")
    return WeightMode::inverse_frequency;
  throw std::invalid_argument("unknown weight mode: " + s);
}

/// Per-class loss weights, normalized to mean 1 so that weighting does not
/// change the overall loss scale.
inline Vec class_weights(const ClassVocabulary& v, WeightMode mode) {
  if (v.size() == 0) throw std::invalid_argument("class_weights: empty vocabulary");
  Vec w(v.size(), 1.0);
  if (mode == WeightMode::inverse_frequency) {
    for (int i = 0; i < v.size(); ++i) {
      if (v.frequencies[i] <= 0)
        throw std::invalid_argument(
            "inverse-frequency weights need positive counts, label '" +
            v.labels[i] + "' has " + std::to_string(v.frequencies[i]));
      w[i] = 1.0 / static_cast<double>(v.frequencies[i]);
    }
    double mean = std::accumulate(w.begin(), w.end(), 0.0) / w.size();
    for (double& x : w) x /= mean;
  }
  return w;
}

}  // namespace ltrel
