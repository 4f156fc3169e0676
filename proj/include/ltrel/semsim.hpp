#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "ltrel/matrix.hpp"
#include "ltrel/taxonomy.hpp"
#include "ltrel/vocab.hpp"

namespace ltrel {

// ---------------------------------------------------------------------------
// Pairwise semantic similarity between label names, used as relevance oracles
// for retrieval-style evaluation. Taxonomy-based variants follow the classic
// WordNet formulations; the embedding variant is plain cosine.
// ---------------------------------------------------------------------------

/// 1 / (1 + shortest-path-edges).
inline double path_similarity(const Taxonomy& t, int a, int b) {
  return 1.0 / (1.0 + path_edges(t, a, b));
}

/// 2 * depth(lcs) / (depth(a) + depth(b)), depths counted in nodes.
inline double wup_similarity(const Taxonomy& t, int a, int b) {
  int l = lowest_common_subsumer(t, a, b);
  return 2.0 * t.depth[l] / (static_cast<double>(t.depth[a]) + t.depth[b]);
}

/// -ln((d + 1) / (2 * max_depth)) for a path of d edges in a taxonomy of the
/// given maximum node depth. Exposed separately so the boundary behaviour is
/// testable for any d.
inline double lch_from_distance(int d, int max_depth) {
  if (d < 0) throw std::invalid_argument("lch: negative path length");
  if (max_depth < 1) throw std::invalid_argument("lch: empty taxonomy");
  return -std::log((d + 1) / (2.0 * max_depth));
}

inline double lch_similarity(const Taxonomy& t, int a, int b) {
  return lch_from_distance(path_edges(t, a, b), t.max_depth);
}

enum class IcMetric { res, jcn, lin };

constexpr double kDefaultJcnCap = 1e12;

/// Information-content similarities. `jcn_cap` bounds jcn when the IC
/// distance collapses to zero (a node paired with itself).
inline double ic_similarity(const Taxonomy& t, const ICTable& ic, int a, int b,
                            IcMetric metric, double jcn_cap = kDefaultJcnCap) {
  int l = lowest_common_subsumer(t, a, b);
  double ic_a = ic.at(a), ic_b = ic.at(b), ic_l = ic.at(l);
  switch (metric) {
    case IcMetric::res:
      return ic_l;
    case IcMetric::lin: {
      double denom = ic_a + ic_b;
      if (denom < 1e-12) return a == b ? 1.0 : 0.0;
      return 2.0 * ic_l / denom;
    }
    case IcMetric::jcn: {
      double denom = ic_a + ic_b - 2.0 * ic_l;
      if (denom < 1e-12) return jcn_cap;
      return 1.0 / denom;
    }
  }
  throw std::logic_error("ic_similarity: unreachable");
}

inline double cosine_similarity(const Vec& u, const Vec& v) {
  if (u.size() != v.size())
    throw std::invalid_argument("cosine: dimension mismatch");
  if (u.empty()) throw std::invalid_argument("cosine: empty vectors");
  double nu = norm2(u.data(), static_cast<int>(u.size()));
  double nv = norm2(v.data(), static_cast<int>(v.size()));
  if (nu == 0.0 || nv == 0.0)
    throw std::invalid_argument("cosine: zero vector");
  return dot(u.data(), v.data(), static_cast<int>(u.size())) / (nu * nv);
}

/// Named word vectors, one per label.
struct EmbeddingTable {
  std::vector<std::string> labels;
  Matrix vectors;  // one row per label
  std::unordered_map<std::string, int> index;

  int dim() const { return vectors.cols(); }

  int row_of(const std::string& label) const {
    auto it = index.find(label);
    if (it == index.end())
      throw std::invalid_argument("embeddings: unknown label '" + label + "'");
    return it->second;
  }
};

/// Reads `label dim v1 ... vdim` lines (space separated).
inline EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embeddings file: " + path);
  EmbeddingTable table;
  std::vector<Vec> rows;
  std::string line;
  int lineno = 0;
  int dim = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string label;
    int d = 0;
    if (!(ss >> label >> d) || d <= 0)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 'label dim v1 ... vdim'");
    if (dim == -1) dim = d;
    if (d != dim)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": inconsistent dimension");
    Vec v(d);
    for (int i = 0; i < d; ++i)
      if (!(ss >> v[i]))
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": truncated vector");
    if (!table.index.emplace(label, static_cast<int>(rows.size())).second)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": duplicate label '" + label + "'");
    table.labels.push_back(label);
    rows.push_back(std::move(v));
  }
  if (rows.empty()) throw std::runtime_error("embeddings file is empty: " + path);
  table.vectors = Matrix(static_cast<int>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(),
              table.vectors.row(static_cast<int>(i)));
  return table;
}

inline void save_embeddings(const EmbeddingTable& table,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write embeddings file: " + path);
  char buf[64];
  for (int i = 0; i < table.vectors.rows(); ++i) {
    out << table.labels[i] << ' ' << table.vectors.cols();
    for (int j = 0; j < table.vectors.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", table.vectors(i, j));
      out << ' ' << buf;
    }
    out << '\n';
  }
}

/// K x K similarity matrix aligned to a vocabulary's class ids.
struct SimilarityMatrix {
  std::vector<std::string> labels;
  Matrix sim;
  std::string metric_name;

  int size() const { return sim.rows(); }
};

/// Symmetry and self-similarity sanity checks.
inline void validate_similarity(const SimilarityMatrix& m, double tol = 1e-9) {
  if (m.sim.rows() != m.sim.cols() ||
      m.sim.rows() != static_cast<int>(m.labels.size()))
    throw std::invalid_argument("similarity matrix: inconsistent shape");
  for (int i = 0; i < m.sim.rows(); ++i) {
    double diag = m.sim(i, i);
    for (int j = 0; j < m.sim.cols(); ++j) {
      if (!std::isfinite(m.sim(i, j)))
        throw std::invalid_argument("similarity matrix: non-finite entry");
      if (std::abs(m.sim(i, j) - m.sim(j, i)) > tol)
        throw std::invalid_argument("similarity matrix: not symmetric");
      if (m.sim(i, j) > diag + tol)
        throw std::invalid_argument(
            "similarity matrix: off-diagonal exceeds self-similarity");
    }
  }
}

enum class TaxMetric { path, wup, lch, res, jcn, lin };

inline const char* tax_metric_name(TaxMetric m) {
  switch (m) {
    case TaxMetric::path: return "path";
    case TaxMetric::wup: return "wup";
    case TaxMetric::lch: return "lch";
    case TaxMetric::res: return "res";
    case TaxMetric::jcn: return "jcn";
    case TaxMetric::lin: return "lin";
  }
  return "?";
}

inline TaxMetric tax_metric_from_string(const std::string& s) {
  if (s == "path") return TaxMetric::path;
  if (s == "wup") return TaxMetric::wup;
  if (s == "lch") return TaxMetric::lch;
  if (s == "res") return TaxMetric::res;
  if (s == "jcn") return TaxMetric::jcn;
  if (s == "lin") return TaxMetric::lin;
  throw std::invalid_argument("unknown similarity metric: " + s);
}

/// Builds the vocabulary-aligned matrix for a taxonomy metric. Every
/// vocabulary label must resolve to a taxonomy node.
inline SimilarityMatrix build_similarity_matrix(const ClassVocabulary& vocab,
                                                const Taxonomy& t,
                                                TaxMetric metric,
                                                const ICTable* ic = nullptr,
                                                double jcn_cap = kDefaultJcnCap) {
  bool needs_ic = metric == TaxMetric::res || metric == TaxMetric::jcn ||
                  metric == TaxMetric::lin;
  if (needs_ic && ic == nullptr)
    throw std::invalid_argument(std::string("metric '") +
                                tax_metric_name(metric) +
                                "' requires an IC table");
  SimilarityMatrix m;
  m.labels = vocab.labels;
  m.metric_name = tax_metric_name(metric);
  const int k = vocab.size();
  std::vector<int> node(k);
  for (int i = 0; i < k; ++i) node[i] = t.node(vocab.labels[i]);
  m.sim = Matrix(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = i; j < k; ++j) {
      double s = 0.0;
      switch (metric) {
        case TaxMetric::path: s = path_similarity(t, node[i], node[j]); break;
        case TaxMetric::wup: s = wup_similarity(t, node[i], node[j]); break;
        case TaxMetric::lch: s = lch_similarity(t, node[i], node[j]); break;
        case TaxMetric::res:
          s = ic_similarity(t, *ic, node[i], node[j], IcMetric::res);
          break;
        case TaxMetric::jcn:
          s = ic_similarity(t, *ic, node[i], node[j], IcMetric::jcn, jcn_cap);
          break;
        case TaxMetric::lin:
          s = ic_similarity(t, *ic, node[i], node[j], IcMetric::lin);
          break;
      }
      m.sim(i, j) = s;
      m.sim(j, i) = s;
    }
  }
  return m;
}

/// Cosine-similarity matrix from word vectors.
inline SimilarityMatrix build_similarity_matrix(const ClassVocabulary& vocab,
                                                const EmbeddingTable& emb) {
  SimilarityMatrix m;
  m.labels = vocab.labels;
  m.metric_name = "cosine";
  const int k = vocab.size();
  const int d = emb.dim();
  std::vector<const double*> rows(k);
  std::vector<double> norms(k);
  for (int i = 0; i < k; ++i) {
    rows[i] = emb.vectors.row(emb.row_of(vocab.labels[i]));
    norms[i] = norm2(rows[i], d);
    if (norms[i] == 0.0)
      throw std::invalid_argument("cosine: zero vector for label '" +
                                  vocab.labels[i] + "'");
  }
  m.sim = Matrix(k, k);
  for (int i = 0; i < k; ++i) {
    m.sim(i, i) = 1.0;  // self-similarity, free of norm round-off
    for (int j = i + 1; j < k; ++j) {
      double s = dot(rows[i], rows[j], d) / (norms[i] * norms[j]);
      m.sim(i, j) = s;
      m.sim(j, i) = s;
    }
  }
  return m;
}

// --- serialization ----------------------------------------------------------

/// CSV with a label header row and a label column; %.17g round-trips doubles.
inline void save_similarity_csv(const SimilarityMatrix& m,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write similarity file: " + path);
  out << "label";
  for (const auto& l : m.labels) out << ',' << l;
  out << '\n';
  char buf[64];
  for (int i = 0; i < m.sim.rows(); ++i) {
    out << m.labels[i];
    for (int j = 0; j < m.sim.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m.sim(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

inline SimilarityMatrix load_similarity_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open similarity file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("similarity file is empty: " + path);
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      auto comma = s.find(',', start);
      out.push_back(s.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  };
  auto header = split(line);
  if (header.size() < 2 || header[0] != "label")
    throw std::runtime_error("similarity file: bad header in " + path);
  SimilarityMatrix m;
  m.labels.assign(header.begin() + 1, header.end());
  const int k = static_cast<int>(m.labels.size());
  m.sim = Matrix(k, k);
  m.metric_name = "precomputed";
  for (int i = 0; i < k; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error("similarity file: truncated at row " +
                               std::to_string(i) + " in " + path);
    auto cells = split(line);
    if (static_cast<int>(cells.size()) != k + 1 || cells[0] != m.labels[i])
      throw std::runtime_error("similarity file: bad row " + std::to_string(i) +
                               " in " + path);
    for (int j = 0; j < k; ++j) m.sim(i, j) = std::stod(cells[j + 1]);
  }
  validate_similarity(m);
  return m;
}

/// Raw little-endian float64 block plus a JSON sidecar (`<path>.meta.json`)
/// holding the label order and metric name.
inline void save_similarity_bin(const SimilarityMatrix& m,
                                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write similarity file: " + path);
  out.write(reinterpret_cast<const char*>(m.sim.data().data()),
            static_cast<std::streamsize>(m.sim.data().size() * sizeof(double)));
  nlohmann::json meta{{"labels", m.labels},
                      {"metric", m.metric_name},
                      {"size", m.size()}};
  std::ofstream side(path + ".meta.json");
  if (!side)
    throw std::runtime_error("cannot write similarity sidecar: " + path +
                             ".meta.json");
  side << meta.dump(2) << '\n';
}

inline SimilarityMatrix load_similarity_bin(const std::string& path) {
  std::ifstream side(path + ".meta.json");
  if (!side)
    throw std::runtime_error("cannot open similarity sidecar: " + path +
                             ".meta.json");
  nlohmann::json meta;
  side >> meta;
  SimilarityMatrix m;
  m.labels = meta.at("labels").get<std::vector<std::string>>();
  m.metric_name = meta.at("metric").get<std::string>();
  const int k = static_cast<int>(m.labels.size());
  if (meta.at("size").get<int>() != k)
    throw std::runtime_error("similarity sidecar: size/label mismatch");
  m.sim = Matrix(k, k);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open similarity file: " + path);
  in.read(reinterpret_cast<char*>(m.sim.data().data()),
          static_cast<std::streamsize>(m.sim.data().size() * sizeof(double)));
  if (in.gcount() !=
      static_cast<std::streamsize>(m.sim.data().size() * sizeof(double)))
    throw std::runtime_error("similarity file: truncated payload in " + path);
  validate_similarity(m);
  return m;
}

/// Reorders a precomputed matrix to a vocabulary's class-id order.
inline SimilarityMatrix align_similarity(const SimilarityMatrix& m,
                                         const ClassVocabulary& vocab) {
  std::unordered_map<std::string, int> pos;
  for (int i = 0; i < m.size(); ++i) pos[m.labels[i]] = i;
  SimilarityMatrix out;
  out.labels = vocab.labels;
  out.metric_name = m.metric_name;
  const int k = vocab.size();
  std::vector<int> src(k);
  for (int i = 0; i < k; ++i) {
    auto it = pos.find(vocab.labels[i]);
    if (it == pos.end())
      throw std::invalid_argument(
          "similarity matrix has no entry for label '" + vocab.labels[i] + "'");
    src[i] = it->second;
  }
  out.sim = Matrix(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) out.sim(i, j) = m.sim(src[i], src[j]);
  return out;
}

}  // namespace ltrel
