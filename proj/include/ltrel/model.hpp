#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "ltrel/matrix.hpp"
#include "ltrel/rng.hpp"
#include "ltrel/vocab.hpp"

namespace ltrel {

// ---------------------------------------------------------------------------
// Bilinear scoring model: a small projector maps visual features into a
// joint space where they are scored against one learned embedding per class.
// Subject and object share the entity projector and entity embeddings; the
// relation branch has its own.
// ---------------------------------------------------------------------------

struct ModelConfig {
  int d_in = 0;
  int d_emb = 0;
  int hidden = 0;        // 0 = single affine layer, >0 = one ReLU layer
  bool normalize = false;  // cosine scoring instead of raw dot products
};

/// Feature projector for one branch. With hidden == 0 only (W1, b1) are used
/// and map d_in -> d_emb; otherwise W1: hidden x d_in, W2: d_emb x hidden.
struct BranchProjector {
  Matrix W1;
  Vec b1;
  Matrix W2;
  Vec b2;
};

struct ModelParams {
  ModelConfig cfg;
  BranchProjector ent;
  BranchProjector rel;
  Matrix Y_ent;  // k_ent x d_emb class embeddings
  Matrix Y_rel;  // k_rel x d_emb

  int k_ent() const { return Y_ent.rows(); }
  int k_rel() const { return Y_rel.rows(); }
};

namespace detail {

inline void fill_uniform(Matrix& m, Rng& rng, double bound) {
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
}

inline BranchProjector init_projector(const ModelConfig& cfg, Rng rng) {
  BranchProjector p;
  double bound1 = 1.0 / std::sqrt(static_cast<double>(cfg.d_in));
  if (cfg.hidden > 0) {
    p.W1 = Matrix(cfg.hidden, cfg.d_in);
    p.b1.assign(cfg.hidden, 0.0);
    p.W2 = Matrix(cfg.d_emb, cfg.hidden);
    p.b2.assign(cfg.d_emb, 0.0);
    fill_uniform(p.W1, rng, bound1);
    fill_uniform(p.W2, rng, 1.0 / std::sqrt(static_cast<double>(cfg.hidden)));
  } else {
    p.W1 = Matrix(cfg.d_emb, cfg.d_in);
    p.b1.assign(cfg.d_emb, 0.0);
    fill_uniform(p.W1, rng, bound1);
  }
  return p;
}

}  // namespace detail

inline ModelParams init_params(const ModelConfig& cfg, int k_ent, int k_rel,
                               std::uint64_t seed) {
  if (cfg.d_in <= 0 || cfg.d_emb <= 0 || cfg.hidden < 0)
    throw std::invalid_argument("model config: bad dimensions");
  if (k_ent <= 0 || k_rel <= 0)
    throw std::invalid_argument("model config: bad class counts");
  ModelParams p;
  p.cfg = cfg;
  p.ent = detail::init_projector(cfg, substream(seed, "init/proj_ent"));
  p.rel = detail::init_projector(cfg, substream(seed, "init/proj_rel"));
  double bound = 1.0 / std::sqrt(static_cast<double>(cfg.d_emb));
  p.Y_ent = Matrix(k_ent, cfg.d_emb);
  p.Y_rel = Matrix(k_rel, cfg.d_emb);
  Rng re = substream(seed, "init/emb_ent");
  Rng rr = substream(seed, "init/emb_rel");
  detail::fill_uniform(p.Y_ent, re, bound);
  detail::fill_uniform(p.Y_rel, rr, bound);
  return p;
}

enum class EmbedInit { random, copy, affine };

inline EmbedInit embed_init_from_string(const std::string& s) {
  if (s == "random") return EmbedInit::random;
  if (s == "copy") return EmbedInit::copy;
  if (s == "affine") return EmbedInit::affine;
  throw std::invalid_argument("unknown embedding init mode: " + s);
}

/// Seeds class embeddings from word vectors (rows already in class-id order).
/// `copy` uses them as-is; `affine` applies a near-identity learnable-style
/// perturbation A with |A - I| <= 1e-8 so the result stays within 1e-6 of the
/// copy while breaking exact ties.
inline Matrix init_language_embeddings(const Matrix& word_vectors,
                                       EmbedInit mode, std::uint64_t seed) {
  if (mode == EmbedInit::random)
    throw std::invalid_argument(
        "init_language_embeddings: 'random' mode takes no word vectors");
  if (mode == EmbedInit::copy) return word_vectors;
  const int d = word_vectors.cols();
  Matrix a(d, d);
  Rng rng = substream(seed, "init/emb_affine");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      a(i, j) = (i == j ? 1.0 : 0.0) + rng.uniform(-1e-8, 1e-8);
  Vec c(d);
  for (double& v : c) v = rng.uniform(-1e-8, 1e-8);
  Matrix out = matmul_nt(word_vectors, a);
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < d; ++j) out(i, j) += c[j];
  return out;
}

// --- forward / backward -----------------------------------------------------

/// Per-batch activations cached for the backward pass.
struct BranchForward {
  Matrix H_pre;   // hidden pre-activation (empty when hidden == 0)
  Matrix H;       // hidden activation (empty when hidden == 0)
  Matrix E;       // projected features, B x d_emb
  Matrix E_unit;  // row-normalized E (normalize mode only)
  Matrix Y_unit;  // row-normalized class embeddings (normalize mode only)
  Vec e_norm;     // row norms of E
  Vec y_norm;     // row norms of Y
  Matrix Z;       // logits, B x K
};

namespace detail {

constexpr double kNormFloor = 1e-12;

inline Matrix row_normalize(const Matrix& m, Vec& norms) {
  Matrix out = m;
  norms.resize(m.rows());
  for (int i = 0; i < m.rows(); ++i) {
    double n = std::max(norm2(m.row(i), m.cols()), kNormFloor);
    norms[i] = n;
    double inv = 1.0 / n;
    for (int j = 0; j < m.cols(); ++j) out(i, j) *= inv;
  }
  return out;
}

}  // namespace detail

inline BranchForward forward_branch(const ModelConfig& cfg,
                                    const BranchProjector& proj,
                                    const Matrix& y, const Matrix& x) {
  check_shape(x.cols() == cfg.d_in, "forward: input dimension");
  BranchForward f;
  if (cfg.hidden > 0) {
    f.H_pre = matmul_nt(x, proj.W1);
    for (int i = 0; i < f.H_pre.rows(); ++i)
      for (int j = 0; j < f.H_pre.cols(); ++j) f.H_pre(i, j) += proj.b1[j];
    f.H = f.H_pre;
    for (double& v : f.H.data()) v = v > 0.0 ? v : 0.0;
    f.E = matmul_nt(f.H, proj.W2);
    for (int i = 0; i < f.E.rows(); ++i)
      for (int j = 0; j < f.E.cols(); ++j) f.E(i, j) += proj.b2[j];
  } else {
    f.E = matmul_nt(x, proj.W1);
    for (int i = 0; i < f.E.rows(); ++i)
      for (int j = 0; j < f.E.cols(); ++j) f.E(i, j) += proj.b1[j];
  }
  if (cfg.normalize) {
    f.E_unit = detail::row_normalize(f.E, f.e_norm);
    f.Y_unit = detail::row_normalize(y, f.y_norm);
    f.Z = matmul_nt(f.E_unit, f.Y_unit);
  } else {
    f.Z = matmul_nt(f.E, y);
  }
  return f;
}

struct BranchGrads {
  Matrix dW1;
  Vec db1;
  Matrix dW2;
  Vec db2;
  Matrix dY;
};

/// Backpropagates dL/dZ through the scoring and the projector.
inline BranchGrads backward_branch(const ModelConfig& cfg,
                                   const BranchProjector& proj, const Matrix& y,
                                   const Matrix& x, const BranchForward& f,
                                   const Matrix& dz) {
  check_shape(dz.rows() == f.Z.rows() && dz.cols() == f.Z.cols(),
              "backward: logit gradient shape");
  BranchGrads g;
  Matrix d_e;
  if (cfg.normalize) {
    // Through z = (e / |e|) . (y_k / |y_k|).
    Matrix d_eu = matmul(dz, f.Y_unit);       // B x d_emb
    Matrix d_yu = matmul_tn(dz, f.E_unit);    // K x d_emb
    d_e = Matrix(d_eu.rows(), d_eu.cols());
    for (int i = 0; i < d_eu.rows(); ++i) {
      const double* u = f.E_unit.row(i);
      const double* gi = d_eu.row(i);
      double proj_u = dot(gi, u, d_eu.cols());
      double inv = 1.0 / f.e_norm[i];
      for (int j = 0; j < d_eu.cols(); ++j)
        d_e(i, j) = (gi[j] - proj_u * u[j]) * inv;
    }
    g.dY = Matrix(y.rows(), y.cols());
    for (int k = 0; k < y.rows(); ++k) {
      const double* v = f.Y_unit.row(k);
      const double* gk = d_yu.row(k);
      double proj_v = dot(gk, v, y.cols());
      double inv = 1.0 / f.y_norm[k];
      for (int j = 0; j < y.cols(); ++j)
        g.dY(k, j) = (gk[j] - proj_v * v[j]) * inv;
    }
  } else {
    d_e = matmul(dz, y);
    g.dY = matmul_tn(dz, f.E);
  }
  if (cfg.hidden > 0) {
    g.dW2 = matmul_tn(d_e, f.H);
    g.db2 = col_sums(d_e);
    Matrix d_h = matmul(d_e, proj.W2);
    for (int i = 0; i < d_h.rows(); ++i)
      for (int j = 0; j < d_h.cols(); ++j)
        if (f.H_pre(i, j) <= 0.0) d_h(i, j) = 0.0;
    g.dW1 = matmul_tn(d_h, x);
    g.db1 = col_sums(d_h);
  } else {
    g.dW1 = matmul_tn(d_e, x);
    g.db1 = col_sums(d_e);
  }
  return g;
}

/// Logits for a single example.
inline Vec score_example(const ModelParams& p, const Vec& x, Branch branch) {
  Matrix xm(1, static_cast<int>(x.size()));
  std::copy(x.begin(), x.end(), xm.row(0));
  const BranchProjector& proj = branch == Branch::entity ? p.ent : p.rel;
  const Matrix& y = branch == Branch::entity ? p.Y_ent : p.Y_rel;
  BranchForward f = forward_branch(p.cfg, proj, y, xm);
  return Vec(f.Z.row(0), f.Z.row(0) + f.Z.cols());
}

/// Indices of the k highest scores, descending; ties broken by lower index.
inline std::vector<int> predict_topk(const Vec& scores, int k) {
  const int n = static_cast<int>(scores.size());
  if (k < 1 || k > n)
    throw std::invalid_argument("predict_topk: k out of range");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  idx.resize(k);
  return idx;
}

// --- checkpointing ----------------------------------------------------------

namespace detail {

constexpr char kCheckpointMagic[8] = {'L', 'T', 'R', 'E', 'L', 'C', 'K', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_block(std::ofstream& out, const Vec& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline void read_block(std::ifstream& in, Vec& v, const std::string& path) {
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(v.size() * sizeof(double)))
    throw std::runtime_error("checkpoint truncated: " + path);
  if (!all_finite(v))
    throw std::runtime_error("checkpoint has non-finite parameters: " + path);
}

inline void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (in.gcount() != sizeof v)
    throw std::runtime_error("checkpoint truncated: " + path);
  return v;
}

}  // namespace detail

/// Binary checkpoint (magic, version, shape header, little-endian float64
/// parameter blocks) plus a JSON sidecar `<path>.meta.json` with the config.
inline void save_checkpoint(const ModelParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(detail::kCheckpointMagic, sizeof detail::kCheckpointMagic);
  detail::write_u32(out, detail::kCheckpointVersion);
  detail::write_u32(out, static_cast<std::uint32_t>(p.cfg.d_in));
  detail::write_u32(out, static_cast<std::uint32_t>(p.cfg.d_emb));
  detail::write_u32(out, static_cast<std::uint32_t>(p.cfg.hidden));
  detail::write_u32(out, static_cast<std::uint32_t>(p.k_ent()));
  detail::write_u32(out, static_cast<std::uint32_t>(p.k_rel()));
  detail::write_u32(out, p.cfg.normalize ? 1 : 0);
  auto write_proj = [&](const BranchProjector& proj) {
    detail::write_block(out, proj.W1.data());
    detail::write_block(out, proj.b1);
    if (p.cfg.hidden > 0) {
      detail::write_block(out, proj.W2.data());
      detail::write_block(out, proj.b2);
    }
  };
  write_proj(p.ent);
  write_proj(p.rel);
  detail::write_block(out, p.Y_ent.data());
  detail::write_block(out, p.Y_rel.data());
  nlohmann::json meta{{"format_version", detail::kCheckpointVersion},
                      {"d_in", p.cfg.d_in},
                      {"d_emb", p.cfg.d_emb},
                      {"hidden", p.cfg.hidden},
                      {"normalize", p.cfg.normalize},
                      {"k_ent", p.k_ent()},
                      {"k_rel", p.k_rel()}};
  std::ofstream side(path + ".meta.json");
  if (!side)
    throw std::runtime_error("cannot write checkpoint sidecar: " + path +
                             ".meta.json");
  side << meta.dump(2) << '\n';
}

inline ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (in.gcount() != sizeof magic ||
      std::memcmp(magic, detail::kCheckpointMagic, sizeof magic) != 0)
    throw std::runtime_error("not a model checkpoint: " + path);
  std::uint32_t version = detail::read_u32(in, path);
  if (version != detail::kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version) + ": " + path);
  ModelParams p;
  p.cfg.d_in = static_cast<int>(detail::read_u32(in, path));
  p.cfg.d_emb = static_cast<int>(detail::read_u32(in, path));
  p.cfg.hidden = static_cast<int>(detail::read_u32(in, path));
  int k_ent = static_cast<int>(detail::read_u32(in, path));
  int k_rel = static_cast<int>(detail::read_u32(in, path));
  p.cfg.normalize = detail::read_u32(in, path) != 0;
  if (p.cfg.d_in <= 0 || p.cfg.d_emb <= 0 || p.cfg.hidden < 0 || k_ent <= 0 ||
      k_rel <= 0)
    throw std::runtime_error("checkpoint has invalid shape header: " + path);
  auto read_proj = [&](BranchProjector& proj) {
    if (p.cfg.hidden > 0) {
      proj.W1 = Matrix(p.cfg.hidden, p.cfg.d_in);
      proj.b1.assign(p.cfg.hidden, 0.0);
      proj.W2 = Matrix(p.cfg.d_emb, p.cfg.hidden);
      proj.b2.assign(p.cfg.d_emb, 0.0);
      detail::read_block(in, proj.W1.data(), path);
      detail::read_block(in, proj.b1, path);
      detail::read_block(in, proj.W2.data(), path);
      detail::read_block(in, proj.b2, path);
    } else {
      proj.W1 = Matrix(p.cfg.d_emb, p.cfg.d_in);
      proj.b1.assign(p.cfg.d_emb, 0.0);
      detail::read_block(in, proj.W1.data(), path);
      detail::read_block(in, proj.b1, path);
    }
  };
  read_proj(p.ent);
  read_proj(p.rel);
  p.Y_ent = Matrix(k_ent, p.cfg.d_emb);
  p.Y_rel = Matrix(k_rel, p.cfg.d_emb);
  detail::read_block(in, p.Y_ent.data(), path);
  detail::read_block(in, p.Y_rel.data(), path);
  return p;
}

}  // namespace ltrel
