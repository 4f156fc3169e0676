#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ltrel/data.hpp"
#include "ltrel/losses.hpp"
#include "ltrel/matrix.hpp"
#include "ltrel/metrics.hpp"
#include "ltrel/model.hpp"
#include "ltrel/relmix.hpp"
#include "ltrel/rng.hpp"
#include "ltrel/vocab.hpp"

namespace ltrel {

// ---------------------------------------------------------------------------
// Deterministic single-threaded SGD over the three branches. Subject and
// object batches flow through the shared entity branch; their gradients
// accumulate before the update. Mixed-in synthetic examples ride along in
// the same stream with soft target rows.
// ---------------------------------------------------------------------------

struct TrainConfig {
  // model
  int d_emb = 32;
  int hidden = 0;
  bool normalize = false;
  EmbedInit init_embeddings = EmbedInit::random;
  // optimization
  double lr = 0.01;
  double momentum = 0.0;  // 0 = plain SGD
  int batch_size = 32;
  int epochs = 10;
  std::uint64_t seed = 0;
  int eval_every = 1;  // epochs between validation passes; 0 = never
  // loss
  LossKind loss_kind = LossKind::triplet_softmax;
  WeightMode weight_mode = WeightMode::inverse_frequency;
  double gamma_vilhub = 0.0;
  double gamma_focal = 2.0;
  // augmentation
  bool use_relmix = false;
  RelMixConfig relmix;
};

inline void validate_train_config(const TrainConfig& c) {
  if (c.d_emb < 1) throw std::invalid_argument("train config: d_emb < 1");
  if (c.hidden < 0) throw std::invalid_argument("train config: hidden < 0");
  if (!(c.lr >= 0.0)) throw std::invalid_argument("train config: bad lr");
  if (c.momentum < 0.0 || c.momentum >= 1.0)
    throw std::invalid_argument("train config: momentum outside [0, 1)");
  if (c.batch_size < 1) throw std::invalid_argument("train config: batch < 1");
  if (c.epochs < 0) throw std::invalid_argument("train config: epochs < 0");
  if (c.eval_every < 0)
    throw std::invalid_argument("train config: eval_every < 0");
  if (c.gamma_vilhub < 0.0 || c.gamma_focal < 0.0)
    throw std::invalid_argument("train config: negative loss exponent/weight");
  if (c.use_relmix) validate_relmix_config(c.relmix);
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  return nlohmann::json{
      {"d_emb", c.d_emb},
      {"hidden", c.hidden},
      {"normalize", c.normalize},
      {"init_embeddings", c.init_embeddings == EmbedInit::random  ? "random"
                          : c.init_embeddings == EmbedInit::copy ? "copy"
                                                                 : "affine"},
      {"lr", c.lr},
      {"momentum", c.momentum},
      {"batch_size", c.batch_size},
      {"epochs", c.epochs},
      {"seed", c.seed},
      {"eval_every", c.eval_every},
      {"loss", loss_kind_name(c.loss_kind)},
      {"weight_mode",
       c.weight_mode == WeightMode::uniform ? "uniform" : "inverse"},
      {"gamma_vilhub", c.gamma_vilhub},
      {"gamma_focal", c.gamma_focal},
      {"relmix",
       {{"enabled", c.use_relmix},
        {"eta", c.relmix.eta},
        {"lambda_min", c.relmix.lambda_min},
        {"lambda_max", c.relmix.lambda_max},
        {"alpha_p", c.relmix.alpha_p},
        {"band_by", c.relmix.band_by == RelMixConfig::BandBy::relation
                        ? "relation"
                        : "entity"},
        {"same_scene", c.relmix.same_scene}}}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.d_emb = j.value("d_emb", c.d_emb);
  c.hidden = j.value("hidden", c.hidden);
  c.normalize = j.value("normalize", c.normalize);
  c.init_embeddings =
      embed_init_from_string(j.value("init_embeddings", "random"));
  c.lr = j.value("lr", c.lr);
  c.momentum = j.value("momentum", c.momentum);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  c.eval_every = j.value("eval_every", c.eval_every);
  std::string kind = j.value("loss", "triplet_softmax");
  if (kind == "triplet_softmax" || kind == "softmax")
    c.loss_kind = LossKind::triplet_softmax;
  else if (kind == "weighted")
    c.loss_kind = LossKind::weighted;
  else if (kind == "focal")
    c.loss_kind = LossKind::focal;
  else
    throw std::invalid_argument("train config: unknown loss '" + kind + "'");
  c.weight_mode = weight_mode_from_string(j.value("weight_mode", "inverse"));
  c.gamma_vilhub = j.value("gamma_vilhub", c.gamma_vilhub);
  c.gamma_focal = j.value("gamma_focal", c.gamma_focal);
  if (j.contains("relmix")) {
    const auto& r = j["relmix"];
    c.use_relmix = r.value("enabled", false);
    c.relmix.eta = r.value("eta", c.relmix.eta);
    c.relmix.lambda_min = r.value("lambda_min", c.relmix.lambda_min);
    c.relmix.lambda_max = r.value("lambda_max", c.relmix.lambda_max);
    c.relmix.alpha_p = r.value("alpha_p", c.relmix.alpha_p);
    c.relmix.band_by = r.value("band_by", "relation") == std::string("entity")
                           ? RelMixConfig::BandBy::entity
                           : RelMixConfig::BandBy::relation;
    c.relmix.same_scene = r.value("same_scene", true);
  }
  validate_train_config(c);
  return c;
}

/// References to everything train() consumes.
struct TrainInputs {
  const Dataset* train = nullptr;
  const Dataset* val = nullptr;  // required when eval_every > 0
  const ClassVocabulary* vocab_ent = nullptr;
  const ClassVocabulary* vocab_rel = nullptr;
  const FrequencyBands* bands_ent = nullptr;
  const FrequencyBands* bands_rel = nullptr;
  const EmbeddingTable* embed_ent = nullptr;  // for copy/affine init
  const EmbeddingTable* embed_rel = nullptr;
};

struct BranchEpochLoss {
  double total = 0.0;
  double base = 0.0;
  double vilhub = 0.0;
};

struct EpochRecord {
  int epoch = 0;
  BranchEpochLoss subject, relation, object;
  std::optional<BandReport> val_subject, val_object, val_sbj_obj, val_relation;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
};

// --- gradient plumbing --------------------------------------------------------

/// Gradient (or velocity) holder shaped like the parameters.
struct ModelGrads {
  BranchProjector ent, rel;
  Matrix Y_ent, Y_rel;
};

inline ModelGrads zero_grads(const ModelParams& p) {
  ModelGrads g;
  auto zero_proj = [&](const BranchProjector& src, BranchProjector& dst) {
    dst.W1 = Matrix(src.W1.rows(), src.W1.cols());
    dst.b1.assign(src.b1.size(), 0.0);
    if (p.cfg.hidden > 0) {
      dst.W2 = Matrix(src.W2.rows(), src.W2.cols());
      dst.b2.assign(src.b2.size(), 0.0);
    }
  };
  zero_proj(p.ent, g.ent);
  zero_proj(p.rel, g.rel);
  g.Y_ent = Matrix(p.Y_ent.rows(), p.Y_ent.cols());
  g.Y_rel = Matrix(p.Y_rel.rows(), p.Y_rel.cols());
  return g;
}

inline void add_branch_grads(BranchProjector& proj_acc, Matrix& y_acc,
                             const BranchGrads& g, int hidden) {
  axpy(1.0, g.dW1, proj_acc.W1);
  for (std::size_t i = 0; i < proj_acc.b1.size(); ++i)
    proj_acc.b1[i] += g.db1[i];
  if (hidden > 0) {
    axpy(1.0, g.dW2, proj_acc.W2);
    for (std::size_t i = 0; i < proj_acc.b2.size(); ++i)
      proj_acc.b2[i] += g.db2[i];
  }
  axpy(1.0, g.dY, y_acc);
}

/// Flat list of parameter storage, aligned across params/grads/velocity.
struct ParamView {
  std::string name;
  double* data = nullptr;
  std::size_t size = 0;
};

namespace detail {

template <typename P>
inline void append_proj_views(const char* prefix, P& proj, int hidden,
                              std::vector<ParamView>& out) {
  out.push_back({std::string(prefix) + ".W1", proj.W1.data().data(),
                 proj.W1.data().size()});
  out.push_back({std::string(prefix) + ".b1", proj.b1.data(), proj.b1.size()});
  if (hidden > 0) {
    out.push_back({std::string(prefix) + ".W2", proj.W2.data().data(),
                   proj.W2.data().size()});
    out.push_back(
        {std::string(prefix) + ".b2", proj.b2.data(), proj.b2.size()});
  }
}

}  // namespace detail

inline std::vector<ParamView> param_views(ModelParams& p) {
  std::vector<ParamView> out;
  detail::append_proj_views("ent", p.ent, p.cfg.hidden, out);
  detail::append_proj_views("rel", p.rel, p.cfg.hidden, out);
  out.push_back({"Y_ent", p.Y_ent.data().data(), p.Y_ent.data().size()});
  out.push_back({"Y_rel", p.Y_rel.data().data(), p.Y_rel.data().size()});
  return out;
}

inline std::vector<ParamView> param_views(ModelGrads& g, int hidden) {
  std::vector<ParamView> out;
  detail::append_proj_views("ent", g.ent, hidden, out);
  detail::append_proj_views("rel", g.rel, hidden, out);
  out.push_back({"Y_ent", g.Y_ent.data().data(), g.Y_ent.data().size()});
  out.push_back({"Y_rel", g.Y_rel.data().data(), g.Y_rel.data().size()});
  return out;
}

// --- batches -------------------------------------------------------------------

namespace detail {

struct Batch {
  Matrix xs, xr, xo;
  std::vector<SoftLabel> rows_s, rows_r, rows_o;
};

/// Stream position: < N means real example, otherwise synthetic.
inline Batch make_batch(const Dataset& train,
                        const std::vector<AugmentedExample>& aug,
                        const std::vector<int>& stream, std::size_t begin,
                        std::size_t end) {
  const int b = static_cast<int>(end - begin);
  const int d = train.dim;
  Batch batch;
  batch.xs = Matrix(b, d);
  batch.xr = Matrix(b, d);
  batch.xo = Matrix(b, d);
  batch.rows_s.resize(b);
  batch.rows_r.resize(b);
  batch.rows_o.resize(b);
  const int n_real = train.size();
  for (int i = 0; i < b; ++i) {
    int idx = stream[begin + i];
    const Vec *xs, *xr, *xo;
    if (idx < n_real) {
      const TripletExample& e = train.examples[idx];
      xs = &e.x_s;
      xr = &e.x_r;
      xo = &e.x_o;
      batch.rows_s[i] = {{e.y_s, 1.0}};
      batch.rows_r[i] = {{e.y_r, 1.0}};
      batch.rows_o[i] = {{e.y_o, 1.0}};
    } else {
      const AugmentedExample& a = aug[idx - n_real];
      xs = &a.x_s;
      xr = &a.x_r;
      xo = &a.x_o;
      batch.rows_s[i] = a.y_s;
      batch.rows_r[i] = a.y_r;
      batch.rows_o[i] = a.y_o;
    }
    std::copy(xs->begin(), xs->end(), batch.xs.row(i));
    std::copy(xr->begin(), xr->end(), batch.xr.row(i));
    std::copy(xo->begin(), xo->end(), batch.xo.row(i));
  }
  return batch;
}

inline void fisher_yates(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[rng.uniform_index(i)]);
}

}  // namespace detail

// --- evaluation ----------------------------------------------------------------

/// Top-1 predictions for every example of a split, per branch.
struct Top1 {
  std::vector<int> s, r, o;
};

inline Top1 predict_top1(const ModelParams& p, const Dataset& split) {
  Top1 out;
  const int n = split.size();
  out.s.resize(n);
  out.r.resize(n);
  out.o.resize(n);
  const int chunk = 256;
  for (int begin = 0; begin < n; begin += chunk) {
    int b = std::min(chunk, n - begin);
    Matrix xs(b, split.dim), xr(b, split.dim), xo(b, split.dim);
    for (int i = 0; i < b; ++i) {
      const TripletExample& e = split.examples[begin + i];
      std::copy(e.x_s.begin(), e.x_s.end(), xs.row(i));
      std::copy(e.x_r.begin(), e.x_r.end(), xr.row(i));
      std::copy(e.x_o.begin(), e.x_o.end(), xo.row(i));
    }
    BranchForward fs = forward_branch(p.cfg, p.ent, p.Y_ent, xs);
    BranchForward fr = forward_branch(p.cfg, p.rel, p.Y_rel, xr);
    BranchForward fo = forward_branch(p.cfg, p.ent, p.Y_ent, xo);
    auto arg_top1 = [](const Matrix& z, int row) {
      int best = 0;
      for (int j = 1; j < z.cols(); ++j)
        if (z(row, j) > z(row, best)) best = j;
      return best;
    };
    for (int i = 0; i < b; ++i) {
      out.s[begin + i] = arg_top1(fs.Z, i);
      out.r[begin + i] = arg_top1(fr.Z, i);
      out.o[begin + i] = arg_top1(fo.Z, i);
    }
  }
  return out;
}

struct EvalOptions {
  int topk = 250;  // ranking depth, capped at the branch class count
};

struct EvalResult {
  std::vector<PredictionRecord> records;
  BandReport subject, object, sbj_obj, relation;
  double per_example_subject = 0.0;
  double per_example_relation = 0.0;
  double per_example_object = 0.0;
  TripletEval triplet;
  double pair_so = 0.0, pair_sr = 0.0, pair_or = 0.0;
};

/// Full evaluation pass: rankings, banded per-class reports, and the
/// compositional triplet metrics against training-frequency bands.
inline EvalResult evaluate(const ModelParams& p, const Dataset& split,
                           const FrequencyBands& bands_ent,
                           const FrequencyBands& bands_rel,
                           const TripletCounts& train_counts,
                           const EvalOptions& opt = {}) {
  if (split.size() == 0) throw std::invalid_argument("evaluate: empty split");
  if (opt.topk < 1) throw std::invalid_argument("evaluate: topk < 1");
  const int k_ent = p.k_ent();
  const int k_rel = p.k_rel();
  const int topk_ent = std::min(opt.topk, k_ent);
  const int topk_rel = std::min(opt.topk, k_rel);
  EvalResult out;
  out.records.resize(split.size());
  Top1 top1;
  top1.s.resize(split.size());
  top1.r.resize(split.size());
  top1.o.resize(split.size());
  const int chunk = 256;
  for (int begin = 0; begin < split.size(); begin += chunk) {
    int b = std::min(chunk, split.size() - begin);
    Matrix xs(b, split.dim), xr(b, split.dim), xo(b, split.dim);
    for (int i = 0; i < b; ++i) {
      const TripletExample& e = split.examples[begin + i];
      std::copy(e.x_s.begin(), e.x_s.end(), xs.row(i));
      std::copy(e.x_r.begin(), e.x_r.end(), xr.row(i));
      std::copy(e.x_o.begin(), e.x_o.end(), xo.row(i));
    }
    BranchForward fs = forward_branch(p.cfg, p.ent, p.Y_ent, xs);
    BranchForward fr = forward_branch(p.cfg, p.rel, p.Y_rel, xr);
    BranchForward fo = forward_branch(p.cfg, p.ent, p.Y_ent, xo);
    for (int i = 0; i < b; ++i) {
      PredictionRecord& rec = out.records[begin + i];
      const TripletExample& e = split.examples[begin + i];
      rec.id = split.ids[begin + i];
      rec.gold_s = e.y_s;
      rec.gold_r = e.y_r;
      rec.gold_o = e.y_o;
      auto fill = [&](const Matrix& z, int k, std::vector<int>& rank,
                      Vec& score) {
        Vec logits(z.row(i), z.row(i) + z.cols());
        rank = predict_topk(logits, k);
        score.resize(k);
        for (int t = 0; t < k; ++t) score[t] = logits[rank[t]];
      };
      fill(fs.Z, topk_ent, rec.rank_s, rec.score_s);
      fill(fr.Z, topk_rel, rec.rank_r, rec.score_r);
      fill(fo.Z, topk_ent, rec.rank_o, rec.score_o);
      top1.s[begin + i] = rec.rank_s[0];
      top1.r[begin + i] = rec.rank_r[0];
      top1.o[begin + i] = rec.rank_o[0];
    }
  }
  std::vector<int> gold_s(split.size()), gold_r(split.size()),
      gold_o(split.size());
  for (int i = 0; i < split.size(); ++i) {
    gold_s[i] = split.examples[i].y_s;
    gold_r[i] = split.examples[i].y_r;
    gold_o[i] = split.examples[i].y_o;
  }
  out.subject = band_report(per_class_accuracy(top1.s, gold_s, k_ent), bands_ent);
  out.object = band_report(per_class_accuracy(top1.o, gold_o, k_ent), bands_ent);
  {
    std::vector<int> pooled_top1 = top1.s, pooled_gold = gold_s;
    pooled_top1.insert(pooled_top1.end(), top1.o.begin(), top1.o.end());
    pooled_gold.insert(pooled_gold.end(), gold_o.begin(), gold_o.end());
    out.sbj_obj = band_report(
        per_class_accuracy(pooled_top1, pooled_gold, k_ent), bands_ent);
  }
  out.relation =
      band_report(per_class_accuracy(top1.r, gold_r, k_rel), bands_rel);
  out.per_example_subject = per_example_accuracy(top1.s, gold_s);
  out.per_example_relation = per_example_accuracy(top1.r, gold_r);
  out.per_example_object = per_example_accuracy(top1.o, gold_o);
  out.triplet = triplet_accuracy(top1.s, top1.r, top1.o, gold_s, gold_r,
                                 gold_o, train_counts);
  out.pair_so = grouped_pair_accuracy(top1.s, top1.r, top1.o, gold_s, gold_r,
                                      gold_o, PairGroup::so);
  out.pair_sr = grouped_pair_accuracy(top1.s, top1.r, top1.o, gold_s, gold_r,
                                      gold_o, PairGroup::sr);
  out.pair_or = grouped_pair_accuracy(top1.s, top1.r, top1.o, gold_s, gold_r,
                                      gold_o, PairGroup::or_);
  return out;
}

// --- training ------------------------------------------------------------------

namespace detail {

inline Matrix aligned_word_vectors(const EmbeddingTable& emb,
                                   const ClassVocabulary& vocab, int d_emb) {
  if (emb.dim() != d_emb)
    throw std::invalid_argument(
        "word-vector init: embedding dim " + std::to_string(emb.dim()) +
        " does not match d_emb " + std::to_string(d_emb));
  Matrix m(vocab.size(), d_emb);
  for (int i = 0; i < vocab.size(); ++i) {
    const double* row = emb.vectors.row(emb.row_of(vocab.labels[i]));
    std::copy(row, row + d_emb, m.row(i));
  }
  return m;
}

}  // namespace detail

inline TrainResult train(const TrainInputs& in, const TrainConfig& cfg) {
  validate_train_config(cfg);
  if (!in.train || !in.vocab_ent || !in.vocab_rel || !in.bands_ent ||
      !in.bands_rel)
    throw std::invalid_argument("train: missing inputs");
  if (cfg.eval_every > 0 && !in.val)
    throw std::invalid_argument("train: validation split required");
  const Dataset& data = *in.train;
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");

  ModelConfig mc{data.dim, cfg.d_emb, cfg.hidden, cfg.normalize};
  TrainResult result;
  result.params = init_params(mc, in.vocab_ent->size(), in.vocab_rel->size(),
                              cfg.seed);
  if (cfg.init_embeddings != EmbedInit::random) {
    if (!in.embed_ent || !in.embed_rel)
      throw std::invalid_argument(
          "train: word-vector init requires embedding tables");
    result.params.Y_ent = init_language_embeddings(
        detail::aligned_word_vectors(*in.embed_ent, *in.vocab_ent, cfg.d_emb),
        cfg.init_embeddings, cfg.seed);
    result.params.Y_rel = init_language_embeddings(
        detail::aligned_word_vectors(*in.embed_rel, *in.vocab_rel, cfg.d_emb),
        cfg.init_embeddings, cfg.seed);
  }
  ModelParams& params = result.params;

  auto make_loss_cfg = [&](const ClassVocabulary& vocab) {
    LossConfig lc;
    lc.kind = cfg.loss_kind;
    lc.gamma_vilhub = cfg.gamma_vilhub;
    lc.gamma_focal = cfg.gamma_focal;
    if (cfg.loss_kind == LossKind::weighted)
      lc.weights = class_weights(vocab, cfg.weight_mode);
    return lc;
  };
  const LossConfig loss_ent = make_loss_cfg(*in.vocab_ent);
  const LossConfig loss_rel = make_loss_cfg(*in.vocab_rel);

  MixPools pools;
  if (cfg.use_relmix)
    pools = build_mix_pools(data, *in.bands_ent, *in.bands_rel, cfg.relmix);

  ModelGrads velocity = zero_grads(params);
  const bool use_momentum = cfg.momentum > 0.0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<AugmentedExample> aug;
    if (cfg.use_relmix) {
      Rng rng = substream(cfg.seed, "epoch/relmix",
                          static_cast<std::uint64_t>(epoch));
      aug = augment_epoch(data, pools, cfg.relmix, rng);
    }
    std::vector<int> stream(data.size() + aug.size());
    for (std::size_t i = 0; i < stream.size(); ++i)
      stream[i] = static_cast<int>(i);
    {
      Rng rng = substream(cfg.seed, "epoch/shuffle",
                          static_cast<std::uint64_t>(epoch));
      detail::fisher_yates(stream, rng);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    double example_count = 0.0;
    for (std::size_t begin = 0; begin < stream.size();
         begin += cfg.batch_size) {
      std::size_t end = std::min(stream.size(),
                                 begin + static_cast<std::size_t>(cfg.batch_size));
      detail::Batch batch = detail::make_batch(data, aug, stream, begin, end);
      const int b = static_cast<int>(end - begin);

      BranchForward fs = forward_branch(mc, params.ent, params.Y_ent, batch.xs);
      BranchForward fr = forward_branch(mc, params.rel, params.Y_rel, batch.xr);
      BranchForward fo = forward_branch(mc, params.ent, params.Y_ent, batch.xo);
      CombinedLoss ls = combined_loss(fs.Z, batch.rows_s, loss_ent);
      CombinedLoss lr = combined_loss(fr.Z, batch.rows_r, loss_rel);
      CombinedLoss lo = combined_loss(fo.Z, batch.rows_o, loss_ent);
      double batch_total = ls.total + lr.total + lo.total;
      if (!std::isfinite(batch_total)) {
        char msg[256];
        std::snprintf(msg, sizeof msg,
                      "training diverged at epoch %d batch %zu: "
                      "subject=%g relation=%g object=%g",
                      epoch, begin / cfg.batch_size, ls.total, lr.total,
                      lo.total);
        throw std::runtime_error(msg);
      }

      ModelGrads grads = zero_grads(params);
      add_branch_grads(grads.ent, grads.Y_ent,
                       backward_branch(mc, params.ent, params.Y_ent, batch.xs,
                                       fs, ls.grad),
                       mc.hidden);
      add_branch_grads(grads.ent, grads.Y_ent,
                       backward_branch(mc, params.ent, params.Y_ent, batch.xo,
                                       fo, lo.grad),
                       mc.hidden);
      add_branch_grads(grads.rel, grads.Y_rel,
                       backward_branch(mc, params.rel, params.Y_rel, batch.xr,
                                       fr, lr.grad),
                       mc.hidden);

      auto pv = param_views(params);
      auto gv = param_views(grads, mc.hidden);
      if (use_momentum) {
        auto vv = param_views(velocity, mc.hidden);
        for (std::size_t t = 0; t < pv.size(); ++t)
          for (std::size_t i = 0; i < pv[t].size; ++i) {
            vv[t].data[i] = cfg.momentum * vv[t].data[i] + gv[t].data[i];
            pv[t].data[i] -= cfg.lr * vv[t].data[i];
          }
      } else {
        for (std::size_t t = 0; t < pv.size(); ++t)
          for (std::size_t i = 0; i < pv[t].size; ++i)
            pv[t].data[i] -= cfg.lr * gv[t].data[i];
      }

      rec.subject.total += b * ls.total;
      rec.subject.base += b * ls.base;
      rec.subject.vilhub += b * ls.vilhub;
      rec.relation.total += b * lr.total;
      rec.relation.base += b * lr.base;
      rec.relation.vilhub += b * lr.vilhub;
      rec.object.total += b * lo.total;
      rec.object.base += b * lo.base;
      rec.object.vilhub += b * lo.vilhub;
      example_count += b;
    }
    if (example_count > 0) {
      for (BranchEpochLoss* bl : {&rec.subject, &rec.relation, &rec.object}) {
        bl->total /= example_count;
        bl->base /= example_count;
        bl->vilhub /= example_count;
      }
    }
    if (cfg.eval_every > 0 &&
        (epoch % cfg.eval_every == 0 || epoch == cfg.epochs)) {
      Top1 top1 = predict_top1(params, *in.val);
      std::vector<int> gold_s(in.val->size()), gold_r(in.val->size()),
          gold_o(in.val->size());
      for (int i = 0; i < in.val->size(); ++i) {
        gold_s[i] = in.val->examples[i].y_s;
        gold_r[i] = in.val->examples[i].y_r;
        gold_o[i] = in.val->examples[i].y_o;
      }
      rec.val_subject = band_report(
          per_class_accuracy(top1.s, gold_s, in.vocab_ent->size()),
          *in.bands_ent);
      rec.val_object = band_report(
          per_class_accuracy(top1.o, gold_o, in.vocab_ent->size()),
          *in.bands_ent);
      std::vector<int> pooled_top1 = top1.s, pooled_gold = gold_s;
      pooled_top1.insert(pooled_top1.end(), top1.o.begin(), top1.o.end());
      pooled_gold.insert(pooled_gold.end(), gold_o.begin(), gold_o.end());
      rec.val_sbj_obj = band_report(
          per_class_accuracy(pooled_top1, pooled_gold, in.vocab_ent->size()),
          *in.bands_ent);
      rec.val_relation = band_report(
          per_class_accuracy(top1.r, gold_r, in.vocab_rel->size()),
          *in.bands_rel);
    }
    result.history.push_back(std::move(rec));
  }
  return result;
}

// --- history CSV ---------------------------------------------------------------

namespace detail {

inline std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string fmt_band(const std::optional<double>& v) {
  if (!v) return "na";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

}  // namespace detail

/// Per-branch loss/validation curve:
/// epoch,total,base,vilhub,val_many,val_med,val_few,val_all
inline void save_history_csv(const std::vector<EpochRecord>& history,
                             const std::string& branch,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write history: " + path);
  out << "epoch,total,base,vilhub,val_many,val_med,val_few,val_all\n";
  for (const auto& rec : history) {
    const BranchEpochLoss* loss = nullptr;
    const std::optional<BandReport>* bands = nullptr;
    if (branch == "subject") {
      loss = &rec.subject;
      bands = &rec.val_subject;
    } else if (branch == "relation") {
      loss = &rec.relation;
      bands = &rec.val_relation;
    } else if (branch == "object") {
      loss = &rec.object;
      bands = &rec.val_object;
    } else {
      throw std::invalid_argument("history: unknown branch '" + branch + "'");
    }
    out << rec.epoch << ',' << detail::fmt_g(loss->total) << ','
        << detail::fmt_g(loss->base) << ',' << detail::fmt_g(loss->vilhub);
    if (*bands) {
      out << ',' << detail::fmt_band((*bands)->many) << ','
          << detail::fmt_band((*bands)->medium) << ','
          << detail::fmt_band((*bands)->few) << ','
          << detail::fmt_band((*bands)->all);
    } else {
      out << ",,,,";
    }
    out << '\n';
  }
}

// --- gradient verification -------------------------------------------------------

struct GradCheckConfig {
  int trials = 20;
  std::uint64_t seed = 0;
  double step = 1e-6;
  int d_in = 5;
  int d_emb = 4;
  int hidden = 0;
  bool normalize = false;
  int k_ent = 6;
  int k_rel = 5;
  int batch = 3;
  LossKind kind = LossKind::triplet_softmax;
  double gamma_vilhub = 0.0;
  double gamma_focal = 2.0;
  bool soft_targets = false;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  int worst_trial = -1;
  std::string worst_param;
};

/// Compares the analytic parameter gradient of one synthetic batch against
/// central finite differences, over `trials` random draws.
inline GradCheckReport gradcheck_params(const GradCheckConfig& gc) {
  if (gc.trials < 1) throw std::invalid_argument("gradcheck: trials < 1");
  GradCheckReport report;
  for (int trial = 0; trial < gc.trials; ++trial) {
    Rng rng = substream(gc.seed, "gradcheck", static_cast<std::uint64_t>(trial));
    ModelConfig mc{gc.d_in, gc.d_emb, gc.hidden, gc.normalize};
    ModelParams params = init_params(mc, gc.k_ent, gc.k_rel, rng.next_u64());
    // Check at a generic point. Fresh params have zero biases, so a dead
    // ReLU row would leave a projected row exactly at the origin -- the one
    // spot where row normalization is not differentiable.
    for (auto& view : param_views(params))
      for (std::size_t i = 0; i < view.size; ++i)
        view.data[i] += rng.uniform(-0.2, 0.2);
    Matrix xs(gc.batch, gc.d_in), xr(gc.batch, gc.d_in), xo(gc.batch, gc.d_in);
    for (double& v : xs.data()) v = rng.normal();
    for (double& v : xr.data()) v = rng.normal();
    for (double& v : xo.data()) v = rng.normal();
    auto draw_rows = [&](int k) {
      std::vector<SoftLabel> rows(gc.batch);
      for (int i = 0; i < gc.batch; ++i) {
        int a = static_cast<int>(rng.uniform_index(k));
        if (gc.soft_targets) {
          int b = static_cast<int>(rng.uniform_index(k));
          double lambda = rng.uniform(0.2, 0.8);
          if (a == b)
            rows[i] = {{a, 1.0}};
          else if (a < b)
            rows[i] = {{a, lambda}, {b, 1.0 - lambda}};
          else
            rows[i] = {{b, 1.0 - lambda}, {a, lambda}};
        } else {
          rows[i] = {{a, 1.0}};
        }
      }
      return rows;
    };
    auto rows_s = draw_rows(gc.k_ent);
    auto rows_r = draw_rows(gc.k_rel);
    auto rows_o = draw_rows(gc.k_ent);
    auto make_cfg = [&](int k) {
      LossConfig lc;
      lc.kind = gc.kind;
      lc.gamma_vilhub = gc.gamma_vilhub;
      lc.gamma_focal = gc.gamma_focal;
      if (gc.kind == LossKind::weighted) {
        lc.weights.resize(k);
        double sum = 0.0;
        for (double& w : lc.weights) {
          w = rng.uniform(0.25, 4.0);
          sum += w;
        }
        for (double& w : lc.weights) w *= k / sum;
      }
      return lc;
    };
    const LossConfig loss_ent = make_cfg(gc.k_ent);
    const LossConfig loss_rel = make_cfg(gc.k_rel);

    auto loss_value = [&](ModelParams& p) {
      BranchForward fs = forward_branch(mc, p.ent, p.Y_ent, xs);
      BranchForward fr = forward_branch(mc, p.rel, p.Y_rel, xr);
      BranchForward fo = forward_branch(mc, p.ent, p.Y_ent, xo);
      return combined_loss(fs.Z, rows_s, loss_ent).total +
             combined_loss(fr.Z, rows_r, loss_rel).total +
             combined_loss(fo.Z, rows_o, loss_ent).total;
    };

    ModelGrads grads = zero_grads(params);
    {
      BranchForward fs = forward_branch(mc, params.ent, params.Y_ent, xs);
      BranchForward fr = forward_branch(mc, params.rel, params.Y_rel, xr);
      BranchForward fo = forward_branch(mc, params.ent, params.Y_ent, xo);
      CombinedLoss ls = combined_loss(fs.Z, rows_s, loss_ent);
      CombinedLoss lr = combined_loss(fr.Z, rows_r, loss_rel);
      CombinedLoss lo = combined_loss(fo.Z, rows_o, loss_ent);
      add_branch_grads(grads.ent, grads.Y_ent,
                       backward_branch(mc, params.ent, params.Y_ent, xs, fs,
                                       ls.grad),
                       mc.hidden);
      add_branch_grads(grads.ent, grads.Y_ent,
                       backward_branch(mc, params.ent, params.Y_ent, xo, fo,
                                       lo.grad),
                       mc.hidden);
      add_branch_grads(grads.rel, grads.Y_rel,
                       backward_branch(mc, params.rel, params.Y_rel, xr, fr,
                                       lr.grad),
                       mc.hidden);
    }

    auto pv = param_views(params);
    auto gv = param_views(grads, mc.hidden);
    for (std::size_t t = 0; t < pv.size(); ++t) {
      for (std::size_t i = 0; i < pv[t].size; ++i) {
        double saved = pv[t].data[i];
        pv[t].data[i] = saved + gc.step;
        double up = loss_value(params);
        pv[t].data[i] = saved - gc.step;
        double down = loss_value(params);
        pv[t].data[i] = saved;
        double fd = (up - down) / (2.0 * gc.step);
        double an = gv[t].data[i];
        double err = std::abs(an - fd) /
                     std::max({1.0, std::abs(an), std::abs(fd)});
        if (err > report.max_rel_err) {
          report.max_rel_err = err;
          report.worst_trial = trial;
          report.worst_param = pv[t].name + "[" + std::to_string(i) + "]";
        }
      }
    }
  }
  return report;
}

}  // namespace ltrel
