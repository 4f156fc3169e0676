#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ltrel/matrix.hpp"

namespace ltrel {

// ---------------------------------------------------------------------------
// Batch losses over logits. Every loss returns its value together with the
// gradient with respect to the logits, and reduces by batch mean. Softmax
// numerics subtract the row max, and log-probabilities are formed as
// z - logsumexp rather than log(p) so extreme logits stay finite.
// ---------------------------------------------------------------------------

enum class LossKind { triplet_softmax, weighted, focal };

inline const char* loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::triplet_softmax: return "triplet_softmax";
    case LossKind::weighted: return "weighted";
    case LossKind::focal: return "focal";
  }
  return "?";
}

struct LossConfig {
  LossKind kind = LossKind::triplet_softmax;
  double gamma_vilhub = 0.0;  // weight of the balancing term; 0 disables it
  double gamma_focal = 2.0;   // focusing exponent for the focal variant
  Vec weights;                // per-class weights for the weighted variant
};

inline void validate_loss_config(const LossConfig& cfg, int num_classes) {
  if (cfg.gamma_vilhub < 0.0)
    throw std::invalid_argument("loss config: negative balancing weight");
  if (cfg.gamma_focal < 0.0)
    throw std::invalid_argument("loss config: negative focusing exponent");
  if (cfg.kind == LossKind::weighted &&
      static_cast<int>(cfg.weights.size()) != num_classes)
    throw std::invalid_argument(
        "loss config: weighted variant needs one weight per class");
}

/// Sparse probability row: (class id, mass) pairs summing to 1.
using SoftLabel = std::vector<std::pair<int, double>>;

inline std::vector<SoftLabel> one_hot_rows(const std::vector<int>& targets) {
  std::vector<SoftLabel> rows(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i)
    rows[i] = {{targets[i], 1.0}};
  return rows;
}

struct LossGrad {
  double loss = 0.0;
  Matrix grad;  // dL/dZ, same shape as the logits
};

/// Row-wise softmax with max subtraction. Constant rows come out exactly
/// uniform (each entry is literally 1.0 / K), which the balancing loss below
/// relies on for its exact-zero property.
inline Matrix softmax_rows(const Matrix& z) {
  if (z.rows() == 0 || z.cols() == 0)
    throw std::invalid_argument("softmax: empty logits");
  Matrix p(z.rows(), z.cols());
  for (int i = 0; i < z.rows(); ++i) {
    const double* zi = z.row(i);
    double* pi = p.row(i);
    double m = zi[0];
    for (int j = 1; j < z.cols(); ++j) m = std::max(m, zi[j]);
    double sum = 0.0;
    for (int j = 0; j < z.cols(); ++j) {
      pi[j] = std::exp(zi[j] - m);
      sum += pi[j];
    }
    for (int j = 0; j < z.cols(); ++j) pi[j] /= sum;
  }
  return p;
}

namespace detail {

/// Fills logp (z - logsumexp) and p (exp of that) for one row.
inline void row_log_softmax(const double* z, int k, Vec& logp, Vec& p) {
  double m = z[0];
  for (int j = 1; j < k; ++j) m = std::max(m, z[j]);
  double sum = 0.0;
  for (int j = 0; j < k; ++j) sum += std::exp(z[j] - m);
  // (z - m) - log(sum) rather than z - (m + log sum): the shifted logit is
  // exact, so constant rows yield exactly -log K.
  double logsum = std::log(sum);
  for (int j = 0; j < k; ++j) {
    logp[j] = (z[j] - m) - logsum;
    p[j] = std::exp(logp[j]);
  }
}

inline void validate_rows(const std::vector<SoftLabel>& rows, int batch,
                          int k) {
  if (static_cast<int>(rows.size()) != batch)
    throw std::invalid_argument("loss: one target row per batch row required");
  for (int i = 0; i < batch; ++i) {
    double sum = 0.0;
    for (const auto& [cls, t] : rows[i]) {
      if (cls < 0 || cls >= k)
        throw std::invalid_argument("loss: target class out of range in row " +
                                    std::to_string(i));
      if (!(t >= 0.0) || !std::isfinite(t))
        throw std::invalid_argument("loss: negative or non-finite target mass "
                                    "in row " +
                                    std::to_string(i));
      sum += t;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("loss: target row " + std::to_string(i) +
                                  " is not normalized (sum=" +
                                  std::to_string(sum) + ")");
  }
}

}  // namespace detail

/// Cross-entropy / weighted / focal loss over sparse target rows. All three
/// variants share this engine so that equalities between them (focal at
/// exponent 0, one-hot soft targets) hold bit-for-bit, not just numerically.
inline LossGrad base_loss(const Matrix& z, const std::vector<SoftLabel>& rows,
                          const LossConfig& cfg) {
  const int b = z.rows();
  const int k = z.cols();
  if (b == 0 || k == 0) throw std::invalid_argument("loss: empty logits");
  validate_loss_config(cfg, k);
  detail::validate_rows(rows, b, k);
  LossGrad out;
  out.grad = Matrix(b, k);
  Vec logp(k), p(k);
  std::vector<std::pair<int, double>> entry_gp;
  double total = 0.0;
  for (int i = 0; i < b; ++i) {
    detail::row_log_softmax(z.row(i), k, logp, p);
    double* g = out.grad.row(i);
    if (cfg.kind == LossKind::focal) {
      const double gamma = cfg.gamma_focal;
      entry_gp.clear();
      double c = 0.0;  // sum of t * dL/dp * p across target entries
      double row_loss = 0.0;
      for (const auto& [cls, t] : rows[i]) {
        const double lp = logp[cls];
        const double pp = p[cls];
        const double om = -std::expm1(lp);  // stable 1 - p
        double gp, lterm;
        if (gamma == 0.0) {
          gp = -1.0;
          lterm = -lp;
        } else if (om <= 0.0) {  // p == 1: the modulating factor vanishes
          gp = 0.0;
          lterm = 0.0;
        } else {
          const double plogp = pp > 0.0 ? pp * lp : 0.0;
          gp = gamma * std::pow(om, gamma - 1.0) * plogp - std::pow(om, gamma);
          lterm = -std::pow(om, gamma) * lp;
        }
        row_loss += t * lterm;
        c += t * gp;
        entry_gp.emplace_back(cls, t * gp);
      }
      for (int j = 0; j < k; ++j) g[j] = -c * p[j];
      for (const auto& [cls, tgp] : entry_gp) g[cls] += tgp;
      total += row_loss;
    } else {
      const Vec* w = cfg.kind == LossKind::weighted ? &cfg.weights : nullptr;
      double a = 0.0;  // sum of w_k * t_k
      double row_loss = 0.0;
      for (const auto& [cls, t] : rows[i]) {
        const double wk = w ? (*w)[cls] : 1.0;
        a += wk * t;
        row_loss += wk * t * logp[cls];
      }
      for (int j = 0; j < k; ++j) g[j] = a * p[j];
      for (const auto& [cls, t] : rows[i]) g[cls] -= (w ? (*w)[cls] : 1.0) * t;
      total -= row_loss;
    }
  }
  const double invb = 1.0 / b;
  out.loss = total * invb;
  scale(out.grad, invb);
  return out;
}

inline LossGrad triplet_softmax_loss(const Matrix& z,
                                     const std::vector<int>& targets,
                                     const Vec* weights = nullptr) {
  LossConfig cfg;
  if (weights) {
    cfg.kind = LossKind::weighted;
    cfg.weights = *weights;
  }
  return base_loss(z, one_hot_rows(targets), cfg);
}

inline LossGrad focal_loss(const Matrix& z, const std::vector<int>& targets,
                           double gamma) {
  LossConfig cfg;
  cfg.kind = LossKind::focal;
  cfg.gamma_focal = gamma;
  return base_loss(z, one_hot_rows(targets), cfg);
}

/// Dense soft-target cross entropy; rows must be probability distributions.
inline LossGrad soft_target_loss(const Matrix& z, const Matrix& targets,
                                 const Vec* weights = nullptr) {
  check_shape(z.same_shape(targets), "soft targets vs logits");
  std::vector<SoftLabel> rows(targets.rows());
  for (int i = 0; i < targets.rows(); ++i)
    for (int j = 0; j < targets.cols(); ++j)
      if (targets(i, j) != 0.0) rows[i].emplace_back(j, targets(i, j));
  LossConfig cfg;
  if (weights) {
    cfg.kind = LossKind::weighted;
    cfg.weights = *weights;
  }
  return base_loss(z, rows, cfg);
}

/// Head-bias penalty: squared deviation of the batch-mean softmax (the
/// "popularity" of each class inside the batch) from the uniform vector.
/// Deviations are accumulated as sums of (p - 1/K) so a batch of exactly
/// uniform rows yields exactly zero.
inline LossGrad vilhub_loss(const Matrix& z) {
  const int b = z.rows();
  const int k = z.cols();
  Matrix p = softmax_rows(z);
  const double invk = 1.0 / k;
  Vec dev(k, 0.0);
  for (int i = 0; i < b; ++i) {
    const double* pi = p.row(i);
    for (int j = 0; j < k; ++j) dev[j] += pi[j] - invk;
  }
  LossGrad out;
  for (int j = 0; j < k; ++j) {
    dev[j] /= b;
    out.loss += dev[j] * dev[j];
  }
  out.grad = Matrix(b, k);
  const double coef = 2.0 / b;
  for (int i = 0; i < b; ++i) {
    const double* pi = p.row(i);
    double* gi = out.grad.row(i);
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += dev[j] * pi[j];
    for (int j = 0; j < k; ++j) gi[j] = coef * pi[j] * (dev[j] - s);
  }
  return out;
}

/// Mean softmax per class over the batch; diagnostic counterpart of
/// vilhub_loss.
inline Vec popularity(const Matrix& z) {
  Matrix p = softmax_rows(z);
  Vec pf = col_sums(p);
  for (double& v : pf) v /= z.rows();
  return pf;
}

struct CombinedLoss {
  double total = 0.0;
  double base = 0.0;
  double vilhub = 0.0;
  Matrix grad;
};

/// base + gamma * balancing term. With gamma == 0 the balancing term is not
/// evaluated at all, so the result equals the base loss exactly.
inline CombinedLoss combined_loss(const Matrix& z,
                                  const std::vector<SoftLabel>& rows,
                                  const LossConfig& cfg) {
  LossGrad b = base_loss(z, rows, cfg);
  CombinedLoss out;
  out.base = b.loss;
  out.grad = std::move(b.grad);
  if (cfg.gamma_vilhub != 0.0) {
    LossGrad h = vilhub_loss(z);
    out.vilhub = h.loss;
    out.total = out.base + cfg.gamma_vilhub * h.loss;
    axpy(cfg.gamma_vilhub, h.grad, out.grad);
  } else {
    out.total = out.base;
  }
  return out;
}

inline CombinedLoss combined_loss(const Matrix& z,
                                  const std::vector<int>& targets,
                                  const LossConfig& cfg) {
  return combined_loss(z, one_hot_rows(targets), cfg);
}

}  // namespace ltrel
