#pragma once

#include <cmath>
#include <functional>

#include "ltrel/matrix.hpp"

namespace ltrel::testutil {

/// Central finite-difference gradient of a scalar function of the logits,
/// compared entry-wise against an analytic gradient. Returns the max
/// relative error, with |a| and |f| floored at 1 in the denominator.
inline double fd_max_rel_err(const std::function<double(const Matrix&)>& f,
                             Matrix z, const Matrix& analytic,
                             double h = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < z.data().size(); ++i) {
    const double saved = z.data()[i];
    z.data()[i] = saved + h;
    const double up = f(z);
    z.data()[i] = saved - h;
    const double down = f(z);
    z.data()[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double a = analytic.data()[i];
    const double denom = std::max({1.0, std::fabs(a), std::fabs(fd)});
    worst = std::max(worst, std::fabs(a - fd) / denom);
  }
  return worst;
}

}  // namespace ltrel::testutil
