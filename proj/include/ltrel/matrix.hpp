#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltrel {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles. Sized for the small models this
/// library trains (hundreds of rows/columns), so the operations below are
/// straightforward triple loops.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
              fill) {
    if (rows < 0 || cols < 0)
      throw std::invalid_argument("Matrix: negative dimensions");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(int i, int j) {
    return data_[static_cast<std::size_t>(i) * cols_ + j];
  }
  double operator()(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * cols_ + j];
  }

  double* row(int i) { return data_.data() + static_cast<std::size_t>(i) * cols_; }
  const double* row(int i) const {
    return data_.data() + static_cast<std::size_t>(i) * cols_;
  }

  Vec& data() { return data_; }
  const Vec& data() const { return data_; }

  bool same_shape(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  Vec data_;
};

inline void check_shape(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("shape mismatch: " + what);
}

/// C = A * B, (m x k) * (k x n).
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  check_shape(a.cols() == b.rows(), "matmul inner dimension");
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = ai[k];
      if (aik == 0.0) continue;
      const double* bk = b.row(k);
      for (int j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

/// C = A * B^T, (m x k) * (n x k)^T -> m x n.
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_shape(a.cols() == b.cols(), "matmul_nt inner dimension");
  Matrix c(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int j = 0; j < b.rows(); ++j) {
      const double* bj = b.row(j);
      double s = 0.0;
      for (int k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
      ci[j] = s;
    }
  }
  return c;
}

/// C = A^T * B, (m x k)^T * (m x n) -> k x n.
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_shape(a.rows() == b.rows(), "matmul_tn inner dimension");
  Matrix c(a.cols(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    const double* bi = b.row(i);
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = ai[k];
      if (aik == 0.0) continue;
      double* ck = c.row(k);
      for (int j = 0; j < b.cols(); ++j) ck[j] += aik * bi[j];
    }
  }
  return c;
}

inline void axpy(double alpha, const Matrix& x, Matrix& y) {
  check_shape(x.same_shape(y), "axpy operands");
  for (std::size_t i = 0; i < y.data().size(); ++i)
    y.data()[i] += alpha * x.data()[i];
}

inline void scale(Matrix& m, double alpha) {
  for (double& v : m.data()) v *= alpha;
}

inline double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const double* a, int n) {
  return std::sqrt(dot(a, a, n));
}

/// Column sums of A, length cols.
inline Vec col_sums(const Matrix& a) {
  Vec s(a.cols(), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    for (int j = 0; j < a.cols(); ++j) s[j] += ai[j];
  }
  return s;
}

inline bool all_finite(const Matrix& m) {
  for (double v : m.data())
    if (!std::isfinite(v)) return false;
  return true;
}

inline bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace ltrel
