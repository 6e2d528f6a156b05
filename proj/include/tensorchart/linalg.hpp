// SPDX-License-Identifier: Apache-2.0
//
// Small dense matrices (column-major) and a cyclic-Jacobi Hermitian
// eigensolver. Everything here operates on matrices no larger than a few
// hundred rows, so clarity beats asymptotics.

#ifndef TENSORCHART_LINALG_HPP
#define TENSORCHART_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace tensorchart {

using cplx = std::complex<double>;

template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, T{}) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T &operator()(std::size_t r, std::size_t c) { return data_[r + rows_ * c]; }
  const T &operator()(std::size_t r, std::size_t c) const { return data_[r + rows_ * c]; }

  std::vector<T> &data() { return data_; }
  const std::vector<T> &data() const { return data_; }

  double frobenius_norm() const {
    double s = 0.0;
    for (const T &v : data_) s += std::norm(std::complex<double>(v));
    return std::sqrt(s);
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RealMatrix = Matrix<double>;
using ComplexMatrix = Matrix<cplx>;

namespace detail {
inline double conj_scalar(double v) { return v; }
inline cplx conj_scalar(const cplx &v) { return std::conj(v); }
}  // namespace detail

template <typename T>
Matrix<T> matmul(const Matrix<T> &a, const Matrix<T> &b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  Matrix<T> c(a.rows(), b.cols());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t l = 0; l < k; ++l) {
      const T bv = b(l, j);
      if (bv == T{}) continue;
      for (std::size_t i = 0; i < m; ++i) c(i, j) += a(i, l) * bv;
    }
  }
  return c;
}

// Conjugate transpose (plain transpose for real scalars).
template <typename T>
Matrix<T> adjoint(const Matrix<T> &a) {
  Matrix<T> t(a.cols(), a.rows());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) t(j, i) = detail::conj_scalar(a(i, j));
  return t;
}

struct HermitianEigen {
  std::vector<double> values;   // descending
  ComplexMatrix vectors;        // columns, unitary
};

// Cyclic Jacobi iteration for a Hermitian matrix. Off-diagonal threshold is
// relative to the Frobenius norm of the input; sweeps are capped at
// max_sweeps. Each eigenvector's largest-magnitude entry is rotated to be
// real and positive so factors are reproducible; ties in eigenvalues keep
// the sweep's input order.
inline HermitianEigen hermitian_eigen(ComplexMatrix a, double tol = 1e-12,
                                      int max_sweeps = 100) {
  const std::size_t n = a.rows();
  if (n != a.cols()) throw std::invalid_argument("hermitian_eigen: matrix not square");
  ComplexMatrix v = ComplexMatrix::identity(n);
  const double scale = a.frobenius_norm();
  const double stop = tol * (scale > 0.0 ? scale : 1.0);

  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t q = 0; q < n; ++q)
      for (std::size_t p = 0; p < n; ++p)
        if (p != q) s += std::norm(a(p, q));
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < max_sweeps && off_norm() > stop; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double r = std::abs(apq);
        if (r <= stop / (n * n + 1.0)) continue;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double tau = (aqq - app) / (2.0 * r);
        // smaller-magnitude root of t^2 - 2*tau*t - 1 = 0, written in the
        // cancellation-free reciprocal form
        const double t = (tau > 0.0) ? -1.0 / (tau + std::sqrt(tau * tau + 1.0))
                                     : 1.0 / (-tau + std::sqrt(tau * tau + 1.0));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const cplx s = (t * c) * (std::conj(apq) / r);
        const cplx sc = std::conj(s);
        // columns p, q of A <- A * U
        for (std::size_t k = 0; k < n; ++k) {
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp + s * akq;
          a(k, q) = -sc * akp + c * akq;
        }
        // rows p, q of A <- U^H * A
        for (std::size_t k = 0; k < n; ++k) {
          const cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk + sc * aqk;
          a(q, k) = -s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        // accumulate V <- V * U
        for (std::size_t k = 0; k < n; ++k) {
          const cplx vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp + s * vkq;
          v(k, q) = -sc * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i).real();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return diag[x] > diag[y]; });

  HermitianEigen out;
  out.values.resize(n);
  out.vectors = ComplexMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.values[j] = diag[src];
    // phase fix: largest-magnitude entry made real positive
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double m = std::abs(v(i, src));
      if (m > best) {
        best = m;
        arg = i;
      }
    }
    cplx phase{1.0, 0.0};
    if (best > 0.0) phase = std::conj(v(arg, src)) / best;
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, src) * phase;
  }
  return out;
}

}  // namespace tensorchart

#endif
