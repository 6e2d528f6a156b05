// SPDX-License-Identifier: Apache-2.0
//
// Dense tensor container with mode-n unfolding, mode-n products, truncated
// HOSVD and Tucker reconstruction. Storage layout is fixed: the flat array
// runs with the FIRST mode fastest, i.e. flat = i0 + I0*(i1 + I1*(i2 + ...)).
// Modes are zero-based throughout.

#ifndef TENSORCHART_TENSOR_HPP
#define TENSORCHART_TENSOR_HPP

#include <algorithm>
#include <complex>
#include <cstddef>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tensorchart/binio.hpp"
#include "tensorchart/linalg.hpp"

namespace tensorchart {

template <typename T>
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)) {
    std::size_t n = 1;
    for (std::size_t d : shape_) {
      if (d == 0) throw std::invalid_argument("DenseTensor: zero-sized mode");
      n *= d;
    }
    data_.assign(n, T{});
  }

  std::size_t order() const { return shape_.size(); }
  const std::vector<std::size_t> &shape() const { return shape_; }
  std::size_t dim(std::size_t mode) const { return shape_[mode]; }
  std::size_t size() const { return data_.size(); }

  std::vector<T> &data() { return data_; }
  const std::vector<T> &data() const { return data_; }

  std::size_t flat_index(const std::vector<std::size_t> &idx) const {
    std::size_t f = 0, stride = 1;
    for (std::size_t m = 0; m < shape_.size(); ++m) {
      f += idx[m] * stride;
      stride *= shape_[m];
    }
    return f;
  }

  template <typename... Idx>
  T &operator()(Idx... idx) {
    return data_[flat_of(idx...)];
  }
  template <typename... Idx>
  const T &operator()(Idx... idx) const {
    return data_[flat_of(idx...)];
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (const T &v : data_) s += std::norm(std::complex<double>(v));
    return std::sqrt(s);
  }

 private:
  template <typename... Idx>
  std::size_t flat_of(Idx... idx) const {
    const std::size_t ind[] = {static_cast<std::size_t>(idx)...};
    std::size_t f = 0, stride = 1;
    for (std::size_t m = 0; m < sizeof...(idx); ++m) {
      f += ind[m] * stride;
      stride *= shape_[m];
    }
    return f;
  }

  std::vector<std::size_t> shape_;
  std::vector<T> data_;
};

using RealTensor = DenseTensor<double>;
using ComplexTensor = DenseTensor<cplx>;

// Mode-n unfolding. Rows are the unfolded mode; columns enumerate the
// remaining modes in increasing mode order with the earliest remaining mode
// fastest. fold() below is the exact inverse.
template <typename T>
struct Unfolding {
  std::size_t mode = 0;
  std::vector<std::size_t> shape;  // shape of the folded tensor
  Matrix<T> matrix;
};

namespace detail {
// left/right extents around a mode for the fixed layout
inline void mode_split(const std::vector<std::size_t> &shape, std::size_t mode,
                       std::size_t &left, std::size_t &right) {
  left = 1;
  right = 1;
  for (std::size_t m = 0; m < mode; ++m) left *= shape[m];
  for (std::size_t m = mode + 1; m < shape.size(); ++m) right *= shape[m];
}
}  // namespace detail

template <typename T>
Unfolding<T> unfold(const DenseTensor<T> &x, std::size_t mode) {
  if (mode >= x.order()) throw std::invalid_argument("unfold: mode out of range");
  std::size_t left, right;
  detail::mode_split(x.shape(), mode, left, right);
  const std::size_t mid = x.dim(mode);
  Unfolding<T> u;
  u.mode = mode;
  u.shape = x.shape();
  u.matrix = Matrix<T>(mid, left * right);
  // column = l + left*r: remaining modes in increasing order, earliest fastest
  const T *src = x.data().data();
  T *dst = u.matrix.data().data();
  for (std::size_t r = 0; r < right; ++r) {
    for (std::size_t k = 0; k < mid; ++k) {
      const T *s = src + left * (k + mid * r);
      for (std::size_t l = 0; l < left; ++l) {
        dst[k + mid * (l + left * r)] = s[l];
      }
    }
  }
  return u;
}

template <typename T>
DenseTensor<T> fold(const Unfolding<T> &u) {
  std::size_t left, right;
  detail::mode_split(u.shape, u.mode, left, right);
  const std::size_t mid = u.shape[u.mode];
  if (u.matrix.rows() != mid || u.matrix.cols() != left * right)
    throw std::invalid_argument("fold: matrix size inconsistent with shape");
  DenseTensor<T> x(u.shape);
  const T *src = u.matrix.data().data();
  T *dst = x.data().data();
  for (std::size_t r = 0; r < right; ++r) {
    for (std::size_t k = 0; k < mid; ++k) {
      T *d = dst + left * (k + mid * r);
      for (std::size_t l = 0; l < left; ++l) {
        d[l] = src[k + mid * (l + left * r)];
      }
    }
  }
  return x;
}

// Contraction of the chosen mode with matrix b (rows replace that mode).
// Runs directly on the flat layout; no unfolding copies are made.
template <typename T>
DenseTensor<T> mode_product(const DenseTensor<T> &x, const Matrix<T> &b, std::size_t mode) {
  if (mode >= x.order()) throw std::invalid_argument("mode_product: mode out of range");
  if (b.cols() != x.dim(mode))
    throw std::invalid_argument("mode_product: matrix columns must equal the mode size");
  std::size_t left, right;
  detail::mode_split(x.shape(), mode, left, right);
  const std::size_t mid = x.dim(mode);
  const std::size_t out_mid = b.rows();

  std::vector<std::size_t> out_shape = x.shape();
  out_shape[mode] = out_mid;
  DenseTensor<T> y(out_shape);

  const T *xd = x.data().data();
  T *yd = y.data().data();
  if (left == 1) {
    // row-transposed copy of b so the inner dot product is contiguous
    std::vector<T> bt(mid * out_mid);
    for (std::size_t k = 0; k < mid; ++k)
      for (std::size_t j = 0; j < out_mid; ++j) bt[k + mid * j] = b(j, k);
    for (std::size_t r = 0; r < right; ++r) {
      const T *xc = xd + mid * r;
      T *yc = yd + out_mid * r;
      for (std::size_t j = 0; j < out_mid; ++j) {
        const T *brow = bt.data() + mid * j;
        T acc{};
        for (std::size_t k = 0; k < mid; ++k) acc += brow[k] * xc[k];
        yc[j] = acc;
      }
    }
  } else {
    for (std::size_t r = 0; r < right; ++r) {
      for (std::size_t j = 0; j < out_mid; ++j) {
        T *yc = yd + left * (j + out_mid * r);
        for (std::size_t k = 0; k < mid; ++k) {
          const T bv = b(j, k);
          if (bv == T{}) continue;
          const T *xc = xd + left * (k + mid * r);
          for (std::size_t l = 0; l < left; ++l) yc[l] += bv * xc[l];
        }
      }
    }
  }
  return y;
}

struct TuckerFactors {
  ComplexTensor core;
  std::vector<ComplexMatrix> factors;  // factors[n]: I_n x R_n, orthonormal columns
};

// Gram matrix of an unfolding: M * M^H.
template <typename T>
ComplexMatrix gram(const Matrix<T> &m) {
  ComplexMatrix g(m.rows(), m.rows());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    for (std::size_t j = 0; j < m.rows(); ++j) {
      const cplx mj = detail::conj_scalar(cplx(m(j, c)));
      for (std::size_t i = 0; i < m.rows(); ++i) {
        g(i, j) += cplx(m(i, c)) * mj;
      }
    }
  }
  return g;
}

// Truncated higher-order SVD. Per mode, the factor holds the leading R_n
// left singular vectors of the unfolding, obtained from the Hermitian
// eigendecomposition of its Gram matrix; the core is the input contracted
// with the conjugated factors.
inline TuckerFactors hosvd(const ComplexTensor &x, const std::vector<std::size_t> &ranks) {
  if (ranks.size() != x.order())
    throw std::invalid_argument("hosvd: one rank per mode required");
  TuckerFactors t;
  t.factors.reserve(x.order());
  for (std::size_t n = 0; n < x.order(); ++n) {
    if (ranks[n] == 0 || ranks[n] > x.dim(n))
      throw std::invalid_argument("hosvd: rank out of range for mode " + std::to_string(n));
    const auto u = unfold(x, n);
    const HermitianEigen eig = hermitian_eigen(gram(u.matrix));
    ComplexMatrix factor(x.dim(n), ranks[n]);
    for (std::size_t j = 0; j < ranks[n]; ++j)
      for (std::size_t i = 0; i < x.dim(n); ++i) factor(i, j) = eig.vectors(i, j);
    t.factors.push_back(std::move(factor));
  }
  t.core = x;
  for (std::size_t n = 0; n < x.order(); ++n)
    t.core = mode_product(t.core, adjoint(t.factors[n]), n);
  return t;
}

inline ComplexTensor tucker_reconstruct(const TuckerFactors &t) {
  if (t.factors.size() != t.core.order())
    throw std::invalid_argument("tucker_reconstruct: factor count != core order");
  for (std::size_t n = 0; n < t.factors.size(); ++n)
    if (t.factors[n].cols() != t.core.dim(n))
      throw std::invalid_argument("tucker_reconstruct: factor/core shape mismatch at mode " +
                                  std::to_string(n));
  ComplexTensor y = t.core;
  for (std::size_t n = 0; n < t.factors.size(); ++n)
    y = mode_product(y, t.factors[n], n);
  return y;
}

// ---------------------------------------------------------------------------
// Tensor records: "TNSR" magic, version u16, order u8, mode sizes u32,
// scalar kind u8 (0 = real, 1 = complex), then little-endian f64 payload
// (re/im interleaved for complex) in flat layout order.

inline constexpr char kTensorMagic[4] = {'T', 'N', 'S', 'R'};
inline constexpr std::uint16_t kTensorVersion = 1;

namespace detail {
inline void write_tnsr_header(std::ostream &out, const std::vector<std::size_t> &shape,
                              std::uint8_t kind) {
  write_magic(out, kTensorMagic);
  write_u16(out, kTensorVersion);
  write_u8(out, static_cast<std::uint8_t>(shape.size()));
  for (std::size_t d : shape) write_u32(out, static_cast<std::uint32_t>(d));
  write_u8(out, kind);
}

inline std::vector<std::size_t> read_tnsr_header(std::istream &in, const std::string &path,
                                                 std::uint8_t &kind) {
  expect_magic(in, kTensorMagic, path);
  const std::uint16_t ver = read_u16(in, "tensor version");
  if (ver != kTensorVersion)
    throw CorruptArtifactError("unsupported tensor version in " + path);
  const std::uint8_t order = read_u8(in, "tensor order");
  std::vector<std::size_t> shape(order);
  for (auto &d : shape) {
    d = read_u32(in, "tensor mode size");
    if (d == 0) throw CorruptArtifactError("zero mode size in " + path);
  }
  kind = read_u8(in, "tensor scalar kind");
  return shape;
}
}  // namespace detail

inline void write_tnsr(std::ostream &out, const RealTensor &x) {
  detail::write_tnsr_header(out, x.shape(), 0);
  for (double v : x.data()) write_f64(out, v);
}

inline void write_tnsr(std::ostream &out, const ComplexTensor &x) {
  detail::write_tnsr_header(out, x.shape(), 1);
  for (const cplx &v : x.data()) {
    write_f64(out, v.real());
    write_f64(out, v.imag());
  }
}

inline RealTensor read_tnsr_real(std::istream &in, const std::string &path) {
  std::uint8_t kind;
  auto shape = detail::read_tnsr_header(in, path, kind);
  if (kind != 0) throw CorruptArtifactError("expected real tensor in " + path);
  RealTensor x(shape);
  for (double &v : x.data()) v = read_f64(in, "tensor payload");
  return x;
}

inline ComplexTensor read_tnsr_complex(std::istream &in, const std::string &path) {
  std::uint8_t kind;
  auto shape = detail::read_tnsr_header(in, path, kind);
  if (kind != 1) throw CorruptArtifactError("expected complex tensor in " + path);
  ComplexTensor x(shape);
  for (cplx &v : x.data()) {
    const double re = read_f64(in, "tensor payload");
    const double im = read_f64(in, "tensor payload");
    v = {re, im};
  }
  return x;
}

}  // namespace tensorchart

#endif
