// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <sstream>
#include <vector>

#include "tensorchart/rng.hpp"
#include "tensorchart/tensor.hpp"

using namespace tensorchart;

namespace {

ComplexTensor random_tensor(const std::vector<std::size_t> &shape, Rng &rng) {
  ComplexTensor x(shape);
  for (cplx &v : x.data()) v = {rng.normal(), rng.normal()};
  return x;
}

ComplexMatrix random_matrix(std::size_t r, std::size_t c, Rng &rng) {
  ComplexMatrix m(r, c);
  for (cplx &v : m.data()) v = {rng.normal(), rng.normal()};
  return m;
}

// Gram-Schmidt on random columns; returns an n x k matrix with orthonormal
// columns.
ComplexMatrix random_orthonormal(std::size_t n, std::size_t k, Rng &rng) {
  ComplexMatrix q(n, k);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<cplx> v(n);
    for (auto &e : v) e = {rng.normal(), rng.normal()};
    for (std::size_t prev = 0; prev < j; ++prev) {
      cplx proj{};
      for (std::size_t i = 0; i < n; ++i) proj += std::conj(q(i, prev)) * v[i];
      for (std::size_t i = 0; i < n; ++i) v[i] -= proj * q(i, prev);
    }
    double norm = 0.0;
    for (const auto &e : v) norm += std::norm(e);
    norm = std::sqrt(norm);
    REQUIRE(norm > 1e-8);
    for (std::size_t i = 0; i < n; ++i) q(i, j) = v[i] / norm;
  }
  return q;
}

// Independent eigenvalue oracle: shifted power iteration with deflation on a
// Hermitian PSD matrix (different algorithm from the library's Jacobi path).
std::vector<double> psd_eigenvalues_oracle(ComplexMatrix a) {
  const std::size_t n = a.rows();
  const double shift = a.frobenius_norm() + 1.0;
  std::vector<double> out;
  Rng rng(4242);
  for (std::size_t e = 0; e < n; ++e) {
    std::vector<cplx> v(n);
    for (auto &x : v) x = {rng.normal(), rng.normal()};
    double lambda = 0.0;
    for (int it = 0; it < 20000; ++it) {
      std::vector<cplx> w(n);
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) w[i] += (a(i, j) + (i == j ? shift : 0.0)) * v[j];
      double norm = 0.0;
      for (const auto &x : w) norm += std::norm(x);
      norm = std::sqrt(norm);
      for (auto &x : w) x /= norm;
      double delta = 0.0;
      cplx phase{};
      for (std::size_t i = 0; i < n; ++i) phase += std::conj(v[i]) * w[i];
      const double pm = std::abs(phase);
      const cplx align = pm > 0 ? phase / pm : cplx{1.0};
      for (std::size_t i = 0; i < n; ++i) delta += std::abs(w[i] - align * v[i]);
      v = w;
      lambda = norm - shift;
      if (delta < 1e-13 && it > 10) break;
    }
    out.push_back(lambda);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) a(i, j) -= lambda * v[i] * std::conj(v[j]);
  }
  std::sort(out.begin(), out.end(), std::greater<double>());
  return out;
}

// Naive mode product by direct summation, used as the contraction oracle.
ComplexTensor naive_mode_product_3(const ComplexTensor &x, const ComplexMatrix &b,
                                   std::size_t mode) {
  std::vector<std::size_t> shape = x.shape();
  shape[mode] = b.rows();
  ComplexTensor y(shape);
  for (std::size_t i = 0; i < shape[0]; ++i)
    for (std::size_t j = 0; j < shape[1]; ++j)
      for (std::size_t k = 0; k < shape[2]; ++k) {
        cplx acc{};
        for (std::size_t m = 0; m < x.dim(mode); ++m) {
          if (mode == 0)
            acc += b(i, m) * x(m, j, k);
          else if (mode == 1)
            acc += b(j, m) * x(i, m, k);
          else
            acc += b(k, m) * x(i, j, m);
        }
        y(i, j, k) = acc;
      }
  return y;
}

double rel_err(const ComplexTensor &a, const ComplexTensor &b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a.data()[i] - b.data()[i]);
    den += std::norm(a.data()[i]);
  }
  return std::sqrt(num) / std::sqrt(den > 0 ? den : 1.0);
}

}  // namespace

TEST_CASE("unfold of 2x2x2 with counting data puts (1,2) in the first column") {
  ComplexTensor x({2, 2, 2});
  for (std::size_t i = 0; i < 8; ++i) x.data()[i] = double(i + 1);
  const auto u = unfold(x, 0);
  CHECK(u.matrix.rows() == 2);
  CHECK(u.matrix.cols() == 4);
  CHECK(u.matrix(0, 0) == cplx(1.0));
  CHECK(u.matrix(1, 0) == cplx(2.0));
  CHECK(u.matrix(0, 1) == cplx(3.0));
  CHECK(u.matrix(1, 3) == cplx(8.0));
}

TEST_CASE("fold(unfold(x, n)) is the identity, bit-exact, for every mode") {
  Rng rng(1);
  const auto x = random_tensor({3, 4, 5}, rng);
  for (std::size_t mode = 0; mode < 3; ++mode) {
    const auto back = fold(unfold(x, mode));
    REQUIRE(back.shape() == x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(back.data()[i] == x.data()[i]);
  }
}

TEST_CASE("unfold rejects an out-of-range mode") {
  ComplexTensor x({2, 2});
  CHECK_THROWS_AS(unfold(x, 2), std::invalid_argument);
}

TEST_CASE("second-mode unfolding of a rank-1 tensor matches the outer-product layout") {
  Rng rng(2);
  const std::size_t I = 3, J = 4, K = 2;
  std::vector<cplx> a(I), b(J), c(K);
  for (auto &v : a) v = {rng.normal(), rng.normal()};
  for (auto &v : b) v = {rng.normal(), rng.normal()};
  for (auto &v : c) v = {rng.normal(), rng.normal()};
  // brute-force elementwise construction of the rank-1 tensor
  ComplexTensor x({I, J, K});
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t i = 0; i < I; ++i) x(i, j, k) = a[i] * b[j] * c[k];
  const auto u = unfold(x, 1);
  REQUIRE(u.matrix.rows() == J);
  REQUIRE(u.matrix.cols() == I * K);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t j = 0; j < J; ++j) {
        // column order: earliest remaining mode (i) fastest
        const cplx want = b[j] * (a[i] * c[k]);
        CHECK(std::abs(u.matrix(j, i + I * k) - want) < 1e-14);
      }
}

TEST_CASE("mode product with the identity leaves the tensor unchanged") {
  Rng rng(3);
  const auto x = random_tensor({4, 3, 5}, rng);
  for (std::size_t mode = 0; mode < 3; ++mode) {
    const auto y = mode_product(x, ComplexMatrix::identity(x.dim(mode)), mode);
    CHECK(rel_err(y, x) < 1e-15);
  }
}

TEST_CASE("mode products along distinct modes commute") {
  Rng rng(4);
  const auto x = random_tensor({4, 5, 3}, rng);
  const auto a = random_matrix(2, 4, rng);
  const auto b = random_matrix(6, 5, rng);
  const auto ab = mode_product(mode_product(x, a, 0), b, 1);
  const auto ba = mode_product(mode_product(x, b, 1), a, 0);
  CHECK(rel_err(ab, ba) < 1e-13);
}

TEST_CASE("mode products along the same mode compose") {
  Rng rng(5);
  const auto x = random_tensor({4, 3, 3}, rng);
  const auto a = random_matrix(5, 4, rng);
  const auto b = random_matrix(2, 5, rng);
  const auto chained = mode_product(mode_product(x, a, 0), b, 0);
  const auto composed = mode_product(x, matmul(b, a), 0);
  CHECK(rel_err(chained, composed) < 1e-13);
}

TEST_CASE("mode product equals the direct triple-loop contraction oracle") {
  Rng rng(6);
  const auto x = random_tensor({3, 3, 3}, rng);
  for (std::size_t mode = 0; mode < 3; ++mode) {
    const auto b = random_matrix(4, 3, rng);
    const auto fast = mode_product(x, b, mode);
    const auto naive = naive_mode_product_3(x, b, mode);
    CHECK(rel_err(fast, naive) < 1e-14);
    // and the matrix identity: unfold(x ×_n B, n) == B * unfold(x, n)
    const auto lhs = unfold(fast, mode).matrix;
    const auto rhs = matmul(b, unfold(x, mode).matrix);
    for (std::size_t i = 0; i < lhs.data().size(); ++i)
      CHECK(std::abs(lhs.data()[i] - rhs.data()[i]) < 1e-12);
  }
}

TEST_CASE("mode product rejects mismatched shapes") {
  Rng rng(7);
  const auto x = random_tensor({3, 3, 3}, rng);
  const auto b = random_matrix(4, 2, rng);
  CHECK_THROWS_AS(mode_product(x, b, 1), std::invalid_argument);
}

TEST_CASE("mode product norm is bounded by the factor norm") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_tensor({3, 4, 2}, rng);
    const auto b = random_matrix(5, 4, rng);
    const auto y = mode_product(x, b, 1);
    CHECK(y.frobenius_norm() <= b.frobenius_norm() * x.frobenius_norm() + 1e-12);
  }
}

TEST_CASE("hermitian eigendecomposition reconstructs the input") {
  Rng rng(9);
  const std::size_t n = 7;
  auto m = random_matrix(n, n, rng);
  // make Hermitian
  ComplexMatrix h(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) h(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));
  const auto eig = hermitian_eigen(h);
  // A == V diag V^H and V unitary
  const auto vt = adjoint(eig.vectors);
  ComplexMatrix lam(n, n);
  for (std::size_t i = 0; i < n; ++i) lam(i, i) = eig.values[i];
  const auto recon = matmul(eig.vectors, matmul(lam, vt));
  const auto gramv = matmul(vt, eig.vectors);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(recon(i, j) - h(i, j)) < 1e-10);
      CHECK(std::abs(gramv(i, j) - (i == j ? 1.0 : 0.0)) < 1e-11);
    }
  for (std::size_t i = 1; i < n; ++i) CHECK(eig.values[i - 1] >= eig.values[i]);
}

TEST_CASE("full-rank HOSVD reconstructs exactly and factors are orthonormal") {
  Rng rng(10);
  const auto x = random_tensor({4, 5, 3}, rng);
  const auto t = hosvd(x, {4, 5, 3});
  for (const auto &u : t.factors) {
    const auto g = matmul(adjoint(u), u);
    for (std::size_t j = 0; j < g.cols(); ++j)
      for (std::size_t i = 0; i < g.rows(); ++i)
        CHECK(std::abs(g(i, j) - (i == j ? 1.0 : 0.0)) <= 1e-10);
  }
  CHECK(rel_err(tucker_reconstruct(t), x) <= 1e-10);
}

TEST_CASE("HOSVD recovers an exactly low-multilinear-rank tensor") {
  Rng rng(11);
  auto core = random_tensor({2, 2, 2}, rng);
  const auto q1 = random_orthonormal(5, 2, rng);
  const auto q2 = random_orthonormal(5, 2, rng);
  const auto q3 = random_orthonormal(5, 2, rng);
  auto x = mode_product(mode_product(mode_product(core, q1, 0), q2, 1), q3, 2);
  const auto t = hosvd(x, {2, 2, 2});
  CHECK(rel_err(tucker_reconstruct(t), x) <= 1e-8);
}

TEST_CASE("truncated HOSVD error is bounded by the discarded singular values") {
  Rng rng(12);
  const auto x = random_tensor({5, 4, 6}, rng);
  // oracle: per-mode squared singular values from an independent eigensolver
  std::vector<std::vector<double>> sigma2(3);
  for (std::size_t n = 0; n < 3; ++n)
    sigma2[n] = psd_eigenvalues_oracle(gram(unfold(x, n).matrix));
  const std::vector<std::vector<std::size_t>> rank_sets = {
      {2, 2, 2}, {3, 2, 4}, {1, 4, 6}, {5, 4, 6}, {4, 1, 3}};
  for (const auto &ranks : rank_sets) {
    const auto t = hosvd(x, ranks);
    const auto recon = tucker_reconstruct(t);
    double err2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      err2 += std::norm(x.data()[i] - recon.data()[i]);
    double bound = 0.0;
    for (std::size_t n = 0; n < 3; ++n)
      for (std::size_t i = ranks[n]; i < sigma2[n].size(); ++i)
        bound += std::max(0.0, sigma2[n][i]);
    CHECK(err2 <= bound + 1e-9);
  }
}

TEST_CASE("hosvd rejects out-of-range ranks") {
  Rng rng(13);
  const auto x = random_tensor({3, 3, 3}, rng);
  CHECK_THROWS_AS(hosvd(x, {4, 3, 3}), std::invalid_argument);
  CHECK_THROWS_AS(hosvd(x, {0, 3, 3}), std::invalid_argument);
  CHECK_THROWS_AS(hosvd(x, {3, 3}), std::invalid_argument);
}

TEST_CASE("reconstruction of a zero core is the zero tensor") {
  TuckerFactors t;
  t.core = ComplexTensor({2, 2, 2});
  Rng rng(14);
  t.factors = {random_orthonormal(4, 2, rng), random_orthonormal(4, 2, rng),
               random_orthonormal(4, 2, rng)};
  const auto y = tucker_reconstruct(t);
  for (const auto &v : y.data()) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("reconstruction error is non-increasing in every rank") {
  Rng rng(15);
  const auto x = random_tensor({6, 6, 6}, rng);
  auto error_at = [&](std::size_t r1, std::size_t r2, std::size_t r3) {
    const auto recon = tucker_reconstruct(hosvd(x, {r1, r2, r3}));
    double e = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      e += std::norm(x.data()[i] - recon.data()[i]);
    return std::sqrt(e);
  };
  for (std::size_t r = 1; r < 6; ++r) {
    CHECK(error_at(r + 1, 3, 3) <= error_at(r, 3, 3) + 1e-10);
    CHECK(error_at(3, r + 1, 3) <= error_at(3, r, 3) + 1e-10);
    CHECK(error_at(3, 3, r + 1) <= error_at(3, 3, r) + 1e-10);
  }
}

TEST_CASE("tucker_reconstruct rejects inconsistent factor shapes") {
  Rng rng(16);
  TuckerFactors t;
  t.core = random_tensor({2, 2, 2}, rng);
  t.factors = {random_orthonormal(4, 2, rng), random_orthonormal(4, 3, rng),
               random_orthonormal(4, 2, rng)};
  CHECK_THROWS_AS(tucker_reconstruct(t), std::invalid_argument);
}

TEST_CASE("tensor records round-trip for real and complex payloads") {
  Rng rng(17);
  const auto x = random_tensor({3, 2, 4}, rng);
  std::stringstream buf;
  write_tnsr(buf, x);
  const auto back = read_tnsr_complex(buf, "<mem>");
  REQUIRE(back.shape() == x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(back.data()[i] == x.data()[i]);

  RealTensor r({2, 5});
  for (auto &v : r.data()) v = rng.normal();
  std::stringstream buf2;
  write_tnsr(buf2, r);
  const auto rback = read_tnsr_real(buf2, "<mem>");
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(rback.data()[i] == r.data()[i]);
}

TEST_CASE("tensor reader rejects a bad magic and a scalar-kind mismatch") {
  std::stringstream buf;
  buf << "JUNKxxxxxxxxxxxxxxxx";
  CHECK_THROWS_AS(read_tnsr_complex(buf, "<mem>"), CorruptArtifactError);

  RealTensor r({2, 2});
  std::stringstream buf2;
  write_tnsr(buf2, r);
  CHECK_THROWS_AS(read_tnsr_complex(buf2, "<mem>"), CorruptArtifactError);
}
