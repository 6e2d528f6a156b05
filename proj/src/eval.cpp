// SPDX-License-Identifier: Apache-2.0

#include "tensorchart/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "tensorchart/parallel.hpp"
#include "tensorchart/rng.hpp"

namespace tensorchart {

namespace {

// rank[i][j]: position (1-based) of j in the ascending distance order around
// i, ties broken by index; rank[i][i] = 0
std::vector<std::vector<std::uint32_t>> rank_matrix(const DissimilarityMatrix &d) {
  const std::size_t n = d.n;
  std::vector<std::vector<std::uint32_t>> ranks(n, std::vector<std::uint32_t>(n, 0));
  parallel_for(0, n, [&](std::size_t i) {
    std::vector<std::uint32_t> order;
    order.reserve(n - 1);
    for (std::uint32_t j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      const double da = d.at(i, a), db = d.at(i, b);
      return da != db ? da < db : a < b;
    });
    for (std::uint32_t r = 0; r < order.size(); ++r) ranks[i][order[r]] = r + 1;
  });
  return ranks;
}

void check_k(std::size_t n, std::size_t k) {
  if (k < 1 || 2 * k >= n)
    throw std::invalid_argument("neighborhood metrics: need 1 <= k < n/2");
}

void check_same_size(const DissimilarityMatrix &a, const DissimilarityMatrix &b) {
  if (a.n != b.n) throw std::invalid_argument("metrics: matrix sizes differ");
}

// shared kernel: penalizes points that are k-neighbors under d_in but not
// under d_out, weighted by how far down the d_out ranking they sit
double neighborhood_score(const DissimilarityMatrix &d_out, const DissimilarityMatrix &d_in,
                          std::size_t k) {
  check_same_size(d_out, d_in);
  const std::size_t n = d_out.n;
  check_k(n, k);
  const auto rank_out = rank_matrix(d_out);
  const auto rank_in = rank_matrix(d_in);
  double penalty = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (rank_in[i][j] <= k && rank_out[i][j] > k)
        penalty += double(rank_out[i][j] - k);
    }
  const double norm = 2.0 / (double(n) * double(k) * double(2 * n - 3 * k - 1));
  return 1.0 - norm * penalty;
}

}  // namespace

DissimilarityMatrix chart_distance_matrix(const std::vector<ChartPoint> &z) {
  const std::size_t n = z.size();
  DissimilarityMatrix d(n, DissimilarityKind::kDirect);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::hypot(z[i][0] - z[j][0], z[i][1] - z[j][1]);
      d.at(i, j) = v;
      d.at(j, i) = v;
    }
  return d;
}

double trustworthiness(const DissimilarityMatrix &d_high, const DissimilarityMatrix &d_low,
                       std::size_t k) {
  // intruders: chart-space neighbors that are not high-d neighbors
  return neighborhood_score(d_high, d_low, k);
}

double trustworthiness(const DissimilarityMatrix &d_high, const std::vector<ChartPoint> &z,
                       std::size_t k) {
  return trustworthiness(d_high, chart_distance_matrix(z), k);
}

double continuity(const DissimilarityMatrix &d_high, const DissimilarityMatrix &d_low,
                  std::size_t k) {
  // missing neighbors: high-d neighbors dropped from the chart neighborhood
  return neighborhood_score(d_low, d_high, k);
}

double continuity(const DissimilarityMatrix &d_high, const std::vector<ChartPoint> &z,
                  std::size_t k) {
  return continuity(d_high, chart_distance_matrix(z), k);
}

double kruskal_stress(const DissimilarityMatrix &d_high, const DissimilarityMatrix &d_low) {
  check_same_size(d_high, d_low);
  const std::size_t n = d_high.n;
  if (n < 2) throw std::invalid_argument("kruskal_stress: need at least two points");
  double dd = 0.0, dz = 0.0, zz = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = d_high.at(i, j);
      const double z = d_low.at(i, j);
      dd += d * d;
      dz += d * z;
      zz += z * z;
    }
  if (dd == 0.0) throw std::invalid_argument("kruskal_stress: all dissimilarities are zero");
  if (zz == 0.0) return 1.0;  // collapsed chart explains nothing
  const double beta = dz / zz;
  double resid = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = d_high.at(i, j) - beta * d_low.at(i, j);
      resid += r * r;
    }
  return std::sqrt(resid / dd);
}

double kruskal_stress(const DissimilarityMatrix &d_high, const std::vector<ChartPoint> &z) {
  return kruskal_stress(d_high, chart_distance_matrix(z));
}

MetricReport evaluate_chart(const DissimilarityMatrix &d_high, const std::vector<ChartPoint> &z,
                            std::size_t k) {
  const DissimilarityMatrix d_low = chart_distance_matrix(z);
  MetricReport r;
  r.tw = trustworthiness(d_high, d_low, k);
  r.ct = continuity(d_high, d_low, k);
  r.ks = kruskal_stress(d_high, d_low);
  r.neighborhood_k = k;
  return r;
}

AffineFit optimal_affine(const std::vector<ChartPoint> &z,
                         const std::vector<std::array<double, 2>> &truth) {
  const std::size_t n = z.size();
  if (truth.size() != n) throw std::invalid_argument("optimal_affine: size mismatch");
  if (n < 3) throw std::invalid_argument("optimal_affine: need at least three points");

  // normal equations for the design [zx zy 1]
  double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  double rhs[3][2] = {{0, 0}, {0, 0}, {0, 0}};
  for (std::size_t i = 0; i < n; ++i) {
    const double row[3] = {z[i][0], z[i][1], 1.0};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) m[a][b] += row[a] * row[b];
      rhs[a][0] += row[a] * truth[i][0];
      rhs[a][1] += row[a] * truth[i][1];
    }
  }

  // 3x3 Gaussian elimination with partial pivoting
  double aug[3][5];
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) aug[a][b] = m[a][b];
    aug[a][3] = rhs[a][0];
    aug[a][4] = rhs[a][1];
  }
  const double scale = std::max({std::abs(m[0][0]), std::abs(m[1][1]), std::abs(m[2][2]), 1.0});
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(aug[r][col]) > std::abs(aug[pivot][col])) pivot = r;
    if (std::abs(aug[pivot][col]) < 1e-12 * scale)
      throw std::invalid_argument("optimal_affine: degenerate chart geometry");
    if (pivot != col)
      for (int b = 0; b < 5; ++b) std::swap(aug[col][b], aug[pivot][b]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = aug[r][col] / aug[col][col];
      for (int b = col; b < 5; ++b) aug[r][b] -= f * aug[col][b];
    }
  }
  const double sol[3][2] = {{aug[0][3] / aug[0][0], aug[0][4] / aug[0][0]},
                            {aug[1][3] / aug[1][1], aug[1][4] / aug[1][1]},
                            {aug[2][3] / aug[2][2], aug[2][4] / aug[2][2]}};

  AffineFit fit;
  fit.transform.matrix = {{{sol[0][0], sol[1][0]}, {sol[0][1], sol[1][1]}}};
  fit.transform.offset = {sol[2][0], sol[2][1]};
  fit.aligned.resize(n);
  double resid = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ax = fit.transform.matrix[0][0] * z[i][0] + fit.transform.matrix[0][1] * z[i][1] +
                      fit.transform.offset[0];
    const double ay = fit.transform.matrix[1][0] * z[i][0] + fit.transform.matrix[1][1] * z[i][1] +
                      fit.transform.offset[1];
    fit.aligned[i] = {ax, ay};
    resid += (ax - truth[i][0]) * (ax - truth[i][0]) + (ay - truth[i][1]) * (ay - truth[i][1]);
  }
  fit.residual_rms = std::sqrt(resid / double(n));
  return fit;
}

namespace {

// shifted power iteration for the algebraically largest eigenpair of a dense
// symmetric matrix held in a flat row-major vector
std::pair<double, std::vector<double>> top_eigenpair(const std::vector<double> &b, std::size_t n,
                                                     double shift, Rng &rng) {
  std::vector<double> v(n);
  for (auto &x : v) x = rng.normal();
  double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  for (auto &x : v) x /= norm;

  std::vector<double> w(n);
  for (int it = 0; it < 10000; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = shift * v[i];
      const double *row = b.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) acc += row[j] * v[j];
      w[i] = acc;
    }
    norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
    if (norm == 0.0) break;
    const double align =
        std::inner_product(w.begin(), w.end(), v.begin(), 0.0) >= 0.0 ? 1.0 : -1.0;
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] /= norm;
      delta += std::abs(w[i] - align * v[i]);
    }
    v = w;
    if (delta < 1e-10) break;
  }
  // Rayleigh quotient against the unshifted matrix
  double rq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    const double *row = b.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * v[j];
    rq += v[i] * acc;
  }
  return {rq, v};
}

}  // namespace

MdsResult isomap_baseline(const DissimilarityMatrix &d_geo) {
  if (d_geo.kind != DissimilarityKind::kGeodesic)
    throw std::invalid_argument("isomap_baseline: geodesic input required");
  const std::size_t n = d_geo.n;
  if (n < 3) throw std::invalid_argument("isomap_baseline: need at least three points");

  // double centering of -d^2/2
  std::vector<double> b(n * n);
  std::vector<double> row_mean(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d2 = d_geo.at(i, j) * d_geo.at(i, j);
      b[i * n + j] = d2;
      row_mean[i] += d2;
    }
    total += row_mean[i];
    row_mean[i] /= double(n);
  }
  total /= double(n) * double(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      b[i * n + j] = -0.5 * (b[i * n + j] - row_mean[i] - row_mean[j] + total);

  double fro = 0.0;
  for (double v : b) fro += v * v;
  const double shift = std::sqrt(fro) + 1.0;

  MdsResult out;
  Rng rng(0xC4A5'0000 + n);
  std::vector<std::vector<double>> vecs;
  for (int e = 0; e < 2; ++e) {
    auto [lambda, vec] = top_eigenpair(b, n, shift, rng);
    out.eigenvalues[e] = lambda;
    vecs.push_back(vec);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) b[i * n + j] -= lambda * vec[i] * vec[j];
  }
  // most negative eigenvalue of the deflated remainder equals the one of the
  // original centered matrix when both top eigenvalues are nonnegative
  {
    std::vector<double> neg(b.size());
    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -b[i];
    auto [mu, vec] = top_eigenpair(neg, n, shift, rng);
    (void)vec;
    out.min_eigenvalue = -mu;
    out.negative_mass = std::max(0.0, mu);
  }

  out.points.resize(n);
  const double s0 = std::sqrt(std::max(out.eigenvalues[0], 0.0));
  const double s1 = std::sqrt(std::max(out.eigenvalues[1], 0.0));
  for (std::size_t i = 0; i < n; ++i) out.points[i] = {vecs[0][i] * s0, vecs[1][i] * s1};
  return out;
}

std::string scatter_svg(const std::vector<std::array<double, 2>> &truth,
                        const std::vector<ChartPoint> &chart) {
  if (truth.size() != chart.size())
    throw std::invalid_argument("scatter_svg: point counts differ");
  double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
  const auto widen = [&](double x, double y) {
    lo_x = std::min(lo_x, x);
    hi_x = std::max(hi_x, x);
    lo_y = std::min(lo_y, y);
    hi_y = std::max(hi_y, y);
  };
  for (const auto &p : truth) widen(p[0], p[1]);
  for (const auto &p : chart) widen(p[0], p[1]);
  const double span_x = std::max(hi_x - lo_x, 1e-9);
  const double span_y = std::max(hi_y - lo_y, 1e-9);

  const double size = 820.0, margin = 50.0;
  const double scale = (size - 2.0 * margin) / std::max(span_x, span_y);
  const auto px = [&](double x) { return margin + (x - lo_x) * scale; };
  const auto py = [&](double y) { return size - margin - (y - lo_y) * scale; };

  std::ostringstream svg;
  svg.precision(2);
  svg << std::fixed;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << int(size) << "\" height=\""
      << int(size) << "\" viewBox=\"0 0 " << int(size) << " " << int(size) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto &p : truth)
    svg << "<circle cx=\"" << px(p[0]) << "\" cy=\"" << py(p[1])
        << "\" r=\"3\" fill=\"#3465a4\" fill-opacity=\"0.7\"/>\n";
  for (const auto &p : chart)
    svg << "<circle cx=\"" << px(p[0]) << "\" cy=\"" << py(p[1])
        << "\" r=\"3\" fill=\"#e8590c\" fill-opacity=\"0.7\"/>\n";
  svg << "<rect x=\"" << margin << "\" y=\"10\" width=\"14\" height=\"14\" fill=\"#3465a4\"/>\n";
  svg << "<text x=\"" << margin + 20 << "\" y=\"22\" font-size=\"14\">ground truth</text>\n";
  svg << "<rect x=\"" << margin + 140 << "\" y=\"10\" width=\"14\" height=\"14\" "
         "fill=\"#e8590c\"/>\n";
  svg << "<text x=\"" << margin + 160 << "\" y=\"22\" font-size=\"14\">aligned chart</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace tensorchart
