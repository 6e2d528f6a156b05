// SPDX-License-Identifier: Apache-2.0
//
// Chart quality metrics (trustworthiness, continuity, Kruskal stress),
// least-squares affine alignment against ground truth, and the classical-MDS
// baseline on geodesic dissimilarities. All rank computations break ties by
// index so results are deterministic.

#ifndef TENSORCHART_EVAL_HPP
#define TENSORCHART_EVAL_HPP

#include <array>
#include <string>
#include <vector>

#include "tensorchart/features.hpp"
#include "tensorchart/network.hpp"

namespace tensorchart {

struct MetricReport {
  double ct = 0.0;
  double tw = 0.0;
  double ks = 0.0;
  std::size_t neighborhood_k = 0;
};

// Pairwise chart distances as a direct dissimilarity matrix.
DissimilarityMatrix chart_distance_matrix(const std::vector<ChartPoint> &z);

// Rank-based neighborhood scores in [0, 1]; k must satisfy 1 <= k < n/2.
// The matrix overloads exist because both scores depend on the low-d side
// only through distance ranks.
double trustworthiness(const DissimilarityMatrix &d_high, const DissimilarityMatrix &d_low,
                       std::size_t k);
double trustworthiness(const DissimilarityMatrix &d_high, const std::vector<ChartPoint> &z,
                       std::size_t k);
double continuity(const DissimilarityMatrix &d_high, const DissimilarityMatrix &d_low,
                  std::size_t k);
double continuity(const DissimilarityMatrix &d_high, const std::vector<ChartPoint> &z,
                  std::size_t k);

// Optimally-scaled stress: min over beta > 0 of
// sqrt( sum (d_ij - beta*z_ij)^2 / sum d_ij^2 ), beta in closed form.
double kruskal_stress(const DissimilarityMatrix &d_high, const DissimilarityMatrix &d_low);
double kruskal_stress(const DissimilarityMatrix &d_high, const std::vector<ChartPoint> &z);

MetricReport evaluate_chart(const DissimilarityMatrix &d_high, const std::vector<ChartPoint> &z,
                            std::size_t k);

struct AffineTransform {
  std::array<std::array<double, 2>, 2> matrix = {{{1.0, 0.0}, {0.0, 1.0}}};
  std::array<double, 2> offset = {0.0, 0.0};
};

struct AffineFit {
  AffineTransform transform;
  std::vector<ChartPoint> aligned;
  double residual_rms = 0.0;
};

// Least-squares A z + b ~ p via normal equations on the 3-column design.
AffineFit optimal_affine(const std::vector<ChartPoint> &z,
                         const std::vector<std::array<double, 2>> &truth);

struct MdsResult {
  std::vector<ChartPoint> points;
  std::array<double, 2> eigenvalues = {0.0, 0.0};
  double min_eigenvalue = 0.0;  // most negative eigenvalue of the centered matrix
  double negative_mass = 0.0;   // max(0, -min_eigenvalue); non-Euclidean diagnostic
};

// Classical MDS on a geodesic matrix: double-center -d^2/2, take the top two
// eigenpairs by shifted power iteration with deflation, scale by sqrt of the
// eigenvalues. Rejects direct-kind input.
MdsResult isomap_baseline(const DissimilarityMatrix &d_geo);

// Scatter overlay: one circle per ground-truth point, one per aligned chart
// point, plus a legend. Exactly 2n circle elements.
std::string scatter_svg(const std::vector<std::array<double, 2>> &truth,
                        const std::vector<ChartPoint> &chart);

}  // namespace tensorchart

#endif
