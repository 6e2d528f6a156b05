// SPDX-License-Identifier: Apache-2.0
//
// Spatial-covariance feature extraction, Tucker denoising, and the
// covariance-based dissimilarities used as training targets. Subcarriers
// are grouped into n_sub/h_p strided index sets so a consecutive-block
// 1/h_p observation still hits every group and the feature shape never
// changes.

#ifndef TENSORCHART_FEATURES_HPP
#define TENSORCHART_FEATURES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tensorchart/dataset.hpp"
#include "tensorchart/tensor.hpp"

namespace tensorchart {

// Zero-based index groups: group g holds {g + (n_sub/h_p) * k, k = 0..h_p-1}.
std::vector<std::vector<std::size_t>> subband_groups(std::size_t n_sub, std::size_t h_p);

// Per-subband spatial covariance stack T(:,:,g); every frontal slice is
// Hermitian PSD. group_counts records how many observed subcarriers fed each
// slice; an empty group gets the mean of the non-empty slices and count 0.
struct CovTensor {
  ComplexTensor data;                     // (n_rx, n_rx, n_sub/h_p)
  std::vector<std::size_t> group_counts;  // observed subcarriers per slice
};

CovTensor spatial_cov_tensor(const ComplexTensor &channel,
                             const std::vector<std::uint8_t> &observed, std::size_t h_p);

// Tucker-denoised feature: truncated HOSVD reconstruction split into real
// and imaginary parts.
struct DenoisedFeature {
  RealTensor real_part;
  RealTensor imag_part;
};

DenoisedFeature tucker_denoise(const CovTensor &t, const std::vector<std::size_t> &ranks);

// Overall spatial covariance over all observed subcarriers (the matrix that
// enters the dissimilarity). Equals the count-weighted mean of the
// CovTensor slices.
using ScmMatrix = ComplexMatrix;
ScmMatrix overall_scm(const ComplexTensor &channel, const std::vector<std::uint8_t> &observed);

// 1 - trace(a^H b) / (||a||_F ||b||_F), clamped into [0, 1] against roundoff.
double scm_dissimilarity(const ScmMatrix &a, const ScmMatrix &b);

enum class DissimilarityKind : std::uint8_t { kDirect = 0, kGeodesic = 1 };

struct DissimilarityMatrix {
  std::size_t n = 0;
  DissimilarityKind kind = DissimilarityKind::kDirect;
  std::vector<double> values;  // dense n*n, symmetric, zero diagonal

  DissimilarityMatrix() = default;
  DissimilarityMatrix(std::size_t n_, DissimilarityKind kind_)
      : n(n_), kind(kind_), values(n_ * n_, 0.0) {}
  double &at(std::size_t i, std::size_t j) { return values[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

// Pairwise d_SCM over a sample set (parallel fill).
DissimilarityMatrix scm_dissimilarity_matrix(const std::vector<ScmMatrix> &scms);

// Direct Euclidean distances (used when evaluating charts against ground
// truth positions).
DissimilarityMatrix euclidean_dissimilarity_matrix(
    const std::vector<std::array<double, 2>> &points);

// Shortest-path lift of a direct dissimilarity over a symmetric k-NN graph.
// Disconnected graphs are patched by repeatedly adding the smallest
// inter-component edge. Output satisfies the triangle inequality exactly.
DissimilarityMatrix geodesic_dissimilarity(const DissimilarityMatrix &direct, std::size_t k);

// --------------------------------------------------------------------------
// Artifacts. CCFT: per sample, the denoised (re, im) tensors plus the
// overall SCM, all as tensor records. CCDM: N, kind, upper-triangular f64.

class FeatureWriter {
 public:
  FeatureWriter(const std::string &path, std::uint32_t n_samples);
  void append(const DenoisedFeature &f, const ScmMatrix &scm);
  void finish();

 private:
  std::ofstream out_;
  std::string path_;
  std::uint32_t declared_ = 0;
  std::uint32_t written_ = 0;
};

struct FeatureSet {
  std::vector<DenoisedFeature> features;
  std::vector<ScmMatrix> scms;
};

FeatureSet load_features(const std::string &path);

void save_dissimilarity(const std::string &path, const DissimilarityMatrix &d);
DissimilarityMatrix load_dissimilarity(const std::string &path);

}  // namespace tensorchart

#endif
