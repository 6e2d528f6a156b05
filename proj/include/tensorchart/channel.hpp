// SPDX-License-Identifier: Apache-2.0
//
// Cluster-delay-line channel synthesis. A channel tensor has shape
// (n_rx, n_pol, n_tx, n_sub); each entry is a sum over propagation paths of
// a per-polarization complex gain, a subcarrier-dependent delay phase and
// the two array steering phases.

#ifndef TENSORCHART_CHANNEL_HPP
#define TENSORCHART_CHANNEL_HPP

#include <array>
#include <cstddef>
#include <vector>

#include "tensorchart/tensor.hpp"

namespace tensorchart {

constexpr double kSpeedOfLight = 299792458.0;  // m/s
constexpr double kTwoPi = 6.283185307179586476925286766559;

struct ArrayGeometry {
  std::vector<std::array<double, 3>> element_positions;  // meters
  std::size_t polarization_count = 1;
};

// Dual-polarized rows x cols grid in the y-z plane at the given spacing.
ArrayGeometry rectangular_array(std::size_t rows, std::size_t cols, double spacing_m,
                                std::size_t polarization_count);

// All elements at the same point (small terminal).
ArrayGeometry colocated_array(std::size_t count, std::size_t polarization_count);

struct CdlPath {
  std::vector<cplx> gains;  // one complex gain per polarization
  double delay_s = 0.0;
  double aoa_az = 0.0;  // azimuth of arrival, rad
  double zoa = 0.0;     // zenith of arrival, rad
  double aod_az = 0.0;  // azimuth of departure, rad
  double zod = 0.0;     // zenith of departure, rad
};

struct SystemConfig {
  std::size_t n_rx = 32;
  std::size_t n_pol = 2;
  std::size_t n_tx = 2;
  std::size_t n_sub = 408;
  double delta_f = 240e3;    // subcarrier spacing, Hz
  double f_c = 3.5e9;        // carrier frequency, Hz
  double c = kSpeedOfLight;  // m/s
  std::size_t path_count = 8;
};

// (sin z cos a, sin z sin a, cos z); always unit norm.
std::array<double, 3> spherical_unit_vector(double azimuth, double zenith);

// Sum of per-path rank-1 responses. Subcarrier index is zero-based; the
// delay phase at subcarrier i is exp(-j 2 pi delay * i * delta_f) and the
// steering phases are exp(+j 2 pi f_c r.d / c) on both ends.
ComplexTensor cdl_channel(const std::vector<CdlPath> &paths, const ArrayGeometry &rx,
                          const ArrayGeometry &tx, const SystemConfig &cfg);

}  // namespace tensorchart

#endif
