// SPDX-License-Identifier: Apache-2.0
//
// Ground-truth-labeled dataset generation and the CCDS artifact format.
// A seeded spatial field of per-cluster parameters (anchored at fixed
// scatterer positions, bilinearly interpolated over a coarse grid) drives
// smooth position dependence; the line-of-sight path uses exact geometry.

#ifndef TENSORCHART_DATASET_HPP
#define TENSORCHART_DATASET_HPP

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "tensorchart/channel.hpp"
#include "tensorchart/errors.hpp"
#include "tensorchart/rng.hpp"

namespace tensorchart {

struct TrajectoryConfig {
  double x_min = 0.0, x_max = 80.0;  // walk rectangle, meters
  double y_min = 0.0, y_max = 80.0;
  double step_sigma = 1.8;       // per-step velocity kick, meters
  double momentum = 0.93;        // velocity smoothing factor in [0,1)
  double ue_height = 1.5;        // meters
  std::array<double, 3> bs_position = {-30.0, 40.0, 20.0};
  std::size_t field_grid = 9;    // nodes per axis of the parameter field
  double angle_jitter = 0.25;    // radians of smooth per-cluster angle wobble
  double gain_jitter = 0.35;     // log-amplitude wobble of cluster gains
  double nlos_gain_min = 0.20;   // cluster base amplitudes relative to LOS
  double nlos_gain_max = 0.55;
  double reference_distance = 60.0;  // meters, amplitude normalization
};

struct Sample {
  std::array<double, 2> position{};              // ground truth, meters
  ComplexTensor channel;                         // (n_rx, n_pol, n_tx, n_sub)
  std::optional<std::uint32_t> hopping_offset;   // set when masked
  std::vector<std::uint8_t> observed;            // per-subcarrier flag
};

struct Dataset {
  SystemConfig system;
  std::uint32_t hopping = 1;  // observation h_p; 1 = full band
  std::vector<Sample> samples;
};

// Smooth momentum walk with wall reflection; pure function of the seed.
std::vector<std::array<double, 2>> plan_trajectory(std::uint64_t seed, std::size_t n,
                                                   const TrajectoryConfig &traj);

// Per-cluster parameter surfaces sampled on a coarse grid. Unit direction
// vectors are interpolated componentwise so there are no angle wraps.
class ClusterField {
 public:
  ClusterField(std::uint64_t seed, const SystemConfig &cfg, const TrajectoryConfig &traj);

  // CDL paths at a UE position: exact LOS plus the interpolated clusters.
  std::vector<CdlPath> paths_at(const std::array<double, 2> &position) const;

  const ArrayGeometry &rx_array() const { return rx_; }
  const ArrayGeometry &tx_array() const { return tx_; }

 private:
  struct NodeParams {
    std::array<double, 3> dir_rx;  // arrival direction at the BS
    std::array<double, 3> dir_tx;  // departure direction at the UE
    double delay;
    std::vector<cplx> gains;  // per polarization
  };

  NodeParams interpolate(std::size_t cluster, double x, double y) const;

  SystemConfig cfg_;
  TrajectoryConfig traj_;
  ArrayGeometry rx_, tx_;
  std::size_t grid_;
  std::vector<std::vector<NodeParams>> nodes_;  // [cluster][gy * grid_ + gx]
  std::vector<std::vector<double>> los_phase_;  // smooth LOS phase, [pol][node]
};

// Clean full-band samples over a smooth trajectory; deterministic in seed.
std::vector<Sample> generate_dataset(std::uint64_t seed, std::size_t n_samples,
                                     const SystemConfig &cfg, const TrajectoryConfig &traj);

// Adds circular complex white noise scaled so that
// 10*log10(||x||_F^2 / E||noise||_F^2) equals snr_db.
ComplexTensor add_awgn(const ComplexTensor &x, double snr_db, std::uint64_t seed);

// Observation mask for consecutive-block hopping: block `offset` out of h_p.
std::vector<std::uint8_t> hopping_mask(std::size_t n_sub, std::size_t h_p, std::size_t offset);

// Marks the sample as a 1/h_p observation (mask only; entries are kept).
void apply_hopping(Sample &s, std::size_t h_p, std::size_t offset);

// --------------------------------------------------------------------------
// CCDS dataset files. Header: magic, version, system config, sample count,
// hopping h_p. Per sample: position, hopping offset (sentinel 0xFFFFFFFF when
// unmasked), observed-mask run-length encoding, channel tensor record.

class DatasetWriter {
 public:
  DatasetWriter(const std::string &path, const SystemConfig &cfg, std::uint32_t n_samples,
                std::uint32_t hopping);
  void append(const Sample &s);
  void finish();

 private:
  std::ofstream out_;
  std::string path_;
  SystemConfig cfg_;
  std::uint32_t declared_ = 0;
  std::uint32_t written_ = 0;
};

class DatasetReader {
 public:
  explicit DatasetReader(const std::string &path);
  const SystemConfig &system() const { return cfg_; }
  std::uint32_t sample_count() const { return n_samples_; }
  std::uint32_t hopping() const { return hopping_; }
  Sample next();

 private:
  std::ifstream in_;
  std::string path_;
  SystemConfig cfg_;
  std::uint32_t n_samples_ = 0;
  std::uint32_t hopping_ = 1;
  std::uint32_t read_ = 0;
};

void save_dataset(const std::string &path, const Dataset &ds);
Dataset load_dataset(const std::string &path);

// Ground-truth positions only; channel payloads are seeked over, not read.
std::vector<std::array<double, 2>> load_positions(const std::string &path);

}  // namespace tensorchart

#endif
