// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>

#include "tensorchart/channel.hpp"
#include "tensorchart/dataset.hpp"
#include "tensorchart/features.hpp"
#include "tensorchart/rng.hpp"

using namespace tensorchart;

namespace {

SystemConfig tiny_config() {
  SystemConfig cfg;
  cfg.n_rx = 4;
  cfg.n_pol = 2;
  cfg.n_tx = 2;
  cfg.n_sub = 16;
  cfg.path_count = 3;
  return cfg;
}

CdlPath unit_path(std::size_t n_pol) {
  CdlPath p;
  p.gains.assign(n_pol, cplx{1.0, 0.0});
  return p;
}

}  // namespace

TEST_CASE("spherical unit vector hits the axis cases") {
  const auto x_axis = spherical_unit_vector(0.0, 1.5707963267948966);
  CHECK(std::abs(x_axis[0] - 1.0) < 1e-15);
  CHECK(std::abs(x_axis[1]) < 1e-15);
  CHECK(std::abs(x_axis[2]) < 1e-15);

  const auto pole = spherical_unit_vector(2.1, 0.0);
  CHECK(std::abs(pole[0]) < 1e-15);
  CHECK(std::abs(pole[1]) < 1e-15);
  CHECK(std::abs(pole[2] - 1.0) < 1e-15);
}

TEST_CASE("spherical unit vector has unit norm for random angles") {
  Rng rng(100);
  for (int i = 0; i < 1000; ++i) {
    const auto v = spherical_unit_vector(rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0));
    const double norm = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    CHECK(std::abs(norm - 1.0) <= 1e-12);
  }
}

TEST_CASE("single zero-delay path with origin arrays gives the all-ones tensor") {
  const auto cfg = tiny_config();
  const auto rx = colocated_array(cfg.n_rx, cfg.n_pol);
  const auto tx = colocated_array(cfg.n_tx, 1);
  const auto h = cdl_channel({unit_path(cfg.n_pol)}, rx, tx, cfg);
  for (const cplx &v : h.data()) {
    CHECK(std::abs(v - cplx{1.0, 0.0}) < 1e-14);
  }
}

TEST_CASE("a pure delay produces the expected frequency tone") {
  const auto cfg = tiny_config();
  const auto rx = colocated_array(cfg.n_rx, cfg.n_pol);
  const auto tx = colocated_array(cfg.n_tx, 1);
  CdlPath p = unit_path(cfg.n_pol);
  p.delay_s = 1.0 / (double(cfg.n_sub) * cfg.delta_f);
  const auto h = cdl_channel({p}, rx, tx, cfg);
  for (std::size_t sc = 0; sc < cfg.n_sub; ++sc) {
    const double phase = -kTwoPi * double(sc) / double(cfg.n_sub);
    const cplx want{std::cos(phase), std::sin(phase)};
    CHECK(std::abs(h(std::size_t(0), std::size_t(0), std::size_t(0), sc) - want) < 1e-12);
  }
}

TEST_CASE("the channel is linear in the path list") {
  const auto cfg = tiny_config();
  const auto rx = rectangular_array(2, 2, 0.04, cfg.n_pol);
  const auto tx = colocated_array(cfg.n_tx, 1);
  Rng rng(101);
  auto random_path = [&]() {
    CdlPath p;
    p.gains = {cplx{rng.normal(), rng.normal()}, cplx{rng.normal(), rng.normal()}};
    p.delay_s = rng.uniform(0.0, 2e-7);
    p.aoa_az = rng.uniform(-1.5, 1.5);
    p.zoa = rng.uniform(0.3, 2.8);
    p.aod_az = rng.uniform(-3.0, 3.0);
    p.zod = rng.uniform(0.3, 2.8);
    return p;
  };
  const auto p1 = random_path();
  const auto p2 = random_path();
  const auto h1 = cdl_channel({p1}, rx, tx, cfg);
  const auto h2 = cdl_channel({p2}, rx, tx, cfg);
  const auto both = cdl_channel({p1, p2}, rx, tx, cfg);
  for (std::size_t i = 0; i < both.size(); ++i)
    CHECK(std::abs(both.data()[i] - (h1.data()[i] + h2.data()[i])) < 1e-12);
}

TEST_CASE("channel entries are bounded by the total path gain per polarization") {
  const auto cfg = tiny_config();
  const auto rx = rectangular_array(2, 2, 0.04, cfg.n_pol);
  const auto tx = colocated_array(cfg.n_tx, 1);
  Rng rng(102);
  std::vector<CdlPath> paths;
  std::vector<double> gain_sum(cfg.n_pol, 0.0);
  for (int l = 0; l < 5; ++l) {
    CdlPath p;
    for (std::size_t pol = 0; pol < cfg.n_pol; ++pol) {
      p.gains.push_back({rng.normal(), rng.normal()});
      gain_sum[pol] += std::abs(p.gains.back());
    }
    p.delay_s = rng.uniform(0.0, 2e-7);
    p.aoa_az = rng.uniform(-3.0, 3.0);
    p.zoa = rng.uniform(0.0, 3.1);
    paths.push_back(p);
  }
  const auto h = cdl_channel(paths, rx, tx, cfg);
  for (std::size_t sc = 0; sc < cfg.n_sub; ++sc)
    for (std::size_t t = 0; t < cfg.n_tx; ++t)
      for (std::size_t pol = 0; pol < cfg.n_pol; ++pol)
        for (std::size_t r = 0; r < cfg.n_rx; ++r)
          CHECK(std::abs(h(r, pol, t, sc)) <= gain_sum[pol] + 1e-12);
}

TEST_CASE("negating the delay conjugates the tensor for a real-gain path") {
  const auto cfg = tiny_config();
  const auto rx = colocated_array(cfg.n_rx, cfg.n_pol);
  const auto tx = colocated_array(cfg.n_tx, 1);
  CdlPath p = unit_path(cfg.n_pol);
  p.delay_s = 7.3e-8;
  const auto fwd = cdl_channel({p}, rx, tx, cfg);
  p.delay_s = -7.3e-8;
  const auto rev = cdl_channel({p}, rx, tx, cfg);
  for (std::size_t i = 0; i < fwd.size(); ++i)
    CHECK(std::abs(rev.data()[i] - std::conj(fwd.data()[i])) < 1e-13);
}

TEST_CASE("cdl_channel rejects an empty path list") {
  const auto cfg = tiny_config();
  const auto rx = colocated_array(cfg.n_rx, cfg.n_pol);
  const auto tx = colocated_array(cfg.n_tx, 1);
  CHECK_THROWS_AS(cdl_channel({}, rx, tx, cfg), std::invalid_argument);
}

TEST_CASE("dataset generation is deterministic in the seed") {
  SystemConfig cfg = tiny_config();
  TrajectoryConfig traj;
  const auto a = generate_dataset(77, 40, cfg, traj);
  const auto b = generate_dataset(77, 40, cfg, traj);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].position == b[i].position);
    REQUIRE(a[i].channel.size() == b[i].channel.size());
    for (std::size_t j = 0; j < a[i].channel.size(); ++j)
      CHECK(a[i].channel.data()[j] == b[i].channel.data()[j]);
  }
  const auto c = generate_dataset(78, 40, cfg, traj);
  bool any_diff = false;
  for (std::size_t j = 0; j < a[0].channel.size() && !any_diff; ++j)
    any_diff = a[0].channel.data()[j] != c[0].channel.data()[j];
  CHECK(any_diff);
}

TEST_CASE("a single default-config sample has the full channel shape") {
  SystemConfig cfg;  // defaults: 32 x 2 x 2 x 408
  TrajectoryConfig traj;
  const auto ds = generate_dataset(5, 1, cfg, traj);
  REQUIRE(ds.size() == 1);
  const std::vector<std::size_t> want = {32, 2, 2, 408};
  CHECK(ds[0].channel.shape() == want);
  CHECK(ds[0].observed.size() == 408);
  CHECK(!ds[0].hopping_offset.has_value());
}

TEST_CASE("adjacent trajectory samples are more similar than random pairs") {
  SystemConfig cfg;
  TrajectoryConfig traj;
  const std::size_t n = 150;
  const auto ds = generate_dataset(11, n, cfg, traj);
  std::vector<ScmMatrix> scms;
  scms.reserve(n);
  for (const auto &s : ds) scms.push_back(overall_scm(s.channel, s.observed));

  std::vector<double> all_pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      all_pairs.push_back(scm_dissimilarity(scms[i], scms[j]));
  std::nth_element(all_pairs.begin(), all_pairs.begin() + std::ptrdiff_t(all_pairs.size() / 2),
                   all_pairs.end());
  const double median = all_pairs[all_pairs.size() / 2];

  std::size_t below = 0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (scm_dissimilarity(scms[i], scms[i + 1]) < median) ++below;
  CHECK(double(below) >= 0.95 * double(n - 1));
}

TEST_CASE("trajectory stays inside the configured rectangle") {
  TrajectoryConfig traj;
  traj.x_min = -5.0;
  traj.x_max = 3.0;
  traj.y_min = 10.0;
  traj.y_max = 11.0;
  const auto pos = plan_trajectory(3, 500, traj);
  for (const auto &p : pos) {
    CHECK(p[0] >= traj.x_min);
    CHECK(p[0] <= traj.x_max);
    CHECK(p[1] >= traj.y_min);
    CHECK(p[1] <= traj.y_max);
  }
}

TEST_CASE("invalid trajectory bounds are rejected") {
  TrajectoryConfig traj;
  traj.x_min = 10.0;
  traj.x_max = 10.0;
  CHECK_THROWS_AS(plan_trajectory(1, 10, traj), std::invalid_argument);
}

TEST_CASE("very high SNR leaves the tensor essentially unchanged") {
  const auto cfg = tiny_config();
  const auto rx = colocated_array(cfg.n_rx, cfg.n_pol);
  const auto tx = colocated_array(cfg.n_tx, 1);
  const auto h = cdl_channel({unit_path(cfg.n_pol)}, rx, tx, cfg);
  const auto noisy = add_awgn(h, 300.0, 9);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    num += std::norm(noisy.data()[i] - h.data()[i]);
    den += std::norm(h.data()[i]);
  }
  CHECK(std::sqrt(num / den) < 1e-10);
}

TEST_CASE("empirical SNR at 0 dB is within half a dB") {
  const auto cfg = tiny_config();
  const auto rx = colocated_array(cfg.n_rx, cfg.n_pol);
  const auto tx = colocated_array(cfg.n_tx, 1);
  const auto h = cdl_channel({unit_path(cfg.n_pol)}, rx, tx, cfg);
  const double signal2 = h.frobenius_norm() * h.frobenius_norm();
  double noise2 = 0.0;
  cplx square_mean{};
  double abs2_mean = 0.0;
  const int draws = 100;
  for (int d = 0; d < draws; ++d) {
    const auto noisy = add_awgn(h, 0.0, std::uint64_t(1000 + d));
    for (std::size_t i = 0; i < h.size(); ++i) {
      const cplx nv = noisy.data()[i] - h.data()[i];
      noise2 += std::norm(nv);
      square_mean += nv * nv;  // non-conjugated: vanishes for circular noise
      abs2_mean += std::norm(nv);
    }
  }
  const double snr_db = 10.0 * std::log10(signal2 / (noise2 / draws));
  CHECK(snr_db > -0.5);
  CHECK(snr_db < 0.5);
  CHECK(std::abs(square_mean) / abs2_mean < 0.05);
}

TEST_CASE("hopping masks mark one consecutive block") {
  const auto m = hopping_mask(408, 17, 16);
  std::size_t count = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) ++count;
  CHECK(count == 24);
  for (std::size_t i = 0; i < 384; ++i) CHECK(m[i] == 0);
  for (std::size_t i = 384; i < 408; ++i) CHECK(m[i] == 1);

  const auto full = hopping_mask(408, 1, 0);
  CHECK(std::count(full.begin(), full.end(), 1) == 408);

  CHECK_THROWS_AS(hopping_mask(408, 5, 0), std::invalid_argument);
  CHECK_THROWS_AS(hopping_mask(408, 17, 17), std::invalid_argument);
}
