// SPDX-License-Identifier: Apache-2.0

#include "tensorchart/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace tensorchart {

ArrayGeometry rectangular_array(std::size_t rows, std::size_t cols, double spacing_m,
                                std::size_t polarization_count) {
  ArrayGeometry g;
  g.polarization_count = polarization_count;
  g.element_positions.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      g.element_positions.push_back({0.0, double(c) * spacing_m, double(r) * spacing_m});
  return g;
}

ArrayGeometry colocated_array(std::size_t count, std::size_t polarization_count) {
  ArrayGeometry g;
  g.polarization_count = polarization_count;
  g.element_positions.assign(count, {0.0, 0.0, 0.0});
  return g;
}

std::array<double, 3> spherical_unit_vector(double azimuth, double zenith) {
  const double sz = std::sin(zenith);
  return {sz * std::cos(azimuth), sz * std::sin(azimuth), std::cos(zenith)};
}

ComplexTensor cdl_channel(const std::vector<CdlPath> &paths, const ArrayGeometry &rx,
                          const ArrayGeometry &tx, const SystemConfig &cfg) {
  if (paths.empty()) throw std::invalid_argument("cdl_channel: empty path list");
  if (rx.element_positions.size() != cfg.n_rx)
    throw std::invalid_argument("cdl_channel: rx geometry does not match n_rx");
  if (tx.element_positions.size() != cfg.n_tx)
    throw std::invalid_argument("cdl_channel: tx geometry does not match n_tx");

  ComplexTensor h({cfg.n_rx, cfg.n_pol, cfg.n_tx, cfg.n_sub});
  const double steering_scale = kTwoPi * cfg.f_c / cfg.c;

  std::vector<cplx> a_rx(cfg.n_rx), a_tx(cfg.n_tx), tone(cfg.n_sub);
  for (const CdlPath &path : paths) {
    if (path.gains.size() != cfg.n_pol)
      throw std::invalid_argument("cdl_channel: path gain count does not match n_pol");

    const auto r_rx = spherical_unit_vector(path.aoa_az, path.zoa);
    const auto r_tx = spherical_unit_vector(path.aod_az, path.zod);
    for (std::size_t i = 0; i < cfg.n_rx; ++i) {
      const auto &d = rx.element_positions[i];
      const double ph = steering_scale * (r_rx[0] * d[0] + r_rx[1] * d[1] + r_rx[2] * d[2]);
      a_rx[i] = {std::cos(ph), std::sin(ph)};
    }
    for (std::size_t i = 0; i < cfg.n_tx; ++i) {
      const auto &d = tx.element_positions[i];
      const double ph = steering_scale * (r_tx[0] * d[0] + r_tx[1] * d[1] + r_tx[2] * d[2]);
      a_tx[i] = {std::cos(ph), std::sin(ph)};
    }
    for (std::size_t sc = 0; sc < cfg.n_sub; ++sc) {
      const double ph = -kTwoPi * path.delay_s * (double(sc) * cfg.delta_f);
      tone[sc] = {std::cos(ph), std::sin(ph)};
    }

    cplx *out = h.data().data();
    for (std::size_t sc = 0; sc < cfg.n_sub; ++sc) {
      for (std::size_t t = 0; t < cfg.n_tx; ++t) {
        for (std::size_t p = 0; p < cfg.n_pol; ++p) {
          const cplx scale = path.gains[p] * a_tx[t] * tone[sc];
          cplx *slice = out + cfg.n_rx * (p + cfg.n_pol * (t + cfg.n_tx * sc));
          for (std::size_t r = 0; r < cfg.n_rx; ++r) slice[r] += scale * a_rx[r];
        }
      }
    }
  }
  return h;
}

}  // namespace tensorchart
