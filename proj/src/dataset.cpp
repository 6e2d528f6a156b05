// SPDX-License-Identifier: Apache-2.0

#include "tensorchart/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tensorchart/binio.hpp"
#include "tensorchart/parallel.hpp"

namespace tensorchart {

namespace {

void check_bounds(const TrajectoryConfig &traj) {
  if (!(traj.x_min < traj.x_max) || !(traj.y_min < traj.y_max))
    throw std::invalid_argument("trajectory: empty rectangle");
  if (!(traj.momentum >= 0.0 && traj.momentum < 1.0))
    throw std::invalid_argument("trajectory: momentum must be in [0,1)");
  if (traj.step_sigma <= 0.0) throw std::invalid_argument("trajectory: step_sigma must be > 0");
  if (traj.field_grid < 2) throw std::invalid_argument("trajectory: field_grid must be >= 2");
}

// reflect into [lo, hi]
double reflect(double v, double lo, double hi) {
  const double span = hi - lo;
  double t = std::fmod(v - lo, 2.0 * span);
  if (t < 0) t += 2.0 * span;
  return lo + (t <= span ? t : 2.0 * span - t);
}

std::array<double, 3> unit(std::array<double, 3> v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  if (n == 0.0) return {0.0, 0.0, 1.0};
  return {v[0] / n, v[1] / n, v[2] / n};
}

double azimuth_of(const std::array<double, 3> &v) { return std::atan2(v[1], v[0]); }
double zenith_of(const std::array<double, 3> &v) {
  return std::acos(std::clamp(v[2], -1.0, 1.0));
}

}  // namespace

std::vector<std::array<double, 2>> plan_trajectory(std::uint64_t seed, std::size_t n,
                                                   const TrajectoryConfig &traj) {
  check_bounds(traj);
  Rng rng = Rng(seed).fork(0x7261'6A65);  // trajectory stream
  std::vector<std::array<double, 2>> pos(n);
  double x = rng.uniform(traj.x_min, traj.x_max);
  double y = rng.uniform(traj.y_min, traj.y_max);
  double vx = 0.0, vy = 0.0;
  const double kick = traj.step_sigma * (1.0 - traj.momentum);
  for (std::size_t i = 0; i < n; ++i) {
    vx = traj.momentum * vx + kick * rng.normal();
    vy = traj.momentum * vy + kick * rng.normal();
    x = reflect(x + vx, traj.x_min, traj.x_max);
    y = reflect(y + vy, traj.y_min, traj.y_max);
    pos[i] = {x, y};
  }
  return pos;
}

ClusterField::ClusterField(std::uint64_t seed, const SystemConfig &cfg,
                           const TrajectoryConfig &traj)
    : cfg_(cfg), traj_(traj), grid_(traj.field_grid) {
  check_bounds(traj);
  if (cfg.path_count < 1) throw std::invalid_argument("system: path_count must be >= 1");

  const double lambda_half = 0.5 * cfg.c / cfg.f_c;
  // 4 x 8 dual-polarized rectangular grid by default; fall back to a single
  // row when n_rx is not a multiple of 8.
  if (cfg.n_rx % 8 == 0)
    rx_ = rectangular_array(cfg.n_rx / 8, 8, lambda_half, cfg.n_pol);
  else
    rx_ = rectangular_array(1, cfg.n_rx, lambda_half, cfg.n_pol);
  tx_ = colocated_array(cfg.n_tx, 1);

  Rng field_rng = Rng(seed).fork(0x6669'656C);  // parameter-field stream
  const std::size_t n_clusters = cfg.path_count > 0 ? cfg.path_count - 1 : 0;
  const double width = traj.x_max - traj.x_min;
  const double height = traj.y_max - traj.y_min;

  // Scatterer anchors stay in front of the BS so every arrival direction has
  // a positive x-component and interpolation never crosses an angle wrap.
  std::vector<std::array<double, 3>> anchors(n_clusters);
  std::vector<double> base_amp(n_clusters);
  for (std::size_t c = 0; c < n_clusters; ++c) {
    anchors[c] = {field_rng.uniform(traj_.bs_position[0] + 0.25 * width, traj.x_max + 0.45 * width),
                  field_rng.uniform(traj.y_min - 0.45 * height, traj.y_max + 0.45 * height),
                  field_rng.uniform(4.0, 35.0)};
    base_amp[c] = field_rng.uniform(traj.nlos_gain_min, traj.nlos_gain_max);
  }

  const double gx_step = width / double(grid_ - 1);
  const double gy_step = height / double(grid_ - 1);
  nodes_.assign(n_clusters, std::vector<NodeParams>(grid_ * grid_));
  for (std::size_t c = 0; c < n_clusters; ++c) {
    Rng jitter = field_rng.fork(1000 + c);
    // smooth low-frequency jitter realized as independent node draws; the
    // bilinear interpolation keeps the evaluated field continuous
    for (std::size_t gy = 0; gy < grid_; ++gy) {
      for (std::size_t gx = 0; gx < grid_; ++gx) {
        const double px = traj.x_min + double(gx) * gx_step;
        const double py = traj.y_min + double(gy) * gy_step;
        const std::array<double, 3> ue = {px, py, traj.ue_height};
        const auto &s = anchors[c];
        const std::array<double, 3> bs = traj_.bs_position;
        const std::array<double, 3> to_bs = {s[0] - bs[0], s[1] - bs[1], s[2] - bs[2]};
        const std::array<double, 3> to_ue = {s[0] - ue[0], s[1] - ue[1], s[2] - ue[2]};
        const double d_s_bs = std::sqrt(to_bs[0] * to_bs[0] + to_bs[1] * to_bs[1] + to_bs[2] * to_bs[2]);
        const double d_ue_s = std::sqrt(to_ue[0] * to_ue[0] + to_ue[1] * to_ue[1] + to_ue[2] * to_ue[2]);

        NodeParams node;
        auto dir_rx = unit(to_bs);
        auto dir_tx = unit(to_ue);
        // per-node angular wobble (extended scatterer)
        const double ja = traj.angle_jitter;
        dir_rx = unit({dir_rx[0], dir_rx[1] + ja * jitter.normal() * 0.5,
                       dir_rx[2] + ja * jitter.normal() * 0.5});
        dir_tx = unit({dir_tx[0] + ja * jitter.normal(), dir_tx[1] + ja * jitter.normal(),
                       dir_tx[2] + ja * jitter.normal()});
        node.dir_rx = dir_rx;
        node.dir_tx = dir_tx;
        node.delay = (d_ue_s + d_s_bs) / cfg.c;
        const double amp = base_amp[c] * (traj.reference_distance / (d_ue_s + d_s_bs)) *
                           std::exp(traj.gain_jitter * jitter.normal());
        node.gains.resize(cfg.n_pol);
        for (std::size_t p = 0; p < cfg.n_pol; ++p) {
          const double phase = jitter.uniform(0.0, kTwoPi);
          node.gains[p] = amp * cplx{std::cos(phase), std::sin(phase)};
        }
        nodes_[c][gy * grid_ + gx] = std::move(node);
      }
    }
  }

  Rng los_rng = field_rng.fork(1);
  los_phase_.assign(cfg.n_pol, std::vector<double>(grid_ * grid_));
  for (std::size_t p = 0; p < cfg.n_pol; ++p)
    for (auto &v : los_phase_[p]) v = los_rng.uniform(-1.5, 1.5);
}

ClusterField::NodeParams ClusterField::interpolate(std::size_t cluster, double x, double y) const {
  const double width = traj_.x_max - traj_.x_min;
  const double height = traj_.y_max - traj_.y_min;
  double u = (x - traj_.x_min) / width * double(grid_ - 1);
  double v = (y - traj_.y_min) / height * double(grid_ - 1);
  u = std::clamp(u, 0.0, double(grid_ - 1));
  v = std::clamp(v, 0.0, double(grid_ - 1));
  const std::size_t gx = std::min(std::size_t(u), grid_ - 2);
  const std::size_t gy = std::min(std::size_t(v), grid_ - 2);
  const double fu = u - double(gx);
  const double fv = v - double(gy);

  const NodeParams &n00 = nodes_[cluster][gy * grid_ + gx];
  const NodeParams &n10 = nodes_[cluster][gy * grid_ + gx + 1];
  const NodeParams &n01 = nodes_[cluster][(gy + 1) * grid_ + gx];
  const NodeParams &n11 = nodes_[cluster][(gy + 1) * grid_ + gx + 1];
  const double w00 = (1 - fu) * (1 - fv), w10 = fu * (1 - fv);
  const double w01 = (1 - fu) * fv, w11 = fu * fv;

  NodeParams out;
  for (int k = 0; k < 3; ++k) {
    out.dir_rx[k] = w00 * n00.dir_rx[k] + w10 * n10.dir_rx[k] + w01 * n01.dir_rx[k] +
                    w11 * n11.dir_rx[k];
    out.dir_tx[k] = w00 * n00.dir_tx[k] + w10 * n10.dir_tx[k] + w01 * n01.dir_tx[k] +
                    w11 * n11.dir_tx[k];
  }
  out.dir_rx = unit(out.dir_rx);
  out.dir_tx = unit(out.dir_tx);
  out.delay = w00 * n00.delay + w10 * n10.delay + w01 * n01.delay + w11 * n11.delay;
  out.gains.resize(cfg_.n_pol);
  for (std::size_t p = 0; p < cfg_.n_pol; ++p)
    out.gains[p] = w00 * n00.gains[p] + w10 * n10.gains[p] + w01 * n01.gains[p] +
                   w11 * n11.gains[p];
  return out;
}

std::vector<CdlPath> ClusterField::paths_at(const std::array<double, 2> &position) const {
  std::vector<CdlPath> paths;
  paths.reserve(nodes_.size() + 1);

  const std::array<double, 3> ue = {position[0], position[1], traj_.ue_height};
  const std::array<double, 3> bs = traj_.bs_position;
  const std::array<double, 3> bs_to_ue = {ue[0] - bs[0], ue[1] - bs[1], ue[2] - bs[2]};
  const double d_los =
      std::sqrt(bs_to_ue[0] * bs_to_ue[0] + bs_to_ue[1] * bs_to_ue[1] + bs_to_ue[2] * bs_to_ue[2]);
  const auto dir_rx = unit(bs_to_ue);
  const auto dir_tx = unit({-bs_to_ue[0], -bs_to_ue[1], -bs_to_ue[2]});

  CdlPath los;
  los.delay_s = d_los / cfg_.c;
  los.aoa_az = azimuth_of(dir_rx);
  los.zoa = zenith_of(dir_rx);
  los.aod_az = azimuth_of(dir_tx);
  los.zod = zenith_of(dir_tx);
  const double los_amp = traj_.reference_distance / std::max(d_los, 1.0);
  los.gains.resize(cfg_.n_pol);
  // smooth per-polarization LOS phase from the bilinear field
  {
    const double width = traj_.x_max - traj_.x_min;
    const double height = traj_.y_max - traj_.y_min;
    double u = std::clamp((position[0] - traj_.x_min) / width * double(grid_ - 1), 0.0,
                          double(grid_ - 1));
    double v = std::clamp((position[1] - traj_.y_min) / height * double(grid_ - 1), 0.0,
                          double(grid_ - 1));
    const std::size_t gx = std::min(std::size_t(u), grid_ - 2);
    const std::size_t gy = std::min(std::size_t(v), grid_ - 2);
    const double fu = u - double(gx), fv = v - double(gy);
    for (std::size_t p = 0; p < cfg_.n_pol; ++p) {
      const auto &f = los_phase_[p];
      const double ph = (1 - fu) * (1 - fv) * f[gy * grid_ + gx] +
                        fu * (1 - fv) * f[gy * grid_ + gx + 1] +
                        (1 - fu) * fv * f[(gy + 1) * grid_ + gx] +
                        fu * fv * f[(gy + 1) * grid_ + gx + 1];
      los.gains[p] = los_amp * cplx{std::cos(ph), std::sin(ph)};
    }
  }
  paths.push_back(std::move(los));

  for (std::size_t c = 0; c < nodes_.size(); ++c) {
    const NodeParams node = interpolate(c, position[0], position[1]);
    CdlPath path;
    path.delay_s = node.delay;
    path.aoa_az = azimuth_of(node.dir_rx);
    path.zoa = zenith_of(node.dir_rx);
    path.aod_az = azimuth_of(node.dir_tx);
    path.zod = zenith_of(node.dir_tx);
    path.gains = node.gains;
    paths.push_back(std::move(path));
  }
  return paths;
}

std::vector<Sample> generate_dataset(std::uint64_t seed, std::size_t n_samples,
                                     const SystemConfig &cfg, const TrajectoryConfig &traj) {
  if (n_samples < 1) throw std::invalid_argument("generate_dataset: n_samples must be >= 1");
  const auto positions = plan_trajectory(seed, n_samples, traj);
  const ClusterField field(seed, cfg, traj);

  std::vector<Sample> samples(n_samples);
  parallel_for(0, n_samples, [&](std::size_t i) {
    Sample s;
    s.position = positions[i];
    s.channel = cdl_channel(field.paths_at(positions[i]), field.rx_array(), field.tx_array(), cfg);
    s.observed.assign(cfg.n_sub, 1);
    samples[i] = std::move(s);
  });
  return samples;
}

ComplexTensor add_awgn(const ComplexTensor &x, double snr_db, std::uint64_t seed) {
  if (!std::isfinite(snr_db)) throw std::invalid_argument("add_awgn: snr must be finite");
  const double signal = x.frobenius_norm();
  const double noise_scale =
      signal * std::pow(10.0, -snr_db / 20.0) / std::sqrt(double(x.size()));
  ComplexTensor y = x;
  Rng rng = Rng(seed).fork(0x6177'676E);
  for (cplx &v : y.data()) v += noise_scale * rng.circular_normal();
  return y;
}

std::vector<std::uint8_t> hopping_mask(std::size_t n_sub, std::size_t h_p, std::size_t offset) {
  if (h_p == 0 || n_sub % h_p != 0)
    throw std::invalid_argument("hopping: h_p must divide the subcarrier count");
  if (offset >= h_p) throw std::invalid_argument("hopping: offset must be below h_p");
  const std::size_t block = n_sub / h_p;
  std::vector<std::uint8_t> mask(n_sub, 0);
  for (std::size_t i = offset * block; i < (offset + 1) * block; ++i) mask[i] = 1;
  return mask;
}

void apply_hopping(Sample &s, std::size_t h_p, std::size_t offset) {
  s.observed = hopping_mask(s.channel.dim(3), h_p, offset);
  s.hopping_offset = static_cast<std::uint32_t>(offset);
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kDatasetMagic[4] = {'C', 'C', 'D', 'S'};
constexpr std::uint16_t kDatasetVersion = 1;
constexpr std::uint32_t kNoOffset = 0xFFFFFFFFu;

void write_system(std::ostream &out, const SystemConfig &cfg) {
  write_u32(out, std::uint32_t(cfg.n_rx));
  write_u32(out, std::uint32_t(cfg.n_pol));
  write_u32(out, std::uint32_t(cfg.n_tx));
  write_u32(out, std::uint32_t(cfg.n_sub));
  write_f64(out, cfg.delta_f);
  write_f64(out, cfg.f_c);
  write_f64(out, cfg.c);
  write_u32(out, std::uint32_t(cfg.path_count));
}

SystemConfig read_system(std::istream &in) {
  SystemConfig cfg;
  cfg.n_rx = read_u32(in, "n_rx");
  cfg.n_pol = read_u32(in, "n_pol");
  cfg.n_tx = read_u32(in, "n_tx");
  cfg.n_sub = read_u32(in, "n_sub");
  cfg.delta_f = read_f64(in, "delta_f");
  cfg.f_c = read_f64(in, "f_c");
  cfg.c = read_f64(in, "c");
  cfg.path_count = read_u32(in, "path_count");
  return cfg;
}

// observed mask as (start, len) runs of observed subcarriers
void write_mask_rle(std::ostream &out, const std::vector<std::uint8_t> &mask) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> runs;
  std::size_t i = 0;
  while (i < mask.size()) {
    if (mask[i]) {
      std::size_t j = i;
      while (j < mask.size() && mask[j]) ++j;
      runs.emplace_back(std::uint32_t(i), std::uint32_t(j - i));
      i = j;
    } else {
      ++i;
    }
  }
  write_u32(out, std::uint32_t(runs.size()));
  for (const auto &[start, len] : runs) {
    write_u32(out, start);
    write_u32(out, len);
  }
}

std::vector<std::uint8_t> read_mask_rle(std::istream &in, std::size_t n_sub,
                                        const std::string &path) {
  const std::uint32_t n_runs = read_u32(in, "mask run count");
  std::vector<std::uint8_t> mask(n_sub, 0);
  for (std::uint32_t r = 0; r < n_runs; ++r) {
    const std::uint32_t start = read_u32(in, "mask run start");
    const std::uint32_t len = read_u32(in, "mask run length");
    if (std::size_t(start) + len > n_sub)
      throw CorruptArtifactError("mask run exceeds subcarrier count in " + path);
    for (std::uint32_t i = start; i < start + len; ++i) mask[i] = 1;
  }
  return mask;
}

}  // namespace

DatasetWriter::DatasetWriter(const std::string &path, const SystemConfig &cfg,
                             std::uint32_t n_samples, std::uint32_t hopping)
    : out_(open_output(path)), path_(path), cfg_(cfg), declared_(n_samples) {
  write_magic(out_, kDatasetMagic);
  write_u16(out_, kDatasetVersion);
  write_system(out_, cfg);
  write_u32(out_, n_samples);
  write_u32(out_, hopping);
}

void DatasetWriter::append(const Sample &s) {
  if (written_ >= declared_) throw IoError("dataset writer: more samples than declared");
  const std::vector<std::size_t> want = {cfg_.n_rx, cfg_.n_pol, cfg_.n_tx, cfg_.n_sub};
  if (s.channel.shape() != want) throw InconsistencyError("dataset writer: channel shape mismatch");
  write_f64(out_, s.position[0]);
  write_f64(out_, s.position[1]);
  write_u32(out_, s.hopping_offset ? *s.hopping_offset : kNoOffset);
  write_mask_rle(out_, s.observed);
  write_tnsr(out_, s.channel);
  ++written_;
}

void DatasetWriter::finish() {
  if (written_ != declared_)
    throw IoError("dataset writer: declared " + std::to_string(declared_) + " samples, wrote " +
                  std::to_string(written_));
  out_.flush();
  if (!out_) throw IoError("dataset writer: flush failed for " + path_);
  out_.close();
}

DatasetReader::DatasetReader(const std::string &path) : in_(open_input(path)), path_(path) {
  expect_magic(in_, kDatasetMagic, path);
  const std::uint16_t ver = read_u16(in_, "dataset version");
  if (ver != kDatasetVersion) throw CorruptArtifactError("unsupported dataset version in " + path);
  cfg_ = read_system(in_);
  n_samples_ = read_u32(in_, "sample count");
  hopping_ = read_u32(in_, "hopping");
}

Sample DatasetReader::next() {
  if (read_ >= n_samples_) throw CorruptArtifactError("dataset reader: no samples left in " + path_);
  Sample s;
  s.position[0] = read_f64(in_, "position x");
  s.position[1] = read_f64(in_, "position y");
  const std::uint32_t off = read_u32(in_, "hopping offset");
  if (off != kNoOffset) s.hopping_offset = off;
  s.observed = read_mask_rle(in_, cfg_.n_sub, path_);
  s.channel = read_tnsr_complex(in_, path_);
  const std::vector<std::size_t> want = {cfg_.n_rx, cfg_.n_pol, cfg_.n_tx, cfg_.n_sub};
  if (s.channel.shape() != want)
    throw CorruptArtifactError("channel tensor shape mismatch in " + path_);
  ++read_;
  return s;
}

void save_dataset(const std::string &path, const Dataset &ds) {
  DatasetWriter w(path, ds.system, std::uint32_t(ds.samples.size()), ds.hopping);
  for (const Sample &s : ds.samples) w.append(s);
  w.finish();
}

Dataset load_dataset(const std::string &path) {
  DatasetReader r(path);
  Dataset ds;
  ds.system = r.system();
  ds.hopping = r.hopping();
  ds.samples.reserve(r.sample_count());
  for (std::uint32_t i = 0; i < r.sample_count(); ++i) ds.samples.push_back(r.next());
  return ds;
}

std::vector<std::array<double, 2>> load_positions(const std::string &path) {
  std::ifstream in = open_input(path);
  expect_magic(in, kDatasetMagic, path);
  const std::uint16_t ver = read_u16(in, "dataset version");
  if (ver != kDatasetVersion) throw CorruptArtifactError("unsupported dataset version in " + path);
  const SystemConfig cfg = read_system(in);
  const std::uint32_t n = read_u32(in, "sample count");
  read_u32(in, "hopping");
  std::vector<std::array<double, 2>> positions(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    positions[i][0] = read_f64(in, "position x");
    positions[i][1] = read_f64(in, "position y");
    read_u32(in, "hopping offset");
    read_mask_rle(in, cfg.n_sub, path);
    // seek over the tensor record payload
    expect_magic(in, kTensorMagic, path);
    read_u16(in, "tensor version");
    const std::uint8_t order = read_u8(in, "tensor order");
    std::size_t count = 1;
    for (std::uint8_t m = 0; m < order; ++m) count *= read_u32(in, "tensor mode size");
    const std::uint8_t kind = read_u8(in, "tensor scalar kind");
    const std::streamoff payload = std::streamoff(count) * 8 * (kind == 1 ? 2 : 1);
    in.seekg(payload, std::ios::cur);
    if (!in) throw CorruptArtifactError("truncated channel payload in " + path);
  }
  return positions;
}

}  // namespace tensorchart
