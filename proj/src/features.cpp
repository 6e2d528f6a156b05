// SPDX-License-Identifier: Apache-2.0

#include "tensorchart/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include "tensorchart/binio.hpp"
#include "tensorchart/parallel.hpp"

namespace tensorchart {

std::vector<std::vector<std::size_t>> subband_groups(std::size_t n_sub, std::size_t h_p) {
  if (h_p == 0 || n_sub % h_p != 0)
    throw std::invalid_argument("subband_groups: h_p must divide the subcarrier count");
  const std::size_t n_groups = n_sub / h_p;
  std::vector<std::vector<std::size_t>> groups(n_groups);
  for (std::size_t g = 0; g < n_groups; ++g) {
    groups[g].reserve(h_p);
    for (std::size_t k = 0; k < h_p; ++k) groups[g].push_back(g + n_groups * k);
  }
  return groups;
}

namespace {

// Accumulates H_sel H_sel^H over the selected subcarriers of one group,
// where H_sel is the mode-1 unfolding restricted to those columns.
void accumulate_outer(const ComplexTensor &channel, std::size_t sc, ComplexMatrix &acc) {
  const std::size_t n_rx = channel.dim(0);
  const std::size_t n_pol = channel.dim(1);
  const std::size_t n_tx = channel.dim(2);
  const cplx *base = channel.data().data() + n_rx * n_pol * n_tx * sc;
  for (std::size_t col = 0; col < n_pol * n_tx; ++col) {
    const cplx *v = base + n_rx * col;
    for (std::size_t j = 0; j < n_rx; ++j) {
      const cplx vj = std::conj(v[j]);
      cplx *out = &acc(0, j);
      for (std::size_t i = 0; i < n_rx; ++i) out[i] += v[i] * vj;
    }
  }
}

}  // namespace

CovTensor spatial_cov_tensor(const ComplexTensor &channel,
                             const std::vector<std::uint8_t> &observed, std::size_t h_p) {
  if (channel.order() != 4)
    throw std::invalid_argument("spatial_cov_tensor: channel must have 4 modes");
  const std::size_t n_rx = channel.dim(0);
  const std::size_t n_pol = channel.dim(1);
  const std::size_t n_tx = channel.dim(2);
  const std::size_t n_sub = channel.dim(3);
  if (observed.size() != n_sub)
    throw std::invalid_argument("spatial_cov_tensor: mask size mismatch");

  const auto groups = subband_groups(n_sub, h_p);
  const std::size_t n_groups = groups.size();

  CovTensor t;
  t.data = ComplexTensor({n_rx, n_rx, n_groups});
  t.group_counts.assign(n_groups, 0);

  std::vector<std::size_t> empty_slices;
  for (std::size_t g = 0; g < n_groups; ++g) {
    ComplexMatrix acc(n_rx, n_rx);
    std::size_t m = 0;
    for (std::size_t sc : groups[g]) {
      if (!observed[sc]) continue;
      accumulate_outer(channel, sc, acc);
      ++m;
    }
    t.group_counts[g] = m;
    if (m == 0) {
      empty_slices.push_back(g);
      continue;
    }
    const double scale = 1.0 / double(n_pol * n_tx * m);
    cplx *slice = t.data.data().data() + n_rx * n_rx * g;
    for (std::size_t i = 0; i < n_rx * n_rx; ++i) slice[i] = acc.data()[i] * scale;
  }

  // missing-group policy: fill with the mean of the non-empty slices
  if (!empty_slices.empty()) {
    const std::size_t filled = n_groups - empty_slices.size();
    if (filled == 0)
      throw std::invalid_argument("spatial_cov_tensor: no observed subcarriers at all");
    std::vector<cplx> mean(n_rx * n_rx, cplx{});
    for (std::size_t g = 0; g < n_groups; ++g) {
      if (t.group_counts[g] == 0) continue;
      const cplx *slice = t.data.data().data() + n_rx * n_rx * g;
      for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += slice[i];
    }
    for (auto &v : mean) v /= double(filled);
    for (std::size_t g : empty_slices) {
      cplx *slice = t.data.data().data() + n_rx * n_rx * g;
      std::copy(mean.begin(), mean.end(), slice);
    }
  }
  return t;
}

DenoisedFeature tucker_denoise(const CovTensor &t, const std::vector<std::size_t> &ranks) {
  const ComplexTensor recon = tucker_reconstruct(hosvd(t.data, ranks));
  DenoisedFeature f;
  f.real_part = RealTensor(recon.shape());
  f.imag_part = RealTensor(recon.shape());
  for (std::size_t i = 0; i < recon.size(); ++i) {
    f.real_part.data()[i] = recon.data()[i].real();
    f.imag_part.data()[i] = recon.data()[i].imag();
  }
  return f;
}

ScmMatrix overall_scm(const ComplexTensor &channel, const std::vector<std::uint8_t> &observed) {
  if (channel.order() != 4)
    throw std::invalid_argument("overall_scm: channel must have 4 modes");
  const std::size_t n_rx = channel.dim(0);
  const std::size_t n_pol = channel.dim(1);
  const std::size_t n_tx = channel.dim(2);
  const std::size_t n_sub = channel.dim(3);
  if (observed.size() != n_sub) throw std::invalid_argument("overall_scm: mask size mismatch");

  ComplexMatrix acc(n_rx, n_rx);
  std::size_t m = 0;
  for (std::size_t sc = 0; sc < n_sub; ++sc) {
    if (!observed[sc]) continue;
    accumulate_outer(channel, sc, acc);
    ++m;
  }
  if (m == 0) throw std::invalid_argument("overall_scm: no observed subcarriers");
  const double scale = 1.0 / double(n_pol * n_tx * m);
  for (auto &v : acc.data()) v *= scale;
  return acc;
}

double scm_dissimilarity(const ScmMatrix &a, const ScmMatrix &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("scm_dissimilarity: dimension mismatch");
  const double na = a.frobenius_norm();
  const double nb = b.frobenius_norm();
  if (na == 0.0 || nb == 0.0)
    throw std::invalid_argument("scm_dissimilarity: zero-norm input");
  // trace(a^H b) = sum_ij conj(a_ij) b_ij; real for Hermitian PSD inputs
  double tr = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    tr += a.data()[i].real() * b.data()[i].real() + a.data()[i].imag() * b.data()[i].imag();
  }
  double d = 1.0 - tr / (na * nb);
  if (d < 0.0 && d > -1e-12) d = 0.0;
  return std::clamp(d, 0.0, 1.0);
}

DissimilarityMatrix scm_dissimilarity_matrix(const std::vector<ScmMatrix> &scms) {
  const std::size_t n = scms.size();
  DissimilarityMatrix d(n, DissimilarityKind::kDirect);
  parallel_for(0, n, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = scm_dissimilarity(scms[i], scms[j]);
      d.at(i, j) = v;
    }
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d.at(j, i) = d.at(i, j);
  return d;
}

DissimilarityMatrix euclidean_dissimilarity_matrix(
    const std::vector<std::array<double, 2>> &points) {
  const std::size_t n = points.size();
  DissimilarityMatrix d(n, DissimilarityKind::kDirect);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = points[i][0] - points[j][0];
      const double dy = points[i][1] - points[j][1];
      const double v = std::sqrt(dx * dx + dy * dy);
      d.at(i, j) = v;
      d.at(j, i) = v;
    }
  return d;
}

namespace {

struct Union {
  std::vector<std::size_t> parent;
  explicit Union(std::size_t n) : parent(n) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

DissimilarityMatrix geodesic_dissimilarity(const DissimilarityMatrix &direct, std::size_t k) {
  if (direct.kind != DissimilarityKind::kDirect)
    throw std::invalid_argument("geodesic_dissimilarity: input must be a direct matrix");
  const std::size_t n = direct.n;
  if (k == 0 || k >= n)
    throw std::invalid_argument("geodesic_dissimilarity: need 1 <= k <= n-1");

  // symmetric k-NN adjacency: edge kept if either endpoint ranks the other
  // among its k nearest
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  {
    std::vector<std::vector<std::size_t>> nearest(n);
    parallel_for(0, n, [&](std::size_t i) {
      std::vector<std::size_t> order;
      order.reserve(n - 1);
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) order.push_back(j);
      std::partial_sort(order.begin(), order.begin() + std::ptrdiff_t(k), order.end(),
                        [&](std::size_t a, std::size_t b) {
                          const double da = direct.at(i, a), db = direct.at(i, b);
                          return da != db ? da < db : a < b;
                        });
      order.resize(k);
      nearest[i] = std::move(order);
    });
    std::vector<std::vector<std::uint8_t>> is_near(n, std::vector<std::uint8_t>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j : nearest[i]) is_near[i][j] = 1;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (is_near[i][j] || is_near[j][i]) {
          adj[i].emplace_back(j, direct.at(i, j));
          adj[j].emplace_back(i, direct.at(i, j));
        }
  }

  // patch disconnected components with the smallest inter-component edge
  {
    Union uf(n);
    for (std::size_t i = 0; i < n; ++i)
      for (const auto &[j, w] : adj[i]) uf.unite(i, j);
    while (true) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t bi = 0, bj = 0;
      bool split = false;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          if (uf.find(i) != uf.find(j)) {
            split = true;
            if (direct.at(i, j) < best) {
              best = direct.at(i, j);
              bi = i;
              bj = j;
            }
          }
      if (!split) break;
      adj[bi].emplace_back(bj, best);
      adj[bj].emplace_back(bi, best);
      uf.unite(bi, bj);
    }
  }

  DissimilarityMatrix out(n, DissimilarityKind::kGeodesic);
  parallel_for(0, n, [&](std::size_t src) {
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    dist[src] = 0.0;
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
    heap.push({0.0, src});
    while (!heap.empty()) {
      const auto [d, u] = heap.top();
      heap.pop();
      if (d > dist[u]) continue;
      for (const auto &[v, w] : adj[u]) {
        const double nd = d + w;
        if (nd < dist[v]) {
          dist[v] = nd;
          heap.push({nd, v});
        }
      }
    }
    for (std::size_t j = 0; j < n; ++j) out.at(src, j) = dist[j];
  });
  // enforce exact symmetry (parallel Dijkstra rounding is already symmetric,
  // but keep the invariant airtight)
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::min(out.at(i, j), out.at(j, i));
      out.at(i, j) = v;
      out.at(j, i) = v;
    }
  return out;
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kFeatureMagic[4] = {'C', 'C', 'F', 'T'};
constexpr char kDissimilarityMagic[4] = {'C', 'C', 'D', 'M'};
constexpr std::uint16_t kFeatureVersion = 1;
constexpr std::uint16_t kDissimilarityVersion = 1;
}  // namespace

FeatureWriter::FeatureWriter(const std::string &path, std::uint32_t n_samples)
    : out_(open_output(path)), path_(path), declared_(n_samples) {
  write_magic(out_, kFeatureMagic);
  write_u16(out_, kFeatureVersion);
  write_u32(out_, n_samples);
}

void FeatureWriter::append(const DenoisedFeature &f, const ScmMatrix &scm) {
  if (written_ >= declared_) throw IoError("feature writer: more samples than declared");
  write_tnsr(out_, f.real_part);
  write_tnsr(out_, f.imag_part);
  ComplexTensor scm_t({scm.rows(), scm.cols()});
  scm_t.data() = scm.data();
  write_tnsr(out_, scm_t);
  ++written_;
}

void FeatureWriter::finish() {
  if (written_ != declared_)
    throw IoError("feature writer: declared " + std::to_string(declared_) + ", wrote " +
                  std::to_string(written_));
  out_.flush();
  if (!out_) throw IoError("feature writer: flush failed for " + path_);
  out_.close();
}

FeatureSet load_features(const std::string &path) {
  std::ifstream in = open_input(path);
  expect_magic(in, kFeatureMagic, path);
  const std::uint16_t ver = read_u16(in, "feature version");
  if (ver != kFeatureVersion) throw CorruptArtifactError("unsupported feature version in " + path);
  const std::uint32_t n = read_u32(in, "feature sample count");
  FeatureSet fs;
  fs.features.reserve(n);
  fs.scms.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    DenoisedFeature f;
    f.real_part = read_tnsr_real(in, path);
    f.imag_part = read_tnsr_real(in, path);
    if (f.real_part.shape() != f.imag_part.shape())
      throw CorruptArtifactError("re/im shape mismatch in " + path);
    const ComplexTensor scm_t = read_tnsr_complex(in, path);
    if (scm_t.order() != 2 || scm_t.dim(0) != scm_t.dim(1))
      throw CorruptArtifactError("overall SCM must be square in " + path);
    ScmMatrix scm(scm_t.dim(0), scm_t.dim(1));
    scm.data() = scm_t.data();
    fs.features.push_back(std::move(f));
    fs.scms.push_back(std::move(scm));
  }
  return fs;
}

void save_dissimilarity(const std::string &path, const DissimilarityMatrix &d) {
  std::ofstream out = open_output(path);
  write_magic(out, kDissimilarityMagic);
  write_u16(out, kDissimilarityVersion);
  write_u32(out, std::uint32_t(d.n));
  write_u8(out, std::uint8_t(d.kind));
  for (std::size_t i = 0; i < d.n; ++i)
    for (std::size_t j = i + 1; j < d.n; ++j) write_f64(out, d.at(i, j));
  out.flush();
  if (!out) throw IoError("dissimilarity writer: flush failed for " + path);
}

DissimilarityMatrix load_dissimilarity(const std::string &path) {
  std::ifstream in = open_input(path);
  expect_magic(in, kDissimilarityMagic, path);
  const std::uint16_t ver = read_u16(in, "dissimilarity version");
  if (ver != kDissimilarityVersion)
    throw CorruptArtifactError("unsupported dissimilarity version in " + path);
  const std::uint32_t n = read_u32(in, "dissimilarity size");
  const std::uint8_t kind = read_u8(in, "dissimilarity kind");
  if (kind > 1) throw CorruptArtifactError("bad dissimilarity kind in " + path);
  DissimilarityMatrix d(n, DissimilarityKind(kind));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = read_f64(in, "dissimilarity payload");
      d.at(i, j) = v;
      d.at(j, i) = v;
    }
  return d;
}

}  // namespace tensorchart
