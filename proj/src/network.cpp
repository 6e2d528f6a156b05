// SPDX-License-Identifier: Apache-2.0

#include "tensorchart/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "tensorchart/binio.hpp"
#include "tensorchart/parallel.hpp"
#include "tensorchart/rng.hpp"

namespace tensorchart {

namespace {

double act_value(double v, Activation a, double slope) {
  return (a == Activation::kLeakyRelu && v <= 0.0) ? slope * v : v;
}

double act_slope(double v, Activation a, double slope) {
  return (a == Activation::kLeakyRelu && v <= 0.0) ? slope : 1.0;
}

// A * B^T for real matrices with matching column counts.
RealMatrix matmul_abt(const RealMatrix &a, const RealMatrix &b) {
  RealMatrix m(a.rows(), b.rows());
  for (std::size_t c = 0; c < a.cols(); ++c)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double bv = b(j, c);
      for (std::size_t i = 0; i < a.rows(); ++i) m(i, j) += a(i, c) * bv;
    }
  return m;
}

void validate_arch(const NetworkArch &arch) {
  if (arch.tcl_shapes.empty()) throw std::invalid_argument("network: need at least one TCL");
  if (arch.fcn_widths.empty()) throw std::invalid_argument("network: need at least one FCN layer");
  if (arch.fcn_widths.back() != 2)
    throw std::invalid_argument("network: chart output must be 2-D");
  if (!(arch.leaky_slope > 0.0) || arch.leaky_slope >= 1.0)
    throw std::invalid_argument("network: leaky slope must be in (0,1)");
  std::array<std::size_t, 3> in = arch.input_shape;
  for (const auto &out : arch.tcl_shapes) {
    for (int m = 0; m < 3; ++m) {
      if (out[m] == 0 || out[m] > in[m])
        throw std::invalid_argument("network: TCLs contract, never expand");
    }
    in = out;
  }
}

std::size_t concat_width(const NetworkArch &arch) {
  const auto &last = arch.tcl_shapes.back();
  return 2 * last[0] * last[1] * last[2];
}

struct TclTrace {
  RealTensor p12, p13, p23, preact;
};

RealTensor tcl_apply(const RealTensor &x, const TclLayer &layer, double slope,
                     TclTrace *trace) {
  const RealTensor t1 = mode_product(x, layer.factors[0], 0);
  RealTensor p12 = mode_product(t1, layer.factors[1], 1);
  RealTensor pre = mode_product(p12, layer.factors[2], 2);
  if (trace) {
    trace->p12 = std::move(p12);
    trace->p13 = mode_product(t1, layer.factors[2], 2);
    trace->p23 = mode_product(mode_product(x, layer.factors[1], 1), layer.factors[2], 2);
  }
  RealTensor y = pre;
  for (auto &v : y.data()) v = act_value(v, layer.activation, slope);
  if (trace) trace->preact = std::move(pre);
  return y;
}

RealTensor run_block(const std::vector<TclLayer> &block, const RealTensor &input, double slope,
                     std::vector<TclTrace> *traces) {
  RealTensor x = tcl_apply(input, block[0], slope, traces ? &(*traces)[0] : nullptr);
  for (std::size_t l = 1; l < block.size(); ++l)
    x = tcl_apply(x, block[l], slope, traces ? &(*traces)[l] : nullptr);
  return x;
}

struct FcnTrace {
  std::vector<std::vector<double>> inputs;   // per layer
  std::vector<std::vector<double>> preacts;  // per layer
};

std::vector<double> run_fcn(const std::vector<DenseLayer> &fcn, std::vector<double> v,
                            double slope, FcnTrace *trace) {
  for (const DenseLayer &layer : fcn) {
    if (layer.weights.cols() != v.size())
      throw std::invalid_argument("network: FCN input width mismatch");
    std::vector<double> pre(layer.weights.rows());
    for (std::size_t c = 0; c < layer.weights.cols(); ++c) {
      const double vc = v[c];
      for (std::size_t r = 0; r < layer.weights.rows(); ++r) pre[r] += layer.weights(r, c) * vc;
    }
    for (std::size_t r = 0; r < pre.size(); ++r) pre[r] += layer.bias[r];
    std::vector<double> out(pre.size());
    for (std::size_t r = 0; r < pre.size(); ++r)
      out[r] = act_value(pre[r], layer.activation, slope);
    if (trace) {
      trace->inputs.push_back(std::move(v));
      trace->preacts.push_back(std::move(pre));
    }
    v = std::move(out);
  }
  return v;
}

struct ForwardTrace {
  std::vector<TclTrace> re, im;
  FcnTrace fcn;
};

void check_feature_shape(const NetworkParams &p, const RealTensor &t) {
  if (t.order() != 3 || t.dim(0) != p.arch.input_shape[0] || t.dim(1) != p.arch.input_shape[1] ||
      t.dim(2) != p.arch.input_shape[2])
    throw std::invalid_argument("network: feature shape does not match the architecture");
}

ChartPoint forward_impl(const NetworkParams &p, const RealTensor &feat_re,
                        const RealTensor &feat_im, ForwardTrace *trace) {
  check_feature_shape(p, feat_re);
  check_feature_shape(p, feat_im);
  if (trace) {
    trace->re.resize(p.re_block.size());
    trace->im.resize(p.im_block.size());
  }
  const double slope = p.arch.leaky_slope;
  const RealTensor out_re = run_block(p.re_block, feat_re, slope, trace ? &trace->re : nullptr);
  const RealTensor out_im = run_block(p.im_block, feat_im, slope, trace ? &trace->im : nullptr);

  std::vector<double> v;
  v.reserve(out_re.size() + out_im.size());
  v.insert(v.end(), out_re.data().begin(), out_re.data().end());
  v.insert(v.end(), out_im.data().begin(), out_im.data().end());

  const std::vector<double> z = run_fcn(p.fcn, std::move(v), slope, trace ? &trace->fcn : nullptr);
  return {z[0], z[1]};
}

// reverse pass through one TCL block; d_out is consumed
void backprop_block(const std::vector<TclLayer> &block, const std::vector<TclTrace> &traces,
                    RealTensor d_out, double slope, std::vector<TclLayer> &grads) {
  for (std::size_t li = block.size(); li-- > 0;) {
    const TclTrace &tr = traces[li];
    RealTensor gpre = std::move(d_out);
    for (std::size_t i = 0; i < gpre.size(); ++i)
      gpre.data()[i] *= act_slope(tr.preact.data()[i], block[li].activation, slope);

    const auto add_factor_grad = [&](std::size_t mode, const RealTensor &partial,
                                     RealMatrix &dst) {
      const RealMatrix g = matmul_abt(unfold(gpre, mode).matrix, unfold(partial, mode).matrix);
      for (std::size_t i = 0; i < dst.data().size(); ++i) dst.data()[i] += g.data()[i];
    };
    add_factor_grad(0, tr.p23, grads[li].factors[0]);
    add_factor_grad(1, tr.p13, grads[li].factors[1]);
    add_factor_grad(2, tr.p12, grads[li].factors[2]);

    if (li > 0) {
      RealTensor dx = mode_product(gpre, adjoint(block[li].factors[0]), 0);
      dx = mode_product(dx, adjoint(block[li].factors[1]), 1);
      dx = mode_product(dx, adjoint(block[li].factors[2]), 2);
      d_out = std::move(dx);
    }
  }
}

// gradient of one pair, accumulated into pair_grad (assumed zeroed); returns
// the pair's squared residual
double backprop_pair(const NetworkParams &p, const PairExample &pair, NetworkParams &pair_grad) {
  ForwardTrace ta, tb;
  const ChartPoint za = forward_impl(p, *pair.a_re, *pair.a_im, &ta);
  const ChartPoint zb = forward_impl(p, *pair.b_re, *pair.b_im, &tb);

  const double dx = za[0] - zb[0];
  const double dy = za[1] - zb[1];
  const double dist = std::sqrt(dx * dx + dy * dy);
  const double resid = pair.target - dist;
  const double guard = std::max(dist, 1e-12);
  const double scale = -2.0 * resid / guard;
  const std::array<double, 2> dza = {scale * dx, scale * dy};
  const std::array<double, 2> dzb = {-scale * dx, -scale * dy};

  const double slope = p.arch.leaky_slope;
  const std::size_t half = concat_width(p.arch) / 2;

  const auto backprop_head = [&](const ForwardTrace &tr, const std::array<double, 2> &dz) {
    std::vector<double> grad = {dz[0], dz[1]};
    for (std::size_t li = p.fcn.size(); li-- > 0;) {
      const DenseLayer &layer = p.fcn[li];
      DenseLayer &glayer = pair_grad.fcn[li];
      const auto &pre = tr.fcn.preacts[li];
      const auto &in = tr.fcn.inputs[li];
      std::vector<double> gpre(grad.size());
      for (std::size_t r = 0; r < grad.size(); ++r)
        gpre[r] = grad[r] * act_slope(pre[r], layer.activation, slope);
      for (std::size_t r = 0; r < gpre.size(); ++r) glayer.bias[r] += gpre[r];
      for (std::size_t c = 0; c < in.size(); ++c)
        for (std::size_t r = 0; r < gpre.size(); ++r) glayer.weights(r, c) += gpre[r] * in[c];
      std::vector<double> din(in.size(), 0.0);
      for (std::size_t c = 0; c < in.size(); ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < gpre.size(); ++r) acc += layer.weights(r, c) * gpre[r];
        din[c] = acc;
      }
      grad = std::move(din);
    }
    // split the concat gradient back into the two branch tensors
    const auto &last = p.arch.tcl_shapes.back();
    RealTensor d_re({last[0], last[1], last[2]});
    RealTensor d_im({last[0], last[1], last[2]});
    std::copy(grad.begin(), grad.begin() + std::ptrdiff_t(half), d_re.data().begin());
    std::copy(grad.begin() + std::ptrdiff_t(half), grad.end(), d_im.data().begin());
    backprop_block(p.re_block, tr.re, std::move(d_re), slope, pair_grad.re_block);
    backprop_block(p.im_block, tr.im, std::move(d_im), slope, pair_grad.im_block);
  };

  backprop_head(ta, dza);
  backprop_head(tb, dzb);
  return resid * resid;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> sample_pairs(Rng &rng, std::size_t n,
                                                                  std::size_t count,
                                                                  bool enumerate_all) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  const std::size_t total = n * (n - 1) / 2;
  if (enumerate_all || count >= total) {
    pairs.reserve(total);
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    // seeded Fisher-Yates so batches are not index-ordered
    for (std::size_t i = pairs.size(); i > 1; --i)
      std::swap(pairs[i - 1], pairs[rng.below(i)]);
    return pairs;
  }
  std::set<std::uint64_t> seen;
  pairs.reserve(count);
  while (pairs.size() < count) {
    const std::uint32_t i = std::uint32_t(rng.below(n));
    const std::uint32_t j = std::uint32_t(rng.below(n));
    if (i == j) continue;
    const std::uint32_t lo = std::min(i, j), hi = std::max(i, j);
    if (seen.insert(std::uint64_t(lo) * n + hi).second) pairs.emplace_back(lo, hi);
  }
  return pairs;
}

}  // namespace

std::size_t NetworkParams::parameter_count() const {
  std::size_t count = 0;
  for (const auto *block : {&re_block, &im_block})
    for (const TclLayer &layer : *block)
      for (const RealMatrix &f : layer.factors) count += f.data().size();
  for (const DenseLayer &layer : fcn) count += layer.weights.data().size() + layer.bias.size();
  return count;
}

NetworkParams init_network(const NetworkArch &arch, std::uint64_t seed) {
  validate_arch(arch);
  NetworkParams p;
  p.arch = arch;
  Rng rng = Rng(seed).fork(0x6E65'7477);

  const auto xavier = [&rng](std::size_t rows, std::size_t cols) {
    RealMatrix m(rows, cols);
    const double bound = std::sqrt(6.0 / double(rows + cols));
    for (auto &v : m.data()) v = rng.uniform(-bound, bound);
    return m;
  };

  for (auto *block : {&p.re_block, &p.im_block}) {
    std::array<std::size_t, 3> in = arch.input_shape;
    for (const auto &out : arch.tcl_shapes) {
      TclLayer layer;
      for (int m = 0; m < 3; ++m) layer.factors[m] = xavier(out[m], in[m]);
      layer.activation = Activation::kLeakyRelu;
      block->push_back(std::move(layer));
      in = out;
    }
  }

  std::size_t width = concat_width(arch);
  for (std::size_t li = 0; li < arch.fcn_widths.size(); ++li) {
    DenseLayer layer;
    layer.weights = xavier(arch.fcn_widths[li], width);
    layer.bias.assign(arch.fcn_widths[li], 0.0);
    layer.activation =
        li + 1 == arch.fcn_widths.size() ? Activation::kIdentity : Activation::kLeakyRelu;
    width = arch.fcn_widths[li];
    p.fcn.push_back(std::move(layer));
  }
  return p;
}

NetworkParams zeros_like(const NetworkParams &p) {
  NetworkParams z;
  z.arch = p.arch;
  for (const auto *src : {&p.re_block, &p.im_block}) {
    auto *dst = src == &p.re_block ? &z.re_block : &z.im_block;
    for (const TclLayer &layer : *src) {
      TclLayer zl;
      for (int m = 0; m < 3; ++m) zl.factors[m] = RealMatrix(layer.factors[m].rows(), layer.factors[m].cols());
      zl.activation = layer.activation;
      dst->push_back(std::move(zl));
    }
  }
  for (const DenseLayer &layer : p.fcn) {
    DenseLayer zl;
    zl.weights = RealMatrix(layer.weights.rows(), layer.weights.cols());
    zl.bias.assign(layer.bias.size(), 0.0);
    zl.activation = layer.activation;
    z.fcn.push_back(std::move(zl));
  }
  return z;
}

void visit_params(NetworkParams &p, const std::function<void(double &)> &fn) {
  for (auto *block : {&p.re_block, &p.im_block})
    for (TclLayer &layer : *block)
      for (RealMatrix &f : layer.factors)
        for (double &v : f.data()) fn(v);
  for (DenseLayer &layer : p.fcn) {
    for (double &v : layer.weights.data()) fn(v);
    for (double &v : layer.bias) fn(v);
  }
}

void visit_params(NetworkParams &p, const NetworkParams &other,
                  const std::function<void(double &, double)> &fn) {
  const std::vector<TclLayer> *oblocks[2] = {&other.re_block, &other.im_block};
  std::vector<TclLayer> *pblocks[2] = {&p.re_block, &p.im_block};
  for (int b = 0; b < 2; ++b)
    for (std::size_t l = 0; l < pblocks[b]->size(); ++l)
      for (int m = 0; m < 3; ++m) {
        auto &dst = (*pblocks[b])[l].factors[m].data();
        const auto &src = (*oblocks[b])[l].factors[m].data();
        for (std::size_t i = 0; i < dst.size(); ++i) fn(dst[i], src[i]);
      }
  for (std::size_t l = 0; l < p.fcn.size(); ++l) {
    auto &dw = p.fcn[l].weights.data();
    const auto &sw = other.fcn[l].weights.data();
    for (std::size_t i = 0; i < dw.size(); ++i) fn(dw[i], sw[i]);
    for (std::size_t i = 0; i < p.fcn[l].bias.size(); ++i)
      fn(p.fcn[l].bias[i], other.fcn[l].bias[i]);
  }
}

RealTensor tcl_forward(const RealTensor &x, const TclLayer &layer, double leaky_slope) {
  return tcl_apply(x, layer, leaky_slope, nullptr);
}

ChartPoint forward(const NetworkParams &p, const RealTensor &feat_re, const RealTensor &feat_im) {
  return forward_impl(p, feat_re, feat_im, nullptr);
}

double pair_loss(const NetworkParams &p, const std::vector<PairExample> &batch) {
  if (batch.empty()) throw std::invalid_argument("pair_loss: empty batch");
  double total = 0.0;
  for (const PairExample &pair : batch) {
    const ChartPoint za = forward(p, *pair.a_re, *pair.a_im);
    const ChartPoint zb = forward(p, *pair.b_re, *pair.b_im);
    const double dist = std::hypot(za[0] - zb[0], za[1] - zb[1]);
    const double resid = pair.target - dist;
    total += resid * resid;
  }
  return total / double(batch.size());
}

double backward(const NetworkParams &p, const std::vector<PairExample> &batch,
                NetworkParams &grads) {
  if (batch.empty()) throw std::invalid_argument("backward: empty batch");
  std::vector<NetworkParams> pair_grads;
  pair_grads.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) pair_grads.push_back(zeros_like(p));
  std::vector<double> pair_losses(batch.size());

  parallel_for(0, batch.size(), [&](std::size_t k) {
    pair_losses[k] = backprop_pair(p, batch[k], pair_grads[k]);
  });

  // deterministic reduction in pair order, then the batch mean
  const double inv = 1.0 / double(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k)
    visit_params(grads, pair_grads[k], [](double &dst, double src) { dst += src; });
  visit_params(grads, [inv](double &v) { v *= inv; });
  double loss = 0.0;
  for (double l : pair_losses) loss += l;
  return loss * inv;
}

TrainResult train(const NetworkParams &initial, const std::vector<DenoisedFeature> &features,
                  const DissimilarityMatrix &targets, const TrainConfig &cfg) {
  const std::size_t n = features.size();
  if (n < 2) throw std::invalid_argument("train: need at least two samples");
  if (targets.n != n) throw std::invalid_argument("train: target matrix size mismatch");
  if (cfg.batch_size == 0 || cfg.epochs == 0 || !(cfg.learning_rate > 0.0))
    throw std::invalid_argument("train: hyperparameters must be positive");

  TrainResult result;
  result.params = initial;
  result.epoch_loss.reserve(cfg.epochs);

  const std::size_t n_params = initial.parameter_count();
  std::vector<double> m(n_params, 0.0), v(n_params, 0.0);
  NetworkParams grads = zeros_like(initial);
  Rng rng = Rng(cfg.seed).fork(0x7472'6169);
  const std::size_t pairs_per_epoch = cfg.pairs_per_epoch == 0 ? n : cfg.pairs_per_epoch;

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng epoch_rng = rng.fork(epoch);
    const auto pairs = sample_pairs(epoch_rng, n, pairs_per_epoch, cfg.full_pair_enumeration);

    double epoch_sum = 0.0;
    for (std::size_t start = 0; start < pairs.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(pairs.size(), start + cfg.batch_size);
      std::vector<PairExample> batch;
      batch.reserve(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        const auto &[i, j] = pairs[k];
        batch.push_back({&features[i].real_part, &features[i].imag_part,
                         &features[j].real_part, &features[j].imag_part,
                         targets.at(i, j)});
      }
      visit_params(grads, [](double &g) { g = 0.0; });
      const double loss = backward(result.params, batch, grads);
      if (!std::isfinite(loss))
        throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch) +
                              ", step " + std::to_string(step) +
                              " (learning-rate divergence signal)");
      epoch_sum += loss * double(batch.size());

      ++step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, double(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, double(step));
      std::size_t idx = 0;
      visit_params(result.params, grads, [&](double &param, double g) {
        m[idx] = cfg.beta1 * m[idx] + (1.0 - cfg.beta1) * g;
        v[idx] = cfg.beta2 * v[idx] + (1.0 - cfg.beta2) * g * g;
        const double mhat = m[idx] / bc1;
        const double vhat = v[idx] / bc2;
        param -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
        ++idx;
      });
    }
    result.epoch_loss.push_back(epoch_sum / double(pairs.size()));
  }
  return result;
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kModelMagic[4] = {'C', 'C', 'N', 'N'};
constexpr std::uint16_t kModelVersion = 1;
}  // namespace

void save_network(const std::string &path, const NetworkParams &p) {
  std::ofstream out = open_output(path);
  write_magic(out, kModelMagic);
  write_u16(out, kModelVersion);
  write_u8(out, std::uint8_t(Activation::kLeakyRelu));
  write_f64(out, p.arch.leaky_slope);
  for (std::size_t d : p.arch.input_shape) write_u32(out, std::uint32_t(d));
  write_u8(out, std::uint8_t(p.arch.tcl_shapes.size()));
  for (const auto &s : p.arch.tcl_shapes)
    for (std::size_t d : s) write_u32(out, std::uint32_t(d));
  write_u8(out, std::uint8_t(p.arch.fcn_widths.size()));
  for (std::size_t w : p.arch.fcn_widths) write_u32(out, std::uint32_t(w));

  auto &mutable_p = const_cast<NetworkParams &>(p);
  visit_params(mutable_p, [&out](double &v) { write_f64(out, v); });
  out.flush();
  if (!out) throw IoError("model writer: flush failed for " + path);
}

NetworkParams load_network(const std::string &path) {
  std::ifstream in = open_input(path);
  expect_magic(in, kModelMagic, path);
  const std::uint16_t ver = read_u16(in, "model version");
  if (ver != kModelVersion) throw CorruptArtifactError("unsupported model version in " + path);
  const std::uint8_t act = read_u8(in, "activation id");
  if (act != std::uint8_t(Activation::kLeakyRelu))
    throw CorruptArtifactError("unknown activation id in " + path);

  NetworkArch arch;
  arch.leaky_slope = read_f64(in, "leaky slope");
  for (auto &d : arch.input_shape) d = read_u32(in, "input shape");
  const std::uint8_t n_tcl = read_u8(in, "tcl layer count");
  arch.tcl_shapes.resize(n_tcl);
  for (auto &s : arch.tcl_shapes)
    for (auto &d : s) d = read_u32(in, "tcl shape");
  const std::uint8_t n_fcn = read_u8(in, "fcn layer count");
  arch.fcn_widths.resize(n_fcn);
  for (auto &w : arch.fcn_widths) w = read_u32(in, "fcn width");

  NetworkParams p = init_network(arch, 0);
  visit_params(p, [&in, &path](double &v) { v = read_f64(in, "model payload"); });
  char extra;
  in.read(&extra, 1);
  if (in.gcount() != 0) throw CorruptArtifactError("trailing bytes in " + path);
  return p;
}

}  // namespace tensorchart
