// SPDX-License-Identifier: Apache-2.0
//
// The parametric charting map: two stacked tensor-contraction-layer blocks
// (one on the real part of the feature, one on the imaginary part), their
// vectorized outputs concatenated into a small fully connected head that
// emits a 2-D chart point. Gradients are hand-derived reverse mode; training
// is plain Adam on a Siamese distance-matching objective.

#ifndef TENSORCHART_NETWORK_HPP
#define TENSORCHART_NETWORK_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tensorchart/features.hpp"
#include "tensorchart/tensor.hpp"

namespace tensorchart {

enum class Activation : std::uint8_t { kIdentity = 0, kLeakyRelu = 1 };

struct TclLayer {
  std::array<RealMatrix, 3> factors;  // factor i contracts mode i, out x in
  Activation activation = Activation::kLeakyRelu;
};

struct DenseLayer {
  RealMatrix weights;  // out x in
  std::vector<double> bias;
  Activation activation = Activation::kLeakyRelu;
};

struct NetworkArch {
  std::array<std::size_t, 3> input_shape = {32, 32, 24};
  std::vector<std::array<std::size_t, 3>> tcl_shapes = {{8, 8, 6}, {4, 4, 4}};
  std::vector<std::size_t> fcn_widths = {80, 2};  // hidden widths then output
  double leaky_slope = 0.01;
};

using ChartPoint = std::array<double, 2>;

struct NetworkParams {
  NetworkArch arch;
  std::vector<TclLayer> re_block;
  std::vector<TclLayer> im_block;
  std::vector<DenseLayer> fcn;

  std::size_t parameter_count() const;
};

// Xavier-uniform factors and weights, zero biases; layout checks throw on an
// inconsistent descriptor (expansion layers, wrong head width).
NetworkParams init_network(const NetworkArch &arch, std::uint64_t seed);

NetworkParams zeros_like(const NetworkParams &p);

// Fixed-order traversal of every trainable scalar (serialization order).
void visit_params(NetworkParams &p, const std::function<void(double &)> &fn);
void visit_params(NetworkParams &p, const NetworkParams &other,
                  const std::function<void(double &, double)> &fn);

// One contraction layer: act(x x0 V1 x1 V2 x2 V3).
RealTensor tcl_forward(const RealTensor &x, const TclLayer &layer, double leaky_slope);

ChartPoint forward(const NetworkParams &p, const RealTensor &feat_re, const RealTensor &feat_im);

// Out-of-sample charting entry point; needs nothing but parameters.
inline ChartPoint infer(const NetworkParams &p, const RealTensor &feat_re,
                        const RealTensor &feat_im) {
  return forward(p, feat_re, feat_im);
}

struct PairExample {
  const RealTensor *a_re;
  const RealTensor *a_im;
  const RealTensor *b_re;
  const RealTensor *b_im;
  double target;  // dissimilarity the chart distance should match
};

// Mean over the batch of (target - ||z_a - z_b||)^2.
double pair_loss(const NetworkParams &p, const std::vector<PairExample> &batch);

// Analytic gradient of pair_loss; returns the loss. grads must be
// zeros_like(p) shaped.
double backward(const NetworkParams &p, const std::vector<PairExample> &batch,
                NetworkParams &grads);

struct TrainConfig {
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::size_t epochs = 300;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  std::size_t pairs_per_epoch = 0;     // 0: one pair per sample
  bool full_pair_enumeration = false;  // every (i, j) pair once per epoch
};

struct TrainResult {
  NetworkParams params;
  std::vector<double> epoch_loss;  // mean pair loss per epoch
};

// Seeded Adam over randomly sampled pairs; throws DivergenceError when the
// loss stops being finite.
TrainResult train(const NetworkParams &initial, const std::vector<DenoisedFeature> &features,
                  const DissimilarityMatrix &targets, const TrainConfig &cfg);

// CCNN model files: architecture descriptor followed by the f64 payload in
// visit_params order. Loading validates the descriptor against the payload.
void save_network(const std::string &path, const NetworkParams &p);
NetworkParams load_network(const std::string &path);

}  // namespace tensorchart

#endif
