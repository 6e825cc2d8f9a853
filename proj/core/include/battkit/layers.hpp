/*
 * layers.hpp
 *
 * Network building blocks: 1-D convolution (valid, cross-correlation),
 * ReLU, non-overlapping max pooling, LSTM cell, and dense transform.
 * Everything is plain 64-bit arithmetic with analytic gradients.
 */

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "battkit/rng.hpp"
#include "battkit/tensor.hpp"

namespace battkit::nn {

struct Conv1dLayer {
  std::size_t filters = 0;
  std::size_t in_channels = 0;
  std::size_t kernel = 0;
  std::vector<double> w;  // [filters][in_channels][kernel]
  std::vector<double> b;  // [filters]

  double& wat(std::size_t f, std::size_t c, std::size_t k) {
    return w[(f * in_channels + c) * kernel + k];
  }
  double wat(std::size_t f, std::size_t c, std::size_t k) const {
    return w[(f * in_channels + c) * kernel + k];
  }
};

// Valid (no padding) sliding correlation over x[time, channels];
// output is [time - kernel + 1, filters].
Tensor conv1d_forward(const Conv1dLayer& layer, const Tensor& x);

// Elementwise max(0, x). The subgradient at exactly zero is zero.
Tensor relu(const Tensor& x);

// Non-overlapping windows along the time axis; a partial tail window is
// kept. window = 1 is the identity. argmax (row index per output element)
// is written when a cache pointer is supplied.
Tensor max_pool1d(const Tensor& x, std::size_t window,
                  std::vector<std::size_t>* argmax = nullptr);

struct LstmLayer {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  // Per-gate input weights [hidden][input], recurrent weights
  // [hidden][hidden], and biases [hidden]: u = input gate, f = forget gate,
  // c = candidate, o = output gate.
  std::vector<double> w_xu, w_xf, w_xc, w_xo;
  std::vector<double> w_hu, w_hf, w_hc, w_ho;
  std::vector<double> b_u, b_f, b_c, b_o;
};

// Every intermediate needed to run the cell backward.
struct LstmGateCache {
  std::vector<double> psi, h_prev, c_prev;
  std::vector<double> u, f, g, o;       // gate activations
  std::vector<double> c, tanh_c, h;
};

// One LSTM time step:
//   u = sigmoid(Wxu psi + Whu h_prev + bu)      f = sigmoid(...)
//   g = tanh(Wxc psi + Whc h_prev + bc)         o = sigmoid(...)
//   c = f*c_prev + u*g                          h = o*tanh(c)
LstmGateCache lstm_step(const LstmLayer& layer, std::span<const double> psi,
                        std::span<const double> h_prev, std::span<const double> c_prev);

// Gradient contributions flowing out of one reversed LSTM step.
struct LstmStepGrads {
  std::vector<double> d_psi;
  std::vector<double> d_h_prev;
  std::vector<double> d_c_prev;
};

// Reverse of lstm_step. d_h/d_c are the gradients w.r.t. this step's h and
// c outputs; parameter gradients accumulate into grads (same layout as the
// layer).
LstmStepGrads lstm_step_backward(const LstmLayer& layer, const LstmGateCache& cache,
                                 std::span<const double> d_h, std::span<const double> d_c,
                                 LstmLayer& grads);

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;  // [out][in]
  std::vector<double> b;  // [out]
};

// y = W x + b (the output head is linear; no activation here).
std::vector<double> dense_forward(const DenseLayer& layer, std::span<const double> x);

double sigmoid(double x);

// Symmetric uniform init in +-sqrt(6/(fan_in+fan_out)); biases zero except
// the LSTM forget gate, which starts at +1.
Conv1dLayer init_conv1d(std::size_t filters, std::size_t in_channels, std::size_t kernel,
                        Rng& rng);
LstmLayer init_lstm(std::size_t input_size, std::size_t hidden_size, Rng& rng);
DenseLayer init_dense(std::size_t in, std::size_t out, Rng& rng);

Conv1dLayer zeros_like(const Conv1dLayer& layer);
LstmLayer zeros_like(const LstmLayer& layer);
DenseLayer zeros_like(const DenseLayer& layer);

}  // namespace battkit::nn
