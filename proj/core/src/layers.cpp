#include "battkit/layers.hpp"

#include <cmath>

namespace battkit::nn {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor conv1d_forward(const Conv1dLayer& layer, const Tensor& x) {
  if (x.shape.size() != 2 || x.cols() != layer.in_channels)
    throw Error(Errc::ShapeMismatch, "conv1d input must be [time, in_channels]");
  const std::size_t time = x.rows();
  if (time < layer.kernel) throw Error(Errc::ShapeMismatch, "conv1d input shorter than kernel");

  const std::size_t out_time = time - layer.kernel + 1;
  Tensor out = Tensor::zeros({out_time, layer.filters});
  for (std::size_t t = 0; t < out_time; ++t) {
    for (std::size_t f = 0; f < layer.filters; ++f) {
      double acc = layer.b[f];
      for (std::size_t c = 0; c < layer.in_channels; ++c)
        for (std::size_t k = 0; k < layer.kernel; ++k)
          acc += layer.wat(f, c, k) * x.at(t + k, c);
      out.at(t, f) = acc;
    }
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor max_pool1d(const Tensor& x, std::size_t window, std::vector<std::size_t>* argmax) {
  if (window < 1) throw Error(Errc::InvalidArgument, "pool window must be >= 1");
  const std::size_t time = x.rows();
  const std::size_t channels = x.cols();
  const std::size_t out_time = (time + window - 1) / window;  // partial tail kept

  Tensor out = Tensor::zeros({out_time, channels});
  if (argmax) argmax->assign(out_time * channels, 0);
  for (std::size_t t = 0; t < out_time; ++t) {
    const std::size_t begin = t * window;
    const std::size_t end = std::min(begin + window, time);
    for (std::size_t c = 0; c < channels; ++c) {
      std::size_t best = begin;
      double best_v = x.at(begin, c);
      for (std::size_t i = begin + 1; i < end; ++i) {
        if (x.at(i, c) > best_v) {
          best_v = x.at(i, c);
          best = i;
        }
      }
      out.at(t, c) = best_v;
      if (argmax) (*argmax)[t * channels + c] = best;
    }
  }
  return out;
}

namespace {

// pre[i] = b[i] + Wx[i,:] psi + Wh[i,:] h_prev
void gate_preactivation(std::span<const double> psi, std::span<const double> h_prev,
                        const std::vector<double>& wx, const std::vector<double>& wh,
                        const std::vector<double>& b, std::vector<double>& pre) {
  const std::size_t hidden = b.size();
  const std::size_t in = psi.size();
  pre.resize(hidden);
  for (std::size_t i = 0; i < hidden; ++i) {
    double acc = b[i];
    const double* wx_row = wx.data() + i * in;
    for (std::size_t j = 0; j < in; ++j) acc += wx_row[j] * psi[j];
    const double* wh_row = wh.data() + i * hidden;
    for (std::size_t j = 0; j < hidden; ++j) acc += wh_row[j] * h_prev[j];
    pre[i] = acc;
  }
}

// Accumulates dW += dpre (outer) x and adds W^T dpre into dx.
void gate_backward(std::span<const double> psi, std::span<const double> h_prev,
                   const std::vector<double>& wx, const std::vector<double>& wh,
                   const std::vector<double>& dpre, std::vector<double>& dwx,
                   std::vector<double>& dwh, std::vector<double>& db,
                   std::vector<double>& dpsi, std::vector<double>& dh_prev) {
  const std::size_t hidden = db.size();
  const std::size_t in = psi.size();
  for (std::size_t i = 0; i < hidden; ++i) {
    const double dp = dpre[i];
    db[i] += dp;
    double* dwx_row = dwx.data() + i * in;
    const double* wx_row = wx.data() + i * in;
    for (std::size_t j = 0; j < in; ++j) {
      dwx_row[j] += dp * psi[j];
      dpsi[j] += wx_row[j] * dp;
    }
    double* dwh_row = dwh.data() + i * hidden;
    const double* wh_row = wh.data() + i * hidden;
    for (std::size_t j = 0; j < hidden; ++j) {
      dwh_row[j] += dp * h_prev[j];
      dh_prev[j] += wh_row[j] * dp;
    }
  }
}

}  // namespace

LstmGateCache lstm_step(const LstmLayer& layer, std::span<const double> psi,
                        std::span<const double> h_prev, std::span<const double> c_prev) {
  const std::size_t hidden = layer.hidden_size;
  if (psi.size() != layer.input_size || h_prev.size() != hidden || c_prev.size() != hidden)
    throw Error(Errc::ShapeMismatch, "lstm_step input dimensions inconsistent");

  LstmGateCache cache;
  cache.psi.assign(psi.begin(), psi.end());
  cache.h_prev.assign(h_prev.begin(), h_prev.end());
  cache.c_prev.assign(c_prev.begin(), c_prev.end());

  std::vector<double> pre;
  gate_preactivation(psi, h_prev, layer.w_xu, layer.w_hu, layer.b_u, pre);
  cache.u.resize(hidden);
  for (std::size_t i = 0; i < hidden; ++i) cache.u[i] = sigmoid(pre[i]);

  gate_preactivation(psi, h_prev, layer.w_xf, layer.w_hf, layer.b_f, pre);
  cache.f.resize(hidden);
  for (std::size_t i = 0; i < hidden; ++i) cache.f[i] = sigmoid(pre[i]);

  gate_preactivation(psi, h_prev, layer.w_xc, layer.w_hc, layer.b_c, pre);
  cache.g.resize(hidden);
  for (std::size_t i = 0; i < hidden; ++i) cache.g[i] = std::tanh(pre[i]);

  gate_preactivation(psi, h_prev, layer.w_xo, layer.w_ho, layer.b_o, pre);
  cache.o.resize(hidden);
  for (std::size_t i = 0; i < hidden; ++i) cache.o[i] = sigmoid(pre[i]);

  cache.c.resize(hidden);
  cache.tanh_c.resize(hidden);
  cache.h.resize(hidden);
  for (std::size_t i = 0; i < hidden; ++i) {
    cache.c[i] = cache.f[i] * cache.c_prev[i] + cache.u[i] * cache.g[i];
    cache.tanh_c[i] = std::tanh(cache.c[i]);
    cache.h[i] = cache.o[i] * cache.tanh_c[i];
  }
  return cache;
}

LstmStepGrads lstm_step_backward(const LstmLayer& layer, const LstmGateCache& cache,
                                 std::span<const double> d_h, std::span<const double> d_c,
                                 LstmLayer& grads) {
  const std::size_t hidden = layer.hidden_size;
  const std::size_t in = layer.input_size;

  std::vector<double> dpre_u(hidden), dpre_f(hidden), dpre_g(hidden), dpre_o(hidden);
  LstmStepGrads out;
  out.d_psi.assign(in, 0.0);
  out.d_h_prev.assign(hidden, 0.0);
  out.d_c_prev.assign(hidden, 0.0);

  for (std::size_t i = 0; i < hidden; ++i) {
    const double dho = d_h[i];
    const double d_o = dho * cache.tanh_c[i];
    double dc = d_c[i] + dho * cache.o[i] * (1.0 - cache.tanh_c[i] * cache.tanh_c[i]);
    const double d_f = dc * cache.c_prev[i];
    const double d_u = dc * cache.g[i];
    const double d_g = dc * cache.u[i];
    out.d_c_prev[i] = dc * cache.f[i];

    dpre_u[i] = d_u * cache.u[i] * (1.0 - cache.u[i]);
    dpre_f[i] = d_f * cache.f[i] * (1.0 - cache.f[i]);
    dpre_g[i] = d_g * (1.0 - cache.g[i] * cache.g[i]);
    dpre_o[i] = d_o * cache.o[i] * (1.0 - cache.o[i]);
  }

  gate_backward(cache.psi, cache.h_prev, layer.w_xu, layer.w_hu, dpre_u, grads.w_xu, grads.w_hu,
                grads.b_u, out.d_psi, out.d_h_prev);
  gate_backward(cache.psi, cache.h_prev, layer.w_xf, layer.w_hf, dpre_f, grads.w_xf, grads.w_hf,
                grads.b_f, out.d_psi, out.d_h_prev);
  gate_backward(cache.psi, cache.h_prev, layer.w_xc, layer.w_hc, dpre_g, grads.w_xc, grads.w_hc,
                grads.b_c, out.d_psi, out.d_h_prev);
  gate_backward(cache.psi, cache.h_prev, layer.w_xo, layer.w_ho, dpre_o, grads.w_xo, grads.w_ho,
                grads.b_o, out.d_psi, out.d_h_prev);
  return out;
}

std::vector<double> dense_forward(const DenseLayer& layer, std::span<const double> x) {
  if (x.size() != layer.in) throw Error(Errc::ShapeMismatch, "dense input dimension mismatch");
  std::vector<double> y(layer.out);
  for (std::size_t i = 0; i < layer.out; ++i) {
    double acc = layer.b[i];
    const double* row = layer.w.data() + i * layer.in;
    for (std::size_t j = 0; j < layer.in; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

namespace {

void fill_uniform(std::vector<double>& w, double bound, Rng& rng) {
  for (double& v : w) v = rng.uniform(-bound, bound);
}

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace

Conv1dLayer init_conv1d(std::size_t filters, std::size_t in_channels, std::size_t kernel,
                        Rng& rng) {
  Conv1dLayer layer;
  layer.filters = filters;
  layer.in_channels = in_channels;
  layer.kernel = kernel;
  layer.w.resize(filters * in_channels * kernel);
  layer.b.assign(filters, 0.0);
  fill_uniform(layer.w, xavier_bound(in_channels * kernel, filters * kernel), rng);
  return layer;
}

LstmLayer init_lstm(std::size_t input_size, std::size_t hidden_size, Rng& rng) {
  LstmLayer layer;
  layer.input_size = input_size;
  layer.hidden_size = hidden_size;
  const double bx = xavier_bound(input_size, hidden_size);
  const double bh = xavier_bound(hidden_size, hidden_size);
  for (auto* w : {&layer.w_xu, &layer.w_xf, &layer.w_xc, &layer.w_xo}) {
    w->resize(hidden_size * input_size);
    fill_uniform(*w, bx, rng);
  }
  for (auto* w : {&layer.w_hu, &layer.w_hf, &layer.w_hc, &layer.w_ho}) {
    w->resize(hidden_size * hidden_size);
    fill_uniform(*w, bh, rng);
  }
  layer.b_u.assign(hidden_size, 0.0);
  layer.b_f.assign(hidden_size, 1.0);  // open forget gate at start
  layer.b_c.assign(hidden_size, 0.0);
  layer.b_o.assign(hidden_size, 0.0);
  return layer;
}

DenseLayer init_dense(std::size_t in, std::size_t out, Rng& rng) {
  DenseLayer layer;
  layer.in = in;
  layer.out = out;
  layer.w.resize(out * in);
  layer.b.assign(out, 0.0);
  fill_uniform(layer.w, xavier_bound(in, out), rng);
  return layer;
}

Conv1dLayer zeros_like(const Conv1dLayer& layer) {
  Conv1dLayer z = layer;
  std::fill(z.w.begin(), z.w.end(), 0.0);
  std::fill(z.b.begin(), z.b.end(), 0.0);
  return z;
}

LstmLayer zeros_like(const LstmLayer& layer) {
  LstmLayer z = layer;
  for (auto* w : {&z.w_xu, &z.w_xf, &z.w_xc, &z.w_xo, &z.w_hu, &z.w_hf, &z.w_hc, &z.w_ho, &z.b_u,
                  &z.b_f, &z.b_c, &z.b_o})
    std::fill(w->begin(), w->end(), 0.0);
  return z;
}

DenseLayer zeros_like(const DenseLayer& layer) {
  DenseLayer z = layer;
  std::fill(z.w.begin(), z.w.end(), 0.0);
  std::fill(z.b.begin(), z.b.end(), 0.0);
  return z;
}

}  // namespace battkit::nn
