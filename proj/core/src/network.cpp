#include "battkit/network.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace battkit::nn {

std::string to_string(ModelVariant v) {
  return v == ModelVariant::EkfCnn ? "ekf-cnn" : "ekf-cnn-lstm";
}

ModelVariant variant_from_string(const std::string& s) {
  if (s == "ekf-cnn" || s == "cnn") return ModelVariant::EkfCnn;
  if (s == "ekf-cnn-lstm" || s == "cnn-lstm") return ModelVariant::EkfCnnLstm;
  throw Error(Errc::InvalidArgument, "unknown model variant: " + s);
}

namespace {

std::size_t pooled_time(const NetworkShape& shape) {
  const std::size_t t1 = shape.window_len - shape.conv_kernel + 1;
  return (t1 + shape.pool_window - 1) / shape.pool_window;
}

std::vector<const std::vector<double>*> param_arrays(const NetworkParams& p) {
  std::vector<const std::vector<double>*> arrays{&p.conv.w, &p.conv.b};
  if (p.shape.variant == ModelVariant::EkfCnnLstm) {
    for (const LstmLayer* l : {&p.lstm1, &p.lstm2}) {
      for (const std::vector<double>* w :
           {&l->w_xu, &l->w_xf, &l->w_xc, &l->w_xo, &l->w_hu, &l->w_hf, &l->w_hc, &l->w_ho,
            &l->b_u, &l->b_f, &l->b_c, &l->b_o})
        arrays.push_back(w);
    }
  }
  arrays.push_back(&p.head.w);
  arrays.push_back(&p.head.b);
  return arrays;
}

std::vector<std::vector<double>*> param_arrays(NetworkParams& p) {
  std::vector<std::vector<double>*> out;
  for (const std::vector<double>* a : param_arrays(const_cast<const NetworkParams&>(p)))
    out.push_back(const_cast<std::vector<double>*>(a));
  return out;
}

std::uint64_t stamp_of(const NetworkParams& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    h = splitmix64(h ^ bits);
  };
  for (const auto* arr : param_arrays(p)) {
    h = splitmix64(h ^ arr->size());
    if (!arr->empty()) {
      mix(arr->front());
      mix(arr->back());
    }
  }
  return h;
}

}  // namespace

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto* arr : param_arrays(*this)) n += arr->size();
  return n;
}

void NetworkParams::check_chain() const {
  if (conv.in_channels != shape.input_features)
    throw Error(Errc::ShapeMismatch, "conv in_channels != input features");
  if (shape.variant == ModelVariant::EkfCnnLstm) {
    if (lstm1.input_size != conv.filters)
      throw Error(Errc::ShapeMismatch, "lstm1 input != conv filters");
    if (lstm2.input_size != lstm1.hidden_size)
      throw Error(Errc::ShapeMismatch, "lstm2 input != lstm1 hidden");
    if (head.in != lstm2.hidden_size)
      throw Error(Errc::ShapeMismatch, "head input != lstm2 hidden");
  } else {
    if (head.in != pooled_time(shape) * conv.filters)
      throw Error(Errc::ShapeMismatch, "head input != flattened conv output");
  }
  if (head.out != 1) throw Error(Errc::ShapeMismatch, "head must have a single output");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw Error(Errc::InvalidArgument, "dropout rate must lie in [0, 1)");
}

NetworkParams init_network(const NetworkShape& shape, Rng& rng) {
  if (shape.window_len < shape.conv_kernel)
    throw Error(Errc::ShapeMismatch, "window shorter than conv kernel");
  NetworkParams p;
  p.shape = shape;
  p.dropout_rate = shape.dropout_rate;
  p.conv = init_conv1d(shape.conv_filters, shape.input_features, shape.conv_kernel, rng);
  if (shape.variant == ModelVariant::EkfCnnLstm) {
    p.lstm1 = init_lstm(shape.conv_filters, shape.lstm_units, rng);
    p.lstm2 = init_lstm(shape.lstm_units, shape.lstm_units, rng);
    p.head = init_dense(shape.lstm_units, 1, rng);
  } else {
    p.head = init_dense(pooled_time(shape) * shape.conv_filters, 1, rng);
  }
  p.check_chain();
  return p;
}

NetworkParams zeros_like(const NetworkParams& params) {
  NetworkParams z = params;
  for (auto* arr : param_arrays(z)) std::fill(arr->begin(), arr->end(), 0.0);
  return z;
}

namespace {

// Inverted dropout over a [time, units] tensor; mask entries are either 0
// or 1/(1-rate). Masks are drawn row-major so draws are reproducible.
void apply_dropout(Tensor& x, double rate, RunMode mode, Rng& rng, std::vector<double>& mask) {
  mask.assign(x.size(), 1.0);
  if (mode != RunMode::Train || rate <= 0.0) return;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = rng.uniform() >= rate ? keep_scale : 0.0;
    x.data[i] *= mask[i];
  }
}

}  // namespace

double network_forward(const NetworkParams& params, const Tensor& window, RunMode mode, Rng& rng,
                       ForwardCache& cache) {
  params.check_chain();
  cache = ForwardCache{};
  cache.mode = mode;
  cache.params_stamp = stamp_of(params);
  cache.input = window;

  cache.conv_out = conv1d_forward(params.conv, window);
  cache.conv_act = relu(cache.conv_out);
  cache.pooled = max_pool1d(cache.conv_act, params.shape.pool_window, &cache.pool_argmax);

  if (params.shape.variant == ModelVariant::EkfCnn) {
    cache.head_in = cache.pooled.data;
  } else {
    const std::size_t time = cache.pooled.rows();
    const std::size_t hidden = params.shape.lstm_units;

    std::vector<double> h(hidden, 0.0), c(hidden, 0.0);
    Tensor l1_act = Tensor::zeros({time, hidden});
    cache.lstm1_steps.reserve(time);
    for (std::size_t t = 0; t < time; ++t) {
      cache.lstm1_steps.push_back(
          lstm_step(params.lstm1, {cache.pooled.row(t), params.lstm1.input_size}, h, c));
      h = cache.lstm1_steps.back().h;
      c = cache.lstm1_steps.back().c;
      for (std::size_t i = 0; i < hidden; ++i) l1_act.at(t, i) = h[i] > 0.0 ? h[i] : 0.0;
    }
    apply_dropout(l1_act, params.dropout_rate, mode, rng, cache.drop1_mask);
    cache.l1_drop = std::move(l1_act);

    std::fill(h.begin(), h.end(), 0.0);
    std::fill(c.begin(), c.end(), 0.0);
    Tensor l2_act = Tensor::zeros({time, hidden});
    cache.lstm2_steps.reserve(time);
    for (std::size_t t = 0; t < time; ++t) {
      cache.lstm2_steps.push_back(
          lstm_step(params.lstm2, {cache.l1_drop.row(t), params.lstm2.input_size}, h, c));
      h = cache.lstm2_steps.back().h;
      c = cache.lstm2_steps.back().c;
      for (std::size_t i = 0; i < hidden; ++i) l2_act.at(t, i) = h[i] > 0.0 ? h[i] : 0.0;
    }
    apply_dropout(l2_act, params.dropout_rate, mode, rng, cache.drop2_mask);
    cache.l2_drop = std::move(l2_act);

    const double* last = cache.l2_drop.row(time - 1);
    cache.head_in.assign(last, last + hidden);
  }

  cache.prediction = dense_forward(params.head, cache.head_in)[0];
  return cache.prediction;
}

double network_forward(const NetworkParams& params, const Tensor& window, RunMode mode, Rng& rng) {
  ForwardCache cache;
  return network_forward(params, window, mode, rng, cache);
}

NetworkParams network_backward(const NetworkParams& params, const ForwardCache& cache,
                               double d_prediction) {
  if (cache.params_stamp != stamp_of(params))
    throw Error(Errc::StaleCache, "forward cache does not match current parameters");

  NetworkParams grads = zeros_like(params);

  // Linear head: y = w . head_in + b.
  std::vector<double> d_head_in(params.head.in, 0.0);
  for (std::size_t j = 0; j < params.head.in; ++j) {
    grads.head.w[j] = d_prediction * cache.head_in[j];
    d_head_in[j] = params.head.w[j] * d_prediction;
  }
  grads.head.b[0] = d_prediction;

  Tensor d_pooled = Tensor::zeros(cache.pooled.shape);

  if (params.shape.variant == ModelVariant::EkfCnn) {
    d_pooled.data = d_head_in;
  } else {
    const std::size_t time = cache.pooled.rows();
    const std::size_t hidden = params.shape.lstm_units;

    // External gradient reaches only the final step of the second LSTM.
    Tensor d_l1_drop = Tensor::zeros({time, hidden});
    {
      std::vector<double> dh_rec(hidden, 0.0), dc_rec(hidden, 0.0);
      for (std::size_t ti = time; ti-- > 0;) {
        std::vector<double> dh = dh_rec;
        if (ti == time - 1) {
          for (std::size_t i = 0; i < hidden; ++i) {
            const double h_raw = cache.lstm2_steps[ti].h[i];
            const double m = cache.drop2_mask.empty() ? 1.0 : cache.drop2_mask[ti * hidden + i];
            dh[i] += d_head_in[i] * m * (h_raw > 0.0 ? 1.0 : 0.0);
          }
        }
        auto step = lstm_step_backward(params.lstm2, cache.lstm2_steps[ti], dh, dc_rec,
                                       grads.lstm2);
        dh_rec = std::move(step.d_h_prev);
        dc_rec = std::move(step.d_c_prev);
        for (std::size_t i = 0; i < hidden; ++i) d_l1_drop.at(ti, i) = step.d_psi[i];
      }
    }

    {
      std::vector<double> dh_rec(hidden, 0.0), dc_rec(hidden, 0.0);
      for (std::size_t ti = time; ti-- > 0;) {
        std::vector<double> dh = dh_rec;
        for (std::size_t i = 0; i < hidden; ++i) {
          const double h_raw = cache.lstm1_steps[ti].h[i];
          const double m = cache.drop1_mask.empty() ? 1.0 : cache.drop1_mask[ti * hidden + i];
          dh[i] += d_l1_drop.at(ti, i) * m * (h_raw > 0.0 ? 1.0 : 0.0);
        }
        auto step = lstm_step_backward(params.lstm1, cache.lstm1_steps[ti], dh, dc_rec,
                                       grads.lstm1);
        dh_rec = std::move(step.d_h_prev);
        dc_rec = std::move(step.d_c_prev);
        for (std::size_t i = 0; i < params.lstm1.input_size; ++i)
          d_pooled.at(ti, i) = step.d_psi[i];
      }
    }
  }

  // Pool backward: route each pooled gradient to its argmax row.
  Tensor d_conv_act = Tensor::zeros(cache.conv_act.shape);
  const std::size_t channels = cache.pooled.cols();
  for (std::size_t t = 0; t < cache.pooled.rows(); ++t)
    for (std::size_t c = 0; c < channels; ++c)
      d_conv_act.at(cache.pool_argmax[t * channels + c], c) += d_pooled.at(t, c);

  // ReLU mask on the conv pre-activation.
  for (std::size_t i = 0; i < d_conv_act.size(); ++i)
    if (cache.conv_out.data[i] <= 0.0) d_conv_act.data[i] = 0.0;

  // Conv backward (parameter gradients only; the input is data).
  const auto& conv = params.conv;
  for (std::size_t t = 0; t < d_conv_act.rows(); ++t) {
    for (std::size_t f = 0; f < conv.filters; ++f) {
      const double g = d_conv_act.at(t, f);
      if (g == 0.0) continue;
      grads.conv.b[f] += g;
      for (std::size_t c = 0; c < conv.in_channels; ++c)
        for (std::size_t k = 0; k < conv.kernel; ++k)
          grads.conv.wat(f, c, k) += g * cache.input.at(t + k, c);
    }
  }
  return grads;
}

void accumulate(NetworkParams& dst, const NetworkParams& src) {
  auto d = param_arrays(dst);
  auto s = param_arrays(src);
  if (d.size() != s.size()) throw Error(Errc::ShapeMismatch, "gradient accumulate shape mismatch");
  for (std::size_t a = 0; a < d.size(); ++a) {
    if (d[a]->size() != s[a]->size())
      throw Error(Errc::ShapeMismatch, "gradient accumulate shape mismatch");
    for (std::size_t i = 0; i < d[a]->size(); ++i) (*d[a])[i] += (*s[a])[i];
  }
}

void scale(NetworkParams& params, double factor) {
  for (auto* arr : param_arrays(params))
    for (double& v : *arr) v *= factor;
}

AdamState init_adam(const NetworkParams& params) {
  return AdamState{zeros_like(params), zeros_like(params), 0};
}

void adam_update(NetworkParams& params, const NetworkParams& gradients, AdamState& state,
                 double lr, double beta1, double beta2, double eps) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));

  auto p = param_arrays(params);
  auto g = param_arrays(const_cast<NetworkParams&>(gradients));
  auto m = param_arrays(state.m);
  auto v = param_arrays(state.v);
  if (p.size() != g.size()) throw Error(Errc::ShapeMismatch, "adam shape mismatch");

  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a]->size() != g[a]->size()) throw Error(Errc::ShapeMismatch, "adam shape mismatch");
    for (std::size_t i = 0; i < p[a]->size(); ++i) {
      double& mi = (*m[a])[i];
      double& vi = (*v[a])[i];
      const double gi = (*g[a])[i];
      mi = beta1 * mi + (1.0 - beta1) * gi;
      vi = beta2 * vi + (1.0 - beta2) * gi * gi;
      const double m_hat = mi / bc1;
      const double v_hat = vi / bc2;
      (*p[a])[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

namespace {

constexpr char kMagic[8] = {'B', 'K', 'C', 'K', 'P', 'T', '0', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u64(std::ofstream& f, std::uint64_t v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_f64(std::ofstream& f, double v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint64_t read_u64(std::ifstream& f) {
  std::uint64_t v = 0;
  f.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
double read_f64(std::ifstream& f) {
  double v = 0;
  f.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_arrays(std::ofstream& f, const NetworkParams& p) {
  for (const auto* arr : param_arrays(p)) {
    write_u64(f, arr->size());
    f.write(reinterpret_cast<const char*>(arr->data()),
            static_cast<std::streamsize>(arr->size() * sizeof(double)));
  }
}

void read_arrays(std::ifstream& f, NetworkParams& p, const std::filesystem::path& path) {
  for (auto* arr : param_arrays(p)) {
    const std::uint64_t n = read_u64(f);
    if (n != arr->size())
      throw Error(Errc::IoError, "checkpoint array size mismatch in " + path.string());
    f.read(reinterpret_cast<char*>(arr->data()),
           static_cast<std::streamsize>(arr->size() * sizeof(double)));
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params,
                     const AdamState& adam, std::uint64_t rng_seed) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot write checkpoint " + path.string());
  f.write(kMagic, sizeof(kMagic));
  std::uint32_t version = kVersion;
  f.write(reinterpret_cast<const char*>(&version), sizeof(version));
  write_u64(f, rng_seed);
  write_u64(f, params.shape.variant == ModelVariant::EkfCnn ? 0 : 1);
  write_u64(f, params.shape.input_features);
  write_u64(f, params.shape.conv_filters);
  write_u64(f, params.shape.conv_kernel);
  write_u64(f, params.shape.pool_window);
  write_u64(f, params.shape.lstm_units);
  write_u64(f, params.shape.window_len);
  write_f64(f, params.shape.dropout_rate);
  write_u64(f, static_cast<std::uint64_t>(adam.step));
  write_arrays(f, params);
  write_arrays(f, adam.m);
  write_arrays(f, adam.v);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot open checkpoint " + path.string());
  char magic[8];
  f.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error(Errc::IoError, "bad checkpoint magic in " + path.string());
  std::uint32_t version = 0;
  f.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kVersion)
    throw Error(Errc::IoError, "unsupported checkpoint version in " + path.string());

  Checkpoint ckpt;
  ckpt.rng_seed = read_u64(f);
  NetworkShape shape;
  shape.variant = read_u64(f) == 0 ? ModelVariant::EkfCnn : ModelVariant::EkfCnnLstm;
  shape.input_features = read_u64(f);
  shape.conv_filters = read_u64(f);
  shape.conv_kernel = read_u64(f);
  shape.pool_window = read_u64(f);
  shape.lstm_units = read_u64(f);
  shape.window_len = read_u64(f);
  shape.dropout_rate = read_f64(f);
  const std::uint64_t adam_step = read_u64(f);

  Rng scratch(0);
  ckpt.params = init_network(shape, scratch);  // allocates the right shapes
  read_arrays(f, ckpt.params, path);
  ckpt.adam = init_adam(ckpt.params);
  ckpt.adam.step = static_cast<std::int64_t>(adam_step);
  read_arrays(f, ckpt.adam.m, path);
  read_arrays(f, ckpt.adam.v, path);
  if (!f) throw Error(Errc::IoError, "truncated checkpoint " + path.string());
  return ckpt;
}

}  // namespace battkit::nn
