/*
 * network.hpp
 *
 * The capacity predictor: Conv1D -> ReLU -> max pool -> LSTM x2 -> linear
 * head, with dropout between recurrent layers, exact analytic gradients
 * (backprop through time), Adam, and a bit-exact binary checkpoint format.
 *
 * The EkfCnn variant drops the LSTM stack: conv -> ReLU -> pool -> flatten
 * -> linear head; its head is sized for a fixed window length.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "battkit/layers.hpp"
#include "battkit/rng.hpp"
#include "battkit/tensor.hpp"

namespace battkit::nn {

enum class ModelVariant { EkfCnn, EkfCnnLstm };
enum class RunMode { Train, Infer };

std::string to_string(ModelVariant v);
ModelVariant variant_from_string(const std::string& s);

struct NetworkShape {
  ModelVariant variant = ModelVariant::EkfCnnLstm;
  std::size_t input_features = 5;
  std::size_t conv_filters = 64;
  std::size_t conv_kernel = 1;
  std::size_t pool_window = 1;
  std::size_t lstm_units = 32;
  std::size_t window_len = 1;  // head sizing for the EkfCnn variant
  double dropout_rate = 0.2;
};

struct NetworkParams {
  NetworkShape shape;
  Conv1dLayer conv;
  LstmLayer lstm1, lstm2;
  DenseLayer head;
  double dropout_rate = 0.2;

  std::size_t parameter_count() const;
  void check_chain() const;  // layer interface dimensions must chain
};

NetworkParams init_network(const NetworkShape& shape, Rng& rng);
NetworkParams zeros_like(const NetworkParams& params);

// Intermediates retained by a Train/Infer forward pass for the matching
// backward pass.
struct ForwardCache {
  RunMode mode = RunMode::Infer;
  std::uint64_t params_stamp = 0;
  Tensor input;
  Tensor conv_out;                  // pre-activation
  Tensor conv_act;                  // after ReLU
  std::vector<std::size_t> pool_argmax;
  Tensor pooled;
  // LSTM path
  std::vector<LstmGateCache> lstm1_steps, lstm2_steps;
  Tensor l1_drop;                   // relu(h1) after dropout, [time, H]
  std::vector<double> drop1_mask, drop2_mask;
  Tensor l2_drop;
  // head
  std::vector<double> head_in;
  double prediction = 0.0;
};

// Runs the network over one window [time, features] and returns the scalar
// prediction plus the cache for backprop. Dropout draws from rng only in
// Train mode (inverted scaling, so Infer needs no rescale).
double network_forward(const NetworkParams& params, const Tensor& window, RunMode mode, Rng& rng,
                       ForwardCache& cache);

// Convenience overload when no backward pass is needed.
double network_forward(const NetworkParams& params, const Tensor& window, RunMode mode, Rng& rng);

// Exact gradient of (d_prediction * prediction) w.r.t. every parameter,
// including BPTT through both LSTM layers. The cache must come from a
// forward pass over the same parameters (StaleCache otherwise).
NetworkParams network_backward(const NetworkParams& params, const ForwardCache& cache,
                               double d_prediction);

// Accumulates src gradients into dst (same shapes).
void accumulate(NetworkParams& dst, const NetworkParams& src);
void scale(NetworkParams& params, double factor);

struct AdamState {
  NetworkParams m;  // first moments
  NetworkParams v;  // second moments
  std::int64_t step = 0;
};

AdamState init_adam(const NetworkParams& params);

// Standard Adam with bias correction.
void adam_update(NetworkParams& params, const NetworkParams& gradients, AdamState& state,
                 double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// Binary checkpoint: magic "BKCKPT", format version, shape fields, RNG
// seed, flat parameter arrays, and optimizer moments. Round-trips are
// bit-exact.
void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params,
                     const AdamState& adam, std::uint64_t rng_seed);
struct Checkpoint {
  NetworkParams params;
  AdamState adam;
  std::uint64_t rng_seed = 0;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace battkit::nn
