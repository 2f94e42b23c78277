#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polyflow/linalg.hpp"

namespace polyflow::nn {

// Per-feature affine input map, x_std = (x - shift) / scale. Trained models
// carry the statistics of their training set; the default is the identity.
struct InputScaler {
  Vec shift;
  Vec scale;

  bool is_identity() const;
  Vec apply(const Vec& x) const;
  static InputScaler identity(int dim);
};

// Scalar-output feedforward network with rectified hidden layers.
struct MlpParams {
  std::vector<Mat> w;  // w[l] is N_l x N_{l-1}; w[0] acts on the scaled input
  std::vector<Vec> b;
  Vec w_out;
  double b_out = 0.0;
  InputScaler scaler;
  std::vector<std::string> feature_names;

  int input_dim() const { return w.empty() ? static_cast<int>(w_out.size()) : static_cast<int>(w.front().cols()); }
  int hidden_layers() const { return static_cast<int>(w.size()); }
  int layer_width(int l) const { return static_cast<int>(w[static_cast<size_t>(l)].rows()); }
  int total_neurons() const;
  void check_shapes() const;  // throws on an inconsistent shape chain
};

struct ForwardTrace {
  Vec x_std;
  std::vector<Vec> z;  // pre-activations per hidden layer
  std::vector<Vec> s;  // activations per hidden layer
  double output = 0.0;
};

double forward(const MlpParams& p, const Vec& x);
ForwardTrace forward_trace(const MlpParams& p, const Vec& x);

struct TrainConfig {
  int epochs = 200;
  int batch = 128;
  double learning_rate = 3e-3;
  uint64_t seed = 1;
  double validation_fraction = 0.1;
};

struct TrainResult {
  MlpParams params;             // best-validation snapshot
  std::vector<double> trace;    // per-epoch training MSE
  double initial_val_mse = 0.0;
  double best_val_mse = 0.0;
};

// Mini-batch gradient training on mean squared error. Inputs are scaled to
// zero mean and unit range using the training split before any arithmetic.
TrainResult train(const std::vector<Vec>& xs, const std::vector<double>& ys,
                  const std::vector<int>& hidden_sizes, const TrainConfig& cfg);

// Analytic output gradient w.r.t. every parameter against central finite
// differences; returns the largest relative error. kink_warning is set when
// some pre-activation sits within 10*eps of zero.
double gradient_check(const MlpParams& p, const Vec& x, double eps, bool* kink_warning = nullptr);

}  // namespace polyflow::nn
