#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace icd9group {

/// Per-column [-1, 1] standardization fitted on the training split only.
/// Constant columns map to 0; out-of-range inputs clamp to [-1, 1].
struct Scaler {
  Eigen::VectorXd col_min;
  Eigen::VectorXd col_max;

  static Scaler fit(const Eigen::MatrixXd& train);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& m) const;
};

/// Per-dimension trainable gates: fused = g1 .* x1 + g2 .* x2.
/// Initialized at 0.5 so the starting fusion is the plain average.
struct FusionGates {
  Eigen::VectorXd g1;
  Eigen::VectorXd g2;
};

struct DenseLayer {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;
};

/// Dense stack widths after the (optional) fusion layer.
inline const std::vector<long>& hidden_widths() {
  static const std::vector<long> w = {1024, 512, 256, 128, 20};
  return w;
}

struct ModelParams {
  bool hybrid = false;  // gates present and two input channels expected
  FusionGates gates;
  std::vector<DenseLayer> layers;  // input->1024->512->256->128->20
  double dropout_rate = 0.2;       // applied after the 1024 layer only
  std::vector<Scaler> scalers;     // one per input channel

  long input_width() const { return layers.empty() ? 0 : layers.front().w.cols(); }

  /// Seeded init: weights uniform in +-sqrt(6/(fan_in+fan_out)), biases
  /// zero, gates at 0.5.
  static ModelParams init(long input_width, bool hybrid, double dropout_rate, std::uint64_t seed);
};

/// Input channels for one dataset split. x2 stays empty (0 x 0) except in
/// hybrid mode, where both channels must have identical row counts.
struct Features {
  Eigen::MatrixXd x1;
  Eigen::MatrixXd x2;

  long rows() const { return x1.rows(); }
};

/// Dropout mask for the first hidden layer: entries are 0 or 1/(1-rate).
/// An empty mask disables dropout (inference path).
Eigen::MatrixXd sample_dropout_mask(long rows, double rate, class Rng& rng);

/// Batch forward pass to output probabilities in (0,1).
/// Throws NumericError on non-finite input.
Eigen::MatrixXd forward_batch(const ModelParams& params, const Features& x,
                              const Eigen::MatrixXd& dropout_mask = Eigen::MatrixXd());

/// Single-sample convenience wrapper (inference path, no dropout).
Eigen::VectorXd forward(const ModelParams& params, const Eigen::VectorXd& x1,
                        const Eigen::VectorXd& x2 = Eigen::VectorXd());

/// Mean binary cross-entropy over batch and labels, probabilities clamped
/// to [1e-7, 1 - 1e-7].
double batch_loss(const ModelParams& params, const Features& x, const Eigen::MatrixXi& y,
                  const Eigen::MatrixXd& dropout_mask = Eigen::MatrixXd());

struct Gradients {
  Eigen::VectorXd g1;
  Eigen::VectorXd g2;
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
};

/// Analytic gradient of batch_loss with respect to every trainable tensor
/// (dense weights, biases, and fusion gates when present).
Gradients backprop(const ModelParams& params, const Features& x, const Eigen::MatrixXi& y,
                   const Eigen::MatrixXd& dropout_mask = Eigen::MatrixXd());

/// Central finite differences of batch_loss against `grads` on a seeded
/// sample of every parameter tensor; returns the max relative error
/// |a - n| / max(|a|, |n|, 1e-8). Used directly by corruption tests.
double fd_max_relative_error(const ModelParams& params, const Features& x, const Eigen::MatrixXi& y,
                             const Gradients& grads, const Eigen::MatrixXd& dropout_mask,
                             double epsilon, long samples_per_tensor, std::uint64_t seed);

/// backprop vs finite differences, sharing one frozen dropout mask so the
/// dropout path is exercised deterministically.
double gradient_check(const ModelParams& params, const Features& x, const Eigen::MatrixXi& y,
                      double epsilon = 1e-4, long samples_per_tensor = 8, std::uint64_t seed = 1);

struct TrainConfig {
  double learning_rate = 0.01;  // plain SGD, no momentum
  int epochs = 50;
  int batch_size = 32;
  double dropout_rate = 0.2;
  double validation_fraction = 0.2;  // used by the pipeline's admission split
  std::uint64_t seed = 1;
};

struct EpochStats {
  double train_loss = 0.0;  // running mean of batch losses seen this epoch
  double val_loss = 0.0;    // clean forward on the validation split
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> history;
};

/// One SGD step on a batch; exposed for the descent property tests.
void sgd_step(ModelParams& params, const Features& x, const Eigen::MatrixXi& y, double learning_rate,
              const Eigen::MatrixXd& dropout_mask = Eigen::MatrixXd());

/// Seeded, single-threaded training loop: epoch shuffling, minibatches,
/// dropout after the 1024 layer, plain SGD on dense weights and gates.
/// Throws NumericError (with epoch/batch diagnostics) on non-finite loss.
TrainResult train_model(const Features& train_x, const Eigen::MatrixXi& train_y,
                        const Features& val_x, const Eigen::MatrixXi& val_y,
                        const TrainConfig& config);

/// predict_scores: clean forward, row order preserved.
Eigen::MatrixXd predict_scores(const ModelParams& params, const Features& x);

/// Versioned self-describing checkpoint (CBOR container, raw little-endian
/// float64 tensors). Round-trips bit-for-bit.
void save_checkpoint(const ModelParams& params, const nlohmann::json& meta, const std::string& path);

struct Checkpoint {
  ModelParams params;
  nlohmann::json meta;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace icd9group
