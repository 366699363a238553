#include "icd9group/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "icd9group/errors.hpp"
#include "icd9group/rng.hpp"

namespace icd9group {

namespace {

constexpr double kProbClamp = 1e-7;

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string("non-finite values in ") + what);
}

struct ForwardCache {
  Eigen::MatrixXd fused;
  std::vector<Eigen::MatrixXd> z;  // pre-activations
  std::vector<Eigen::MatrixXd> h;  // inputs seen by each layer (h[0] = fused)
  Eigen::MatrixXd probs;
};

ForwardCache run_forward(const ModelParams& params, const Features& x,
                         const Eigen::MatrixXd& dropout_mask) {
  check_finite(x.x1, "input channel 1");
  if (params.hybrid) {
    if (x.x2.rows() != x.x1.rows()) throw DataError("hybrid forward needs both channels");
    check_finite(x.x2, "input channel 2");
  }

  ForwardCache cache;
  if (params.hybrid) {
    cache.fused = x.x1.array().rowwise() * params.gates.g1.transpose().array();
    cache.fused.array() += x.x2.array().rowwise() * params.gates.g2.transpose().array();
  } else {
    cache.fused = x.x1;
  }

  const auto& layers = params.layers;
  cache.z.resize(layers.size());
  cache.h.resize(layers.size());
  Eigen::MatrixXd current = cache.fused;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    cache.h[l] = current;
    cache.z[l].noalias() = current * layers[l].w.transpose();
    cache.z[l].rowwise() += layers[l].b.transpose();
    if (l + 1 < layers.size()) {
      current = cache.z[l].cwiseMax(0.0);  // ReLU
      if (l == 0 && dropout_mask.size() > 0) current.array() *= dropout_mask.array();
    } else {
      current = (1.0 / (1.0 + (-cache.z[l].array()).exp())).matrix();  // sigmoid
    }
  }
  cache.probs = std::move(current);
  return cache;
}

double loss_from_probs(const Eigen::MatrixXd& probs, const Eigen::MatrixXi& y) {
  const auto p = probs.array().max(kProbClamp).min(1.0 - kProbClamp);
  const auto yd = y.cast<double>().array();
  const double total = -(yd * p.log() + (1.0 - yd) * (1.0 - p).log()).sum();
  return total / static_cast<double>(probs.rows() * probs.cols());
}

}  // namespace

Scaler Scaler::fit(const Eigen::MatrixXd& train) {
  if (train.rows() == 0 || train.cols() == 0) throw DataError("scaler fit on empty matrix");
  Scaler s;
  s.col_min = train.colwise().minCoeff();
  s.col_max = train.colwise().maxCoeff();
  return s;
}

Eigen::MatrixXd Scaler::apply(const Eigen::MatrixXd& m) const {
  if (m.cols() != col_min.size()) throw DataError("scaler applied to mismatched column count");
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (long j = 0; j < m.cols(); ++j) {
    const double lo = col_min[j], hi = col_max[j];
    if (hi == lo) {
      out.col(j).setZero();
    } else {
      const double scale = 2.0 / (hi - lo);
      out.col(j) = ((m.col(j).array() - lo) * scale - 1.0).max(-1.0).min(1.0);
    }
  }
  return out;
}

ModelParams ModelParams::init(long input_width, bool hybrid, double dropout_rate, std::uint64_t seed) {
  if (input_width < 1) throw DataError("model input width must be >= 1");
  ModelParams p;
  p.hybrid = hybrid;
  p.dropout_rate = dropout_rate;
  if (hybrid) {
    p.gates.g1 = Eigen::VectorXd::Constant(input_width, 0.5);
    p.gates.g2 = Eigen::VectorXd::Constant(input_width, 0.5);
  }
  Rng rng(derive_seed(seed, "net-init"));
  long fan_in = input_width;
  for (long width : hidden_widths()) {
    DenseLayer layer;
    const double r = std::sqrt(6.0 / static_cast<double>(fan_in + width));
    layer.w.resize(width, fan_in);
    for (long i = 0; i < width; ++i) {
      for (long j = 0; j < fan_in; ++j) layer.w(i, j) = rng.uniform_real(-r, r);
    }
    layer.b = Eigen::VectorXd::Zero(width);
    p.layers.push_back(std::move(layer));
    fan_in = width;
  }
  return p;
}

Eigen::MatrixXd sample_dropout_mask(long rows, double rate, Rng& rng) {
  const long width = hidden_widths().front();
  Eigen::MatrixXd mask(rows, width);
  const double keep = 1.0 - rate;
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < width; ++j) {
      mask(i, j) = rng.uniform_real() < keep ? 1.0 / keep : 0.0;
    }
  }
  return mask;
}

Eigen::MatrixXd forward_batch(const ModelParams& params, const Features& x,
                              const Eigen::MatrixXd& dropout_mask) {
  return run_forward(params, x, dropout_mask).probs;
}

Eigen::VectorXd forward(const ModelParams& params, const Eigen::VectorXd& x1,
                        const Eigen::VectorXd& x2) {
  Features f;
  f.x1 = x1.transpose();
  if (x2.size() > 0) f.x2 = x2.transpose();
  return forward_batch(params, f).row(0).transpose();
}

double batch_loss(const ModelParams& params, const Features& x, const Eigen::MatrixXi& y,
                  const Eigen::MatrixXd& dropout_mask) {
  return loss_from_probs(run_forward(params, x, dropout_mask).probs, y);
}

namespace {

Gradients backprop_impl(const ModelParams& params, const Features& x, const Eigen::MatrixXi& y,
                        const Eigen::MatrixXd& dropout_mask, double* loss_out) {
  ForwardCache cache = run_forward(params, x, dropout_mask);
  if (loss_out) *loss_out = loss_from_probs(cache.probs, y);
  const auto& layers = params.layers;
  const long n_layers = static_cast<long>(layers.size());

  Gradients g;
  g.w.resize(n_layers);
  g.b.resize(n_layers);

  // Sigmoid + BCE shortcut: dL/dz_last = (p - y) / (B * L).
  Eigen::MatrixXd delta =
      (cache.probs - y.cast<double>()) / static_cast<double>(cache.probs.rows() * cache.probs.cols());
  for (long l = n_layers - 1; l >= 0; --l) {
    g.w[l].noalias() = delta.transpose() * cache.h[l];
    g.b[l] = delta.colwise().sum().transpose();
    if (l == 0) break;
    Eigen::MatrixXd back = delta * layers[l].w;  // gradient w.r.t. layer input
    if (l == 1 && dropout_mask.size() > 0) back.array() *= dropout_mask.array();
    delta = (cache.z[l - 1].array() > 0.0).cast<double>() * back.array();
  }

  if (params.hybrid) {
    const Eigen::MatrixXd d_fused = delta * layers[0].w;  // B x input_width
    g.g1 = (d_fused.array() * x.x1.array()).colwise().sum().transpose();
    g.g2 = (d_fused.array() * x.x2.array()).colwise().sum().transpose();
  }
  return g;
}

}  // namespace

Gradients backprop(const ModelParams& params, const Features& x, const Eigen::MatrixXi& y,
                   const Eigen::MatrixXd& dropout_mask) {
  return backprop_impl(params, x, y, dropout_mask, nullptr);
}

namespace {

// One parameter tensor viewed as flat storage for finite-difference probing.
struct TensorView {
  double* data;
  long size;
  const double* grad;
};

std::vector<TensorView> tensor_views(ModelParams& p, const Gradients& g) {
  std::vector<TensorView> views;
  if (p.hybrid) {
    views.push_back({p.gates.g1.data(), p.gates.g1.size(), g.g1.data()});
    views.push_back({p.gates.g2.data(), p.gates.g2.size(), g.g2.data()});
  }
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    views.push_back({p.layers[l].w.data(), p.layers[l].w.size(), g.w[l].data()});
    views.push_back({p.layers[l].b.data(), p.layers[l].b.size(), g.b[l].data()});
  }
  return views;
}

}  // namespace

double fd_max_relative_error(const ModelParams& params, const Features& x, const Eigen::MatrixXi& y,
                             const Gradients& grads, const Eigen::MatrixXd& dropout_mask,
                             double epsilon, long samples_per_tensor, std::uint64_t seed) {
  ModelParams probe = params;  // local copy is mutated and restored per entry
  Gradients grads_copy = grads;
  auto views = tensor_views(probe, grads_copy);
  Rng rng(derive_seed(seed, "gradcheck-sample"));
  double max_rel = 0.0;
  for (const auto& view : views) {
    const long samples = std::min(samples_per_tensor, view.size);
    for (long s = 0; s < samples; ++s) {
      const long idx = static_cast<long>(rng.uniform_int(0, view.size - 1));
      const double saved = view.data[idx];
      view.data[idx] = saved + epsilon;
      const double up = batch_loss(probe, x, y, dropout_mask);
      view.data[idx] = saved - epsilon;
      const double down = batch_loss(probe, x, y, dropout_mask);
      view.data[idx] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double analytic = view.grad[idx];
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

double gradient_check(const ModelParams& params, const Features& x, const Eigen::MatrixXi& y,
                      double epsilon, long samples_per_tensor, std::uint64_t seed) {
  Eigen::MatrixXd mask;
  if (params.dropout_rate > 0) {
    Rng mask_rng(derive_seed(seed, "gradcheck-mask"));
    mask = sample_dropout_mask(x.rows(), params.dropout_rate, mask_rng);
  }
  const Gradients grads = backprop(params, x, y, mask);
  return fd_max_relative_error(params, x, y, grads, mask, epsilon, samples_per_tensor, seed);
}

void sgd_step(ModelParams& params, const Features& x, const Eigen::MatrixXi& y, double learning_rate,
              const Eigen::MatrixXd& dropout_mask) {
  const Gradients g = backprop(params, x, y, dropout_mask);
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    params.layers[l].w -= learning_rate * g.w[l];
    params.layers[l].b -= learning_rate * g.b[l];
  }
  if (params.hybrid) {
    params.gates.g1 -= learning_rate * g.g1;
    params.gates.g2 -= learning_rate * g.g2;
  }
}

TrainResult train_model(const Features& train_x, const Eigen::MatrixXi& train_y,
                        const Features& val_x, const Eigen::MatrixXi& val_y,
                        const TrainConfig& config) {
  const long n = train_x.rows();
  if (n == 0) throw DataError("train_model on empty dataset");
  if (train_y.rows() != n) throw DataError("train_model targets row mismatch");
  if (config.epochs < 1 || config.learning_rate <= 0) {
    throw DataError("train config needs epochs >= 1 and learning_rate > 0");
  }
  const bool hybrid = train_x.x2.rows() > 0;

  TrainResult result;
  result.params = ModelParams::init(train_x.x1.cols(), hybrid, config.dropout_rate,
                                    derive_seed(config.seed, "model"));
  ModelParams& params = result.params;

  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
  Rng dropout_rng(derive_seed(config.seed, "dropout"));
  std::vector<long> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  const int batch_size = std::max(1, config.batch_size);
  Features batch;
  Eigen::MatrixXi batch_y;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates, deterministic from the shuffle stream.
    for (long i = n - 1; i > 0; --i) {
      const long j = static_cast<long>(shuffle_rng.uniform_int(0, i));
      std::swap(perm[i], perm[j]);
    }
    double epoch_loss_sum = 0;
    long epoch_examples = 0;
    for (long start = 0; start < n; start += batch_size) {
      const long b = std::min<long>(batch_size, n - start);
      batch.x1.resize(b, train_x.x1.cols());
      if (hybrid) batch.x2.resize(b, train_x.x2.cols());
      batch_y.resize(b, train_y.cols());
      for (long i = 0; i < b; ++i) {
        const long row = perm[start + i];
        batch.x1.row(i) = train_x.x1.row(row);
        if (hybrid) batch.x2.row(i) = train_x.x2.row(row);
        batch_y.row(i) = train_y.row(row);
      }
      Eigen::MatrixXd mask;
      if (config.dropout_rate > 0) mask = sample_dropout_mask(b, config.dropout_rate, dropout_rng);

      double loss = 0;
      const Gradients g = backprop_impl(params, batch, batch_y, mask, &loss);
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch + 1) +
                           ", batch starting at " + std::to_string(start));
      }
      epoch_loss_sum += loss * static_cast<double>(b);
      epoch_examples += b;
      for (std::size_t l = 0; l < params.layers.size(); ++l) {
        params.layers[l].w -= config.learning_rate * g.w[l];
        params.layers[l].b -= config.learning_rate * g.b[l];
      }
      if (params.hybrid) {
        params.gates.g1 -= config.learning_rate * g.g1;
        params.gates.g2 -= config.learning_rate * g.g2;
      }
    }
    EpochStats stats;
    stats.train_loss = epoch_loss_sum / static_cast<double>(epoch_examples);
    stats.val_loss = val_x.rows() > 0 ? batch_loss(params, val_x, val_y) : 0.0;
    if (!std::isfinite(stats.val_loss)) {
      throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch + 1));
    }
    result.history.push_back(stats);
  }
  return result;
}

Eigen::MatrixXd predict_scores(const ModelParams& params, const Features& x) {
  if (x.x1.cols() != params.input_width()) {
    throw DataError("predict_scores: feature width " + std::to_string(x.x1.cols()) +
                    " does not match model input width " + std::to_string(params.input_width()));
  }
  return forward_batch(params, x);
}

// ---------------------------------------------------------------------------
// Checkpoint container.
// ---------------------------------------------------------------------------

namespace {

constexpr int kCheckpointVersion = 1;

nlohmann::json::binary_t tensor_bytes(const double* data, long count) {
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(count) * sizeof(double));
  std::memcpy(bytes.data(), data, bytes.size());
  return nlohmann::json::binary_t(std::move(bytes));
}

void bytes_to_tensor(const nlohmann::json& j, double* data, long count) {
  const auto& bytes = j.get_binary();
  if (bytes.size() != static_cast<std::size_t>(count) * sizeof(double)) {
    throw DataError("checkpoint tensor has unexpected byte length");
  }
  std::memcpy(data, bytes.data(), bytes.size());
}

nlohmann::json scaler_to_json(const Scaler& s) {
  nlohmann::json j;
  j["cols"] = s.col_min.size();
  j["min"] = tensor_bytes(s.col_min.data(), s.col_min.size());
  j["max"] = tensor_bytes(s.col_max.data(), s.col_max.size());
  return j;
}

Scaler scaler_from_json(const nlohmann::json& j) {
  Scaler s;
  const long cols = j.at("cols").get<long>();
  s.col_min.resize(cols);
  s.col_max.resize(cols);
  bytes_to_tensor(j.at("min"), s.col_min.data(), cols);
  bytes_to_tensor(j.at("max"), s.col_max.data(), cols);
  return s;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const nlohmann::json& meta, const std::string& path) {
  nlohmann::json j;
  j["format"] = "icd9group-checkpoint";
  j["version"] = kCheckpointVersion;
  j["meta"] = meta;

  nlohmann::json model;
  model["hybrid"] = params.hybrid;
  model["dropout_rate"] = params.dropout_rate;
  model["input_width"] = params.input_width();
  if (params.hybrid) {
    model["g1"] = tensor_bytes(params.gates.g1.data(), params.gates.g1.size());
    model["g2"] = tensor_bytes(params.gates.g2.data(), params.gates.g2.size());
  }
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : params.layers) {
    nlohmann::json l;
    l["rows"] = layer.w.rows();
    l["cols"] = layer.w.cols();
    l["w"] = tensor_bytes(layer.w.data(), layer.w.size());
    l["b"] = tensor_bytes(layer.b.data(), layer.b.size());
    layers.push_back(std::move(l));
  }
  model["layers"] = std::move(layers);
  nlohmann::json scalers = nlohmann::json::array();
  for (const auto& s : params.scalers) scalers.push_back(scaler_to_json(s));
  model["scalers"] = std::move(scalers);
  j["model"] = std::move(model);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  const auto cbor = nlohmann::json::to_cbor(j);
  out.write(reinterpret_cast<const char*>(cbor.data()), static_cast<std::streamsize>(cbor.size()));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  nlohmann::json j;
  try {
    j = nlohmann::json::from_cbor(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("corrupt checkpoint " + path + ": " + e.what());
  }
  if (j.value("format", "") != "icd9group-checkpoint") {
    throw DataError("not a checkpoint file: " + path);
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version in " + path);
  }

  Checkpoint ckpt;
  ckpt.meta = j.value("meta", nlohmann::json::object());
  const auto& model = j.at("model");
  ckpt.params.hybrid = model.at("hybrid").get<bool>();
  ckpt.params.dropout_rate = model.at("dropout_rate").get<double>();
  const long input_width = model.at("input_width").get<long>();
  if (ckpt.params.hybrid) {
    ckpt.params.gates.g1.resize(input_width);
    ckpt.params.gates.g2.resize(input_width);
    bytes_to_tensor(model.at("g1"), ckpt.params.gates.g1.data(), input_width);
    bytes_to_tensor(model.at("g2"), ckpt.params.gates.g2.data(), input_width);
  }
  for (const auto& l : model.at("layers")) {
    DenseLayer layer;
    const long rows = l.at("rows").get<long>();
    const long cols = l.at("cols").get<long>();
    layer.w.resize(rows, cols);
    layer.b.resize(rows);
    bytes_to_tensor(l.at("w"), layer.w.data(), rows * cols);
    bytes_to_tensor(l.at("b"), layer.b.data(), rows);
    ckpt.params.layers.push_back(std::move(layer));
  }
  for (const auto& s : model.at("scalers")) ckpt.params.scalers.push_back(scaler_from_json(s));
  return ckpt;
}

}  // namespace icd9group
