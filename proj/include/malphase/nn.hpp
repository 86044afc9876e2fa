#pragma once

// Small dense feedforward engine: forward/backward passes, AdaMax, mini-batch
// training and grid search. Batches are column-major: one sample per column.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "malphase/common.hpp"

namespace malphase::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { kRelu, kSelu, kSigmoid, kSoftmax, kIdentity };

// MSE is the mean over output components of the squared error, with no 1/2.
enum class Loss { kMeanSquaredError, kCategoricalCrossEntropy, kBinaryCrossEntropy };

inline constexpr double kSeluAlpha = 1.6732632423543772;
inline constexpr double kSeluLambda = 1.0507009873554805;

inline std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kSelu: return "selu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kSoftmax: return "softmax";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

inline Activation activation_from_name(std::string_view s) {
  for (auto a : {Activation::kRelu, Activation::kSelu, Activation::kSigmoid, Activation::kSoftmax,
                 Activation::kIdentity})
    if (activation_name(a) == s) return a;
  throw InputError("unknown activation '" + std::string(s) + "'");
}

inline std::string_view loss_name(Loss l) {
  switch (l) {
    case Loss::kMeanSquaredError: return "mean_squared_error";
    case Loss::kCategoricalCrossEntropy: return "categorical_cross_entropy";
    case Loss::kBinaryCrossEntropy: return "binary_cross_entropy";
  }
  return "?";
}

inline Loss loss_from_name(std::string_view s) {
  for (auto l : {Loss::kMeanSquaredError, Loss::kCategoricalCrossEntropy, Loss::kBinaryCrossEntropy})
    if (loss_name(l) == s) return l;
  throw InputError("unknown loss '" + std::string(s) + "'");
}

namespace detail {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

inline void activate(Activation a, const Matrix& z, Matrix& out) {
  switch (a) {
    case Activation::kRelu: out = z.cwiseMax(0.0); return;
    case Activation::kSelu:
      out = z.unaryExpr([](double v) {
        return v > 0 ? kSeluLambda * v : kSeluLambda * kSeluAlpha * std::expm1(v);
      });
      return;
    case Activation::kSigmoid: out = z.unaryExpr([](double v) { return sigmoid(v); }); return;
    case Activation::kSoftmax: {
      out.resize(z.rows(), z.cols());
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        const double m = z.col(c).maxCoeff();
        out.col(c) = (z.col(c).array() - m).exp().matrix();
        out.col(c) /= out.col(c).sum();
      }
      return;
    }
    case Activation::kIdentity: out = z; return;
  }
}

// dL/dz given dL/da for an activation, using its cached input and output.
inline Matrix activation_backward(Activation a, const Matrix& z, const Matrix& out, const Matrix& g) {
  switch (a) {
    case Activation::kRelu: return (z.array() > 0.0).cast<double>().matrix().cwiseProduct(g);
    case Activation::kSelu:
      return z.binaryExpr(g, [](double v, double gv) {
        return gv * (v > 0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(v));
      });
    case Activation::kSigmoid:
      return (out.array() * (1.0 - out.array()) * g.array()).matrix();
    case Activation::kSoftmax: {
      Matrix d(g.rows(), g.cols());
      for (Eigen::Index c = 0; c < g.cols(); ++c) {
        const double dot = out.col(c).dot(g.col(c));
        d.col(c) = (out.col(c).array() * (g.col(c).array() - dot)).matrix();
      }
      return d;
    }
    case Activation::kIdentity: return g;
  }
  return g;
}

}  // namespace detail

struct DenseLayer {
  Matrix weights;  // out x in
  Vector biases;   // out
  Activation activation = Activation::kIdentity;

  std::size_t inputs() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t outputs() const { return static_cast<std::size_t>(weights.rows()); }
  bool operator==(const DenseLayer& o) const {
    return activation == o.activation && weights.rows() == o.weights.rows() &&
           weights.cols() == o.weights.cols() && weights == o.weights && biases == o.biases;
  }
};

struct LayerSpec {
  std::size_t units;
  Activation activation;
};

struct LayerGradient {
  Matrix weights;
  Vector biases;
};

using Gradients = std::vector<LayerGradient>;

/// Cached activations of a forward pass, consumed by backward().
struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre;   // z per layer
  std::vector<Matrix> post;  // activation per layer
  const Matrix& output() const { return post.back(); }
};

class Network {
 public:
  Network() = default;

  Network(std::vector<DenseLayer> layers, Loss loss) : layers_(std::move(layers)), loss_(loss) {
    validate();
  }

  /// Glorot-uniform weights, zero biases.
  static Network build(std::size_t inputs, std::span<const LayerSpec> specs, Loss loss,
                       std::uint64_t seed) {
    Rng rng(seed);
    std::vector<DenseLayer> layers;
    std::size_t fan_in = inputs;
    for (const auto& s : specs) {
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + s.units));
      std::uniform_real_distribution<double> dist(-limit, limit);
      DenseLayer layer;
      layer.weights.resize(static_cast<Eigen::Index>(s.units), static_cast<Eigen::Index>(fan_in));
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = dist(rng);
      layer.biases = Vector::Zero(static_cast<Eigen::Index>(s.units));
      layer.activation = s.activation;
      layers.push_back(std::move(layer));
      fan_in = s.units;
    }
    return Network(std::move(layers), loss);
  }

  static Network build(std::size_t inputs, std::initializer_list<LayerSpec> specs, Loss loss,
                       std::uint64_t seed) {
    return build(inputs, std::span<const LayerSpec>(specs.begin(), specs.size()), loss, seed);
  }

  std::size_t input_size() const { return layers_.empty() ? 0 : layers_.front().inputs(); }
  std::size_t output_size() const { return layers_.empty() ? 0 : layers_.back().outputs(); }
  Loss loss() const { return loss_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  std::size_t num_parameters() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.biases.size());
    return n;
  }

  bool all_finite() const {
    for (const auto& l : layers_)
      if (!l.weights.allFinite() || !l.biases.allFinite()) return false;
    return true;
  }

  ForwardCache forward_cached(const Matrix& input) const {
    check_input(input);
    ForwardCache cache;
    cache.input = input;
    cache.pre.resize(layers_.size());
    cache.post.resize(layers_.size());
    const Matrix* a = &cache.input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      cache.pre[i].noalias() = l.weights * *a;
      cache.pre[i].colwise() += l.biases;
      detail::activate(l.activation, cache.pre[i], cache.post[i]);
      a = &cache.post[i];
    }
    return cache;
  }

  Matrix forward(const Matrix& input) const {
    check_input(input);
    Matrix a = input;
    Matrix z;
    for (const auto& l : layers_) {
      z.noalias() = l.weights * a;
      z.colwise() += l.biases;
      detail::activate(l.activation, z, a);
    }
    return a;
  }

  Vector forward(const Vector& input) const { return forward(Matrix(input)).col(0); }

  std::vector<double> predict(std::span<const double> input) const {
    Eigen::Map<const Vector> x(input.data(), static_cast<Eigen::Index>(input.size()));
    if (input.size() != input_size())
      throw InputError("network input has " + std::to_string(input.size()) + " values, expected " +
                       std::to_string(input_size()));
    Vector y = forward(Vector(x));
    return {y.data(), y.data() + y.size()};
  }

  /// Per-sample losses for a cached forward pass.
  Vector sample_losses(const ForwardCache& cache, const Matrix& targets) const {
    check_targets(cache, targets);
    const Matrix& z = cache.pre.back();
    const Matrix& y_hat = cache.output();
    const double n_out = static_cast<double>(targets.rows());
    Vector out(targets.cols());
    for (Eigen::Index c = 0; c < targets.cols(); ++c) {
      switch (loss_) {
        case Loss::kMeanSquaredError:
          out(c) = (y_hat.col(c) - targets.col(c)).squaredNorm() / n_out;
          break;
        case Loss::kCategoricalCrossEntropy: {
          const double m = z.col(c).maxCoeff();
          const double lse = m + std::log((z.col(c).array() - m).exp().sum());
          out(c) = -(targets.col(c).array() * (z.col(c).array() - lse)).sum();
          break;
        }
        case Loss::kBinaryCrossEntropy: {
          double s = 0;
          for (Eigen::Index r = 0; r < z.rows(); ++r)
            s += detail::softplus(z(r, c)) - targets(r, c) * z(r, c);
          out(c) = s / n_out;
          break;
        }
      }
    }
    return out;
  }

  double loss(const Matrix& input, const Matrix& targets) const {
    return sample_losses(forward_cached(input), targets).mean();
  }

  /// Exact gradients of the batch-mean loss with respect to every parameter.
  Gradients backward(const ForwardCache& cache, const Matrix& targets) const {
    check_targets(cache, targets);
    const double batch = static_cast<double>(targets.cols());
    const double n_out = static_cast<double>(targets.rows());
    const Matrix& y_hat = cache.output();

    Matrix delta;
    switch (loss_) {
      case Loss::kMeanSquaredError: {
        Matrix g = (2.0 / (n_out * batch)) * (y_hat - targets);
        delta = detail::activation_backward(layers_.back().activation, cache.pre.back(), y_hat, g);
        break;
      }
      case Loss::kCategoricalCrossEntropy: {
        const Eigen::RowVectorXd mass = targets.colwise().sum();
        delta = (y_hat.array().rowwise() * mass.array()).matrix() - targets;
        delta /= batch;
        break;
      }
      case Loss::kBinaryCrossEntropy:
        delta = (y_hat - targets) / (n_out * batch);
        break;
    }

    Gradients grads(layers_.size());
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const Matrix& a_prev = i == 0 ? cache.input : cache.post[i - 1];
      grads[i].weights.noalias() = delta * a_prev.transpose();
      grads[i].biases = delta.rowwise().sum();
      if (i > 0) {
        Matrix g;
        g.noalias() = layers_[i].weights.transpose() * delta;
        delta = detail::activation_backward(layers_[i - 1].activation, cache.pre[i - 1],
                                            cache.post[i - 1], g);
      }
    }
    return grads;
  }

  bool operator==(const Network& o) const { return loss_ == o.loss_ && layers_ == o.layers_; }

  nlohmann::json to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : layers_) {
      std::vector<double> w;
      w.reserve(static_cast<std::size_t>(l.weights.size()));
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
      layers.push_back({{"inputs", l.inputs()},
                        {"outputs", l.outputs()},
                        {"activation", activation_name(l.activation)},
                        {"weights", w},
                        {"biases", std::vector<double>(l.biases.data(), l.biases.data() + l.biases.size())}});
    }
    return {{"loss", loss_name(loss_)}, {"layers", layers}};
  }

  static Network from_json(const nlohmann::json& j) {
    std::vector<DenseLayer> layers;
    for (const auto& lj : j.at("layers")) {
      const auto in = lj.at("inputs").get<Eigen::Index>();
      const auto out = lj.at("outputs").get<Eigen::Index>();
      const auto w = lj.at("weights").get<std::vector<double>>();
      const auto b = lj.at("biases").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(w.size()) != in * out || static_cast<Eigen::Index>(b.size()) != out)
        throw InputError("model layer arrays do not match declared dimensions");
      DenseLayer l;
      l.activation = activation_from_name(lj.at("activation").get<std::string>());
      l.weights.resize(out, in);
      for (Eigen::Index r = 0; r < out; ++r)
        for (Eigen::Index c = 0; c < in; ++c) l.weights(r, c) = w[static_cast<std::size_t>(r * in + c)];
      l.biases = Eigen::Map<const Vector>(b.data(), out);
      layers.push_back(std::move(l));
    }
    return Network(std::move(layers), loss_from_name(j.at("loss").get<std::string>()));
  }

 private:
  void validate() const {
    if (layers_.empty()) throw InputError("network has no layers");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      if (l.biases.size() != l.weights.rows())
        throw InputError("layer " + std::to_string(i) + ": bias size does not match outputs");
      if (i > 0 && layers_[i - 1].outputs() != l.inputs())
        throw InputError("layer " + std::to_string(i) + " expects " + std::to_string(l.inputs()) +
                         " inputs but previous layer has " + std::to_string(layers_[i - 1].outputs()));
    }
    const auto out_act = layers_.back().activation;
    if (loss_ == Loss::kCategoricalCrossEntropy && out_act != Activation::kSoftmax)
      throw InputError("categorical cross-entropy requires a softmax output layer");
    if (loss_ == Loss::kBinaryCrossEntropy && out_act != Activation::kSigmoid)
      throw InputError("binary cross-entropy requires a sigmoid output layer");
  }

  void check_input(const Matrix& input) const {
    if (static_cast<std::size_t>(input.rows()) != input_size())
      throw InputError("network input has " + std::to_string(input.rows()) + " rows, expected " +
                       std::to_string(input_size()));
  }

  void check_targets(const ForwardCache& cache, const Matrix& targets) const {
    if (static_cast<std::size_t>(targets.rows()) != output_size() ||
        targets.cols() != cache.output().cols())
      throw InputError("target shape " + std::to_string(targets.rows()) + "x" +
                       std::to_string(targets.cols()) + " does not match network output " +
                       std::to_string(output_size()) + "x" + std::to_string(cache.output().cols()));
  }

  std::vector<DenseLayer> layers_;
  Loss loss_ = Loss::kMeanSquaredError;
};

struct TrainConfig {
  std::size_t batch_size = 80;
  std::size_t epochs = 20;
  double learning_rate = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t shuffle_seed = 0;

  void validate() const {
    if (batch_size < 1) throw InputError("batch_size must be >= 1");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
      throw InputError("AdaMax betas must lie in [0, 1)");
    if (!(learning_rate > 0)) throw InputError("learning_rate must be > 0");
    if (!(epsilon > 0)) throw InputError("epsilon must be > 0");
  }

  nlohmann::json to_json() const {
    return {{"batch_size", batch_size}, {"epochs", epochs},  {"learning_rate", learning_rate},
            {"beta1", beta1},           {"beta2", beta2},    {"epsilon", epsilon},
            {"shuffle_seed", shuffle_seed}};
  }

  static TrainConfig from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.shuffle_seed = j.value("shuffle_seed", c.shuffle_seed);
    c.validate();
    return c;
  }
};

struct AdamaxState {
  std::vector<double> m;  // first moment
  std::vector<double> u;  // exponentially weighted infinity norm
  std::uint64_t t = 0;
};

/// One AdaMax update in place:
///   m <- b1 m + (1 - b1) g,  u <- max(b2 u, |g|),
///   p <- p - lr / (1 - b1^t) * m / (u + eps)
inline void adamax_step(std::span<double> params, std::span<const double> grads, AdamaxState& state,
                        const TrainConfig& config) {
  if (params.size() != grads.size()) throw InputError("adamax_step: parameter/gradient size mismatch");
  if (state.m.empty() && state.u.empty()) {
    state.m.assign(params.size(), 0.0);
    state.u.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.u.size() != params.size())
    throw InputError("adamax_step: optimizer state size mismatch");
  ++state.t;
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double step = config.learning_rate / (1.0 - std::pow(b1, static_cast<double>(state.t)));
  const double eps = config.epsilon;
  double* m = state.m.data();
  double* u = state.u.data();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    u[i] = std::max(b2 * u[i], std::abs(g));
    params[i] -= step * m[i] / (u[i] + eps);
  }
}

/// AdaMax over every tensor of a network.
class Adamax {
 public:
  explicit Adamax(TrainConfig config) : config_(config) {}

  void step(Network& net, const Gradients& grads) {
    auto& layers = net.layers();
    if (states_.empty()) states_.resize(layers.size() * 2);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      auto& w = layers[i].weights;
      auto& b = layers[i].biases;
      adamax_step({w.data(), static_cast<std::size_t>(w.size())},
                  {grads[i].weights.data(), static_cast<std::size_t>(grads[i].weights.size())},
                  states_[2 * i], config_);
      adamax_step({b.data(), static_cast<std::size_t>(b.size())},
                  {grads[i].biases.data(), static_cast<std::size_t>(grads[i].biases.size())},
                  states_[2 * i + 1], config_);
    }
  }

 private:
  TrainConfig config_;
  std::vector<AdamaxState> states_;
};

/// Fully materialised training set, one sample per column.
struct Dataset {
  Matrix inputs;
  Matrix targets;
  std::size_t size() const { return static_cast<std::size_t>(inputs.cols()); }
};

struct TrainHistory {
  std::vector<double> epoch_loss;  // mean per-sample training loss
};

/// Fills `inputs`/`targets` (pre-sized by the caller's choice) for the given
/// sample indices. `epoch` lets generators draw fresh, reproducible noise.
using BatchFiller = std::function<void(std::span<const std::size_t> indices, std::size_t epoch,
                                       Matrix& inputs, Matrix& targets)>;

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mini-batch AdaMax training over `n` samples produced by `fill`.
inline TrainHistory train(Network& net, std::size_t n, const BatchFiller& fill, const TrainConfig& config) {
  config.validate();
  if (n == 0) throw InputError("cannot train on an empty dataset");
  TrainHistory history;
  Adamax opt(config);
  Rng rng(config.shuffle_seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Matrix x, y;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, n - start);
      std::span<const std::size_t> idx(order.data() + start, len);
      fill(idx, epoch, x, y);
      const auto cache = net.forward_cached(x);
      total += net.sample_losses(cache, y).sum();
      opt.step(net, net.backward(cache, y));
    }
    const double mean = total / static_cast<double>(n);
    if (!std::isfinite(mean) || !net.all_finite())
      throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch));
    history.epoch_loss.push_back(mean);
  }
  return history;
}

inline TrainHistory train(Network& net, const Dataset& data, const TrainConfig& config) {
  if (data.size() == 0) throw InputError("cannot train on an empty dataset");
  if (data.targets.cols() != data.inputs.cols())
    throw InputError("dataset inputs and targets differ in sample count");
  return train(
      net, data.size(),
      [&](std::span<const std::size_t> idx, std::size_t, Matrix& x, Matrix& y) {
        x.resize(data.inputs.rows(), static_cast<Eigen::Index>(idx.size()));
        y.resize(data.targets.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
          const auto c = static_cast<Eigen::Index>(idx[k]);
          x.col(static_cast<Eigen::Index>(k)) = data.inputs.col(c);
          y.col(static_cast<Eigen::Index>(k)) = data.targets.col(c);
        }
      },
      config);
}

/// Mean per-sample loss over a dataset, evaluated in chunks.
inline double evaluate_loss(const Network& net, const Dataset& data, std::size_t chunk = 512) {
  if (data.size() == 0) throw InputError("cannot evaluate on an empty dataset");
  double total = 0.0;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    const auto len = static_cast<Eigen::Index>(std::min(chunk, data.size() - start));
    const auto s = static_cast<Eigen::Index>(start);
    const auto cache = net.forward_cached(data.inputs.middleCols(s, len));
    total += net.sample_losses(cache, data.targets.middleCols(s, len)).sum();
  }
  return total / static_cast<double>(data.size());
}

/// A grid-search point: hidden architecture plus optimiser settings.
struct Candidate {
  std::vector<std::size_t> hidden = {128, 64};
  Activation hidden_activation = Activation::kRelu;
  TrainConfig train;
  std::uint64_t init_seed = 0;

  nlohmann::json to_json() const {
    return {{"hidden", hidden},
            {"hidden_activation", activation_name(hidden_activation)},
            {"init_seed", init_seed},
            {"train", train.to_json()}};
  }

  static Candidate from_json(const nlohmann::json& j) {
    Candidate c;
    c.hidden = j.value("hidden", c.hidden);
    c.hidden_activation = activation_from_name(j.value("hidden_activation", std::string("relu")));
    c.init_seed = j.value("init_seed", c.init_seed);
    if (j.contains("train")) c.train = TrainConfig::from_json(j.at("train"));
    return c;
  }
};

/// Hidden layers from the candidate followed by the given output layer.
inline Network build_from_candidate(const Candidate& c, std::size_t inputs, LayerSpec output, Loss loss) {
  std::vector<LayerSpec> specs;
  for (auto h : c.hidden) specs.push_back({h, c.hidden_activation});
  specs.push_back(output);
  return Network::build(inputs, specs, loss, c.init_seed);
}

struct GridSearchResult {
  std::size_t best = 0;
  std::vector<double> validation_losses;
  Network best_network;
  TrainHistory best_history;
};

/// Train every candidate; keep the one with the lowest validation loss.
/// Ties go to the earlier candidate.
inline GridSearchResult grid_search(std::span<const Candidate> candidates,
                                    const std::function<Network(const Candidate&)>& make_network,
                                    const Dataset& train_set, const Dataset& validation_set) {
  if (candidates.empty()) throw InputError("grid_search needs at least one candidate");
  GridSearchResult result;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    Network net = make_network(candidates[i]);
    TrainHistory h;
    if (candidates[i].train.epochs > 0) h = train(net, train_set, candidates[i].train);
    const double v = evaluate_loss(net, validation_set);
    result.validation_losses.push_back(v);
    if (i == 0 || v < result.validation_losses[result.best]) {
      result.best = i;
      result.best_network = std::move(net);
      result.best_history = std::move(h);
    }
  }
  return result;
}

}  // namespace malphase::nn
