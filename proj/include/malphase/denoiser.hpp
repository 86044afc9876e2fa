#pragma once

// Benign-noise injection and the denoising autoencoder whose encoder is the
// feature front-end of every classifier.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "malphase/common.hpp"
#include "malphase/features.hpp"
#include "malphase/nn.hpp"

namespace malphase {

/// Benign flows injected into an M-flow window at ratio r: round(r * M).
inline std::size_t noise_count(double ratio, std::size_t window_size) {
  if (!(ratio >= 0)) throw InputError("noise ratio must be >= 0");
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(window_size)));
}

/// Insert round(r * |clean|) items drawn with replacement from `pool` at
/// uniformly random positions, keeping the relative order of `clean`.
template <typename T>
std::vector<T> inject_noise(std::span<const T> clean, std::span<const T> pool, double ratio, Rng& rng) {
  const std::size_t k = noise_count(ratio, clean.size());
  if (k > 0 && pool.empty()) throw InputError("noise ratio > 0 requires a non-empty benign pool");
  const std::size_t n = clean.size() + k;
  std::vector<char> is_noise(n, 0);
  std::fill(is_noise.begin(), is_noise.begin() + static_cast<std::ptrdiff_t>(k), 1);
  std::shuffle(is_noise.begin(), is_noise.end(), rng);
  std::uniform_int_distribution<std::size_t> pick(0, pool.empty() ? 0 : pool.size() - 1);
  std::vector<T> out;
  out.reserve(n);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_noise[i]) {
      out.push_back(pool[pick(rng)]);
    } else {
      out.push_back(clean[next++]);
    }
  }
  return out;
}

struct NoiseSpec {
  double ratio = 0.0;
  std::vector<FlowRecord> benign_pool;
  std::uint64_t rng_seed = 0;
};

/// Noisy realisation of a clean malicious window.
inline std::vector<FlowRecord> make_noisy(std::span<const FlowRecord> clean, const NoiseSpec& spec) {
  for (const auto& f : clean)
    if (f.label && *f.label == kBenignLabel)
      throw InputError("make_noisy expects a window of malicious flows only");
  Rng rng(spec.rng_seed);
  return inject_noise<FlowRecord>(clean, spec.benign_pool, spec.ratio, rng);
}

/// Write normalised rows into `out` (padded_len * 11 values), zero-filling
/// unused positions.
inline void pad_rows(std::span<const FeatureVector> rows, std::size_t padded_len, double* out) {
  if (rows.size() > padded_len)
    throw InputError("window of " + std::to_string(rows.size()) + " flows exceeds padded length " +
                     std::to_string(padded_len));
  std::size_t off = 0;
  for (const auto& r : rows) {
    std::copy(r.begin(), r.end(), out + off);
    off += kNumFeatures;
  }
  std::fill(out + off, out + padded_len * kNumFeatures, 0.0);
}

inline std::vector<double> pad_to_fixed(std::span<const FlowRecord> flows, std::size_t padded_len,
                                        const Normalizer& normalizer) {
  if (flows.size() > padded_len)
    throw InputError("window of " + std::to_string(flows.size()) + " flows exceeds padded length " +
                     std::to_string(padded_len));
  std::vector<FeatureVector> rows;
  rows.reserve(flows.size());
  for (const auto& f : flows) rows.push_back(normalizer(f));
  std::vector<double> out(padded_len * kNumFeatures);
  pad_rows(rows, padded_len, out.data());
  return out;
}

/// A window already normalised row by row.
using EncodedWindow = std::vector<FeatureVector>;

inline EncodedWindow normalize_window(std::span<const FlowRecord> flows, const Normalizer& normalizer) {
  EncodedWindow w;
  w.reserve(flows.size());
  for (const auto& f : flows) w.push_back(normalizer(f));
  return w;
}

struct DenoiserConfig {
  std::vector<std::size_t> hidden = {256};  // encoder side; the decoder mirrors it
  std::size_t latent_dim = 0;               // 0 selects M * 11 / 2
  nn::TrainConfig train;
  std::uint64_t init_seed = 0;
  std::uint64_t noise_seed = 0;

  nlohmann::json to_json() const {
    return {{"hidden", hidden},
            {"latent_dim", latent_dim},
            {"train", train.to_json()},
            {"init_seed", init_seed},
            {"noise_seed", noise_seed}};
  }
};

class DenoisingAutoencoder {
 public:
  DenoisingAutoencoder() = default;
  DenoisingAutoencoder(nn::Network encoder, nn::Network decoder, std::size_t window_size,
                       std::size_t padded_len)
      : encoder_(std::move(encoder)), decoder_(std::move(decoder)), window_size_(window_size),
        padded_len_(padded_len) {
    if (encoder_.input_size() != padded_len_ * kNumFeatures)
      throw InputError("encoder input must be padded_len * 11");
    if (decoder_.output_size() != window_size_ * kNumFeatures)
      throw InputError("decoder output must be M * 11");
    if (decoder_.input_size() != encoder_.output_size())
      throw InputError("decoder input must match the latent dimension");
  }

  std::size_t window_size() const { return window_size_; }
  std::size_t padded_len() const { return padded_len_; }
  std::size_t latent_dim() const { return encoder_.output_size(); }
  const nn::Network& encoder() const { return encoder_; }
  const nn::Network& decoder() const { return decoder_; }

  /// Latents for a batch of padded inputs (one per column).
  nn::Matrix encode_batch(const nn::Matrix& padded) const { return encoder_.forward(padded); }

  std::vector<double> encode_rows(std::span<const FeatureVector> rows) const {
    std::vector<double> x(padded_len_ * kNumFeatures);
    pad_rows(rows, padded_len_, x.data());
    return encoder_.predict(x);
  }

  std::vector<double> encode(std::span<const FlowRecord> noisy, const Normalizer& normalizer) const {
    return encoder_.predict(pad_to_fixed(noisy, padded_len_, normalizer));
  }

  nn::Matrix reconstruct_batch(const nn::Matrix& padded) const {
    return decoder_.forward(encoder_.forward(padded));
  }

  bool operator==(const DenoisingAutoencoder&) const = default;

  nlohmann::json to_json() const {
    return {{"window_size", window_size_},
            {"padded_len", padded_len_},
            {"latent_dim", latent_dim()},
            {"encoder", encoder_.to_json()},
            {"decoder", decoder_.to_json()}};
  }

  static DenoisingAutoencoder from_json(const nlohmann::json& j) {
    DenoisingAutoencoder d(nn::Network::from_json(j.at("encoder")), nn::Network::from_json(j.at("decoder")),
                           j.at("window_size").get<std::size_t>(), j.at("padded_len").get<std::size_t>());
    if (d.latent_dim() != j.at("latent_dim").get<std::size_t>())
      throw InputError("denoiser latent_dim metadata disagrees with the encoder");
    return d;
  }

 private:
  nn::Network encoder_;
  nn::Network decoder_;
  std::size_t window_size_ = 0;
  std::size_t padded_len_ = 0;
};

struct DenoiserTrainingResult {
  DenoisingAutoencoder model;
  nn::TrainHistory history;
};

/// padded_len = M * (1 + r_max).
inline std::size_t padded_length(std::size_t window_size, double r_max) {
  return window_size + noise_count(r_max, window_size);
}

/// Train on (pad(noisy(x, r)), x) for every clean window x and every ratio r.
/// Each epoch draws a fresh, seeded noise realisation per pair.
inline DenoiserTrainingResult train_denoiser(std::span<const EncodedWindow> clean,
                                             std::span<const double> ratios,
                                             std::span<const FeatureVector> pool,
                                             const DenoiserConfig& config) {
  if (clean.empty()) throw InputError("train_denoiser: empty sample set");
  if (ratios.empty()) throw InputError("train_denoiser: no noise ratios");
  const std::size_t m = clean.front().size();
  for (const auto& w : clean)
    if (w.size() != m) throw InputError("train_denoiser: clean windows differ in length");
  const double r_max = *std::max_element(ratios.begin(), ratios.end());
  const std::size_t padded = padded_length(m, r_max);
  const std::size_t latent = config.latent_dim ? config.latent_dim : m * kNumFeatures / 2;

  std::vector<nn::LayerSpec> specs;
  for (auto h : config.hidden) specs.push_back({h, nn::Activation::kSelu});
  specs.push_back({latent, nn::Activation::kSelu});
  const std::size_t encoder_layers = specs.size();
  for (auto it = config.hidden.rbegin(); it != config.hidden.rend(); ++it)
    specs.push_back({*it, nn::Activation::kSelu});
  specs.push_back({m * kNumFeatures, nn::Activation::kIdentity});
  nn::Network net = nn::Network::build(padded * kNumFeatures, specs, nn::Loss::kMeanSquaredError,
                                       config.init_seed);

  const std::size_t n_ratios = ratios.size();
  const std::size_t n = clean.size() * n_ratios;
  auto fill = [&](std::span<const std::size_t> idx, std::size_t epoch, nn::Matrix& x, nn::Matrix& y) {
    x.resize(static_cast<Eigen::Index>(padded * kNumFeatures), static_cast<Eigen::Index>(idx.size()));
    y.resize(static_cast<Eigen::Index>(m * kNumFeatures), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto& w = clean[idx[k] / n_ratios];
      const double r = ratios[idx[k] % n_ratios];
      Rng rng(derive_seed(config.noise_seed, "denoiser-noise", epoch * n + idx[k]));
      const auto noisy = inject_noise<FeatureVector>(w, pool, r, rng);
      const auto col = static_cast<Eigen::Index>(k);
      pad_rows(noisy, padded, x.col(col).data());
      for (std::size_t i = 0; i < m; ++i)
        std::copy(w[i].begin(), w[i].end(), y.col(col).data() + i * kNumFeatures);
    }
  };
  auto history = nn::train(net, n, fill, config.train);

  auto& layers = net.layers();
  std::vector<nn::DenseLayer> enc(layers.begin(), layers.begin() + static_cast<std::ptrdiff_t>(encoder_layers));
  std::vector<nn::DenseLayer> dec(layers.begin() + static_cast<std::ptrdiff_t>(encoder_layers), layers.end());
  return {DenoisingAutoencoder(nn::Network(std::move(enc), nn::Loss::kMeanSquaredError),
                               nn::Network(std::move(dec), nn::Loss::kMeanSquaredError), m, padded),
          std::move(history)};
}

/// Convenience overload over raw flow windows.
inline DenoiserTrainingResult train_denoiser(std::span<const std::vector<FlowRecord>> clean,
                                             std::span<const double> ratios,
                                             std::span<const FlowRecord> pool, const Normalizer& normalizer,
                                             const DenoiserConfig& config) {
  std::vector<EncodedWindow> windows;
  windows.reserve(clean.size());
  for (const auto& w : clean) windows.push_back(normalize_window(w, normalizer));
  const auto rows = normalize_window(pool, normalizer);
  return train_denoiser(windows, ratios, rows, config);
}

}  // namespace malphase
