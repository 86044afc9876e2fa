#pragma once

// Untrained but well-formed tier bundles for pipeline and evaluation tests.

#include "malphase/pipeline.hpp"
#include "malphase/synth.hpp"

namespace malphase::fakes {

inline PhaseModel random_linear(Phase phase, std::vector<std::string> classes, std::size_t in, std::uint64_t seed) {
  nn::Candidate c;
  c.hidden = {};
  c.init_seed = seed;
  PhaseModel m;
  m.phase = phase;
  m.class_names = phase == Phase::kBinary ? binary_class_names() : classes;
  m.network = phase_network(phase, in, m.class_names.size(), c);
  for (auto& l : m.network.layers()) l.biases = 0.3 * nn::Vector::Random(l.biases.size());
  return m;
}

inline TierBundle fake_bundle(std::size_t tier_index, std::uint64_t seed) {
  TierBundle b;
  b.config = TierConfig::standard(tier_index);
  b.config.capacity = b.config.window_size;
  const std::size_t m = b.config.window_size;
  const std::size_t padded = b.config.noise_capacity();
  const std::size_t latent = 6;
  auto enc = nn::Network::build(padded * kNumFeatures, {{latent, nn::Activation::kSelu}}, nn::Loss::kMeanSquaredError, seed);
  auto dec = nn::Network::build(latent, {{m * kNumFeatures, nn::Activation::kIdentity}}, nn::Loss::kMeanSquaredError, seed + 1);
  b.denoiser = DenoisingAutoencoder(enc, dec, m, padded);
  std::vector<FeatureVector> rows;
  for (const auto& f : generate_flows(default_universe().benign, 200, seed)) rows.push_back(encode_flow(f));
  b.normalizer = Normalizer::fit(rows);
  b.binary = random_linear(Phase::kBinary, {}, latent, seed + 2);
  b.type = random_linear(Phase::kType, {kMalwareTypes.begin(), kMalwareTypes.end()}, latent, seed + 3);
  std::uint64_t s = seed + 10;
  for (const auto& t : kMalwareTypes) {
    auto fm = random_linear(Phase::kFamily, {t + "_1", t + "_2"}, latent, ++s);
    fm.type_name = t;
    b.family.emplace(t, std::move(fm));
  }
  return b;
}

}  // namespace malphase::fakes
