#pragma once

// Per-host sliding windows and the binary -> type -> family cascade, run
// independently by every tier.

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "malphase/classifiers.hpp"
#include "malphase/denoiser.hpp"
#include "malphase/features.hpp"
#include "malphase/flow_meter.hpp"

namespace malphase {

inline constexpr std::array<std::size_t, 4> kTierWindowSizes = {10, 20, 30, 40};

struct TierConfig {
  std::size_t tier_index = 1;
  std::size_t window_size = 10;
  std::size_t stride = 0;    // 0 selects window_size
  std::size_t capacity = 0;  // flows per window; 0 selects window_size
  double r_max_binary = 8.0;
  double r_max_multiclass = 2.0;

  static TierConfig standard(std::size_t tier_index) {
    if (tier_index < 1 || tier_index > kTierWindowSizes.size())
      throw InputError("tier index must be 1..4, got " + std::to_string(tier_index));
    TierConfig c;
    c.tier_index = tier_index;
    c.window_size = kTierWindowSizes[tier_index - 1];
    return c;
  }

  std::size_t effective_stride() const { return stride ? stride : window_size; }
  std::size_t effective_capacity() const { return capacity ? capacity : window_size; }
  /// Raw-traffic capacity able to hold M malicious flows at the largest binary ratio.
  std::size_t noise_capacity() const { return padded_length(window_size, r_max_binary); }

  nlohmann::json to_json() const {
    return {{"tier", tier_index},        {"window_size", window_size},
            {"stride", effective_stride()}, {"capacity", effective_capacity()},
            {"r_max_binary", r_max_binary}, {"r_max_multiclass", r_max_multiclass}};
  }

  static TierConfig from_json(const nlohmann::json& j) {
    TierConfig c;
    c.tier_index = j.at("tier").get<std::size_t>();
    c.window_size = j.at("window_size").get<std::size_t>();
    c.stride = j.value("stride", std::size_t{0});
    c.capacity = j.value("capacity", std::size_t{0});
    c.r_max_binary = j.value("r_max_binary", 8.0);
    c.r_max_multiclass = j.value("r_max_multiclass", 2.0);
    if (c.window_size == 0) throw InputError("tier window size must be >= 1");
    return c;
  }
};

/// Everything one tier needs at inference time.
struct TierBundle {
  TierConfig config;
  Normalizer normalizer;
  DenoisingAutoencoder denoiser;
  std::optional<PhaseModel> binary;
  std::optional<PhaseModel> type;
  std::map<std::string, PhaseModel> family;
  std::vector<std::string> trained_families;  // labels seen by any training stage

  nlohmann::json to_json() const {
    nlohmann::json fam = nlohmann::json::object();
    for (const auto& [t, m] : family) fam[t] = m.to_json();
    nlohmann::json j = {{"tier", config.to_json()},
                        {"normalizer", normalizer.to_json()},
                        {"denoiser", denoiser.to_json()},
                        {"family", fam},
                        {"trained_families", trained_families}};
    if (binary) j["binary"] = binary->to_json();
    if (type) j["type"] = type->to_json();
    return j;
  }

  static TierBundle from_json(const nlohmann::json& j) {
    TierBundle b;
    b.config = TierConfig::from_json(j.at("tier"));
    b.normalizer = Normalizer::from_json(j.at("normalizer"));
    b.denoiser = DenoisingAutoencoder::from_json(j.at("denoiser"));
    if (j.contains("binary")) b.binary = PhaseModel::from_json(j.at("binary"));
    if (j.contains("type")) b.type = PhaseModel::from_json(j.at("type"));
    for (const auto& [t, m] : j.at("family").items()) b.family.emplace(t, PhaseModel::from_json(m));
    b.trained_families = j.value("trained_families", std::vector<std::string>{});
    return b;
  }
};

struct HostStream {
  Ipv4Address host;
  std::vector<FlowRecord> flows;
};

/// Stable partition of time-ordered flows by initiator address.
inline std::map<Ipv4Address, HostStream> per_host_split(std::span<const FlowRecord> flows) {
  std::map<Ipv4Address, HostStream> out;
  for (const auto& f : flows) {
    auto& s = out[f.key.initiator_ip];
    s.host = f.key.initiator_ip;
    s.flows.push_back(f);
  }
  return out;
}

struct WindowSpan {
  std::size_t begin = 0;  // index into the host stream
  std::size_t end = 0;    // one past the last flow
  std::size_t size() const { return end - begin; }
  bool operator==(const WindowSpan&) const = default;
};

/// Windows of up to `capacity` flows every `stride` flows. A window cut short
/// by the end of the stream is emitted once if it still holds >= M flows, and
/// ends the scan.
inline std::vector<WindowSpan> slide_windows(std::size_t stream_length, const TierConfig& tier) {
  const std::size_t m = tier.window_size;
  const std::size_t stride = tier.effective_stride();
  const std::size_t cap = std::max(tier.effective_capacity(), m);
  std::vector<WindowSpan> out;
  for (std::size_t start = 0; start < stream_length; start += stride) {
    const std::size_t end = std::min(start + cap, stream_length);
    if (end - start < m) break;
    out.push_back({start, end});
    if (end == stream_length) break;
  }
  return out;
}

struct PipelineVerdict {
  std::size_t tier_index = 0;
  std::string host;
  WindowSpan window;
  bool malicious = false;
  double score = 0.0;
  std::optional<ClassPrediction> type;
  std::optional<ClassPrediction> family;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"tier", tier_index},
                        {"host", host},
                        {"window_start", window.begin},
                        {"window_end", window.end},
                        {"binary", malicious ? kMaliciousLabel : kBenignLabel},
                        {"score", score}};
    if (type) {
      j["type"] = type->label;
      j["type_probs"] = type->probabilities;
    }
    if (family) {
      j["family"] = family->label;
      j["family_probs"] = family->probabilities;
    }
    return j;
  }
};

inline void check_bundle(const TierBundle& bundle) {
  if (!bundle.binary) throw InputError("tier " + std::to_string(bundle.config.tier_index) + " bundle has no binary model");
  if (!bundle.type) throw InputError("tier " + std::to_string(bundle.config.tier_index) + " bundle has no type model");
}

/// Cascade on one window: encode, binary, then type and family if malicious.
inline PipelineVerdict classify_window(std::span<const FlowRecord> window, const TierBundle& bundle) {
  check_bundle(bundle);
  PipelineVerdict v;
  v.tier_index = bundle.config.tier_index;
  v.window = {0, window.size()};
  const auto latent = bundle.denoiser.encode(window, bundle.normalizer);
  const auto b = predict_binary(*bundle.binary, latent);
  v.malicious = b.malicious;
  v.score = b.score;
  if (v.malicious) {
    v.type = predict_type(*bundle.type, latent);
    v.family = predict_family(bundle.family, v.type->label, latent);
  }
  return v;
}

/// Every tier over every host stream; no cross-tier fusion. Output is ordered
/// by (tier, host, window start).
inline std::vector<PipelineVerdict> run_all_tiers(const std::map<Ipv4Address, HostStream>& streams,
                                                  std::span<const TierBundle> tiers) {
  std::vector<const TierBundle*> ordered;
  for (const auto& t : tiers) ordered.push_back(&t);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](auto* a, auto* b) { return a->config.tier_index < b->config.tier_index; });
  std::vector<PipelineVerdict> out;
  for (const auto* tier : ordered) {
    for (const auto& [host, stream] : streams) {
      for (const auto& span : slide_windows(stream.flows.size(), tier->config)) {
        auto v = classify_window(std::span(stream.flows).subspan(span.begin, span.size()), *tier);
        v.window = span;
        v.host = host.to_string();
        out.push_back(std::move(v));
      }
    }
  }
  return out;
}

}  // namespace malphase
