#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "malphase/common.hpp"
#include "malphase/flow_meter.hpp"

namespace malphase {

/// Column order of an encoded flow. IP addresses are deliberately absent.
enum Feature : std::size_t {
  kDuration,
  kRtt,
  kProtocol,
  kDstIsLocal,
  kDstPort,
  kPktsFwd,
  kBytesFwd,
  kPktsRev,
  kBytesRev,
  kEntropyFwd,
  kEntropyRev,
};

inline constexpr std::size_t kNumFeatures = 11;

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "duration", "rtt",      "protocol_code", "dst_is_local", "dst_port_scaled", "pkts_fwd",
    "bytes_fwd", "pkts_rev", "bytes_rev",     "entropy_fwd",  "entropy_rev"};

using FeatureVector = std::array<double, kNumFeatures>;

inline constexpr std::string_view kBenignLabel = "benign";

/// Raw (unnormalised) feature vector of one flow.
inline FeatureVector encode_flow(const FlowRecord& f) {
  return {f.duration,
          f.rtt,
          static_cast<double>(f.protocol),
          f.dst_is_local ? 1.0 : 0.0,
          static_cast<double>(f.dst_port),
          static_cast<double>(f.pkts_fwd),
          static_cast<double>(f.bytes_fwd),
          static_cast<double>(f.pkts_rev),
          static_cast<double>(f.bytes_rev),
          f.entropy_fwd,
          f.entropy_rev};
}

enum class Transform { kLog1pMinMax, kMinMax, kEntropyScale, kPassThrough };

inline std::string_view transform_name(Transform t) {
  switch (t) {
    case Transform::kLog1pMinMax: return "log1p_minmax";
    case Transform::kMinMax: return "minmax";
    case Transform::kEntropyScale: return "divide_by_8";
    case Transform::kPassThrough: return "identity";
  }
  return "?";
}

inline Transform transform_from_name(std::string_view name) {
  for (auto t : {Transform::kLog1pMinMax, Transform::kMinMax, Transform::kEntropyScale,
                 Transform::kPassThrough})
    if (transform_name(t) == name) return t;
  throw InputError("unknown feature transform '" + std::string(name) + "'");
}

inline constexpr std::array<Transform, kNumFeatures> kFeatureTransforms = {
    Transform::kLog1pMinMax, Transform::kLog1pMinMax, Transform::kMinMax,
    Transform::kPassThrough, Transform::kLog1pMinMax, Transform::kLog1pMinMax,
    Transform::kLog1pMinMax, Transform::kLog1pMinMax, Transform::kLog1pMinMax,
    Transform::kEntropyScale, Transform::kEntropyScale};

/// Per-feature scaling to [0, 1], fitted on training flows only. Values
/// outside the fitted range clamp; constant features map to 0.
class Normalizer {
 public:
  struct Column {
    Transform transform = Transform::kPassThrough;
    double min = 0.0;  // in transformed space
    double max = 0.0;
    bool operator==(const Column&) const = default;
  };

  Normalizer() = default;
  explicit Normalizer(std::array<Column, kNumFeatures> columns) : columns_(columns) {}

  [[nodiscard]] static Normalizer fit(std::span<const FeatureVector> training) {
    if (training.empty()) throw InputError("cannot fit normalizer on an empty set");
    std::array<Column, kNumFeatures> cols;
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      cols[j].transform = kFeatureTransforms[j];
      if (cols[j].transform == Transform::kEntropyScale) {
        cols[j].min = 0.0;
        cols[j].max = 8.0;
        continue;
      }
      if (cols[j].transform == Transform::kPassThrough) {
        cols[j].min = 0.0;
        cols[j].max = 1.0;
        continue;
      }
      double lo = pre(cols[j].transform, training[0][j]);
      double hi = lo;
      for (const auto& v : training) {
        const double x = pre(cols[j].transform, v[j]);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      cols[j].min = lo;
      cols[j].max = hi;
    }
    return Normalizer(cols);
  }

  FeatureVector apply(const FeatureVector& raw) const {
    FeatureVector out;
    for (std::size_t j = 0; j < kNumFeatures; ++j) out[j] = apply_one(j, raw[j]);
    return out;
  }

  FeatureVector operator()(const FlowRecord& f) const { return apply(encode_flow(f)); }

  double apply_one(std::size_t j, double x) const {
    const auto& c = columns_[j];
    switch (c.transform) {
      case Transform::kEntropyScale: return std::clamp(x / 8.0, 0.0, 1.0);
      case Transform::kPassThrough: return std::clamp(x, 0.0, 1.0);
      default: break;
    }
    if (!(c.max > c.min)) return 0.0;
    return std::clamp((pre(c.transform, x) - c.min) / (c.max - c.min), 0.0, 1.0);
  }

  const std::array<Column, kNumFeatures>& columns() const { return columns_; }
  bool operator==(const Normalizer&) const = default;

  nlohmann::json to_json() const {
    nlohmann::json features = nlohmann::json::array();
    for (std::size_t j = 0; j < kNumFeatures; ++j)
      features.push_back({{"name", kFeatureNames[j]},
                          {"transform", transform_name(columns_[j].transform)},
                          {"min", columns_[j].min},
                          {"max", columns_[j].max}});
    return {{"features", features}};
  }

  static Normalizer from_json(const nlohmann::json& j) {
    const auto& features = j.at("features");
    if (!features.is_array() || features.size() != kNumFeatures)
      throw InputError("normalizer: expected " + std::to_string(kNumFeatures) + " features");
    std::array<Column, kNumFeatures> cols;
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      const auto& f = features[i];
      if (f.at("name").get<std::string>() != kFeatureNames[i])
        throw InputError("normalizer: feature " + std::to_string(i) + " out of order");
      cols[i].transform = transform_from_name(f.at("transform").get<std::string>());
      cols[i].min = f.at("min").get<double>();
      cols[i].max = f.at("max").get<double>();
    }
    return Normalizer(cols);
  }

 private:
  static double pre(Transform t, double x) {
    return t == Transform::kLog1pMinMax ? std::log1p(std::max(x, 0.0)) : x;
  }

  std::array<Column, kNumFeatures> columns_{};
};

/// M normalised flows flattened row-major into M * 11 values.
struct WindowSample {
  std::size_t window_size = 0;
  std::vector<double> values;
  std::optional<std::string> label;
};

/// Harness labelling: the first malicious family present, else "benign" when
/// any flow is labelled, else no label.
inline std::optional<std::string> window_label(std::span<const FlowRecord> flows) {
  bool any_label = false;
  for (const auto& f : flows) {
    if (!f.label) continue;
    any_label = true;
    if (*f.label != kBenignLabel) return f.label;
  }
  if (any_label) return std::string(kBenignLabel);
  return std::nullopt;
}

inline WindowSample window_encode(std::span<const FlowRecord> flows, std::size_t window_size,
                                  const Normalizer& normalizer) {
  if (flows.size() != window_size)
    throw InputError("window_encode: expected " + std::to_string(window_size) + " flows, got " +
                     std::to_string(flows.size()));
  WindowSample s;
  s.window_size = window_size;
  s.values.reserve(window_size * kNumFeatures);
  for (const auto& f : flows) {
    const auto v = normalizer(f);
    s.values.insert(s.values.end(), v.begin(), v.end());
  }
  s.label = window_label(flows);
  return s;
}

}  // namespace malphase
