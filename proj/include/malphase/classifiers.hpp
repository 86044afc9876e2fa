#pragma once

// The three cascade phases: benign/malicious, malware type, and per-type
// malware family. All phases consume denoiser latents.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "malphase/common.hpp"
#include "malphase/features.hpp"
#include "malphase/nn.hpp"

namespace malphase {

inline const std::array<std::string, 5> kMalwareTypes = {"adware", "ransomware", "trojan", "virus", "worm"};
inline constexpr std::string_view kMaliciousLabel = "malicious";

struct MalwareTaxonomy {
  std::map<std::string, std::vector<std::string>> families_by_type;

  void validate() const {
    if (families_by_type.size() != kMalwareTypes.size())
      throw InputError("taxonomy must list exactly the five malware types");
    std::set<std::string> seen;
    for (const auto& t : kMalwareTypes) {
      auto it = families_by_type.find(t);
      if (it == families_by_type.end()) throw InputError("taxonomy is missing type '" + t + "'");
      if (it->second.empty()) throw InputError("type '" + t + "' has no families");
      for (const auto& f : it->second)
        if (!seen.insert(f).second) throw InputError("family '" + f + "' assigned to more than one type");
    }
  }

  std::optional<std::string> type_of(std::string_view family) const {
    for (const auto& [t, fams] : families_by_type)
      if (std::find(fams.begin(), fams.end(), family) != fams.end()) return t;
    return std::nullopt;
  }

  std::vector<std::string> all_families() const {
    std::vector<std::string> out;
    for (const auto& t : kMalwareTypes)
      for (const auto& f : families_by_type.at(t)) out.push_back(f);
    return out;
  }

  nlohmann::json to_json() const { return families_by_type; }
  static MalwareTaxonomy from_json(const nlohmann::json& j) {
    MalwareTaxonomy t;
    t.families_by_type = j.get<std::map<std::string, std::vector<std::string>>>();
    t.validate();
    return t;
  }
};

enum class Phase { kBinary, kType, kFamily };

inline std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::kBinary: return "binary";
    case Phase::kType: return "type";
    case Phase::kFamily: return "family";
  }
  return "?";
}

inline Phase phase_from_name(std::string_view s) {
  for (auto p : {Phase::kBinary, Phase::kType, Phase::kFamily})
    if (phase_name(p) == s) return p;
  throw InputError("unknown phase '" + std::string(s) + "'");
}

struct PhaseModel {
  Phase phase = Phase::kBinary;
  std::string type_name;  // family phase only
  nn::Network network;
  std::vector<std::string> class_names;
  double decision_threshold = 0.5;  // binary phase only
  nn::TrainHistory history;

  std::size_t input_size() const { return network.input_size(); }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"phase", phase_name(phase)},
                        {"class_names", class_names},
                        {"model", network.to_json()},
                        {"loss_history", history.epoch_loss}};
    if (phase == Phase::kBinary) j["decision_threshold"] = decision_threshold;
    if (phase == Phase::kFamily) j["type"] = type_name;
    return j;
  }

  static PhaseModel from_json(const nlohmann::json& j) {
    PhaseModel m;
    m.phase = phase_from_name(j.at("phase").get<std::string>());
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    m.network = nn::Network::from_json(j.at("model"));
    m.decision_threshold = j.value("decision_threshold", 0.5);
    m.type_name = j.value("type", std::string());
    m.history.epoch_loss = j.value("loss_history", std::vector<double>{});
    m.check_shape();
    return m;
  }

  void check_shape() const {
    if (phase == Phase::kBinary) {
      if (network.output_size() != 1 || class_names.size() != 2)
        throw InputError("binary phase needs one sigmoid output and two class names");
      if (!(decision_threshold > 0 && decision_threshold < 1))
        throw InputError("decision threshold must lie in (0, 1)");
    } else if (network.output_size() != class_names.size()) {
      throw InputError("phase output width does not match its class list");
    }
  }
};

struct BinaryPrediction {
  bool malicious = false;
  double score = 0.0;
};

struct ClassPrediction {
  std::size_t index = 0;
  std::string label;
  std::vector<double> probabilities;
};

namespace classifier_detail {

inline void check_latent(const PhaseModel& model, std::size_t n) {
  if (n != model.input_size())
    throw InputError("latent has " + std::to_string(n) + " values, model expects " +
                     std::to_string(model.input_size()));
}

}  // namespace classifier_detail

/// Targets for one phase: a single 0/1 row for binary, one-hot otherwise.
/// Validates the label set against the class list.
inline nn::Dataset phase_dataset(Phase phase, const std::vector<std::string>& class_names, const nn::Matrix& inputs,
                                 std::span<const std::string> labels) {
  if (static_cast<std::size_t>(inputs.cols()) != labels.size())
    throw InputError("train_phase: input and label counts differ");
  if (labels.empty()) throw InputError("train_phase: empty training set");
  if (class_names.empty()) throw InputError("train_phase: no classes");

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < class_names.size(); ++i) index[class_names[i]] = i;
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (const auto& l : labels) {
    auto it = index.find(l);
    if (it == index.end())
      throw InputError("train_phase(" + std::string(phase_name(phase)) + "): unexpected label '" + l + "'");
    ++counts[it->second];
  }
  for (std::size_t i = 0; i < class_names.size(); ++i)
    if (counts[i] == 0)
      throw InputError("train_phase(" + std::string(phase_name(phase)) + "): class '" + class_names[i] +
                       "' absent from training data");

  const auto n = static_cast<Eigen::Index>(labels.size());
  nn::Dataset data;
  data.inputs = inputs;
  if (phase == Phase::kBinary) {
    data.targets = nn::Matrix::Zero(1, n);
    for (Eigen::Index i = 0; i < n; ++i)
      data.targets(0, i) = labels[static_cast<std::size_t>(i)] == kMaliciousLabel ? 1.0 : 0.0;
  } else {
    data.targets = nn::Matrix::Zero(static_cast<Eigen::Index>(class_names.size()), n);
    for (Eigen::Index i = 0; i < n; ++i)
      data.targets(static_cast<Eigen::Index>(index[labels[static_cast<std::size_t>(i)]]), i) = 1.0;
  }
  return data;
}

inline std::vector<std::string> binary_class_names() {
  return {std::string(kBenignLabel), std::string(kMaliciousLabel)};
}

/// Untrained network shaped for a phase.
inline nn::Network phase_network(Phase phase, std::size_t inputs, std::size_t n_classes, const nn::Candidate& c) {
  if (phase == Phase::kBinary)
    return nn::build_from_candidate(c, inputs, {1, nn::Activation::kSigmoid}, nn::Loss::kBinaryCrossEntropy);
  return nn::build_from_candidate(c, inputs, {n_classes, nn::Activation::kSoftmax},
                                  nn::Loss::kCategoricalCrossEntropy);
}

/// Train one phase on latents (one per column) with string labels.
inline PhaseModel train_phase(Phase phase, std::vector<std::string> class_names, const nn::Matrix& latents,
                              std::span<const std::string> labels, const nn::Candidate& config,
                              std::string type_name = {}) {
  if (phase == Phase::kBinary) class_names = binary_class_names();
  const nn::Dataset data = phase_dataset(phase, class_names, latents, labels);
  PhaseModel model;
  model.phase = phase;
  model.type_name = std::move(type_name);
  model.network = phase_network(phase, static_cast<std::size_t>(latents.rows()), class_names.size(), config);
  model.class_names = std::move(class_names);
  model.history = nn::train(model.network, data, config.train);
  return model;
}

/// Malicious iff score >= threshold.
inline BinaryPrediction predict_binary(const PhaseModel& model, std::span<const double> latent) {
  if (model.phase != Phase::kBinary) throw InputError("predict_binary needs a binary-phase model");
  classifier_detail::check_latent(model, latent.size());
  const double score = model.network.predict(latent)[0];
  return {score >= model.decision_threshold, score};
}

/// Argmax with ties going to the earlier class.
inline ClassPrediction argmax_prediction(const PhaseModel& model, std::vector<double> probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return {best, model.class_names[best], std::move(probs)};
}

inline ClassPrediction predict_type(const PhaseModel& model, std::span<const double> latent) {
  if (model.phase != Phase::kType) throw InputError("predict_type needs a type-phase model");
  classifier_detail::check_latent(model, latent.size());
  return argmax_prediction(model, model.network.predict(latent));
}

inline ClassPrediction predict_family(const std::map<std::string, PhaseModel>& models,
                                      const std::string& predicted_type, std::span<const double> latent) {
  auto it = models.find(predicted_type);
  if (it == models.end()) throw InputError("no family model for type '" + predicted_type + "'");
  classifier_detail::check_latent(it->second, latent.size());
  return argmax_prediction(it->second, it->second.network.predict(latent));
}

/// Batched helpers for evaluation: index of the predicted class per column
/// (binary: 1 = malicious).
inline std::vector<std::size_t> predict_indices(const PhaseModel& model, const nn::Matrix& latents) {
  if (static_cast<std::size_t>(latents.rows()) != model.input_size())
    throw InputError("latent dimension does not match model input");
  const nn::Matrix out = model.network.forward(latents);
  std::vector<std::size_t> idx(static_cast<std::size_t>(out.cols()));
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    if (model.phase == Phase::kBinary) {
      idx[static_cast<std::size_t>(c)] = out(0, c) >= model.decision_threshold ? 1 : 0;
    } else {
      Eigen::Index best = 0;
      for (Eigen::Index r = 1; r < out.rows(); ++r)
        if (out(r, c) > out(best, c)) best = r;
      idx[static_cast<std::size_t>(c)] = static_cast<std::size_t>(best);
    }
  }
  return idx;
}

inline std::vector<std::string> predict_labels(const PhaseModel& model, const nn::Matrix& latents) {
  std::vector<std::string> out;
  for (auto i : predict_indices(model, latents)) out.push_back(model.class_names[i]);
  return out;
}

}  // namespace malphase
