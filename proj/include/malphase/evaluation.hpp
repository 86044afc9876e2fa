#pragma once

// Metrics, confusion matrices and the experiment designs: clean, noise
// sweep, unseen families, tier comparison, cascade, and denoiser benefit.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "malphase/classifiers.hpp"
#include "malphase/dataset.hpp"
#include "malphase/pipeline.hpp"
#include "malphase/synth.hpp"

namespace malphase {

struct ClassMetrics {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct Metrics {
  std::vector<ClassMetrics> per_class;
  double weighted_f1 = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t total = 0;

  const ClassMetrics& of(std::string_view name) const {
    for (const auto& c : per_class)
      if (c.name == name) return c;
    throw InputError("no metrics for class '" + std::string(name) + "'");
  }

  nlohmann::json to_json() const {
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& c : per_class)
      classes.push_back({{"class", c.name},
                         {"precision", c.precision},
                         {"recall", c.recall},
                         {"f1", c.f1},
                         {"support", c.support}});
    return {{"per_class", classes},
            {"weighted_f1", weighted_f1},
            {"macro_f1", macro_f1},
            {"accuracy", accuracy},
            {"total", total}};
  }
};

/// Counts indexed [true][predicted].
struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> counts;

  static ConfusionMatrix build(std::span<const std::string> truth, std::span<const std::string> predicted,
                               const std::vector<std::string>& classes) {
    if (truth.size() != predicted.size()) throw InputError("label vectors differ in length");
    if (truth.empty()) throw InputError("cannot compute metrics on an empty set");
    if (classes.empty()) throw InputError("empty class list");
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < classes.size(); ++i)
      if (!index.emplace(classes[i], i).second) throw InputError("duplicate class '" + classes[i] + "'");
    auto lookup = [&](const std::string& l) {
      auto it = index.find(l);
      if (it == index.end()) throw InputError("label '" + l + "' not in the class list");
      return it->second;
    };
    ConfusionMatrix cm;
    cm.classes = classes;
    cm.counts.assign(classes.size(), std::vector<std::size_t>(classes.size(), 0));
    for (std::size_t i = 0; i < truth.size(); ++i) ++cm.counts[lookup(truth[i])][lookup(predicted[i])];
    return cm;
  }

  std::size_t support(std::size_t c) const {
    std::size_t s = 0;
    for (auto v : counts[c]) s += v;
    return s;
  }

  Metrics metrics() const {
    const std::size_t k = classes.size();
    Metrics m;
    std::size_t correct = 0;
    for (std::size_t c = 0; c < k; ++c) {
      correct += counts[c][c];
      m.total += support(c);
    }
    if (m.total == 0) throw InputError("cannot compute metrics on an empty set");
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t predicted = 0;
      for (std::size_t t = 0; t < k; ++t) predicted += counts[t][c];
      const std::size_t tp = counts[c][c];
      ClassMetrics cmx;
      cmx.name = classes[c];
      cmx.support = support(c);
      cmx.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
      cmx.recall = cmx.support ? static_cast<double>(tp) / static_cast<double>(cmx.support) : 0.0;
      const double pr = cmx.precision + cmx.recall;
      cmx.f1 = pr > 0 ? 2.0 * cmx.precision * cmx.recall / pr : 0.0;
      m.weighted_f1 += cmx.f1 * static_cast<double>(cmx.support);
      m.macro_f1 += cmx.f1;
      m.per_class.push_back(cmx);
    }
    m.weighted_f1 /= static_cast<double>(m.total);
    m.macro_f1 /= static_cast<double>(k);
    m.accuracy = static_cast<double>(correct) / static_cast<double>(m.total);
    return m;
  }

  nlohmann::json to_json() const { return {{"classes", classes}, {"counts", counts}}; }
};

inline Metrics compute_metrics(std::span<const std::string> truth, std::span<const std::string> predicted,
                               const std::vector<std::string>& classes) {
  return ConfusionMatrix::build(truth, predicted, classes).metrics();
}

/// Spearman rank correlation (average ranks for ties); 0 when either side is
/// constant.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InputError("spearman: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  auto ranks = [n](std::span<const double> v) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Batched inference over labelled windows

/// Padded, normalised inputs, one window per column.
inline nn::Matrix padded_matrix(std::span<const LabeledWindow> windows, std::size_t padded_len,
                                const Normalizer& normalizer) {
  nn::Matrix x(static_cast<Eigen::Index>(padded_len * kNumFeatures), static_cast<Eigen::Index>(windows.size()));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto rows = normalize_window(windows[i].flows, normalizer);
    pad_rows(rows, padded_len, x.col(static_cast<Eigen::Index>(i)).data());
  }
  return x;
}

inline nn::Matrix encode_windows(const TierBundle& bundle, std::span<const LabeledWindow> windows,
                                 std::size_t chunk = 512) {
  nn::Matrix out(static_cast<Eigen::Index>(bundle.denoiser.latent_dim()), static_cast<Eigen::Index>(windows.size()));
  for (std::size_t s = 0; s < windows.size(); s += chunk) {
    const std::size_t len = std::min(chunk, windows.size() - s);
    out.middleCols(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(len)) = bundle.denoiser.encode_batch(
        padded_matrix(windows.subspan(s, len), bundle.denoiser.padded_len(), bundle.normalizer));
  }
  return out;
}

inline std::vector<std::string> binary_truth(std::span<const LabeledWindow> windows) {
  std::vector<std::string> out;
  for (const auto& w : windows) out.emplace_back(w.malicious() ? kMaliciousLabel : kBenignLabel);
  return out;
}

/// Binary metrics of a model on windows (latent or raw-padded inputs).
inline Metrics binary_metrics(const PhaseModel& model, const nn::Matrix& inputs,
                              std::span<const LabeledWindow> windows) {
  const auto pred = predict_labels(model, inputs);
  return compute_metrics(binary_truth(windows), pred, binary_class_names());
}

// ---------------------------------------------------------------------------
// Experiments

struct PhaseEvaluation {
  std::string phase;  // binary, type, or family:<type>
  Metrics metrics;
  ConfusionMatrix confusion;

  nlohmann::json to_json() const {
    return {{"phase", phase}, {"metrics", metrics.to_json()}, {"confusion", confusion.to_json()}};
  }
};

struct CleanResult {
  std::size_t tier_index = 0;
  std::vector<PhaseEvaluation> phases;

  const PhaseEvaluation& phase(std::string_view name) const {
    for (const auto& p : phases)
      if (p.phase == name) return p;
    throw InputError("no evaluation for phase '" + std::string(name) + "'");
  }

  nlohmann::json to_json() const {
    nlohmann::json p = nlohmann::json::array();
    for (const auto& e : phases) p.push_back(e.to_json());
    return {{"tier", tier_index}, {"phases", p}};
  }
};

namespace eval_detail {

inline PhaseEvaluation evaluate(const std::string& name, const std::vector<std::string>& truth,
                                const std::vector<std::string>& pred, const std::vector<std::string>& classes) {
  PhaseEvaluation e;
  e.phase = name;
  e.confusion = ConfusionMatrix::build(truth, pred, classes);
  e.metrics = e.confusion.metrics();
  return e;
}

inline nn::Matrix select_columns(const nn::Matrix& m, const std::vector<std::size_t>& cols) {
  nn::Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k)
    out.col(static_cast<Eigen::Index>(k)) = m.col(static_cast<Eigen::Index>(cols[k]));
  return out;
}

/// Type and per-type family evaluations on malicious windows (family models
/// selected by the true type).
inline void multiclass_phases(const TierBundle& bundle, std::span<const LabeledWindow> windows,
                              const nn::Matrix& latents, std::vector<PhaseEvaluation>& out) {
  std::vector<std::size_t> mal;
  for (std::size_t i = 0; i < windows.size(); ++i)
    if (windows[i].malicious()) mal.push_back(i);
  if (mal.empty()) return;
  const nn::Matrix ml = select_columns(latents, mal);
  std::vector<std::string> truth;
  for (auto i : mal) truth.push_back(windows[i].type);
  out.push_back(evaluate("type", truth, predict_labels(*bundle.type, ml), bundle.type->class_names));
  for (const auto& [type, model] : bundle.family) {
    std::vector<std::size_t> cols;
    std::vector<std::string> ft;
    for (std::size_t k = 0; k < mal.size(); ++k)
      if (windows[mal[k]].type == type) {
        cols.push_back(k);
        ft.push_back(windows[mal[k]].family);
      }
    if (cols.empty()) continue;
    out.push_back(evaluate("family:" + type, ft, predict_labels(model, select_columns(ml, cols)), model.class_names));
  }
}

}  // namespace eval_detail

/// Binary on benign + malicious windows, type on malicious windows, family
/// per true type.
inline CleanResult run_clean_experiment(const TierBundle& bundle, std::span<const LabeledWindow> windows) {
  check_bundle(bundle);
  if (windows.empty()) throw InputError("clean experiment: no windows");
  CleanResult r;
  r.tier_index = bundle.config.tier_index;
  const auto latents = encode_windows(bundle, windows);
  r.phases.push_back(eval_detail::evaluate("binary", binary_truth(windows), predict_labels(*bundle.binary, latents),
                                           binary_class_names()));
  eval_detail::multiclass_phases(bundle, windows, latents, r.phases);
  return r;
}

struct NoiseSweepResult {
  std::size_t tier_index = 0;
  std::string phase;
  std::map<double, Metrics> by_ratio;  // ascending by construction
  double spearman_f1 = 0.0;            // rank correlation of F1 against ratio

  /// F1 used for trend statistics: the malicious class for binary, weighted
  /// F1 otherwise.
  double f1(double ratio) const {
    const auto& m = by_ratio.at(ratio);
    return phase == "binary" ? m.of(kMaliciousLabel).f1 : m.weighted_f1;
  }

  std::vector<double> ratios() const {
    std::vector<double> out;
    for (const auto& [r, _] : by_ratio) out.push_back(r);
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& [r, m] : by_ratio) pts.push_back({{"ratio", r}, {"f1", f1(r)}, {"metrics", m.to_json()}});
    return {{"tier", tier_index}, {"phase", phase}, {"points", pts}, {"spearman_f1", spearman_f1}};
  }
};

namespace eval_detail {

inline void finish_sweep(NoiseSweepResult& s) {
  const auto rs = s.ratios();
  std::vector<double> f;
  for (double r : rs) f.push_back(s.f1(r));
  s.spearman_f1 = spearman(rs, f);
}

}  // namespace eval_detail

/// Metrics per ratio for one phase. `phase` is "binary", "type" or "family"
/// (family: per-window prediction from the true type's model, all families
/// pooled).
inline NoiseSweepResult run_noise_sweep(const TierBundle& bundle, const std::string& phase,
                                        std::span<const double> ratios,
                                        const std::map<double, std::vector<LabeledWindow>>& datasets) {
  check_bundle(bundle);
  if (phase != "binary" && phase != "type" && phase != "family")
    throw InputError("unknown sweep phase '" + phase + "'");
  NoiseSweepResult s;
  s.tier_index = bundle.config.tier_index;
  s.phase = phase;
  for (double r : ratios) {
    auto it = datasets.find(r);
    if (it == datasets.end()) throw InputError("no dataset for ratio " + format_double(r));
    const auto& windows = it->second;
    const auto latents = encode_windows(bundle, windows);
    if (phase == "binary") {
      s.by_ratio[r] = binary_metrics(*bundle.binary, latents, windows);
      continue;
    }
    std::vector<PhaseEvaluation> evals;
    eval_detail::multiclass_phases(bundle, windows, latents, evals);
    if (evals.empty()) throw InputError("no malicious windows at ratio " + format_double(r));
    if (phase == "type") {
      s.by_ratio[r] = evals.front().metrics;
    } else {
      std::vector<std::string> truth, pred, classes;
      for (std::size_t i = 1; i < evals.size(); ++i) {
        const auto& cm = evals[i].confusion;
        classes.insert(classes.end(), cm.classes.begin(), cm.classes.end());
        for (std::size_t t = 0; t < cm.classes.size(); ++t)
          for (std::size_t p = 0; p < cm.classes.size(); ++p)
            for (std::size_t k = 0; k < cm.counts[t][p]; ++k) {
              truth.push_back(cm.classes[t]);
              pred.push_back(cm.classes[p]);
            }
      }
      s.by_ratio[r] = compute_metrics(truth, pred, classes);
    }
  }
  eval_detail::finish_sweep(s);
  return s;
}

struct UnseenResult {
  NoiseSweepResult unseen;
  NoiseSweepResult known;
  std::map<double, double> delta;  // known F1 - unseen F1

  nlohmann::json to_json() const {
    nlohmann::json d = nlohmann::json::array();
    for (const auto& [r, v] : delta) d.push_back({{"ratio", r}, {"known_minus_unseen", v}});
    return {{"unseen", unseen.to_json()}, {"known", known.to_json()}, {"delta", d}};
  }
};

/// Binary sweep on unseen-family windows against length-matched benign
/// windows, next to the known-family sweep. Refuses to report if any unseen
/// family reached training.
inline UnseenResult run_unseen_experiment(const TierBundle& bundle, std::span<const LabeledWindow> unseen_windows,
                                          std::span<const std::string> unseen_families, std::span<const double> ratios,
                                          const std::map<double, std::vector<LabeledWindow>>& known_sets,
                                          std::span<const FlowRecord> test_pool, std::uint64_t seed) {
  if (unseen_families.empty()) throw AuditError("no quarantined families: unseen experiment refused");
  for (const auto& f : bundle.trained_families)
    if (std::find(unseen_families.begin(), unseen_families.end(), f) != unseen_families.end())
      throw AuditError("quarantine audit failed: bundle was trained on '" + f + "'");
  if (unseen_windows.empty()) throw InputError("unseen experiment: no unseen windows");
  for (const auto& w : unseen_windows)
    if (std::find(unseen_families.begin(), unseen_families.end(), w.family) == unseen_families.end())
      throw AuditError("window of family '" + w.family + "' is not quarantined");
  const auto sets = build_noisy_eval_set(unseen_windows, ratios, test_pool, derive_seed(seed, "unseen"));
  std::map<double, std::vector<LabeledWindow>> with_benign;
  for (const auto& [r, ws] : sets) {
    if (r == 0.0) {
      // The clean set carries no benign windows; borrow the known set's.
      auto& v = with_benign[r];
      v = ws;
      auto it = known_sets.find(r);
      if (it != known_sets.end())
        for (const auto& w : it->second)
          if (!w.malicious() && v.size() < 2 * ws.size()) v.push_back(w);
    } else {
      with_benign[r] = ws;
    }
  }
  UnseenResult out;
  out.unseen = run_noise_sweep(bundle, "binary", ratios, with_benign);
  out.known = run_noise_sweep(bundle, "binary", ratios, known_sets);
  for (double r : ratios) out.delta[r] = out.known.f1(r) - out.unseen.f1(r);
  return out;
}

struct TierComparison {
  std::vector<NoiseSweepResult> sweeps;            // ascending tier
  std::map<double, std::vector<std::size_t>> order;  // tier indices sorted by F1, best first

  nlohmann::json to_json() const {
    nlohmann::json s = nlohmann::json::array();
    for (const auto& x : sweeps) s.push_back(x.to_json());
    nlohmann::json o = nlohmann::json::array();
    for (const auto& [r, v] : order) o.push_back({{"ratio", r}, {"tiers_best_first", v}});
    return {{"sweeps", s}, {"ordering", o}};
  }
};

/// Binary sweeps of several tiers, aligned by ratio.
inline TierComparison run_tier_comparison(std::span<const TierBundle> bundles,
                                          const std::map<std::size_t, std::map<double, std::vector<LabeledWindow>>>& sets,
                                          std::span<const double> ratios) {
  TierComparison tc;
  for (const auto& b : bundles) {
    auto it = sets.find(b.config.tier_index);
    if (it == sets.end()) throw InputError("no datasets for tier " + std::to_string(b.config.tier_index));
    tc.sweeps.push_back(run_noise_sweep(b, "binary", ratios, it->second));
  }
  std::sort(tc.sweeps.begin(), tc.sweeps.end(), [](auto& a, auto& b) { return a.tier_index < b.tier_index; });
  for (double r : ratios) {
    std::vector<std::size_t> idx(tc.sweeps.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return tc.sweeps[a].f1(r) > tc.sweeps[b].f1(r); });
    for (auto& i : idx) i = tc.sweeps[i].tier_index;
    tc.order[r] = idx;
  }
  return tc;
}

struct CascadeResult {
  std::size_t tier_index = 0;
  Metrics end_to_end;   // classes: benign + every family
  double accuracy = 0.0;
  double binary_accuracy = 0.0;    // isolated
  double type_accuracy = 0.0;      // isolated, malicious windows
  double family_accuracy = 0.0;    // isolated, true-type family model
  std::size_t type_invocations = 0;

  nlohmann::json to_json() const {
    return {{"tier", tier_index},
            {"accuracy", accuracy},
            {"binary_accuracy", binary_accuracy},
            {"type_accuracy", type_accuracy},
            {"family_accuracy", family_accuracy},
            {"type_invocations", type_invocations},
            {"end_to_end", end_to_end.to_json()}};
  }
};

/// Windows through the full cascade. A malicious window counts as correct only
/// if binary, type and family are all right; a benign one iff predicted benign.
inline CascadeResult run_cascade_experiment(const TierBundle& bundle, std::span<const LabeledWindow> windows) {
  check_bundle(bundle);
  if (windows.empty()) throw InputError("cascade experiment: no windows");
  CascadeResult r;
  r.tier_index = bundle.config.tier_index;
  std::vector<std::string> truth, pred, classes = {std::string(kBenignLabel)};
  std::set<std::string> class_set(classes.begin(), classes.end());
  for (const auto& [type, m] : bundle.family)
    for (const auto& f : m.class_names)
      if (class_set.insert(f).second) classes.push_back(f);
  std::size_t correct = 0, bin_ok = 0, type_ok = 0, fam_ok = 0, n_mal = 0;
  for (const auto& w : windows) {
    const auto v = classify_window(w.flows, bundle);
    const auto latent = bundle.denoiser.encode(w.flows, bundle.normalizer);
    bin_ok += v.malicious == w.malicious();
    std::string label = v.malicious ? v.family->label : std::string(kBenignLabel);
    if (v.type) ++r.type_invocations;
    if (w.malicious()) {
      ++n_mal;
      type_ok += predict_type(*bundle.type, latent).label == w.type;
      auto fit = bundle.family.find(w.type);
      if (fit != bundle.family.end()) fam_ok += predict_family(bundle.family, w.type, latent).label == w.family;
    }
    correct += label == (w.malicious() ? w.family : std::string(kBenignLabel));
    truth.push_back(w.malicious() ? w.family : std::string(kBenignLabel));
    if (!class_set.count(truth.back())) {
      class_set.insert(truth.back());
      classes.push_back(truth.back());
    }
    pred.push_back(label);
  }
  r.end_to_end = compute_metrics(truth, pred, classes);
  const double n = static_cast<double>(windows.size());
  r.accuracy = static_cast<double>(correct) / n;
  r.binary_accuracy = static_cast<double>(bin_ok) / n;
  r.type_accuracy = n_mal ? static_cast<double>(type_ok) / static_cast<double>(n_mal) : 1.0;
  r.family_accuracy = n_mal ? static_cast<double>(fam_ok) / static_cast<double>(n_mal) : 1.0;
  return r;
}

/// Binary F1 of latent and raw-padded classifiers on the same noisy sets.
struct DenoiserBenefit {
  std::map<double, double> latent_f1;
  std::map<double, double> raw_f1;
  double latent_aggregate = 0.0;  // malicious F1 pooled over every ratio >= 1
  double raw_aggregate = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& [r, f] : latent_f1) pts.push_back({{"ratio", r}, {"latent_f1", f}, {"raw_f1", raw_f1.at(r)}});
    return {{"points", pts}, {"latent_aggregate_f1", latent_aggregate}, {"raw_aggregate_f1", raw_aggregate}};
  }
};

inline DenoiserBenefit run_denoiser_benefit(const TierBundle& bundle, const PhaseModel& raw,
                                            const std::map<double, std::vector<LabeledWindow>>& sets) {
  check_bundle(bundle);
  DenoiserBenefit out;
  std::vector<std::string> truth, lat_pred, raw_pred;
  for (const auto& [r, windows] : sets) {
    const auto lat = predict_labels(*bundle.binary, encode_windows(bundle, windows));
    const auto rp = predict_labels(raw, padded_matrix(windows, bundle.denoiser.padded_len(), bundle.normalizer));
    const auto t = binary_truth(windows);
    out.latent_f1[r] = compute_metrics(t, lat, binary_class_names()).of(kMaliciousLabel).f1;
    out.raw_f1[r] = compute_metrics(t, rp, binary_class_names()).of(kMaliciousLabel).f1;
    if (r >= 1.0) {
      truth.insert(truth.end(), t.begin(), t.end());
      lat_pred.insert(lat_pred.end(), lat.begin(), lat.end());
      raw_pred.insert(raw_pred.end(), rp.begin(), rp.end());
    }
  }
  if (!truth.empty()) {
    out.latent_aggregate = compute_metrics(truth, lat_pred, binary_class_names()).of(kMaliciousLabel).f1;
    out.raw_aggregate = compute_metrics(truth, raw_pred, binary_class_names()).of(kMaliciousLabel).f1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tabular output: one row per tier/phase/ratio/class.

inline constexpr std::string_view kMetricsCsvHeader = "tier,phase,ratio,class,precision,recall,f1,support";

inline void append_metric_rows(std::ostringstream& os, std::size_t tier, const std::string& phase, double ratio,
                               const Metrics& m) {
  for (const auto& c : m.per_class)
    os << tier << ',' << phase << ',' << format_double(ratio) << ',' << c.name << ',' << format_double(c.precision)
       << ',' << format_double(c.recall) << ',' << format_double(c.f1) << ',' << c.support << '\n';
  os << tier << ',' << phase << ',' << format_double(ratio) << ",weighted_avg,,," << format_double(m.weighted_f1)
     << ',' << m.total << '\n';
}

}  // namespace malphase
