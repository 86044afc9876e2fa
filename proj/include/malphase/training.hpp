#pragma once

// Tier training: normalizer fit, denoiser, and the three classifier phases,
// each trained on seeded noisy realisations of the clean training windows.
// Also trains the raw-padded-input baseline used to measure the denoiser.

#include <chrono>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "malphase/classifiers.hpp"
#include "malphase/dataset.hpp"
#include "malphase/denoiser.hpp"
#include "malphase/pipeline.hpp"

namespace malphase {

inline nn::Candidate default_classifier_candidate() {
  nn::Candidate c;
  c.train.epochs = 30;
  return c;
}

struct TrainingOptions {
  DenoiserConfig denoiser;
  std::vector<nn::Candidate> grid = {default_classifier_candidate()};
  double validation_fraction = 0.15;  // held out only when the grid has > 1 candidate
  std::vector<double> binary_ratios = {0, 0.2, 0.4, 0.6, 0.8, 1, 2, 4, 8};
  std::vector<double> multiclass_ratios = {0, 0.2, 0.4, 0.6, 0.8, 1, 2};
  std::size_t realisations = 1;  // noisy copies per (window, ratio) for the classifiers

  void validate() const {
    if (grid.empty()) throw InputError("training grid needs at least one candidate");
    if (binary_ratios.empty() || multiclass_ratios.empty()) throw InputError("ratio lists must be non-empty");
    for (const auto* rs : {&binary_ratios, &multiclass_ratios})
      for (double r : *rs)
        if (!(r >= 0)) throw InputError("noise ratios must be >= 0");
    if (realisations < 1) throw InputError("realisations must be >= 1");
    if (!(validation_fraction > 0 && validation_fraction < 1))
      throw InputError("validation_fraction must lie in (0, 1)");
  }

  nlohmann::json to_json() const {
    nlohmann::json g = nlohmann::json::array();
    for (const auto& c : grid) g.push_back(c.to_json());
    return {{"denoiser", denoiser.to_json()},
            {"grid", g},
            {"validation_fraction", validation_fraction},
            {"binary_ratios", binary_ratios},
            {"multiclass_ratios", multiclass_ratios},
            {"realisations", realisations}};
  }

  static TrainingOptions from_json(const nlohmann::json& j) {
    TrainingOptions o;
    try {
      if (j.contains("denoiser")) {
        const auto& d = j.at("denoiser");
        o.denoiser.hidden = d.value("hidden", o.denoiser.hidden);
        o.denoiser.latent_dim = d.value("latent_dim", o.denoiser.latent_dim);
        if (d.contains("train")) o.denoiser.train = nn::TrainConfig::from_json(d.at("train"));
      }
      if (j.contains("grid")) {
        o.grid.clear();
        for (const auto& c : j.at("grid")) o.grid.push_back(nn::Candidate::from_json(c));
      }
      o.validation_fraction = j.value("validation_fraction", o.validation_fraction);
      o.binary_ratios = j.value("binary_ratios", o.binary_ratios);
      o.multiclass_ratios = j.value("multiclass_ratios", o.multiclass_ratios);
      o.realisations = j.value("realisations", o.realisations);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("training config: ") + e.what());
    }
    o.validate();
    return o;
  }
};

/// One classifier training input: a malicious window index with a noise
/// ratio, or (window == npos) a benign run of length M + round(r * M).
struct NoisySample {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t window = npos;
  double ratio = 0.0;
  std::uint64_t seed = 0;
};

/// Builds padded inputs for NoisySamples over pre-normalised windows.
class SampleFactory {
 public:
  SampleFactory(const std::vector<EncodedWindow>& malicious, const std::vector<FeatureVector>& pool,
                std::size_t window_size, std::size_t padded_len)
      : malicious_(&malicious), pool_(&pool), m_(window_size), padded_(padded_len) {}

  std::size_t input_size() const { return padded_ * kNumFeatures; }

  void fill(const NoisySample& s, double* out) const {
    Rng rng(s.seed);
    if (s.window == NoisySample::npos) {
      const auto run = benign_run<FeatureVector>(*pool_, m_ + noise_count(s.ratio, m_), rng);
      pad_rows(run, padded_, out);
    } else {
      const auto noisy = inject_noise<FeatureVector>((*malicious_)[s.window], *pool_, s.ratio, rng);
      pad_rows(noisy, padded_, out);
    }
  }

  nn::Matrix batch(std::span<const NoisySample> samples) const {
    nn::Matrix x(static_cast<Eigen::Index>(input_size()), static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) fill(samples[i], x.col(static_cast<Eigen::Index>(i)).data());
    return x;
  }

 private:
  const std::vector<EncodedWindow>* malicious_;
  const std::vector<FeatureVector>* pool_;
  std::size_t m_;
  std::size_t padded_;
};

/// Encoder latents for samples, computed in chunks to bound memory.
inline nn::Matrix encode_samples(const DenoisingAutoencoder& dae, const SampleFactory& factory,
                                 std::span<const NoisySample> samples, std::size_t chunk = 512) {
  nn::Matrix out(static_cast<Eigen::Index>(dae.latent_dim()), static_cast<Eigen::Index>(samples.size()));
  for (std::size_t s = 0; s < samples.size(); s += chunk) {
    const std::size_t len = std::min(chunk, samples.size() - s);
    out.middleCols(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(len)) =
        dae.encode_batch(factory.batch(samples.subspan(s, len)));
  }
  return out;
}

struct LabeledSamples {
  std::vector<NoisySample> samples;
  std::vector<std::string> labels;
};

/// Binary set: every malicious window at every ratio, and as many benign runs
/// of matching length.
inline LabeledSamples binary_samples(std::size_t n_windows, std::span<const double> ratios, std::size_t realisations,
                                     std::uint64_t seed) {
  LabeledSamples out;
  std::size_t counter = 0;
  for (double r : ratios)
    for (std::size_t k = 0; k < realisations; ++k)
      for (std::size_t i = 0; i < n_windows; ++i) {
        out.samples.push_back({i, r, derive_seed(seed, "binary-mal", counter)});
        out.labels.emplace_back(kMaliciousLabel);
        out.samples.push_back({NoisySample::npos, r, derive_seed(seed, "binary-ben", counter)});
        out.labels.emplace_back(kBenignLabel);
        ++counter;
      }
  return out;
}

/// Malicious windows selected by `keep`, each at every ratio; labelled by `label_of`.
template <typename Keep, typename LabelOf>
LabeledSamples malicious_samples(std::size_t n_windows, std::span<const double> ratios, std::size_t realisations,
                                 std::uint64_t seed, Keep keep, LabelOf label_of) {
  LabeledSamples out;
  std::size_t counter = 0;
  for (double r : ratios)
    for (std::size_t k = 0; k < realisations; ++k)
      for (std::size_t i = 0; i < n_windows; ++i, ++counter) {
        if (!keep(i)) continue;
        out.samples.push_back({i, r, derive_seed(seed, "multiclass", counter)});
        out.labels.push_back(label_of(i));
      }
  return out;
}

struct PhaseReport {
  std::string name;
  std::size_t samples = 0;
  std::vector<nlohmann::json> candidates;
  std::vector<double> validation_losses;  // empty when the grid has one candidate
  std::size_t winner = 0;

  nlohmann::json to_json() const {
    return {{"phase", name},
            {"samples", samples},
            {"candidates", candidates},
            {"validation_losses", validation_losses},
            {"winner", winner}};
  }
};

namespace training_detail {

inline nn::Candidate seeded(nn::Candidate c, std::uint64_t seed, const std::string& phase) {
  c.init_seed = derive_seed(seed, "init:" + phase, c.init_seed);
  c.train.shuffle_seed = derive_seed(seed, "shuffle:" + phase, c.train.shuffle_seed);
  return c;
}

}  // namespace training_detail

/// Grid search (when more than one candidate) over a seeded train/validation
/// split, then the winner as trained on the training part. A single
/// candidate trains on everything.
inline std::pair<PhaseModel, PhaseReport> fit_phase(Phase phase, std::vector<std::string> class_names,
                                                    const nn::Matrix& inputs, const std::vector<std::string>& labels,
                                                    const TrainingOptions& opt, std::uint64_t seed,
                                                    const std::string& report_name, std::string type_name = {}) {
  if (phase == Phase::kBinary) class_names = binary_class_names();
  PhaseReport report;
  report.name = report_name;
  report.samples = labels.size();
  std::vector<nn::Candidate> grid;
  for (const auto& c : opt.grid) {
    grid.push_back(training_detail::seeded(c, seed, report_name));
    report.candidates.push_back(c.to_json());
  }
  if (grid.size() == 1) {
    auto model = train_phase(phase, class_names, inputs, labels, grid[0], type_name);
    return {std::move(model), std::move(report)};
  }

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "validation-split:" + report_name));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(opt.validation_fraction * static_cast<double>(order.size()))));
  if (n_val >= order.size()) throw InputError("too few samples to hold out a validation set");
  auto take = [&](std::size_t from, std::size_t to) {
    nn::Matrix x(inputs.rows(), static_cast<Eigen::Index>(to - from));
    std::vector<std::string> l;
    for (std::size_t i = from; i < to; ++i) {
      x.col(static_cast<Eigen::Index>(i - from)) = inputs.col(static_cast<Eigen::Index>(order[i]));
      l.push_back(labels[order[i]]);
    }
    return std::make_pair(std::move(x), std::move(l));
  };
  auto [vx, vl] = take(0, n_val);
  auto [tx, tl] = take(n_val, order.size());
  const auto train_set = phase_dataset(phase, class_names, tx, tl);
  nn::Dataset val_set;
  val_set.inputs = std::move(vx);
  {
    // Validation labels may miss a class; build targets without the presence check.
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < class_names.size(); ++i) index[class_names[i]] = i;
    const auto n = static_cast<Eigen::Index>(vl.size());
    if (phase == Phase::kBinary) {
      val_set.targets = nn::Matrix::Zero(1, n);
      for (Eigen::Index i = 0; i < n; ++i) val_set.targets(0, i) = vl[static_cast<std::size_t>(i)] == kMaliciousLabel;
    } else {
      val_set.targets = nn::Matrix::Zero(static_cast<Eigen::Index>(class_names.size()), n);
      for (Eigen::Index i = 0; i < n; ++i)
        val_set.targets(static_cast<Eigen::Index>(index.at(vl[static_cast<std::size_t>(i)])), i) = 1.0;
    }
  }
  const auto result = nn::grid_search(
      grid,
      [&](const nn::Candidate& c) {
        return phase_network(phase, static_cast<std::size_t>(inputs.rows()), class_names.size(), c);
      },
      train_set, val_set);
  report.validation_losses = result.validation_losses;
  report.winner = result.best;
  PhaseModel model;
  model.phase = phase;
  model.type_name = std::move(type_name);
  model.network = result.best_network;
  model.class_names = std::move(class_names);
  model.history = result.best_history;
  return {std::move(model), std::move(report)};
}

struct TierTrainingReport {
  std::size_t tier_index = 0;
  std::vector<double> denoiser_loss;
  std::vector<PhaseReport> phases;
  std::map<std::string, double> seconds;  // wall-clock per stage; not part of artifacts

  nlohmann::json to_json() const {
    nlohmann::json p = nlohmann::json::array();
    for (const auto& r : phases) p.push_back(r.to_json());
    return {{"tier", tier_index}, {"denoiser_loss", denoiser_loss}, {"phases", p}};
  }
};

struct TrainedTier {
  TierBundle bundle;
  TierTrainingReport report;
};

/// Normalizer fitted on every training flow (never on unseen families or the
/// benign test pool).
inline Normalizer fit_normalizer(const SyntheticDataset& d) {
  d.audit();
  const auto flows = d.training_flows();
  std::vector<FeatureVector> rows;
  rows.reserve(flows.size());
  for (const auto& f : flows) rows.push_back(encode_flow(f));
  return Normalizer::fit(rows);
}

namespace training_detail {

struct Prepared {
  std::vector<EncodedWindow> windows;
  std::vector<FeatureVector> pool;
};

inline Prepared prepare(const TierDataset& t, const SyntheticDataset& d, const Normalizer& normalizer) {
  Prepared p;
  for (const auto& w : t.train) p.windows.push_back(normalize_window(w.flows, normalizer));
  p.pool = normalize_window(d.benign_train, normalizer);
  return p;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace training_detail

/// Train a complete tier bundle.
inline TrainedTier train_tier(const TierConfig& config, const TierDataset& t, const SyntheticDataset& d,
                              const TrainingOptions& opt, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  opt.validate();
  if (t.window_size != config.window_size) throw InputError("tier dataset window size does not match the tier");
  if (t.train.empty()) throw InputError("tier has no training windows");
  audit_quarantine(t.train, d.split.unseen_families, "tier training windows");
  audit_quarantine(d.benign_train, d.split.unseen_families, "benign training pool");

  const std::uint64_t tseed = derive_seed(seed, "tier", config.tier_index);
  TrainedTier out;
  out.report.tier_index = config.tier_index;
  TierBundle& b = out.bundle;
  b.config = config;
  b.config.r_max_binary = *std::max_element(opt.binary_ratios.begin(), opt.binary_ratios.end());
  b.config.r_max_multiclass = *std::max_element(opt.multiclass_ratios.begin(), opt.multiclass_ratios.end());

  auto t0 = clock::now();
  b.normalizer = fit_normalizer(d);
  const auto prep = training_detail::prepare(t, d, b.normalizer);
  out.report.seconds["normalize"] = training_detail::seconds_since(t0);

  t0 = clock::now();
  DenoiserConfig dcfg = opt.denoiser;
  dcfg.init_seed = derive_seed(tseed, "denoiser-init", dcfg.init_seed);
  dcfg.noise_seed = derive_seed(tseed, "denoiser-noise", dcfg.noise_seed);
  dcfg.train.shuffle_seed = derive_seed(tseed, "denoiser-shuffle", dcfg.train.shuffle_seed);
  auto dres = train_denoiser(prep.windows, opt.binary_ratios, prep.pool, dcfg);
  b.denoiser = std::move(dres.model);
  out.report.denoiser_loss = dres.history.epoch_loss;
  out.report.seconds["denoiser"] = training_detail::seconds_since(t0);

  const SampleFactory factory(prep.windows, prep.pool, config.window_size, b.denoiser.padded_len());

  t0 = clock::now();
  {
    const auto s = binary_samples(prep.windows.size(), opt.binary_ratios, opt.realisations,
                                  derive_seed(tseed, "binary-samples"));
    const auto latents = encode_samples(b.denoiser, factory, s.samples);
    auto [model, report] = fit_phase(Phase::kBinary, {}, latents, s.labels, opt, tseed, "binary");
    b.binary = std::move(model);
    out.report.phases.push_back(std::move(report));
  }
  out.report.seconds["binary"] = training_detail::seconds_since(t0);

  t0 = clock::now();
  {
    const auto s = malicious_samples(
        prep.windows.size(), opt.multiclass_ratios, opt.realisations, derive_seed(tseed, "multiclass-samples"),
        [](std::size_t) { return true; }, [&](std::size_t i) { return t.train[i].type; });
    const auto latents = encode_samples(b.denoiser, factory, s.samples);
    std::vector<std::string> types(kMalwareTypes.begin(), kMalwareTypes.end());
    auto [model, report] = fit_phase(Phase::kType, types, latents, s.labels, opt, tseed, "type");
    b.type = std::move(model);
    out.report.phases.push_back(std::move(report));

    for (const auto& type : kMalwareTypes) {
      std::vector<std::size_t> cols;
      std::vector<std::string> labels;
      for (std::size_t k = 0; k < s.samples.size(); ++k)
        if (t.train[s.samples[k].window].type == type) {
          cols.push_back(k);
          labels.push_back(t.train[s.samples[k].window].family);
        }
      nn::Matrix x(latents.rows(), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t k = 0; k < cols.size(); ++k)
        x.col(static_cast<Eigen::Index>(k)) = latents.col(static_cast<Eigen::Index>(cols[k]));
      auto families = d.universe.taxonomy.families_by_type.at(type);
      auto [fm, fr] = fit_phase(Phase::kFamily, families, x, labels, opt, tseed, "family:" + type, type);
      b.family.emplace(type, std::move(fm));
      out.report.phases.push_back(std::move(fr));
    }
  }
  out.report.seconds["multiclass"] = training_detail::seconds_since(t0);

  std::set<std::string> seen;
  for (const auto& w : t.train) seen.insert(w.family);
  seen.insert(std::string(kBenignLabel));
  b.trained_families.assign(seen.begin(), seen.end());
  for (const auto& f : b.trained_families)
    if (std::find(d.split.unseen_families.begin(), d.split.unseen_families.end(), f) !=
        d.split.unseen_families.end())
      throw AuditError("quarantine violation: bundle trained on unseen family '" + f + "'");
  return out;
}

/// Binary classifier on raw padded inputs, trained on exactly the samples and
/// candidate the latent binary classifier of `bundle` saw (single candidate).
inline PhaseModel train_raw_binary(const TierBundle& bundle, const TierDataset& t, const SyntheticDataset& d,
                                   const TrainingOptions& opt, std::uint64_t seed) {
  const std::uint64_t tseed = derive_seed(seed, "tier", bundle.config.tier_index);
  const auto prep = training_detail::prepare(t, d, bundle.normalizer);
  const SampleFactory factory(prep.windows, prep.pool, t.window_size, bundle.denoiser.padded_len());
  const auto s = binary_samples(prep.windows.size(), opt.binary_ratios, opt.realisations,
                                derive_seed(tseed, "binary-samples"));
  const auto c = training_detail::seeded(opt.grid.front(), tseed, "binary");
  PhaseModel model;
  model.phase = Phase::kBinary;
  model.class_names = binary_class_names();
  model.network = phase_network(Phase::kBinary, factory.input_size(), 2, c);
  model.history = nn::train(
      model.network, s.samples.size(),
      [&](std::span<const std::size_t> idx, std::size_t, nn::Matrix& x, nn::Matrix& y) {
        x.resize(static_cast<Eigen::Index>(factory.input_size()), static_cast<Eigen::Index>(idx.size()));
        y.resize(1, static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
          factory.fill(s.samples[idx[k]], x.col(static_cast<Eigen::Index>(k)).data());
          y(0, static_cast<Eigen::Index>(k)) = s.labels[idx[k]] == kMaliciousLabel ? 1.0 : 0.0;
        }
      },
      c.train);
  return model;
}

}  // namespace malphase
