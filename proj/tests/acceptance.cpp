// Acceptance suite: one PASS/FAIL line per criterion, measured values inline.
// Exit status is the number of failed criteria (0 when all pass).

#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "malphase/malphase.hpp"
#include "oracles/flow_oracle.hpp"
#include "oracles/gradient_check.hpp"

namespace fs = std::filesystem;
using namespace malphase;
using clock_type = std::chrono::steady_clock;

namespace {

double since(clock_type::time_point t0) { return std::chrono::duration<double>(clock_type::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os.setf(std::ios::scientific);
  os.precision(2);
  os << v;
  return os.str();
}

struct Outcome {
  int id;
  std::string name;
  bool pass;
  std::string detail;
  nlohmann::json measured;
};

class Report {
 public:
  void add(Outcome o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << o.id << "] " << o.name << ": " << o.detail << std::endl;
    outcomes_.push_back(std::move(o));
  }
  int failures() const {
    int n = 0;
    for (const auto& o : outcomes_) n += !o.pass;
    return n;
  }
  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& o : outcomes_)
      arr.push_back({{"criterion", o.id}, {"name", o.name}, {"pass", o.pass}, {"detail", o.detail}, {"measured", o.measured}});
    return arr;
  }

 private:
  std::vector<Outcome> outcomes_;
};

// ---------------------------------------------------------------------------
// 1-4: exact oracles

Outcome flow_meter_oracle() {
  const auto t0 = clock_type::now();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> size(1, 5000);
  MeterConfig cfg;
  cfg.idle_timeout = 10;
  cfg.active_timeout = 45;
  cfg.max_payload = 64;
  std::size_t mismatched = 0, packets = 0, flows = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto trace = oracle::random_trace(rng, size(rng));
    packets += trace.size();
    const auto got = assemble_flows(trace, cfg);
    const auto want = oracle::reference_flows(trace, cfg);
    flows += got.size();
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) same = oracle::same_flow(got[i], want[i]);
    mismatched += !same;
  }
  const double s = since(t0);
  return {1, "flow-meter oracle equivalence", mismatched == 0 && s < 60.0,
          "1000 traces, " + std::to_string(packets) + " packets, " + std::to_string(flows) + " flows, " +
              std::to_string(mismatched) + " mismatched traces, " + fmt(s, 1) + " s (limit 60 s)",
          {{"mismatched_traces", mismatched}, {"packets", packets}, {"seconds", s}}};
}

Outcome entropy_exactness() {
  const std::vector<std::uint8_t> constant(1500, 0x41);
  std::vector<std::uint8_t> uniform;
  for (int rep = 0; rep < 8; ++rep)
    for (int b = 0; b < 256; ++b) uniform.push_back(static_cast<std::uint8_t>(b));
  const double h0 = payload_entropy(constant, constant.size());
  const double h8 = payload_entropy(uniform, uniform.size());
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> len(1, 2048), byte(0, 255), alphabet(1, 256);
  int broken = 0;
  for (int i = 0; i < 100; ++i) {
    const int a = alphabet(rng);
    std::vector<std::uint8_t> p(static_cast<std::size_t>(len(rng)));
    for (auto& b : p) b = static_cast<std::uint8_t>(byte(rng) % a);
    const double h = payload_entropy(p, p.size());
    std::shuffle(p.begin(), p.end(), rng);
    broken += payload_entropy(p, p.size()) != h;
  }
  const bool pass = h0 == 0.0 && std::abs(h8 - 8.0) <= 1e-9 && broken == 0;
  return {2, "entropy exactness", pass,
          "constant " + fmt(h0, 12) + ", uniform " + fmt(h8, 12) + " (8 +- 1e-9), " + std::to_string(broken) +
              "/100 permutations changed the value",
          {{"constant", h0}, {"uniform", h8}, {"permutation_changes", broken}}};
}

Outcome gradient_correctness() {
  const auto t0 = clock_type::now();
  const auto r = oracle::check_gradients(3, 50);
  const double s = since(t0);
  bool covered = r.output_pairs.count("softmax/categorical_cross_entropy") &&
                 r.output_pairs.count("sigmoid/binary_cross_entropy");
  for (const char* a : {"relu", "selu", "sigmoid", "softmax"})
    covered = covered && r.output_pairs.count(std::string(a) + "/mean_squared_error") && r.hidden_activations.count(a);
  std::string pairs;
  for (const auto& p : r.output_pairs) pairs += (pairs.empty() ? "" : " ") + p;
  return {3, "gradient correctness", r.mismatches.empty() && covered && s < 60.0,
          "50 networks, " + std::to_string(r.parameters) + " parameters, worst relative error " +
              sci(r.worst_relative) + " (limit 1e-4), " + std::to_string(r.mismatches.size()) +
              " mismatches, outputs {" + pairs + "}, " + fmt(s, 2) + " s",
          {{"worst_relative_error", r.worst_relative}, {"mismatches", r.mismatches.size()}, {"seconds", s}}};
}

Outcome adamax_exactness() {
  std::vector<double> p = {1.0};
  const std::vector<double> g = {1.0};
  nn::AdamaxState st;
  nn::adamax_step(p, g, st, nn::TrainConfig{});
  const double want = 1.0 - 0.002 / (1.0 + 1e-8);
  const double err = std::abs(p[0] - want);
  return {4, "AdaMax exactness", err <= 1e-12,
          "theta " + fmt(p[0], 15) + ", expected " + fmt(want, 15) + ", |error| " + sci(err) + " (limit 1e-12)",
          {{"theta", p[0]}, {"error", err}}};
}

// ---------------------------------------------------------------------------
// 5-9: trained tiers on the synthetic universe

const std::vector<double> kSweepRatios = {0.2, 0.4, 0.8, 1, 2, 4, 8};
const std::vector<double> kUnseenRatios = {0, 0.2, 0.4, 0.6, 0.8, 1, 2};

struct Experiments {
  SyntheticDataset data;
  TrainingOptions options;
  std::map<std::size_t, TierDataset> tiers;
  std::map<std::size_t, TierBundle> bundles;
  std::map<std::size_t, std::map<double, std::vector<LabeledWindow>>> noisy;
  std::map<std::size_t, double> train_seconds;
  double dataset_seconds = 0;
  std::uint64_t seed = 1;

  void train(std::size_t tier) {
    const auto t0 = clock_type::now();
    const auto cfg = TierConfig::standard(tier);
    tiers[tier] = make_tier_dataset(data, cfg.window_size);
    bundles[tier] = train_tier(cfg, tiers[tier], data, options, seed).bundle;
    train_seconds[tier] = since(t0);
    std::vector<double> ratios = {0.0};
    ratios.insert(ratios.end(), kSweepRatios.begin(), kSweepRatios.end());
    ratios.push_back(0.6);
    std::sort(ratios.begin(), ratios.end());
    noisy[tier] = build_noisy_eval_set(tiers[tier].clean_test(), ratios, data.benign_test,
                                       derive_seed(seed, "acceptance-noise", tier), data.benign_train);
    std::cerr << "acceptance: tier " << tier << " trained in " << fmt(train_seconds[tier], 1) << " s\n";
  }
};

Outcome clean_classification(Experiments& x) {
  const auto t0 = clock_type::now();
  const auto r = run_clean_experiment(x.bundles.at(3), x.tiers.at(3).clean_test());
  const double total = x.dataset_seconds + x.train_seconds.at(3) + since(t0);
  const auto& bin = r.phase("binary").metrics;
  const double fb = bin.of(kBenignLabel).f1, fm = bin.of(kMaliciousLabel).f1;
  const double ft = r.phase("type").metrics.weighted_f1;
  bool pass = fb >= 0.95 && fm >= 0.95 && ft >= 0.85 && total < 600.0;
  std::string fam;
  nlohmann::json families = nlohmann::json::object();
  std::size_t n_fam = 0;
  for (const auto& p : r.phases) {
    if (!p.phase.starts_with("family:")) continue;
    ++n_fam;
    const double f = p.metrics.weighted_f1;
    pass = pass && f >= 0.85;
    fam += " " + p.phase.substr(7) + "=" + fmt(f, 3);
    families[p.phase.substr(7)] = f;
  }
  pass = pass && n_fam == kMalwareTypes.size();
  return {5, "clean-sample classification (tier 3)", pass,
          "binary F1 benign " + fmt(fb, 3) + " malicious " + fmt(fm, 3) + " (>= 0.95), type weighted F1 " +
              fmt(ft, 3) + " (>= 0.85), family F1" + fam + " (>= 0.85), train+eval " + fmt(total, 0) +
              " s (limit 600 s), " + std::to_string(x.tiers.at(3).clean_test().size()) + " test windows",
          {{"binary_benign_f1", fb},
           {"binary_malicious_f1", fm},
           {"type_weighted_f1", ft},
           {"family_f1", families},
           {"seconds", total}}};
}

Outcome noise_shape(Experiments& x) {
  const auto s = run_noise_sweep(x.bundles.at(3), "binary", kSweepRatios, x.noisy.at(3));
  bool monotone = true;
  std::string series;
  nlohmann::json pts = nlohmann::json::object();
  for (std::size_t i = 0; i < kSweepRatios.size(); ++i) {
    const double f = s.f1(kSweepRatios[i]);
    series += (i ? " " : "") + format_double(kSweepRatios[i]) + ":" + fmt(f, 3);
    pts[format_double(kSweepRatios[i])] = f;
    if (i && f > s.f1(kSweepRatios[i - 1]) + 0.02) monotone = false;
  }
  const double drop = s.f1(0.2) - s.f1(8);
  return {6, "noise degradation shape (tier 3 binary)", monotone && drop >= 0.10,
          "F1 by ratio {" + series + "}, drop " + fmt(100 * drop, 1) + " points (>= 10), " +
              (monotone ? "no step rises more than 2 points" : "a step rises more than 2 points"),
          {{"f1", pts}, {"drop", drop}, {"monotone_within_tolerance", monotone}}};
}

Outcome denoiser_benefit(Experiments& x) {
  const auto raw = train_raw_binary(x.bundles.at(3), x.tiers.at(3), x.data, x.options, x.seed);
  std::map<double, std::vector<LabeledWindow>> sets;
  for (const auto& [r, w] : x.noisy.at(3))
    if (r >= 1.0) sets[r] = w;
  const auto b = run_denoiser_benefit(x.bundles.at(3), raw, sets);
  std::string per;
  for (const auto& [r, f] : b.latent_f1) per += " r=" + format_double(r) + ":" + fmt(f, 3) + "/" + fmt(b.raw_f1.at(r), 3);
  return {7, "denoiser benefit (tier 3, r >= 1)", b.latent_aggregate >= b.raw_aggregate,
          "aggregate binary F1 latent " + fmt(b.latent_aggregate, 3) + " vs raw " + fmt(b.raw_aggregate, 3) +
              " (latent/raw" + per + ")",
          b.to_json()};
}

Outcome tier_ordering(Experiments& x) {
  std::vector<TierBundle> bundles;
  for (const auto& [t, b] : x.bundles) bundles.push_back(b);
  const std::vector<double> r8 = {8.0};
  const auto tc = run_tier_comparison(bundles, x.noisy, r8);
  std::vector<double> f;
  std::string series;
  for (const auto& s : tc.sweeps) {
    f.push_back(s.f1(8.0));
    series += (series.empty() ? "" : " ") + std::string("t") + std::to_string(s.tier_index) + ":" + fmt(f.back(), 3);
  }
  int inversions = 0;
  bool small = true;
  for (std::size_t i = 1; i < f.size(); ++i)
    if (f[i] < f[i - 1]) {
      ++inversions;
      small = small && f[i - 1] - f[i] <= 0.02;
    }
  const bool pass = f.size() == 4 && f[3] >= f[0] && inversions <= 1 && small;
  return {8, "tier robustness ordering (r = 8)", pass,
          "binary F1 {" + series + "}, " + std::to_string(inversions) + " inversion(s)" +
              (inversions ? (small ? " within 2 points" : " larger than 2 points") : ""),
          {{"f1", f}, {"inversions", inversions}}};
}

Outcome unseen_detection(Experiments& x) {
  const auto& t = x.tiers.at(3);
  const auto r = run_unseen_experiment(x.bundles.at(3), t.unseen, x.data.split.unseen_families, kUnseenRatios,
                                       x.noisy.at(3), x.data.benign_test, derive_seed(x.seed, "acceptance-unseen"));
  bool pass = x.data.split.unseen_families.size() == 6;
  std::string per;
  double worst = 0;
  for (double ratio : kUnseenRatios) {
    const double d = r.delta.at(ratio);
    worst = std::max(worst, std::abs(d));
    per += " r=" + format_double(ratio) + ":" + fmt(r.unseen.f1(ratio), 3) + "/" + fmt(r.known.f1(ratio), 3);
    pass = pass && std::abs(d) <= 0.10;
  }
  return {9, "unseen-family detection (tier 3)", pass,
          std::to_string(x.data.split.unseen_families.size()) + " quarantined families, " +
              std::to_string(t.unseen.size()) + " windows; unseen/known F1" + per + "; largest gap " +
              fmt(100 * worst, 1) + " points (limit 10)",
          r.to_json()};
}

// ---------------------------------------------------------------------------
// 10: CLI determinism

int run_cli(const std::string& cli, const std::string& args, const fs::path& log) {
  const std::string cmd = "'" + cli + "' " + args + " > /dev/null 2>> '" + log.string() + "'";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome cli_determinism(const std::string& cli) {
  const auto t0 = clock_type::now();
  const fs::path root = fs::temp_directory_path() / ("malphase_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path log = root / "stderr.txt";
  {
    std::ofstream(root / "synth.json") << R"({"dataset": {"benign_train_flows": 6000, "benign_test_flows": 4000}})";
    std::ofstream(root / "train.json") << R"({"denoiser": {"hidden": [64], "train": {"epochs": 3}},
      "grid": [{"hidden": [32], "train": {"epochs": 3}}]})";
    std::ofstream(root / "grid.json") << R"([{"hidden": [32], "train": {"epochs": 3}},
      {"hidden": [16, 8], "train": {"epochs": 2}}])";
    std::mt19937_64 rng(10);
    const auto bytes = write_capture(oracle::random_trace(rng, 3000));
    std::ofstream(root / "trace.pcap", std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                                 static_cast<std::streamsize>(bytes.size()));
  }
  auto q = [&](const fs::path& p) { return "'" + p.string() + "'"; };
  std::vector<std::string> failures;
  std::size_t artifacts = 0;
  for (const char* run : {"a", "b"}) {
    const fs::path d = root / run;
    fs::create_directories(d);
    const std::vector<std::string> commands = {
        "meter " + q(root / "trace.pcap") + " --with-endpoints -o " + q(d / "meter" / "flows.csv"),
        "synth --seed 11 --flows-per-family 400 --cap 8 --tiers 1,2 --config " + q(root / "synth.json") + " --out " +
            q(d / "ds"),
        "train --dataset " + q(d / "ds") + " --tiers 1,2 --seed 12 --raw-baseline --config " + q(root / "train.json") +
            " --grid " + q(root / "grid.json") + " --out " + q(d / "bundles"),
        "classify --bundle " + q(d / "bundles") + " --flows " + q(d / "ds" / "flows_test.csv") + " -o " +
            q(d / "classify" / "verdicts.jsonl"),
        "evaluate all --bundle " + q(d / "bundles") + " --dataset " + q(d / "ds") +
            " --seed 13 --plot-data --out " + q(d / "eval")};
    for (const auto& c : commands)
      if (int rc = run_cli(cli, c, log); rc != 0)
        failures.push_back(std::string(run) + ": '" + c.substr(0, c.find(' ')) + "' exited " + std::to_string(rc));
  }
  const std::vector<fs::path> manifests = {"meter/flows.csv.manifest.json", "ds/manifest.json", "bundles/manifest.json",
                                           "classify/verdicts.jsonl.manifest.json", "eval/manifest_all.json"};
  std::size_t equal = 0;
  for (const auto& m : manifests) {
    try {
      const auto a = nlohmann::json::parse(slurp(root / "a" / m));
      const auto b = nlohmann::json::parse(slurp(root / "b" / m));
      bool same = a.at("artifacts_sha256") == b.at("artifacts_sha256") && !a.at("artifacts").empty();
      for (const auto& [name, _] : a.at("artifacts").items()) {
        ++artifacts;
        const auto rel = m.parent_path() / name;
        same = same && slurp(root / "a" / rel) == slurp(root / "b" / rel);
      }
      equal += same;
      if (!same) failures.push_back(m.string() + " differs");
    } catch (const std::exception& e) {
      failures.push_back(m.string() + ": " + e.what());
    }
  }
  const double s = since(t0);
  std::string detail = std::to_string(equal) + "/5 commands (meter, synth, train, classify, evaluate) reproduced " +
                       std::to_string(artifacts) + " artifacts byte-for-byte with equal manifest hashes, " +
                       fmt(s, 1) + " s";
  for (const auto& f : failures) detail += "; " + f;
  if (failures.empty()) fs::remove_all(root);
  return {10, "CLI determinism", failures.empty() && equal == manifests.size(), detail,
          {{"commands_equal", equal}, {"artifacts", artifacts}, {"seconds", s}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"malphase acceptance suite"};
  std::vector<int> only;
  std::string json_out, cli = MALPHASE_CLI_PATH;
  app.add_option("--only", only, "Criteria to run (default all)")->delimiter(',');
  app.add_option("--json", json_out, "Write measured values as JSON");
  app.add_option("--cli", cli, "malphase binary used by criterion 10")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  auto want = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

  Report report;
  auto guarded = [&](int id, const std::string& name, auto&& fn) {
    if (!want(id)) return;
    try {
      report.add(fn());
    } catch (const std::exception& e) {
      report.add({id, name, false, std::string("error: ") + e.what(), nullptr});
    }
  };
  guarded(1, "flow-meter oracle equivalence", flow_meter_oracle);
  guarded(2, "entropy exactness", entropy_exactness);
  guarded(3, "gradient correctness", gradient_correctness);
  guarded(4, "AdaMax exactness", adamax_exactness);

  const bool trained = want(5) || want(6) || want(7) || want(8) || want(9);
  Experiments x;
  std::string setup_error;
  if (trained) {
    try {
      const auto t0 = clock_type::now();
      DatasetOptions opt;
      opt.window_cap = 60;
      x.data = generate_dataset(default_universe(), opt, x.seed);
      x.dataset_seconds = since(t0);
      x.train(3);
      if (want(8))
        for (std::size_t t : {1, 2, 4}) x.train(t);
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
  }
  auto needs_training = [&](int id, const std::string& name, auto&& fn) {
    if (!want(id)) return;
    if (!setup_error.empty()) {
      report.add({id, name, false, "training failed: " + setup_error, nullptr});
      return;
    }
    guarded(id, name, [&] { return fn(x); });
  };
  needs_training(5, "clean-sample classification (tier 3)", clean_classification);
  needs_training(6, "noise degradation shape (tier 3 binary)", noise_shape);
  needs_training(7, "denoiser benefit (tier 3, r >= 1)", denoiser_benefit);
  needs_training(8, "tier robustness ordering (r = 8)", tier_ordering);
  needs_training(9, "unseen-family detection (tier 3)", unseen_detection);
  guarded(10, "CLI determinism", [&] { return cli_determinism(cli); });

  const int failed = report.failures();
  std::cout << "acceptance: " << (failed ? std::to_string(failed) + " criterion(s) failed" : "all criteria passed")
            << std::endl;
  if (!json_out.empty()) std::ofstream(json_out) << report.to_json().dump(2) << "\n";
  return failed;
}
