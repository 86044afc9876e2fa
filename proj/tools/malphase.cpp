// malphase: meter captures, synthesise datasets, train tier bundles, classify
// flow files and run the evaluation experiments.
//
// Exit codes: 0 success, 2 input or usage error, 3 integrity/audit failure.

#include <unistd.h>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "malphase/malphase.hpp"

namespace fs = std::filesystem;
using namespace malphase;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitAudit = 3;

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json_file(const fs::path& p) {
  try {
    return nlohmann::json::parse(read_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(p.string() + ": " + e.what());
  }
}

/// Temp file + rename, so readers never see a partial artifact.
void write_atomic(const fs::path& p, std::string_view data) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw InputError("cannot write " + p.string());
  }
  fs::rename(tmp, p);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Artifacts written by one command, their hashes, and the run's parameters.
/// Wall-clock timings are recorded but kept out of `artifacts_sha256`.
class Run {
 public:
  Run(std::string command, std::vector<std::string> args, std::uint64_t seed, fs::path out_dir)
      : command_(std::move(command)), args_(std::move(args)), seed_(seed), out_dir_(std::move(out_dir)) {}

  void write(const std::string& name, std::string_view content) {
    write_atomic(out_dir_ / name, content);
    artifacts_[name] = sha256_hex(content);
  }

  void config(const std::string& path) {
    config_ = path;
    config_sha_ = sha256_hex(read_file(path));
  }
  void timing(const std::string& stage, double s) { timings_[stage] += s; }
  nlohmann::json& details() { return details_; }

  std::string artifacts_digest() const {
    std::string lines;
    for (const auto& [name, h] : artifacts_) lines += h + "  " + name + "\n";
    return sha256_hex(lines);
  }

  void finish(const fs::path& manifest) const {
    nlohmann::json j = {{"command", command_},
                        {"args", args_},
                        {"seed", seed_},
                        {"output_dir", out_dir_.string()},
                        {"artifacts", artifacts_},
                        {"artifacts_sha256", artifacts_digest()},
                        {"timings_seconds", timings_},
                        {"details", details_}};
    j["config"] = config_.empty() ? nlohmann::json(nullptr) : nlohmann::json(config_);
    if (!config_.empty()) j["config_sha256"] = config_sha_;
    write_atomic(manifest, j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  std::uint64_t seed_;
  fs::path out_dir_;
  std::string config_, config_sha_;
  std::map<std::string, std::string> artifacts_;
  std::map<std::string, double> timings_;
  nlohmann::json details_ = nlohmann::json::object();
};

std::string resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("MALPHASE_OUT_DIR"); env && *env) return env;
  throw InputError("no output directory: pass --out or set MALPHASE_OUT_DIR");
}

std::string bundle_name(std::size_t tier) { return "bundle_tier" + std::to_string(tier) + ".json"; }
std::string raw_name(std::size_t tier) { return "raw_binary_tier" + std::to_string(tier) + ".json"; }

void check_tiers(const std::vector<std::size_t>& tiers) {
  if (tiers.empty()) throw InputError("empty tier list");
  for (auto t : tiers) TierConfig::standard(t);
}

/// Bundles for the requested tiers, or every bundle in the directory.
std::vector<TierBundle> load_bundles(const fs::path& dir, std::vector<std::size_t> tiers) {
  if (!fs::is_directory(dir)) throw InputError("bundle directory not found: " + dir.string());
  if (tiers.empty())
    for (std::size_t t = 1; t <= kTierWindowSizes.size(); ++t)
      if (fs::exists(dir / bundle_name(t))) tiers.push_back(t);
  if (tiers.empty()) throw InputError("no tier bundles in " + dir.string());
  std::vector<TierBundle> out;
  for (auto t : tiers) {
    const auto j = read_json_file(dir / bundle_name(t));
    try {
      out.push_back(TierBundle::from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(bundle_name(t) + ": " + e.what());
    }
    check_bundle(out.back());
  }
  return out;
}

// ---------------------------------------------------------------------------
// meter

struct MeterArgs {
  std::string input, output, label;
  MeterConfig config;
  bool endpoints = false;
};

int cmd_meter(const MeterArgs& a, const std::vector<std::string>& args) {
  a.config.validate();
  const auto bytes = read_file(a.input);
  const auto t0 = std::chrono::steady_clock::now();
  const auto cap = parse_capture(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  if (!cap.warning.empty()) std::cerr << "meter: warning: " << cap.warning << "\n";
  auto flows = assemble_flows(cap.packets, a.config);
  if (!a.label.empty())
    for (auto& f : flows) f.label = a.label;
  const auto csv = flow_csv_string(flows, a.endpoints);
  std::cerr << "meter: " << flows.size() << " flows from " << cap.packets.size() << " packets (" << cap.records
            << " records, " << cap.skipped << " skipped" << (cap.truncated ? ", truncated" : "") << ")\n";
  if (a.output.empty()) {
    std::cout << csv;
    return 0;
  }
  const fs::path out(a.output);
  Run run("meter", args, 0, out.parent_path());
  run.write(out.filename().string(), csv);
  run.timing("meter", seconds_since(t0));
  run.details() = {{"input_sha256", sha256_hex(bytes)},
                   {"idle_timeout", a.config.idle_timeout},
                   {"active_timeout", a.config.active_timeout},
                   {"max_payload", a.config.max_payload},
                   {"flows", flows.size()},
                   {"packets", cap.packets.size()},
                   {"skipped", cap.skipped}};
  run.finish(fs::path(a.output + ".manifest.json"));
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string config, out;
  std::uint64_t seed = 1;
  std::optional<std::size_t> cap, flows_per_family;
  std::vector<std::size_t> tiers = {1, 2, 3, 4};
};

Universe universe_from_config(const nlohmann::json& cfg, std::uint64_t seed) {
  if (!cfg.contains("universe")) return default_universe({.seed = derive_seed(seed, "universe")});
  const auto& u = cfg.at("universe");
  try {
    if (u.contains("known")) return Universe::from_json(u);
    UniverseOptions o;
    o.seed = u.contains("seed") ? u.at("seed").get<std::uint64_t>() : derive_seed(seed, "universe");
    o.malicious_shift = u.value("malicious_shift", o.malicious_shift);
    o.family_spread = u.value("family_spread", o.family_spread);
    o.confusable_spread = u.value("confusable_spread", o.confusable_spread);
    return default_universe(o);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("universe config: ") + e.what());
  }
}

int cmd_synth(const SynthArgs& a, const std::vector<std::string>& args) {
  check_tiers(a.tiers);
  const fs::path out = resolve_out_dir(a.out);
  Run run("synth", args, a.seed, out);
  nlohmann::json cfg = nlohmann::json::object();
  if (!a.config.empty()) {
    cfg = read_json_file(a.config);
    run.config(a.config);
  }
  DatasetOptions opt;
  try {
    const auto d = cfg.value("dataset", nlohmann::json::object());
    opt.flows_per_family = d.value("flows_per_family", opt.flows_per_family);
    opt.benign_train_flows = d.value("benign_train_flows", opt.benign_train_flows);
    opt.benign_test_flows = d.value("benign_test_flows", opt.benign_test_flows);
    opt.window_cap = d.value("window_cap", opt.window_cap);
    opt.split.train_fraction = d.value("train_fraction", opt.split.train_fraction);
    opt.split.test_fraction = 1.0 - opt.split.train_fraction;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("dataset config: ") + e.what());
  }
  if (a.cap) opt.window_cap = *a.cap;
  if (a.flows_per_family) opt.flows_per_family = *a.flows_per_family;

  auto t0 = std::chrono::steady_clock::now();
  const Universe u = universe_from_config(cfg, a.seed);
  const auto d = generate_dataset(u, opt, derive_seed(a.seed, "dataset"));
  run.timing("generate", seconds_since(t0));

  t0 = std::chrono::steady_clock::now();
  std::vector<std::size_t> sizes;
  for (auto t : a.tiers) sizes.push_back(TierConfig::standard(t).window_size);
  for (const auto& [name, content] : dataset_files(d, sizes, opt.to_json())) run.write(name, content);
  run.timing("write", seconds_since(t0));
  run.details() = {{"options", opt.to_json()},
                   {"window_cap", opt.window_cap},
                   {"known_families", u.known.size()},
                   {"unseen_families", u.unseen_families()},
                   {"tier_window_sizes", sizes}};
  run.finish(out / "manifest.json");
  std::cerr << "synth: " << u.known.size() << " known + " << u.unseen.size() << " unseen families written to "
            << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string dataset, out, config, grid;
  std::vector<std::size_t> tiers = {1, 2, 3, 4};
  std::uint64_t seed = 1;
  bool raw_baseline = false;
};

int cmd_train(const TrainArgs& a, const std::vector<std::string>& args) {
  check_tiers(a.tiers);
  const fs::path out = resolve_out_dir(a.out);
  Run run("train", args, a.seed, out);
  TrainingOptions opt;
  if (!a.config.empty()) {
    opt = TrainingOptions::from_json(read_json_file(a.config));
    run.config(a.config);
  }
  if (!a.grid.empty()) {
    const auto g = read_json_file(a.grid);
    const auto& list = g.is_object() ? g.at("grid") : g;
    if (!list.is_array()) throw InputError("grid file must hold an array of candidates");
    opt.grid.clear();
    try {
      for (const auto& c : list) opt.grid.push_back(nn::Candidate::from_json(c));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("grid: ") + e.what());
    }
    opt.validate();
    run.details()["grid_file_sha256"] = sha256_hex(read_file(a.grid));
  }

  auto t0 = std::chrono::steady_clock::now();
  const auto d = load_dataset(a.dataset);
  d.audit();
  run.timing("load", seconds_since(t0));

  nlohmann::json reports = nlohmann::json::array();
  for (auto tier : a.tiers) {
    const auto cfg = TierConfig::standard(tier);
    t0 = std::chrono::steady_clock::now();
    const auto td = load_tier_dataset(a.dataset, d, cfg.window_size);
    const auto trained = train_tier(cfg, td, d, opt, a.seed);
    run.timing("tier" + std::to_string(tier), seconds_since(t0));
    run.write(bundle_name(tier), trained.bundle.to_json().dump() + "\n");
    nlohmann::json history = trained.report.to_json();
    nlohmann::json losses = nlohmann::json::object();
    losses["binary"] = trained.bundle.binary->history.epoch_loss;
    losses["type"] = trained.bundle.type->history.epoch_loss;
    for (const auto& [type, m] : trained.bundle.family) losses["family:" + type] = m.history.epoch_loss;
    history["phase_loss"] = losses;
    run.write("history_tier" + std::to_string(tier) + ".json", history.dump(2) + "\n");
    reports.push_back(trained.report.to_json());
    if (a.raw_baseline) {
      t0 = std::chrono::steady_clock::now();
      const auto raw = train_raw_binary(trained.bundle, td, d, opt, a.seed);
      run.timing("raw_baseline" + std::to_string(tier), seconds_since(t0));
      run.write(raw_name(tier), raw.to_json().dump() + "\n");
    }
    std::cerr << "train: tier " << tier << " done\n";
  }
  run.details() = {{"dataset", a.dataset}, {"tiers", a.tiers}, {"options", opt.to_json()}, {"reports", reports}};
  run.finish(out / "manifest.json");
  return 0;
}

// ---------------------------------------------------------------------------
// classify

struct ClassifyArgs {
  std::string bundles, flows, output;
  std::vector<std::size_t> tiers;
};

int cmd_classify(const ClassifyArgs& a, const std::vector<std::string>& args) {
  if (!a.tiers.empty()) check_tiers(a.tiers);
  const auto bundles = load_bundles(a.bundles, a.tiers);
  std::ifstream in(a.flows);
  if (!in) throw InputError("cannot open " + a.flows);
  const auto t0 = std::chrono::steady_clock::now();
  const auto table = read_flow_csv(in);
  if (!table.has_endpoints) std::cerr << "classify: no endpoint columns, treating all flows as one host\n";
  const auto verdicts = run_all_tiers(per_host_split(table.flows), bundles);
  std::string lines;
  std::size_t flagged = 0;
  for (const auto& v : verdicts) {
    lines += v.to_json().dump() + "\n";
    flagged += v.malicious;
  }
  std::cerr << "classify: " << verdicts.size() << " windows, " << flagged << " malicious\n";
  if (a.output.empty()) {
    std::cout << lines;
    return 0;
  }
  const fs::path out(a.output);
  Run run("classify", args, 0, out.parent_path());
  run.write(out.filename().string(), lines);
  run.timing("classify", seconds_since(t0));
  nlohmann::json tiers = nlohmann::json::array();
  for (const auto& b : bundles) tiers.push_back(b.config.tier_index);
  run.details() = {{"flows_sha256", sha256_hex(read_file(a.flows))},
                   {"tiers", tiers},
                   {"windows", verdicts.size()},
                   {"malicious", flagged}};
  run.finish(fs::path(a.output + ".manifest.json"));
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

const std::vector<std::string> kExperiments = {"clean", "noisy", "unseen", "tiers", "cascade", "denoiser", "all"};

struct EvaluateArgs {
  std::string experiment, bundles, dataset, out;
  std::vector<std::size_t> tiers;
  std::vector<double> ratios = {0, 0.2, 0.4, 0.6, 0.8, 1, 2, 4, 8};
  std::uint64_t seed = 1;
  bool plot_data = false;
};

struct Outputs {
  nlohmann::json results = nlohmann::json::object();
  std::ostringstream csv;
  std::ostringstream plot;
  Outputs() {
    csv << kMetricsCsvHeader << '\n';
    plot << "series,tier,phase,ratio,f1\n";
  }
  void point(const std::string& series, std::size_t tier, const std::string& phase, double ratio, double f1) {
    plot << series << ',' << tier << ',' << phase << ',' << format_double(ratio) << ',' << format_double(f1) << '\n';
  }
  void sweep(const std::string& series, const NoiseSweepResult& s) {
    for (const auto& [r, m] : s.by_ratio) {
      append_metric_rows(csv, s.tier_index, series == s.phase ? s.phase : series + ":" + s.phase, r, m);
      point(series, s.tier_index, s.phase, r, s.f1(r));
    }
  }
};

class Evaluator {
 public:
  Evaluator(const EvaluateArgs& a, Run& run) : a_(a), run_(run) {
    bundles_ = load_bundles(a.bundles, a.tiers);
    const auto t0 = std::chrono::steady_clock::now();
    data_ = load_dataset(a.dataset);
    data_.audit();
    for (const auto& b : bundles_) tier_data_[b.config.tier_index] = load_tier_dataset(a.dataset, data_, b.config.window_size);
    run_.timing("load", seconds_since(t0));
    for (double r : a.ratios)
      if (!(r >= 0)) throw InputError("noise ratios must be >= 0");
  }

  void run(const std::string& name, Outputs& o) {
    const auto t0 = std::chrono::steady_clock::now();
    if (name == "clean") clean(o);
    if (name == "noisy") noisy(o);
    if (name == "unseen") unseen(o);
    if (name == "tiers") tiers(o);
    if (name == "cascade") cascade(o);
    if (name == "denoiser") denoiser(o);
    run_.timing(name, seconds_since(t0));
  }

  bool has_raw_baselines() const {
    for (const auto& b : bundles_)
      if (!fs::exists(fs::path(a_.bundles) / raw_name(b.config.tier_index))) return false;
    return true;
  }

 private:
  std::vector<double> ratios_up_to(double r_max) const {
    std::vector<double> out;
    for (double r : a_.ratios)
      if (r <= r_max + 1e-12) out.push_back(r);
    return out;
  }

  const std::map<double, std::vector<LabeledWindow>>& noisy_sets(const TierBundle& b) {
    const auto tier = b.config.tier_index;
    auto it = sets_.find(tier);
    if (it != sets_.end()) return it->second;
    const auto clean = tier_data_.at(tier).clean_test();
    return sets_[tier] = build_noisy_eval_set(clean, a_.ratios, data_.benign_test,
                                              derive_seed(a_.seed, "eval-noise", tier), data_.benign_train);
  }

  void clean(Outputs& o) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : bundles_) {
      const auto r = run_clean_experiment(b, tier_data_.at(b.config.tier_index).clean_test());
      for (const auto& p : r.phases) {
        append_metric_rows(o.csv, r.tier_index, p.phase, 0.0, p.metrics);
        o.point("clean", r.tier_index, p.phase, 0.0,
                p.phase == "binary" ? p.metrics.of(kMaliciousLabel).f1 : p.metrics.weighted_f1);
      }
      arr.push_back(r.to_json());
    }
    o.results["clean"] = arr;
  }

  void noisy(Outputs& o) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : bundles_) {
      const auto& sets = noisy_sets(b);
      for (std::string phase : {"binary", "type", "family"}) {
        const auto rs = phase == "binary" ? a_.ratios : ratios_up_to(b.config.r_max_multiclass);
        if (rs.empty()) continue;
        const auto s = run_noise_sweep(b, phase, rs, sets);
        o.sweep("noisy", s);
        arr.push_back(s.to_json());
      }
    }
    o.results["noisy"] = arr;
  }

  void unseen(Outputs& o) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : bundles_) {
      const auto rs = ratios_up_to(b.config.r_max_multiclass);
      if (rs.empty()) throw InputError("unseen experiment needs ratios <= " + format_double(b.config.r_max_multiclass));
      const auto r = run_unseen_experiment(b, tier_data_.at(b.config.tier_index).unseen, data_.split.unseen_families,
                                           rs, noisy_sets(b), data_.benign_test,
                                           derive_seed(a_.seed, "eval-unseen", b.config.tier_index));
      o.sweep("unseen", r.unseen);
      o.sweep("known", r.known);
      arr.push_back(r.to_json());
    }
    o.results["unseen"] = arr;
  }

  void tiers(Outputs& o) {
    std::map<std::size_t, std::map<double, std::vector<LabeledWindow>>> sets;
    for (const auto& b : bundles_) sets[b.config.tier_index] = noisy_sets(b);
    const auto tc = run_tier_comparison(bundles_, sets, a_.ratios);
    for (const auto& s : tc.sweeps) o.sweep("tiers", s);
    o.results["tiers"] = tc.to_json();
  }

  void cascade(Outputs& o) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : bundles_) {
      const auto r = run_cascade_experiment(b, tier_data_.at(b.config.tier_index).clean_test());
      append_metric_rows(o.csv, r.tier_index, "cascade", 0.0, r.end_to_end);
      o.point("cascade", r.tier_index, "cascade", 0.0, r.end_to_end.weighted_f1);
      arr.push_back(r.to_json());
    }
    o.results["cascade"] = arr;
  }

  void denoiser(Outputs& o) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : bundles_) {
      const auto tier = b.config.tier_index;
      const fs::path raw_path = fs::path(a_.bundles) / raw_name(tier);
      if (!fs::exists(raw_path))
        throw InputError(raw_path.string() + " missing: train with --raw-baseline for the denoiser experiment");
      PhaseModel raw;
      try {
        raw = PhaseModel::from_json(read_json_file(raw_path));
      } catch (const nlohmann::json::exception& e) {
        throw InputError(raw_name(tier) + ": " + e.what());
      }
      const auto r = run_denoiser_benefit(b, raw, noisy_sets(b));
      for (const auto& [ratio, f] : r.latent_f1) {
        o.point("denoiser", tier, "latent", ratio, f);
        o.point("denoiser", tier, "raw", ratio, r.raw_f1.at(ratio));
      }
      auto j = r.to_json();
      j["tier"] = tier;
      arr.push_back(j);
    }
    o.results["denoiser"] = arr;
  }

  const EvaluateArgs& a_;
  Run& run_;
  std::vector<TierBundle> bundles_;
  SyntheticDataset data_;
  std::map<std::size_t, TierDataset> tier_data_;
  std::map<std::size_t, std::map<double, std::vector<LabeledWindow>>> sets_;
};

int cmd_evaluate(const EvaluateArgs& a, const std::vector<std::string>& args) {
  if (!a.tiers.empty()) check_tiers(a.tiers);
  if (a.ratios.empty()) throw InputError("empty ratio list");
  const fs::path out = resolve_out_dir(a.out);
  Run run("evaluate", args, a.seed, out);
  Evaluator ev(a, run);
  Outputs o;
  std::vector<std::string> names;
  if (a.experiment == "all")
    names.assign(kExperiments.begin(), kExperiments.end() - 1);
  else
    names = {a.experiment};
  for (const auto& n : names) {
    if (n == "denoiser" && a.experiment == "all" && !ev.has_raw_baselines()) {
      std::cerr << "evaluate: no raw baselines, skipping the denoiser experiment\n";
      continue;
    }
    ev.run(n, o);
  }
  const auto& e = a.experiment;
  run.write("results_" + e + ".json", o.results.dump(2) + "\n");
  run.write("metrics_" + e + ".csv", o.csv.str());
  if (a.plot_data) run.write("plot_" + e + ".csv", o.plot.str());
  run.details() = {{"experiment", e}, {"ratios", a.ratios}, {"dataset", a.dataset}, {"bundles", a.bundles}};
  run.finish(out / ("manifest_" + e + ".json"));
  std::cerr << "evaluate: " << e << " written to " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"malphase: multi-phase malware traffic classification"};
  app.require_subcommand(1);
  std::vector<std::string> args(argv + 1, argv + argc);

  MeterArgs meter;
  auto* m = app.add_subcommand("meter", "Convert a pcap capture to a flow CSV");
  m->add_option("pcap", meter.input, "Input capture (classic pcap)")->required();
  m->add_option("-o,--output", meter.output, "Output CSV (default stdout)");
  m->add_option("--idle-timeout", meter.config.idle_timeout, "Idle timeout in seconds")->capture_default_str();
  m->add_option("--active-timeout", meter.config.active_timeout, "Active timeout in seconds")->capture_default_str();
  m->add_option("--max-payload", meter.config.max_payload, "Payload bytes per direction used for entropy")
      ->capture_default_str();
  m->add_flag("--with-endpoints", meter.endpoints, "Append src_ip,src_port,dst_ip columns");
  m->add_option("--label", meter.label, "Label written on every flow");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic labelled dataset");
  s->add_option("--config", synth.config, "JSON config (universe and dataset sections)");
  s->add_option("--seed", synth.seed, "Root seed")->capture_default_str();
  s->add_option("--out", synth.out, "Output directory (default $MALPHASE_OUT_DIR)");
  s->add_option("--cap", synth.cap, "Windows per family per split, per tier");
  s->add_option("--flows-per-family", synth.flows_per_family, "Flows generated per family");
  s->add_option("--tiers", synth.tiers, "Tiers whose window index is written")->delimiter(',')->capture_default_str();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train tier bundles on a dataset");
  t->add_option("--dataset", train.dataset, "Dataset directory")->required();
  t->add_option("--out", train.out, "Output directory (default $MALPHASE_OUT_DIR)");
  t->add_option("--tiers", train.tiers, "Tiers to train")->delimiter(',')->capture_default_str();
  t->add_option("--config", train.config, "Training options JSON");
  t->add_option("--grid", train.grid, "JSON array of classifier candidates");
  t->add_option("--seed", train.seed, "Root seed")->capture_default_str();
  t->add_flag("--raw-baseline", train.raw_baseline, "Also train the raw-input binary baseline");

  ClassifyArgs classify;
  auto* c = app.add_subcommand("classify", "Run the tier cascades over a flow CSV");
  c->add_option("--bundle", classify.bundles, "Bundle directory")->required();
  c->add_option("--flows", classify.flows, "Flow CSV")->required();
  c->add_option("--tiers", classify.tiers, "Tiers to run (default: every bundle present)")->delimiter(',');
  c->add_option("-o,--output", classify.output, "Verdict JSON-lines file (default stdout)");

  EvaluateArgs evaluate;
  auto* e = app.add_subcommand("evaluate", "Run an evaluation experiment");
  e->add_option("experiment", evaluate.experiment, "clean, noisy, unseen, tiers, cascade, denoiser or all")
      ->required()
      ->check(CLI::IsMember(kExperiments));
  e->add_option("--bundle", evaluate.bundles, "Bundle directory")->required();
  e->add_option("--dataset", evaluate.dataset, "Dataset directory")->required();
  e->add_option("--out", evaluate.out, "Output directory (default $MALPHASE_OUT_DIR)");
  e->add_option("--tiers", evaluate.tiers, "Tiers (default: every bundle present)")->delimiter(',');
  e->add_option("--ratios", evaluate.ratios, "Noise ratios")->delimiter(',')->capture_default_str();
  e->add_option("--seed", evaluate.seed, "Root seed")->capture_default_str();
  e->add_flag("--plot-data", evaluate.plot_data, "Write plot-ready series");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kExitInput;
  }

  try {
    if (*m) return cmd_meter(meter, args);
    if (*s) return cmd_synth(synth, args);
    if (*t) return cmd_train(train, args);
    if (*c) return cmd_classify(classify, args);
    if (*e) return cmd_evaluate(evaluate, args);
  } catch (const AuditError& ex) {
    std::cerr << "malphase: audit failure: " << ex.what() << "\n";
    return kExitAudit;
  } catch (const InputError& ex) {
    std::cerr << "malphase: " << ex.what() << "\n";
    return kExitInput;
  } catch (const nlohmann::json::exception& ex) {
    std::cerr << "malphase: malformed JSON: " << ex.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& ex) {
    std::cerr << "malphase: " << ex.what() << "\n";
    return kExitInput;
  } catch (const std::exception& ex) {
    std::cerr << "malphase: error: " << ex.what() << "\n";
    return 1;
  }
  return kExitInput;
}
