#pragma once

// Generated datasets: per-family train/test flows, disjoint benign pools,
// quarantined unseen families, per-tier window sets, and their on-disk form
// (flow CSVs plus a windows index).

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "malphase/flow_csv.hpp"
#include "malphase/pipeline.hpp"
#include "malphase/synth.hpp"

namespace malphase {

struct DatasetOptions {
  std::size_t flows_per_family = 2400;
  std::size_t benign_train_flows = 40000;
  std::size_t benign_test_flows = 20000;
  std::size_t window_cap = 500;  // windows per family per split, per tier
  SplitSpec split;

  nlohmann::json to_json() const {
    return {{"flows_per_family", flows_per_family},
            {"benign_train_flows", benign_train_flows},
            {"benign_test_flows", benign_test_flows},
            {"window_cap", window_cap},
            {"split", split.to_json()}};
  }
};

struct SyntheticDataset {
  Universe universe;
  SplitSpec split;
  std::size_t window_cap = 500;
  std::map<std::string, std::vector<FlowRecord>> train;   // known families
  std::map<std::string, std::vector<FlowRecord>> test;    // known families
  std::map<std::string, std::vector<FlowRecord>> unseen;  // quarantined families
  std::vector<FlowRecord> benign_train;
  std::vector<FlowRecord> benign_test;

  std::map<std::string, std::string> type_map() const {
    std::map<std::string, std::string> out;
    for (const auto* set : {&universe.known, &universe.unseen})
      for (const auto& p : *set) out[p.family] = p.type;
    out[std::string(kBenignLabel)] = std::string(kBenignLabel);
    return out;
  }

  /// Every flow that may reach a training artifact.
  std::vector<FlowRecord> training_flows() const {
    std::vector<FlowRecord> out;
    for (const auto& [f, flows] : train) out.insert(out.end(), flows.begin(), flows.end());
    out.insert(out.end(), benign_train.begin(), benign_train.end());
    return out;
  }

  void audit() const {
    const auto flows = training_flows();
    audit_quarantine(flows, split.unseen_families, "training flows");
    for (const auto& [f, _] : train)
      if (std::find(split.unseen_families.begin(), split.unseen_families.end(), f) != split.unseen_families.end())
        throw AuditError("quarantine violation: unseen family '" + f + "' has training flows");
    if (!pools_disjoint(benign_train, benign_test)) throw AuditError("benign train and test pools overlap");
  }
};

namespace dataset_detail {

inline Ipv4Address family_host(std::size_t index, std::uint8_t block) {
  return Ipv4Address(10, block, static_cast<std::uint8_t>(index / 250), static_cast<std::uint8_t>(index % 250 + 2));
}

}  // namespace dataset_detail

/// Generate flows for every profile and split them. Each family's first
/// train_fraction of flows (in time order) is the training split.
inline SyntheticDataset generate_dataset(const Universe& universe, const DatasetOptions& opt, std::uint64_t seed) {
  universe.validate();
  opt.split.validate();
  if (opt.flows_per_family < 2) throw InputError("flows_per_family must be >= 2");
  SyntheticDataset d;
  d.universe = universe;
  d.split = opt.split;
  d.split.seed = seed;
  d.split.unseen_families = universe.unseen_families();
  d.window_cap = opt.window_cap;

  const auto n_train = static_cast<std::size_t>(
      std::llround(opt.split.train_fraction * static_cast<double>(opt.flows_per_family)));
  for (std::size_t i = 0; i < universe.known.size(); ++i) {
    const auto& p = universe.known[i];
    auto flows = generate_flows(p, opt.flows_per_family, derive_seed(seed, "flows:" + p.family),
                                dataset_detail::family_host(i, 1));
    d.train[p.family].assign(flows.begin(), flows.begin() + static_cast<std::ptrdiff_t>(n_train));
    d.test[p.family].assign(flows.begin() + static_cast<std::ptrdiff_t>(n_train), flows.end());
  }
  for (std::size_t i = 0; i < universe.unseen.size(); ++i) {
    const auto& p = universe.unseen[i];
    d.unseen[p.family] = generate_flows(p, opt.flows_per_family, derive_seed(seed, "flows:" + p.family),
                                        dataset_detail::family_host(i, 2));
  }
  d.benign_train = generate_flows(universe.benign, opt.benign_train_flows, derive_seed(seed, "benign-train"),
                                  Ipv4Address(10, 0, 0, 2));
  d.benign_test = generate_flows(universe.benign, opt.benign_test_flows, derive_seed(seed, "benign-test"),
                                 Ipv4Address(10, 0, 0, 3));
  d.audit();
  return d;
}

/// Clean windows of one tier.
struct TierDataset {
  std::size_t window_size = 0;
  std::vector<LabeledWindow> train;  // malicious, known families
  std::vector<LabeledWindow> test;   // malicious, known families
  std::vector<LabeledWindow> unseen;
  std::vector<LabeledWindow> benign_train;
  std::vector<LabeledWindow> benign_test;

  /// Balanced clean test set: malicious test windows followed by as many
  /// benign test windows (or all of them, if fewer).
  std::vector<LabeledWindow> clean_test() const {
    std::vector<LabeledWindow> out = test;
    const std::size_t n = std::min(test.size(), benign_test.size());
    out.insert(out.end(), benign_test.begin(), benign_test.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
  }
};

namespace dataset_detail {

inline std::vector<LabeledWindow> capped_windows(const std::map<std::string, std::vector<FlowRecord>>& flows,
                                                 const std::map<std::string, std::string>& types, std::size_t m,
                                                 std::size_t cap, std::uint64_t seed) {
  std::map<std::string, std::vector<FlowRecord>> usable;
  for (const auto& [f, v] : flows)
    if (v.size() >= m) usable[f] = v;
  for (const auto& [f, v] : flows)
    if (v.size() < m)
      throw InputError("family '" + f + "' has " + std::to_string(v.size()) + " flows, fewer than M=" +
                       std::to_string(m));
  std::map<std::string, std::vector<LabeledWindow>> by_family;
  for (auto& w : build_windows(usable, types, m)) by_family[w.family].push_back(std::move(w));
  std::vector<LabeledWindow> out;
  for (auto& [f, ws] : balance_classes(by_family, cap, seed))
    for (auto& w : ws) out.push_back(std::move(w));
  return out;
}

}  // namespace dataset_detail

inline TierDataset make_tier_dataset(const SyntheticDataset& d, std::size_t m) {
  const auto types = d.type_map();
  const std::uint64_t s = derive_seed(d.split.seed, "windows", m);
  TierDataset t;
  t.window_size = m;
  t.train = dataset_detail::capped_windows(d.train, types, m, d.window_cap, derive_seed(s, "train"));
  t.test = dataset_detail::capped_windows(d.test, types, m, d.window_cap, derive_seed(s, "test"));
  t.unseen = dataset_detail::capped_windows(d.unseen, types, m, d.window_cap, derive_seed(s, "unseen"));
  const std::string benign(kBenignLabel);
  t.benign_train = build_windows({{benign, d.benign_train}}, types, m);
  t.benign_test = build_windows({{benign, d.benign_test}}, types, m);
  audit_quarantine(t.train, d.split.unseen_families, "tier training windows");
  return t;
}

// ---------------------------------------------------------------------------
// On-disk form

namespace dataset_detail {

inline const std::vector<std::pair<std::string, std::string>>& split_files() {
  static const std::vector<std::pair<std::string, std::string>> files = {
      {"train", "flows_train.csv"},
      {"test", "flows_test.csv"},
      {"unseen", "flows_unseen.csv"},
      {"benign_train", "benign_train.csv"},
      {"benign_test", "benign_test.csv"}};
  return files;
}

inline std::vector<FlowRecord> concat(const std::map<std::string, std::vector<FlowRecord>>& m) {
  std::vector<FlowRecord> out;
  for (const auto& [_, v] : m) out.insert(out.end(), v.begin(), v.end());
  return out;
}

inline std::map<std::string, std::vector<FlowRecord>> regroup(const std::vector<FlowRecord>& flows) {
  std::map<std::string, std::vector<FlowRecord>> out;
  for (const auto& f : flows) {
    if (!f.label) throw InputError("dataset flow without a label");
    out[*f.label].push_back(f);
  }
  return out;
}

inline std::vector<FlowRecord> read_csv_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot open " + p.string());
  return read_flow_csv(in).flows;
}

}  // namespace dataset_detail

/// In-memory images of the dataset files, keyed by file name.
inline std::map<std::string, std::string> dataset_files(const SyntheticDataset& d,
                                                        std::span<const std::size_t> tier_sizes,
                                                        const nlohmann::json& options) {
  using namespace dataset_detail;
  std::map<std::string, std::vector<FlowRecord>> split_flows = {
      {"train", concat(d.train)},
      {"test", concat(d.test)},
      {"unseen", concat(d.unseen)},
      {"benign_train", d.benign_train},
      {"benign_test", d.benign_test}};
  std::map<std::string, std::string> files;
  for (const auto& [split, name] : split_files()) files[name] = flow_csv_string(split_flows[split], true);

  // Windows index: row numbers refer to data rows (0-based) of each file.
  nlohmann::json index = {{"files", nlohmann::json::object()}, {"tiers", nlohmann::json::object()}};
  for (const auto& [split, name] : split_files()) index["files"][split] = name;
  for (std::size_t m : tier_sizes) {
    const TierDataset t = make_tier_dataset(d, m);
    nlohmann::json windows = nlohmann::json::array();
    auto emit = [&](const std::string& split, const std::vector<LabeledWindow>& ws) {
      const auto& rows = split_flows[split];
      std::map<std::pair<double, std::uint32_t>, std::size_t> row_of;
      for (std::size_t i = 0; i < rows.size(); ++i)
        row_of[{rows[i].start_time, rows[i].key.initiator_ip.value}] = i;
      for (const auto& w : ws) {
        std::vector<std::size_t> r;
        for (const auto& f : w.flows) r.push_back(row_of.at({f.start_time, f.key.initiator_ip.value}));
        windows.push_back({{"id", windows.size()},
                           {"split", split},
                           {"rows", r},
                           {"label", w.malicious() ? std::string(kMaliciousLabel) : std::string(kBenignLabel)},
                           {"family", w.family},
                           {"type", w.type}});
      }
    };
    emit("train", t.train);
    emit("test", t.test);
    emit("unseen", t.unseen);
    emit("benign_train", t.benign_train);
    emit("benign_test", t.benign_test);
    index["tiers"][std::to_string(m)] = {{"window_size", m}, {"windows", windows}};
  }
  files["windows.json"] = index.dump(1) + "\n";
  files["universe.json"] = d.universe.to_json().dump(2) + "\n";
  nlohmann::json split = d.split.to_json();
  split["window_cap"] = d.window_cap;
  split["options"] = options;
  files["split.json"] = split.dump(2) + "\n";
  return files;
}

inline SyntheticDataset load_dataset(const std::filesystem::path& dir) {
  using namespace dataset_detail;
  auto read_json = [&](const std::string& name) {
    std::ifstream in(dir / name);
    if (!in) throw InputError("dataset file missing: " + (dir / name).string());
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(name + ": " + e.what());
    }
  };
  SyntheticDataset d;
  try {
    d.universe = Universe::from_json(read_json("universe.json"));
    const auto split = read_json("split.json");
    d.split = SplitSpec::from_json(split);
    d.window_cap = split.at("window_cap").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("dataset metadata: ") + e.what());
  }
  d.train = regroup(read_csv_file(dir / "flows_train.csv"));
  d.test = regroup(read_csv_file(dir / "flows_test.csv"));
  d.unseen = regroup(read_csv_file(dir / "flows_unseen.csv"));
  d.benign_train = read_csv_file(dir / "benign_train.csv");
  d.benign_test = read_csv_file(dir / "benign_test.csv");
  return d;
}

/// Windows of one tier as recorded in the dataset's windows index.
inline TierDataset load_tier_dataset(const std::filesystem::path& dir, const SyntheticDataset& d, std::size_t m) {
  std::ifstream in(dir / "windows.json");
  if (!in) throw InputError("dataset has no windows.json");
  const auto index = nlohmann::json::parse(in);
  const auto key = std::to_string(m);
  if (!index.at("tiers").contains(key))
    throw InputError("windows index has no tier with M=" + key);
  std::map<std::string, std::vector<FlowRecord>> split_flows = {
      {"train", dataset_detail::concat(d.train)},
      {"test", dataset_detail::concat(d.test)},
      {"unseen", dataset_detail::concat(d.unseen)},
      {"benign_train", d.benign_train},
      {"benign_test", d.benign_test}};
  TierDataset t;
  t.window_size = m;
  std::map<std::string, std::vector<LabeledWindow>*> target = {{"train", &t.train},
                                                               {"test", &t.test},
                                                               {"unseen", &t.unseen},
                                                               {"benign_train", &t.benign_train},
                                                               {"benign_test", &t.benign_test}};
  for (const auto& w : index["tiers"][key].at("windows")) {
    const auto split = w.at("split").get<std::string>();
    const auto& rows = split_flows.at(split);
    LabeledWindow lw;
    lw.family = w.at("family").get<std::string>();
    lw.type = w.at("type").get<std::string>();
    for (auto r : w.at("rows").get<std::vector<std::size_t>>()) {
      if (r >= rows.size()) throw InputError("windows index row out of range");
      lw.flows.push_back(rows[r]);
    }
    if (lw.flows.size() != m) throw InputError("windows index entry has the wrong length");
    target.at(split)->push_back(std::move(lw));
  }
  audit_quarantine(t.train, d.split.unseen_families, "tier training windows");
  return t;
}

}  // namespace malphase
