#pragma once

// Synthetic labelled traffic: per-family generative profiles, window
// construction, class balancing and noisy evaluation sets.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "malphase/classifiers.hpp"
#include "malphase/common.hpp"
#include "malphase/denoiser.hpp"
#include "malphase/flow_meter.hpp"

namespace malphase {

struct LogNormal {
  double mu = 0.0;
  double sigma = 1.0;
};

struct BetaParams {
  double a = 1.0;
  double b = 1.0;
};

struct PortWeight {
  std::uint16_t port = 0;
  double weight = 1.0;
};

inline void to_json(nlohmann::json& j, const LogNormal& d) { j = {{"mu", d.mu}, {"sigma", d.sigma}}; }
inline void from_json(const nlohmann::json& j, LogNormal& d) {
  d.mu = j.at("mu").get<double>();
  d.sigma = j.at("sigma").get<double>();
}
inline void to_json(nlohmann::json& j, const BetaParams& d) { j = {{"a", d.a}, {"b", d.b}}; }
inline void from_json(const nlohmann::json& j, BetaParams& d) {
  d.a = j.at("a").get<double>();
  d.b = j.at("b").get<double>();
}
inline void to_json(nlohmann::json& j, const PortWeight& p) { j = {{"port", p.port}, {"weight", p.weight}}; }
inline void from_json(const nlohmann::json& j, PortWeight& p) {
  p.port = j.at("port").get<std::uint16_t>();
  p.weight = j.at("weight").get<double>();
}

/// Generative description of one family's (or benign) flows.
///
/// Packet counts are floor(exp(N(mu, sigma))), with at least one forward
/// packet. Payload bytes per packet are log-normal; entropies are Beta
/// distributed and scaled to [0, 8] bits.
struct SyntheticProfile {
  std::string family;
  std::string type;  // one of the five malware types, or "benign"
  LogNormal duration;
  LogNormal rtt;
  double tcp_prob = 0.5;
  std::vector<PortWeight> ports;
  double local_prob = 0.0;
  LogNormal pkts_fwd;
  LogNormal pkts_rev;
  LogNormal payload_fwd;  // bytes per packet
  LogNormal payload_rev;
  BetaParams entropy_fwd;
  BetaParams entropy_rev;
  double mean_gap = 1.0;  // seconds between flow starts

  void validate() const {
    auto fail = [&](const std::string& what) {
      throw InputError("profile '" + family + "': " + what);
    };
    if (family.empty()) throw InputError("profile without a family name");
    for (const auto* d : {&duration, &rtt, &pkts_fwd, &pkts_rev, &payload_fwd, &payload_rev})
      if (!(d->sigma > 0) || !std::isfinite(d->mu)) fail("log-normal parameters must be finite with sigma > 0");
    if (!(tcp_prob >= 0 && tcp_prob <= 1)) fail("tcp_prob must lie in [0, 1]");
    if (!(local_prob >= 0 && local_prob <= 1)) fail("local_prob must lie in [0, 1]");
    if (ports.empty()) fail("no destination ports");
    for (const auto& p : ports)
      if (!(p.weight > 0)) fail("port weights must be > 0");
    for (const auto* b : {&entropy_fwd, &entropy_rev})
      if (!(b->a > 0 && b->b > 0)) fail("beta parameters must be > 0");
    if (!(mean_gap > 0)) fail("mean_gap must be > 0");
  }

  nlohmann::json to_json() const {
    return {{"family", family},         {"type", type},
            {"duration", duration},     {"rtt", rtt},
            {"tcp_prob", tcp_prob},     {"ports", ports},
            {"local_prob", local_prob}, {"pkts_fwd", pkts_fwd},
            {"pkts_rev", pkts_rev},     {"payload_fwd", payload_fwd},
            {"payload_rev", payload_rev}, {"entropy_fwd", entropy_fwd},
            {"entropy_rev", entropy_rev}, {"mean_gap", mean_gap}};
  }

  static SyntheticProfile from_json(const nlohmann::json& j) {
    SyntheticProfile p;
    p.family = j.at("family").get<std::string>();
    p.type = j.at("type").get<std::string>();
    p.duration = j.at("duration").get<LogNormal>();
    p.rtt = j.at("rtt").get<LogNormal>();
    p.tcp_prob = j.at("tcp_prob").get<double>();
    p.ports = j.at("ports").get<std::vector<PortWeight>>();
    p.local_prob = j.at("local_prob").get<double>();
    p.pkts_fwd = j.at("pkts_fwd").get<LogNormal>();
    p.pkts_rev = j.at("pkts_rev").get<LogNormal>();
    p.payload_fwd = j.at("payload_fwd").get<LogNormal>();
    p.payload_rev = j.at("payload_rev").get<LogNormal>();
    p.entropy_fwd = j.at("entropy_fwd").get<BetaParams>();
    p.entropy_rev = j.at("entropy_rev").get<BetaParams>();
    p.mean_gap = j.at("mean_gap").get<double>();
    p.validate();
    return p;
  }
};

namespace synth_detail {

inline double sample_beta(const BetaParams& b, Rng& rng) {
  std::gamma_distribution<double> ga(b.a, 1.0);
  std::gamma_distribution<double> gb(b.b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x + y > 0 ? x / (x + y) : 0.5;
}

inline double sample_lognormal(const LogNormal& d, Rng& rng) {
  std::normal_distribution<double> n(d.mu, d.sigma);
  return std::exp(n(rng));
}

inline Ipv4Address random_public_address(Rng& rng) {
  std::uniform_int_distribution<std::uint32_t> dist(0x01000000u, 0xdfffffffu);
  while (true) {
    const Ipv4Address a{dist(rng)};
    if (!is_local_destination(a) && (a.value >> 24) != 0) return a;
  }
}

inline Ipv4Address random_local_address(Rng& rng) {
  std::uniform_int_distribution<std::uint32_t> host(1, 254);
  return Ipv4Address(192, 168, 1, static_cast<std::uint8_t>(host(rng)));
}

}  // namespace synth_detail

/// Independent draws from a profile; start times follow exponential gaps.
inline std::vector<FlowRecord> generate_flows(const SyntheticProfile& profile, std::size_t count,
                                              std::uint64_t seed, Ipv4Address host = Ipv4Address(10, 0, 0, 2),
                                              double start_time = 0.0) {
  using namespace synth_detail;
  profile.validate();
  if (count == 0) throw InputError("generate_flows: count must be >= 1");
  Rng rng(seed);
  std::exponential_distribution<double> gap(1.0 / profile.mean_gap);
  std::bernoulli_distribution tcp(profile.tcp_prob);
  std::bernoulli_distribution local(profile.local_prob);
  std::vector<double> weights;
  for (const auto& p : profile.ports) weights.push_back(p.weight);
  std::discrete_distribution<std::size_t> port(weights.begin(), weights.end());
  std::uniform_int_distribution<std::uint32_t> ephemeral(49152, 65535);

  std::vector<FlowRecord> out;
  out.reserve(count);
  double t = start_time;
  const std::string label = profile.type == kBenignLabel ? std::string(kBenignLabel) : profile.family;
  for (std::size_t i = 0; i < count; ++i) {
    t += gap(rng);
    FlowRecord f;
    f.start_time = t;
    f.protocol = tcp(rng) ? kProtoTcp : kProtoUdp;
    f.dst_is_local = local(rng);
    f.dst_port = profile.ports[port(rng)].port;
    f.key.initiator_ip = host;
    f.key.initiator_port = static_cast<std::uint16_t>(ephemeral(rng));
    f.key.responder_ip = f.dst_is_local ? random_local_address(rng) : random_public_address(rng);
    f.key.responder_port = f.dst_port;
    f.key.protocol = f.protocol;

    f.pkts_fwd = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(sample_lognormal(profile.pkts_fwd, rng))));
    f.pkts_rev = static_cast<std::uint64_t>(std::floor(sample_lognormal(profile.pkts_rev, rng)));
    const double bpp_fwd = sample_lognormal(profile.payload_fwd, rng);
    const double bpp_rev = sample_lognormal(profile.payload_rev, rng);
    f.bytes_fwd = static_cast<std::uint64_t>(std::llround(bpp_fwd * static_cast<double>(f.pkts_fwd)));
    f.bytes_rev = static_cast<std::uint64_t>(std::llround(bpp_rev * static_cast<double>(f.pkts_rev)));
    const double ent_f = 8.0 * sample_beta(profile.entropy_fwd, rng);
    const double ent_r = 8.0 * sample_beta(profile.entropy_rev, rng);
    f.entropy_fwd = f.bytes_fwd > 0 ? ent_f : 0.0;
    f.entropy_rev = f.bytes_rev > 0 ? ent_r : 0.0;
    const double dur = sample_lognormal(profile.duration, rng);
    const double rtt = sample_lognormal(profile.rtt, rng);
    f.duration = f.pkts_fwd + f.pkts_rev > 1 ? dur : 0.0;
    f.rtt = f.pkts_rev > 0 ? rtt : 0.0;
    f.label = label;
    out.push_back(std::move(f));
  }
  return out;
}

/// A complete synthetic world: taxonomy, known and unseen malicious profiles,
/// and the benign profile.
struct Universe {
  MalwareTaxonomy taxonomy;
  std::vector<SyntheticProfile> known;
  std::vector<SyntheticProfile> unseen;
  SyntheticProfile benign;

  const SyntheticProfile& profile(std::string_view family) const {
    for (const auto* set : {&known, &unseen})
      for (const auto& p : *set)
        if (p.family == family) return p;
    if (family == kBenignLabel) return benign;
    throw InputError("no profile for family '" + std::string(family) + "'");
  }

  std::vector<std::string> unseen_families() const {
    std::vector<std::string> out;
    for (const auto& p : unseen) out.push_back(p.family);
    return out;
  }

  std::string type_of(std::string_view family) const { return profile(family).type; }

  void validate() const {
    taxonomy.validate();
    benign.validate();
    if (benign.type != kBenignLabel) throw InputError("benign profile must have type 'benign'");
    std::set<std::string> names;
    for (const auto& p : known) {
      p.validate();
      if (!names.insert(p.family).second) throw InputError("duplicate family '" + p.family + "'");
      const auto t = taxonomy.type_of(p.family);
      if (!t || *t != p.type) throw InputError("family '" + p.family + "' disagrees with the taxonomy");
    }
    for (const auto& p : unseen) {
      p.validate();
      if (!names.insert(p.family).second) throw InputError("duplicate family '" + p.family + "'");
      if (taxonomy.type_of(p.family)) throw InputError("unseen family '" + p.family + "' is in the taxonomy");
    }
    if (known.size() != taxonomy.all_families().size())
      throw InputError("every taxonomy family needs a profile");
  }

  nlohmann::json to_json() const {
    nlohmann::json k = nlohmann::json::array(), u = nlohmann::json::array();
    for (const auto& p : known) k.push_back(p.to_json());
    for (const auto& p : unseen) u.push_back(p.to_json());
    return {{"taxonomy", taxonomy.to_json()}, {"benign", benign.to_json()}, {"known", k}, {"unseen", u}};
  }

  static Universe from_json(const nlohmann::json& j) {
    Universe u;
    u.taxonomy = MalwareTaxonomy::from_json(j.at("taxonomy"));
    u.benign = SyntheticProfile::from_json(j.at("benign"));
    for (const auto& p : j.at("known")) u.known.push_back(SyntheticProfile::from_json(p));
    for (const auto& p : j.value("unseen", nlohmann::json::array())) u.unseen.push_back(SyntheticProfile::from_json(p));
    u.validate();
    return u;
  }
};

/// Knobs of the default universe. Offsets are in units of each feature's
/// within-profile standard deviation.
struct UniverseOptions {
  std::uint64_t seed = 7;
  double malicious_shift = 0.6;  // scales every type's offset from benign
  double family_spread = 0.45;   // per-coordinate family perturbation
  double confusable_spread = 0.03;
};

namespace synth_detail {

// Profile coordinates: log-normal mus in sigma units, entropy means in [0,1],
// protocol/local probabilities.
struct Coordinates {
  double duration, rtt, pkts_fwd, pkts_rev, payload_fwd, payload_rev;
  double entropy_fwd, entropy_rev;
  double tcp, local;
};

inline constexpr double kDurationSigma = 1.2;
inline constexpr double kRttSigma = 0.7;
inline constexpr double kPktsSigma = 0.9;
inline constexpr double kPayloadSigma = 0.8;
inline constexpr double kEntropyConcentration = 10.0;
inline constexpr double kEntropySd = 0.13;  // approximate, for offsets in sd units

inline constexpr Coordinates kBenignCoords = {1.6, -3.2, 2.4, 2.5, 5.0, 6.3, 0.74, 0.78, 0.75, 0.30};

struct TypeBase {
  const char* type;
  // Offsets from benign, in sd units (probabilities: absolute offsets).
  Coordinates offset;
  std::vector<PortWeight> ports;
};

inline std::vector<TypeBase> type_bases() {
  return {
      {"adware", {0.6, 0.5, -0.4, 0.6, 0.2, 0.8, -0.8, -0.2, 0.15, -0.2}, {{80, 0.5}, {8080, 0.3}, {443, 0.2}}},
      {"ransomware", {-0.9, 0.3, 0.5, -1.0, 0.9, -1.0, 0.6, -1.3, 0.05, 0.0}, {{443, 0.5}, {9001, 0.3}, {53, 0.2}}},
      {"trojan", {-0.7, 0.9, -0.5, -0.3, 0.8, -0.4, -0.6, -0.9, 0.1, -0.2}, {{443, 0.4}, {8443, 0.3}, {4444, 0.3}}},
      {"virus", {-0.3, -0.6, -1.0, -0.6, -0.9, -0.3, -1.3, 0.4, -0.35, 0.25}, {{53, 0.4}, {6667, 0.3}, {25, 0.3}}},
      {"worm", {-1.4, -0.9, -1.2, -1.6, -1.0, -1.2, -0.4, -0.8, -0.2, 0.45}, {{445, 0.5}, {139, 0.25}, {135, 0.25}}},
  };
}

inline BetaParams beta_with_mean(double mean) {
  const double m = std::clamp(mean, 0.05, 0.95);
  return {m * kEntropyConcentration, (1.0 - m) * kEntropyConcentration};
}

inline SyntheticProfile profile_from(const std::string& family, const std::string& type, const Coordinates& c,
                                     std::vector<PortWeight> ports, double mean_gap) {
  SyntheticProfile p;
  p.family = family;
  p.type = type;
  p.duration = {c.duration, kDurationSigma};
  p.rtt = {c.rtt, kRttSigma};
  p.pkts_fwd = {c.pkts_fwd, kPktsSigma};
  p.pkts_rev = {c.pkts_rev, kPktsSigma};
  p.payload_fwd = {c.payload_fwd, kPayloadSigma};
  p.payload_rev = {c.payload_rev, kPayloadSigma};
  p.entropy_fwd = beta_with_mean(c.entropy_fwd);
  p.entropy_rev = beta_with_mean(c.entropy_rev);
  p.tcp_prob = std::clamp(c.tcp, 0.02, 0.98);
  p.local_prob = std::clamp(c.local, 0.0, 0.95);
  p.ports = std::move(ports);
  p.mean_gap = mean_gap;
  return p;
}

inline Coordinates apply_offset(const Coordinates& base, const Coordinates& off, double scale) {
  return {base.duration + scale * off.duration * kDurationSigma,
          base.rtt + scale * off.rtt * kRttSigma,
          base.pkts_fwd + scale * off.pkts_fwd * kPktsSigma,
          base.pkts_rev + scale * off.pkts_rev * kPktsSigma,
          base.payload_fwd + scale * off.payload_fwd * kPayloadSigma,
          base.payload_rev + scale * off.payload_rev * kPayloadSigma,
          base.entropy_fwd + scale * off.entropy_fwd * kEntropySd,
          base.entropy_rev + scale * off.entropy_rev * kEntropySd,
          base.tcp + scale * off.tcp,
          base.local + scale * off.local};
}

inline Coordinates random_offset(Rng& rng, double spread) {
  std::normal_distribution<double> n(0.0, spread);
  Coordinates c{};
  c.duration = n(rng);
  c.rtt = n(rng);
  c.pkts_fwd = n(rng);
  c.pkts_rev = n(rng);
  c.payload_fwd = n(rng);
  c.payload_rev = n(rng);
  c.entropy_fwd = n(rng);
  c.entropy_rev = n(rng);
  c.tcp = n(rng) * 0.15;
  c.local = n(rng) * 0.15;
  return c;
}

inline std::vector<PortWeight> perturb_ports(std::vector<PortWeight> ports, Rng& rng, double spread) {
  std::normal_distribution<double> n(0.0, spread);
  for (auto& p : ports) p.weight *= std::exp(n(rng));
  double total = 0;
  for (const auto& p : ports) total += p.weight;
  for (auto& p : ports) p.weight /= total;
  return ports;
}

}  // namespace synth_detail

/// The default world: 38 known families over five types (9/5/15/3/6), six
/// unseen families, one benign profile. upatre and zbot are near-identical.
inline Universe default_universe(const UniverseOptions& opt = {}) {
  using namespace synth_detail;
  Universe u;
  u.taxonomy.families_by_type = {
      {"adware",
       {"directdownloader", "downloadguide", "hotbar", "inbox", "installcore", "playtech", "softcnapp", "softonic",
        "techsnab"}},
      {"ransomware", {"cerber", "deshacop", "sage", "virlock", "wannacry"}},
      {"trojan",
       {"bublik", "byfh", "cycbot", "delf", "mudrop", "ramnit", "razy", "scar", "shiz", "ulise", "unruy", "upatre",
        "vtflooder", "zbot", "zusy"}},
      {"virus", {"pioneer", "sality", "viking"}},
      {"worm", {"allaple", "drolnux", "mydoom", "socks", "warezov", "windef"}},
  };
  u.benign = profile_from(std::string(kBenignLabel), std::string(kBenignLabel), kBenignCoords,
                          {{443, 0.35}, {80, 0.15}, {53, 0.2}, {22, 0.03}, {123, 0.03}, {993, 0.03}, {8080, 0.04},
                           {445, 0.04}, {139, 0.02}, {135, 0.02}, {25, 0.03}, {8443, 0.03}, {6667, 0.01},
                           {4444, 0.01}, {9001, 0.01}},
                          1.5);

  const auto bases = type_bases();
  auto base_for = [&](const std::string& type) -> const TypeBase& {
    for (const auto& b : bases)
      if (type == b.type) return b;
    throw InputError("unknown type " + type);
  };
  auto make_family = [&](const std::string& family, const std::string& type, Rng& rng) {
    const auto& tb = base_for(type);
    const Coordinates type_coords = apply_offset(kBenignCoords, tb.offset, opt.malicious_shift);
    const Coordinates fam = apply_offset(type_coords, random_offset(rng, opt.family_spread), 1.0);
    std::uniform_real_distribution<double> gap(0.3, 3.0);
    return profile_from(family, type, fam, perturb_ports(tb.ports, rng, 0.6), gap(rng));
  };

  Rng rng(derive_seed(opt.seed, "universe"));
  for (const auto& type : kMalwareTypes) {
    for (const auto& family : u.taxonomy.families_by_type.at(type)) {
      Rng frng(derive_seed(opt.seed, "family:" + family));
      u.known.push_back(make_family(family, type, frng));
    }
  }
  // zbot mirrors upatre closely; the two are meant to be hard to tell apart.
  {
    auto& upatre = *std::find_if(u.known.begin(), u.known.end(), [](auto& p) { return p.family == "upatre"; });
    auto& zbot = *std::find_if(u.known.begin(), u.known.end(), [](auto& p) { return p.family == "zbot"; });
    Rng zrng(derive_seed(opt.seed, "confusable"));
    const Coordinates up = {upatre.duration.mu, upatre.rtt.mu, upatre.pkts_fwd.mu, upatre.pkts_rev.mu,
                            upatre.payload_fwd.mu, upatre.payload_rev.mu,
                            upatre.entropy_fwd.a / kEntropyConcentration, upatre.entropy_rev.a / kEntropyConcentration,
                            upatre.tcp_prob, upatre.local_prob};
    zbot = profile_from("zbot", "trojan", apply_offset(up, random_offset(zrng, opt.confusable_spread), 1.0),
                        perturb_ports(upatre.ports, zrng, 0.05), upatre.mean_gap * 1.05);
  }

  const std::vector<std::pair<std::string, std::string>> unseen = {
      {"autoit", "worm"},      {"banload", "trojan"}, {"fareit", "trojan"},
      {"goldun", "ransomware"}, {"upantix", "adware"}, {"virut", "virus"}};
  for (const auto& [family, type] : unseen) {
    Rng frng(derive_seed(opt.seed, "family:" + family));
    u.unseen.push_back(make_family(family, type, frng));
  }
  u.validate();
  return u;
}

/// Count of distribution parameters in which two profiles differ by more than
/// `tolerance` (relative).
inline std::size_t differing_parameters(const SyntheticProfile& a, const SyntheticProfile& b, double tolerance = 0.05) {
  auto differs = [&](double x, double y) {
    return std::abs(x - y) > tolerance * std::max({std::abs(x), std::abs(y), 1e-9});
  };
  std::size_t n = 0;
  for (auto [x, y] : std::initializer_list<std::pair<const LogNormal*, const LogNormal*>>{
           {&a.duration, &b.duration}, {&a.rtt, &b.rtt}, {&a.pkts_fwd, &b.pkts_fwd}, {&a.pkts_rev, &b.pkts_rev},
           {&a.payload_fwd, &b.payload_fwd}, {&a.payload_rev, &b.payload_rev}}) {
    n += differs(x->mu, y->mu);
    n += differs(x->sigma, y->sigma);
  }
  for (auto [x, y] : std::initializer_list<std::pair<const BetaParams*, const BetaParams*>>{
           {&a.entropy_fwd, &b.entropy_fwd}, {&a.entropy_rev, &b.entropy_rev}}) {
    n += differs(x->a, y->a);
    n += differs(x->b, y->b);
  }
  n += differs(a.tcp_prob, b.tcp_prob);
  n += differs(a.local_prob, b.local_prob);
  n += differs(a.mean_gap, b.mean_gap);
  return n;
}

/// A window of flows with its ground truth.
struct LabeledWindow {
  std::vector<FlowRecord> flows;
  std::string family;  // "benign" for benign windows
  std::string type;    // "benign" for benign windows

  bool malicious() const { return family != kBenignLabel; }
};

/// Consecutive disjoint runs of M same-family flows, per family. A zero
/// `windows_per_family` takes as many windows as fit.
inline std::vector<LabeledWindow> build_windows(const std::map<std::string, std::vector<FlowRecord>>& flows_by_family,
                                                const std::map<std::string, std::string>& type_of, std::size_t m,
                                                std::size_t windows_per_family = 0) {
  if (m == 0) throw InputError("build_windows: window size must be >= 1");
  std::vector<LabeledWindow> out;
  for (const auto& [family, flows] : flows_by_family) {
    const std::size_t fit = flows.size() / m;
    const std::size_t want = windows_per_family ? windows_per_family : fit;
    if (fit < want || fit == 0)
      throw InputError("build_windows: family '" + family + "' has " + std::to_string(flows.size()) +
                       " flows, needs " + std::to_string(std::max<std::size_t>(want, 1) * m));
    auto t = type_of.find(family);
    const std::string type = t != type_of.end() ? t->second : std::string(kBenignLabel);
    for (std::size_t k = 0; k < want; ++k) {
      LabeledWindow w;
      w.flows.assign(flows.begin() + static_cast<std::ptrdiff_t>(k * m),
                     flows.begin() + static_cast<std::ptrdiff_t>((k + 1) * m));
      w.family = family;
      w.type = type;
      out.push_back(std::move(w));
    }
  }
  return out;
}

/// Subsample classes above `cap` (seeded, order preserving); smaller classes
/// are kept whole.
template <typename T>
std::map<std::string, std::vector<T>> balance_classes(const std::map<std::string, std::vector<T>>& by_class,
                                                      std::size_t cap, std::uint64_t seed) {
  if (cap < 1) throw InputError("balance_classes: cap must be >= 1");
  std::map<std::string, std::vector<T>> out;
  for (const auto& [cls, items] : by_class) {
    if (items.size() <= cap) {
      out[cls] = items;
      continue;
    }
    Rng rng(derive_seed(seed, "balance:" + cls));
    std::vector<T> picked;
    picked.reserve(cap);
    std::sample(items.begin(), items.end(), std::back_inserter(picked), cap, rng);
    out[cls] = std::move(picked);
  }
  return out;
}

/// Train/test split and quarantine policy.
struct SplitSpec {
  double train_fraction = 0.7;
  double test_fraction = 0.3;
  std::uint64_t seed = 0;
  std::vector<std::string> unseen_families;

  void validate() const {
    if (train_fraction <= 0 || test_fraction <= 0 || std::abs(train_fraction + test_fraction - 1.0) > 1e-9)
      throw InputError("split fractions must be positive and sum to 1");
  }

  nlohmann::json to_json() const {
    return {{"train_fraction", train_fraction},
            {"test_fraction", test_fraction},
            {"seed", seed},
            {"unseen_families", unseen_families},
            {"benign_pools", {{"train", "benign_train"}, {"test", "benign_test"}}}};
  }

  static SplitSpec from_json(const nlohmann::json& j) {
    SplitSpec s;
    s.train_fraction = j.at("train_fraction").get<double>();
    s.test_fraction = j.at("test_fraction").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.unseen_families = j.at("unseen_families").get<std::vector<std::string>>();
    s.validate();
    return s;
  }
};

/// Throws AuditError if any flow carries an unseen family's label.
inline void audit_quarantine(std::span<const FlowRecord> flows, std::span<const std::string> unseen_families,
                             std::string_view artefact) {
  for (const auto& f : flows)
    if (f.label && std::find(unseen_families.begin(), unseen_families.end(), *f.label) != unseen_families.end())
      throw AuditError("quarantine violation: unseen family '" + *f.label + "' found in " + std::string(artefact));
}

inline void audit_quarantine(std::span<const LabeledWindow> windows, std::span<const std::string> unseen_families,
                             std::string_view artefact) {
  for (const auto& w : windows) {
    if (std::find(unseen_families.begin(), unseen_families.end(), w.family) != unseen_families.end())
      throw AuditError("quarantine violation: unseen family '" + w.family + "' labels a window in " +
                       std::string(artefact));
    audit_quarantine(w.flows, unseen_families, artefact);
  }
}

/// True when no flow record appears in both pools.
inline bool pools_disjoint(std::span<const FlowRecord> a, std::span<const FlowRecord> b) {
  auto fingerprint = [](const FlowRecord& f) {
    return std::make_tuple(f.start_time, f.duration, f.rtt, f.protocol, f.dst_port, f.pkts_fwd, f.bytes_fwd,
                           f.pkts_rev, f.bytes_rev, f.entropy_fwd, f.entropy_rev, f.key.initiator_ip.value,
                           f.key.initiator_port, f.key.responder_ip.value);
  };
  std::set<decltype(fingerprint(a[0]))> seen;
  for (const auto& f : a) seen.insert(fingerprint(f));
  for (const auto& f : b)
    if (seen.count(fingerprint(f))) return false;
  return true;
}

/// Random consecutive run of `length` flows from a benign pool (time order kept).
template <typename T>
std::vector<T> benign_run(std::span<const T> pool, std::size_t length, Rng& rng) {
  if (pool.size() < length)
    throw InputError("benign pool of " + std::to_string(pool.size()) + " flows cannot supply a run of " +
                     std::to_string(length));
  std::uniform_int_distribution<std::size_t> start(0, pool.size() - length);
  const auto s = static_cast<std::ptrdiff_t>(start(rng));
  return {pool.begin() + s, pool.begin() + s + static_cast<std::ptrdiff_t>(length)};
}

/// For each ratio: every malicious window with a noise realisation from the
/// test pool, plus as many length-matched benign windows from the same pool.
/// Ratio 0 returns the clean windows as given.
inline std::map<double, std::vector<LabeledWindow>> build_noisy_eval_set(std::span<const LabeledWindow> clean,
                                                                         std::span<const double> ratios,
                                                                         std::span<const FlowRecord> test_pool,
                                                                         std::uint64_t seed,
                                                                         std::span<const FlowRecord> train_pool = {}) {
  if (!train_pool.empty() && !pools_disjoint(train_pool, test_pool))
    throw AuditError("train and test benign pools overlap");
  std::map<double, std::vector<LabeledWindow>> out;
  for (double r : ratios) {
    auto& set = out[r];
    if (r == 0.0) {
      set.assign(clean.begin(), clean.end());
      continue;
    }
    std::size_t n_mal = 0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
      const auto& w = clean[i];
      if (!w.malicious()) continue;
      ++n_mal;
      Rng rng(derive_seed(seed, "noisy:" + std::to_string(r), i));
      LabeledWindow noisy;
      noisy.flows = inject_noise<FlowRecord>(w.flows, test_pool, r, rng);
      noisy.family = w.family;
      noisy.type = w.type;
      set.push_back(std::move(noisy));
    }
    const std::size_t m = clean.empty() ? 0 : clean.front().flows.size();
    for (std::size_t i = 0; i < n_mal; ++i) {
      Rng rng(derive_seed(seed, "benign:" + std::to_string(r), i));
      LabeledWindow b;
      b.flows = benign_run<FlowRecord>(test_pool, m + noise_count(r, m), rng);
      b.family = b.type = std::string(kBenignLabel);
      set.push_back(std::move(b));
    }
  }
  return out;
}

}  // namespace malphase
