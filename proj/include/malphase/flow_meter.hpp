#pragma once

// Bidirectional flow assembly with YAF-style idle/active timeouts and
// per-direction payload entropy.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "malphase/common.hpp"
#include "malphase/packet.hpp"

namespace malphase {

/// Canonical 5-tuple. The initiator is whoever sent the first packet.
struct FlowKey {
  Ipv4Address initiator_ip;
  std::uint16_t initiator_port = 0;
  Ipv4Address responder_ip;
  std::uint16_t responder_port = 0;
  std::uint8_t protocol = 0;

  bool operator==(const FlowKey&) const = default;
};

struct FlowRecord {
  FlowKey key;
  double start_time = 0.0;
  double duration = 0.0;
  double rtt = 0.0;
  std::uint8_t protocol = 0;
  bool dst_is_local = false;
  std::uint16_t dst_port = 0;
  std::uint64_t pkts_fwd = 0;
  std::uint64_t bytes_fwd = 0;  // transport payload bytes, not wire bytes
  std::uint64_t pkts_rev = 0;
  std::uint64_t bytes_rev = 0;
  double entropy_fwd = 0.0;
  double entropy_rev = 0.0;
  std::optional<std::string> label;

  bool operator==(const FlowRecord&) const = default;
};

struct MeterConfig {
  double idle_timeout = 30.0;
  double active_timeout = 300.0;
  std::size_t max_payload = 2048;

  void validate() const {
    if (!(idle_timeout > 0)) throw InputError("idle_timeout must be > 0");
    if (!(active_timeout >= idle_timeout)) throw InputError("active_timeout must be >= idle_timeout");
    if (max_payload == 0) throw InputError("max_payload must be > 0");
  }
};

class OutOfOrderError : public InputError {
 public:
  OutOfOrderError(std::size_t index, double ts, double previous)
      : InputError("packet " + std::to_string(index) + " has timestamp " + std::to_string(ts) +
                   " earlier than previous " + std::to_string(previous)),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

/// True for 10/8, 172.16/12, 192.168/16 and 127/8.
constexpr bool is_local_destination(Ipv4Address ip) {
  const std::uint32_t v = ip.value;
  return (v >> 24) == 10 || (v >> 20) == ((172u << 4) | 1u) || (v >> 16) == ((192u << 8) | 168u) ||
         (v >> 24) == 127;
}

/// Shannon entropy in bits per byte of a byte histogram.
inline double histogram_entropy(const std::array<std::uint64_t, 256>& counts, std::uint64_t total) {
  if (total == 0) return 0.0;
  double h = 0.0;
  const double n = static_cast<double>(total);
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return std::clamp(h, 0.0, 8.0);
}

/// Entropy of the first `max_payload` bytes of `payload`; 0 for empty input.
inline double payload_entropy(std::span<const std::uint8_t> payload, std::size_t max_payload) {
  std::array<std::uint64_t, 256> counts{};
  const std::size_t n = std::min(payload.size(), max_payload);
  for (std::size_t i = 0; i < n; ++i) ++counts[payload[i]];
  return histogram_entropy(counts, n);
}

namespace meter_detail {

// Tracks the timestamps RTT estimation needs, fed one packet at a time.
struct RttTracker {
  std::optional<double> first_fwd, first_rev, first_syn, first_synack;

  void observe(const PacketRecord& p, bool forward) {
    if (forward) {
      if (!first_fwd) first_fwd = p.timestamp;
      if (p.tcp_flags && p.tcp_flags->syn() && !p.tcp_flags->ack() && !first_syn) first_syn = p.timestamp;
    } else {
      if (!first_rev) first_rev = p.timestamp;
      if (p.tcp_flags && p.tcp_flags->syn() && p.tcp_flags->ack() && !first_synack)
        first_synack = p.timestamp;
    }
  }

  double rtt(std::uint8_t protocol) const {
    double r = 0.0;
    if (protocol == kProtoTcp && first_syn && first_synack) {
      r = *first_synack - *first_syn;
    } else if (first_fwd && first_rev) {
      r = *first_rev - *first_fwd;
    }
    return std::max(0.0, r);
  }
};

// Per-direction payload byte histogram capped at max_payload bytes.
struct PayloadBuffer {
  std::array<std::uint64_t, 256> counts{};
  std::uint64_t captured = 0;

  void add(std::span<const std::uint8_t> payload, std::size_t max_payload) {
    for (auto b : payload) {
      if (captured >= max_payload) return;
      ++counts[b];
      ++captured;
    }
  }
  double entropy() const { return histogram_entropy(counts, captured); }
};

struct UndirectedKey {
  std::uint64_t a;
  std::uint64_t b;
  std::uint8_t protocol;
  bool operator==(const UndirectedKey&) const = default;
};

inline UndirectedKey undirected_key(const PacketRecord& p) {
  const std::uint64_t s = (std::uint64_t{p.src_ip.value} << 16) | p.src_port;
  const std::uint64_t d = (std::uint64_t{p.dst_ip.value} << 16) | p.dst_port;
  return {std::min(s, d), std::max(s, d), p.protocol};
}

struct UndirectedKeyHash {
  std::size_t operator()(const UndirectedKey& k) const {
    std::uint64_t h = k.a * 0x9e3779b97f4a7c15ULL;
    h ^= k.b + 0x7f4a7c159e3779b9ULL + (h << 6) + (h >> 2);
    h ^= k.protocol;
    return static_cast<std::size_t>(h);
  }
};

struct OpenFlow {
  std::size_t first_index;
  FlowRecord record;
  double last_time;
  RttTracker rtt;
  PayloadBuffer fwd, rev;
};

}  // namespace meter_detail

/// RTT of one flow's time-ordered packets. TCP uses SYN -> SYN-ACK when both
/// are present; otherwise the delay from the first forward packet to the first
/// reverse packet. 0 when there is no reverse packet.
inline double estimate_rtt(std::span<const PacketRecord> flow_packets) {
  if (flow_packets.empty()) return 0.0;
  const auto& first = flow_packets.front();
  meter_detail::RttTracker t;
  for (const auto& p : flow_packets) {
    const bool forward = p.src_ip == first.src_ip && p.src_port == first.src_port;
    t.observe(p, forward);
  }
  return t.rtt(first.protocol);
}

/// Streaming flow meter. Feed packets in timestamp order, then call finish().
class FlowMeter {
 public:
  explicit FlowMeter(MeterConfig config = {}) : config_(config) { config_.validate(); }

  void add(const PacketRecord& p) {
    if (count_ > 0 && p.timestamp < last_ts_) throw OutOfOrderError(count_, p.timestamp, last_ts_);
    const std::size_t index = count_++;
    last_ts_ = p.timestamp;

    const auto key = meter_detail::undirected_key(p);
    auto it = open_.find(key);
    if (it != open_.end()) {
      auto& f = it->second;
      const bool idle = p.timestamp - f.last_time > config_.idle_timeout;
      const bool aged = p.timestamp - f.record.start_time > config_.active_timeout;
      if (idle || aged) {
        close(f);
        open_.erase(it);
        it = open_.end();
      }
    }
    if (it == open_.end()) it = open_.emplace(key, start(p, index)).first;
    update(it->second, p);

    // Periodically expire idle flows so memory stays bounded on long captures.
    if ((index & 0xfff) == 0xfff) expire(p.timestamp);
  }

  std::vector<FlowRecord> finish() {
    for (auto& [key, f] : open_) close(f);
    open_.clear();
    std::sort(closed_.begin(), closed_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<FlowRecord> out;
    out.reserve(closed_.size());
    for (auto& [idx, rec] : closed_) out.push_back(std::move(rec));
    closed_.clear();
    count_ = 0;
    return out;
  }

 private:
  meter_detail::OpenFlow start(const PacketRecord& p, std::size_t index) const {
    meter_detail::OpenFlow f{index, {}, p.timestamp, {}, {}, {}};
    auto& r = f.record;
    r.key = FlowKey{p.src_ip, p.src_port, p.dst_ip, p.dst_port, p.protocol};
    r.start_time = p.timestamp;
    r.protocol = p.protocol;
    r.dst_is_local = is_local_destination(p.dst_ip);
    r.dst_port = p.dst_port;
    return f;
  }

  void update(meter_detail::OpenFlow& f, const PacketRecord& p) const {
    auto& r = f.record;
    const bool forward = p.src_ip == r.key.initiator_ip && p.src_port == r.key.initiator_port;
    if (forward) {
      ++r.pkts_fwd;
      r.bytes_fwd += p.payload.size();
      f.fwd.add(p.payload, config_.max_payload);
    } else {
      ++r.pkts_rev;
      r.bytes_rev += p.payload.size();
      f.rev.add(p.payload, config_.max_payload);
    }
    f.rtt.observe(p, forward);
    f.last_time = p.timestamp;
  }

  void close(meter_detail::OpenFlow& f) {
    auto& r = f.record;
    r.duration = f.last_time - r.start_time;
    r.rtt = f.rtt.rtt(r.protocol);
    r.entropy_fwd = f.fwd.entropy();
    r.entropy_rev = f.rev.entropy();
    closed_.emplace_back(f.first_index, std::move(r));
  }

  void expire(double now) {
    for (auto it = open_.begin(); it != open_.end();) {
      if (now - it->second.last_time > config_.idle_timeout) {
        close(it->second);
        it = open_.erase(it);
      } else {
        ++it;
      }
    }
  }

  MeterConfig config_;
  std::unordered_map<meter_detail::UndirectedKey, meter_detail::OpenFlow,
                     meter_detail::UndirectedKeyHash>
      open_;
  std::vector<std::pair<std::size_t, FlowRecord>> closed_;
  std::size_t count_ = 0;
  double last_ts_ = 0.0;
};

/// Group time-ordered packets into bidirectional flows, emitted in order of
/// flow start (ties by first-seen packet).
inline std::vector<FlowRecord> assemble_flows(std::span<const PacketRecord> packets,
                                              const MeterConfig& config = {}) {
  FlowMeter meter(config);
  for (const auto& p : packets) meter.add(p);
  return meter.finish();
}

}  // namespace malphase
