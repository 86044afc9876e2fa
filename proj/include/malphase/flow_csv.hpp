#pragma once

// Flow file format: one flow per line, comma separated, with a header row.
// Writers may append initiator/responder endpoint columns so per-host
// splitting survives a round trip; readers accept both layouts.

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "malphase/flow_meter.hpp"

namespace malphase {

inline constexpr std::string_view kFlowCsvHeader =
    "start_time,duration,rtt,protocol,dst_is_local,dst_port,pkts_fwd,bytes_fwd,pkts_rev,bytes_rev,"
    "entropy_fwd,entropy_rev,label";
inline constexpr std::string_view kFlowCsvEndpointColumns = ",src_ip,src_port,dst_ip";

inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw InputError("cannot format double");
  return std::string(buf, end);
}

namespace csv_detail {

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, std::string_view column) {
  T v{};
  auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || end != field.data() + field.size())
    throw InputError("flow csv line " + std::to_string(line_no) + ": bad " + std::string(column) +
                     " '" + std::string(field) + "'");
  return v;
}

}  // namespace csv_detail

inline void write_flow_csv(std::ostream& os, std::span<const FlowRecord> flows,
                           bool with_endpoints = false) {
  os << kFlowCsvHeader;
  if (with_endpoints) os << kFlowCsvEndpointColumns;
  os << '\n';
  for (const auto& f : flows) {
    if (f.label && f.label->find_first_of(",\n\r") != std::string::npos)
      throw InputError("flow label contains a separator: " + *f.label);
    os << format_double(f.start_time) << ',' << format_double(f.duration) << ','
       << format_double(f.rtt) << ',' << unsigned{f.protocol} << ',' << (f.dst_is_local ? 1 : 0)
       << ',' << f.dst_port << ',' << f.pkts_fwd << ',' << f.bytes_fwd << ',' << f.pkts_rev << ','
       << f.bytes_rev << ',' << format_double(f.entropy_fwd) << ','
       << format_double(f.entropy_rev) << ',' << f.label.value_or("");
    if (with_endpoints)
      os << ',' << f.key.initiator_ip.to_string() << ',' << f.key.initiator_port << ','
         << f.key.responder_ip.to_string();
    os << '\n';
  }
}

struct FlowTable {
  std::vector<FlowRecord> flows;
  bool has_endpoints = false;
};

inline FlowTable read_flow_csv(std::istream& is) {
  using csv_detail::parse_number;
  std::string line;
  if (!std::getline(is, line)) throw InputError("flow csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  FlowTable table;
  const std::string with_ep = std::string(kFlowCsvHeader) + std::string(kFlowCsvEndpointColumns);
  if (line == with_ep) {
    table.has_endpoints = true;
  } else if (line != kFlowCsvHeader) {
    throw InputError("flow csv: unexpected header '" + line + "'");
  }
  const std::size_t expected = table.has_endpoints ? 16 : 13;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = csv_detail::split(line);
    if (cols.size() != expected)
      throw InputError("flow csv line " + std::to_string(line_no) + ": expected " +
                       std::to_string(expected) + " columns, got " + std::to_string(cols.size()));
    FlowRecord f;
    f.start_time = parse_number<double>(cols[0], line_no, "start_time");
    f.duration = parse_number<double>(cols[1], line_no, "duration");
    f.rtt = parse_number<double>(cols[2], line_no, "rtt");
    const auto proto = parse_number<unsigned>(cols[3], line_no, "protocol");
    if (proto > 255) throw InputError("flow csv line " + std::to_string(line_no) + ": bad protocol");
    f.protocol = static_cast<std::uint8_t>(proto);
    const auto local = parse_number<unsigned>(cols[4], line_no, "dst_is_local");
    if (local > 1) throw InputError("flow csv line " + std::to_string(line_no) + ": bad dst_is_local");
    f.dst_is_local = local == 1;
    const auto port = parse_number<unsigned>(cols[5], line_no, "dst_port");
    if (port > 65535) throw InputError("flow csv line " + std::to_string(line_no) + ": bad dst_port");
    f.dst_port = static_cast<std::uint16_t>(port);
    f.pkts_fwd = parse_number<std::uint64_t>(cols[6], line_no, "pkts_fwd");
    f.bytes_fwd = parse_number<std::uint64_t>(cols[7], line_no, "bytes_fwd");
    f.pkts_rev = parse_number<std::uint64_t>(cols[8], line_no, "pkts_rev");
    f.bytes_rev = parse_number<std::uint64_t>(cols[9], line_no, "bytes_rev");
    f.entropy_fwd = parse_number<double>(cols[10], line_no, "entropy_fwd");
    f.entropy_rev = parse_number<double>(cols[11], line_no, "entropy_rev");
    if (!cols[12].empty()) f.label = std::string(cols[12]);
    f.key.protocol = f.protocol;
    f.key.responder_port = f.dst_port;
    if (table.has_endpoints) {
      f.key.initiator_ip = Ipv4Address::parse(cols[13]);
      const auto sport = parse_number<unsigned>(cols[14], line_no, "src_port");
      if (sport > 65535) throw InputError("flow csv line " + std::to_string(line_no) + ": bad src_port");
      f.key.initiator_port = static_cast<std::uint16_t>(sport);
      f.key.responder_ip = Ipv4Address::parse(cols[15]);
    }
    table.flows.push_back(std::move(f));
  }
  return table;
}

inline std::string flow_csv_string(std::span<const FlowRecord> flows, bool with_endpoints = false) {
  std::ostringstream os;
  write_flow_csv(os, flows, with_endpoints);
  return os.str();
}

}  // namespace malphase
