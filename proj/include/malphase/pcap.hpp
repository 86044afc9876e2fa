#pragma once

// Classic libpcap file reader (and a small writer used by tooling and tests).
// Ethernet link type only; IPv4 packets are decoded, everything else is
// counted as skipped.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "malphase/common.hpp"
#include "malphase/packet.hpp"

namespace malphase {

class PcapParseError : public InputError {
 public:
  using InputError::InputError;
};

struct ParsedCapture {
  std::vector<PacketRecord> packets;
  std::size_t records = 0;  // packet records read from the file
  std::size_t skipped = 0;  // records that were not decodable IPv4 TCP/UDP/other
  bool truncated = false;   // file ended inside a record
  std::string warning;
};

namespace pcap_detail {

inline constexpr std::uint32_t kMagicMicro = 0xa1b2c3d4;
inline constexpr std::uint32_t kMagicNano = 0xa1b23c4d;
inline constexpr std::uint32_t kLinkEthernet = 1;
inline constexpr std::size_t kGlobalHeaderLen = 24;
inline constexpr std::size_t kRecordHeaderLen = 16;

inline std::uint32_t read_u32(const std::uint8_t* p, bool swap) {
  std::uint32_t v = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
                    (std::uint32_t{p[3]} << 24);
  if (swap) v = __builtin_bswap32(v);
  return v;
}

inline std::uint16_t be16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

inline std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

// Decodes one Ethernet frame; returns false if the frame is not usable IPv4.
inline bool decode_frame(std::span<const std::uint8_t> frame, PacketRecord& out) {
  std::size_t off = 12;
  if (frame.size() < 14) return false;
  std::uint16_t ether_type = be16(&frame[off]);
  off += 2;
  while (ether_type == 0x8100 || ether_type == 0x88a8) {  // VLAN tags
    if (frame.size() < off + 4) return false;
    ether_type = be16(&frame[off + 2]);
    off += 4;
  }
  if (ether_type != 0x0800) return false;

  auto ip = frame.subspan(off);
  if (ip.size() < 20) return false;
  if ((ip[0] >> 4) != 4) return false;
  const std::size_t ihl = std::size_t{ip[0] & 0x0fu} * 4;
  if (ihl < 20 || ip.size() < ihl) return false;
  const std::size_t total_len = be16(&ip[2]);
  if (total_len < ihl) return false;
  const std::uint16_t frag = be16(&ip[6]);
  if ((frag & 0x1fff) != 0) return false;  // non-first fragment

  out.protocol = ip[9];
  out.src_ip = Ipv4Address{be32(&ip[12])};
  out.dst_ip = Ipv4Address{be32(&ip[16])};
  out.src_port = out.dst_port = 0;
  out.payload.clear();
  out.tcp_flags.reset();

  // Ethernet padding may extend past the IP datagram; snaplen may cut it short.
  const std::size_t ip_end = std::min(total_len, ip.size());
  auto l4 = ip.subspan(ihl, ip_end - ihl);

  if (out.protocol == kProtoTcp) {
    if (l4.size() < 20) return false;
    out.src_port = be16(&l4[0]);
    out.dst_port = be16(&l4[2]);
    const std::size_t data_off = static_cast<std::size_t>(l4[12] >> 4) * 4;
    if (data_off < 20 || l4.size() < data_off) return false;
    out.tcp_flags = TcpFlags{static_cast<std::uint8_t>(l4[13] & 0x3f)};
    auto body = l4.subspan(data_off);
    out.payload.assign(body.begin(), body.end());
  } else if (out.protocol == kProtoUdp) {
    if (l4.size() < 8) return false;
    out.src_port = be16(&l4[0]);
    out.dst_port = be16(&l4[2]);
    auto body = l4.subspan(8);
    out.payload.assign(body.begin(), body.end());
  }
  return true;
}

}  // namespace pcap_detail

/// Parse a classic pcap capture held in memory.
///
/// A bad global header throws PcapParseError. A record cut off by the end of
/// the buffer ends parsing with `truncated` set and the packets read so far.
inline ParsedCapture parse_capture(std::span<const std::uint8_t> bytes) {
  using namespace pcap_detail;
  if (bytes.size() < kGlobalHeaderLen) throw PcapParseError("pcap: global header truncated");

  const std::uint32_t magic_le = read_u32(bytes.data(), false);
  bool swap = false;
  bool nano = false;
  if (magic_le == kMagicMicro) {
  } else if (magic_le == kMagicNano) {
    nano = true;
  } else if (__builtin_bswap32(magic_le) == kMagicMicro) {
    swap = true;
  } else if (__builtin_bswap32(magic_le) == kMagicNano) {
    swap = true;
    nano = true;
  } else {
    throw PcapParseError("pcap: bad magic number");
  }
  const std::uint32_t link_type = read_u32(bytes.data() + 20, swap);
  if ((link_type & 0x0fffffff) != kLinkEthernet)
    throw PcapParseError("pcap: unsupported link type " + std::to_string(link_type));

  ParsedCapture out;
  std::size_t off = kGlobalHeaderLen;
  const double frac_scale = nano ? 1e-9 : 1e-6;
  while (off < bytes.size()) {
    if (bytes.size() - off < kRecordHeaderLen) {
      out.truncated = true;
      out.warning = "pcap: truncated record header at offset " + std::to_string(off);
      break;
    }
    const std::uint32_t ts_sec = read_u32(&bytes[off], swap);
    const std::uint32_t ts_frac = read_u32(&bytes[off + 4], swap);
    const std::uint32_t incl_len = read_u32(&bytes[off + 8], swap);
    off += kRecordHeaderLen;
    if (bytes.size() - off < incl_len) {
      out.truncated = true;
      out.warning = "pcap: truncated packet data at record " + std::to_string(out.records);
      break;
    }
    ++out.records;
    PacketRecord pkt;
    pkt.timestamp = static_cast<double>(ts_sec) + static_cast<double>(ts_frac) * frac_scale;
    if (pcap_detail::decode_frame(bytes.subspan(off, incl_len), pkt)) {
      out.packets.push_back(std::move(pkt));
    } else {
      ++out.skipped;
    }
    off += incl_len;
  }
  return out;
}

/// Serialise packets as a little-endian microsecond pcap with Ethernet framing.
inline std::vector<std::uint8_t> write_capture(std::span<const PacketRecord> packets) {
  std::vector<std::uint8_t> out;
  auto le32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  auto le16 = [&](std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  auto put16 = [](std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v));
  };
  auto put32 = [](std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };

  le32(pcap_detail::kMagicMicro);
  le16(2);
  le16(4);
  le32(0);
  le32(0);
  le32(65535);
  le32(pcap_detail::kLinkEthernet);

  for (const auto& p : packets) {
    std::vector<std::uint8_t> frame(12, 0);
    frame[5] = 1;
    frame[11] = 2;
    put16(frame, 0x0800);
    std::vector<std::uint8_t> l4;
    if (p.protocol == kProtoTcp) {
      put16(l4, p.src_port);
      put16(l4, p.dst_port);
      put32(l4, 0);
      put32(l4, 0);
      l4.push_back(5 << 4);
      l4.push_back(p.tcp_flags ? p.tcp_flags->bits : 0);
      put16(l4, 65535);
      put16(l4, 0);
      put16(l4, 0);
    } else if (p.protocol == kProtoUdp) {
      put16(l4, p.src_port);
      put16(l4, p.dst_port);
      put16(l4, static_cast<std::uint16_t>(8 + p.payload.size()));
      put16(l4, 0);
    }
    l4.insert(l4.end(), p.payload.begin(), p.payload.end());
    const auto total = static_cast<std::uint16_t>(20 + l4.size());
    frame.push_back(0x45);
    frame.push_back(0);
    put16(frame, total);
    put16(frame, 0);
    put16(frame, 0);
    frame.push_back(64);
    frame.push_back(p.protocol);
    put16(frame, 0);
    put32(frame, p.src_ip.value);
    put32(frame, p.dst_ip.value);
    frame.insert(frame.end(), l4.begin(), l4.end());

    double whole = std::floor(p.timestamp);
    auto usec = static_cast<std::uint32_t>(std::llround((p.timestamp - whole) * 1e6));
    if (usec >= 1000000) {
      whole += 1;
      usec -= 1000000;
    }
    le32(static_cast<std::uint32_t>(whole));
    le32(usec);
    le32(static_cast<std::uint32_t>(frame.size()));
    le32(static_cast<std::uint32_t>(frame.size()));
    out.insert(out.end(), frame.begin(), frame.end());
  }
  return out;
}

}  // namespace malphase
