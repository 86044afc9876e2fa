#pragma once

#include <array>
#include <charconv>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "malphase/common.hpp"

namespace malphase {

struct Ipv4Address {
  std::uint32_t value = 0;  // host byte order

  constexpr Ipv4Address() = default;
  constexpr explicit Ipv4Address(std::uint32_t v) : value(v) {}
  constexpr Ipv4Address(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : value((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) |
              std::uint32_t{d}) {}

  constexpr auto operator<=>(const Ipv4Address&) const = default;

  std::string to_string() const {
    return std::to_string(value >> 24) + '.' + std::to_string((value >> 16) & 0xff) + '.' +
           std::to_string((value >> 8) & 0xff) + '.' + std::to_string(value & 0xff);
  }

  static Ipv4Address parse(std::string_view text) {
    std::uint32_t out = 0;
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int i = 0; i < 4; ++i) {
      unsigned octet = 0;
      auto [next, ec] = std::from_chars(p, end, octet);
      if (ec != std::errc{} || octet > 255 || next == p)
        throw InputError("invalid IPv4 address '" + std::string(text) + "'");
      out = (out << 8) | octet;
      p = next;
      if (i < 3) {
        if (p == end || *p != '.') throw InputError("invalid IPv4 address '" + std::string(text) + "'");
        ++p;
      }
    }
    if (p != end) throw InputError("invalid IPv4 address '" + std::string(text) + "'");
    return Ipv4Address{out};
  }
};

struct TcpFlags {
  static constexpr std::uint8_t kFin = 0x01;
  static constexpr std::uint8_t kSyn = 0x02;
  static constexpr std::uint8_t kRst = 0x04;
  static constexpr std::uint8_t kAck = 0x10;

  std::uint8_t bits = 0;

  constexpr bool syn() const { return bits & kSyn; }
  constexpr bool ack() const { return bits & kAck; }
  constexpr bool fin() const { return bits & kFin; }
  constexpr bool rst() const { return bits & kRst; }
  constexpr bool operator==(const TcpFlags&) const = default;
};

inline constexpr std::uint8_t kProtoIcmp = 1;
inline constexpr std::uint8_t kProtoTcp = 6;
inline constexpr std::uint8_t kProtoUdp = 17;

/// One IPv4 packet as seen on the wire. `tcp_flags` is set iff protocol is TCP.
struct PacketRecord {
  double timestamp = 0.0;
  Ipv4Address src_ip;
  Ipv4Address dst_ip;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t protocol = 0;
  std::vector<std::uint8_t> payload;
  std::optional<TcpFlags> tcp_flags;
};

}  // namespace malphase
