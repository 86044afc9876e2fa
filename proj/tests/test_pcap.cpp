#include <gtest/gtest.h>

#include <cstdint>
#include <vector>

#include "malphase/pcap.hpp"

using namespace malphase;

namespace {

using Bytes = std::vector<std::uint8_t>;

// Minimal hand-rolled pcap builder, independent of write_capture.
struct CaptureBuilder {
  bool big_endian = false;
  std::uint32_t magic = 0xa1b2c3d4;
  std::uint32_t link = 1;
  Bytes bytes;

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
      const int shift = big_endian ? 8 * (3 - i) : 8 * i;
      bytes.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }
  void u16(std::uint16_t v) {
    if (big_endian) {
      bytes.push_back(static_cast<std::uint8_t>(v >> 8));
      bytes.push_back(static_cast<std::uint8_t>(v));
    } else {
      bytes.push_back(static_cast<std::uint8_t>(v));
      bytes.push_back(static_cast<std::uint8_t>(v >> 8));
    }
  }
  CaptureBuilder& header() {
    u32(magic);
    u16(2);
    u16(4);
    u32(0);
    u32(0);
    u32(65535);
    u32(link);
    return *this;
  }
  CaptureBuilder& record(std::uint32_t sec, std::uint32_t frac, const Bytes& frame) {
    u32(sec);
    u32(frac);
    u32(static_cast<std::uint32_t>(frame.size()));
    u32(static_cast<std::uint32_t>(frame.size()));
    bytes.insert(bytes.end(), frame.begin(), frame.end());
    return *this;
  }
};

void be16(Bytes& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}

Bytes ethernet(std::uint16_t ether_type, bool vlan = false) {
  Bytes f(12, 0xaa);
  if (vlan) {
    be16(f, 0x8100);
    be16(f, 0x0064);
  }
  be16(f, ether_type);
  return f;
}

Bytes ipv4(std::uint8_t proto, const Bytes& l4) {
  Bytes ip = {0x45, 0x00};
  be16(ip, static_cast<std::uint16_t>(20 + l4.size()));
  ip.insert(ip.end(), {0x00, 0x01, 0x00, 0x00, 64, proto, 0x00, 0x00});
  ip.insert(ip.end(), {192, 168, 1, 5});
  ip.insert(ip.end(), {8, 8, 8, 8});
  ip.insert(ip.end(), l4.begin(), l4.end());
  return ip;
}

Bytes udp_frame(const Bytes& payload, bool vlan = false) {
  Bytes l4;
  be16(l4, 5353);
  be16(l4, 53);
  be16(l4, static_cast<std::uint16_t>(8 + payload.size()));
  be16(l4, 0);
  l4.insert(l4.end(), payload.begin(), payload.end());
  Bytes f = ethernet(0x0800, vlan);
  auto ip = ipv4(17, l4);
  f.insert(f.end(), ip.begin(), ip.end());
  return f;
}

Bytes tcp_syn_frame() {
  Bytes l4;
  be16(l4, 40000);
  be16(l4, 443);
  l4.insert(l4.end(), {0, 0, 0, 1, 0, 0, 0, 0, 0x50, 0x02, 0xff, 0xff, 0, 0, 0, 0});
  Bytes f = ethernet(0x0800);
  auto ip = ipv4(6, l4);
  f.insert(f.end(), ip.begin(), ip.end());
  return f;
}

}  // namespace

TEST(Pcap, HeaderOnlyCaptureIsEmpty) {
  CaptureBuilder b;
  b.header();
  const auto c = parse_capture(b.bytes);
  EXPECT_TRUE(c.packets.empty());
  EXPECT_EQ(c.records, 0u);
  EXPECT_FALSE(c.truncated);
}

TEST(Pcap, SingleUdpPacketFields) {
  CaptureBuilder b;
  b.header().record(1000, 250000, udp_frame({1, 2, 3, 4}));
  const auto c = parse_capture(b.bytes);
  ASSERT_EQ(c.packets.size(), 1u);
  const auto& p = c.packets[0];
  EXPECT_EQ(p.protocol, 17);
  EXPECT_EQ(p.payload, (Bytes{1, 2, 3, 4}));
  EXPECT_EQ(p.src_port, 5353);
  EXPECT_EQ(p.dst_port, 53);
  EXPECT_EQ(p.src_ip, Ipv4Address(192, 168, 1, 5));
  EXPECT_EQ(p.dst_ip, Ipv4Address(8, 8, 8, 8));
  EXPECT_DOUBLE_EQ(p.timestamp, 1000.25);
  EXPECT_FALSE(p.tcp_flags.has_value());
}

TEST(Pcap, TcpSynHasFlagsAndEmptyPayload) {
  CaptureBuilder b;
  b.header().record(1, 0, tcp_syn_frame());
  const auto c = parse_capture(b.bytes);
  ASSERT_EQ(c.packets.size(), 1u);
  const auto& p = c.packets[0];
  EXPECT_EQ(p.protocol, 6);
  ASSERT_TRUE(p.tcp_flags.has_value());
  EXPECT_TRUE(p.tcp_flags->syn());
  EXPECT_FALSE(p.tcp_flags->ack());
  EXPECT_TRUE(p.payload.empty());
}

TEST(Pcap, BigEndianAndNanosecondVariants) {
  CaptureBuilder be;
  be.big_endian = true;
  be.header().record(7, 500000, udp_frame({9}));
  auto c = parse_capture(be.bytes);
  ASSERT_EQ(c.packets.size(), 1u);
  EXPECT_DOUBLE_EQ(c.packets[0].timestamp, 7.5);

  CaptureBuilder nano;
  nano.magic = 0xa1b23c4d;
  nano.header().record(7, 250000000, udp_frame({9}));
  c = parse_capture(nano.bytes);
  ASSERT_EQ(c.packets.size(), 1u);
  EXPECT_DOUBLE_EQ(c.packets[0].timestamp, 7.25);
}

TEST(Pcap, VlanTaggedFrameDecodes) {
  CaptureBuilder b;
  b.header().record(1, 0, udp_frame({5, 6}, true));
  const auto c = parse_capture(b.bytes);
  ASSERT_EQ(c.packets.size(), 1u);
  EXPECT_EQ(c.packets[0].payload, (Bytes{5, 6}));
}

TEST(Pcap, NonIpv4FramesAreSkippedAndCounted) {
  CaptureBuilder b;
  Bytes arp = ethernet(0x0806);
  arp.resize(arp.size() + 28, 0);
  Bytes v6 = ethernet(0x86dd);
  v6.resize(v6.size() + 40, 0);
  b.header().record(1, 0, arp).record(2, 0, udp_frame({1})).record(3, 0, v6);
  const auto c = parse_capture(b.bytes);
  EXPECT_EQ(c.records, 3u);
  EXPECT_EQ(c.skipped, 2u);
  ASSERT_EQ(c.packets.size(), 1u);
  EXPECT_DOUBLE_EQ(c.packets[0].timestamp, 2.0);
}

TEST(Pcap, TruncatedRecordKeepsEarlierPackets) {
  CaptureBuilder b;
  b.header().record(1, 0, udp_frame({1})).record(2, 0, udp_frame({2, 2}));
  b.bytes.resize(b.bytes.size() - 3);
  const auto c = parse_capture(b.bytes);
  EXPECT_TRUE(c.truncated);
  EXPECT_FALSE(c.warning.empty());
  ASSERT_EQ(c.packets.size(), 1u);
  EXPECT_EQ(c.packets[0].payload, (Bytes{1}));
}

TEST(Pcap, MalformedGlobalHeaderThrows) {
  EXPECT_THROW(parse_capture(Bytes{0xd4, 0xc3, 0xb2}), PcapParseError);
  CaptureBuilder bad;
  bad.magic = 0x12345678;
  bad.header();
  EXPECT_THROW(parse_capture(bad.bytes), PcapParseError);
  CaptureBuilder raw_ip;
  raw_ip.link = 101;
  raw_ip.header();
  EXPECT_THROW(parse_capture(raw_ip.bytes), PcapParseError);
}

TEST(Pcap, WriterRoundTrip) {
  std::vector<PacketRecord> pkts(3);
  pkts[0] = {0.5, Ipv4Address(10, 0, 0, 1), Ipv4Address(1, 2, 3, 4), 1234, 80, kProtoTcp, {'G', 'E', 'T'}, TcpFlags{0x18}};
  pkts[1] = {0.75, Ipv4Address(1, 2, 3, 4), Ipv4Address(10, 0, 0, 1), 80, 1234, kProtoTcp, {}, TcpFlags{0x12}};
  pkts[2] = {2.000001, Ipv4Address(10, 0, 0, 1), Ipv4Address(9, 9, 9, 9), 999, 53, kProtoUdp, {0, 1, 2}, std::nullopt};
  const auto c = parse_capture(write_capture(pkts));
  ASSERT_EQ(c.packets.size(), pkts.size());
  for (std::size_t i = 0; i < pkts.size(); ++i) {
    EXPECT_NEAR(c.packets[i].timestamp, pkts[i].timestamp, 1e-9);
    EXPECT_EQ(c.packets[i].src_ip, pkts[i].src_ip);
    EXPECT_EQ(c.packets[i].dst_ip, pkts[i].dst_ip);
    EXPECT_EQ(c.packets[i].src_port, pkts[i].src_port);
    EXPECT_EQ(c.packets[i].dst_port, pkts[i].dst_port);
    EXPECT_EQ(c.packets[i].protocol, pkts[i].protocol);
    EXPECT_EQ(c.packets[i].payload, pkts[i].payload);
    EXPECT_EQ(c.packets[i].tcp_flags, pkts[i].tcp_flags);
  }
}
