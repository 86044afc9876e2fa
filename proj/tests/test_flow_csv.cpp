#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "malphase/flow_csv.hpp"

using namespace malphase;

namespace {

FlowRecord random_flow(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<std::uint64_t> n(0, 1u << 20);
  FlowRecord f;
  f.start_time = 1.6e9 + u(rng) * 1e5;
  f.duration = u(rng) * 300;
  f.rtt = u(rng) * 0.3;
  f.protocol = u(rng) < 0.5 ? kProtoTcp : kProtoUdp;
  f.dst_is_local = u(rng) < 0.3;
  f.dst_port = static_cast<std::uint16_t>(n(rng) & 0xffff);
  f.pkts_fwd = 1 + n(rng) % 500;
  f.bytes_fwd = n(rng);
  f.pkts_rev = n(rng) % 500;
  f.bytes_rev = n(rng);
  f.entropy_fwd = 8 * u(rng);
  f.entropy_rev = 8 * u(rng);
  if (u(rng) < 0.7) f.label = u(rng) < 0.5 ? "benign" : "zbot";
  f.key = {Ipv4Address(10, 0, 0, 7), static_cast<std::uint16_t>(n(rng) & 0xffff), Ipv4Address(1, 1, 1, 1),
           f.dst_port, f.protocol};
  return f;
}

}  // namespace

TEST(FlowCsv, HeaderMatchesSchema) {
  const auto s = flow_csv_string({});
  EXPECT_EQ(s,
            "start_time,duration,rtt,protocol,dst_is_local,dst_port,pkts_fwd,bytes_fwd,pkts_rev,bytes_rev,"
            "entropy_fwd,entropy_rev,label\n");
}

TEST(FlowCsv, RoundTripIsExact) {
  std::mt19937_64 rng(1);
  std::vector<FlowRecord> flows;
  for (int i = 0; i < 300; ++i) flows.push_back(random_flow(rng));
  for (bool endpoints : {false, true}) {
    std::istringstream in(flow_csv_string(flows, endpoints));
    const auto table = read_flow_csv(in);
    EXPECT_EQ(table.has_endpoints, endpoints);
    ASSERT_EQ(table.flows.size(), flows.size());
    for (std::size_t i = 0; i < flows.size(); ++i) {
      auto want = flows[i];
      if (!endpoints) {
        want.key.initiator_ip = {};
        want.key.initiator_port = 0;
        want.key.responder_ip = {};
      }
      EXPECT_EQ(table.flows[i], want) << "row " << i;
    }
  }
}

TEST(FlowCsv, EmptyLabelMeansAbsent) {
  std::istringstream in(std::string(kFlowCsvHeader) + "\n0,0,0,17,0,53,1,0,0,0,0,0,\n");
  const auto t = read_flow_csv(in);
  ASSERT_EQ(t.flows.size(), 1u);
  EXPECT_FALSE(t.flows[0].label.has_value());
}

TEST(FlowCsv, StrictParsing) {
  const std::string h(kFlowCsvHeader);
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_flow_csv(in);
  };
  EXPECT_THROW(parse(""), InputError);
  EXPECT_THROW(parse("a,b,c\n"), InputError);
  EXPECT_THROW(parse(h + "\n0,0,0,17,0,53,1,0,0,0,0,0\n"), InputError);           // missing column
  EXPECT_THROW(parse(h + "\n0,0,0,17,0,53,1,0,0,0,0,x,\n"), InputError);          // bad number
  EXPECT_THROW(parse(h + "\n0,0,0,17,2,53,1,0,0,0,0,0,\n"), InputError);          // bad boolean
  EXPECT_THROW(parse(h + "\n0,0,0,17,0,70000,1,0,0,0,0,0,\n"), InputError);       // port range
  EXPECT_THROW(parse(h + "\n0,0,0,300,0,53,1,0,0,0,0,0,\n"), InputError);         // protocol range
  EXPECT_NO_THROW(parse(h + "\r\n0,0,0,17,0,53,1,0,0,0,0,0,benign\r\n"));
}

TEST(FlowCsv, LabelWithSeparatorRejected) {
  FlowRecord f;
  f.pkts_fwd = 1;
  f.label = "a,b";
  EXPECT_THROW(flow_csv_string(std::vector{f}), InputError);
}
