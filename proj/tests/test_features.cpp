#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "malphase/features.hpp"

using namespace malphase;

namespace {

FlowRecord flow(double duration, std::uint64_t bytes_fwd, std::optional<std::string> label = std::nullopt) {
  FlowRecord f;
  f.duration = duration;
  f.pkts_fwd = 1;
  f.bytes_fwd = bytes_fwd;
  f.protocol = kProtoUdp;
  f.dst_port = 53;
  f.label = std::move(label);
  return f;
}

FeatureVector random_vector(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  FeatureVector v;
  v[kDuration] = std::exp(8 * u(rng)) - 1;
  v[kRtt] = u(rng);
  v[kProtocol] = u(rng) < 0.5 ? 6 : 17;
  v[kDstIsLocal] = u(rng) < 0.5 ? 1 : 0;
  v[kDstPort] = std::floor(65535 * u(rng));
  for (auto j : {kPktsFwd, kBytesFwd, kPktsRev, kBytesRev}) v[j] = std::floor(std::exp(12 * u(rng)));
  v[kEntropyFwd] = 8 * u(rng);
  v[kEntropyRev] = 8 * u(rng);
  return v;
}

}  // namespace

TEST(Features, EncodeCopiesFieldsInOrder) {
  FlowRecord f;
  f.duration = 0.05;
  f.rtt = 0.01;
  f.protocol = kProtoTcp;
  f.dst_is_local = false;
  f.dst_port = 443;
  f.pkts_fwd = 1;
  f.bytes_fwd = 10;
  f.pkts_rev = 1;
  f.bytes_rev = 20;
  f.entropy_fwd = 3;
  f.entropy_rev = 4;
  const auto v = encode_flow(f);
  EXPECT_EQ(v, (FeatureVector{0.05, 0.01, 6, 0, 443, 1, 10, 1, 20, 3, 4}));
}

TEST(Features, IpAddressesDoNotAffectEncoding) {
  auto a = flow(1, 2);
  auto b = a;
  b.key.initiator_ip = Ipv4Address(1, 2, 3, 4);
  b.key.responder_ip = Ipv4Address(5, 6, 7, 8);
  b.key.initiator_port = 999;
  EXPECT_EQ(encode_flow(a), encode_flow(b));
}

TEST(Normalizer, EmptyFitThrows) { EXPECT_THROW((void)Normalizer::fit({}), InputError); }

TEST(Normalizer, ConstantFeatureMapsToZero) {
  std::vector<FeatureVector> rows(3, FeatureVector{});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i][kRtt] = 5.0;
    rows[i][kDuration] = static_cast<double>(i);
  }
  const auto n = Normalizer::fit(rows);
  for (const auto& r : rows) EXPECT_EQ(n.apply(r)[kRtt], 0.0);
}

TEST(Normalizer, EntropyScaleAndLogMinMax) {
  std::vector<FeatureVector> rows(2, FeatureVector{});
  rows[0][kEntropyFwd] = 0;
  rows[1][kEntropyFwd] = 8;
  rows[0][kBytesFwd] = 0;
  rows[1][kBytesFwd] = std::exp(1.0) - 1;
  rows[1][kDstIsLocal] = 1;
  const auto n = Normalizer::fit(rows);
  EXPECT_EQ(n.apply(rows[0])[kEntropyFwd], 0.0);
  EXPECT_EQ(n.apply(rows[1])[kEntropyFwd], 1.0);
  EXPECT_EQ(n.apply(rows[0])[kBytesFwd], 0.0);
  EXPECT_NEAR(n.apply(rows[1])[kBytesFwd], 1.0, 1e-15);
  EXPECT_EQ(n.apply(rows[1])[kDstIsLocal], 1.0);
  // halfway in log space
  FeatureVector mid{};
  mid[kBytesFwd] = std::exp(0.5) - 1;
  EXPECT_NEAR(n.apply(mid)[kBytesFwd], 0.5, 1e-12);
}

TEST(Normalizer, FitSetBoundsAndHeldOutClamp) {
  std::mt19937_64 rng(4);
  std::vector<FeatureVector> train, held;
  for (int i = 0; i < 500; ++i) train.push_back(random_vector(rng));
  for (int i = 0; i < 500; ++i) {
    auto v = random_vector(rng);
    for (auto& x : v) x *= 3;
    held.push_back(v);
  }
  const auto n = Normalizer::fit(train);
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    const auto& c = n.columns()[j];
    EXPECT_GT(c.max, c.min) << kFeatureNames[j];
  }
  for (std::size_t j : {kDuration, kRtt, kProtocol, kDstPort, kPktsFwd, kBytesFwd, kPktsRev, kBytesRev}) {
    double lo = 2, hi = -1;
    for (const auto& r : train) {
      lo = std::min(lo, n.apply(r)[j]);
      hi = std::max(hi, n.apply(r)[j]);
    }
    EXPECT_EQ(lo, 0.0) << kFeatureNames[j];
    EXPECT_NEAR(hi, 1.0, 1e-12) << kFeatureNames[j];
  }
  for (const auto& r : held)
    for (double x : n.apply(r)) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
}

TEST(Normalizer, DeterministicAndJsonRoundTrip) {
  std::mt19937_64 rng(5);
  std::vector<FeatureVector> train;
  for (int i = 0; i < 100; ++i) train.push_back(random_vector(rng));
  const auto a = Normalizer::fit(train);
  EXPECT_EQ(a, Normalizer::fit(train));
  const auto b = Normalizer::from_json(nlohmann::json::parse(a.to_json().dump()));
  EXPECT_EQ(a, b);
  auto bad = a.to_json();
  bad["features"].erase(0);
  EXPECT_THROW((void)Normalizer::from_json(bad), InputError);
}

TEST(Window, BenignWindowShapeAndLabel) {
  std::vector<FlowRecord> flows;
  for (int i = 0; i < 10; ++i) flows.push_back(flow(i, 10 * i, "benign"));
  std::vector<FeatureVector> rows;
  for (const auto& f : flows) rows.push_back(encode_flow(f));
  const auto n = Normalizer::fit(rows);
  const auto w = window_encode(flows, 10, n);
  EXPECT_EQ(w.values.size(), 110u);
  EXPECT_EQ(w.label, "benign");
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const auto v = n(flows[i]);
    for (std::size_t j = 0; j < kNumFeatures; ++j) EXPECT_EQ(w.values[i * kNumFeatures + j], v[j]);
  }
}

TEST(Window, AnyMaliciousFlowLabelsWindow) {
  std::vector<FlowRecord> flows(10, flow(1, 1, "benign"));
  flows[6].label = "allaple";
  EXPECT_EQ(window_label(flows), "allaple");
  std::vector<FlowRecord> unlabeled(3, flow(1, 1));
  EXPECT_FALSE(window_label(unlabeled).has_value());
}

TEST(Window, IdenticalFlowsRepeat) {
  std::vector<FlowRecord> flows(10, flow(2, 7));
  const auto n = Normalizer::fit(std::vector{encode_flow(flow(0, 0)), encode_flow(flow(4, 100))});
  const auto w = window_encode(flows, 10, n);
  for (std::size_t i = 1; i < 10; ++i)
    for (std::size_t j = 0; j < kNumFeatures; ++j) EXPECT_EQ(w.values[i * kNumFeatures + j], w.values[j]);
}

TEST(Window, WrongCountNamesExpectedSize) {
  std::vector<FlowRecord> flows(9, flow(1, 1));
  try {
    (void)window_encode(flows, 10, Normalizer{});
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("expected 10"), std::string::npos);
  }
}
