#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "malphase/classifiers.hpp"

using namespace malphase;

namespace {

PhaseModel linear_model(Phase phase, std::vector<std::string> classes, const nn::Matrix& w, const nn::Vector& b) {
  nn::DenseLayer l;
  l.weights = w;
  l.biases = b;
  const bool binary = phase == Phase::kBinary;
  l.activation = binary ? nn::Activation::kSigmoid : nn::Activation::kSoftmax;
  PhaseModel m;
  m.phase = phase;
  m.network = nn::Network({l}, binary ? nn::Loss::kBinaryCrossEntropy : nn::Loss::kCategoricalCrossEntropy);
  m.class_names = std::move(classes);
  m.check_shape();
  return m;
}

std::vector<std::string> types() { return {kMalwareTypes.begin(), kMalwareTypes.end()}; }

// k Gaussian clusters in d dimensions, centres 4 units apart on the axes.
struct Clusters {
  nn::Matrix x;
  std::vector<std::string> labels;
};

Clusters clusters(const std::vector<std::string>& names, std::size_t per_class, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.6);
  Clusters c;
  c.x.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(names.size() * per_class));
  Eigen::Index col = 0;
  for (std::size_t k = 0; k < names.size(); ++k)
    for (std::size_t i = 0; i < per_class; ++i, ++col) {
      for (std::size_t r = 0; r < d; ++r) c.x(static_cast<Eigen::Index>(r), col) = g(rng) + (r == k % d ? 4.0 : 0.0);
      c.labels.push_back(names[k]);
    }
  return c;
}

nn::Candidate quick_candidate() {
  nn::Candidate c;
  c.hidden = {16};
  c.train.epochs = 20;
  c.train.learning_rate = 0.01;
  c.init_seed = 5;
  c.train.shuffle_seed = 6;
  return c;
}

std::vector<double> col(const nn::Matrix& m, Eigen::Index c) { return {m.col(c).data(), m.col(c).data() + m.rows()}; }

}  // namespace

TEST(Taxonomy, ValidatesTypesAndUniqueness) {
  MalwareTaxonomy t;
  for (const auto& ty : kMalwareTypes) t.families_by_type[ty] = {ty + "_a"};
  EXPECT_NO_THROW(t.validate());
  EXPECT_EQ(t.type_of("worm_a"), "worm");
  EXPECT_FALSE(t.type_of("nope").has_value());
  auto dup = t;
  dup.families_by_type["virus"].push_back("worm_a");
  EXPECT_THROW(dup.validate(), InputError);
  auto missing = t;
  missing.families_by_type.erase("adware");
  EXPECT_THROW(missing.validate(), InputError);
  EXPECT_EQ(MalwareTaxonomy::from_json(t.to_json()).families_by_type, t.families_by_type);
}

TEST(Binary, ThresholdIsInclusive) {
  const auto m = linear_model(Phase::kBinary, binary_class_names(), nn::Matrix::Constant(1, 1, 1.0), nn::Vector::Zero(1));
  const auto at = predict_binary(m, std::vector{0.0});
  EXPECT_EQ(at.score, 0.5);
  EXPECT_TRUE(at.malicious);
  EXPECT_FALSE(predict_binary(m, std::vector{-1e-9}).malicious);
  auto strict = m;
  strict.decision_threshold = 0.7;
  EXPECT_FALSE(predict_binary(strict, std::vector{0.5}).malicious);
}

TEST(Binary, LabelIsMonotoneInScore) {
  const auto m = linear_model(Phase::kBinary, binary_class_names(), nn::Matrix::Constant(1, 1, 2.0), nn::Vector::Zero(1));
  bool seen_malicious = false;
  for (double x = -3; x <= 3; x += 0.01) {
    const auto p = predict_binary(m, std::vector{x});
    EXPECT_GE(p.score, 0.0);
    EXPECT_LE(p.score, 1.0);
    if (seen_malicious) {
      EXPECT_TRUE(p.malicious);
    }
    seen_malicious = seen_malicious || p.malicious;
  }
}

TEST(Type, UniformProbabilitiesPickFirstClass) {
  const auto m = linear_model(Phase::kType, types(), nn::Matrix::Zero(5, 3), nn::Vector::Zero(5));
  const auto p = predict_type(m, std::vector<double>{1, 2, 3});
  EXPECT_EQ(p.label, "adware");
  EXPECT_EQ(p.index, 0u);
  EXPECT_NEAR(std::accumulate(p.probabilities.begin(), p.probabilities.end(), 0.0), 1.0, 1e-9);
}

TEST(Type, DimensionMismatchAndWrongPhase) {
  const auto m = linear_model(Phase::kType, types(), nn::Matrix::Zero(5, 3), nn::Vector::Zero(5));
  EXPECT_THROW(predict_type(m, std::vector<double>{1, 2}), InputError);
  EXPECT_THROW(predict_binary(m, std::vector<double>{1, 2, 3}), InputError);
  const auto b = linear_model(Phase::kBinary, binary_class_names(), nn::Matrix::Zero(1, 3), nn::Vector::Zero(1));
  EXPECT_THROW(predict_type(b, std::vector<double>{1, 2, 3}), InputError);
}

TEST(Family, DispatchFollowsPredictedType) {
  std::map<std::string, PhaseModel> fam;
  nn::Matrix pick_second = nn::Matrix::Zero(3, 2);
  pick_second(1, 0) = 5;
  fam.emplace("virus", linear_model(Phase::kFamily, {"pioneer", "sality", "viking"}, pick_second, nn::Vector::Zero(3)));
  fam.emplace("adware", linear_model(Phase::kFamily, {"hotbar"}, nn::Matrix::Zero(1, 2), nn::Vector::Zero(1)));
  const std::vector<double> z = {1, 0};
  EXPECT_EQ(predict_family(fam, "virus", z).label, "sality");
  EXPECT_EQ(predict_family(fam, "virus", z).probabilities.size(), 3u);
  // a wrong type still dispatches to that type's model
  EXPECT_EQ(predict_family(fam, "adware", z).label, "hotbar");
  EXPECT_EQ(predict_family(fam, "adware", std::vector<double>{-9, 9}).label, "hotbar");
  EXPECT_THROW(predict_family(fam, "worm", z), InputError);
}

TEST(Family, PermutationEquivariance) {
  std::mt19937_64 rng(2);
  const nn::Matrix w = nn::Matrix::Random(4, 6);
  const nn::Vector b = nn::Vector::Random(4);
  const std::vector<std::string> names = {"a", "b", "c", "d"};
  const std::vector<std::size_t> perm = {2, 0, 3, 1};
  nn::Matrix pw(4, 6);
  nn::Vector pb(4);
  std::vector<std::string> pnames(4);
  for (std::size_t i = 0; i < 4; ++i) {
    pw.row(static_cast<Eigen::Index>(i)) = w.row(static_cast<Eigen::Index>(perm[i]));
    pb(static_cast<Eigen::Index>(i)) = b(static_cast<Eigen::Index>(perm[i]));
    pnames[i] = names[perm[i]];
  }
  const auto m = linear_model(Phase::kFamily, names, w, b);
  const auto pm = linear_model(Phase::kFamily, pnames, pw, pb);
  const std::map<std::string, PhaseModel> a = {{"t", m}}, p = {{"t", pm}};
  for (int i = 0; i < 200; ++i) {
    const nn::Vector z = 3.0 * nn::Vector::Random(6);
    const std::vector<double> zv(z.data(), z.data() + 6);
    const auto x = predict_family(a, "t", zv), y = predict_family(p, "t", zv);
    EXPECT_EQ(x.label, y.label);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(y.probabilities[k], x.probabilities[perm[k]]);
  }
}

TEST(TrainPhase, MissingClassIsNamed) {
  const auto c = clusters({"pioneer", "sality"}, 10, 4, 1);
  try {
    (void)train_phase(Phase::kFamily, {"pioneer", "sality", "viking"}, c.x, c.labels, quick_candidate(), "virus");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("viking"), std::string::npos);
  }
  auto bad = c.labels;
  bad[0] = "zbot";
  EXPECT_THROW(train_phase(Phase::kFamily, {"pioneer", "sality"}, c.x, bad, quick_candidate()), InputError);
}

TEST(TrainPhase, BinarySeparableLatentsReachHighF1) {
  const auto train = clusters({"benign", "malicious"}, 300, 8, 3);
  const auto test = clusters({"benign", "malicious"}, 300, 8, 4);
  const auto m = train_phase(Phase::kBinary, {}, train.x, train.labels, quick_candidate());
  EXPECT_EQ(m.network.output_size(), 1u);
  EXPECT_EQ(m.class_names, binary_class_names());
  const auto pred = predict_labels(m, test.x);
  for (const std::string cls : {"benign", "malicious"}) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      tp += pred[i] == cls && test.labels[i] == cls;
      fp += pred[i] == cls && test.labels[i] != cls;
      fn += pred[i] != cls && test.labels[i] == cls;
    }
    EXPECT_GE(2 * tp / (2 * tp + fp + fn), 0.95) << cls;
  }
  for (Eigen::Index i = 0; i < 20; ++i) {
    const auto s = predict_binary(m, col(test.x, i));
    EXPECT_EQ(s.malicious ? "malicious" : "benign", pred[static_cast<std::size_t>(i)]);
  }
}

TEST(TrainPhase, FamilyShapeDeterminismAndRoundTrip) {
  const std::vector<std::string> virus = {"pioneer", "sality", "viking"};
  const auto c = clusters(virus, 40, 6, 9);
  const auto a = train_phase(Phase::kFamily, virus, c.x, c.labels, quick_candidate(), "virus");
  const auto b = train_phase(Phase::kFamily, virus, c.x, c.labels, quick_candidate(), "virus");
  EXPECT_EQ(a.network.output_size(), 3u);
  EXPECT_EQ(a.network.layers().back().activation, nn::Activation::kSoftmax);
  EXPECT_EQ(a.network.layers().front().activation, nn::Activation::kRelu);
  EXPECT_EQ(a.network, b.network);
  EXPECT_EQ(a.history.epoch_loss.size(), 20u);
  const auto back = PhaseModel::from_json(nlohmann::json::parse(a.to_json().dump()));
  EXPECT_EQ(back.network, a.network);
  EXPECT_EQ(back.class_names, virus);
  EXPECT_EQ(back.type_name, "virus");
  EXPECT_EQ(predict_labels(back, c.x), predict_labels(a, c.x));
  for (Eigen::Index i = 0; i < c.x.cols(); ++i) {
    const auto p = predict_family({{"virus", a}}, "virus", col(c.x, i)).probabilities;
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
    for (double v : p) EXPECT_GE(v, 0.0);
  }
}

TEST(PhaseModel, ShapeChecks) {
  auto j = linear_model(Phase::kType, types(), nn::Matrix::Zero(5, 2), nn::Vector::Zero(5)).to_json();
  j["class_names"].erase(0);
  EXPECT_THROW(PhaseModel::from_json(j), InputError);
  auto bj = linear_model(Phase::kBinary, binary_class_names(), nn::Matrix::Zero(1, 2), nn::Vector::Zero(1)).to_json();
  bj["decision_threshold"] = 1.0;
  EXPECT_THROW(PhaseModel::from_json(bj), InputError);
}
