#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "ipp/errors.hpp"
#include "ipp/forest.hpp"
#include "ipp/parallel.hpp"
#include "ipp/rng.hpp"
#include "ipp/text.hpp"
#include "support.hpp"

using namespace ipp;

namespace {

std::vector<double> random_features(Rng& rng) {
  std::vector<double> x(kFeatureCount);
  for (double& v : x) v = rng.uniform();
  return x;
}

std::vector<QDatapoint> synthetic(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<QDatapoint> data;
  for (std::size_t i = 0; i < n; ++i) {
    QDatapoint d;
    d.features.values = random_features(rng);
    d.q = d.features.values[0];
    data.push_back(std::move(d));
  }
  return data;
}

double held_out_mae(const RegressionForest& f, std::uint64_t seed) {
  double err = 0;
  for (const QDatapoint& d : synthetic(500, seed)) err += std::abs(f.predict(d.features) - d.q);
  return err / 500;
}

/// Single tree decreasing in feature `index`, in steps of 0.01 over [0, 1]:
/// a right-leaning chain of splits, each with a leaf on its left.
RegressionTree negated_feature_tree(int index) {
  RegressionTree t;
  for (int k = 0; k < 100; ++k) {
    t.nodes.push_back({index, (k + 1) * 0.01, 2 * k + 1, 2 * k + 2, 0.0});
    t.nodes.push_back({-1, 0.0, -1, -1, 1.0 - k * 0.01});
  }
  t.nodes.push_back({-1, 0.0, -1, -1, 0.0});
  return t;
}

}  // namespace

TEST_CASE("constant targets and single datapoints") {
  Rng rng(1);
  std::vector<QDatapoint> data = synthetic(200, 2);
  for (auto& d : data) d.q = 0.37;
  const RegressionForest f = fit(data, {}, 9);
  for (int i = 0; i < 50; ++i) CHECK(f.predict({random_features(rng)}) == 0.37);

  const std::vector<QDatapoint> one{synthetic(1, 3)[0]};
  const RegressionForest g = fit(one, {}, 9);
  for (int i = 0; i < 20; ++i) CHECK(g.predict({random_features(rng)}) == one[0].q);
}

TEST_CASE("recovers a noiseless target from 1000 points") {
  // All features considered per split; with 4 of 16 the held-out error sits
  // around 0.05 for this target.
  const RegressionForest f = fit(synthetic(1000, 4), {50, 12, 5, 16}, 5);
  CHECK(f.trees().size() == 50);
  CHECK(held_out_mae(f, 99) < 0.05);
}

TEST_CASE("more data does not hurt") {
  const double small = held_out_mae(fit(synthetic(200, 6), {}, 5), 98);
  const double large = held_out_mae(fit(synthetic(1000, 6), {}, 5), 98);
  CHECK(large <= small + 0.005);
}

TEST_CASE("predictions stay within the training target range") {
  Rng rng(8);
  std::vector<QDatapoint> data = synthetic(300, 7);
  for (auto& d : data) d.q = 0.2 + 0.5 * d.features.values[1] * d.features.values[2];
  const RegressionForest f = fit(data, {20, 8, 3, 4}, 1);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x = random_features(rng);
    for (double& v : x) v = v * 4 - 2;  // well outside the training box
    const double p = f.predict({x});
    CHECK(p >= 0.2);
    CHECK(p <= 0.7);
  }
}

TEST_CASE("fit is deterministic and independent of worker count") {
  const auto data = synthetic(400, 10);
  set_max_jobs(1);
  const RegressionForest a = fit(data, {10, 6, 5, 4}, 3);
  set_max_jobs(4);
  const RegressionForest b = fit(data, {10, 6, 5, 4}, 3);
  set_max_jobs(0);
  CHECK(a == b);
  CHECK(a != fit(data, {10, 6, 5, 4}, 4));
}

TEST_CASE("prediction does not depend on tree order") {
  const RegressionForest f = fit(synthetic(300, 11), {12, 6, 5, 4}, 2);
  std::vector<RegressionTree> rev(f.trees().rbegin(), f.trees().rend());
  const RegressionForest g(rev, f.params(), f.train_seed(), f.schema_version(), f.feature_count());
  Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    const FeatureVector x{random_features(rng)};
    CHECK(g.predict(x) == doctest::Approx(f.predict(x)).epsilon(1e-12));
  }
}

TEST_CASE("hand-traced tree") {
  //        f3 <= 0.5
  //       /         \
  //   f0 <= 0.2    f7 <= 0.9
  //   /     \      /      \
  //  0.1   0.4   0.6     f3 <= 0.75
  //                       /     \
  //                     0.8     0.95
  RegressionTree t;
  t.nodes = {
      {3, 0.5, 1, 2, 0.5},   {0, 0.2, 3, 4, 0.3},   {7, 0.9, 5, 6, 0.7},  {-1, 0, -1, -1, 0.1},
      {-1, 0, -1, -1, 0.4},  {-1, 0, -1, -1, 0.6},  {3, 0.75, 7, 8, 0.9}, {-1, 0, -1, -1, 0.8},
      {-1, 0, -1, -1, 0.95},
  };
  auto traced = [](const std::vector<double>& x) {
    if (x[3] <= 0.5) return x[0] <= 0.2 ? 0.1 : 0.4;
    if (x[7] <= 0.9) return 0.6;
    return x[3] <= 0.75 ? 0.8 : 0.95;
  };
  const RegressionForest f({t}, {1, 3, 1, 16}, 0, kFeatureSchemaVersion, kFeatureCount);
  Rng rng(13);
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> x = random_features(rng);
    CHECK(t.predict(x) == traced(x));
    CHECK(f.predict({x}) == traced(x));
  }
}

TEST_CASE("forest reading negated motion cost picks the nearest node") {
  NodeSet nodes{{{50, 50}, {50, 83}, {70, 50}, {50, 45.5}, {10, 10}, {56, 58}}, 0};
  const Budget budget{100.0, 5};
  const SensorConfig cfg{16, 5.0};
  const PathState s(nodes);
  const Belief belief(100, 100);
  const LearnedPolicy policy(
      RegressionForest({negated_feature_tree(13)}, {1, 100, 1, 16}, 0, kFeatureSchemaVersion, kFeatureCount));
  CHECK(policy.select_action(s, belief, nodes, budget, cfg) == NodeIndex{3});
  const PathState s2 = s.extended(3, nodes);
  CHECK(policy.select_action(s2, belief, nodes, budget, cfg) == NodeIndex{5});

  SUBCASE("argmax is invariant under positive affine rescaling") {
    RegressionTree t = negated_feature_tree(13);
    for (auto& n : t.nodes) n.value = 3.0 * n.value + 7.0;
    const LearnedPolicy scaled(RegressionForest({t}, {1, 100, 1, 16}, 0, kFeatureSchemaVersion, kFeatureCount));
    CHECK(scaled.select_action(s, belief, nodes, budget, cfg) == NodeIndex{3});
    CHECK(scaled.select_action(s2, belief, nodes, budget, cfg) == NodeIndex{5});
  }
  SUBCASE("single feasible action") {
    CHECK(policy.select_action(s, belief, nodes, {4.6, 5}, cfg) == NodeIndex{3});
    CHECK_FALSE(policy.select_action(s, belief, nodes, {1.0, 5}, cfg).has_value());
  }
}

TEST_CASE("model round-trip") {
  const RegressionForest f = fit(synthetic(300, 14), {8, 6, 5, 4}, 21);
  const auto path = std::filesystem::temp_directory_path() / "ipp_forest_test.ipf";
  save_model(path, f);
  const RegressionForest g = load_model(path);
  CHECK(g == f);
  Rng rng(15);
  for (int i = 0; i < 100; ++i) {
    const FeatureVector x{random_features(rng)};
    CHECK(std::bit_cast<std::uint64_t>(g.predict(x)) == std::bit_cast<std::uint64_t>(f.predict(x)));
  }

  SUBCASE("truncated file") {
    const std::string text = serialize_forest(f);
    for (std::size_t cut : {std::size_t{10}, text.size() / 2, text.size() - 4}) {
      std::ofstream(path, std::ios::trunc) << text.substr(0, cut);
      CHECK_THROWS_AS(load_model(path), ParseError);
    }
  }
  SUBCASE("schema mismatch") {
    CHECK_THROWS_AS(parse_forest(serialize_forest(f), kFeatureSchemaVersion + 1), IncompatibleModel);
    FeatureVector wrong{std::vector<double>(kFeatureCount, 0.5), kFeatureSchemaVersion + 1};
    CHECK_THROWS_AS(f.predict(wrong), ContractViolation);
    CHECK_THROWS_AS(f.predict({std::vector<double>(3, 0.5)}), ContractViolation);
  }
  std::filesystem::remove(path);
}

TEST_CASE("fit rejects bad training data") {
  CHECK_THROWS_AS(fit({}, {}, 1), TrainingError);
  std::vector<QDatapoint> mixed = synthetic(10, 16);
  mixed[4].features.schema_version = 2;
  CHECK_THROWS_AS(fit(mixed, {}, 1), TrainingError);
  std::vector<QDatapoint> nan = synthetic(10, 16);
  nan[2].q = std::nan("");
  CHECK_THROWS_AS(fit(nan, {}, 1), TrainingError);
  CHECK_THROWS_AS(validate(ForestParams{0, 3, 1, 4}), ConfigError);
}
