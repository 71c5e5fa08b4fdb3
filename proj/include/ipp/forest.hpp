#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ipp/features.hpp"
#include "ipp/objective.hpp"

namespace ipp {

/// One training example for the policy regressor.
struct QDatapoint {
  FeatureVector features;
  double q = 0.0;  // oracle value-to-go
  std::size_t t = 1;
  double weight = 1.0;
  friend bool operator==(const QDatapoint&, const QDatapoint&) = default;
};

struct ForestParams {
  int tree_count = 50;
  int max_depth = 12;
  int min_leaf = 5;
  int feature_subsample = 4;  // features tried per split

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

void validate(const ForestParams& params);

/// Flat array tree; node 0 is the root. A node with feature < 0 is a leaf.
struct RegressionTree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;  // go left when value <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;  // mean training target of the node
    friend bool operator==(const Node&, const Node&) = default;
  };
  std::vector<Node> nodes;

  double predict(std::span<const double> x) const;
  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

class RegressionForest {
 public:
  RegressionForest(std::vector<RegressionTree> trees, ForestParams params, std::uint64_t train_seed,
                   int schema_version, std::size_t feature_count);

  const std::vector<RegressionTree>& trees() const { return trees_; }
  const ForestParams& params() const { return params_; }
  std::uint64_t train_seed() const { return train_seed_; }
  int schema_version() const { return schema_version_; }
  std::size_t feature_count() const { return feature_count_; }

  /// Mean of the per-tree predictions (accumulated in tree order, clamped to
  /// their range so equal trees give exactly their common value).
  double predict(const FeatureVector& features) const;

  friend bool operator==(const RegressionForest&, const RegressionForest&) = default;

 private:
  std::vector<RegressionTree> trees_;
  ForestParams params_;
  std::uint64_t train_seed_;
  int schema_version_;
  std::size_t feature_count_;
};

/// Bootstrap-aggregated CART regression trees with variance-reduction splits
/// over random feature subsets. Tree k draws from derive_seed(seed, k), so the
/// result is independent of how trees are scheduled.
RegressionForest fit(std::span<const QDatapoint> data, const ForestParams& params, std::uint64_t seed);

std::string serialize_forest(const RegressionForest& forest);
RegressionForest parse_forest(std::string_view text, int expected_schema = kFeatureSchemaVersion);
void save_model(const std::filesystem::path& path, const RegressionForest& forest);
RegressionForest load_model(const std::filesystem::path& path, int expected_schema = kFeatureSchemaVersion);

/// Greedy policy over the forest's predicted value-to-go.
class LearnedPolicy {
 public:
  explicit LearnedPolicy(RegressionForest forest);

  const RegressionForest& forest() const { return forest_; }

  /// Feasible action with the highest predicted Q (ties: lowest index);
  /// nullopt when the state is terminal.
  std::optional<NodeIndex> select_action(const PathState& state, const BeliefSummary& summary,
                                         const NodeSet& nodes, const Budget& budget) const;
  std::optional<NodeIndex> select_action(const PathState& state, const Belief& belief, const NodeSet& nodes,
                                         const Budget& budget, const SensorConfig& sensor) const;

 private:
  RegressionForest forest_;
};

}  // namespace ipp
