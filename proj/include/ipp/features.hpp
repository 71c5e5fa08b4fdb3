#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "ipp/objective.hpp"
#include "ipp/sensor.hpp"

namespace ipp {

enum class PolicyKind {
  OracleGcb,
  Learned,
  AverageEntropy,
  OcclusionAware,
  RearSideVoxel,
  RearSideEntropy,
  UnobservedVoxel,
  ProximityCount,
  Random,
};

PolicyKind parse_policy_kind(std::string_view name);
std::string_view policy_kind_name(PolicyKind kind);
bool is_heuristic(PolicyKind kind);

inline constexpr int kFeatureSchemaVersion = 1;
inline constexpr std::size_t kFeatureCount = 16;

/// Name and normaliser of each feature, in vector order.
struct FeatureInfo {
  std::string_view name;
  std::string_view normalizer;
};
const std::array<FeatureInfo, kFeatureCount>& feature_schema();

struct FeatureVector {
  std::vector<double> values;
  int schema_version = kFeatureSchemaVersion;
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Unnormalised information metrics of one candidate view, computed by casting
/// the sensor rays over the evidence grid. UNKNOWN and KNOWN_FREE cells are
/// transparent, a KNOWN_OCCUPIED cell is visible and ends the ray. An UNKNOWN
/// cell has entropy 1 bit, known cells 0. Along a ray, each UNKNOWN cell passed
/// halves the visibility of the cells behind it.
struct ViewMetrics {
  std::size_t visible = 0;           // distinct cells reached by any ray
  std::size_t visible_occupied = 0;  // ... of which KNOWN_OCCUPIED
  std::size_t unobserved = 0;        // ... of which UNKNOWN
  std::size_t rear_side = 0;         // ... UNKNOWN and 8-adjacent to KNOWN_OCCUPIED
  std::size_t frontier = 0;          // ... UNKNOWN and 4-adjacent to KNOWN_FREE
  double average_entropy = 0.0;      // unobserved / visible
  double occlusion_entropy = 0.0;    // per-ray sum of entropy * visibility, averaged over rays
  double rear_side_entropy = 0.0;    // as occlusion_entropy, rear-side cells only
  double proximity = 0.0;            // sum over UNKNOWN visible cells of (1 - d / max_range)
  double mean_ray_length = 0.0;
};

/// Belief-wide quantities shared by every candidate evaluated against the
/// same belief.
class BeliefSummary {
 public:
  BeliefSummary(const Belief& belief, const SensorConfig& sensor);
  BeliefSummary(Belief&&, const SensorConfig&) = delete;  // keeps a reference to the evidence grid

  const EvidenceGrid& evidence() const { return *evidence_; }
  const SensorConfig& sensor() const { return sensor_; }
  bool rear_side(CellIndex i) const { return rear_side_[i] != 0; }
  bool frontier(CellIndex i) const { return frontier_[i] != 0; }
  /// Distance from p to the nearest frontier cell centre; negative if none.
  double nearest_frontier(Vec2 p) const;
  /// |covered| / (|covered| + |rear-side cells|): belief-side estimate of the
  /// coverage reached so far.
  double coverage_estimate() const { return coverage_estimate_; }

  ViewMetrics view(Vec2 position) const;

 private:
  const EvidenceGrid* evidence_;
  SensorConfig sensor_;
  std::vector<std::uint8_t> rear_side_;
  std::vector<std::uint8_t> frontier_;
  std::vector<Vec2> frontier_centres_;
  double coverage_estimate_ = 0.0;
};

/// Feature vector for moving from `state` to `action`. The action must be
/// reachable within the travel budget (the current node is accepted and
/// yields null motion).
FeatureVector extract(const PathState& state, NodeIndex action, const BeliefSummary& summary,
                      const NodeSet& nodes, const Budget& budget);
FeatureVector extract(const PathState& state, NodeIndex action, const Belief& belief,
                      const NodeSet& nodes, const Budget& budget, const SensorConfig& sensor);

/// Raw score of a heuristic kind for a candidate; argmax drives heuristic_select.
double score(PolicyKind kind, const ViewMetrics& metrics);
double score(PolicyKind kind, NodeIndex action, const BeliefSummary& summary, const NodeSet& nodes);

}  // namespace ipp
