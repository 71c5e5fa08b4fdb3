#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "ipp/sensor.hpp"
#include "ipp/world.hpp"

namespace ipp {

/// Per-instance coverage tables: the hit set of every candidate node on the
/// true world, remapped to compact ids over the coverable surface (the union
/// of all hit sets). The coverage of a path is the covered fraction of that
/// union, so visiting every node yields exactly 1.
class CoverageModel {
 public:
  CoverageModel(const WorldMap& world, const NodeSet& nodes, const SensorConfig& sensor);

  const NodeSet& nodes() const { return nodes_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t coverable_count() const { return coverable_.size(); }
  /// World cell index of each compact id.
  std::span<const CellIndex> coverable_cells() const { return coverable_; }
  /// Compact ids hit from node v.
  std::span<const std::uint32_t> hits(NodeIndex v) const { return hits_[v]; }

  double coverage(std::span<const NodeIndex> visited) const;
  double marginal_gain(NodeIndex v, std::span<const NodeIndex> visited) const;
  /// coverage(all nodes): 1, or 0 when nothing is coverable.
  double full_coverage() const { return coverable_.empty() ? 0.0 : 1.0; }

 private:
  NodeSet nodes_;
  std::vector<CellIndex> coverable_;
  std::vector<std::vector<std::uint32_t>> hits_;
};

/// Incremental covered-set bookkeeping over a CoverageModel.
class CoverageTracker {
 public:
  explicit CoverageTracker(const CoverageModel& model);
  CoverageTracker(const CoverageModel& model, std::span<const NodeIndex> visited);

  void add(NodeIndex v);
  /// Number of not-yet-covered cells node v would cover.
  std::size_t gain_count(NodeIndex v) const;
  double gain(NodeIndex v) const;
  std::size_t covered_count() const { return covered_count_; }
  double value() const;

 private:
  const CoverageModel* model_;
  std::vector<std::uint8_t> covered_;
  std::size_t covered_count_ = 0;
};

double coverage(std::span<const NodeIndex> visited, const WorldMap& world, const NodeSet& nodes,
                const SensorConfig& sensor);
double marginal_gain(NodeIndex v, std::span<const NodeIndex> visited, const WorldMap& world,
                     const NodeSet& nodes, const SensorConfig& sensor);

struct Budget {
  double travel = 2500.0;  // B
  int horizon = 30;        // T
};

void validate(const Budget& budget);

/// Euclidean length of the polyline through the given nodes.
double path_cost(std::span<const NodeIndex> path, const NodeSet& nodes);

/// Visited-node sequence starting at the start node, with cached travel cost.
/// t() == |visited|, so the initial state has t() == 1.
class PathState {
 public:
  explicit PathState(const NodeSet& nodes);
  PathState(std::vector<NodeIndex> visited, const NodeSet& nodes);

  const std::vector<NodeIndex>& visited() const { return visited_; }
  double travel_cost() const { return travel_cost_; }
  std::size_t t() const { return visited_.size(); }
  NodeIndex last() const { return visited_.back(); }
  bool contains(NodeIndex v) const;

  void extend(NodeIndex v, const NodeSet& nodes);
  PathState extended(NodeIndex v, const NodeSet& nodes) const;

  friend bool operator==(const PathState&, const PathState&) = default;

 private:
  std::vector<NodeIndex> visited_;
  double travel_cost_ = 0.0;
};

bool is_feasible(const PathState& state, NodeIndex action, const NodeSet& nodes, const Budget& budget);

/// Unvisited nodes reachable within the travel budget while |visited| <= T.
/// Ascending node order; empty means the state is terminal.
std::vector<NodeIndex> feasible_actions(const PathState& state, const NodeSet& nodes, const Budget& budget);

/// Marginal gain normalised by the coverage of the whole node set.
double reward(const PathState& state, const CoverageModel& model, NodeIndex action);

/// True when the path respects C <= B (1e-9 slack for the recomputation) and
/// |path| <= T + 1.
bool satisfies_constraints(std::span<const NodeIndex> path, const NodeSet& nodes, const Budget& budget);

/// Process-wide tally of every trajectory checked against the Problem
/// constraints (episodes, roll-ins and oracle rollouts).
class ConstraintAudit {
 public:
  static ConstraintAudit& global();

  /// Records the check and returns whether the path satisfied the constraints.
  bool check(std::span<const NodeIndex> path, const NodeSet& nodes, const Budget& budget);
  std::uint64_t checked() const { return checked_.load(); }
  std::uint64_t violations() const { return violations_.load(); }
  void reset();

 private:
  std::atomic<std::uint64_t> checked_{0};
  std::atomic<std::uint64_t> violations_{0};
};

}  // namespace ipp
