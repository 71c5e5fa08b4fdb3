#pragma once

#include <optional>
#include <vector>

#include "ipp/features.hpp"
#include "ipp/objective.hpp"
#include "ipp/rng.hpp"

namespace ipp {

/// Extension of a start state proposed by the clairvoyant planner.
struct OraclePlan {
  std::vector<NodeIndex> path;    // new nodes, in visiting order
  double predicted_utility = 0.0;  // coverage gained over the start state
  double predicted_cost = 0.0;     // travel length of the extension
};

/// Generalized cost-benefit greedy on the true world. Each round adds the node
/// with the best coverage gain per unit of added tour length (cheapest
/// insertion into the open tour that begins at the start state's last node),
/// skipping nodes that would break the budget. The result is the better of the
/// greedy tour and the best single reachable node. Ties go to the lower index.
OraclePlan gcb_solve(const CoverageModel& model, const PathState& start, double budget_remaining,
                     std::size_t steps_remaining);

/// Action of the clairvoyant oracle at `state`: the first node of the GCB
/// plan, or the lowest-index feasible node when no node adds coverage.
/// nullopt when the state is terminal.
std::optional<NodeIndex> oracle_action(const CoverageModel& model, const PathState& state, const Budget& budget);

/// Sum of oracle rewards when the oracle replans from `state` until the
/// horizon or the budget binds.
double oracle_rollout_value(const CoverageModel& model, PathState state, const Budget& budget);

/// reward(state, action) plus the oracle rollout from the successor state.
double oracle_value_to_go(const CoverageModel& model, const PathState& state, NodeIndex action,
                          const Budget& budget);

/// Argmax of the heuristic score over feasible actions (ties: lowest index).
/// nullopt when no action is feasible.
std::optional<NodeIndex> heuristic_select(PolicyKind kind, const BeliefSummary& summary, const PathState& state,
                                          const NodeSet& nodes, const Budget& budget);
std::optional<NodeIndex> heuristic_select(PolicyKind kind, const Belief& belief, const PathState& state,
                                          const NodeSet& nodes, const Budget& budget, const SensorConfig& sensor);

struct BruteForceResult {
  std::vector<NodeIndex> path;  // full path, starting at the start node
  double utility = 0.0;         // coverage of the full path
};

/// Exhaustive search over every feasible path (small instances only:
/// |V| <= 10, T <= 5). Among equal utilities the first path in depth-first,
/// ascending-index order wins.
BruteForceResult brute_force_solve(const CoverageModel& model, const Budget& budget);

}  // namespace ipp
