#include "ipp/planners.hpp"

#include <limits>

#include <fmt/format.h>

#include "ipp/errors.hpp"

namespace ipp {

namespace {

struct Insertion {
  double added = 0.0;
  std::size_t position = 0;  // index in tour after which the node is placed
};

// tour[0] is the fixed anchor; the tour is an open path.
Insertion cheapest_insertion(const NodeSet& nodes, const std::vector<NodeIndex>& tour, NodeIndex v) {
  Insertion best{distance(nodes[tour.back()], nodes[v]), tour.size() - 1};
  for (std::size_t k = 0; k + 1 < tour.size(); ++k) {
    const double added = distance(nodes[tour[k]], nodes[v]) + distance(nodes[v], nodes[tour[k + 1]]) -
                         distance(nodes[tour[k]], nodes[tour[k + 1]]);
    if (added < best.added) best = {added, k};
  }
  return best;
}

struct GreedyTour {
  std::vector<NodeIndex> tour;  // tour[0] is the start state's last node
  std::size_t gain = 0;
  double length = 0.0;
};

enum class GreedyRule { CostBenefit, UnitCost };

// Greedy tour construction. CostBenefit ranks nodes by gain per added tour
// length, UnitCost by gain alone. Nodes whose cheapest insertion breaks the
// budget are skipped for the round.
GreedyTour greedy_tour(const CoverageModel& model, const PathState& start, double budget_remaining,
                       std::size_t steps_remaining, GreedyRule rule) {
  const NodeSet& nodes = model.nodes();
  CoverageTracker tracker(model, start.visited());
  GreedyTour out;
  out.tour = {start.last()};
  std::vector<std::uint8_t> used(nodes.size(), 0);
  for (NodeIndex v : start.visited()) used[v] = 1;

  constexpr double kMinCost = 1e-9;
  while (out.tour.size() - 1 < steps_remaining) {
    NodeIndex best = nodes.size();
    Insertion best_ins;
    double best_score = -1.0;
    for (NodeIndex v = 0; v < nodes.size(); ++v) {
      if (used[v]) continue;
      const std::size_t gain = tracker.gain_count(v);
      if (gain == 0) continue;
      const Insertion ins = cheapest_insertion(nodes, out.tour, v);
      if (out.length + ins.added > budget_remaining + 1e-9) continue;
      std::vector<NodeIndex> trial = out.tour;
      trial.insert(trial.begin() + static_cast<std::ptrdiff_t>(ins.position) + 1, v);
      if (path_cost(trial, nodes) > budget_remaining) continue;
      const double score = rule == GreedyRule::CostBenefit
                               ? static_cast<double>(gain) / std::max(ins.added, kMinCost)
                               : static_cast<double>(gain);
      if (score > best_score) {
        best_score = score;
        best = v;
        best_ins = ins;
      }
    }
    if (best == nodes.size()) break;
    out.gain += tracker.gain_count(best);
    tracker.add(best);
    used[best] = 1;
    out.tour.insert(out.tour.begin() + static_cast<std::ptrdiff_t>(best_ins.position) + 1, best);
    out.length = path_cost(out.tour, nodes);
  }
  return out;
}

}  // namespace

OraclePlan gcb_solve(const CoverageModel& model, const PathState& start, double budget_remaining,
                     std::size_t steps_remaining) {
  const NodeSet& nodes = model.nodes();
  OraclePlan plan;
  if (steps_remaining == 0 || !(budget_remaining > 0.0)) return plan;

  const GreedyTour cost_benefit = greedy_tour(model, start, budget_remaining, steps_remaining, GreedyRule::CostBenefit);
  const GreedyTour unit_cost = greedy_tour(model, start, budget_remaining, steps_remaining, GreedyRule::UnitCost);
  const GreedyTour& greedy = unit_cost.gain > cost_benefit.gain ? unit_cost : cost_benefit;

  // Best reachable singleton.
  const CoverageTracker base(model, start.visited());
  NodeIndex single = nodes.size();
  std::size_t single_gain = 0;
  for (NodeIndex v = 0; v < nodes.size(); ++v) {
    if (start.contains(v)) continue;
    if (distance(nodes[start.last()], nodes[v]) > budget_remaining) continue;
    const std::size_t gain = base.gain_count(v);
    if (gain > single_gain) {
      single_gain = gain;
      single = v;
    }
  }

  const double total = static_cast<double>(model.coverable_count());
  if (single != nodes.size() && single_gain > greedy.gain) {
    plan.path = {single};
    plan.predicted_utility = static_cast<double>(single_gain) / total;
    plan.predicted_cost = distance(nodes[start.last()], nodes[single]);
  } else if (greedy.gain > 0) {
    plan.path.assign(greedy.tour.begin() + 1, greedy.tour.end());
    plan.predicted_utility = static_cast<double>(greedy.gain) / total;
    plan.predicted_cost = greedy.length;
  }
  return plan;
}

std::optional<NodeIndex> oracle_action(const CoverageModel& model, const PathState& state, const Budget& budget) {
  const NodeSet& nodes = model.nodes();
  const std::vector<NodeIndex> feasible = feasible_actions(state, nodes, budget);
  if (feasible.empty()) return std::nullopt;
  const std::size_t steps = static_cast<std::size_t>(budget.horizon) + 1 - state.t();
  const OraclePlan plan = gcb_solve(model, state, budget.travel - state.travel_cost(), steps);
  if (!plan.path.empty() && is_feasible(state, plan.path.front(), nodes, budget)) return plan.path.front();
  if (!plan.path.empty()) {
    // Rounding put the planned node a hair over budget; take the best feasible
    // gain instead.
    const CoverageTracker tracker(model, state.visited());
    NodeIndex best = feasible.front();
    std::size_t best_gain = 0;
    for (NodeIndex v : feasible) {
      const std::size_t g = tracker.gain_count(v);
      if (g > best_gain) best_gain = g, best = v;
    }
    return best;
  }
  return feasible.front();
}

double oracle_rollout_value(const CoverageModel& model, PathState state, const Budget& budget) {
  CoverageTracker tracker(model, state.visited());
  const double norm = model.full_coverage();
  double value = 0.0;
  while (auto a = oracle_action(model, state, budget)) {
    if (norm > 0.0) value += tracker.gain(*a) / norm;
    tracker.add(*a);
    state.extend(*a, model.nodes());
  }
  ConstraintAudit::global().check(state.visited(), model.nodes(), budget);
  return value;
}

double oracle_value_to_go(const CoverageModel& model, const PathState& state, NodeIndex action,
                          const Budget& budget) {
  if (!is_feasible(state, action, model.nodes(), budget))
    throw ContractViolation(fmt::format("action {} is not feasible at t={}", action, state.t()));
  return reward(state, model, action) + oracle_rollout_value(model, state.extended(action, model.nodes()), budget);
}

std::optional<NodeIndex> heuristic_select(PolicyKind kind, const BeliefSummary& summary, const PathState& state,
                                          const NodeSet& nodes, const Budget& budget) {
  if (!is_heuristic(kind))
    throw ContractViolation(fmt::format("'{}' is not a heuristic policy kind", policy_kind_name(kind)));
  const std::vector<NodeIndex> feasible = feasible_actions(state, nodes, budget);
  if (feasible.empty()) return std::nullopt;
  if (feasible.size() == 1) return feasible.front();
  NodeIndex best = feasible.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (NodeIndex v : feasible) {
    const double s = score(kind, v, summary, nodes);
    if (s > best_score) {
      best_score = s;
      best = v;
    }
  }
  return best;
}

std::optional<NodeIndex> heuristic_select(PolicyKind kind, const Belief& belief, const PathState& state,
                                          const NodeSet& nodes, const Budget& budget, const SensorConfig& sensor) {
  return heuristic_select(kind, BeliefSummary(belief, sensor), state, nodes, budget);
}

namespace {

struct Search {
  const CoverageModel& model;
  const Budget& budget;
  BruteForceResult best;
  std::size_t best_count = 0;

  void visit(PathState& state, CoverageTracker& tracker) {
    if (best.path.empty() || tracker.covered_count() > best_count) {
      best_count = tracker.covered_count();
      best.path = state.visited();
    }
    for (NodeIndex v : feasible_actions(state, model.nodes(), budget)) {
      CoverageTracker next_tracker = tracker;
      next_tracker.add(v);
      PathState next = state.extended(v, model.nodes());
      visit(next, next_tracker);
    }
  }
};

}  // namespace

BruteForceResult brute_force_solve(const CoverageModel& model, const Budget& budget) {
  if (model.node_count() > 10 || budget.horizon > 5)
    throw RefusalError(fmt::format("instance too large for exhaustive search (|V|={}, T={})",
                                   model.node_count(), budget.horizon));
  Search search{model, budget, {}, 0};
  PathState start(model.nodes());
  CoverageTracker tracker(model, start.visited());
  search.visit(start, tracker);
  const std::size_t total = model.coverable_count();
  search.best.utility = total == 0 ? 0.0 : static_cast<double>(search.best_count) / static_cast<double>(total);
  return search.best;
}

}  // namespace ipp
