#include "ipp/objective.hpp"

#include <algorithm>
#include <cmath>

#include "ipp/errors.hpp"

namespace ipp {

CoverageModel::CoverageModel(const WorldMap& world, const NodeSet& nodes, const SensorConfig& sensor)
    : nodes_(nodes) {
  if (nodes.size() == 0 || nodes.start_index >= nodes.size())
    throw ContractViolation("node set must be non-empty with a valid start index");
  std::vector<std::vector<CellIndex>> raw;
  raw.reserve(nodes.size());
  for (const Vec2& p : nodes.nodes) {
    raw.push_back(raycast(world, p, sensor).hits);
    coverable_.insert(coverable_.end(), raw.back().begin(), raw.back().end());
  }
  std::sort(coverable_.begin(), coverable_.end());
  coverable_.erase(std::unique(coverable_.begin(), coverable_.end()), coverable_.end());
  hits_.reserve(raw.size());
  for (const auto& cells : raw) {
    std::vector<std::uint32_t> ids;
    ids.reserve(cells.size());
    for (CellIndex c : cells)
      ids.push_back(static_cast<std::uint32_t>(
          std::lower_bound(coverable_.begin(), coverable_.end(), c) - coverable_.begin()));
    hits_.push_back(std::move(ids));
  }
}

double CoverageModel::coverage(std::span<const NodeIndex> visited) const {
  return CoverageTracker(*this, visited).value();
}

double CoverageModel::marginal_gain(NodeIndex v, std::span<const NodeIndex> visited) const {
  return CoverageTracker(*this, visited).gain(v);
}

CoverageTracker::CoverageTracker(const CoverageModel& model)
    : model_(&model), covered_(model.coverable_count(), 0) {}

CoverageTracker::CoverageTracker(const CoverageModel& model, std::span<const NodeIndex> visited)
    : CoverageTracker(model) {
  for (NodeIndex v : visited) add(v);
}

void CoverageTracker::add(NodeIndex v) {
  for (std::uint32_t id : model_->hits(v)) {
    if (!covered_[id]) {
      covered_[id] = 1;
      ++covered_count_;
    }
  }
}

std::size_t CoverageTracker::gain_count(NodeIndex v) const {
  std::size_t n = 0;
  for (std::uint32_t id : model_->hits(v)) n += covered_[id] ? 0 : 1;
  return n;
}

double CoverageTracker::gain(NodeIndex v) const {
  const std::size_t total = model_->coverable_count();
  return total == 0 ? 0.0 : static_cast<double>(gain_count(v)) / static_cast<double>(total);
}

double CoverageTracker::value() const {
  const std::size_t total = model_->coverable_count();
  return total == 0 ? 0.0 : static_cast<double>(covered_count_) / static_cast<double>(total);
}

double coverage(std::span<const NodeIndex> visited, const WorldMap& world, const NodeSet& nodes,
                const SensorConfig& sensor) {
  return CoverageModel(world, nodes, sensor).coverage(visited);
}

double marginal_gain(NodeIndex v, std::span<const NodeIndex> visited, const WorldMap& world,
                     const NodeSet& nodes, const SensorConfig& sensor) {
  return CoverageModel(world, nodes, sensor).marginal_gain(v, visited);
}

void validate(const Budget& budget) {
  if (!(budget.travel >= 0.0)) throw ConfigError("travel budget B must be >= 0");
  if (budget.horizon < 1) throw ConfigError("horizon T must be >= 1");
}

double path_cost(std::span<const NodeIndex> path, const NodeSet& nodes) {
  double cost = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) cost += distance(nodes[path[k - 1]], nodes[path[k]]);
  return cost;
}

PathState::PathState(const NodeSet& nodes) : visited_{nodes.start_index} {}

PathState::PathState(std::vector<NodeIndex> visited, const NodeSet& nodes)
    : visited_(std::move(visited)), travel_cost_(path_cost(visited_, nodes)) {
  if (visited_.empty() || visited_.front() != nodes.start_index)
    throw ContractViolation("path must start at the start node");
}

bool PathState::contains(NodeIndex v) const {
  return std::find(visited_.begin(), visited_.end(), v) != visited_.end();
}

void PathState::extend(NodeIndex v, const NodeSet& nodes) {
  travel_cost_ += distance(nodes[last()], nodes[v]);
  visited_.push_back(v);
}

PathState PathState::extended(NodeIndex v, const NodeSet& nodes) const {
  PathState next = *this;
  next.extend(v, nodes);
  return next;
}

bool is_feasible(const PathState& state, NodeIndex action, const NodeSet& nodes, const Budget& budget) {
  if (action >= nodes.size() || state.contains(action)) return false;
  if (state.t() > static_cast<std::size_t>(budget.horizon)) return false;
  return state.travel_cost() + distance(nodes[state.last()], nodes[action]) <= budget.travel;
}

std::vector<NodeIndex> feasible_actions(const PathState& state, const NodeSet& nodes, const Budget& budget) {
  std::vector<NodeIndex> out;
  if (state.t() > static_cast<std::size_t>(budget.horizon)) return out;
  for (NodeIndex v = 0; v < nodes.size(); ++v)
    if (is_feasible(state, v, nodes, budget)) out.push_back(v);
  return out;
}

double reward(const PathState& state, const CoverageModel& model, NodeIndex action) {
  const double norm = model.full_coverage();
  if (norm == 0.0) return 0.0;
  return model.marginal_gain(action, state.visited()) / norm;
}

bool satisfies_constraints(std::span<const NodeIndex> path, const NodeSet& nodes, const Budget& budget) {
  return path.size() <= static_cast<std::size_t>(budget.horizon) + 1 &&
         path_cost(path, nodes) <= budget.travel + 1e-9;
}

ConstraintAudit& ConstraintAudit::global() {
  static ConstraintAudit audit;
  return audit;
}

bool ConstraintAudit::check(std::span<const NodeIndex> path, const NodeSet& nodes, const Budget& budget) {
  const bool ok = satisfies_constraints(path, nodes, budget);
  ++checked_;
  if (!ok) ++violations_;
  return ok;
}

void ConstraintAudit::reset() {
  checked_ = 0;
  violations_ = 0;
}

}  // namespace ipp
