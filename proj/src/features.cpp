#include "ipp/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "ipp/errors.hpp"

namespace ipp {

PolicyKind parse_policy_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (PolicyKind k : {PolicyKind::OracleGcb, PolicyKind::Learned, PolicyKind::AverageEntropy,
                       PolicyKind::OcclusionAware, PolicyKind::RearSideVoxel, PolicyKind::RearSideEntropy,
                       PolicyKind::UnobservedVoxel, PolicyKind::ProximityCount, PolicyKind::Random})
    if (lower == policy_kind_name(k)) return k;
  throw ConfigError(fmt::format("unknown policy kind '{}'", name));
}

std::string_view policy_kind_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::OracleGcb: return "oracle_gcb";
    case PolicyKind::Learned: return "learned";
    case PolicyKind::AverageEntropy: return "average_entropy";
    case PolicyKind::OcclusionAware: return "occlusion_aware";
    case PolicyKind::RearSideVoxel: return "rear_side_voxel";
    case PolicyKind::RearSideEntropy: return "rear_side_entropy";
    case PolicyKind::UnobservedVoxel: return "unobserved_voxel";
    case PolicyKind::ProximityCount: return "proximity_count";
    case PolicyKind::Random: return "random";
  }
  return "unknown";
}

bool is_heuristic(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::AverageEntropy:
    case PolicyKind::OcclusionAware:
    case PolicyKind::RearSideVoxel:
    case PolicyKind::RearSideEntropy:
    case PolicyKind::UnobservedVoxel:
    case PolicyKind::ProximityCount: return true;
    default: return false;
  }
}

const std::array<FeatureInfo, kFeatureCount>& feature_schema() {
  // "area" is the sensing disc pi * (max_range + 1)^2, an upper bound on the
  // number of distinct cells a scan can reach.
  static const std::array<FeatureInfo, kFeatureCount> schema{{
      {"average_entropy", "none (mean of per-cell entropy, in [0,1])"},
      {"occlusion_aware_entropy", "area"},
      {"unobserved_count", "area"},
      {"rear_side_count", "area"},
      {"rear_side_entropy", "area"},
      {"proximity_count", "area"},
      {"frontier_visible_count", "area"},
      {"nearest_frontier_distance", "grid diagonal (1 when no frontier exists)"},
      {"visible_count", "area"},
      {"visible_occupied_count", "area"},
      {"unknown_fraction", "none (unobserved / visible)"},
      {"mean_ray_length", "max_range"},
      {"coverage_estimate", "none (covered / (covered + rear-side cells))"},
      {"travel_distance", "B"},
      {"heading_change", "pi"},
      {"remaining_budget", "min of travel (B) and step (T) fractions left after the move"},
  }};
  return schema;
}

BeliefSummary::BeliefSummary(const Belief& belief, const SensorConfig& sensor)
    : evidence_(&belief.evidence()), sensor_(sensor) {
  const EvidenceGrid& g = belief.evidence();
  const std::size_t n = static_cast<std::size_t>(g.width()) * g.height();
  rear_side_.assign(n, 0);
  frontier_.assign(n, 0);
  std::size_t rear_total = 0;
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      if (g.at(x, y) != Evidence::Unknown) continue;
      bool rear = false, front = false;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if ((dx == 0 && dy == 0) || !g.in_bounds(x + dx, y + dy)) continue;
          const Evidence e = g.at(x + dx, y + dy);
          if (e == Evidence::KnownOccupied) rear = true;
          if (e == Evidence::KnownFree && (dx == 0 || dy == 0)) front = true;
        }
      }
      const CellIndex i = g.index(x, y);
      rear_side_[i] = rear;
      frontier_[i] = front;
      rear_total += rear;
      if (front) frontier_centres_.push_back({x + 0.5, y + 0.5});
    }
  }
  const double covered = static_cast<double>(belief.covered().size());
  coverage_estimate_ = covered + rear_total > 0 ? covered / (covered + static_cast<double>(rear_total)) : 0.0;
}

double BeliefSummary::nearest_frontier(Vec2 p) const {
  double best = -1.0;
  for (const Vec2& c : frontier_centres_) {
    const double d = distance(p, c);
    if (best < 0 || d < best) best = d;
  }
  return best;
}

ViewMetrics BeliefSummary::view(Vec2 position) const {
  const EvidenceGrid& g = *evidence_;
  ViewMetrics m;
  std::vector<CellIndex> cells;
  cells.reserve(static_cast<std::size_t>(sensor_.ray_count) * static_cast<std::size_t>(sensor_.max_range + 2));
  double ray_length_sum = 0.0;
  double occlusion_sum = 0.0, rear_sum = 0.0;
  for (int r = 0; r < sensor_.ray_count; ++r) {
    const double angle = 2.0 * std::numbers::pi * r / sensor_.ray_count;
    double visibility = 1.0;
    double length = 0.0;
    march_ray(g.width(), g.height(), position, angle, sensor_.max_range, [&](int x, int y, double t) {
      const CellIndex i = g.index(x, y);
      cells.push_back(i);
      length = t;
      const Evidence e = g.at(i);
      if (e == Evidence::KnownOccupied) return false;
      if (e == Evidence::Unknown) {
        occlusion_sum += visibility;
        if (rear_side_[i]) rear_sum += visibility;
        visibility *= 0.5;
      }
      return true;
    });
    ray_length_sum += length;
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

  m.visible = cells.size();
  for (CellIndex i : cells) {
    const Evidence e = g.at(i);
    if (e == Evidence::KnownOccupied) {
      ++m.visible_occupied;
    } else if (e == Evidence::Unknown) {
      ++m.unobserved;
      m.rear_side += rear_side_[i];
      m.frontier += frontier_[i];
      const Vec2 c{static_cast<double>(i % g.width()) + 0.5, static_cast<double>(i / g.width()) + 0.5};
      m.proximity += std::max(0.0, 1.0 - distance(position, c) / sensor_.max_range);
    }
  }
  const double rays = static_cast<double>(sensor_.ray_count);
  m.average_entropy = m.visible > 0 ? static_cast<double>(m.unobserved) / static_cast<double>(m.visible) : 0.0;
  m.occlusion_entropy = occlusion_sum / rays;
  m.rear_side_entropy = rear_sum / rays;
  m.mean_ray_length = ray_length_sum / rays;
  return m;
}

namespace {

double heading_change(const PathState& state, NodeIndex action, const NodeSet& nodes) {
  if (state.t() < 2 || action == state.last()) return 0.0;
  const Vec2 a = nodes[state.visited()[state.t() - 2]];
  const Vec2 b = nodes[state.last()];
  const Vec2 c = nodes[action];
  if (a == b || b == c) return 0.0;
  const double d = std::atan2(c.y - b.y, c.x - b.x) - std::atan2(b.y - a.y, b.x - a.x);
  return std::abs(std::atan2(std::sin(d), std::cos(d)));
}

// Fraction left after the move of the tighter of the two budgets: travel
// (B) and steps (T; taking the action leaves T - t).
double remaining_budget(const PathState& state, double move, const Budget& budget) {
  const double travel = budget.travel > 0 ? (budget.travel - state.travel_cost() - move) / budget.travel : 0.0;
  const double steps = static_cast<double>(budget.horizon) - static_cast<double>(state.t());
  return std::clamp(std::min(travel, steps / budget.horizon), 0.0, 1.0);
}

}  // namespace

FeatureVector extract(const PathState& state, NodeIndex action, const BeliefSummary& summary,
                      const NodeSet& nodes, const Budget& budget) {
  if (action >= nodes.size()) throw ContractViolation("action is not a node of the node set");
  const double move = distance(nodes[state.last()], nodes[action]);
  if (state.travel_cost() + move > budget.travel)
    throw ContractViolation(fmt::format("action {} exceeds the travel budget", action));

  const Vec2 p = nodes[action];
  const ViewMetrics m = summary.view(p);
  const EvidenceGrid& g = summary.evidence();
  const double range = summary.sensor().max_range;
  const double area = std::numbers::pi * (range + 1.0) * (range + 1.0);
  const double diagonal = std::hypot(g.width(), g.height());
  const double frontier = summary.nearest_frontier(p);
  const double b = budget.travel;

  FeatureVector f;
  f.values = {
      m.average_entropy,
      m.occlusion_entropy / area,
      static_cast<double>(m.unobserved) / area,
      static_cast<double>(m.rear_side) / area,
      m.rear_side_entropy / area,
      m.proximity / area,
      static_cast<double>(m.frontier) / area,
      frontier < 0 ? 1.0 : frontier / diagonal,
      static_cast<double>(m.visible) / area,
      static_cast<double>(m.visible_occupied) / area,
      m.visible > 0 ? static_cast<double>(m.unobserved) / static_cast<double>(m.visible) : 0.0,
      m.mean_ray_length / range,
      summary.coverage_estimate(),
      b > 0 ? move / b : 0.0,
      heading_change(state, action, nodes) / std::numbers::pi,
      remaining_budget(state, move, budget),
  };
  return f;
}

FeatureVector extract(const PathState& state, NodeIndex action, const Belief& belief,
                      const NodeSet& nodes, const Budget& budget, const SensorConfig& sensor) {
  return extract(state, action, BeliefSummary(belief, sensor), nodes, budget);
}

double score(PolicyKind kind, const ViewMetrics& m) {
  switch (kind) {
    case PolicyKind::AverageEntropy: return m.average_entropy;
    case PolicyKind::OcclusionAware: return m.occlusion_entropy;
    case PolicyKind::RearSideVoxel: return static_cast<double>(m.rear_side);
    case PolicyKind::RearSideEntropy: return m.rear_side_entropy;
    case PolicyKind::UnobservedVoxel: return static_cast<double>(m.unobserved);
    case PolicyKind::ProximityCount: return m.proximity;
    default:
      throw ContractViolation(fmt::format("'{}' is not a heuristic policy kind", policy_kind_name(kind)));
  }
}

double score(PolicyKind kind, NodeIndex action, const BeliefSummary& summary, const NodeSet& nodes) {
  if (!is_heuristic(kind))
    throw ContractViolation(fmt::format("'{}' is not a heuristic policy kind", policy_kind_name(kind)));
  return score(kind, summary.view(nodes[action]));
}

}  // namespace ipp
