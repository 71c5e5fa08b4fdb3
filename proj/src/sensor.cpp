#include "ipp/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numbers>

#include <fmt/format.h>

#include "ipp/errors.hpp"

namespace ipp {

void validate(const SensorConfig& cfg) {
  if (cfg.ray_count < 1) throw ConfigError("sensor ray_count must be >= 1");
  if (!(cfg.max_range > 0.0) || !std::isfinite(cfg.max_range))
    throw ConfigError("sensor max_range must be positive and finite");
}

namespace {

void sort_unique(std::vector<CellIndex>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

Measurement raycast(const WorldMap& world, Vec2 node, const SensorConfig& cfg) {
  const int cx = static_cast<int>(std::floor(node.x));
  const int cy = static_cast<int>(std::floor(node.y));
  if (!world.in_bounds(cx, cy)) throw SensingError("sensor position outside the world");
  if (world.occupied(cx, cy))
    throw SensingError(fmt::format("sensor position ({}, {}) is inside an occupied cell", node.x, node.y));

  Measurement m;
  m.node = node;
  m.ray_count = cfg.ray_count;
  m.max_range = cfg.max_range;
  for (int r = 0; r < cfg.ray_count; ++r) {
    const double angle = 2.0 * std::numbers::pi * r / cfg.ray_count;
    march_ray(world.width(), world.height(), node, angle, cfg.max_range, [&](int x, int y, double) {
      const CellIndex i = world.index(x, y);
      if (world.occupied(i)) {
        m.hits.push_back(i);
        return false;
      }
      m.free_traversed.push_back(i);
      return true;
    });
  }
  sort_unique(m.hits);
  sort_unique(m.free_traversed);
  return m;
}

std::size_t EvidenceGrid::known_count() const {
  return static_cast<std::size_t>(
      std::count_if(cells_.begin(), cells_.end(), [](Evidence e) { return e != Evidence::Unknown; }));
}

std::string EvidenceGrid::dump() const {
  std::string out;
  out.reserve(static_cast<std::size_t>(width_ + 1) * height_);
  for (int y = height_ - 1; y >= 0; --y) {
    for (int x = 0; x < width_; ++x) {
      switch (at(x, y)) {
        case Evidence::Unknown: out += 'U'; break;
        case Evidence::KnownFree: out += 'F'; break;
        case Evidence::KnownOccupied: out += 'O'; break;
      }
    }
    out += '\n';
  }
  return out;
}

void Belief::update(NodeIndex state, NodeIndex action, Measurement meas) {
  // With a noise-free sensor a cell is never reported both free and occupied,
  // so the fold is order independent.
  for (CellIndex i : meas.free_traversed)
    if (evidence_.at(i) == Evidence::Unknown) evidence_.set(i, Evidence::KnownFree);
  for (CellIndex i : meas.hits) evidence_.set(i, Evidence::KnownOccupied);

  std::vector<CellIndex> merged;
  merged.reserve(covered_.size() + meas.hits.size());
  std::set_union(covered_.begin(), covered_.end(), meas.hits.begin(), meas.hits.end(),
                 std::back_inserter(merged));
  covered_ = std::move(merged);
  history_.push_back({state, action, std::move(meas)});
}

Belief Belief::updated(NodeIndex state, NodeIndex action, Measurement meas) const {
  Belief next = *this;
  next.update(state, action, std::move(meas));
  return next;
}

Belief update_belief(const Belief& belief, NodeIndex state, NodeIndex action, Measurement meas) {
  return belief.updated(state, action, std::move(meas));
}

}  // namespace ipp
