#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ipp/world.hpp"

namespace ipp {

struct SensorConfig {
  int ray_count = 64;
  double max_range = 30.0;  // cells
};

void validate(const SensorConfig& cfg);

/// Result of one scan. hits / free_traversed are sorted and deduplicated cell
/// indices; the cell containing the sensor itself is never reported.
struct Measurement {
  Vec2 node;
  std::vector<CellIndex> hits;
  std::vector<CellIndex> free_traversed;
  int ray_count = 0;
  double max_range = 0.0;
  friend bool operator==(const Measurement&, const Measurement&) = default;
};

/// Grid traversal of one ray (Amanatides-Woo). Calls visit(x, y, entry_distance)
/// for every cell after the origin cell whose entry distance is <= max_range,
/// until visit returns false or the ray leaves the grid. On exact corner
/// crossings the step goes to the neighbour with the lower cell index.
template <typename Visit>
void march_ray(int width, int height, Vec2 origin, double angle, double max_range, Visit&& visit);

Measurement raycast(const WorldMap& world, Vec2 node, const SensorConfig& cfg);

enum class Evidence : std::uint8_t { Unknown = 0, KnownFree = 1, KnownOccupied = 2 };

class EvidenceGrid {
 public:
  EvidenceGrid(int width, int height)
      : width_(width), height_(height),
        cells_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), Evidence::Unknown) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  CellIndex index(int x, int y) const { return static_cast<CellIndex>(y * width_ + x); }
  Evidence at(int x, int y) const { return cells_[index(x, y)]; }
  Evidence at(CellIndex i) const { return cells_[i]; }
  void set(CellIndex i, Evidence e) { cells_[i] = e; }
  std::span<const Evidence> cells() const { return cells_; }
  std::size_t known_count() const;

  /// Rows top to bottom (y descending), one character per cell: U, F or O.
  std::string dump() const;

  friend bool operator==(const EvidenceGrid&, const EvidenceGrid&) = default;

 private:
  int width_;
  int height_;
  std::vector<Evidence> cells_;
};

struct Observation {
  NodeIndex state_node;
  NodeIndex action_node;
  Measurement measurement;
  friend bool operator==(const Observation&, const Observation&) = default;
};

/// The robot's view of the world: the observation history plus the evidence
/// grid and covered-cell set folded from it.
class Belief {
 public:
  Belief(int width, int height) : evidence_(width, height) {}

  const std::vector<Observation>& history() const { return history_; }
  const EvidenceGrid& evidence() const { return evidence_; }
  /// Sorted union of all hits.
  const std::vector<CellIndex>& covered() const { return covered_; }

  void update(NodeIndex state, NodeIndex action, Measurement meas);
  Belief updated(NodeIndex state, NodeIndex action, Measurement meas) const;

  friend bool operator==(const Belief&, const Belief&) = default;

 private:
  std::vector<Observation> history_;
  EvidenceGrid evidence_;
  std::vector<CellIndex> covered_;
};

Belief update_belief(const Belief& belief, NodeIndex state, NodeIndex action, Measurement meas);

// ---------------------------------------------------------------------------

template <typename Visit>
void march_ray(int width, int height, Vec2 origin, double angle, double max_range, Visit&& visit) {
  const double dx = std::cos(angle), dy = std::sin(angle);
  int x = static_cast<int>(std::floor(origin.x));
  int y = static_cast<int>(std::floor(origin.y));
  const int step_x = dx > 0 ? 1 : -1;
  const int step_y = dy > 0 ? 1 : -1;
  constexpr double inf = std::numeric_limits<double>::infinity();
  // Distances (along the ray) to the next vertical / horizontal grid line.
  const double tiny = 1e-12;
  double t_max_x = std::abs(dx) < tiny ? inf : ((dx > 0 ? (x + 1) - origin.x : origin.x - x) / std::abs(dx));
  double t_max_y = std::abs(dy) < tiny ? inf : ((dy > 0 ? (y + 1) - origin.y : origin.y - y) / std::abs(dy));
  const double t_delta_x = std::abs(dx) < tiny ? inf : 1.0 / std::abs(dx);
  const double t_delta_y = std::abs(dy) < tiny ? inf : 1.0 / std::abs(dy);
  while (true) {
    double t;
    if (t_max_x < t_max_y) {
      t = t_max_x;
      x += step_x;
      t_max_x += t_delta_x;
    } else if (t_max_y < t_max_x) {
      t = t_max_y;
      y += step_y;
      t_max_y += t_delta_y;
    } else {
      if (t_max_x == inf) return;
      // Corner: the two candidate cells differ by step_x vs step_y * width.
      t = t_max_x;
      const long via_x = static_cast<long>(y) * width + (x + step_x);
      const long via_y = static_cast<long>(y + step_y) * width + x;
      if (via_x <= via_y) {
        x += step_x;
        t_max_x += t_delta_x;
      } else {
        y += step_y;
        t_max_y += t_delta_y;
      }
    }
    if (t > max_range) return;
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    if (!visit(x, y, t)) return;
  }
}

}  // namespace ipp
