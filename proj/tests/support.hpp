#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "ipp/sensor.hpp"
#include "ipp/world.hpp"

namespace ipp::test {

/// Grid from rows listed top to bottom ('#' occupied, anything else free),
/// matching the orientation of EvidenceGrid::dump().
inline WorldMap grid_from_rows(const std::vector<std::string>& rows) {
  const int h = static_cast<int>(rows.size());
  const int w = static_cast<int>(rows.front().size());
  std::vector<Cell> cells(static_cast<std::size_t>(w * h), Cell::Free);
  for (int r = 0; r < h; ++r)
    for (int x = 0; x < w; ++x)
      if (rows[r][x] == '#') cells[static_cast<std::size_t>((h - 1 - r) * w + x)] = Cell::Occupied;
  return WorldMap(w, h, std::move(cells));
}

inline WorldMap empty_grid(int w, int h) {
  return WorldMap(w, h, std::vector<Cell>(static_cast<std::size_t>(w * h), Cell::Free));
}

inline Vec2 centre(int x, int y) { return {x + 0.5, y + 0.5}; }

/// Slab-test visibility: intersect each ray with every cell square, keep
/// positive-length intersections, and walk them in order of entry distance.
inline Measurement slab_raycast(const WorldMap& w, Vec2 p, const SensorConfig& cfg) {
  std::set<CellIndex> hits, free;
  const int ox = static_cast<int>(std::floor(p.x)), oy = static_cast<int>(std::floor(p.y));
  for (int r = 0; r < cfg.ray_count; ++r) {
    const double a = 2.0 * std::numbers::pi * r / cfg.ray_count;
    const double dx = std::cos(a), dy = std::sin(a);
    std::vector<std::pair<double, CellIndex>> crossed;
    for (int y = 0; y < w.height(); ++y)
      for (int x = 0; x < w.width(); ++x) {
        double lo = 0.0, hi = 1e18;
        auto slab = [&](double o, double d, double c) {
          if (std::abs(d) < 1e-15) {
            if (o < c || o > c + 1) hi = -1;
            return;
          }
          double t0 = (c - o) / d, t1 = (c + 1 - o) / d;
          if (t0 > t1) std::swap(t0, t1);
          lo = std::max(lo, t0);
          hi = std::min(hi, t1);
        };
        slab(p.x, dx, x);
        slab(p.y, dy, y);
        if (hi - lo > 1e-9) crossed.push_back({lo, w.index(x, y)});
      }
    std::sort(crossed.begin(), crossed.end());
    for (auto [t, c] : crossed) {
      if (c == w.index(ox, oy)) continue;
      if (t > cfg.max_range) break;
      if (w.occupied(c)) {
        hits.insert(c);
        break;
      }
      free.insert(c);
    }
  }
  Measurement m;
  m.hits.assign(hits.begin(), hits.end());
  m.free_traversed.assign(free.begin(), free.end());
  return m;
}

}  // namespace ipp::test
