#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ipp {

enum class Cell : std::uint8_t { Free = 0, Occupied = 1 };

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

double distance(Vec2 a, Vec2 b);

/// Cell index type: y * width + x.
using CellIndex = std::uint32_t;
using NodeIndex = std::size_t;

/// Ground-truth occupancy grid. Immutable after construction; positions are in
/// cell units (cell (x, y) spans [x, x+1) x [y, y+1)).
class WorldMap {
 public:
  WorldMap(int width, int height, std::vector<Cell> cells, double resolution = 1.0,
           std::string id = {});

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  const std::string& id() const { return id_; }
  std::span<const Cell> cells() const { return cells_; }

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  CellIndex index(int x, int y) const { return static_cast<CellIndex>(y * width_ + x); }
  Cell at(int x, int y) const { return cells_[index(x, y)]; }
  bool occupied(int x, int y) const { return at(x, y) == Cell::Occupied; }
  bool occupied(CellIndex i) const { return cells_[i] == Cell::Occupied; }
  std::size_t occupied_count() const;

  friend bool operator==(const WorldMap&, const WorldMap&) = default;

 private:
  int width_;
  int height_;
  double resolution_;
  std::string id_;
  std::vector<Cell> cells_;
};

/// Candidate sensing locations; nodes[start_index] is the start node.
struct NodeSet {
  std::vector<Vec2> nodes;
  NodeIndex start_index = 0;

  std::size_t size() const { return nodes.size(); }
  const Vec2& operator[](NodeIndex i) const { return nodes[i]; }
  friend bool operator==(const NodeSet&, const NodeSet&) = default;
};

enum class WorldFamily { ParallelLines, PerimeterBlocks, RandomDisks, BlockWorld };

WorldFamily parse_family(std::string_view name);
std::string_view family_name(WorldFamily family);

struct DatasetSpec {
  WorldFamily family = WorldFamily::ParallelLines;
  std::size_t world_count = 1;
  std::size_t nodes_per_world = 300;
  std::size_t nodesets_per_world = 1;
  int width = 200;
  int height = 200;
  std::uint64_t seed = 0;
  /// Obstacle count for the block/disk families; negative draws it at random.
  int block_count = -1;
  /// PARALLEL_LINES only: skip the random affine transform.
  bool identity_transform = false;
};

void validate(const DatasetSpec& spec);

WorldMap generate_world(const DatasetSpec& spec, std::size_t index);

/// `count` distinct nodes drawn uniformly from FREE cells whose 8-neighbourhood
/// is free as well. Node 0 is the start node.
NodeSet sample_nodes(const WorldMap& world, std::size_t count, std::uint64_t seed);

struct Instance {
  WorldMap world;
  NodeSet nodes;
  friend bool operator==(const Instance&, const Instance&) = default;
};

/// world_count * nodesets_per_world instances, world-major order.
std::vector<Instance> generate_dataset(const DatasetSpec& spec);

std::string serialize_dataset(std::span<const Instance> instances);
std::vector<Instance> parse_dataset(std::string_view text);
void save_dataset(const std::filesystem::path& path, std::span<const Instance> instances);
std::vector<Instance> load_dataset(const std::filesystem::path& path);

}  // namespace ipp
