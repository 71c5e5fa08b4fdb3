#include "ipp/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "ipp/errors.hpp"
#include "ipp/rng.hpp"
#include "ipp/text.hpp"

namespace ipp {

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

WorldMap::WorldMap(int width, int height, std::vector<Cell> cells, double resolution,
                   std::string id)
    : width_(width), height_(height), resolution_(resolution), id_(std::move(id)),
      cells_(std::move(cells)) {
  if (width <= 0 || height <= 0) throw ContractViolation("world dimensions must be positive");
  if (cells_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw ContractViolation("world cell count does not match dimensions");
  for (Cell c : cells_)
    if (c != Cell::Free && c != Cell::Occupied)
      throw ContractViolation("world cell is neither FREE nor OCCUPIED");
  if (!(resolution > 0.0)) throw ContractViolation("world resolution must be positive");
}

std::size_t WorldMap::occupied_count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), Cell::Occupied));
}

WorldFamily parse_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "parallel_lines") return WorldFamily::ParallelLines;
  if (lower == "perimeter_blocks") return WorldFamily::PerimeterBlocks;
  if (lower == "random_disks") return WorldFamily::RandomDisks;
  if (lower == "block_world") return WorldFamily::BlockWorld;
  throw ConfigError(fmt::format("unknown world family '{}'", name));
}

std::string_view family_name(WorldFamily family) {
  switch (family) {
    case WorldFamily::ParallelLines: return "parallel_lines";
    case WorldFamily::PerimeterBlocks: return "perimeter_blocks";
    case WorldFamily::RandomDisks: return "random_disks";
    case WorldFamily::BlockWorld: return "block_world";
  }
  return "unknown";
}

void validate(const DatasetSpec& spec) {
  if (spec.world_count < 1) throw ConfigError("world_count must be >= 1");
  if (spec.nodes_per_world < 2) throw ConfigError("nodes_per_world must be >= 2");
  if (spec.nodesets_per_world < 1) throw ConfigError("nodesets_per_world must be >= 1");
  if (spec.width < 8 || spec.height < 8) throw ConfigError("grid must be at least 8x8 cells");
}

namespace {

class Raster {
 public:
  Raster(int w, int h) : w_(w), h_(h), cells_(static_cast<std::size_t>(w) * h, Cell::Free) {}

  void set(int x, int y) {
    if (x >= 0 && y >= 0 && x < w_ && y < h_) cells_[static_cast<std::size_t>(y) * w_ + x] = Cell::Occupied;
  }

  void rect(int x0, int y0, int x1, int y1) {
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) set(x, y);
  }

  void disk(Vec2 c, double r) {
    for (int y = static_cast<int>(std::floor(c.y - r)); y <= static_cast<int>(std::ceil(c.y + r)); ++y)
      for (int x = static_cast<int>(std::floor(c.x - r)); x <= static_cast<int>(std::ceil(c.x + r)); ++x)
        if (distance({x + 0.5, y + 0.5}, c) <= r) set(x, y);
  }

  // Cells whose centre lies within half_width of segment ab.
  void thick_segment(Vec2 a, Vec2 b, double half_width) {
    const double lo_x = std::min(a.x, b.x) - half_width, hi_x = std::max(a.x, b.x) + half_width;
    const double lo_y = std::min(a.y, b.y) - half_width, hi_y = std::max(a.y, b.y) + half_width;
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    for (int y = static_cast<int>(std::floor(lo_y)); y <= static_cast<int>(std::floor(hi_y)); ++y) {
      for (int x = static_cast<int>(std::floor(lo_x)); x <= static_cast<int>(std::floor(hi_x)); ++x) {
        const Vec2 p{x + 0.5, y + 0.5};
        double u = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
        u = std::clamp(u, 0.0, 1.0);
        if (distance(p, {a.x + u * dx, a.y + u * dy}) <= half_width) set(x, y);
      }
    }
  }

  std::vector<Cell> take() { return std::move(cells_); }

 private:
  int w_, h_;
  std::vector<Cell> cells_;
};

constexpr double kLineHalfWidth = 1.0;

// Two parallel segments, length 0.45 * side and spacing 0.15 * side before the
// transform: rotation U(0, 2pi), scale U(0.7, 1.3), centre in the central 60%.
void parallel_lines(const DatasetSpec& spec, Rng& rng, Raster& raster) {
  const double side = std::min(spec.width, spec.height);
  const double half_len = 0.225 * side;
  const double half_gap = 0.075 * side;
  const Vec2 base[4] = {{-half_len, -half_gap}, {half_len, -half_gap},
                        {-half_len, half_gap},  {half_len, half_gap}};

  double angle = 0.0, scale = 1.0;
  Vec2 centre{spec.width / 2.0, spec.height / 2.0};
  Vec2 pts[4];
  auto place = [&] {
    const double c = std::cos(angle), s = std::sin(angle);
    bool inside = true;
    for (int k = 0; k < 4; ++k) {
      pts[k] = {centre.x + scale * (c * base[k].x - s * base[k].y),
                centre.y + scale * (s * base[k].x + c * base[k].y)};
      const double m = kLineHalfWidth + 1.0;
      inside = inside && pts[k].x >= m && pts[k].y >= m && pts[k].x <= spec.width - m &&
               pts[k].y <= spec.height - m;
    }
    return inside;
  };

  if (spec.identity_transform) {
    if (!place()) throw GenerationError("identity line pair does not fit the grid");
  } else {
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
      angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      scale = rng.uniform(0.7, 1.3);
      centre = {rng.uniform(0.2, 0.8) * spec.width, rng.uniform(0.2, 0.8) * spec.height};
      ok = place();
    }
    if (!ok) throw GenerationError("could not place line pair inside the grid");
  }
  raster.thick_segment(pts[0], pts[1], kLineHalfWidth);
  raster.thick_segment(pts[2], pts[3], kLineHalfWidth);
}

int draw_count(const DatasetSpec& spec, Rng& rng, int lo, int hi) {
  return spec.block_count >= 0 ? spec.block_count : static_cast<int>(rng.between(lo, hi));
}

// Rectangles inside a band along the border (band depth 0.2 * side).
void perimeter_blocks(const DatasetSpec& spec, Rng& rng, Raster& raster) {
  const int count = draw_count(spec, rng, 12, 20);
  const int side = std::min(spec.width, spec.height);
  const int band = std::max(4, side / 5);
  const int min_size = std::max(2, side / 25);
  const int max_size = std::max(min_size, side / 10);
  for (int b = 0; b < count; ++b) {
    const int along = static_cast<int>(rng.between(min_size, max_size));
    const int depth = static_cast<int>(rng.between(min_size, std::min(max_size, band - 2)));
    const int edge = static_cast<int>(rng.below(4));
    const int offset = static_cast<int>(rng.between(1, band - 1 - depth));
    if (edge == 0 || edge == 1) {  // bottom / top
      const int x0 = static_cast<int>(rng.between(1, spec.width - 1 - along));
      const int y0 = edge == 0 ? offset : spec.height - offset - depth;
      raster.rect(x0, y0, x0 + along - 1, y0 + depth - 1);
    } else {  // left / right
      const int y0 = static_cast<int>(rng.between(1, spec.height - 1 - along));
      const int x0 = edge == 2 ? offset : spec.width - offset - depth;
      raster.rect(x0, y0, x0 + depth - 1, y0 + along - 1);
    }
  }
}

void random_disks(const DatasetSpec& spec, Rng& rng, Raster& raster) {
  const int count = draw_count(spec, rng, 5, 10);
  const double side = std::min(spec.width, spec.height);
  for (int b = 0; b < count; ++b) {
    const double r = rng.uniform(0.03, 0.08) * side;
    const Vec2 c{rng.uniform(r + 1.0, spec.width - r - 1.0), rng.uniform(r + 1.0, spec.height - r - 1.0)};
    raster.disk(c, r);
  }
}

void block_world(const DatasetSpec& spec, Rng& rng, Raster& raster) {
  const int count = draw_count(spec, rng, 5, 12);
  const int side = std::min(spec.width, spec.height);
  const int min_size = std::max(2, side / 25);
  const int max_size = std::max(min_size, side / 8);
  for (int b = 0; b < count; ++b) {
    const int w = static_cast<int>(rng.between(min_size, max_size));
    const int h = static_cast<int>(rng.between(min_size, max_size));
    const int x0 = static_cast<int>(rng.between(1, spec.width - 1 - w));
    const int y0 = static_cast<int>(rng.between(1, spec.height - 1 - h));
    raster.rect(x0, y0, x0 + w - 1, y0 + h - 1);
  }
}

}  // namespace

WorldMap generate_world(const DatasetSpec& spec, std::size_t index) {
  validate(spec);
  if (index >= spec.world_count)
    throw ContractViolation(fmt::format("world index {} out of range ({})", index, spec.world_count));
  Rng rng(derive_seed(spec.seed, index, 1));
  Raster raster(spec.width, spec.height);
  switch (spec.family) {
    case WorldFamily::ParallelLines: parallel_lines(spec, rng, raster); break;
    case WorldFamily::PerimeterBlocks: perimeter_blocks(spec, rng, raster); break;
    case WorldFamily::RandomDisks: random_disks(spec, rng, raster); break;
    case WorldFamily::BlockWorld: block_world(spec, rng, raster); break;
  }
  return WorldMap(spec.width, spec.height, raster.take(), 1.0,
                  fmt::format("{}-{}-{}", family_name(spec.family), spec.seed, index));
}

NodeSet sample_nodes(const WorldMap& world, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw ContractViolation("node count must be >= 1");
  std::vector<CellIndex> eligible;
  for (int y = 0; y < world.height(); ++y) {
    for (int x = 0; x < world.width(); ++x) {
      bool clear = true;
      for (int dy = -1; dy <= 1 && clear; ++dy)
        for (int dx = -1; dx <= 1 && clear; ++dx)
          if (world.in_bounds(x + dx, y + dy) && world.occupied(x + dx, y + dy)) clear = false;
      if (clear) eligible.push_back(world.index(x, y));
    }
  }
  if (eligible.size() < count)
    throw GenerationError(fmt::format("world '{}' has {} eligible free cells, {} nodes requested",
                                      world.id(), eligible.size(), count));
  Rng rng(seed);
  NodeSet out;
  out.nodes.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t pick = k + rng.below(eligible.size() - k);
    std::swap(eligible[k], eligible[pick]);
    const CellIndex c = eligible[k];
    const int x = static_cast<int>(c % static_cast<CellIndex>(world.width()));
    const int y = static_cast<int>(c / static_cast<CellIndex>(world.width()));
    out.nodes.push_back({x + 0.5, y + 0.5});
  }
  out.start_index = 0;
  return out;
}

std::vector<Instance> generate_dataset(const DatasetSpec& spec) {
  validate(spec);
  std::vector<Instance> out;
  out.reserve(spec.world_count * spec.nodesets_per_world);
  for (std::size_t w = 0; w < spec.world_count; ++w) {
    WorldMap world = generate_world(spec, w);
    for (std::size_t k = 0; k < spec.nodesets_per_world; ++k)
      out.push_back({world, sample_nodes(world, spec.nodes_per_world, derive_seed(spec.seed, w, 2, k))});
  }
  return out;
}

// Format, one token group per line:
//   ipp-dataset 1
//   instances <n>
//   world <width> <height> <resolution> <id>
//   row <F|O><run> ...            (height lines, x ascending)
//   nodes <count> <start_index>
//   <x> <y>                       (count lines, shortest round-trip decimals)
//   end
std::string serialize_dataset(std::span<const Instance> instances) {
  std::string out = fmt::format("ipp-dataset 1\ninstances {}\n", instances.size());
  for (const Instance& inst : instances) {
    const WorldMap& w = inst.world;
    out += fmt::format("world {} {} {} {}\n", w.width(), w.height(), text::format_double(w.resolution()), w.id());
    for (int y = 0; y < w.height(); ++y) {
      out += "row";
      int x = 0;
      while (x < w.width()) {
        const Cell c = w.at(x, y);
        int run = 0;
        while (x < w.width() && w.at(x, y) == c) ++x, ++run;
        out += fmt::format(" {}{}", c == Cell::Free ? 'F' : 'O', run);
      }
      out += '\n';
    }
    out += fmt::format("nodes {} {}\n", inst.nodes.size(), inst.nodes.start_index);
    for (const Vec2& p : inst.nodes.nodes)
      out += fmt::format("{} {}\n", text::format_double(p.x), text::format_double(p.y));
    out += "end\n";
  }
  return out;
}

namespace {

class DatasetParser {
 public:
  explicit DatasetParser(std::string_view text) : reader_(text) {}

  std::vector<Instance> run() {
    auto header = expect("ipp-dataset", 2);
    if (header[1] != "1") fail(fmt::format("unsupported dataset version '{}'", header[1]));
    auto count_line = expect("instances", 2);
    const std::uint64_t count = as_uint(count_line[1]);
    std::vector<Instance> out;
    for (std::uint64_t i = 0; i < count; ++i) out.push_back(instance());
    std::string_view rest;
    while (reader_.next(rest))
      if (!text::split_ws(rest).empty()) fail("trailing content after last instance");
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, reader_.line_number()); }

  std::vector<std::string_view> expect(std::string_view keyword, std::size_t min_tokens) {
    std::string_view line;
    if (!reader_.next(line)) throw ParseError(fmt::format("unexpected end of file, expected '{}'", keyword), reader_.line_number() + 1);
    line_ = std::string(line);
    auto tokens = text::split_ws(line_);
    if (tokens.empty() || tokens[0] != keyword) fail(fmt::format("expected '{}'", keyword));
    if (tokens.size() < min_tokens) fail(fmt::format("'{}' line is missing fields", keyword));
    return tokens;
  }

  std::uint64_t as_uint(std::string_view t) const {
    std::uint64_t v;
    if (!text::parse_uint(t, v)) fail(fmt::format("expected unsigned integer, got '{}'", t));
    return v;
  }

  double as_double(std::string_view t) const {
    double v;
    if (!text::parse_double(t, v) || !std::isfinite(v)) fail(fmt::format("expected number, got '{}'", t));
    return v;
  }

  Instance instance() {
    auto head = expect("world", 4);
    const std::uint64_t w = as_uint(head[1]), h = as_uint(head[2]);
    const double res = as_double(head[3]);
    if (w == 0 || h == 0 || w > 100000 || h > 100000) fail("bad world dimensions");
    if (!(res > 0)) fail("resolution must be positive");
    std::string id = head.size() > 4 ? std::string(head[4]) : std::string();
    std::vector<Cell> cells;
    cells.reserve(w * h);
    for (std::uint64_t y = 0; y < h; ++y) {
      auto row = expect("row", 2);
      std::uint64_t filled = 0;
      for (std::size_t k = 1; k < row.size(); ++k) {
        const std::string_view tok = row[k];
        if (tok.size() < 2 || (tok[0] != 'F' && tok[0] != 'O')) fail(fmt::format("bad run '{}'", tok));
        const std::uint64_t run = as_uint(tok.substr(1));
        if (run == 0 || filled + run > w) fail("row runs exceed world width");
        cells.insert(cells.end(), run, tok[0] == 'F' ? Cell::Free : Cell::Occupied);
        filled += run;
      }
      if (filled != w) fail("row runs do not cover world width");
    }
    auto nodes_head = expect("nodes", 3);
    const std::uint64_t n = as_uint(nodes_head[1]);
    NodeSet nodes;
    nodes.start_index = as_uint(nodes_head[2]);
    if (n == 0 || nodes.start_index >= n) fail("invalid node count or start index");
    for (std::uint64_t k = 0; k < n; ++k) {
      std::string_view line;
      if (!reader_.next(line)) throw ParseError("unexpected end of file in node list", reader_.line_number() + 1);
      auto tokens = text::split_ws(line);
      if (tokens.size() != 2) fail("node line must have two coordinates");
      nodes.nodes.push_back({as_double(tokens[0]), as_double(tokens[1])});
    }
    expect("end", 1);
    WorldMap world(static_cast<int>(w), static_cast<int>(h), std::move(cells), res, std::move(id));
    for (const Vec2& p : nodes.nodes) {
      const int x = static_cast<int>(std::floor(p.x)), y = static_cast<int>(std::floor(p.y));
      if (!world.in_bounds(x, y) || world.occupied(x, y)) fail("node lies outside the free space");
    }
    return {std::move(world), std::move(nodes)};
  }

  text::LineReader reader_;
  std::string line_;
};

}  // namespace

std::vector<Instance> parse_dataset(std::string_view text) { return DatasetParser(text).run(); }

void save_dataset(const std::filesystem::path& path, std::span<const Instance> instances) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  out << serialize_dataset(instances);
  if (!out) throw DataError(fmt::format("write to '{}' failed", path.string()));
}

std::vector<Instance> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open dataset '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

}  // namespace ipp
