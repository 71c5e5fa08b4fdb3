#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ipp/errors.hpp"
#include "ipp/world.hpp"
#include "support.hpp"

using namespace ipp;

namespace {

DatasetSpec small_spec(WorldFamily family, std::uint64_t seed = 3) {
  DatasetSpec s;
  s.family = family;
  s.world_count = 4;
  s.nodes_per_world = 20;
  s.width = 80;
  s.height = 80;
  s.seed = seed;
  return s;
}

bool eight_free(const WorldMap& w, Vec2 p) {
  const int cx = static_cast<int>(p.x), cy = static_cast<int>(p.y);
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx)
      if (w.in_bounds(cx + dx, cy + dy) && w.occupied(cx + dx, cy + dy)) return false;
  return true;
}

}  // namespace

TEST_CASE("identity parallel lines are two straight horizontal segments") {
  DatasetSpec s = small_spec(WorldFamily::ParallelLines);
  s.identity_transform = true;
  const WorldMap w = generate_world(s, 0);
  std::vector<int> rows_with_cells;
  for (int y = 0; y < w.height(); ++y) {
    int count = 0, first = -1, last = -1;
    for (int x = 0; x < w.width(); ++x)
      if (w.occupied(x, y)) {
        ++count;
        if (first < 0) first = x;
        last = x;
      }
    if (count > 0) {
      CHECK(count == last - first + 1);  // contiguous run
      rows_with_cells.push_back(y);
    }
  }
  REQUIRE(rows_with_cells.size() >= 2);
  // Two separate bands of rows, symmetric around the centre.
  int bands = 1;
  for (std::size_t i = 1; i < rows_with_cells.size(); ++i)
    if (rows_with_cells[i] != rows_with_cells[i - 1] + 1) ++bands;
  CHECK(bands == 2);
  CHECK(rows_with_cells.front() + rows_with_cells.back() == w.height() - 1);
}

TEST_CASE("perimeter blocks with zero blocks is all free") {
  DatasetSpec s = small_spec(WorldFamily::PerimeterBlocks);
  s.block_count = 0;
  CHECK(generate_world(s, 0).occupied_count() == 0);
}

TEST_CASE("generate_world replays bit-identically") {
  for (WorldFamily f : {WorldFamily::ParallelLines, WorldFamily::PerimeterBlocks, WorldFamily::RandomDisks,
                        WorldFamily::BlockWorld}) {
    const DatasetSpec s = small_spec(f);
    CHECK(generate_world(s, 3) == generate_world(s, 3));
    CHECK(generate_world(s, 3).cells().size() == 80u * 80u);
  }
  CHECK(generate_world(small_spec(WorldFamily::ParallelLines, 1), 0) !=
        generate_world(small_spec(WorldFamily::ParallelLines, 2), 0));
}

TEST_CASE("every family produces obstacles inside the grid") {
  for (WorldFamily f : {WorldFamily::ParallelLines, WorldFamily::PerimeterBlocks}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const WorldMap w = generate_world(small_spec(f, seed), 0);
      CHECK(w.occupied_count() > 0);
    }
  }
}

TEST_CASE("unknown family names are configuration errors") {
  CHECK_THROWS_AS(parse_family("spirals"), ConfigError);
  CHECK(parse_family("perimeter_blocks") == WorldFamily::PerimeterBlocks);
  CHECK(family_name(WorldFamily::ParallelLines) == "parallel_lines");
}

TEST_CASE("invalid dataset specs are rejected") {
  DatasetSpec s = small_spec(WorldFamily::ParallelLines);
  s.world_count = 0;
  CHECK_THROWS_AS(validate(s), ConfigError);
  s = small_spec(WorldFamily::ParallelLines);
  s.nodes_per_world = 1;
  CHECK_THROWS_AS(validate(s), ConfigError);
  CHECK_THROWS(generate_world(small_spec(WorldFamily::ParallelLines), 4));
}

TEST_CASE("sample_nodes") {
  const WorldMap w = generate_world(small_spec(WorldFamily::PerimeterBlocks), 1);

  SUBCASE("count 1 yields only the start node") {
    const NodeSet n = sample_nodes(w, 1, 9);
    CHECK(n.size() == 1);
    CHECK(n.start_index == 0);
  }
  SUBCASE("nodes are distinct cell centres clear of obstacles") {
    const NodeSet n = sample_nodes(w, 200, 9);
    REQUIRE(n.size() == 200);
    std::set<std::pair<int, int>> seen;
    for (const Vec2& p : n.nodes) {
      CHECK(p.x - std::floor(p.x) == 0.5);
      CHECK(eight_free(w, p));
      seen.insert({static_cast<int>(p.x), static_cast<int>(p.y)});
    }
    CHECK(seen.size() == 200);
  }
  SUBCASE("replay") { CHECK(sample_nodes(w, 50, 4) == sample_nodes(w, 50, 4)); }
  SUBCASE("full-scale world supports 300 candidate actions") {
    DatasetSpec s = small_spec(WorldFamily::ParallelLines);
    s.width = s.height = 200;
    CHECK(sample_nodes(generate_world(s, 0), 300, 1).size() == 300);
  }
  SUBCASE("insufficient free space") {
    const WorldMap tiny = test::grid_from_rows({"###", "#.#", "###"});
    CHECK_THROWS_AS(sample_nodes(tiny, 1, 0), GenerationError);
    CHECK_THROWS_AS(sample_nodes(test::empty_grid(3, 3), 10, 0), GenerationError);
  }
}

TEST_CASE("sampled nodes are roughly uniform over eligible cells") {
  // Chi-square over the four quadrants of an empty 20x20 grid.
  const WorldMap w = test::empty_grid(20, 20);
  std::array<int, 4> counts{};
  for (std::uint64_t seed = 0; seed < 400; ++seed)
    for (const Vec2& p : sample_nodes(w, 10, seed).nodes) ++counts[(p.x >= 10 ? 1 : 0) + (p.y >= 10 ? 2 : 0)];
  const double expected = 4000.0 / 4;
  double chi2 = 0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 16.27);  // p = 0.001, 3 dof
}

TEST_CASE("dataset layout and round-trip") {
  DatasetSpec s = small_spec(WorldFamily::PerimeterBlocks);
  s.world_count = 10;
  s.nodesets_per_world = 10;
  s.width = s.height = 40;
  s.nodes_per_world = 5;
  const std::vector<Instance> data = generate_dataset(s);
  CHECK(data.size() == 100);
  CHECK(data[0].world == data[9].world);
  CHECK(data[0].nodes != data[1].nodes);
  CHECK(data[9].world != data[10].world);

  const auto path = std::filesystem::temp_directory_path() / "ipp_world_test.ipd";
  save_dataset(path, data);
  CHECK(load_dataset(path) == data);
  CHECK(parse_dataset(serialize_dataset(data)) == data);

  SUBCASE("truncated file is a parse error") {
    const std::string text = serialize_dataset(data);
    for (std::size_t cut : {text.size() / 3, text.size() / 2, text.size() - 5}) {
      std::ofstream(path, std::ios::trunc) << text.substr(0, cut);
      CHECK_THROWS_AS(load_dataset(path), ParseError);
    }
  }
  SUBCASE("errors carry a line number") {
    std::string text = serialize_dataset(std::span(data).first(1));
    text.replace(text.find("nodes"), 5, "nodez");
    try {
      parse_dataset(text);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).starts_with("line "));
      CHECK(e.line() > 2);
    }
  }
  std::filesystem::remove(path);
}
