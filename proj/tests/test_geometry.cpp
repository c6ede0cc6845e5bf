#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "waypointrl/geometry.hpp"
#include "waypointrl/rng.hpp"

using namespace waypointrl;
using namespace waypointrl::geom;

namespace {

// Independent arithmetic oracle for centroid coordinates.
double centroid_1d(int index, int cells, int image_extent) {
  return (index + 0.5) * static_cast<double>(image_extent) / cells;
}

BlockSequence random_sequence(Rng& rng, const GridSpec& grid) {
  const int n = rng.uniform_int(2, 12);
  std::vector<WaypointBlock> blocks;
  while (static_cast<int>(blocks.size()) < n) {
    WaypointBlock b{rng.uniform_int(0, grid.cols - 1), rng.uniform_int(0, grid.rows - 1),
                    rng.uniform_int(0, grid.height_levels - 1)};
    if (!blocks.empty() && b == blocks.back()) continue;
    blocks.push_back(b);
  }
  return BlockSequence(blocks, grid);
}

}  // namespace

TEST_CASE("cell_centroid matches arithmetic oracle") {
  GridSpec g{640, 480, 6, 6, 6};

  auto c00 = cell_centroid(g, 0, 0);
  CHECK(c00.x() == doctest::Approx(centroid_1d(0, 6, 640)).epsilon(1e-12));
  CHECK(c00.x() == doctest::Approx(53.3333).epsilon(1e-4));
  CHECK(c00.y() == doctest::Approx(40.0).epsilon(1e-12));

  auto c55 = cell_centroid(g, 5, 5);
  CHECK(c55.x() == doctest::Approx(586.6667).epsilon(1e-4));
  CHECK(c55.y() == doctest::Approx(440.0).epsilon(1e-12));

  GridSpec sim{100, 100, 6, 6, 6};
  auto c23 = cell_centroid(sim, 2, 3);
  CHECK(c23.x() == doctest::Approx(41.6667).epsilon(1e-4));
  CHECK(c23.y() == doctest::Approx(58.3333).epsilon(1e-4));

  CHECK_THROWS_AS(cell_centroid(g, 6, 0), std::domain_error);
  CHECK_THROWS_AS(cell_centroid(g, 0, -1), std::domain_error);
}

TEST_CASE("cell_centroid is strictly monotone and corner-symmetric") {
  GridSpec g{640, 480, 6, 6, 6};
  for (int x = 1; x < g.cols; ++x)
    CHECK(cell_centroid(g, x, 0).x() > cell_centroid(g, x - 1, 0).x());
  for (int y = 1; y < g.rows; ++y)
    CHECK(cell_centroid(g, 0, y).y() > cell_centroid(g, 0, y - 1).y());

  // Corners mirror about the image center.
  auto lo = cell_centroid(g, 0, 0);
  auto hi = cell_centroid(g, g.cols - 1, g.rows - 1);
  CHECK(lo.x() + hi.x() == doctest::Approx(g.image_width).epsilon(1e-12));
  CHECK(lo.y() + hi.y() == doctest::Approx(g.image_height).epsilon(1e-12));
}

TEST_CASE("height_to_pixel matches arithmetic oracle") {
  GridSpec g{640, 480, 6, 6, 6};
  CHECK(height_to_pixel(g, 0) == doctest::Approx(40.0).epsilon(1e-12));
  CHECK(height_to_pixel(g, 5) == doctest::Approx(440.0).epsilon(1e-12));

  GridSpec two{100, 100, 6, 6, 2};
  CHECK(height_to_pixel(two, 1) == doctest::Approx(75.0).epsilon(1e-12));

  CHECK_THROWS_AS(height_to_pixel(g, 6), std::domain_error);
  CHECK_THROWS_AS(height_to_pixel(g, -1), std::domain_error);
}

TEST_CASE("block_to_pixel3 composes both views") {
  GridSpec g{640, 480, 6, 6, 6};
  auto p = block_to_pixel3(g, {0, 0, 0});
  CHECK(p.u == doctest::Approx(53.3333).epsilon(1e-4));
  CHECK(p.v == doctest::Approx(40.0).epsilon(1e-12));
  CHECK(p.w == doctest::Approx(40.0).epsilon(1e-12));

  GridSpec sim{100, 100, 6, 6, 6};
  auto q = block_to_pixel3(sim, {5, 5, 5});
  CHECK(q.u == doctest::Approx(91.6667).epsilon(1e-4));
  CHECK(q.v == doctest::Approx(91.6667).epsilon(1e-4));
  CHECK(q.w == doctest::Approx(91.6667).epsilon(1e-4));

  GridSpec tiny{100, 100, 2, 2, 2};
  auto r = block_to_pixel3(tiny, {1, 1, 1});
  CHECK(r.u == doctest::Approx(75.0).epsilon(1e-12));
  CHECK(r.v == doctest::Approx(75.0).epsilon(1e-12));
  CHECK(r.w == doctest::Approx(75.0).epsilon(1e-12));
}

TEST_CASE("block_to_pixel3 stays strictly inside the image") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    GridSpec g{rng.uniform_int(10, 800), rng.uniform_int(10, 800), rng.uniform_int(2, 9),
               rng.uniform_int(2, 9), rng.uniform_int(2, 9)};
    WaypointBlock b{rng.uniform_int(0, g.cols - 1), rng.uniform_int(0, g.rows - 1),
                    rng.uniform_int(0, g.height_levels - 1)};
    auto p = block_to_pixel3(g, b);
    CHECK(p.u > 0.0);
    CHECK(p.u < g.image_width);
    CHECK(p.v > 0.0);
    CHECK(p.v < g.image_height);
    CHECK(p.w > 0.0);
    CHECK(p.w < g.image_height);
  }
}

TEST_CASE("sequence invariants are enforced") {
  GridSpec g{100, 100, 6, 6, 6};
  CHECK_NOTHROW(BlockSequence({{0, 0, 0}, {3, 3, 1}}, g));
  CHECK_THROWS_AS(BlockSequence({{0, 0, 0}}, g), std::invalid_argument);
  CHECK_THROWS_AS(BlockSequence({{0, 0, 0}, {0, 0, 0}}, g), std::invalid_argument);
  CHECK_THROWS_AS(BlockSequence({{0, 0, 6}, {0, 0, 1}}, g), std::invalid_argument);
}

TEST_CASE("parse_sequence accepts both file forms and validates") {
  GridSpec g{100, 100, 6, 6, 6};

  auto seq = parse_sequence("[[0,0,0],[3,3,1]]", g);
  CHECK(seq.size() == 2);
  CHECK(seq[1] == WaypointBlock{3, 3, 1});

  auto wrapped = parse_sequence(R"({"block_sequence": [[0,0,0],[3,3,1]]})", g);
  CHECK(wrapped == seq);

  CHECK_THROWS_AS(parse_sequence("[[0,0,0]]", g), ParseError);
  CHECK_THROWS_AS(parse_sequence("[[0,0,6],[0,0,1]]", g), ParseError);
  CHECK_THROWS_AS(parse_sequence("not json", g), ParseError);
  CHECK_THROWS_AS(parse_sequence("[[0,0,0],[0,0]]", g), ParseError);
  CHECK_THROWS_AS(parse_sequence("[[0,0,0.5],[1,1,1]]", g), ParseError);

  try {
    parse_sequence("[[0,0,0],[0,9,0]]", g);
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.position() == 1);
    CHECK(e.position_kind() == ParseError::PositionKind::block_index);
  }
}

TEST_CASE("parse after serialize is the identity") {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    GridSpec g{rng.uniform_int(10, 640), rng.uniform_int(10, 640), rng.uniform_int(2, 8),
               rng.uniform_int(2, 8), rng.uniform_int(2, 8)};
    BlockSequence seq = random_sequence(rng, g);
    BlockSequence back = parse_sequence(serialize_sequence(seq), g);
    CHECK(back == seq);
  }
}
