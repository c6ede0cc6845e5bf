#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace waypointrl::geom {

// Thrown by parse_sequence on malformed or out-of-bounds input. `position`
// is the byte offset for syntax errors and the block index for semantic
// errors (see `position_kind`).
class ParseError : public std::runtime_error {
 public:
  enum class PositionKind { byte_offset, block_index };

  ParseError(const std::string& what, std::size_t position, PositionKind kind)
      : std::runtime_error(what), position_(position), kind_(kind) {}

  std::size_t position() const { return position_; }
  PositionKind position_kind() const { return kind_; }

 private:
  std::size_t position_;
  PositionKind kind_;
};

// Discretization of the two camera views: a cols x rows grid over the
// top-down image and evenly spaced height levels over the side view.
// Level 0 is the table surface.
struct GridSpec {
  int image_width = 100;
  int image_height = 100;
  int cols = 6;
  int rows = 6;
  int height_levels = 6;

  void validate() const {
    if (image_width <= 0 || image_height <= 0)
      throw std::invalid_argument("GridSpec: image dimensions must be positive");
    if (cols < 2 || rows < 2 || height_levels < 2)
      throw std::invalid_argument("GridSpec: cols, rows and height_levels must be >= 2");
  }

  bool contains(int x, int y, int z) const {
    return x >= 0 && x < cols && y >= 0 && y < rows && z >= 0 && z < height_levels;
  }

  double cell_width() const { return static_cast<double>(image_width) / cols; }
  double cell_height() const { return static_cast<double>(image_height) / rows; }

  bool operator==(const GridSpec&) const = default;
};

// One coarse trajectory waypoint: a top-down grid cell plus a side-view
// height level.
struct WaypointBlock {
  int x = 0;  // column index in [0, cols)
  int y = 0;  // row index in [0, rows)
  int z = 0;  // height level in [0, height_levels)

  bool operator==(const WaypointBlock&) const = default;
};

// Point in combined pixel space: (u, v) from the top-down view, w from the
// side view.
struct PixelPoint3 {
  double u = 0.0;
  double v = 0.0;
  double w = 0.0;

  Eigen::Vector3d vec() const { return {u, v, w}; }
  static PixelPoint3 from_vec(const Eigen::Vector3d& p) { return {p.x(), p.y(), p.z()}; }

  bool operator==(const PixelPoint3&) const = default;
};

inline double pixel_distance(const PixelPoint3& a, const PixelPoint3& b) {
  return (a.vec() - b.vec()).norm();
}

// Ordered coarse trajectory. Invariants are enforced at construction:
// length >= 2, all blocks inside the grid, no immediate duplicates.
class BlockSequence {
 public:
  BlockSequence(std::vector<WaypointBlock> blocks, const GridSpec& grid);

  const std::vector<WaypointBlock>& blocks() const { return blocks_; }
  const WaypointBlock& operator[](std::size_t i) const { return blocks_[i]; }
  std::size_t size() const { return blocks_.size(); }
  const WaypointBlock& front() const { return blocks_.front(); }
  const WaypointBlock& back() const { return blocks_.back(); }

  bool operator==(const BlockSequence&) const = default;

 private:
  std::vector<WaypointBlock> blocks_;
};

// Centroid of grid cell (x, y) in top-down pixel coordinates.
Eigen::Vector2d cell_centroid(const GridSpec& grid, int x, int y);

// Side-view pixel row of height level z; levels are evenly spaced with
// level 0 nearest the table.
double height_to_pixel(const GridSpec& grid, int z);

// Full 3D pixel coordinate of a block: cell centroid plus level height.
PixelPoint3 block_to_pixel3(const GridSpec& grid, const WaypointBlock& b);

// Waypoint file format: a JSON array of [x, y, z] integer triples,
// optionally wrapped in an object under the key "block_sequence".
std::string serialize_sequence(const BlockSequence& seq);
BlockSequence parse_sequence(const std::string& text, const GridSpec& grid);

}  // namespace waypointrl::geom
