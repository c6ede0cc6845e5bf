#include "waypointrl/geometry.hpp"

#include <json.hpp>

namespace waypointrl::geom {

namespace {

void check_block(const GridSpec& grid, const WaypointBlock& b, std::size_t index) {
  if (!grid.contains(b.x, b.y, b.z)) {
    throw ParseError("block " + std::to_string(index) + ": (" + std::to_string(b.x) + "," +
                         std::to_string(b.y) + "," + std::to_string(b.z) +
                         ") outside grid bounds " + std::to_string(grid.cols) + "x" +
                         std::to_string(grid.rows) + "x" + std::to_string(grid.height_levels),
                     index, ParseError::PositionKind::block_index);
  }
}

}  // namespace

BlockSequence::BlockSequence(std::vector<WaypointBlock> blocks, const GridSpec& grid)
    : blocks_(std::move(blocks)) {
  grid.validate();
  if (blocks_.size() < 2)
    throw std::invalid_argument("BlockSequence: need at least 2 blocks, got " +
                                std::to_string(blocks_.size()));
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (!grid.contains(blocks_[i].x, blocks_[i].y, blocks_[i].z))
      throw std::invalid_argument("BlockSequence: block " + std::to_string(i) +
                                  " outside grid bounds");
    if (i > 0 && blocks_[i] == blocks_[i - 1])
      throw std::invalid_argument("BlockSequence: blocks " + std::to_string(i - 1) + " and " +
                                  std::to_string(i) + " are immediate duplicates");
  }
}

Eigen::Vector2d cell_centroid(const GridSpec& grid, int x, int y) {
  grid.validate();
  if (x < 0 || x >= grid.cols || y < 0 || y >= grid.rows)
    throw std::domain_error("cell_centroid: cell (" + std::to_string(x) + "," +
                            std::to_string(y) + ") out of bounds");
  return {(x + 0.5) * grid.cell_width(), (y + 0.5) * grid.cell_height()};
}

double height_to_pixel(const GridSpec& grid, int z) {
  grid.validate();
  if (z < 0 || z >= grid.height_levels)
    throw std::domain_error("height_to_pixel: level " + std::to_string(z) + " out of bounds");
  return (z + 0.5) * static_cast<double>(grid.image_height) / grid.height_levels;
}

PixelPoint3 block_to_pixel3(const GridSpec& grid, const WaypointBlock& b) {
  const Eigen::Vector2d uv = cell_centroid(grid, b.x, b.y);
  return {uv.x(), uv.y(), height_to_pixel(grid, b.z)};
}

std::string serialize_sequence(const BlockSequence& seq) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& b : seq.blocks()) arr.push_back({b.x, b.y, b.z});
  return arr.dump() + "\n";
}

BlockSequence parse_sequence(const std::string& text, const GridSpec& grid) {
  grid.validate();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("parse_sequence: ") + e.what(), e.byte,
                     ParseError::PositionKind::byte_offset);
  }

  if (doc.is_object()) {
    if (!doc.contains("block_sequence"))
      throw ParseError("parse_sequence: object form missing key \"block_sequence\"", 0,
                       ParseError::PositionKind::byte_offset);
    doc = doc["block_sequence"];
  }
  if (!doc.is_array())
    throw ParseError("parse_sequence: top-level value is not an array", 0,
                     ParseError::PositionKind::byte_offset);

  std::vector<WaypointBlock> blocks;
  blocks.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& el = doc[i];
    if (!el.is_array() || el.size() != 3)
      throw ParseError("block " + std::to_string(i) + ": expected an array of 3 integers", i,
                       ParseError::PositionKind::block_index);
    for (const auto& c : el) {
      if (!c.is_number_integer())
        throw ParseError("block " + std::to_string(i) + ": coordinates must be integers", i,
                         ParseError::PositionKind::block_index);
    }
    WaypointBlock b{el[0].get<int>(), el[1].get<int>(), el[2].get<int>()};
    check_block(grid, b, i);
    blocks.push_back(b);
  }

  if (blocks.size() < 2)
    throw ParseError("parse_sequence: need at least 2 blocks, got " +
                         std::to_string(blocks.size()),
                     blocks.empty() ? 0 : blocks.size() - 1,
                     ParseError::PositionKind::block_index);
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    if (blocks[i] == blocks[i - 1])
      throw ParseError("block " + std::to_string(i) + ": immediate duplicate of previous block",
                       i, ParseError::PositionKind::block_index);
  }
  return BlockSequence(std::move(blocks), grid);
}

}  // namespace waypointrl::geom
