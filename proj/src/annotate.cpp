#include "waypointrl/annotate.hpp"

#include <cmath>
#include <stdexcept>

#include "waypointrl/rng.hpp"

namespace waypointrl::prompt {

namespace {

constexpr Rgb kGridColor{190, 190, 190};
constexpr Rgb kLineColor{120, 120, 120};
constexpr Rgb kObjectColor{215, 215, 215};
constexpr Rgb kGraspColor{0, 150, 150};   // teal
constexpr Rgb kTargetColor{40, 40, 230};  // blue
constexpr Rgb kRobotColor{240, 140, 0};

Eigen::Vector3d resolve_source(const sim::WorldState& state,
                               const std::map<std::string, Eigen::Vector3d>& markers,
                               const std::string& name) {
  if (const sim::ObjectState* obj = state.find_object(name)) return obj->pos;
  if (auto it = markers.find(name); it != markers.end()) return it->second;
  throw std::invalid_argument("build_annotation: unknown source \"" + name + "\"");
}

}  // namespace

std::vector<Eigen::Vector2i> disk_mask(const Eigen::Vector2d& center, int radius, int width,
                                       int height) {
  std::vector<Eigen::Vector2i> mask;
  const int cx = static_cast<int>(std::lround(center.x()));
  const int cy = static_cast<int>(std::lround(center.y()));
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      if (dx * dx + dy * dy > radius * radius) continue;
      const int x = cx + dx;
      const int y = cy + dy;
      if (x < 0 || x >= width || y < 0 || y >= height) continue;
      mask.push_back({x, y});
    }
  }
  return mask;
}

std::vector<Eigen::Vector2i> sample_keypoints(const std::vector<Eigen::Vector2i>& mask, int n,
                                              std::uint64_t seed) {
  if (mask.empty()) throw std::invalid_argument("sample_keypoints: empty mask");
  if (n < 1) throw std::invalid_argument("sample_keypoints: n must be >= 1");

  Rng rng(seed);
  std::vector<Eigen::Vector2i> out;
  out.reserve(static_cast<std::size_t>(n));
  if (static_cast<int>(mask.size()) < n) {
    for (int i = 0; i < n; ++i)
      out.push_back(mask[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(mask.size()) - 1))]);
    return out;
  }
  // Partial Fisher-Yates over an index array: without replacement.
  std::vector<int> index(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) index[i] = static_cast<int>(i);
  for (int i = 0; i < n; ++i) {
    const int k = rng.uniform_int(i, static_cast<int>(mask.size()) - 1);
    std::swap(index[static_cast<std::size_t>(i)], index[static_cast<std::size_t>(k)]);
    out.push_back(mask[static_cast<std::size_t>(index[static_cast<std::size_t>(i)])]);
  }
  return out;
}

AnnotatedObservation build_annotation(const sim::WorldState& state,
                                      const std::map<std::string, Eigen::Vector3d>& markers,
                                      const sim::Projection& proj, const geom::GridSpec& grid,
                                      const AnnotationSources& sources, std::uint64_t seed) {
  grid.validate();
  if (sources.grasp_source.empty() || sources.target_source.empty())
    throw std::invalid_argument("build_annotation: grasp and target sources must be designated");

  const Eigen::Vector3d grasp_world = resolve_source(state, markers, sources.grasp_source);
  const Eigen::Vector3d target_world = resolve_source(state, markers, sources.target_source);

  AnnotatedObservation obs{grid,
                           {},
                           {},
                           Image(grid.image_width, grid.image_height),
                           Image(grid.image_width, grid.image_height)};

  // --- top-down view ---
  for (int k = 1; k < grid.cols; ++k)
    obs.rendered_top.vline(static_cast<int>(std::lround(k * grid.cell_width())), kGridColor);
  for (int k = 1; k < grid.rows; ++k)
    obs.rendered_top.hline(static_cast<int>(std::lround(k * grid.cell_height())), kGridColor);

  const geom::PixelPoint3 grasp_px = proj.project_point(grasp_world);
  const geom::PixelPoint3 target_px = proj.project_point(target_world);
  const geom::PixelPoint3 robot_px = proj.project_point(state.effector);

  for (const auto& obj : state.objects) {
    const geom::PixelPoint3 px = proj.project_point(obj.pos);
    obs.rendered_top.fill_disk(static_cast<int>(std::lround(px.u)),
                               static_cast<int>(std::lround(px.v)), kMaskDiskRadius, kObjectColor);
  }
  obs.rendered_top.fill_disk(static_cast<int>(std::lround(robot_px.u)),
                             static_cast<int>(std::lround(robot_px.v)), 2, kRobotColor);

  auto add_candidates = [&](const geom::PixelPoint3& center, const std::string& source,
                            const char prefix, Rgb color, std::uint64_t stream) {
    const auto mask = disk_mask({center.u, center.v}, kMaskDiskRadius, grid.image_width,
                                grid.image_height);
    const auto points = sample_keypoints(mask, kCandidatesPerRole, split_seed(seed, stream));
    for (int i = 0; i < kCandidatesPerRole; ++i) {
      const std::string label = std::string(1, prefix) + std::to_string(i + 1);
      obs.top_down_candidates.push_back(
          {label, points[static_cast<std::size_t>(i)].cast<double>(), source});
      obs.rendered_top.fill_disk(points[static_cast<std::size_t>(i)].x(),
                                 points[static_cast<std::size_t>(i)].y(), 1, color);
      obs.rendered_top.draw_label(points[static_cast<std::size_t>(i)].x() + 3,
                                  points[static_cast<std::size_t>(i)].y() - 5, label, color);
    }
  };
  add_candidates(grasp_px, sources.grasp_source, 'P', kGraspColor, 0);
  add_candidates(target_px, sources.target_source, 'Q', kTargetColor, 1);

  // --- side view: labeled height lines plus scene silhouettes ---
  for (int z = 0; z < grid.height_levels; ++z) {
    const int row = static_cast<int>(std::lround(geom::height_to_pixel(grid, z)));
    obs.rendered_side.hline(row, kLineColor);
    obs.rendered_side.draw_label(2, row - 6, std::to_string(z), kLineColor);
    obs.side_lines.push_back({std::to_string(z), row});
  }
  for (const auto& obj : state.objects) {
    const geom::PixelPoint3 px = proj.project_point(obj.pos);
    obs.rendered_side.fill_disk(static_cast<int>(std::lround(px.u)),
                                static_cast<int>(std::lround(px.w)), kMaskDiskRadius / 2,
                                kObjectColor);
  }
  obs.rendered_side.fill_disk(static_cast<int>(std::lround(robot_px.u)),
                              static_cast<int>(std::lround(robot_px.w)), 2, kRobotColor);

  return obs;
}

}  // namespace waypointrl::prompt
