#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "waypointrl/geometry.hpp"
#include "waypointrl/raster.hpp"
#include "waypointrl/sim.hpp"

namespace waypointrl::prompt {

// Candidate keypoint offered to the waypoint provider: P1..P5 are grasp
// candidates, Q1..Q5 target candidates.
struct KeypointCandidate {
  std::string label;
  Eigen::Vector2d pixel;
  std::string source_object;
};

struct SideLine {
  std::string label;
  int row = 0;
};

struct AnnotatedObservation {
  geom::GridSpec grid;
  std::vector<KeypointCandidate> top_down_candidates;
  std::vector<SideLine> side_lines;
  Image rendered_top;
  Image rendered_side;
};

// Which scene entities provide grasp and target candidate masks. Names are
// resolved against world objects first, then static markers.
struct AnnotationSources {
  std::string grasp_source;
  std::string target_source;
};

inline constexpr int kCandidatesPerRole = 5;
inline constexpr int kMaskDiskRadius = 8;

// All pixels of a filled disk clipped to the image rectangle; the synthetic
// stand-in for a segmentation mask.
std::vector<Eigen::Vector2i> disk_mask(const Eigen::Vector2d& center, int radius, int width,
                                       int height);

// n pixels drawn uniformly without replacement (with replacement only when
// the mask is smaller than n). Deterministic per seed.
std::vector<Eigen::Vector2i> sample_keypoints(const std::vector<Eigen::Vector2i>& mask, int n,
                                              std::uint64_t seed);

// Builds both annotated views: the top-down raster with grid overlay and
// sampled candidates, and the side view with labeled height lines.
AnnotatedObservation build_annotation(const sim::WorldState& state,
                                      const std::map<std::string, Eigen::Vector3d>& markers,
                                      const sim::Projection& proj, const geom::GridSpec& grid,
                                      const AnnotationSources& sources, std::uint64_t seed);

}  // namespace waypointrl::prompt
