#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "waypointrl/geometry.hpp"
#include "waypointrl/rng.hpp"

namespace waypointrl::sim {

enum class Gripper { open, closed };
enum class GripperCmd { none, open, close };

struct ObjectState {
  std::string id;
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();
  bool held = false;
};

struct WorldState {
  Eigen::Vector3d effector = Eigen::Vector3d(0.5, 0.5, 0.35);
  Gripper gripper = Gripper::open;
  std::vector<ObjectState> objects;
  int step_count = 0;

  const ObjectState* find_object(const std::string& id) const;
  ObjectState* find_object(const std::string& id);
  const ObjectState* held_object() const;
};

struct Action {
  Eigen::Vector3d delta = Eigen::Vector3d::Zero();
  GripperCmd gripper = GripperCmd::none;
};

struct SimParams {
  double delta_max = 0.05;
  double grasp_radius = 0.05;
  // Objects rest with their center at the level-0 centroid height of a
  // 6-level grid, so grasp-at-level-0 waypoints line up with the table.
  double object_rest_z = 1.0 / 12.0;
  Eigen::Vector3d workspace_min = Eigen::Vector3d::Zero();
  Eigen::Vector3d workspace_max = Eigen::Vector3d::Ones();
};

struct ResetDistribution {
  std::vector<std::pair<std::string, Eigen::Vector3d>> nominal_objects;
  double perturb_radius = 0.0;  // uniform xy disk around nominal
  Eigen::Vector3d effector_home = Eigen::Vector3d(0.5, 0.5, 0.35);
};

enum class TaskDirection { forward, backward };

struct TaskSpec {
  std::string name;
  std::string instruction;
  TaskDirection direction = TaskDirection::forward;
  std::function<bool(const WorldState&)> success;
  ResetDistribution reset_distribution;
  int horizon = 60;
  std::string grasp_object;   // object this task manipulates
  std::string target_marker;  // named goal region for annotation
  Eigen::Vector3d goal_center = Eigen::Vector3d::Zero();
  double goal_halfwidth = 0.1;
};

// Forward/backward pair plus the static scene markers (bins, staging area)
// used for prompting.
struct TaskPair {
  TaskSpec forward;
  TaskSpec backward;
  std::map<std::string, Eigen::Vector3d> markers;
};

struct BinSortConfig {
  std::string instructed_bin = "left";  // "left" or "right"
  double perturb_radius = 0.06;
  int horizon = 60;
};

// Two bins and a staging area; the instruction names the bin. Forward moves
// the block from staging into the bin, backward returns it.
TaskPair make_bin_sort(const BinSortConfig& config, const SimParams& params);

WorldState reset(const TaskSpec& task, const SimParams& params, std::uint64_t seed, bool perturb);

struct StepResult {
  WorldState state;
  bool success = false;
  bool done = false;
};

StepResult step(const WorldState& state, const Action& action, const TaskSpec& task,
                const SimParams& params);

// Per-view affine maps from workspace coordinates to pixels, with optional
// additive Gaussian pixel noise. Top-down maps (x, y) -> (u, v); the side
// view maps z -> w.
struct Projection {
  Eigen::Matrix2d top_linear = Eigen::Matrix2d::Identity();
  Eigen::Vector2d top_offset = Eigen::Vector2d::Zero();
  double side_scale = 1.0;
  double side_offset = 0.0;
  double noise_std = 0.0;

  geom::PixelPoint3 project_point(const Eigen::Vector3d& world, Rng* rng = nullptr) const;
  Eigen::Vector3d unproject(const geom::PixelPoint3& px) const;

  // Maps the workspace box onto the full image rectangle.
  static Projection orthographic(const geom::GridSpec& grid, const SimParams& params,
                                 double noise_std = 0.0);
};

struct ProjectedFrame {
  geom::PixelPoint3 robot;
  std::map<std::string, geom::PixelPoint3> objects;
};

ProjectedFrame project(const WorldState& state, const Projection& proj, Rng* rng = nullptr);

struct ExpertParams {
  double carry_height = 5.0 / 12.0;  // level-2 centroid of a 6-level grid
  double align_tol = 0.02;
  double place_tol = 0.03;
  double descend_tol = 0.015;
};

struct ExpertAction {
  Action action;
  bool feasible = true;
};

// Greedy proportional pick-and-place controller: approach above the object,
// descend, grasp, lift, carry above the goal, descend, release. Optional
// per-axis Gaussian action noise for demo diversity.
ExpertAction scripted_expert(const TaskSpec& task, const WorldState& state,
                             const SimParams& params, double noise_std = 0.0,
                             Rng* rng = nullptr, const ExpertParams& expert = {});

}  // namespace waypointrl::sim
