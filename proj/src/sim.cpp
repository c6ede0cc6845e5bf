#include "waypointrl/sim.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace waypointrl::sim {

const ObjectState* WorldState::find_object(const std::string& id) const {
  for (const auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

ObjectState* WorldState::find_object(const std::string& id) {
  for (auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

const ObjectState* WorldState::held_object() const {
  for (const auto& o : objects)
    if (o.held) return &o;
  return nullptr;
}

namespace {

bool inside_box(const Eigen::Vector3d& p, const Eigen::Vector2d& center, double halfwidth) {
  return std::abs(p.x() - center.x()) <= halfwidth && std::abs(p.y() - center.y()) <= halfwidth;
}

TaskSpec make_transport_task(const std::string& name, const std::string& instruction,
                             TaskDirection direction, const std::string& object_id,
                             const std::string& target_marker, const Eigen::Vector3d& start,
                             const Eigen::Vector3d& goal, double perturb_radius, int horizon) {
  TaskSpec task;
  task.name = name;
  task.instruction = instruction;
  task.direction = direction;
  task.grasp_object = object_id;
  task.target_marker = target_marker;
  task.goal_center = goal;
  task.goal_halfwidth = 0.1;
  task.horizon = horizon;
  task.reset_distribution.nominal_objects = {{object_id, start}};
  task.reset_distribution.perturb_radius = perturb_radius;
  const Eigen::Vector2d goal_xy = goal.head<2>();
  const double halfwidth = task.goal_halfwidth;
  task.success = [object_id, goal_xy, halfwidth](const WorldState& s) {
    const ObjectState* obj = s.find_object(object_id);
    return obj != nullptr && !obj->held && s.gripper == Gripper::open &&
           inside_box(obj->pos, goal_xy, halfwidth);
  };
  return task;
}

}  // namespace

TaskPair make_bin_sort(const BinSortConfig& config, const SimParams& params) {
  if (config.instructed_bin != "left" && config.instructed_bin != "right")
    throw std::invalid_argument("make_bin_sort: instructed_bin must be \"left\" or \"right\"");

  const double z = params.object_rest_z;
  // Scene anchors sit at grid-cell centroids of the default 6x6 layout.
  const Eigen::Vector3d bin_left(1.5 / 6.0, 1.5 / 6.0, z);
  const Eigen::Vector3d bin_right(4.5 / 6.0, 1.5 / 6.0, z);
  const Eigen::Vector3d staging(2.5 / 6.0, 4.5 / 6.0, z);
  const Eigen::Vector3d bin = config.instructed_bin == "left" ? bin_left : bin_right;
  const std::string bin_marker = "bin_" + config.instructed_bin;

  TaskPair pair;
  pair.markers = {{"bin_left", bin_left}, {"bin_right", bin_right}, {"staging", staging}};
  pair.forward = make_transport_task(
      "bin_sort_forward", "sort the block into the " + config.instructed_bin + " bin",
      TaskDirection::forward, "block", bin_marker, staging, bin, config.perturb_radius,
      config.horizon);
  pair.backward = make_transport_task(
      "bin_sort_backward", "return the block to the staging area", TaskDirection::backward,
      "block", "staging", bin, staging, config.perturb_radius, config.horizon);
  return pair;
}

WorldState reset(const TaskSpec& task, const SimParams& params, std::uint64_t seed,
                 bool perturb) {
  Rng rng(seed);
  WorldState state;
  state.effector = task.reset_distribution.effector_home;
  state.gripper = Gripper::open;
  state.step_count = 0;
  for (const auto& [id, nominal] : task.reset_distribution.nominal_objects) {
    Eigen::Vector3d pos = nominal;
    const double r = task.reset_distribution.perturb_radius;
    if (perturb && r > 0.0) {
      double dx = 0.0, dy = 0.0;
      do {
        dx = rng.uniform(-r, r);
        dy = rng.uniform(-r, r);
      } while (dx * dx + dy * dy > r * r);
      pos.x() += dx;
      pos.y() += dy;
    }
    pos = pos.cwiseMax(params.workspace_min).cwiseMin(params.workspace_max);
    state.objects.push_back({id, pos, false});
  }
  return state;
}

StepResult step(const WorldState& state, const Action& action, const TaskSpec& task,
                const SimParams& params) {
  WorldState next = state;

  const Eigen::Vector3d delta =
      action.delta.cwiseMax(-params.delta_max).cwiseMin(params.delta_max);
  next.effector =
      (next.effector + delta).cwiseMax(params.workspace_min).cwiseMin(params.workspace_max);

  for (auto& obj : next.objects)
    if (obj.held) obj.pos = next.effector;

  switch (action.gripper) {
    case GripperCmd::close: {
      if (next.gripper == Gripper::open) {
        ObjectState* nearest = nullptr;
        double best = std::numeric_limits<double>::infinity();
        for (auto& obj : next.objects) {
          const double d = (obj.pos - next.effector).norm();
          if (d <= params.grasp_radius && d < best) {
            best = d;
            nearest = &obj;
          }
        }
        if (nearest != nullptr) {
          nearest->held = true;
          nearest->pos = next.effector;
        }
      }
      next.gripper = Gripper::closed;
      break;
    }
    case GripperCmd::open: {
      for (auto& obj : next.objects) {
        if (obj.held) {
          obj.held = false;
          obj.pos.z() = params.object_rest_z;
        }
      }
      next.gripper = Gripper::open;
      break;
    }
    case GripperCmd::none:
      break;
  }

  next.step_count = state.step_count + 1;

  StepResult result;
  result.success = task.success(next);
  result.done = result.success || next.step_count >= task.horizon;
  result.state = std::move(next);
  return result;
}

geom::PixelPoint3 Projection::project_point(const Eigen::Vector3d& world, Rng* rng) const {
  Eigen::Vector2d uv = top_linear * world.head<2>() + top_offset;
  double w = side_scale * world.z() + side_offset;
  if (rng != nullptr && noise_std > 0.0) {
    uv.x() += rng->normal(0.0, noise_std);
    uv.y() += rng->normal(0.0, noise_std);
    w += rng->normal(0.0, noise_std);
  }
  return {uv.x(), uv.y(), w};
}

Eigen::Vector3d Projection::unproject(const geom::PixelPoint3& px) const {
  const Eigen::Vector2d xy = top_linear.inverse() * (px.vec().head<2>() - top_offset);
  const double z = (px.w - side_offset) / side_scale;
  return {xy.x(), xy.y(), z};
}

Projection Projection::orthographic(const geom::GridSpec& grid, const SimParams& params,
                                    double noise_std) {
  grid.validate();
  const Eigen::Vector3d extent = params.workspace_max - params.workspace_min;
  Projection proj;
  proj.top_linear = Eigen::Vector2d(grid.image_width / extent.x(), grid.image_height / extent.y())
                        .asDiagonal();
  proj.top_offset = -(proj.top_linear * params.workspace_min.head<2>());
  proj.side_scale = grid.image_height / extent.z();
  proj.side_offset = -proj.side_scale * params.workspace_min.z();
  proj.noise_std = noise_std;
  return proj;
}

ProjectedFrame project(const WorldState& state, const Projection& proj, Rng* rng) {
  ProjectedFrame frame;
  frame.robot = proj.project_point(state.effector, rng);
  for (const auto& obj : state.objects) frame.objects[obj.id] = proj.project_point(obj.pos, rng);
  return frame;
}

ExpertAction scripted_expert(const TaskSpec& task, const WorldState& state,
                             const SimParams& params, double noise_std, Rng* rng,
                             const ExpertParams& expert) {
  ExpertAction out;
  if (task.success(state)) return out;  // no-op on already-complete states

  const ObjectState* obj = state.find_object(task.grasp_object);
  if (obj == nullptr) {
    out.feasible = false;
    return out;
  }

  const Eigen::Vector3d& eff = state.effector;
  Eigen::Vector3d target = eff;
  GripperCmd cmd = GripperCmd::none;

  // Gripper commands are sustained through each phase (open while
  // approaching, close while carrying), like a held teleop channel.
  if (!obj->held) {
    const Eigen::Vector2d to_obj = obj->pos.head<2>() - eff.head<2>();
    if ((obj->pos - eff).norm() <= params.grasp_radius * 0.8) {
      cmd = GripperCmd::close;
    } else if (to_obj.norm() > expert.align_tol) {
      target = {obj->pos.x(), obj->pos.y(), expert.carry_height};
      cmd = GripperCmd::open;
    } else {
      target = obj->pos;  // descend onto the object
      cmd = GripperCmd::open;
    }
  } else {
    const Eigen::Vector2d to_goal = task.goal_center.head<2>() - eff.head<2>();
    if (to_goal.norm() > expert.place_tol) {
      target = {task.goal_center.x(), task.goal_center.y(), expert.carry_height};
      cmd = GripperCmd::close;
    } else if (eff.z() > task.goal_center.z() + expert.descend_tol) {
      target = {task.goal_center.x(), task.goal_center.y(), task.goal_center.z()};
      cmd = GripperCmd::close;
    } else {
      cmd = GripperCmd::open;
    }
  }

  if ((target.array() < params.workspace_min.array()).any() ||
      (target.array() > params.workspace_max.array()).any()) {
    out.feasible = false;
    return out;
  }

  Eigen::Vector3d delta = target - eff;
  if (rng != nullptr && noise_std > 0.0) {
    delta.x() += rng->normal(0.0, noise_std);
    delta.y() += rng->normal(0.0, noise_std);
    delta.z() += rng->normal(0.0, noise_std);
  }
  out.action.delta = delta.cwiseMax(-params.delta_max).cwiseMin(params.delta_max);
  out.action.gripper = cmd;
  return out;
}

}  // namespace waypointrl::sim
