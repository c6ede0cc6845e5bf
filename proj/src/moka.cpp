#include "waypointrl/moka.hpp"

#include "waypointrl/episode.hpp"

namespace waypointrl::learn {

OpenLoopOutcome open_loop_execute(const sim::TaskSpec& task, const sim::SimParams& params,
                                  const sim::WorldState& start, const geom::BlockSequence& seq,
                                  const geom::GridSpec& grid, const sim::Projection& proj,
                                  int max_steps) {
  OpenLoopOutcome out;
  sim::WorldState state = sim::begin_episode(start);
  constexpr double kReachTol = 0.005;

  for (std::size_t i = 0; i < seq.size(); ++i) {
    const Eigen::Vector3d target = proj.unproject(geom::block_to_pixel3(grid, seq[i]));
    if ((target.array() < params.workspace_min.array() - 1e-9).any() ||
        (target.array() > params.workspace_max.array() + 1e-9).any()) {
      out.unreachable = true;
      out.success = false;
      return out;
    }

    while ((state.effector - target).norm() > kReachTol) {
      if (out.steps >= max_steps) {
        out.success = task.success(state);
        return out;
      }
      sim::Action action;
      action.delta = target - state.effector;  // the step clamps per axis
      state = sim::step(state, action, task, params).state;
      ++out.steps;
    }

    if (i == 0) {
      sim::Action close;
      close.gripper = sim::GripperCmd::close;
      state = sim::step(state, close, task, params).state;
      ++out.steps;
    } else if (i + 1 == seq.size()) {
      sim::Action open;
      open.gripper = sim::GripperCmd::open;
      state = sim::step(state, open, task, params).state;
      ++out.steps;
    }
  }

  out.success = task.success(state);
  return out;
}

}  // namespace waypointrl::learn
