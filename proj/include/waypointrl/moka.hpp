#pragma once

#include "waypointrl/geometry.hpp"
#include "waypointrl/sim.hpp"

namespace waypointrl::learn {

struct OpenLoopOutcome {
  bool success = false;
  bool unreachable = false;  // a waypoint unprojects outside the workspace
  int steps = 0;
};

// Open-loop waypoint executor: maps each block centroid back to workspace
// through the inverse projection and drives straight to each in order,
// closing the gripper after the first block and opening at the last. No
// learning, no feedback beyond proprioception.
OpenLoopOutcome open_loop_execute(const sim::TaskSpec& task, const sim::SimParams& params,
                                  const sim::WorldState& start, const geom::BlockSequence& seq,
                                  const geom::GridSpec& grid, const sim::Projection& proj,
                                  int max_steps = 240);

}  // namespace waypointrl::learn
