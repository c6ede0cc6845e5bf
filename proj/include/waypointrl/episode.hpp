#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "waypointrl/sim.hpp"

namespace waypointrl::sim {

// One logged timestep: the state before acting, the action taken (zero on
// the final frame), camera-pixel projections, the ground-truth success flag
// and the reward fields filled in by labeling.
struct Frame {
  int t = 0;
  WorldState state;
  Action action;
  bool success = false;
  geom::PixelPoint3 pixel_robot;
  std::map<std::string, geom::PixelPoint3> pixel_objects;
  double r_sparse = 0.0;
  double r_dense = 0.0;
  double r = 0.0;
};

struct Episode {
  std::uint64_t id = 0;
  std::string task;
  bool success = false;  // true if any frame's predicate held
  std::vector<Frame> frames;
};

// JSONL episode log: an optional header line ({"v":1,"kind":"episode",...})
// followed by one frame object per line. Schema version is carried in the
// "v" field of every line.
inline constexpr int kEpisodeSchemaVersion = 1;

void write_episode_jsonl(const Episode& episode, std::ostream& out);
void write_episode_jsonl(const Episode& episode, const std::string& path);
Episode read_episode_jsonl(std::istream& in);
Episode read_episode_jsonl_file(const std::string& path);

using PolicyFn = std::function<Action(const WorldState&, int frame_index)>;

// Runs `policy` from `start` until the task reports done (success or
// horizon). Frames record pre-action states; a final frame captures the
// terminal state. When a projection is given, camera pixels are logged
// per frame (noise drawn from `proj_rng`).
Episode rollout(const TaskSpec& task, const SimParams& params, const WorldState& start,
                const PolicyFn& policy, std::uint64_t episode_id,
                const Projection* proj = nullptr, Rng* proj_rng = nullptr);

// Zeroes the per-episode step counter so a carried-over state can begin a
// fresh episode (reset-free task switching).
WorldState begin_episode(WorldState state);

enum class FailureMode { random_policy, truncated_expert };

// A rollout guaranteed to terminate without success: either a random policy
// (re-seeded until no frame succeeds) or the expert stopped before release.
Episode generate_failure(const TaskSpec& task, const SimParams& params, std::uint64_t seed,
                         std::uint64_t episode_id,
                         FailureMode mode = FailureMode::random_policy,
                         const Projection* proj = nullptr, Rng* proj_rng = nullptr);

std::vector<Episode> generate_failures(const TaskSpec& task, const SimParams& params,
                                       std::uint64_t seed, int count,
                                       std::uint64_t first_episode_id,
                                       const Projection* proj = nullptr,
                                       Rng* proj_rng = nullptr);

}  // namespace waypointrl::sim
