#include "waypointrl/episode.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace waypointrl::sim {

namespace {

using nlohmann::json;

json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("episode log: expected 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json pixel_to_json(const geom::PixelPoint3& p) { return json::array({p.u, p.v, p.w}); }

geom::PixelPoint3 pixel_from_json(const json& j) {
  const Eigen::Vector3d v = vec3_from_json(j);
  return geom::PixelPoint3::from_vec(v);
}

std::string gripper_to_string(Gripper g) { return g == Gripper::open ? "open" : "closed"; }

Gripper gripper_from_string(const std::string& s) {
  if (s == "open") return Gripper::open;
  if (s == "closed") return Gripper::closed;
  throw std::runtime_error("episode log: bad gripper state \"" + s + "\"");
}

std::string cmd_to_string(GripperCmd c) {
  switch (c) {
    case GripperCmd::open: return "open";
    case GripperCmd::close: return "close";
    default: return "none";
  }
}

GripperCmd cmd_from_string(const std::string& s) {
  if (s == "open") return GripperCmd::open;
  if (s == "close") return GripperCmd::close;
  if (s == "none") return GripperCmd::none;
  throw std::runtime_error("episode log: bad gripper command \"" + s + "\"");
}

json frame_to_json(const Frame& f) {
  json objects = json::array();
  for (const auto& o : f.state.objects)
    objects.push_back({{"id", o.id}, {"pos", vec3_to_json(o.pos)}, {"held", o.held}});
  json pixel_objects = json::object();
  for (const auto& [id, px] : f.pixel_objects) pixel_objects[id] = pixel_to_json(px);
  return json{{"v", kEpisodeSchemaVersion},
              {"t", f.t},
              {"effector", vec3_to_json(f.state.effector)},
              {"gripper", gripper_to_string(f.state.gripper)},
              {"objects", objects},
              {"action",
               {{"delta", vec3_to_json(f.action.delta)}, {"gripper", cmd_to_string(f.action.gripper)}}},
              {"pixel_robot", pixel_to_json(f.pixel_robot)},
              {"pixel_objects", pixel_objects},
              {"success", f.success},
              {"r_sparse", f.r_sparse},
              {"r_dense", f.r_dense},
              {"r", f.r}};
}

Frame frame_from_json(const json& j) {
  Frame f;
  f.t = j.at("t").get<int>();
  f.state.effector = vec3_from_json(j.at("effector"));
  f.state.gripper = gripper_from_string(j.at("gripper").get<std::string>());
  for (const auto& o : j.at("objects"))
    f.state.objects.push_back(
        {o.at("id").get<std::string>(), vec3_from_json(o.at("pos")), o.at("held").get<bool>()});
  f.state.step_count = f.t;
  f.action.delta = vec3_from_json(j.at("action").at("delta"));
  f.action.gripper = cmd_from_string(j.at("action").at("gripper").get<std::string>());
  f.pixel_robot = pixel_from_json(j.at("pixel_robot"));
  for (const auto& [id, px] : j.at("pixel_objects").items()) f.pixel_objects[id] = pixel_from_json(px);
  f.success = j.value("success", false);
  f.r_sparse = j.value("r_sparse", 0.0);
  f.r_dense = j.value("r_dense", 0.0);
  f.r = j.value("r", 0.0);
  return f;
}

}  // namespace

void write_episode_jsonl(const Episode& episode, std::ostream& out) {
  const json header{{"v", kEpisodeSchemaVersion},
                    {"kind", "episode"},
                    {"id", episode.id},
                    {"task", episode.task},
                    {"success", episode.success}};
  out << header.dump() << "\n";
  for (const auto& f : episode.frames) out << frame_to_json(f).dump() << "\n";
}

void write_episode_jsonl(const Episode& episode, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open episode log for writing: " + path);
  write_episode_jsonl(episode, out);
}

Episode read_episode_jsonl(std::istream& in) {
  Episode episode;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error(std::string("episode log: ") + e.what());
    }
    if (first && j.is_object() && j.value("kind", "") == "episode") {
      episode.id = j.value("id", std::uint64_t{0});
      episode.task = j.value("task", "");
      episode.success = j.value("success", false);
      first = false;
      continue;
    }
    first = false;
    episode.frames.push_back(frame_from_json(j));
  }
  if (episode.frames.empty()) throw std::runtime_error("episode log: no frames");
  for (const auto& f : episode.frames) episode.success = episode.success || f.success;
  return episode;
}

Episode read_episode_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open episode log: " + path);
  return read_episode_jsonl(in);
}

WorldState begin_episode(WorldState state) {
  state.step_count = 0;
  return state;
}

Episode rollout(const TaskSpec& task, const SimParams& params, const WorldState& start,
                const PolicyFn& policy, std::uint64_t episode_id, const Projection* proj,
                Rng* proj_rng) {
  Episode episode;
  episode.id = episode_id;
  episode.task = task.name;

  WorldState cur = begin_episode(start);
  while (true) {
    const bool success_now = task.success(cur);
    Frame frame;
    frame.t = static_cast<int>(episode.frames.size());
    frame.state = cur;
    frame.success = success_now;
    if (proj != nullptr) {
      const ProjectedFrame projected = project(cur, *proj, proj_rng);
      frame.pixel_robot = projected.robot;
      frame.pixel_objects = projected.objects;
    }
    if (success_now || cur.step_count >= task.horizon) {
      episode.frames.push_back(std::move(frame));
      break;
    }
    const Action action = policy(cur, frame.t);
    frame.action = action;
    episode.frames.push_back(std::move(frame));
    cur = step(cur, action, task, params).state;
  }

  for (const auto& f : episode.frames) episode.success = episode.success || f.success;
  return episode;
}

Episode generate_failure(const TaskSpec& task, const SimParams& params, std::uint64_t seed,
                         std::uint64_t episode_id, FailureMode mode, const Projection* proj,
                         Rng* proj_rng) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    const std::uint64_t attempt_seed = split_seed(seed, static_cast<std::uint64_t>(attempt));
    Rng rng(attempt_seed);
    WorldState start = reset(task, params, split_seed(attempt_seed, 1), true);

    PolicyFn policy;
    if (mode == FailureMode::random_policy) {
      policy = [&rng, &params](const WorldState&, int) {
        Action a;
        a.delta = {rng.uniform(-params.delta_max, params.delta_max),
                   rng.uniform(-params.delta_max, params.delta_max),
                   rng.uniform(-params.delta_max, params.delta_max)};
        const int g = rng.uniform_int(0, 7);
        a.gripper = g == 0 ? GripperCmd::open : (g == 1 ? GripperCmd::close : GripperCmd::none);
        return a;
      };
    } else {
      // Expert that never releases: hovers at the placement point forever.
      policy = [&task, &params](const WorldState& s, int) {
        ExpertAction ea = scripted_expert(task, s, params);
        if (ea.action.gripper == GripperCmd::open) ea.action.gripper = GripperCmd::none;
        return ea.action;
      };
    }

    Episode episode = rollout(task, params, start, policy, episode_id, proj, proj_rng);
    if (!episode.success) return episode;
    // Coincidental success: resample with the next derived seed.
  }
  throw std::runtime_error("generate_failure: could not produce a failing rollout");
}

std::vector<Episode> generate_failures(const TaskSpec& task, const SimParams& params,
                                       std::uint64_t seed, int count,
                                       std::uint64_t first_episode_id, const Projection* proj,
                                       Rng* proj_rng) {
  std::vector<Episode> episodes;
  episodes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const FailureMode mode = i % 4 == 3 ? FailureMode::truncated_expert : FailureMode::random_policy;
    episodes.push_back(generate_failure(task, params, split_seed(seed, 1000 + i),
                                        first_episode_id + i, mode, proj, proj_rng));
  }
  return episodes;
}

}  // namespace waypointrl::sim
