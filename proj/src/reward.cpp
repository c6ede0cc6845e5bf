#include "waypointrl/reward.hpp"

#include <limits>
#include <stdexcept>

namespace waypointrl::reward {

std::atomic<std::uint64_t>& dense_eval_count() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}

int nearest_block(const geom::PixelPoint3& p, const geom::BlockSequence& seq,
                  const geom::GridSpec& grid) {
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const double d = geom::pixel_distance(p, geom::block_to_pixel3(grid, seq[i]));
    if (d < best_dist) {  // strict: ties keep the lower index
      best_dist = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

DenseReward dense_reward(const geom::PixelPoint3& p, const geom::BlockSequence& seq,
                         const RewardParams& params) {
  params.validate();
  dense_eval_count().fetch_add(1, std::memory_order_relaxed);

  DenseReward out;
  out.nearest_index = nearest_block(p, seq, params.grid);
  out.target_index = std::min(out.nearest_index + 1, static_cast<int>(seq.size()) - 1);
  out.distance = geom::pixel_distance(
      p, geom::block_to_pixel3(params.grid, seq[static_cast<std::size_t>(out.target_index)]));
  out.value = dense_reward_kernel(out.distance, params.lambda, params.phi);
  return out;
}

double object_reward(const geom::PixelPoint3& obj_pixel, const geom::BlockSequence& seq_obj,
                     const RewardParams& params) {
  return dense_reward(obj_pixel, seq_obj, params).value;
}

SparseClassifier::SparseClassifier(int k_prompts, double p_fp, double p_fn, std::uint64_t seed)
    : k_prompts_(k_prompts), p_fp_(p_fp), p_fn_(p_fn), seed_(seed) {
  if (k_prompts < 1) throw std::invalid_argument("SparseClassifier: k_prompts must be >= 1");
  if (p_fp < 0.0 || p_fp >= 1.0 || p_fn < 0.0 || p_fn >= 1.0)
    throw std::invalid_argument("SparseClassifier: rates must lie in [0, 1)");
}

int SparseClassifier::evaluate(bool ground_truth, std::uint64_t episode_id,
                               int frame_index) const {
  Rng rng(split_seed(split_seed(seed_, episode_id), static_cast<std::uint64_t>(frame_index)));
  for (int k = 0; k < k_prompts_; ++k) {
    const double u = rng.uniform();
    const bool vote = ground_truth ? (u >= p_fn_) : (u < p_fp_);
    if (!vote) return 0;  // consensus requires every prompt to agree
  }
  return 1;
}

std::string to_string(Formulation f) {
  switch (f) {
    case Formulation::dense_only: return "dense_only";
    case Formulation::sparse_only: return "sparse_only";
    case Formulation::combined: return "combined";
  }
  return "combined";
}

Formulation formulation_from_string(const std::string& s) {
  if (s == "dense_only") return Formulation::dense_only;
  if (s == "sparse_only") return Formulation::sparse_only;
  if (s == "combined") return Formulation::combined;
  throw std::invalid_argument("unknown formulation \"" + s + "\"");
}

std::vector<LabeledFrame> label_episode(const sim::Episode& episode,
                                        const geom::BlockSequence* seq,
                                        const CameraRegressor& topdown,
                                        const CameraRegressor& side, const RewardParams& params,
                                        const SparseClassifier& classifier,
                                        Formulation formulation) {
  params.validate();
  if (formulation != Formulation::sparse_only && seq == nullptr)
    throw std::invalid_argument("label_episode: formulation needs a waypoint sequence");
  std::vector<LabeledFrame> labels;
  labels.reserve(episode.frames.size());
  for (const auto& frame : episode.frames) {
    LabeledFrame label;
    label.t = frame.t;
    label.robot_pixel = robot_pixel(topdown, side, frame.state.effector);

    if (formulation != Formulation::dense_only)
      label.r_sparse = classifier.evaluate(frame.success, episode.id, frame.t);

    if (formulation != Formulation::sparse_only) {
      const DenseReward dense = dense_reward(label.robot_pixel, *seq, params);
      label.nearest_index = dense.nearest_index;
      label.target_index = dense.target_index;
      label.distance = dense.distance;
      label.r_dense = dense.value;
    }

    switch (formulation) {
      case Formulation::dense_only: label.r = label.r_dense; break;
      case Formulation::sparse_only: label.r = label.r_sparse; break;
      case Formulation::combined:
        label.r = label.r_sparse == 1 ? 1.0 : label.r_dense;
        break;
    }
    labels.push_back(label);
  }
  return labels;
}

void apply_labels(sim::Episode& episode, const std::vector<LabeledFrame>& labels) {
  if (labels.size() != episode.frames.size())
    throw std::invalid_argument("apply_labels: label count does not match frame count");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    episode.frames[i].r_sparse = labels[i].r_sparse;
    episode.frames[i].r_dense = labels[i].r_dense;
    episode.frames[i].r = labels[i].r;
  }
}

}  // namespace waypointrl::reward
