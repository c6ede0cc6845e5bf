#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "waypointrl/episode.hpp"
#include "waypointrl/geometry.hpp"
#include "waypointrl/ransac.hpp"
#include "waypointrl/rng.hpp"

namespace waypointrl::reward {

// Hyperparameters of the shaping transform
// r = 0.5 * (1 - tanh(lambda * (d - phi))).
struct RewardParams {
  double lambda = 0.1;  // 1/pixels
  double phi = 15.0;    // pixels
  geom::GridSpec grid{};

  void validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("RewardParams: lambda must be > 0");
    if (phi < 0.0) throw std::invalid_argument("RewardParams: phi must be >= 0");
    grid.validate();
  }
};

template <typename Scalar>
Scalar dense_reward_kernel(Scalar distance, Scalar lambda, Scalar phi) {
  return Scalar(0.5) * (Scalar(1) - std::tanh(lambda * (distance - phi)));
}

// Counts dense-kernel evaluations; lets tests assert that sparse-only
// labeling never touches the dense path.
std::atomic<std::uint64_t>& dense_eval_count();

// Index of the sequence block nearest to p in 3D pixel space; ties break
// toward the lower index.
int nearest_block(const geom::PixelPoint3& p, const geom::BlockSequence& seq,
                  const geom::GridSpec& grid);

struct DenseReward {
  double value = 0.0;
  int nearest_index = -1;
  int target_index = -1;
  double distance = 0.0;
};

// Shaping reward toward the block after the nearest one (clamped to the
// final block at the sequence end).
DenseReward dense_reward(const geom::PixelPoint3& p, const geom::BlockSequence& seq,
                         const RewardParams& params);

// Same transform applied to an object pixel against its own waypoint
// sequence; off by default in experiment configs.
double object_reward(const geom::PixelPoint3& obj_pixel, const geom::BlockSequence& seq_obj,
                     const RewardParams& params);

// Simulated noisy success classifier: k independent task-completion prompts
// that each flip the ground truth with the configured rates; the sparse
// reward is 1 only on unanimous agreement. The noise stream is derived from
// (seed, episode id, frame index) so labeling order never matters.
class SparseClassifier {
 public:
  SparseClassifier(int k_prompts, double p_fp, double p_fn, std::uint64_t seed);

  int evaluate(bool ground_truth, std::uint64_t episode_id, int frame_index) const;

  int k_prompts() const { return k_prompts_; }
  double p_fp() const { return p_fp_; }
  double p_fn() const { return p_fn_; }

 private:
  int k_prompts_;
  double p_fp_;
  double p_fn_;
  std::uint64_t seed_;
};

enum class Formulation { dense_only, sparse_only, combined };

std::string to_string(Formulation f);
Formulation formulation_from_string(const std::string& s);

struct LabeledFrame {
  int t = 0;
  geom::PixelPoint3 robot_pixel;
  int nearest_index = -1;
  int target_index = -1;
  double distance = 0.0;
  double r_dense = 0.0;
  int r_sparse = 0;
  double r = 0.0;
};

// Per-frame labeling of an episode: robot pixels via the fitted regressors,
// then rewards under the requested formulation. For `combined`,
// r = 1 if r_sparse = 1 else r = r_dense. Purely per-frame, so permuting
// frames permutes labels. `seq` may be null only for sparse_only labeling.
std::vector<LabeledFrame> label_episode(const sim::Episode& episode,
                                        const geom::BlockSequence* seq,
                                        const CameraRegressor& topdown,
                                        const CameraRegressor& side, const RewardParams& params,
                                        const SparseClassifier& classifier,
                                        Formulation formulation = Formulation::combined);

inline std::vector<LabeledFrame> label_episode(const sim::Episode& episode,
                                               const geom::BlockSequence& seq,
                                               const CameraRegressor& topdown,
                                               const CameraRegressor& side,
                                               const RewardParams& params,
                                               const SparseClassifier& classifier,
                                               Formulation formulation = Formulation::combined) {
  return label_episode(episode, &seq, topdown, side, params, classifier, formulation);
}

// Writes labels back into the episode's frames (for JSONL logs).
void apply_labels(sim::Episode& episode, const std::vector<LabeledFrame>& labels);

}  // namespace waypointrl::reward
