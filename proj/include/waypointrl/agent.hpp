#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "waypointrl/episode.hpp"
#include "waypointrl/mlp.hpp"
#include "waypointrl/replay.hpp"
#include "waypointrl/reward.hpp"
#include "waypointrl/sim.hpp"

namespace waypointrl::learn {

struct Hyperparams {
  double gamma = 0.98;
  double actor_lr = 3e-4;
  double critic_lr = 1e-3;
  int batch_size = 64;
  // Weight of the conservative critic penalty; 0 recovers plain TD.
  double conservative_alpha = 1.0;
  double tau = 0.01;  // polyak rate for both target networks
  int offline_steps = 15000;
  double offline_fraction = 0.5;  // offline share of online-phase batches
  double bc_weight_offline = 1.0;
  double bc_weight_online = 0.05;
  double exploration_std = 0.15;
  int eval_every = 2000;
  int eval_trials = 20;
  int hidden = 64;  // two hidden layers of this width
  double calibration_epsilon = 2.0;
  int updates_per_step = 1;
  std::size_t online_capacity = 200000;
};

// --- state/action featurization for the tabletop tasks ---

int feature_dim();
int action_dim();

// [effector(3), gripper closed bit, object pos(3), object - effector (3),
//  forward/backward one-hot(2)]
Eigen::VectorXd state_features(const sim::WorldState& state, const sim::TaskSpec& task);

// Policy action in [-1,1]^4 -> environment action. The last component is
// the gripper channel: > 0.5 close, < -0.5 open, otherwise none.
sim::Action to_env_action(const Eigen::VectorXd& a, const sim::SimParams& params);

// Canonical vector form of an executed action (inverse of to_env_action up
// to the gripper thresholds); behavior-cloning targets for demo data.
Eigen::VectorXd action_vector(const sim::Action& action, const sim::SimParams& params);

struct Batch {
  Eigen::MatrixXd states, actions, next_states;  // column-major, one sample per column
  Eigen::VectorXd rewards, mc_returns;
  Eigen::ArrayXd done;
};

Batch make_batch(const std::vector<const Transition*>& transitions);

// Deterministic actor-critic: Gaussian policy with tanh-squashed mean,
// twin-free critic with target networks, conservative critic penalty
// calibrated by Monte-Carlo returns.
class ActorCritic {
 public:
  ActorCritic() = default;
  ActorCritic(int state_dim, int action_dim, const Hyperparams& hyper, std::uint64_t seed);

  Eigen::VectorXd act(const Eigen::VectorXd& features, bool deterministic, Rng* rng) const;
  Eigen::VectorXd policy_mean(const Eigen::VectorXd& features) const;
  double q_value(const Eigen::VectorXd& features, const Eigen::VectorXd& action) const;
  Eigen::VectorXd target_policy_mean(const Eigen::VectorXd& features) const;
  double target_q_value(const Eigen::VectorXd& features, const Eigen::VectorXd& action) const;

  // Loss value and analytic gradient w.r.t. the respective network's flat
  // parameters. Pure functions of the current parameters and the batch, so
  // finite differences can check them.
  double critic_loss_grad(const Batch& batch, Eigen::VectorXd* grad_out) const;
  double actor_loss_grad(const Batch& batch, double bc_weight, Eigen::VectorXd* grad_out) const;

  struct StepLosses {
    double critic = 0.0;
    double actor = 0.0;
  };
  StepLosses train_step(const Batch& batch, double bc_weight);

  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  Mlp& mutable_actor() { return actor_; }
  Mlp& mutable_critic() { return critic_; }
  const Hyperparams& hyper() const { return hyper_; }

  std::string to_json() const;
  static ActorCritic from_json(const std::string& text);

 private:
  void polyak_update();

  Hyperparams hyper_;
  Mlp actor_, critic_, actor_target_, critic_target_;
  Adam actor_opt_, critic_opt_;

  friend class OnlineTrainer;
};

// --- reward labeling context shared by demo generation and fine-tuning ---

struct LabelingContext {
  const reward::CameraRegressor* topdown = nullptr;
  const reward::CameraRegressor* side = nullptr;
  reward::RewardParams reward_params;
  const reward::SparseClassifier* classifier = nullptr;
  const geom::BlockSequence* forward_waypoints = nullptr;
  const geom::BlockSequence* backward_waypoints = nullptr;
  reward::Formulation formulation = reward::Formulation::combined;

  const geom::BlockSequence* waypoints_for(sim::TaskDirection direction) const;
};

std::vector<reward::LabeledFrame> label_with_context(const sim::Episode& episode,
                                                     sim::TaskDirection direction,
                                                     const LabelingContext& labeling);

// Converts a labeled episode into transitions (reward of a transition is
// the label of the frame it arrives in; done marks ground-truth success
// termination, absorbing semantics) and appends them to the buffer.
void append_labeled_episode(ReplayBuffer& buffer, const sim::Episode& episode,
                            const sim::TaskSpec& task,
                            const std::vector<reward::LabeledFrame>& labels,
                            const Hyperparams& hyper, const sim::SimParams& params, bool offline);

// --- demonstrations ---

struct DemoCounts {
  int forward = 20;
  int backward = 20;
  int failure = 8;
};

struct DemoSet {
  std::vector<sim::Episode> episodes;
  std::vector<sim::TaskDirection> directions;  // parallel to episodes
};

// Scripted-expert successes plus guaranteed failures, with camera-pixel
// logging. Deterministic per seed; expert episodes are re-seeded until they
// succeed.
DemoSet generate_demo_episodes(const sim::TaskPair& tasks, const sim::SimParams& params,
                               const DemoCounts& counts, double expert_noise,
                               const sim::Projection& proj, std::uint64_t seed);

ReplayBuffer build_demo_buffer(const DemoSet& demos, const sim::TaskPair& tasks,
                               const LabelingContext& labeling, const Hyperparams& hyper,
                               const sim::SimParams& params);

// Conservative offline pretraining on the buffer's offline partition.
ActorCritic pretrain_offline(const ReplayBuffer& buffer, const Hyperparams& hyper,
                             std::uint64_t seed);

// --- evaluation and online fine-tuning ---

struct EvalResult {
  double success_rate = 0.0;
  double mean_reward = 0.0;
};

// 20-trial style evaluation with a fixed seed-to-trial assignment: trial k
// always starts from reset(seed = split(eval_seed, k), perturb). Rewards
// are labeled with a noiseless classifier under the run's formulation.
EvalResult evaluate_policy(const ActorCritic& agent, const sim::TaskSpec& task,
                           const sim::SimParams& params, const LabelingContext& labeling,
                           int trials, std::uint64_t eval_seed, bool perturb);

struct CurvePoint {
  int step = 0;
  double success_rate = 0.0;
  double mean_reward = 0.0;
};

// Reset-free fine-tuning loop: alternates forward and backward episodes
// without manual resets, labels each finished episode under the configured
// formulation, trains after every episode, and snapshots evaluation success
// every eval_every steps (snapshot 0 is the pretrained policy).
class OnlineTrainer {
 public:
  OnlineTrainer(ActorCritic agent, ReplayBuffer buffer, sim::TaskPair tasks,
                sim::SimParams sim_params, sim::Projection proj, LabelingContext labeling,
                Hyperparams hyper, std::uint64_t seed);

  void run_until(int step_target);

  int steps_done() const { return steps_done_; }
  const std::vector<CurvePoint>& curve() const { return curve_; }
  const ActorCritic& agent() const { return agent_; }
  const ReplayBuffer& buffer() const { return buffer_; }

  // Versioned JSON checkpoint of everything mutable (weights, optimizer
  // moments, RNG streams, world state, buffer): enough for a bit-exact
  // resume given the same immutable context.
  void save(const std::string& path) const;
  void restore(const std::string& path);

 private:
  void maybe_eval();
  void run_one_episode();

  ActorCritic agent_;
  ReplayBuffer buffer_;
  sim::TaskPair tasks_;
  sim::SimParams sim_params_;
  sim::Projection proj_;
  LabelingContext labeling_;
  Hyperparams hyper_;
  std::uint64_t seed_;

  sim::WorldState world_;
  sim::TaskDirection direction_ = sim::TaskDirection::forward;
  std::uint64_t episode_counter_ = 0;
  int steps_done_ = 0;
  int next_eval_ = 0;
  int stalls_ = 0;
  Rng learner_rng_;
  std::vector<CurvePoint> curve_;
};

}  // namespace waypointrl::learn
