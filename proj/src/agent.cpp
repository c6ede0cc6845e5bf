#include "waypointrl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace waypointrl::learn {

namespace {

using nlohmann::json;

constexpr int kFeatureDim = 12;
constexpr int kActionDim = 4;
constexpr double kGripperThreshold = 0.5;

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

json mlp_to_json(const Mlp& net) {
  return json{{"sizes", net.layer_sizes()}, {"params", vector_to_json(net.flat_params())}};
}

Mlp mlp_from_json(const json& j) {
  Mlp net(j.at("sizes").get<std::vector<int>>(), 0);
  net.set_flat_params(vector_from_json(j.at("params")));
  return net;
}

json adam_to_json(const Adam& opt) {
  return json{{"t", opt.step_count()},
              {"lr", opt.learning_rate()},
              {"m", vector_to_json(opt.first_moment())},
              {"v", vector_to_json(opt.second_moment())}};
}

Adam adam_from_json(const json& j, int param_count) {
  Adam opt(param_count, j.at("lr").get<double>());
  opt.restore(j.at("t").get<long>(), vector_from_json(j.at("m")), vector_from_json(j.at("v")));
  return opt;
}

}  // namespace

int feature_dim() { return kFeatureDim; }
int action_dim() { return kActionDim; }

Eigen::VectorXd state_features(const sim::WorldState& state, const sim::TaskSpec& task) {
  const sim::ObjectState* obj = state.find_object(task.grasp_object);
  if (obj == nullptr)
    throw std::invalid_argument("state_features: task object \"" + task.grasp_object +
                                "\" missing from state");
  Eigen::VectorXd f(kFeatureDim);
  f.segment<3>(0) = state.effector;
  f(3) = state.gripper == sim::Gripper::closed ? 1.0 : 0.0;
  f.segment<3>(4) = obj->pos;
  f.segment<3>(7) = obj->pos - state.effector;
  f(10) = task.direction == sim::TaskDirection::forward ? 1.0 : 0.0;
  f(11) = task.direction == sim::TaskDirection::backward ? 1.0 : 0.0;
  return f;
}

sim::Action to_env_action(const Eigen::VectorXd& a, const sim::SimParams& params) {
  if (a.size() != kActionDim) throw std::invalid_argument("to_env_action: bad action size");
  sim::Action action;
  action.delta = a.head<3>().cwiseMax(-1.0).cwiseMin(1.0) * params.delta_max;
  if (a(3) > kGripperThreshold)
    action.gripper = sim::GripperCmd::close;
  else if (a(3) < -kGripperThreshold)
    action.gripper = sim::GripperCmd::open;
  else
    action.gripper = sim::GripperCmd::none;
  return action;
}

Eigen::VectorXd action_vector(const sim::Action& action, const sim::SimParams& params) {
  Eigen::VectorXd a(kActionDim);
  a.head<3>() = (action.delta / params.delta_max).cwiseMax(-1.0).cwiseMin(1.0);
  switch (action.gripper) {
    case sim::GripperCmd::close: a(3) = 1.0; break;
    case sim::GripperCmd::open: a(3) = -1.0; break;
    case sim::GripperCmd::none: a(3) = 0.0; break;
  }
  return a;
}

Batch make_batch(const std::vector<const Transition*>& transitions) {
  if (transitions.empty()) throw std::invalid_argument("make_batch: empty batch");
  const int n = static_cast<int>(transitions.size());
  const int ds = static_cast<int>(transitions[0]->state.size());
  const int da = static_cast<int>(transitions[0]->action.size());
  Batch b;
  b.states.resize(ds, n);
  b.actions.resize(da, n);
  b.next_states.resize(ds, n);
  b.rewards.resize(n);
  b.mc_returns.resize(n);
  b.done.resize(n);
  for (int i = 0; i < n; ++i) {
    const Transition& t = *transitions[static_cast<std::size_t>(i)];
    b.states.col(i) = t.state;
    b.actions.col(i) = t.action;
    b.next_states.col(i) = t.next_state;
    b.rewards(i) = t.reward;
    b.mc_returns(i) = t.mc_return;
    b.done(i) = t.done ? 1.0 : 0.0;
  }
  return b;
}

ActorCritic::ActorCritic(int state_dim, int action_dim, const Hyperparams& hyper,
                         std::uint64_t seed)
    : hyper_(hyper),
      actor_({state_dim, hyper.hidden, hyper.hidden, action_dim}, split_seed(seed, 1)),
      critic_({state_dim + action_dim, hyper.hidden, hyper.hidden, 1}, split_seed(seed, 2)),
      actor_target_(actor_),
      critic_target_(critic_),
      actor_opt_(actor_.param_count(), hyper.actor_lr),
      critic_opt_(critic_.param_count(), hyper.critic_lr) {}

Eigen::VectorXd ActorCritic::policy_mean(const Eigen::VectorXd& features) const {
  return actor_.forward(features).array().tanh();
}

Eigen::VectorXd ActorCritic::act(const Eigen::VectorXd& features, bool deterministic,
                                 Rng* rng) const {
  Eigen::VectorXd a = policy_mean(features);
  if (!deterministic) {
    if (rng == nullptr) throw std::invalid_argument("ActorCritic::act: stochastic act needs rng");
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) += rng->normal(0.0, hyper_.exploration_std);
    a = a.cwiseMax(-1.0).cwiseMin(1.0);
  }
  return a;
}

double ActorCritic::q_value(const Eigen::VectorXd& features, const Eigen::VectorXd& action) const {
  Eigen::VectorXd input(features.size() + action.size());
  input << features, action;
  return critic_.forward(input)(0);
}

Eigen::VectorXd ActorCritic::target_policy_mean(const Eigen::VectorXd& features) const {
  return actor_target_.forward(features).array().tanh();
}

double ActorCritic::target_q_value(const Eigen::VectorXd& features,
                                   const Eigen::VectorXd& action) const {
  Eigen::VectorXd input(features.size() + action.size());
  input << features, action;
  return critic_target_.forward(input)(0);
}

double ActorCritic::critic_loss_grad(const Batch& batch, Eigen::VectorXd* grad_out) const {
  const int n = static_cast<int>(batch.rewards.size());
  const int ds = static_cast<int>(batch.states.rows());
  const int da = static_cast<int>(batch.actions.rows());
  const double gamma = hyper_.gamma;

  // TD targets from the target networks (constants for this loss).
  Eigen::MatrixXd next_mean = actor_target_.forward(batch.next_states).array().tanh();
  Eigen::MatrixXd next_input(ds + da, n);
  next_input.topRows(ds) = batch.next_states;
  next_input.bottomRows(da) = next_mean;
  const Eigen::RowVectorXd q_next = critic_target_.forward(next_input);

  Eigen::VectorXd targets(n);
  for (int i = 0; i < n; ++i) {
    // Success is absorbing: the terminal reward repeats forever.
    targets(i) = batch.done(i) > 0.5 ? batch.rewards(i) / (1.0 - gamma)
                                     : batch.rewards(i) + gamma * q_next(i);
  }

  Eigen::MatrixXd data_input(ds + da, n);
  data_input.topRows(ds) = batch.states;
  data_input.bottomRows(da) = batch.actions;
  Mlp::Trace data_trace;
  const Eigen::RowVectorXd q_data = critic_.forward(data_input, data_trace);

  const Eigen::RowVectorXd td_err = q_data - targets.transpose();
  double loss = td_err.array().square().mean();

  Mlp::Gradients grads = critic_.zero_gradients();
  Eigen::MatrixXd dq_data = (2.0 / n) * td_err;

  const double alpha = hyper_.conservative_alpha;
  if (alpha != 0.0) {
    // Conservative penalty: push down policy actions (calibrated so they are
    // never pushed below the observed return-to-go), push up data actions.
    Eigen::MatrixXd pi_mean = actor_.forward(batch.states).array().tanh();
    Eigen::MatrixXd pi_input(ds + da, n);
    pi_input.topRows(ds) = batch.states;
    pi_input.bottomRows(da) = pi_mean;
    Mlp::Trace pi_trace;
    const Eigen::RowVectorXd q_pi = critic_.forward(pi_input, pi_trace);

    double penalty = 0.0;
    Eigen::MatrixXd dq_pi = Eigen::MatrixXd::Zero(1, n);
    for (int i = 0; i < n; ++i) {
      penalty += std::max(q_pi(i), batch.mc_returns(i)) - q_data(i);
      if (q_pi(i) > batch.mc_returns(i)) dq_pi(0, i) = alpha / n;
    }
    loss += alpha * penalty / n;
    dq_data.array() -= alpha / n;
    critic_.backward(pi_trace, dq_pi, grads);
  }

  critic_.backward(data_trace, dq_data, grads);
  if (grad_out != nullptr) *grad_out = critic_.flatten(grads);
  return loss;
}

double ActorCritic::actor_loss_grad(const Batch& batch, double bc_weight,
                                    Eigen::VectorXd* grad_out) const {
  const int n = static_cast<int>(batch.rewards.size());
  const int ds = static_cast<int>(batch.states.rows());
  const int da = static_cast<int>(batch.actions.rows());

  Mlp::Trace actor_trace;
  const Eigen::MatrixXd pre = actor_.forward(batch.states, actor_trace);
  const Eigen::MatrixXd mean = pre.array().tanh();

  Eigen::MatrixXd critic_input(ds + da, n);
  critic_input.topRows(ds) = batch.states;
  critic_input.bottomRows(da) = mean;
  Mlp::Trace critic_trace;
  const Eigen::RowVectorXd q = critic_.forward(critic_input, critic_trace);

  // Q values live on the absorbing scale 1/(1-gamma); scaling them back to
  // per-step units keeps the Q term commensurate with the BC term.
  const double q_scale = 1.0 - hyper_.gamma;
  const Eigen::MatrixXd bc_diff = mean - batch.actions;
  const double loss = -q_scale * q.mean() + bc_weight * bc_diff.array().square().sum() / n;

  // dL/d(mean): the critic path needs input gradients; its parameter
  // gradients are discarded.
  Mlp::Gradients scratch = critic_.zero_gradients();
  Eigen::MatrixXd d_input;
  const Eigen::MatrixXd dq = Eigen::MatrixXd::Constant(1, n, -q_scale / n);
  critic_.backward(critic_trace, dq, scratch, &d_input);
  Eigen::MatrixXd d_mean = d_input.bottomRows(da);
  d_mean += (2.0 * bc_weight / n) * bc_diff;

  // Through the output tanh.
  const Eigen::MatrixXd d_pre = d_mean.array() * (1.0 - mean.array().square());

  Mlp::Gradients grads = actor_.zero_gradients();
  actor_.backward(actor_trace, d_pre, grads);
  if (grad_out != nullptr) *grad_out = actor_.flatten(grads);
  return loss;
}

ActorCritic::StepLosses ActorCritic::train_step(const Batch& batch, double bc_weight) {
  StepLosses losses;

  Eigen::VectorXd critic_grad;
  losses.critic = critic_loss_grad(batch, &critic_grad);
  Eigen::VectorXd critic_params = critic_.flat_params();
  critic_opt_.update(critic_params, critic_grad);
  critic_.set_flat_params(critic_params);

  Eigen::VectorXd actor_grad;
  losses.actor = actor_loss_grad(batch, bc_weight, &actor_grad);
  Eigen::VectorXd actor_params = actor_.flat_params();
  actor_opt_.update(actor_params, actor_grad);
  actor_.set_flat_params(actor_params);

  polyak_update();
  return losses;
}

void ActorCritic::polyak_update() {
  const double tau = hyper_.tau;
  actor_target_.set_flat_params((1.0 - tau) * actor_target_.flat_params() +
                                tau * actor_.flat_params());
  critic_target_.set_flat_params((1.0 - tau) * critic_target_.flat_params() +
                                 tau * critic_.flat_params());
}

std::string ActorCritic::to_json() const {
  json j{{"actor", mlp_to_json(actor_)},
         {"critic", mlp_to_json(critic_)},
         {"actor_target", mlp_to_json(actor_target_)},
         {"critic_target", mlp_to_json(critic_target_)},
         {"adam_actor", adam_to_json(actor_opt_)},
         {"adam_critic", adam_to_json(critic_opt_)},
         {"gamma", hyper_.gamma},
         {"hidden", hyper_.hidden},
         {"exploration_std", hyper_.exploration_std},
         {"conservative_alpha", hyper_.conservative_alpha},
         {"tau", hyper_.tau}};
  return j.dump();
}

ActorCritic ActorCritic::from_json(const std::string& text) {
  const json j = json::parse(text);
  ActorCritic agent;
  agent.actor_ = mlp_from_json(j.at("actor"));
  agent.critic_ = mlp_from_json(j.at("critic"));
  agent.actor_target_ = mlp_from_json(j.at("actor_target"));
  agent.critic_target_ = mlp_from_json(j.at("critic_target"));
  agent.actor_opt_ = adam_from_json(j.at("adam_actor"), agent.actor_.param_count());
  agent.critic_opt_ = adam_from_json(j.at("adam_critic"), agent.critic_.param_count());
  agent.hyper_.gamma = j.at("gamma").get<double>();
  agent.hyper_.hidden = j.at("hidden").get<int>();
  agent.hyper_.exploration_std = j.at("exploration_std").get<double>();
  agent.hyper_.conservative_alpha = j.at("conservative_alpha").get<double>();
  agent.hyper_.tau = j.at("tau").get<double>();
  return agent;
}

const geom::BlockSequence* LabelingContext::waypoints_for(sim::TaskDirection direction) const {
  const geom::BlockSequence* seq =
      direction == sim::TaskDirection::forward ? forward_waypoints : backward_waypoints;
  if (formulation != reward::Formulation::sparse_only && seq == nullptr)
    throw std::invalid_argument("labeling: formulation needs cached waypoints for this task");
  return seq;
}

std::vector<reward::LabeledFrame> label_with_context(const sim::Episode& episode,
                                                     sim::TaskDirection direction,
                                                     const LabelingContext& labeling) {
  if (labeling.topdown == nullptr || labeling.side == nullptr || labeling.classifier == nullptr)
    throw std::invalid_argument("labeling: regressors and classifier must be configured");
  return reward::label_episode(episode, labeling.waypoints_for(direction), *labeling.topdown,
                               *labeling.side, labeling.reward_params, *labeling.classifier,
                               labeling.formulation);
}

void append_labeled_episode(ReplayBuffer& buffer, const sim::Episode& episode,
                            const sim::TaskSpec& task,
                            const std::vector<reward::LabeledFrame>& labels,
                            const Hyperparams& hyper, const sim::SimParams& params,
                            bool offline) {
  if (labels.size() != episode.frames.size())
    throw std::invalid_argument("append_labeled_episode: label/frame count mismatch");
  if (episode.frames.size() < 2) return;  // no transitions

  const int n = static_cast<int>(episode.frames.size()) - 1;
  std::vector<Transition> transitions(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Transition& t = transitions[static_cast<std::size_t>(i)];
    t.state = state_features(episode.frames[static_cast<std::size_t>(i)].state, task);
    t.action = action_vector(episode.frames[static_cast<std::size_t>(i)].action, params);
    t.next_state = state_features(episode.frames[static_cast<std::size_t>(i) + 1].state, task);
    t.reward = labels[static_cast<std::size_t>(i) + 1].r;
    t.done = episode.frames[static_cast<std::size_t>(i) + 1].success;
  }
  // Return-to-go under the absorbing-success convention.
  double g = transitions[static_cast<std::size_t>(n - 1)].done
                 ? transitions[static_cast<std::size_t>(n - 1)].reward / (1.0 - hyper.gamma)
                 : transitions[static_cast<std::size_t>(n - 1)].reward;
  transitions[static_cast<std::size_t>(n - 1)].mc_return = g;
  for (int i = n - 2; i >= 0; --i) {
    g = transitions[static_cast<std::size_t>(i)].reward + hyper.gamma * g;
    transitions[static_cast<std::size_t>(i)].mc_return = g;
  }
  for (auto& t : transitions) {
    if (offline)
      buffer.push_offline(std::move(t));
    else
      buffer.push_online(std::move(t));
  }
}

DemoSet generate_demo_episodes(const sim::TaskPair& tasks, const sim::SimParams& params,
                               const DemoCounts& counts, double expert_noise,
                               const sim::Projection& proj, std::uint64_t seed) {
  if (counts.forward < 0 || counts.backward < 0 || counts.failure < 0)
    throw std::invalid_argument("generate_demo_episodes: counts must be >= 0");

  DemoSet out;
  std::uint64_t episode_id = 1;

  auto expert_success = [&](const sim::TaskSpec& task, std::uint64_t demo_seed,
                            std::uint64_t id) {
    for (int attempt = 0; attempt < 32; ++attempt) {
      const std::uint64_t s = split_seed(demo_seed, static_cast<std::uint64_t>(attempt));
      sim::WorldState start = sim::reset(task, params, split_seed(s, 1), true);
      Rng noise(split_seed(s, 2));
      Rng proj_rng(split_seed(s, 3));
      sim::Episode ep = sim::rollout(
          task, params, start,
          [&](const sim::WorldState& state, int) {
            return sim::scripted_expert(task, state, params, expert_noise, &noise).action;
          },
          id, &proj, &proj_rng);
      if (ep.success) return ep;
    }
    throw std::runtime_error("generate_demo_episodes: expert failed to produce a success");
  };

  for (int i = 0; i < std::max(counts.forward, counts.backward); ++i) {
    if (i < counts.forward) {
      out.episodes.push_back(
          expert_success(tasks.forward, split_seed(seed, 100 + static_cast<std::uint64_t>(i)),
                         episode_id++));
      out.directions.push_back(sim::TaskDirection::forward);
    }
    if (i < counts.backward) {
      out.episodes.push_back(
          expert_success(tasks.backward, split_seed(seed, 200 + static_cast<std::uint64_t>(i)),
                         episode_id++));
      out.directions.push_back(sim::TaskDirection::backward);
    }
  }

  for (int i = 0; i < counts.failure; ++i) {
    const bool forward = i % 2 == 0;
    const sim::TaskSpec& task = forward ? tasks.forward : tasks.backward;
    const sim::FailureMode mode =
        i % 4 == 3 ? sim::FailureMode::truncated_expert : sim::FailureMode::random_policy;
    Rng proj_rng(split_seed(seed, 400 + static_cast<std::uint64_t>(i)));
    out.episodes.push_back(sim::generate_failure(
        task, params, split_seed(seed, 300 + static_cast<std::uint64_t>(i)), episode_id++, mode,
        &proj, &proj_rng));
    out.directions.push_back(forward ? sim::TaskDirection::forward
                                     : sim::TaskDirection::backward);
  }
  return out;
}

ReplayBuffer build_demo_buffer(const DemoSet& demos, const sim::TaskPair& tasks,
                               const LabelingContext& labeling, const Hyperparams& hyper,
                               const sim::SimParams& params) {
  std::size_t total = 0;
  for (const auto& ep : demos.episodes) total += ep.frames.size();
  ReplayBuffer buffer(std::max<std::size_t>(total, 1), hyper.online_capacity);
  for (std::size_t i = 0; i < demos.episodes.size(); ++i) {
    const sim::TaskDirection dir = demos.directions[i];
    const sim::TaskSpec& task =
        dir == sim::TaskDirection::forward ? tasks.forward : tasks.backward;
    const auto labels = label_with_context(demos.episodes[i], dir, labeling);
    append_labeled_episode(buffer, demos.episodes[i], task, labels, hyper, params, true);
  }
  return buffer;
}

ActorCritic pretrain_offline(const ReplayBuffer& buffer, const Hyperparams& hyper,
                             std::uint64_t seed) {
  if (buffer.offline_size() == 0)
    throw std::invalid_argument("pretrain_offline: empty offline buffer");
  ActorCritic agent(feature_dim(), action_dim(), hyper, split_seed(seed, 1));
  Rng rng(split_seed(seed, 2));
  for (int step = 0; step < hyper.offline_steps; ++step) {
    const Batch batch = make_batch(buffer.sample(hyper.batch_size, 1.0, rng));
    agent.train_step(batch, hyper.bc_weight_offline);
  }
  return agent;
}

EvalResult evaluate_policy(const ActorCritic& agent, const sim::TaskSpec& task,
                           const sim::SimParams& params, const LabelingContext& labeling,
                           int trials, std::uint64_t eval_seed, bool perturb) {
  if (trials < 1) throw std::invalid_argument("evaluate_policy: trials must be >= 1");
  const reward::SparseClassifier noiseless(labeling.classifier != nullptr
                                               ? labeling.classifier->k_prompts()
                                               : 4,
                                           0.0, 0.0, 0);
  LabelingContext eval_labeling = labeling;
  eval_labeling.classifier = &noiseless;

  int successes = 0;
  double reward_sum = 0.0;
  long frame_count = 0;
  for (int trial = 0; trial < trials; ++trial) {
    sim::WorldState start =
        sim::reset(task, params, split_seed(eval_seed, static_cast<std::uint64_t>(trial)),
                   perturb);
    sim::Episode ep = sim::rollout(
        task, params, start,
        [&](const sim::WorldState& s, int) {
          return to_env_action(agent.act(state_features(s, task), true, nullptr), params);
        },
        900000 + static_cast<std::uint64_t>(trial));
    successes += ep.success ? 1 : 0;
    const auto labels = label_with_context(ep, task.direction, eval_labeling);
    for (const auto& l : labels) reward_sum += l.r;
    frame_count += static_cast<long>(labels.size());
  }
  EvalResult result;
  result.success_rate = static_cast<double>(successes) / trials;
  result.mean_reward = frame_count > 0 ? reward_sum / static_cast<double>(frame_count) : 0.0;
  return result;
}

OnlineTrainer::OnlineTrainer(ActorCritic agent, ReplayBuffer buffer, sim::TaskPair tasks,
                             sim::SimParams sim_params, sim::Projection proj,
                             LabelingContext labeling, Hyperparams hyper, std::uint64_t seed)
    : agent_(std::move(agent)),
      buffer_(std::move(buffer)),
      tasks_(std::move(tasks)),
      sim_params_(sim_params),
      proj_(proj),
      labeling_(labeling),
      hyper_(hyper),
      seed_(seed),
      learner_rng_(split_seed(seed, 1)) {
  world_ = sim::reset(tasks_.forward, sim_params_, split_seed(seed, 2), false);
}

void OnlineTrainer::maybe_eval() {
  while (next_eval_ <= steps_done_) {
    const EvalResult eval =
        evaluate_policy(agent_, tasks_.forward, sim_params_, labeling_, hyper_.eval_trials,
                        split_seed(seed_, 3), true);
    curve_.push_back({next_eval_, eval.success_rate, eval.mean_reward});
    next_eval_ += hyper_.eval_every;
  }
}

void OnlineTrainer::run_one_episode() {
  const sim::TaskSpec& task =
      direction_ == sim::TaskDirection::forward ? tasks_.forward : tasks_.backward;
  const std::uint64_t episode_id = 1000000 + episode_counter_++;
  Rng proj_rng(split_seed(seed_, 100000 + episode_id));

  sim::Episode episode = sim::rollout(
      task, sim_params_, sim::begin_episode(world_),
      [&](const sim::WorldState& s, int) {
        return to_env_action(agent_.act(state_features(s, task), false, &learner_rng_),
                             sim_params_);
      },
      episode_id, &proj_, &proj_rng);

  world_ = episode.frames.back().state;
  direction_ = direction_ == sim::TaskDirection::forward ? sim::TaskDirection::backward
                                                         : sim::TaskDirection::forward;

  const int n_transitions = static_cast<int>(episode.frames.size()) - 1;
  if (n_transitions <= 0) {
    // The other task's success state: switch immediately; after repeated
    // stalls fall back to a perturbed reset to keep practicing.
    if (++stalls_ >= 2) {
      world_ = sim::reset(tasks_.forward, sim_params_, split_seed(seed_, 50000 + episode_counter_), true);
      direction_ = sim::TaskDirection::forward;
      stalls_ = 0;
    }
    return;
  }
  stalls_ = 0;

  const auto labels = label_with_context(episode, task.direction, labeling_);
  append_labeled_episode(buffer_, episode, task, labels, hyper_, sim_params_, false);

  for (int k = 0; k < n_transitions * hyper_.updates_per_step; ++k) {
    const Batch batch =
        make_batch(buffer_.sample(hyper_.batch_size, hyper_.offline_fraction, learner_rng_));
    agent_.train_step(batch, hyper_.bc_weight_online);
  }
  steps_done_ += n_transitions;
}

void OnlineTrainer::run_until(int step_target) {
  maybe_eval();  // snapshot 0 covers the pretrained policy
  while (steps_done_ < step_target) {
    run_one_episode();
    maybe_eval();
  }
}

void OnlineTrainer::save(const std::string& path) const {
  json world{{"effector", {world_.effector.x(), world_.effector.y(), world_.effector.z()}},
             {"gripper", world_.gripper == sim::Gripper::closed ? "closed" : "open"},
             {"step_count", world_.step_count}};
  json objects = json::array();
  for (const auto& o : world_.objects)
    objects.push_back({{"id", o.id}, {"pos", {o.pos.x(), o.pos.y(), o.pos.z()}}, {"held", o.held}});
  world["objects"] = objects;

  auto dump_transition = [](const Transition& t) {
    return json{{"s", vector_to_json(t.state)},       {"a", vector_to_json(t.action)},
                {"r", t.reward},                       {"s2", vector_to_json(t.next_state)},
                {"done", t.done},                      {"mc", t.mc_return}};
  };
  json offline_items = json::array();
  for (std::size_t i = 0; i < buffer_.offline_size(); ++i)
    offline_items.push_back(dump_transition(buffer_.offline_at(i)));
  json online_items = json::array();
  for (std::size_t i = 0; i < buffer_.online_size(); ++i)
    online_items.push_back(dump_transition(buffer_.online_at(i)));
  const json buffer{{"offline_capacity", buffer_.offline_capacity()},
                    {"online_capacity", buffer_.online_capacity()},
                    {"offline_head", buffer_.offline_head()},
                    {"online_head", buffer_.online_head()},
                    {"offline", offline_items},
                    {"online", online_items}};

  json curve = json::array();
  for (const auto& p : curve_)
    curve.push_back({{"step", p.step}, {"success", p.success_rate}, {"reward", p.mean_reward}});

  const json j{{"version", 1},
               {"steps_done", steps_done_},
               {"next_eval", next_eval_},
               {"episode_counter", episode_counter_},
               {"stalls", stalls_},
               {"direction", direction_ == sim::TaskDirection::forward ? "forward" : "backward"},
               {"world", world},
               {"learner_rng", learner_rng_.state()},
               {"agent", json::parse(agent_.to_json())},
               {"buffer", buffer},
               {"curve", curve}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump();
}

void OnlineTrainer::restore(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  const json j = json::parse(in);
  if (j.at("version").get<int>() != 1)
    throw std::runtime_error("checkpoint: unsupported version");

  steps_done_ = j.at("steps_done").get<int>();
  next_eval_ = j.at("next_eval").get<int>();
  episode_counter_ = j.at("episode_counter").get<std::uint64_t>();
  stalls_ = j.at("stalls").get<int>();
  direction_ = j.at("direction").get<std::string>() == "forward" ? sim::TaskDirection::forward
                                                                 : sim::TaskDirection::backward;

  const json& world = j.at("world");
  world_.effector = {world.at("effector")[0].get<double>(), world.at("effector")[1].get<double>(),
                     world.at("effector")[2].get<double>()};
  world_.gripper =
      world.at("gripper").get<std::string>() == "closed" ? sim::Gripper::closed : sim::Gripper::open;
  world_.step_count = world.at("step_count").get<int>();
  world_.objects.clear();
  for (const auto& o : world.at("objects"))
    world_.objects.push_back({o.at("id").get<std::string>(),
                              {o.at("pos")[0].get<double>(), o.at("pos")[1].get<double>(),
                               o.at("pos")[2].get<double>()},
                              o.at("held").get<bool>()});

  learner_rng_.set_state(j.at("learner_rng").get<std::string>());

  Hyperparams hyper = agent_.hyper();  // immutable config fields survive
  ActorCritic restored = ActorCritic::from_json(j.at("agent").dump());
  restored.hyper_ = hyper;
  agent_ = std::move(restored);

  const json& buf = j.at("buffer");
  auto load_transition = [](const json& t) {
    Transition tr;
    tr.state = vector_from_json(t.at("s"));
    tr.action = vector_from_json(t.at("a"));
    tr.reward = t.at("r").get<double>();
    tr.next_state = vector_from_json(t.at("s2"));
    tr.done = t.at("done").get<bool>();
    tr.mc_return = t.at("mc").get<double>();
    return tr;
  };
  std::vector<Transition> offline_items, online_items;
  for (const auto& t : buf.at("offline")) offline_items.push_back(load_transition(t));
  for (const auto& t : buf.at("online")) online_items.push_back(load_transition(t));
  buffer_ = ReplayBuffer::reinstate(
      buf.at("offline_capacity").get<std::size_t>(), buf.at("online_capacity").get<std::size_t>(),
      std::move(offline_items), std::move(online_items), buf.at("offline_head").get<std::size_t>(),
      buf.at("online_head").get<std::size_t>());

  curve_.clear();
  for (const auto& p : j.at("curve"))
    curve_.push_back({p.at("step").get<int>(), p.at("success").get<double>(),
                      p.at("reward").get<double>()});
}

}  // namespace waypointrl::learn
