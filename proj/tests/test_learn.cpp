#include "waypointrl/agent.hpp"
#include "waypointrl/annotate.hpp"
#include "waypointrl/calibration.hpp"
#include "waypointrl/moka.hpp"
#include "waypointrl/providers.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <functional>

using namespace waypointrl;
using namespace waypointrl::learn;

namespace {

// Everything an experiment run needs, assembled the same way the harness
// does it; shared by the learning tests.
struct RunSetup {
  sim::SimParams sim_params;
  sim::TaskPair tasks;
  geom::GridSpec grid{100, 100, 6, 6, 6};
  sim::Projection proj;
  reward::ViewRegressors regressors;
  reward::RewardParams reward_params;
  reward::SparseClassifier classifier;
  geom::BlockSequence forward_seq;
  geom::BlockSequence backward_seq;

  explicit RunSetup(std::uint64_t seed, reward::Formulation formulation,
                    double classifier_fp = 0.1, double classifier_fn = 0.1)
      : tasks(sim::make_bin_sort({}, sim_params)),
        proj(sim::Projection::orthographic(grid, sim_params, 0.5)),
        regressors(reward::fit_view_regressors(
            reward::make_calibration_pairs(proj, sim_params, 60, 0.25, split_seed(seed, 11)),
            3.0, 200, split_seed(seed, 12))),
        reward_params{0.1, 15.0, grid},
        classifier(4, classifier_fp, classifier_fn, split_seed(seed, 13)),
        forward_seq(make_waypoints(tasks.forward, seed)),
        backward_seq(make_waypoints(tasks.backward, seed)) {
    labeling.topdown = &regressors.topdown;
    labeling.side = &regressors.side;
    labeling.reward_params = reward_params;
    labeling.classifier = &classifier;
    labeling.forward_waypoints = &forward_seq;
    labeling.backward_waypoints = &backward_seq;
    labeling.formulation = formulation;
  }

  geom::BlockSequence make_waypoints(const sim::TaskSpec& task, std::uint64_t seed) {
    const sim::WorldState nominal = sim::reset(task, sim_params, split_seed(seed, 14), false);
    prompt::AnnotationSources sources{task.grasp_object, task.target_marker};
    const auto annotation =
        prompt::build_annotation(nominal, tasks.markers, proj, grid, sources, split_seed(seed, 15));
    return prompt::oracle_waypoints(annotation, task.instruction, 0, 2);
  }

  LabelingContext labeling;
};

Hyperparams test_hyper() {
  Hyperparams h;
  h.offline_steps = 2500;
  h.eval_every = 500;
  h.eval_trials = 10;
  return h;
}

Batch random_batch(int n, int ds, int da, std::uint64_t seed) {
  Rng rng(seed);
  Batch b;
  b.states.resize(ds, n);
  b.actions.resize(da, n);
  b.next_states.resize(ds, n);
  b.rewards.resize(n);
  b.mc_returns.resize(n);
  b.done.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < ds; ++r) {
      b.states(r, i) = rng.uniform(-1, 1);
      b.next_states(r, i) = rng.uniform(-1, 1);
    }
    for (int r = 0; r < da; ++r) b.actions(r, i) = rng.uniform(-1, 1);
    b.rewards(i) = rng.uniform();
    b.mc_returns(i) = rng.uniform(0, 5);
    b.done(i) = rng.uniform() < 0.2 ? 1.0 : 0.0;
  }
  return b;
}

double fd_relative_error(const std::function<double(const Eigen::VectorXd&)>& loss,
                         const Eigen::VectorXd& params, const Eigen::VectorXd& analytic) {
  const double h = 1e-5;
  Eigen::VectorXd fd(params.size());
  Eigen::VectorXd p = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    p(i) = params(i) + h;
    const double up = loss(p);
    p(i) = params(i) - h;
    const double down = loss(p);
    p(i) = params(i);
    fd(i) = (up - down) / (2.0 * h);
  }
  return (fd - analytic).norm() / std::max(fd.norm(), analytic.norm());
}

}  // namespace

TEST_CASE("mlp forward matches simple closed forms") {
  Mlp net({3, 2}, 7);
  net.set_flat_params(Eigen::VectorXd::Zero(net.param_count()));
  Eigen::VectorXd x(3);
  x << 1.0, -2.0, 0.5;
  CHECK(net.forward(x).norm() == 0.0);

  // Identity single linear layer.
  Mlp id({3, 3}, 7);
  Eigen::VectorXd params(id.param_count());
  params.setZero();
  Eigen::Map<Eigen::Matrix3d>(params.data()) = Eigen::Matrix3d::Identity();
  id.set_flat_params(params);
  CHECK((id.forward(x) - x).norm() < 1e-15);
}

TEST_CASE("mlp analytic gradients match central differences") {
  Rng rng(3);
  Mlp net({5, 8, 8, 2}, 19);
  const int n = 6;
  Eigen::MatrixXd X(5, n);
  Eigen::MatrixXd target(2, n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < 5; ++r) X(r, c) = rng.uniform(-1, 1);
    for (int r = 0; r < 2; ++r) target(r, c) = rng.uniform(-1, 1);
  }

  auto loss_at = [&](const Eigen::VectorXd& p) {
    Mlp probe = net;
    probe.set_flat_params(p);
    const Eigen::MatrixXd y = probe.forward(X);
    return 0.5 * (y - target).squaredNorm();
  };

  Mlp::Trace trace;
  const Eigen::MatrixXd y = net.forward(X, trace);
  Mlp::Gradients grads = net.zero_gradients();
  net.backward(trace, y - target, grads);
  const double rel = fd_relative_error(loss_at, net.flat_params(), net.flatten(grads));
  CHECK(rel <= 1e-6);
}

TEST_CASE("replay ring drops the oldest entries past capacity") {
  ReplayBuffer buf(8, 8);
  auto tagged = [](double tag) {
    Transition t;
    t.state = Eigen::VectorXd::Constant(1, tag);
    t.action = Eigen::VectorXd::Zero(1);
    t.next_state = Eigen::VectorXd::Zero(1);
    t.reward = tag;
    return t;
  };
  const int extra = 5;
  for (int i = 0; i < 8 + extra; ++i) buf.push_online(tagged(i));
  CHECK(buf.online_size() == 8);
  // The oldest `extra` tags are gone, everything newer is present.
  std::vector<bool> present(8 + extra, false);
  for (std::size_t i = 0; i < buf.online_size(); ++i)
    present[static_cast<std::size_t>(buf.online_at(i).reward)] = true;
  for (int i = 0; i < extra; ++i) CHECK_FALSE(present[static_cast<std::size_t>(i)]);
  for (int i = extra; i < 8 + extra; ++i) CHECK(present[static_cast<std::size_t>(i)]);

  // Ratio-controlled sampling is deterministic per seed.
  for (int i = 0; i < 4; ++i) buf.push_offline(tagged(100 + i));
  Rng a(5), b(5);
  auto sa = buf.sample(16, 0.5, a);
  auto sb = buf.sample(16, 0.5, b);
  for (std::size_t i = 0; i < sa.size(); ++i) CHECK(sa[i] == sb[i]);
  int offline_picked = 0;
  for (const auto* t : sa) offline_picked += t->reward >= 100 ? 1 : 0;
  CHECK(offline_picked == 8);
}

TEST_CASE("actor and critic gradients pass finite-difference checks") {
  Hyperparams hyper;
  hyper.hidden = 16;
  hyper.conservative_alpha = 0.7;
  const int ds = feature_dim(), da = action_dim();

  for (int mb = 0; mb < 20; ++mb) {
    ActorCritic agent(ds, da, hyper, 500 + static_cast<std::uint64_t>(mb));
    const Batch batch = random_batch(8, ds, da, 900 + static_cast<std::uint64_t>(mb));

    Eigen::VectorXd critic_grad;
    agent.critic_loss_grad(batch, &critic_grad);
    ActorCritic probe = agent;
    auto critic_loss_at = [&](const Eigen::VectorXd& p) {
      probe.mutable_critic().set_flat_params(p);
      return probe.critic_loss_grad(batch, nullptr);
    };
    const double critic_rel =
        fd_relative_error(critic_loss_at, agent.critic().flat_params(), critic_grad);
    CHECK(critic_rel <= 1e-4);

    Eigen::VectorXd actor_grad;
    agent.actor_loss_grad(batch, 0.3, &actor_grad);
    ActorCritic probe2 = agent;
    auto actor_loss_at = [&](const Eigen::VectorXd& p) {
      probe2.mutable_actor().set_flat_params(p);
      return probe2.actor_loss_grad(batch, 0.3, nullptr);
    };
    const double actor_rel =
        fd_relative_error(actor_loss_at, agent.actor().flat_params(), actor_grad);
    CHECK(actor_rel <= 1e-4);
  }
}

TEST_CASE("zero conservative weight reduces to the plain TD objective") {
  Hyperparams hyper;
  hyper.hidden = 16;
  hyper.conservative_alpha = 0.0;
  ActorCritic agent(feature_dim(), action_dim(), hyper, 77);
  const Batch batch = random_batch(16, feature_dim(), action_dim(), 78);

  const double loss = agent.critic_loss_grad(batch, nullptr);

  // Independent TD-only computation from the public pieces.
  const int n = static_cast<int>(batch.rewards.size());
  double expect = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd s2 = batch.next_states.col(i);
    const Eigen::VectorXd a2 = agent.target_policy_mean(s2);
    const double qn = agent.target_q_value(s2, a2);
    const double y = batch.done(i) > 0.5 ? batch.rewards(i) / (1.0 - hyper.gamma)
                                         : batch.rewards(i) + hyper.gamma * qn;
    const double q = agent.q_value(batch.states.col(i), batch.actions.col(i));
    expect += (q - y) * (q - y);
  }
  expect /= n;
  CHECK(loss == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("demo sets honor the requested counts") {
  RunSetup setup(21, reward::Formulation::combined);
  const sim::Projection& proj = setup.proj;

  DemoSet big = generate_demo_episodes(setup.tasks, setup.sim_params, {50, 50, 20}, 0.004, proj, 3);
  CHECK(big.episodes.size() == 120);

  DemoSet reduced =
      generate_demo_episodes(setup.tasks, setup.sim_params, {10, 10, 4}, 0.004, proj, 3);
  CHECK(reduced.episodes.size() == 24);

  int fwd = 0, bwd = 0, failures = 0;
  for (std::size_t i = 0; i < reduced.episodes.size(); ++i) {
    if (!reduced.episodes[i].success) {
      ++failures;
      continue;
    }
    if (reduced.directions[i] == sim::TaskDirection::forward) ++fwd;
    else ++bwd;
  }
  CHECK(fwd == 10);
  CHECK(bwd == 10);
  CHECK(failures == 4);

  DemoSet empty = generate_demo_episodes(setup.tasks, setup.sim_params, {0, 0, 0}, 0.0, proj, 3);
  CHECK(empty.episodes.empty());
  ReplayBuffer empty_buffer =
      build_demo_buffer(empty, setup.tasks, setup.labeling, test_hyper(), setup.sim_params);
  CHECK_THROWS_AS(pretrain_offline(empty_buffer, test_hyper(), 0), std::invalid_argument);
}

TEST_CASE("pretraining is conservative-calibrated and reaches expert-ish success") {
  RunSetup setup(31, reward::Formulation::combined);
  Hyperparams hyper = test_hyper();

  DemoSet demos =
      generate_demo_episodes(setup.tasks, setup.sim_params, {20, 20, 8}, 0.004, setup.proj, 5);
  ReplayBuffer buffer =
      build_demo_buffer(demos, setup.tasks, setup.labeling, hyper, setup.sim_params);
  ActorCritic agent = pretrain_offline(buffer, hyper, 7);

  // Critic estimates sit above return-to-go minus epsilon on most demo states.
  std::size_t ok = 0;
  for (std::size_t i = 0; i < buffer.offline_size(); ++i) {
    const Transition& t = buffer.offline_at(i);
    if (agent.q_value(t.state, t.action) >= t.mc_return - hyper.calibration_epsilon) ++ok;
  }
  CHECK(static_cast<double>(ok) / buffer.offline_size() >= 0.9);

  // Expert terminal states value above failure terminal states.
  double expert_terminal = 0.0, failure_terminal = 0.0;
  int n_expert = 0, n_fail = 0;
  for (std::size_t i = 0; i < demos.episodes.size(); ++i) {
    const sim::Episode& ep = demos.episodes[i];
    const sim::TaskSpec& task = demos.directions[i] == sim::TaskDirection::forward
                                    ? setup.tasks.forward
                                    : setup.tasks.backward;
    const auto& last = ep.frames[ep.frames.size() - 2];
    const double v = agent.q_value(state_features(last.state, task),
                                   action_vector(last.action, setup.sim_params));
    if (ep.success) {
      expert_terminal += v;
      ++n_expert;
    } else {
      failure_terminal += v;
      ++n_fail;
    }
  }
  CHECK(expert_terminal / n_expert > failure_terminal / n_fail);

  const EvalResult eval = evaluate_policy(agent, setup.tasks.forward, setup.sim_params,
                                          setup.labeling, 20, 99, true);
  CHECK(eval.success_rate >= 0.6);
}

TEST_CASE("online fine-tuning is deterministic and resumes bit-exact") {
  RunSetup setup(41, reward::Formulation::combined);
  Hyperparams hyper = test_hyper();
  hyper.offline_steps = 800;

  auto make_trainer = [&]() {
    DemoSet demos =
        generate_demo_episodes(setup.tasks, setup.sim_params, {6, 6, 2}, 0.004, setup.proj, 5);
    ReplayBuffer buffer =
        build_demo_buffer(demos, setup.tasks, setup.labeling, hyper, setup.sim_params);
    ActorCritic agent = pretrain_offline(buffer, hyper, 7);
    return OnlineTrainer(std::move(agent), std::move(buffer), setup.tasks, setup.sim_params,
                         setup.proj, setup.labeling, hyper, 11);
  };

  OnlineTrainer a = make_trainer();
  a.run_until(900);
  OnlineTrainer b = make_trainer();
  b.run_until(900);

  REQUIRE(a.curve().size() == b.curve().size());
  for (std::size_t i = 0; i < a.curve().size(); ++i) {
    CHECK(a.curve()[i].step == b.curve()[i].step);
    CHECK(a.curve()[i].success_rate == b.curve()[i].success_rate);
    CHECK(a.curve()[i].mean_reward == b.curve()[i].mean_reward);
  }
  CHECK(a.agent().actor().flat_params() == b.agent().actor().flat_params());

  // Save mid-run, restore into a fresh trainer, continue: bit-exact.
  const std::string ckpt =
      (std::filesystem::temp_directory_path() / "waypointrl_ckpt.json").string();
  a.save(ckpt);
  a.run_until(1500);

  OnlineTrainer c = make_trainer();
  c.restore(ckpt);
  CHECK(c.steps_done() == b.steps_done());
  c.run_until(1500);

  REQUIRE(c.curve().size() == a.curve().size());
  for (std::size_t i = 0; i < a.curve().size(); ++i)
    CHECK(a.curve()[i].success_rate == c.curve()[i].success_rate);
  CHECK(a.agent().actor().flat_params() == c.agent().actor().flat_params());
  CHECK(a.agent().critic().flat_params() == c.agent().critic().flat_params());
  std::filesystem::remove(ckpt);
}

TEST_CASE("sparse-only runs never touch the dense kernel") {
  RunSetup setup(51, reward::Formulation::sparse_only);
  setup.labeling.forward_waypoints = nullptr;  // sparse-only needs no cache
  setup.labeling.backward_waypoints = nullptr;
  Hyperparams hyper = test_hyper();
  hyper.offline_steps = 300;

  DemoSet demos =
      generate_demo_episodes(setup.tasks, setup.sim_params, {4, 4, 2}, 0.004, setup.proj, 5);

  reward::dense_eval_count().store(0);
  ReplayBuffer buffer =
      build_demo_buffer(demos, setup.tasks, setup.labeling, hyper, setup.sim_params);
  ActorCritic agent = pretrain_offline(buffer, hyper, 7);
  OnlineTrainer trainer(std::move(agent), std::move(buffer), setup.tasks, setup.sim_params,
                        setup.proj, setup.labeling, hyper, 11);
  trainer.run_until(400);
  CHECK(reward::dense_eval_count().load() == 0);

  // Dense formulations fail fast without cached waypoints.
  RunSetup dense(52, reward::Formulation::combined);
  dense.labeling.forward_waypoints = nullptr;
  CHECK_THROWS_AS(dense.labeling.waypoints_for(sim::TaskDirection::forward),
                  std::invalid_argument);
}

TEST_CASE("open-loop executor succeeds precisely and degrades under perturbation") {
  RunSetup setup(61, reward::Formulation::combined);

  // Precise resets: deterministic success.
  int precise_successes = 0;
  for (int trial = 0; trial < 20; ++trial) {
    sim::WorldState start = sim::reset(setup.tasks.forward, setup.sim_params,
                                       split_seed(700, static_cast<std::uint64_t>(trial)), false);
    const auto outcome = open_loop_execute(setup.tasks.forward, setup.sim_params, start,
                                           setup.forward_seq, setup.grid, setup.proj);
    precise_successes += outcome.success ? 1 : 0;
  }
  CHECK(precise_successes == 20);

  // Stale waypoints + object perturbations beyond the grasp radius.
  sim::TaskSpec perturbed_task = setup.tasks.forward;
  perturbed_task.reset_distribution.perturb_radius = 0.09;
  int perturbed_successes = 0;
  for (int trial = 0; trial < 20; ++trial) {
    sim::WorldState start = sim::reset(perturbed_task, setup.sim_params,
                                       split_seed(701, static_cast<std::uint64_t>(trial)), true);
    const auto outcome = open_loop_execute(perturbed_task, setup.sim_params, start,
                                           setup.forward_seq, setup.grid, setup.proj);
    perturbed_successes += outcome.success ? 1 : 0;
  }
  CHECK(precise_successes - perturbed_successes >= 6);  // >= 30 points over 20 trials

  // Unreachable waypoints raise the failure flag.
  sim::Projection shifted = setup.proj;
  shifted.top_offset.x() -= 80.0;  // unprojects far outside the workspace
  sim::WorldState start = sim::reset(setup.tasks.forward, setup.sim_params, 3, false);
  const auto outcome = open_loop_execute(setup.tasks.forward, setup.sim_params, start,
                                         setup.forward_seq, setup.grid, shifted);
  CHECK(outcome.unreachable);
  CHECK_FALSE(outcome.success);
}
