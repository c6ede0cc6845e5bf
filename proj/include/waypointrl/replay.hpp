#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "waypointrl/rng.hpp"

namespace waypointrl::learn {

struct Transition {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  // Absorbing success termination; horizon truncations keep done = false so
  // the critic bootstraps through them.
  bool done = false;
  // Discounted return-to-go under the same absorbing semantics; calibrates
  // the conservative critic penalty.
  double mc_return = 0.0;
};

// Two ring partitions (offline demonstrations, online experience) with
// ratio-controlled uniform sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t offline_capacity, std::size_t online_capacity);

  void push_offline(Transition t) { push(offline_, offline_head_, offline_capacity_, std::move(t)); }
  void push_online(Transition t) { push(online_, online_head_, online_capacity_, std::move(t)); }

  std::size_t offline_size() const { return offline_.size(); }
  std::size_t online_size() const { return online_.size(); }
  std::size_t size() const { return offline_.size() + online_.size(); }

  const Transition& offline_at(std::size_t i) const { return offline_[i]; }
  const Transition& online_at(std::size_t i) const { return online_[i]; }

  // `offline_fraction` of the batch comes from the offline partition; an
  // empty partition cedes its share to the other.
  std::vector<const Transition*> sample(int n, double offline_fraction, Rng& rng) const;

  std::size_t offline_capacity() const { return offline_capacity_; }
  std::size_t online_capacity() const { return online_capacity_; }
  std::size_t offline_head() const { return offline_head_; }
  std::size_t online_head() const { return online_head_; }

  // Reinstates the exact ring state (storage order plus heads); checkpoints.
  static ReplayBuffer reinstate(std::size_t offline_capacity, std::size_t online_capacity,
                                std::vector<Transition> offline, std::vector<Transition> online,
                                std::size_t offline_head, std::size_t online_head);

 private:
  static void push(std::vector<Transition>& store, std::size_t& head, std::size_t capacity,
                   Transition t);

  std::size_t offline_capacity_;
  std::size_t online_capacity_;
  std::vector<Transition> offline_, online_;
  std::size_t offline_head_ = 0, online_head_ = 0;
};

}  // namespace waypointrl::learn
