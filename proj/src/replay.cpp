#include "waypointrl/replay.hpp"

#include <stdexcept>

namespace waypointrl::learn {

ReplayBuffer::ReplayBuffer(std::size_t offline_capacity, std::size_t online_capacity)
    : offline_capacity_(offline_capacity), online_capacity_(online_capacity) {
  if (offline_capacity == 0 && online_capacity == 0)
    throw std::invalid_argument("ReplayBuffer: zero total capacity");
}

void ReplayBuffer::push(std::vector<Transition>& store, std::size_t& head, std::size_t capacity,
                        Transition t) {
  if (capacity == 0) throw std::logic_error("ReplayBuffer: partition has zero capacity");
  if (store.size() < capacity) {
    store.push_back(std::move(t));
    return;
  }
  store[head] = std::move(t);  // overwrite the oldest entry
  head = (head + 1) % capacity;
}

ReplayBuffer ReplayBuffer::reinstate(std::size_t offline_capacity, std::size_t online_capacity,
                                     std::vector<Transition> offline,
                                     std::vector<Transition> online, std::size_t offline_head,
                                     std::size_t online_head) {
  if (offline.size() > offline_capacity || online.size() > online_capacity)
    throw std::invalid_argument("ReplayBuffer::reinstate: contents exceed capacity");
  ReplayBuffer buf(offline_capacity, online_capacity);
  buf.offline_ = std::move(offline);
  buf.online_ = std::move(online);
  buf.offline_head_ = offline_head;
  buf.online_head_ = online_head;
  return buf;
}

std::vector<const Transition*> ReplayBuffer::sample(int n, double offline_fraction,
                                                    Rng& rng) const {
  if (n < 1) throw std::invalid_argument("ReplayBuffer::sample: n must be >= 1");
  if (offline_.empty() && online_.empty())
    throw std::logic_error("ReplayBuffer::sample: buffer is empty");

  int from_offline = static_cast<int>(offline_fraction * n + 0.5);
  if (offline_.empty()) from_offline = 0;
  if (online_.empty()) from_offline = n;

  std::vector<const Transition*> batch;
  batch.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < from_offline; ++i)
    batch.push_back(&offline_[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(offline_.size()) - 1))]);
  for (int i = from_offline; i < n; ++i)
    batch.push_back(&online_[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(online_.size()) - 1))]);
  return batch;
}

}  // namespace waypointrl::learn
