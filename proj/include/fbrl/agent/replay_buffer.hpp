#pragma once

#include <cstddef>
#include <vector>

#include "fbrl/env.hpp"
#include "fbrl/errors.hpp"
#include "fbrl/rng.hpp"

namespace fbrl::agent {

// Replay memory of capacity D split into a protected demonstration prefix and
// a ring of agent transitions (capacity D - |demos|, oldest evicted first).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ArgumentError("replay buffer capacity must be positive");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return demos_.size() + ring_.size(); }
  bool empty() const { return size() == 0; }
  std::size_t demo_count() const { return demos_.size(); }
  std::size_t agent_count() const { return ring_.size(); }
  std::size_t agent_capacity() const { return capacity_ - demos_.size(); }

  // Demonstrations must be loaded before any agent transition.
  void add_demonstrations(std::vector<Transition> demos) {
    if (!ring_.empty()) throw StateError("demonstrations must be added before agent transitions");
    if (demos_.size() + demos.size() > capacity_)
      throw ArgumentError("demonstrations exceed replay buffer capacity");
    for (auto& d : demos) {
      d.is_demo = true;
      demos_.push_back(std::move(d));
    }
  }

  void push(Transition t) {
    if (agent_capacity() == 0) throw StateError("replay buffer has no room for agent transitions");
    t.is_demo = false;
    if (ring_.size() < agent_capacity()) {
      ring_.push_back(std::move(t));
    } else {
      ring_[head_] = std::move(t);
      head_ = (head_ + 1) % ring_.size();
    }
  }

  // Demos first, then agent transitions oldest to newest.
  const Transition& operator[](std::size_t i) const {
    if (i < demos_.size()) return demos_[i];
    i -= demos_.size();
    if (i >= ring_.size()) throw ArgumentError("replay buffer index out of range");
    return ring_[(head_ + i) % ring_.size()];
  }

  const std::vector<Transition>& demonstrations() const { return demos_; }

  // Uniform with replacement.
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const {
    if (empty()) throw StateError("cannot sample from an empty replay buffer");
    std::vector<std::size_t> idx(batch);
    for (auto& i : idx) i = uniform_index(rng, size());
    return idx;
  }

  // Raw ring storage, for checkpointing.
  const std::vector<Transition>& ring_storage() const { return ring_; }
  std::size_t ring_head() const { return head_; }
  void restore_ring(std::vector<Transition> ring, std::size_t head) {
    if (ring.size() > agent_capacity() || (head != 0 && head >= ring.size()))
      throw ArgumentError("invalid ring state");
    ring_ = std::move(ring);
    head_ = head;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> demos_;
  std::vector<Transition> ring_;
  std::size_t head_ = 0;
};

}  // namespace fbrl::agent
