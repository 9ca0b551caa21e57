#pragma once

// Fixed-horizon trajectories and the bounded FIFO replay buffer.

#include <deque>
#include <string>
#include <vector>

#include "psrl/env.hpp"
#include "psrl/rng.hpp"

namespace psrl {

// One padded episode. Position t holds the observation seen before action t,
// the action taken, and the reward it earned. Everything past `length` is
// dummy padding; no loss may depend on it.
struct Trajectory {
  std::vector<env::Observation> obs;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<uint8_t> dones;
  int length = 0;   // steps actually taken; padding fills [length, horizon)
  int test_t = -1;  // marked test-action timestep (may land in padding)

  // All-padding skeleton of the right shape.
  static Trajectory padded(const env::EnvSpec& spec);

  int horizon() const { return static_cast<int>(actions.size()); }
  bool is_padding(int t) const { return t >= length; }
  double total_reward() const;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity_episodes) : capacity_(capacity_episodes) {}

  void push(Trajectory t) {
    if (store_.size() == capacity_) store_.pop_front();  // strictly oldest-first
    store_.push_back(std::move(t));
  }

  const Trajectory& sample(Rng& rng) const {
    PSRL_CHECK(!store_.empty(), "sampling from an empty replay buffer");
    return store_[static_cast<size_t>(rng.uniform_int(static_cast<int>(store_.size())))];
  }

  const Trajectory& at(size_t i) const { return store_[i]; }
  size_t size() const { return store_.size(); }
  size_t capacity() const { return capacity_; }
  bool empty() const { return store_.empty(); }

 private:
  size_t capacity_;
  std::deque<Trajectory> store_;
};

// Record-per-timestep CSV dump:
// episode_id,t,<discrete channels>,<continuous channels>,action,reward,done,
// is_test_action,is_padding
void dump_trajectories_csv(const std::string& path, const env::EnvSpec& spec,
                           const std::vector<Trajectory>& episodes);

}  // namespace psrl
