// GridWorld, Delayed Catch and Dark Key-to-Door.

#include <cstdlib>

#include "psrl/envs.hpp"

namespace psrl::env {

namespace {
constexpr int kDx[4] = {0, 0, -1, 1};
constexpr int kDy[4] = {-1, 1, 0, 0};
}  // namespace

// --------------------------------------------------------------------------
// GridWorld

GridWorld::GridWorld() {
  spec_.name = "gridworld";
  spec_.action_cardinality = 4;
  spec_.horizon = 9;
  spec_.channel_cardinalities = {7, 7, 2};  // x, y, distance indicator
  spec_.continuous_ranges = {{0.0f, 1.0f}};
  spec_.reward_code_channel = -1;
  spec_.accuracy_channel = 2;
  spec_.accuracy_from = 1;
}

Observation GridWorld::make_obs(int indicator) {
  Observation o;
  o.discrete = {ax_, ay_, indicator};
  o.continuous = {static_cast<float>(rng_.uniform())};
  return o;
}

Observation GridWorld::do_reset() {
  ax_ = rng_.uniform_int(7);
  ay_ = rng_.uniform_int(7);
  do {
    tx_ = rng_.uniform_int(7);
    ty_ = rng_.uniform_int(7);
  } while (tx_ == ax_ && ty_ == ay_);
  last_truth_ = false;
  return make_obs(0);
}

StepResult GridWorld::do_step(int action) {
  const int before = std::abs(ax_ - tx_) + std::abs(ay_ - ty_);
  ax_ = std::clamp(ax_ + kDx[action], 0, 6);
  ay_ = std::clamp(ay_ + kDy[action], 0, 6);
  const int after = std::abs(ax_ - tx_) + std::abs(ay_ - ty_);
  last_truth_ = after < before;
  int indicator = last_truth_ ? 1 : 0;
  if (rng_.bernoulli(0.1)) indicator = 1 - indicator;  // correct with p = 0.9

  StepResult r;
  if (ax_ == tx_ && ay_ == ty_) {
    r.reward = 1.0;
    r.done = true;
  }
  r.obs = make_obs(indicator);
  return r;
}

// --------------------------------------------------------------------------
// Delayed Catch

DelayedCatch::DelayedCatch(int drops) : drops_(drops) {
  PSRL_CHECK(drops >= 1, "delayed_catch: needs at least one drop");
  spec_.name = "delayed_catch";
  spec_.action_cardinality = 3;  // left, stay, right
  spec_.horizon = (kSize - 1) * drops;
  spec_.channel_cardinalities = {kSize, kSize, kSize, 3};  // ball row, ball col, paddle, code
  spec_.reward_code_channel = 3;
  spec_.accuracy_channel = 0;
  spec_.accuracy_from = 1;
}

Observation DelayedCatch::make_obs(int reward_code) const {
  Observation o;
  o.discrete = {ball_row_, ball_col_, paddle_, reward_code};
  return o;
}

Observation DelayedCatch::do_reset() {
  drops_done_ = 0;
  pending_ = 0.0;
  paddle_ = kSize / 2;
  ball_row_ = 0;
  ball_col_ = rng_.uniform_int(kSize);
  return make_obs(0);
}

StepResult DelayedCatch::do_step(int action) {
  paddle_ = std::clamp(paddle_ + (action - 1), 0, kSize - 1);
  ball_row_ += 1;
  StepResult r;
  if (ball_row_ == kSize - 1) {
    pending_ += (ball_col_ == paddle_) ? 1.0 : -1.0;
    ++drops_done_;
    if (drops_done_ >= drops_) {
      r.reward = pending_;  // withheld reward released at the end
      r.done = true;
    } else {
      ball_row_ = 0;
      ball_col_ = rng_.uniform_int(kSize);
    }
  }
  r.obs = make_obs(encode_reward_channel(spec_.name, r.reward));
  return r;
}

// --------------------------------------------------------------------------
// Dark Key-to-Door

DarkKeyToDoor::DarkKeyToDoor() {
  spec_.name = "dark_key_to_door";
  spec_.action_cardinality = 4;
  spec_.horizon = 50;
  spec_.channel_cardinalities = {kSize, kSize, 3};
  spec_.reward_code_channel = 2;
  spec_.accuracy_channel = 2;
  spec_.accuracy_from = 1;
}

Observation DarkKeyToDoor::make_obs(int reward_code) const {
  Observation o;
  o.discrete = {ax_, ay_, reward_code};
  return o;
}

Observation DarkKeyToDoor::do_reset() {
  auto cell = [&] { return std::pair<int, int>{rng_.uniform_int(kSize), rng_.uniform_int(kSize)}; };
  std::tie(ax_, ay_) = cell();
  do {
    std::tie(kx_, ky_) = cell();
  } while (kx_ == ax_ && ky_ == ay_);
  do {
    std::tie(dx_, dy_) = cell();
  } while ((dx_ == ax_ && dy_ == ay_) || (dx_ == kx_ && dy_ == ky_));
  has_key_ = false;
  return make_obs(0);
}

StepResult DarkKeyToDoor::do_step(int action) {
  ax_ = std::clamp(ax_ + kDx[action], 0, kSize - 1);
  ay_ = std::clamp(ay_ + kDy[action], 0, kSize - 1);
  StepResult r;
  if (!has_key_ && ax_ == kx_ && ay_ == ky_) {
    has_key_ = true;
    r.reward = 1.0;
  } else if (has_key_ && ax_ == dx_ && ay_ == dy_) {
    r.reward = 1.0;
    r.done = true;  // door opened with the key in hand
  }
  r.obs = make_obs(encode_reward_channel(spec_.name, r.reward));
  return r;
}

}  // namespace psrl::env
