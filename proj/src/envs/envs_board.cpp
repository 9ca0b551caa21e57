// Board games played blind: Minesweeper and Battleship.

#include <algorithm>

#include "psrl/envs.hpp"

namespace psrl::env {

// --------------------------------------------------------------------------
// Minesweeper

Minesweeper::Minesweeper(int rows, int cols, int mines)
    : rows_(rows), cols_(cols), n_mines_(mines) {
  const int cells = rows * cols;
  PSRL_CHECK(mines >= 1 && cells - mines >= 2, "minesweeper: bad mine count");
  spec_.name = "minesweeper";
  spec_.action_cardinality = cells;
  spec_.horizon = cells;
  // adjacent mine count, visited-before flag, mine flag, reward code
  spec_.channel_cardinalities = {9, 2, 2, 3};
  spec_.reward_code_channel = 3;
  spec_.accuracy_channel = 3;
  spec_.accuracy_from = 1;
}

int Minesweeper::adjacent_mines(int cell) const {
  const int r = cell / cols_, c = cell % cols_;
  int n = 0;
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const int rr = r + dr, cc = c + dc;
      if (rr < 0 || rr >= rows_ || cc < 0 || cc >= cols_) continue;
      if (mines_.count(rr * cols_ + cc)) ++n;
    }
  }
  return n;
}

Observation Minesweeper::do_reset() {
  mines_.clear();
  visited_.clear();
  played_.clear();
  while (static_cast<int>(mines_.size()) < n_mines_) {
    mines_.insert(rng_.uniform_int(rows_ * cols_));
  }
  return Observation{{0, 0, 0, 0}, {}};
}

StepResult Minesweeper::do_step(int action) {
  const int safe_cells = rows_ * cols_ - n_mines_;
  StepResult r;
  const bool was_visited = visited_.count(action) > 0;
  const bool is_mine = mines_.count(action) > 0;
  played_.insert(action);
  if (is_mine) {
    r.reward = -1.0;
    r.done = true;
  } else if (was_visited) {
    r.reward = -1.0 / safe_cells;
  } else {
    visited_.insert(action);
    r.reward = 1.0 / safe_cells;
    if (static_cast<int>(visited_.size()) == safe_cells) r.done = true;  // full clear
  }
  r.obs = Observation{{adjacent_mines(action), was_visited ? 1 : 0, is_mine ? 1 : 0,
                       encode_reward_channel(spec_.name, r.reward)},
                      {}};
  return r;
}

int Minesweeper::sample_test_action() {
  PSRL_CHECK(!done_, "minesweeper: sample_test_action() on a finished episode");
  std::vector<int> pool;
  for (int cell = 0; cell < rows_ * cols_; ++cell) {
    if (!played_.count(cell)) pool.push_back(cell);
  }
  if (pool.empty()) return rng_.uniform_int(rows_ * cols_);
  return pool[rng_.uniform_int(static_cast<int>(pool.size()))];
}

// --------------------------------------------------------------------------
// Battleship

Battleship::Battleship(int rows, int cols, std::vector<int> ships)
    : rows_(rows), cols_(cols), ship_lengths_(std::move(ships)) {
  int total = 0;
  for (int s : ship_lengths_) total += s;
  PSRL_CHECK(!ship_lengths_.empty() && total < rows * cols, "battleship: ships do not fit");
  spec_.name = "battleship";
  spec_.action_cardinality = rows * cols;
  spec_.horizon = rows * cols;
  spec_.channel_cardinalities = {2};  // rewarded hit or not
  spec_.reward_code_channel = -1;
  spec_.accuracy_channel = 0;
  spec_.accuracy_from = 1;
}

Observation Battleship::do_reset() {
  ship_cells_.clear();
  fired_.clear();
  hits_ = 0;
  for (int len : ship_lengths_) {
    while (true) {
      const bool horizontal = rng_.bernoulli(0.5);
      const int r = rng_.uniform_int(horizontal ? rows_ : rows_ - len + 1);
      const int c = rng_.uniform_int(horizontal ? cols_ - len + 1 : cols_);
      bool clear = true;
      for (int i = 0; i < len && clear; ++i) {
        clear = !ship_cells_.count(horizontal ? r * cols_ + c + i : (r + i) * cols_ + c);
      }
      if (!clear) continue;
      for (int i = 0; i < len; ++i) {
        ship_cells_.insert(horizontal ? r * cols_ + c + i : (r + i) * cols_ + c);
      }
      break;
    }
  }
  return Observation{{0}, {}};
}

// Episodes always run the full grid-sized horizon. A fresh ship cell pays
// 1/S, a fresh water cell costs 1/(G-S), and a previously targeted cell is
// worth nothing; these are the only magnitudes under which a never-miss
// policy totals exactly 1 while uniform random play without replacement
// totals exactly 0.
StepResult Battleship::do_step(int action) {
  const int total_ship = static_cast<int>(ship_cells_.size());
  const int water = rows_ * cols_ - total_ship;
  StepResult r;
  const bool fresh = !fired_.count(action);
  fired_.insert(action);
  if (fresh && ship_cells_.count(action)) {
    r.reward = 1.0 / total_ship;
    ++hits_;
  } else if (fresh) {
    r.reward = -1.0 / water;
  }
  r.obs = Observation{{r.reward > 0 ? 1 : 0}, {}};
  return r;
}

int Battleship::sample_test_action() {
  PSRL_CHECK(!done_, "battleship: sample_test_action() on a finished episode");
  std::vector<int> pool;
  for (int cell = 0; cell < rows_ * cols_; ++cell) {
    if (!fired_.count(cell)) pool.push_back(cell);
  }
  if (pool.empty()) return rng_.uniform_int(rows_ * cols_);
  return pool[rng_.uniform_int(static_cast<int>(pool.size()))];
}

}  // namespace psrl::env
