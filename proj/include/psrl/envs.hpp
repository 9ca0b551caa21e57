#pragma once

// Concrete environment classes. Most users go through make_env(); the
// classes are exposed for tests that need ground-truth internals.

#include <set>
#include <utility>

#include "psrl/env.hpp"

namespace psrl::env {

// 7x7 grid, horizon 9. Hidden target; observation = position, a distance
// indicator that is correct with probability 0.9, and a uniform noise scalar.
class GridWorld : public Env {
 public:
  GridWorld();

  int target_x() const { return tx_; }
  int target_y() const { return ty_; }
  int agent_x() const { return ax_; }
  int agent_y() const { return ay_; }
  bool last_indicator_truth() const { return last_truth_; }

 protected:
  Observation do_reset() override;
  StepResult do_step(int action) override;

 private:
  Observation make_obs(int indicator);
  int ax_ = 0, ay_ = 0, tx_ = 0, ty_ = 0;
  bool last_truth_ = false;
};

// Deal a card per step; the action guesses the suit dealt k steps ago.
class RepeatPrevious : public Env {
 public:
  RepeatPrevious(int k, int suits, int horizon);
  int k() const { return k_; }
  const std::vector<int>& cards() const { return cards_; }

 protected:
  Observation do_reset() override;
  StepResult do_step(int action) override;

 private:
  int k_, suits_;
  std::vector<int> cards_;
  double unit_ = 0.0;
};

// WATCH n cards, then PLAY them back in reverse order.
class AutoEncode : public Env {
 public:
  AutoEncode(int cards, int suits = 4);
  const std::vector<int>& cards() const { return cards_; }

 protected:
  Observation do_reset() override;
  StepResult do_step(int action) override;

 private:
  Observation make_obs(int t, int reward_code);
  int n_, suits_;
  std::vector<int> cards_;
};

// Blind minesweeper: choose cells, observe adjacency counts and outcome
// indicators. Ends on a mine or a full clear.
class Minesweeper : public Env {
 public:
  Minesweeper(int rows, int cols, int mines);
  const std::set<int>& mines() const { return mines_; }
  const std::set<int>& visited() const { return visited_; }

 protected:
  Observation do_reset() override;
  StepResult do_step(int action) override;

 public:
  int sample_test_action() override;  // random not-yet-played cell

 private:
  int adjacent_mines(int cell) const;
  int rows_, cols_, n_mines_;
  std::set<int> mines_, visited_, played_;
};

// Flip two cards per pair attempt; matches stay face up.
class Concentration : public Env {
 public:
  Concentration(int decks, const std::string& match_rule, int horizon);
  const std::vector<int>& board() const { return board_; }

 protected:
  Observation do_reset() override;
  StepResult do_step(int action) override;

 public:
  int sample_test_action() override;  // previously played cell, else uniform

 private:
  bool matches(int card_a, int card_b) const;
  int decks_, n_cards_;
  int match_rule_;  // 0 rank, 1 color, 2 rank-or-color
  std::vector<int> board_;
  std::vector<bool> matched_;
  std::set<int> played_;
  int pending_flip_ = -1;  // position of the first card of the current pair
};

// Fire at grid cells; hit/miss is the only observation channel.
class Battleship : public Env {
 public:
  Battleship(int rows, int cols, std::vector<int> ships);
  const std::set<int>& ship_cells() const { return ship_cells_; }
  const std::set<int>& fired() const { return fired_; }

 protected:
  Observation do_reset() override;
  StepResult do_step(int action) override;

 public:
  int sample_test_action() override;  // random not-yet-fired cell

 private:
  int rows_, cols_;
  std::vector<int> ship_lengths_;
  std::set<int> ship_cells_, fired_;
  int hits_ = 0;
};

// Catch with all reward withheld until the episode ends.
class DelayedCatch : public Env {
 public:
  explicit DelayedCatch(int drops);
  double pending_reward() const { return pending_; }

 protected:
  Observation do_reset() override;
  StepResult do_step(int action) override;

 private:
  Observation make_obs(int reward_code) const;
  static constexpr int kSize = 7;
  int drops_, drops_done_ = 0;
  int ball_row_ = 0, ball_col_ = 0, paddle_ = 0;
  double pending_ = 0.0;
};

// Dark 9x9 room: find the invisible key, then the invisible door.
class DarkKeyToDoor : public Env {
 public:
  DarkKeyToDoor();
  std::pair<int, int> key() const { return {kx_, ky_}; }
  std::pair<int, int> door() const { return {dx_, dy_}; }
  bool has_key() const { return has_key_; }

 protected:
  Observation do_reset() override;
  StepResult do_step(int action) override;

 private:
  Observation make_obs(int reward_code) const;
  static constexpr int kSize = 9;
  int ax_ = 0, ay_ = 0, kx_ = 0, ky_ = 0, dx_ = 0, dy_ = 0;
  bool has_key_ = false;
};

}  // namespace psrl::env
