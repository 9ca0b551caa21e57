// Card-based memory environments: RepeatPrevious, AutoEncode, Concentration.

#include <algorithm>

#include "psrl/envs.hpp"

namespace psrl::env {

// --------------------------------------------------------------------------
// RepeatPrevious

RepeatPrevious::RepeatPrevious(int k, int suits, int horizon) : k_(k), suits_(suits) {
  PSRL_CHECK(k >= 1 && horizon > k, "repeat_previous: need horizon > k >= 1");
  spec_.name = "repeat_previous";
  spec_.action_cardinality = suits;
  spec_.horizon = horizon;
  spec_.channel_cardinalities = {suits, 3};  // current card, reward code
  spec_.reward_code_channel = 1;
  spec_.accuracy_channel = 1;
  spec_.accuracy_from = k + 1;  // earlier positions encode 0 by construction
  unit_ = 1.0 / static_cast<double>(horizon - k);
}

Observation RepeatPrevious::do_reset() {
  cards_.assign(spec_.horizon, 0);
  for (auto& c : cards_) c = rng_.uniform_int(suits_);
  return Observation{{cards_[0], 0}, {}};
}

StepResult RepeatPrevious::do_step(int action) {
  StepResult r;
  if (t_ >= k_) r.reward = (action == cards_[t_ - k_]) ? unit_ : -unit_;
  const int next = t_ + 1;
  const int card = next < spec_.horizon ? cards_[next] : 0;
  r.obs = Observation{{card, encode_reward_channel(spec_.name, r.reward)}, {}};
  return r;
}

// --------------------------------------------------------------------------
// AutoEncode

AutoEncode::AutoEncode(int cards, int suits) : n_(cards), suits_(suits) {
  PSRL_CHECK(cards >= 1, "autoencode: need at least one card");
  spec_.name = "autoencode";
  spec_.action_cardinality = suits;
  spec_.horizon = 2 * cards;
  // phase, shown card (suits_ means "no card"), reward code
  spec_.channel_cardinalities = {2, suits + 1, 3};
  spec_.reward_code_channel = 2;
  spec_.accuracy_channel = 2;
  spec_.accuracy_from = n_ + 1;
}

Observation AutoEncode::make_obs(int t, int reward_code) {
  const int phase = t < n_ ? 0 : 1;
  const int card = t < n_ ? cards_[t] : suits_;
  return Observation{{phase, card, reward_code}, {}};
}

Observation AutoEncode::do_reset() {
  cards_.assign(n_, 0);
  for (auto& c : cards_) c = rng_.uniform_int(suits_);
  return make_obs(0, 0);
}

StepResult AutoEncode::do_step(int action) {
  StepResult r;
  if (t_ >= n_) {
    // recall in reverse order of presentation
    const int target = cards_[2 * n_ - 1 - t_];
    r.reward = (action == target ? 1.0 : -1.0) / n_;
  }
  r.obs = make_obs(t_ + 1, encode_reward_channel(spec_.name, r.reward));
  return r;
}

// --------------------------------------------------------------------------
// Concentration

Concentration::Concentration(int decks, const std::string& match_rule, int horizon)
    : decks_(decks), n_cards_(52 * decks) {
  PSRL_CHECK(decks >= 1, "concentration: need at least one deck");
  if (match_rule == "rank") {
    match_rule_ = 0;
  } else if (match_rule == "color") {
    match_rule_ = 1;
  } else if (match_rule == "rank_or_color") {
    match_rule_ = 2;
  } else {
    PSRL_CHECK(false, "concentration: unknown match rule '" << match_rule << "'");
  }
  spec_.name = "concentration";
  spec_.action_cardinality = n_cards_;
  spec_.horizon = horizon > 0 ? horizon : 2 * n_cards_;
  // flipped position (+none), flipped card id (+none), second-flip flag, code
  spec_.channel_cardinalities = {n_cards_ + 1, n_cards_ + 1, 2, 3};
  spec_.reward_code_channel = 3;
  spec_.accuracy_channel = 3;
  spec_.accuracy_from = 2;
}

bool Concentration::matches(int card_a, int card_b) const {
  const int rank_a = (card_a % 52) / 4, rank_b = (card_b % 52) / 4;
  const int color_a = card_a % 2, color_b = card_b % 2;
  switch (match_rule_) {
    case 0: return rank_a == rank_b;
    case 1: return color_a == color_b;
    default: return rank_a == rank_b || color_a == color_b;
  }
}

Observation Concentration::do_reset() {
  board_.resize(n_cards_);
  for (int i = 0; i < n_cards_; ++i) board_[i] = i;
  std::shuffle(board_.begin(), board_.end(), rng_.engine());
  matched_.assign(n_cards_, false);
  played_.clear();
  pending_flip_ = -1;
  return Observation{{n_cards_, n_cards_, 0, 0}, {}};
}

StepResult Concentration::do_step(int action) {
  StepResult r;
  const double unit = 2.0 / n_cards_;
  const bool second = pending_flip_ >= 0;
  if (!second) {
    pending_flip_ = action;
  } else {
    const int first = pending_flip_;
    pending_flip_ = -1;
    const bool fresh = !matched_[first] && !matched_[action] && first != action;
    if (fresh && matches(board_[first], board_[action])) {
      matched_[first] = matched_[action] = true;
      r.reward = unit;
    } else {
      r.reward = -unit;
    }
    if (std::all_of(matched_.begin(), matched_.end(), [](bool m) { return m; })) r.done = true;
  }
  played_.insert(action);
  r.obs = Observation{
      {action, board_[action], second ? 1 : 0, encode_reward_channel(spec_.name, r.reward)}, {}};
  return r;
}

int Concentration::sample_test_action() {
  PSRL_CHECK(!done_, "concentration: sample_test_action() on a finished episode");
  if (played_.empty()) return rng_.uniform_int(n_cards_);  // nothing played yet
  std::vector<int> pool(played_.begin(), played_.end());
  return pool[rng_.uniform_int(static_cast<int>(pool.size()))];
}

}  // namespace psrl::env
