#include "psrl/env.hpp"

#include <algorithm>
#include <cmath>

#include "psrl/envs.hpp"

namespace psrl::env {

std::vector<std::string> env_names() {
  return {"gridworld",     "repeat_previous", "autoencode",    "minesweeper",
          "concentration", "battleship",      "delayed_catch", "dark_key_to_door"};
}

std::unique_ptr<Env> make_env(const std::string& name, const EnvParams& p) {
  if (name == "gridworld") return std::make_unique<GridWorld>();
  if (name == "repeat_previous")
    return std::make_unique<RepeatPrevious>(p.rp_k, p.rp_suits, p.rp_horizon);
  if (name == "autoencode") return std::make_unique<AutoEncode>(p.ae_cards);
  if (name == "minesweeper")
    return std::make_unique<Minesweeper>(p.ms_rows, p.ms_cols, p.ms_mines);
  if (name == "concentration")
    return std::make_unique<Concentration>(p.conc_decks, p.conc_match, p.conc_horizon);
  if (name == "battleship") return std::make_unique<Battleship>(p.bs_rows, p.bs_cols, p.bs_ships);
  if (name == "delayed_catch") return std::make_unique<DelayedCatch>(p.dc_drops);
  if (name == "dark_key_to_door") return std::make_unique<DarkKeyToDoor>();
  std::string known;
  for (const auto& n : env_names()) known += " " + n;
  PSRL_CHECK(false, "unknown environment '" << name << "'; known:" << known);
  return nullptr;
}

int encode_reward_channel(const std::string& env_name, double reward) {
  if (env_name == "battleship") return 0;  // hit/miss already carries the signal
  if (env_name == "minesweeper") {
    if (reward >= 0) return 0;       // positive (or the zero reset state)
    if (reward <= -0.999) return 1;  // mine; magnitude separates it from a repeat
    return 2;                        // repeated tile
  }
  // generic sign coding: 0 zero, 1 positive, 2 negative
  if (reward > 0) return 1;
  if (reward < 0) return 2;
  return 0;
}

void validate_observation(const EnvSpec& spec, const Observation& obs) {
  PSRL_CHECK(obs.discrete.size() == spec.channel_cardinalities.size(),
             spec.name << ": discrete channel count mismatch");
  PSRL_CHECK(obs.continuous.size() == spec.continuous_ranges.size(),
             spec.name << ": continuous channel count mismatch");
  for (size_t c = 0; c < obs.discrete.size(); ++c) {
    PSRL_CHECK(obs.discrete[c] >= 0 && obs.discrete[c] < spec.channel_cardinalities[c],
               spec.name << ": channel " << c << " value " << obs.discrete[c]
                         << " outside cardinality " << spec.channel_cardinalities[c]);
  }
  for (size_t c = 0; c < obs.continuous.size(); ++c) {
    const auto& r = spec.continuous_ranges[c];
    PSRL_CHECK(obs.continuous[c] >= r.lo && obs.continuous[c] <= r.hi,
               spec.name << ": continuous channel " << c << " out of range");
  }
}

}  // namespace psrl::env
