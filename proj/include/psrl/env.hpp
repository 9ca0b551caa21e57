#pragma once

// The eight partially observable episodic environments behind one interface.
// All stochasticity comes from the per-episode seed passed to reset(), so a
// seed fully determines a trajectory given the action sequence.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "psrl/check.hpp"
#include "psrl/rng.hpp"

namespace psrl::env {

struct Observation {
  std::vector<int> discrete;
  std::vector<float> continuous;
};

struct ContinuousRange {
  float lo = 0.0f;
  float hi = 1.0f;
};

struct EnvSpec {
  std::string name;
  int action_cardinality = 0;
  int horizon = 0;
  std::vector<int> channel_cardinalities;      // discrete channels, in order
  std::vector<ContinuousRange> continuous_ranges;
  int reward_code_channel = -1;                // discrete channel carrying the reward code
  int accuracy_channel = 0;                    // channel scored as "the indicator"
  int accuracy_from = 1;                       // first obs index where it is informative
};

struct StepResult {
  Observation obs;
  double reward = 0.0;
  bool done = false;
};

class Env {
 public:
  virtual ~Env() = default;

  const EnvSpec& spec() const { return spec_; }

  Observation reset(uint64_t seed) {
    rng_.seed(seed);
    t_ = 0;
    done_ = false;
    return do_reset();
  }

  StepResult step(int action) {
    PSRL_CHECK(!done_, spec_.name << ": step() on a finished episode");
    PSRL_CHECK(action >= 0 && action < spec_.action_cardinality,
               spec_.name << ": action " << action << " out of range");
    StepResult r = do_step(action);
    ++t_;
    if (t_ >= spec_.horizon) r.done = true;
    done_ = r.done;
    return r;
  }

  // Per-environment test-action rule (uniform random unless overridden).
  virtual int sample_test_action() {
    PSRL_CHECK(!done_, spec_.name << ": sample_test_action() on a finished episode");
    return rng_.uniform_int(spec_.action_cardinality);
  }

  bool done() const { return done_; }
  int t() const { return t_; }

 protected:
  virtual Observation do_reset() = 0;
  virtual StepResult do_step(int action) = 0;

  EnvSpec spec_;
  Rng rng_;
  int t_ = 0;
  bool done_ = true;  // reset() must be called first
};

struct EnvParams {
  int rp_k = 2;
  int rp_suits = 4;
  int rp_horizon = 32;
  int ae_cards = 8;
  int ms_rows = 6, ms_cols = 6, ms_mines = 6;
  int bs_rows = 8, bs_cols = 8;
  std::vector<int> bs_ships = {2, 3, 4};
  int conc_decks = 1;
  std::string conc_match = "rank_or_color";  // rank | color | rank_or_color
  int conc_horizon = 0;                      // 0 -> 2 * card count
  int dc_drops = 3;
};

std::unique_ptr<Env> make_env(const std::string& name, const EnvParams& params);
std::vector<std::string> env_names();

// Reward discretization fed to the embedding (and, where the environment
// defines one, mirrored in the observation's reward-code channel).
int encode_reward_channel(const std::string& env_name, double reward);

// Throws if any channel value is outside the declared cardinality/range.
void validate_observation(const EnvSpec& spec, const Observation& obs);

}  // namespace psrl::env
