#pragma once

// Flat key=value run configuration mirroring the published hyperparameter
// tables, plus desk-scale knobs. Unknown keys are rejected up front.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "psrl/env.hpp"

namespace psrl {

enum class Mode { kDrl2, kE2e, kProbe, kStateless };
enum class Backbone { kGpt, kGru, kStateless };

std::string to_string(Mode m);
std::string to_string(Backbone b);
Mode parse_mode(const std::string& s);
Backbone parse_backbone(const std::string& s);

struct RunConfig {
  // run identity
  std::string env_name = "gridworld";
  Mode mode = Mode::kDrl2;
  Backbone backbone = Backbone::kGpt;
  uint64_t seed = 0;
  long total_steps = 200000;  // environment timesteps, padding included
  std::string out_dir = "out";

  // model
  int embed_dim = 256;
  int n_layers = 3;
  int n_heads = 4;
  int psi_hidden = 16;
  int head_hidden = 256;

  // optimization
  double actor_lr = 1e-4;
  double critic_lr = 2e-4;
  double seq_lr = 5e-5;
  double weight_decay = 1e-4;
  double gamma = 0.99;
  double entropy_coeff = 0.01;
  double tau = 0.005;
  double grad_clip = 1.0;
  int batch_size = 64;

  // schedule
  long buffer_size = 30000;  // timestep-equivalents; episodes = size / horizon
  int burn_in_episodes = 5000;
  int burn_in_updates = 2000;
  int t_gen = 10;
  int t_psr = 50;
  int t_rl = 500;

  // core tests
  int core_test_k = 1;
  bool dense_tests = false;
  bool rl_include_test_step = false;

  // evaluation
  int eval_episodes = 100;
  int eval_interval = 10;
  int holdout_episodes = 64;

  // frozen-representation probe
  std::vector<double> probe_targets;
  int probe_rl_epochs = 200;

  env::EnvParams env_params;

  static RunConfig from_file(const std::string& path);
  void apply(const std::string& key, const std::string& value);
  void validate() const;

  // Canonical dump of every field except seed and out_dir; two runs with the
  // same hash differ only by seed.
  std::string canonical() const;
  std::string hash_hex() const;
  std::string run_dir() const;  // out_dir / <hash>_s<seed>
};

}  // namespace psrl
