#pragma once

// Discrete soft actor-critic on history latents: a softmax policy head and
// twin Q heads with target copies tracked by exponential averaging.

#include <vector>

#include "psrl/seqmodel.hpp"

namespace psrl {

class SacdAgent {
 public:
  SacdAgent(int latent_dim, int n_actions, int hidden, double gamma, double entropy_coeff,
            double tau, Rng& rng);

  // Greedy mode returns the argmax with lowest-index tie break; sample mode
  // draws from softmax(logits).
  int act(const Eigen::VectorXf& latent, Rng& rng, bool greedy) const;

  struct Losses {
    Var critic;  // sum of both Q heads' MSE to the soft Bellman target
    Var actor;   // E_pi [ entropy_coeff * log pi - min Q ]
  };

  // lat_s: latent per transition (already gradient-blocked by the caller in
  // decoupled modes). next_latents: raw values at t+1; rows ignored when
  // done. The actor always sees a stopped copy of lat_s.
  Losses losses(Tape& tape, Var lat_s, const MatXf& next_latents,
                const std::vector<int>& actions, const std::vector<float>& rewards,
                const std::vector<uint8_t>& dones);

  // Soft Bellman target vector (1 x N); exposed so tests can pin it against
  // hand arithmetic.
  MatXf bellman_targets(const MatXf& next_latents, const std::vector<float>& rewards,
                        const std::vector<uint8_t>& dones) const;

  void soft_update_targets();
  void hard_sync_targets();

  std::vector<Param*> actor_params();
  std::vector<Param*> critic_params();
  std::vector<Param*> target_params();  // serialized, never trained directly

  double gamma() const { return gamma_; }
  double entropy_coeff() const { return entropy_coeff_; }
  int n_actions() const { return n_actions_; }

 private:
  int n_actions_;
  double gamma_, entropy_coeff_, tau_;
  nn::MlpHeadT<float> actor_, critic1_, critic2_, target1_, target2_;
};

}  // namespace psrl
