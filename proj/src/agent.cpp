#include "psrl/agent.hpp"

namespace psrl {

namespace {

// Column-wise stable softmax / log-softmax on raw matrices.
MatXf softmax_raw(MatXf m) {
  for (Index j = 0; j < m.cols(); ++j) {
    auto col = m.col(j).array();
    col -= col.maxCoeff();
    col = col.exp();
    col /= col.sum();
  }
  return m;
}

MatXf log_softmax_raw(MatXf m) {
  for (Index j = 0; j < m.cols(); ++j) {
    auto col = m.col(j).array();
    float mx = col.maxCoeff();
    col -= mx + std::log((col - mx).exp().sum());
  }
  return m;
}

}  // namespace

SacdAgent::SacdAgent(int latent_dim, int n_actions, int hidden, double gamma,
                     double entropy_coeff, double tau, Rng& rng)
    : n_actions_(n_actions),
      gamma_(gamma),
      entropy_coeff_(entropy_coeff),
      tau_(tau),
      actor_("actor", n_actions, hidden, latent_dim, rng),
      critic1_("critic1", n_actions, hidden, latent_dim, rng),
      critic2_("critic2", n_actions, hidden, latent_dim, rng),
      target1_("target1", n_actions, hidden, latent_dim, rng),
      target2_("target2", n_actions, hidden, latent_dim, rng) {
  hard_sync_targets();
}

int SacdAgent::act(const Eigen::VectorXf& latent, Rng& rng, bool greedy) const {
  MatXf logits = actor_.forward_raw(latent);
  if (greedy) {
    Index best = 0;
    logits.col(0).maxCoeff(&best);
    return static_cast<int>(best);
  }
  MatXf p = softmax_raw(logits);
  double u = rng.uniform(), acc = 0.0;
  for (int a = 0; a < n_actions_; ++a) {
    acc += p(a, 0);
    if (u < acc) return a;
  }
  return n_actions_ - 1;
}

MatXf SacdAgent::bellman_targets(const MatXf& next_latents, const std::vector<float>& rewards,
                                 const std::vector<uint8_t>& dones) const {
  const Index n = next_latents.cols();
  MatXf q1 = target1_.forward_raw(next_latents);
  MatXf q2 = target2_.forward_raw(next_latents);
  MatXf qmin = q1.cwiseMin(q2);
  MatXf logits = actor_.forward_raw(next_latents);
  MatXf pi = softmax_raw(logits);
  MatXf logpi = log_softmax_raw(logits);
  MatXf y(1, n);
  for (Index j = 0; j < n; ++j) {
    float v = (pi.col(j).array() *
               (qmin.col(j).array() - static_cast<float>(entropy_coeff_) * logpi.col(j).array()))
                  .sum();
    y(0, j) = rewards[j] + static_cast<float>(gamma_) * (1.0f - dones[j]) * v;
  }
  return y;
}

SacdAgent::Losses SacdAgent::losses(Tape& tape, Var lat_s, const MatXf& next_latents,
                                    const std::vector<int>& actions,
                                    const std::vector<float>& rewards,
                                    const std::vector<uint8_t>& dones) {
  const Index n = lat_s.cols();
  PSRL_CHECK(static_cast<Index>(actions.size()) == n && next_latents.cols() == n,
             "rl batch size mismatch");
  const MatXf y = bellman_targets(next_latents, rewards, dones);
  const MatXf w = MatXf::Constant(1, n, 1.0f / static_cast<float>(n));

  auto q1 = critic1_.forward(tape, lat_s);
  auto q2 = critic2_.forward(tape, lat_s);
  auto l1 = dot_const(squared_diff_const(gather_rows_per_col(q1, actions), y), w);
  auto l2 = dot_const(squared_diff_const(gather_rows_per_col(q2, actions), y), w);

  Losses out;
  out.critic = add(l1, l2);

  // Actor: stopped latents, online critics held constant.
  MatXf qmin = q1.val().cwiseMin(q2.val());
  auto s_stop = stop_gradient(lat_s);
  auto logits = actor_.forward(tape, s_stop);
  auto p = softmax_cols(logits);
  auto lp = log_softmax_cols(logits);
  auto inner = sub_const(scale(lp, static_cast<float>(entropy_coeff_)), qmin);
  out.actor = dot_const(colsum(cwise_mul(p, inner)), w);
  return out;
}

void SacdAgent::soft_update_targets() {
  auto blend = [&](nn::MlpHeadT<float>& tgt, nn::MlpHeadT<float>& src) {
    const float tau = static_cast<float>(tau_);
    std::vector<Param*> tp, sp;
    tgt.collect(tp);
    src.collect(sp);
    for (size_t i = 0; i < tp.size(); ++i) {
      tp[i]->value = (1.0f - tau) * tp[i]->value + tau * sp[i]->value;
    }
  };
  blend(target1_, critic1_);
  blend(target2_, critic2_);
}

void SacdAgent::hard_sync_targets() {
  auto copy = [](nn::MlpHeadT<float>& tgt, nn::MlpHeadT<float>& src) {
    std::vector<Param*> tp, sp;
    tgt.collect(tp);
    src.collect(sp);
    for (size_t i = 0; i < tp.size(); ++i) tp[i]->value = sp[i]->value;
  };
  copy(target1_, critic1_);
  copy(target2_, critic2_);
}

std::vector<Param*> SacdAgent::actor_params() {
  std::vector<Param*> out;
  actor_.collect(out);
  return out;
}

std::vector<Param*> SacdAgent::critic_params() {
  std::vector<Param*> out;
  critic1_.collect(out);
  critic2_.collect(out);
  return out;
}

std::vector<Param*> SacdAgent::target_params() {
  std::vector<Param*> out;
  target1_.collect(out);
  target2_.collect(out);
  return out;
}

}  // namespace psrl
