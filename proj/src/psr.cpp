#include "psrl/psr.hpp"

namespace psrl {

std::vector<int> extract_core_tests(const Trajectory& traj, const CoreTestSpec& spec) {
  PSRL_CHECK(traj.test_t >= 0, "trajectory carries no marked test timestep");
  PSRL_CHECK(spec.k >= 1, "core test horizon must be positive");
  std::vector<int> anchors;
  if (spec.dense) {
    for (int t = 0; t + spec.k <= traj.length - 1; ++t) anchors.push_back(t);
  } else if (traj.test_t + spec.k <= traj.length - 1) {
    anchors.push_back(traj.test_t);
  }
  return anchors;
}

PsrForward psr_forward(Tape& tape, const env::EnvSpec& spec, SeqModels models,
                       const EpisodeBatch& batch, const std::vector<CoreTestSample>& samples,
                       int k) {
  PSRL_CHECK(!samples.empty(), "psr_forward: empty sample set");
  const Index N = static_cast<Index>(samples.size());
  const int n_disc = static_cast<int>(spec.channel_cardinalities.size());
  const int n_cont = static_cast<int>(spec.continuous_ranges.size());
  const int n_chan = n_disc + n_cont;

  auto tokens = models.embedder->forward(tape, batch.tokens);
  auto latents = models.phi->forward(tape, tokens, batch.B, batch.T);

  std::vector<int> anchor_cols(N);
  std::vector<int> flat_actions(N * k);
  for (Index n = 0; n < N; ++n) {
    const auto& s = samples[n];
    const Trajectory& tr = *batch.episodes[s.episode];
    PSRL_CHECK(s.t + k <= tr.length - 1, "core test window crosses padding");
    anchor_cols[n] = s.episode * static_cast<int>(batch.T) + s.t;
    for (int step = 0; step < k; ++step) flat_actions[n * k + step] = tr.actions[s.t + step];
  }
  auto anchored = select_cols(latents, anchor_cols);
  auto pred = models.psi->forward(tape, *models.embedder, anchored, flat_actions, N, k);

  const float w = 1.0f / static_cast<float>(N * k * n_chan);
  const MatXf weights = MatXf::Constant(1, N * k, w);

  PsrForward out;
  out.n_samples = N;
  for (int c = 0; c < n_disc; ++c) {
    std::vector<int> targets(N * k);
    for (Index n = 0; n < N; ++n) {
      const auto& s = samples[n];
      const Trajectory& tr = *batch.episodes[s.episode];
      for (int step = 0; step < k; ++step) {
        targets[n * k + step] = tr.obs[s.t + 1 + step].discrete[c];
      }
    }
    auto ce = cross_entropy_cols(pred.channel_logits[c], targets);
    auto term = dot_const(ce, weights);
    out.loss = out.loss.valid() ? add(out.loss, term) : term;

    if (c == spec.accuracy_channel) {
      long hits = 0, measured = 0;
      const MatXf& logits = pred.channel_logits[c].val();
      for (Index n = 0; n < N; ++n) {
        const auto& s = samples[n];
        for (int step = 0; step < k; ++step) {
          if (s.t + 1 + step < spec.accuracy_from) continue;
          Index best = 0;
          logits.col(n * k + step).maxCoeff(&best);
          hits += (static_cast<int>(best) == targets[n * k + step]) ? 1 : 0;
          ++measured;
        }
      }
      out.n_measured = measured;
      if (measured > 0) out.accuracy = static_cast<double>(hits) / measured;
    }
  }
  for (int c = 0; c < n_cont; ++c) {
    MatXf target(1, N * k);
    for (Index n = 0; n < N; ++n) {
      const auto& s = samples[n];
      const Trajectory& tr = *batch.episodes[s.episode];
      for (int step = 0; step < k; ++step) {
        target(0, n * k + step) = tr.obs[s.t + 1 + step].continuous[c];
      }
    }
    auto se = squared_diff_const(pred.cont_preds[c], target);
    auto term = dot_const(se, weights);
    out.loss = out.loss.valid() ? add(out.loss, term) : term;
  }
  out.loss_value = out.loss.scalar();
  return out;
}

}  // namespace psrl
