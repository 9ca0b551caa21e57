#include "psrl/seqmodel.hpp"

namespace psrl {

nn::TokenLayout layout_for(const env::EnvSpec& spec, int embed_dim) {
  nn::TokenLayout lay;
  lay.channel_cards = spec.channel_cardinalities;
  lay.continuous_channels = static_cast<int>(spec.continuous_ranges.size());
  lay.action_card = spec.action_cardinality;
  lay.embed_dim = embed_dim;
  return lay;
}

Summarizer::Summarizer(Backbone kind, const ModelDims& dims, Rng& rng)
    : kind_(kind), dims_(dims) {
  const Index E = dims.embed_dim;
  if (kind_ == Backbone::kGpt) {
    pos_ = Param("phi/pos", nn::normal_init<float>(rng, E, dims.horizon));
    for (int l = 0; l < dims.n_layers; ++l) {
      blocks_.emplace_back("phi/block" + std::to_string(l), E, dims.n_heads, rng);
    }
    ln_f_ = nn::LayerNormT<float>("phi/ln_f", E);
  } else if (kind_ == Backbone::kGru) {
    for (int l = 0; l < dims.n_layers; ++l) {
      grus_.emplace_back("phi/gru" + std::to_string(l), E, E, rng);
    }
  }
}

Var Summarizer::forward(Tape& t, Var tokens, Index B, Index T) {
  switch (kind_) {
    case Backbone::kGpt: {
      PSRL_CHECK(T <= dims_.horizon, "sequence longer than the positional table");
      auto x = add_positional(tokens, t.param(pos_), B, T);
      for (auto& block : blocks_) x = block.forward(t, x, B, T);
      return ln_f_.forward(t, x);
    }
    case Backbone::kGru: {
      auto x = tokens;
      for (auto& gru : grus_) x = gru.forward(t, x, Var{}, B, T);
      return x;
    }
    default:
      return tokens;  // stateless: the current token is the representation
  }
}

void Summarizer::collect(std::vector<Param*>& out) {
  if (kind_ == Backbone::kGpt) {
    out.push_back(&pos_);
    for (auto& b : blocks_) b.collect(out);
    ln_f_.collect(out);
  } else if (kind_ == Backbone::kGru) {
    for (auto& g : grus_) g.collect(out);
  }
}

FuturePredictor::FuturePredictor(const env::EnvSpec& spec, const ModelDims& dims, Rng& rng)
    : bridge_("psi/bridge", dims.psi_hidden, dims.embed_dim, rng),
      gru_("psi/gru", dims.psi_hidden, dims.embed_dim, rng) {
  for (size_t c = 0; c < spec.channel_cardinalities.size(); ++c) {
    channel_heads_.emplace_back("psi/head" + std::to_string(c), spec.channel_cardinalities[c],
                                dims.psi_hidden, rng);
  }
  for (size_t c = 0; c < spec.continuous_ranges.size(); ++c) {
    cont_heads_.emplace_back("psi/cont" + std::to_string(c), 1, dims.psi_hidden, rng);
  }
}

FuturePredictor::Output FuturePredictor::forward(Tape& t, nn::TokenEmbedderT<float>& emb,
                                                 Var latents,
                                                 const std::vector<int>& flat_actions,
                                                 Index n_samples, Index k) {
  PSRL_CHECK(latents.cols() == n_samples, "predictor: latent/sample count mismatch");
  PSRL_CHECK(static_cast<Index>(flat_actions.size()) == n_samples * k,
             "predictor: action layout mismatch");
  auto h0 = bridge_.forward(t, latents);
  auto action_tokens = emb.embed_actions(t, flat_actions);
  auto h = gru_.forward(t, action_tokens, h0, n_samples, k);
  Output out;
  for (auto& head : channel_heads_) out.channel_logits.push_back(head.forward(t, h));
  for (auto& head : cont_heads_) out.cont_preds.push_back(head.forward(t, h));
  return out;
}

void FuturePredictor::collect(std::vector<Param*>& out) {
  bridge_.collect(out);
  gru_.collect(out);
  for (auto& h : channel_heads_) h.collect(out);
  for (auto& h : cont_heads_) h.collect(out);
}

EpisodeBatch build_episode_batch(const env::EnvSpec& spec,
                                 std::vector<const Trajectory*> episodes) {
  PSRL_CHECK(!episodes.empty(), "empty episode batch");
  EpisodeBatch b;
  b.B = static_cast<Index>(episodes.size());
  b.T = spec.horizon;
  b.episodes = std::move(episodes);

  const Index n = b.B * b.T;
  const int n_disc = static_cast<int>(spec.channel_cardinalities.size());
  const int n_cont = static_cast<int>(spec.continuous_ranges.size());
  b.tokens.discrete.assign(n_disc, std::vector<int>(n, 0));
  b.tokens.continuous = Eigen::MatrixXf::Zero(std::max(n_cont, 1), n);
  b.tokens.prev_action.assign(n, spec.action_cardinality);
  b.tokens.prev_reward_code.assign(n, 0);
  b.tokens.count = n;

  for (Index bi = 0; bi < b.B; ++bi) {
    const Trajectory& tr = *b.episodes[bi];
    PSRL_CHECK(tr.horizon() == spec.horizon, "trajectory horizon mismatch");
    for (Index t = 0; t < b.T; ++t) {
      const Index col = bi * b.T + t;
      const auto& o = tr.obs[t];
      for (int c = 0; c < n_disc; ++c) b.tokens.discrete[c][col] = o.discrete[c];
      for (int c = 0; c < n_cont; ++c) b.tokens.continuous(c, col) = o.continuous[c];
      if (t > 0) {
        b.tokens.prev_action[col] = tr.actions[t - 1];
        b.tokens.prev_reward_code[col] =
            env::encode_reward_channel(spec.name, tr.rewards[t - 1]);
      }
    }
  }
  return b;
}

}  // namespace psrl
