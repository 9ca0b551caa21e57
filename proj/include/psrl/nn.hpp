#pragma once

// Model building blocks on top of the tape: linear/embedding layers, the
// shared token embedder, GRU and transformer backbones, and 2-layer heads.

#include <string>
#include <vector>

#include "psrl/ad.hpp"
#include "psrl/rng.hpp"

namespace psrl::nn {

using ad::Index;
using ad::MatX;
using ad::ParamT;
using ad::TapeT;
using ad::VarT;

template <typename S>
MatX<S> uniform_fan_in(Rng& rng, Index rows, Index cols) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  MatX<S> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i)
    m.data()[i] = S(rng.uniform() * 2.0 * bound - bound);
  return m;
}

template <typename S>
MatX<S> normal_init(Rng& rng, Index rows, Index cols, double stddev = 0.02) {
  MatX<S> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = S(rng.normal(0.0, stddev));
  return m;
}

template <typename S>
struct LinearT {
  ParamT<S> w, b;

  LinearT() = default;
  LinearT(const std::string& prefix, Index out, Index in, Rng& rng)
      : w(prefix + "/w", uniform_fan_in<S>(rng, out, in)),
        b(prefix + "/b", MatX<S>::Zero(out, 1)) {}

  VarT<S> forward(TapeT<S>& t, VarT<S> x) {
    return add_bias(matmul(t.param(w), x), t.param(b));
  }

  // Tape-free forward for frozen copies (target networks, evaluation).
  MatX<S> forward_raw(const MatX<S>& x) const {
    return (w.value * x).colwise() + Eigen::Matrix<S, Eigen::Dynamic, 1>(b.value.col(0));
  }

  void collect(std::vector<ParamT<S>*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }
};

// dim x vocab lookup table.
template <typename S>
struct EmbedTableT {
  ParamT<S> w;

  EmbedTableT() = default;
  EmbedTableT(const std::string& name, Index dim, Index vocab, Rng& rng)
      : w(name, normal_init<S>(rng, dim, vocab)) {}

  VarT<S> forward(TapeT<S>& t, const std::vector<int>& idx) {
    return select_cols(t.param(w), idx);
  }

  void collect(std::vector<ParamT<S>*>& out) { out.push_back(&w); }
};

template <typename S>
struct LayerNormT {
  ParamT<S> gain, bias;

  LayerNormT() = default;
  LayerNormT(const std::string& prefix, Index dim)
      : gain(prefix + "/g", MatX<S>::Ones(dim, 1)),
        bias(prefix + "/b", MatX<S>::Zero(dim, 1)) {}

  VarT<S> forward(TapeT<S>& t, VarT<S> x) {
    return layer_norm_cols(x, t.param(gain), t.param(bias));
  }

  void collect(std::vector<ParamT<S>*>& out) {
    out.push_back(&gain);
    out.push_back(&bias);
  }
};

// Single GRU layer over episode-major sequences.
template <typename S>
struct GruT {
  ParamT<S> w_ih, w_hh, b;
  Index hidden = 0;

  GruT() = default;
  GruT(const std::string& prefix, Index hid, Index in, Rng& rng)
      : w_ih(prefix + "/w_ih", uniform_fan_in<S>(rng, 3 * hid, in)),
        w_hh(prefix + "/w_hh", uniform_fan_in<S>(rng, 3 * hid, hid)),
        b(prefix + "/b", MatX<S>::Zero(3 * hid, 1)),
        hidden(hid) {}

  VarT<S> forward(TapeT<S>& t, VarT<S> x, VarT<S> h0, Index B, Index T) {
    return gru_sequence(x, h0, t.param(w_ih), t.param(w_hh), t.param(b), B, T);
  }

  void collect(std::vector<ParamT<S>*>& out) {
    out.push_back(&w_ih);
    out.push_back(&w_hh);
    out.push_back(&b);
  }
};

// Pre-norm transformer block: x += attn(ln1 x); x += mlp(ln2 x).
template <typename S>
struct TransformerBlockT {
  LayerNormT<S> ln1, ln2;
  ParamT<S> w_qkv, b_qkv, w_o, b_o;
  LinearT<S> fc, proj;
  Index n_heads = 0;

  TransformerBlockT() = default;
  TransformerBlockT(const std::string& prefix, Index dim, Index heads, Rng& rng)
      : ln1(prefix + "/ln1", dim),
        ln2(prefix + "/ln2", dim),
        w_qkv(prefix + "/attn/w_qkv", uniform_fan_in<S>(rng, 3 * dim, dim)),
        b_qkv(prefix + "/attn/b_qkv", MatX<S>::Zero(3 * dim, 1)),
        w_o(prefix + "/attn/w_o", uniform_fan_in<S>(rng, dim, dim)),
        b_o(prefix + "/attn/b_o", MatX<S>::Zero(dim, 1)),
        fc(prefix + "/mlp/fc", 4 * dim, dim, rng),
        proj(prefix + "/mlp/proj", dim, 4 * dim, rng),
        n_heads(heads) {}

  VarT<S> forward(TapeT<S>& t, VarT<S> x, Index B, Index T) {
    auto a = causal_self_attention(ln1.forward(t, x), t.param(w_qkv), t.param(b_qkv),
                                   t.param(w_o), t.param(b_o), B, T, n_heads);
    x = add(x, a);
    auto m = proj.forward(t, gelu(fc.forward(t, ln2.forward(t, x))));
    return add(x, m);
  }

  void collect(std::vector<ParamT<S>*>& out) {
    ln1.collect(out);
    ln2.collect(out);
    out.push_back(&w_qkv);
    out.push_back(&b_qkv);
    out.push_back(&w_o);
    out.push_back(&b_o);
    fc.collect(out);
    proj.collect(out);
  }
};

// Two affine layers with a tanh between them.
template <typename S>
struct MlpHeadT {
  LinearT<S> l1, l2;

  MlpHeadT() = default;
  MlpHeadT(const std::string& prefix, Index out, Index hidden, Index in, Rng& rng)
      : l1(prefix + "/l1", hidden, in, rng), l2(prefix + "/l2", out, hidden, rng) {}

  VarT<S> forward(TapeT<S>& t, VarT<S> x) {
    return l2.forward(t, tanh(l1.forward(t, x)));
  }

  MatX<S> forward_raw(const MatX<S>& x) const {
    return l2.forward_raw(l1.forward_raw(x).array().tanh().matrix());
  }

  void collect(std::vector<ParamT<S>*>& out) {
    l1.collect(out);
    l2.collect(out);
  }
};

// Describes how raw steps map onto embedding slices. Discrete channels come
// first, then continuous ones; the embedding is split evenly across all of
// them, and previous-action / previous-reward-code embeddings are added at
// full width.
struct TokenLayout {
  std::vector<int> channel_cards;  // discrete channel cardinalities
  int continuous_channels = 0;
  int action_card = 0;
  int reward_codes = 3;
  int embed_dim = 0;

  int total_channels() const {
    return static_cast<int>(channel_cards.size()) + continuous_channels;
  }
  int slice_width() const { return embed_dim / total_channels(); }
  bool divisible() const { return embed_dim % total_channels() == 0; }
};

// Integer/real views of a batch of steps, ready for embedding. Column n is
// one step; discrete[c][n] indexes channel c.
struct TokenBatch {
  std::vector<std::vector<int>> discrete;
  Eigen::MatrixXf continuous;  // continuous_channels x N (unused rows allowed)
  std::vector<int> prev_action;  // action_card means "none"
  std::vector<int> prev_reward_code;
  Index count = 0;
};

// Shared projection from (observation, previous action, previous reward
// code) to the embedding space; used by both the history summarizer and the
// future prediction model.
template <typename S>
struct TokenEmbedderT {
  TokenLayout layout;
  std::vector<EmbedTableT<S>> channel_tables;
  std::vector<LinearT<S>> continuous_maps;
  EmbedTableT<S> action_table;   // one extra column for "no previous action"
  EmbedTableT<S> reward_table;

  TokenEmbedderT() = default;
  TokenEmbedderT(const TokenLayout& lay, Rng& rng) : layout(lay) {
    PSRL_CHECK(layout.divisible(), "embed_dim " << layout.embed_dim << " not divisible by "
                                                << layout.total_channels() << " channels");
    const Index w = layout.slice_width();
    for (size_t c = 0; c < layout.channel_cards.size(); ++c) {
      channel_tables.emplace_back("emb/chan" + std::to_string(c), w, layout.channel_cards[c],
                                  rng);
    }
    for (int c = 0; c < layout.continuous_channels; ++c) {
      continuous_maps.emplace_back("emb/cont" + std::to_string(c), w, 1, rng);
    }
    action_table = EmbedTableT<S>("emb/action", layout.embed_dim, layout.action_card + 1, rng);
    reward_table = EmbedTableT<S>("emb/reward", layout.embed_dim, layout.reward_codes, rng);
  }

  VarT<S> forward(TapeT<S>& t, const TokenBatch& batch) {
    std::vector<VarT<S>> slices;
    for (size_t c = 0; c < channel_tables.size(); ++c) {
      slices.push_back(channel_tables[c].forward(t, batch.discrete[c]));
    }
    for (size_t c = 0; c < continuous_maps.size(); ++c) {
      MatX<S> row = batch.continuous.row(static_cast<Index>(c)).template cast<S>();
      slices.push_back(continuous_maps[c].forward(t, t.constant(row)));
    }
    auto tok = vconcat(slices);
    tok = add(tok, action_table.forward(t, batch.prev_action));
    tok = add(tok, reward_table.forward(t, batch.prev_reward_code));
    return tok;
  }

  // Embeds bare actions (for the prediction model's test-action inputs).
  VarT<S> embed_actions(TapeT<S>& t, const std::vector<int>& actions) {
    return action_table.forward(t, actions);
  }

  void collect(std::vector<ParamT<S>*>& out) {
    for (auto& e : channel_tables) e.collect(out);
    for (auto& l : continuous_maps) l.collect(out);
    action_table.collect(out);
    reward_table.collect(out);
  }
};

}  // namespace psrl::nn
