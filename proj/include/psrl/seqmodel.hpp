#pragma once

// History summarizer (transformer / GRU / stateless) and the GRU future
// prediction head, both fed by one shared token embedder.

#include <vector>

#include "psrl/config.hpp"
#include "psrl/env.hpp"
#include "psrl/nn.hpp"
#include "psrl/replay.hpp"

namespace psrl {

using Tape = ad::TapeT<float>;
using Var = ad::VarT<float>;
using Param = ad::ParamT<float>;
using MatXf = ad::MatX<float>;
using ad::Index;

struct ModelDims {
  int embed_dim = 64;
  int n_layers = 2;
  int n_heads = 2;
  int psi_hidden = 16;
  int horizon = 32;
};

nn::TokenLayout layout_for(const env::EnvSpec& spec, int embed_dim);

class Summarizer {
 public:
  Summarizer(Backbone kind, const ModelDims& dims, Rng& rng);

  // tokens: embed_dim x (B*T), episode-major. Returns latents of the same
  // shape; latent t depends only on tokens 0..t of its episode.
  Var forward(Tape& t, Var tokens, Index B, Index T);

  Backbone kind() const { return kind_; }
  int latent_dim() const { return dims_.embed_dim; }
  void collect(std::vector<Param*>& out);

 private:
  Backbone kind_;
  ModelDims dims_;
  Param pos_;
  std::vector<nn::TransformerBlockT<float>> blocks_;
  nn::LayerNormT<float> ln_f_;
  std::vector<nn::GruT<float>> grus_;
};

class FuturePredictor {
 public:
  FuturePredictor(const env::EnvSpec& spec, const ModelDims& dims, Rng& rng);

  struct Output {
    // per discrete channel: cardinality x (N*k) logits, column n*k + s
    std::vector<Var> channel_logits;
    // per continuous channel: 1 x (N*k) predictions
    std::vector<Var> cont_preds;
  };

  // latents: one column per sample; flat_actions[n*k + s] is the s-th test
  // action of sample n, embedded through the shared action table.
  Output forward(Tape& t, nn::TokenEmbedderT<float>& emb, Var latents,
                 const std::vector<int>& flat_actions, Index n_samples, Index k);

  void collect(std::vector<Param*>& out);

 private:
  nn::LinearT<float> bridge_;
  nn::GruT<float> gru_;
  std::vector<nn::LinearT<float>> channel_heads_;
  std::vector<nn::LinearT<float>> cont_heads_;
};

// Episode batch laid out for the sequence ops (column b*T + t).
struct EpisodeBatch {
  nn::TokenBatch tokens;
  Index B = 0, T = 0;
  std::vector<const Trajectory*> episodes;
};

EpisodeBatch build_episode_batch(const env::EnvSpec& spec,
                                 std::vector<const Trajectory*> episodes);

}  // namespace psrl
