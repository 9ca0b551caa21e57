#pragma once

// Core-test extraction from stored trajectories and the future-prediction
// objective (cross entropy on discrete channels, squared error on continuous
// ones, averaged over samples, steps and channels).

#include <vector>

#include "psrl/seqmodel.hpp"

namespace psrl {

struct CoreTestSpec {
  int k = 1;
  bool dense = false;  // anchor every eligible timestep instead of the mark
};

// Anchor timesteps for one trajectory. A sample at t uses actions t..t+k-1
// and targets obs[t+1 .. t+k]; anchors whose window crosses padding are
// dropped. A trajectory without a marked test timestep is rejected.
std::vector<int> extract_core_tests(const Trajectory& traj, const CoreTestSpec& spec);

struct CoreTestSample {
  int episode = 0;  // index into the batch
  int t = 0;
};

struct SeqModels {
  nn::TokenEmbedderT<float>* embedder = nullptr;
  Summarizer* phi = nullptr;
  FuturePredictor* psi = nullptr;
};

struct PsrForward {
  Var loss;  // scalar node on the caller's tape
  double loss_value = 0.0;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  long n_samples = 0;
  long n_measured = 0;
};

// Builds the full PSRLoss graph over the given anchors. Gradients flow into
// the embedder, the summarizer and the predictor.
PsrForward psr_forward(Tape& tape, const env::EnvSpec& spec, SeqModels models,
                       const EpisodeBatch& batch, const std::vector<CoreTestSample>& samples,
                       int k);

}  // namespace psrl
