#include "psrl/replay.hpp"

#include <fstream>

namespace psrl {

Trajectory Trajectory::padded(const env::EnvSpec& spec) {
  Trajectory t;
  env::Observation dummy;
  dummy.discrete.assign(spec.channel_cardinalities.size(), 0);
  dummy.continuous.assign(spec.continuous_ranges.size(), 0.0f);
  t.obs.assign(spec.horizon, dummy);
  t.actions.assign(spec.horizon, 0);
  t.rewards.assign(spec.horizon, 0.0);
  t.dones.assign(spec.horizon, 0);
  return t;
}

double Trajectory::total_reward() const {
  double s = 0;
  for (int t = 0; t < length; ++t) s += rewards[t];
  return s;
}

void dump_trajectories_csv(const std::string& path, const env::EnvSpec& spec,
                           const std::vector<Trajectory>& episodes) {
  std::ofstream os(path);
  PSRL_CHECK(os.good(), "cannot open " << path);
  os << "episode_id,t";
  for (size_t c = 0; c < spec.channel_cardinalities.size(); ++c) os << ",ch" << c;
  for (size_t c = 0; c < spec.continuous_ranges.size(); ++c) os << ",cont" << c;
  os << ",action,reward,done,is_test_action,is_padding\n";
  for (size_t ep = 0; ep < episodes.size(); ++ep) {
    const auto& tr = episodes[ep];
    for (int t = 0; t < tr.horizon(); ++t) {
      os << ep << "," << t;
      for (int v : tr.obs[t].discrete) os << "," << v;
      for (float v : tr.obs[t].continuous) os << "," << v;
      os << "," << tr.actions[t] << "," << tr.rewards[t] << "," << int(tr.dones[t]) << ","
         << (t == tr.test_t ? 1 : 0) << "," << (tr.is_padding(t) ? 1 : 0) << "\n";
    }
  }
}

}  // namespace psrl
