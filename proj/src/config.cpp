#include "psrl/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "psrl/check.hpp"

namespace psrl {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  PSRL_CHECK(false, "expected boolean, got '" << v << "'");
  return false;
}

std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::kDrl2: return "drl2";
    case Mode::kE2e: return "e2e";
    case Mode::kProbe: return "probe";
    default: return "stateless";
  }
}

std::string to_string(Backbone b) {
  switch (b) {
    case Backbone::kGpt: return "gpt";
    case Backbone::kGru: return "gru";
    default: return "stateless";
  }
}

Mode parse_mode(const std::string& s) {
  if (s == "drl2") return Mode::kDrl2;
  if (s == "e2e") return Mode::kE2e;
  if (s == "probe") return Mode::kProbe;
  if (s == "stateless") return Mode::kStateless;
  PSRL_CHECK(false, "unknown mode '" << s << "' (drl2|e2e|probe|stateless)");
  return Mode::kDrl2;
}

Backbone parse_backbone(const std::string& s) {
  if (s == "gpt") return Backbone::kGpt;
  if (s == "gru") return Backbone::kGru;
  if (s == "stateless") return Backbone::kStateless;
  PSRL_CHECK(false, "unknown backbone '" << s << "' (gpt|gru|stateless)");
  return Backbone::kGpt;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  PSRL_CHECK(is.good(), "cannot open config file: " << path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    PSRL_CHECK(eq != std::string::npos, path << ":" << lineno << ": expected key = value");
    cfg.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void RunConfig::apply(const std::string& key, const std::string& value) {
  auto& p = env_params;
  if (key == "env") env_name = value;
  else if (key == "mode") mode = parse_mode(value);
  else if (key == "backbone") backbone = parse_backbone(value);
  else if (key == "seed") seed = std::stoull(value);
  else if (key == "total_steps") total_steps = std::stol(value);
  else if (key == "out_dir") out_dir = value;
  else if (key == "embed_dim") embed_dim = std::stoi(value);
  else if (key == "n_layers") n_layers = std::stoi(value);
  else if (key == "n_heads") n_heads = std::stoi(value);
  else if (key == "psi_hidden") psi_hidden = std::stoi(value);
  else if (key == "head_hidden") head_hidden = std::stoi(value);
  else if (key == "actor_lr") actor_lr = std::stod(value);
  else if (key == "critic_lr") critic_lr = std::stod(value);
  else if (key == "seq_lr") seq_lr = std::stod(value);
  else if (key == "weight_decay") weight_decay = std::stod(value);
  else if (key == "gamma") gamma = std::stod(value);
  else if (key == "entropy_coeff") entropy_coeff = std::stod(value);
  else if (key == "tau") tau = std::stod(value);
  else if (key == "grad_clip") grad_clip = std::stod(value);
  else if (key == "batch_size") batch_size = std::stoi(value);
  else if (key == "buffer_size") buffer_size = std::stol(value);
  else if (key == "burn_in_episodes") burn_in_episodes = std::stoi(value);
  else if (key == "burn_in_updates") burn_in_updates = std::stoi(value);
  else if (key == "t_gen") t_gen = std::stoi(value);
  else if (key == "t_psr") t_psr = std::stoi(value);
  else if (key == "t_rl") t_rl = std::stoi(value);
  else if (key == "core_test_k") core_test_k = std::stoi(value);
  else if (key == "dense_tests") dense_tests = parse_bool(value);
  else if (key == "rl_include_test_step") rl_include_test_step = parse_bool(value);
  else if (key == "eval_episodes") eval_episodes = std::stoi(value);
  else if (key == "eval_interval") eval_interval = std::stoi(value);
  else if (key == "holdout_episodes") holdout_episodes = std::stoi(value);
  else if (key == "probe_targets") probe_targets = parse_double_list(value);
  else if (key == "probe_rl_epochs") probe_rl_epochs = std::stoi(value);
  else if (key == "rp_k") p.rp_k = std::stoi(value);
  else if (key == "rp_suits") p.rp_suits = std::stoi(value);
  else if (key == "rp_horizon") p.rp_horizon = std::stoi(value);
  else if (key == "ae_cards") p.ae_cards = std::stoi(value);
  else if (key == "ms_rows") p.ms_rows = std::stoi(value);
  else if (key == "ms_cols") p.ms_cols = std::stoi(value);
  else if (key == "ms_mines") p.ms_mines = std::stoi(value);
  else if (key == "bs_rows") p.bs_rows = std::stoi(value);
  else if (key == "bs_cols") p.bs_cols = std::stoi(value);
  else if (key == "bs_ships") p.bs_ships = parse_int_list(value);
  else if (key == "conc_decks") p.conc_decks = std::stoi(value);
  else if (key == "conc_match") p.conc_match = value;
  else if (key == "conc_horizon") p.conc_horizon = std::stoi(value);
  else if (key == "dc_drops") p.dc_drops = std::stoi(value);
  else PSRL_CHECK(false, "unknown config key '" << key << "'");
}

void RunConfig::validate() const {
  auto e = env::make_env(env_name, env_params);  // also validates env params
  const auto& spec = e->spec();
  const int channels = static_cast<int>(spec.channel_cardinalities.size()) +
                       static_cast<int>(spec.continuous_ranges.size());
  PSRL_CHECK(embed_dim > 0 && embed_dim % channels == 0,
             "embed_dim " << embed_dim << " must be divisible by " << channels
                          << " observation channels of " << env_name);
  PSRL_CHECK(n_layers >= 1 && n_heads >= 1 && embed_dim % n_heads == 0,
             "bad transformer dimensions");
  PSRL_CHECK(psi_hidden >= 1 && head_hidden >= 1 && batch_size >= 1, "bad model sizes");
  PSRL_CHECK(core_test_k >= 1 && core_test_k < spec.horizon, "core_test_k out of range");
  PSRL_CHECK(t_gen >= 1 && t_psr >= 0 && t_rl >= 0, "bad update schedule");
  PSRL_CHECK(buffer_size >= spec.horizon, "buffer smaller than one episode");
  PSRL_CHECK(gamma > 0 && gamma <= 1 && tau > 0 && tau <= 1, "bad gamma/tau");
  PSRL_CHECK(eval_episodes >= 1 && eval_interval >= 1, "bad evaluation settings");
  if (mode == Mode::kProbe) {
    PSRL_CHECK(!probe_targets.empty(), "probe mode requires probe_targets");
    for (size_t i = 1; i < probe_targets.size(); ++i) {
      PSRL_CHECK(probe_targets[i] < probe_targets[i - 1],
                 "probe_targets must be strictly decreasing");
    }
  }
  if (mode == Mode::kStateless) {
    PSRL_CHECK(backbone == Backbone::kStateless,
               "stateless mode requires backbone = stateless");
  }
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  const auto& p = env_params;
  os << "env=" << env_name << "\nmode=" << to_string(mode)
     << "\nbackbone=" << to_string(backbone) << "\ntotal_steps=" << total_steps
     << "\nembed_dim=" << embed_dim << "\nn_layers=" << n_layers << "\nn_heads=" << n_heads
     << "\npsi_hidden=" << psi_hidden << "\nhead_hidden=" << head_hidden
     << "\nactor_lr=" << actor_lr << "\ncritic_lr=" << critic_lr << "\nseq_lr=" << seq_lr
     << "\nweight_decay=" << weight_decay << "\ngamma=" << gamma
     << "\nentropy_coeff=" << entropy_coeff << "\ntau=" << tau << "\ngrad_clip=" << grad_clip
     << "\nbatch_size=" << batch_size << "\nbuffer_size=" << buffer_size
     << "\nburn_in_episodes=" << burn_in_episodes << "\nburn_in_updates=" << burn_in_updates
     << "\nt_gen=" << t_gen << "\nt_psr=" << t_psr << "\nt_rl=" << t_rl
     << "\ncore_test_k=" << core_test_k << "\ndense_tests=" << dense_tests
     << "\nrl_include_test_step=" << rl_include_test_step
     << "\neval_episodes=" << eval_episodes << "\neval_interval=" << eval_interval
     << "\nholdout_episodes=" << holdout_episodes << "\nprobe_rl_epochs=" << probe_rl_epochs
     << "\nprobe_targets=";
  for (size_t i = 0; i < probe_targets.size(); ++i) {
    os << (i ? "," : "") << probe_targets[i];
  }
  os << "\nrp_k=" << p.rp_k << "\nrp_suits=" << p.rp_suits << "\nrp_horizon=" << p.rp_horizon
     << "\nae_cards=" << p.ae_cards << "\nms=" << p.ms_rows << "x" << p.ms_cols << "/"
     << p.ms_mines << "\nbs=" << p.bs_rows << "x" << p.bs_cols << "/";
  for (size_t i = 0; i < p.bs_ships.size(); ++i) os << (i ? "," : "") << p.bs_ships[i];
  os << "\nconc=" << p.conc_decks << "/" << p.conc_match << "/" << p.conc_horizon
     << "\ndc_drops=" << p.dc_drops << "\n";
  return os.str();
}

std::string RunConfig::hash_hex() const {
  // FNV-1a 64
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

std::string RunConfig::run_dir() const {
  return out_dir + "/" + hash_hex() + "_s" + std::to_string(seed);
}

}  // namespace psrl
