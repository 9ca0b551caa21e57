#include "psrl/metrics.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "psrl/check.hpp"

namespace psrl {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

double parse_field(const std::string& s) {
  if (s.empty() || s == "nan") return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

}  // namespace

MetricsWriter::MetricsWriter(const std::string& path) : os_(path) {
  PSRL_CHECK(os_.good(), "cannot open metrics file: " << path);
  os_ << "step,episodes,psr_loss,actor_loss,critic_loss,eval_return,prediction_accuracy\n";
  os_.flush();
}

void MetricsWriter::write(const MetricsRow& row) {
  PSRL_CHECK(row.step > last_step_, "metrics steps must be strictly increasing");
  last_step_ = row.step;
  os_ << row.step << "," << row.episodes << "," << fmt(row.psr_loss) << ","
      << fmt(row.actor_loss) << "," << fmt(row.critic_loss) << "," << fmt(row.eval_return)
      << "," << fmt(row.prediction_accuracy) << "\n";
  os_.flush();
}

MetricsFrame MetricsFrame::load(const std::string& csv_path) {
  std::ifstream is(csv_path);
  PSRL_CHECK(is.good(), "cannot open metrics file: " << csv_path);
  MetricsFrame frame;
  auto dir = std::filesystem::path(csv_path).parent_path().filename().string();
  frame.run_id = dir;
  auto underscore = dir.find("_s");
  frame.config_hash = underscore == std::string::npos ? dir : dir.substr(0, underscore);

  std::string line;
  PSRL_CHECK(std::getline(is, line), "empty metrics file: " << csv_path);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f;
    MetricsRow row;
    std::getline(ss, f, ',');
    row.step = std::stol(f);
    std::getline(ss, f, ',');
    row.episodes = std::stol(f);
    std::getline(ss, f, ',');
    row.psr_loss = parse_field(f);
    std::getline(ss, f, ',');
    row.actor_loss = parse_field(f);
    std::getline(ss, f, ',');
    row.critic_loss = parse_field(f);
    std::getline(ss, f, ',');
    row.eval_return = parse_field(f);
    std::getline(ss, f, ',');
    row.prediction_accuracy = parse_field(f);
    frame.rows.push_back(row);
  }
  return frame;
}

}  // namespace psrl
