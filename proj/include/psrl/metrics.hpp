#pragma once

// Metrics stream written per run and re-read by the report tool.

#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace psrl {

struct MetricsRow {
  long step = 0;
  long episodes = 0;
  double psr_loss = std::numeric_limits<double>::quiet_NaN();
  double actor_loss = std::numeric_limits<double>::quiet_NaN();
  double critic_loss = std::numeric_limits<double>::quiet_NaN();
  double eval_return = std::numeric_limits<double>::quiet_NaN();
  double prediction_accuracy = std::numeric_limits<double>::quiet_NaN();
};

class MetricsWriter {
 public:
  MetricsWriter() = default;
  explicit MetricsWriter(const std::string& path);
  void write(const MetricsRow& row);
  bool open() const { return os_.is_open(); }

 private:
  std::ofstream os_;
  long last_step_ = -1;
};

// A loaded metrics CSV plus its run identity.
struct MetricsFrame {
  std::string run_id;
  std::string config_hash;
  std::vector<MetricsRow> rows;

  static MetricsFrame load(const std::string& csv_path);
};

}  // namespace psrl
