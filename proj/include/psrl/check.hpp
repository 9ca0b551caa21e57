#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace psrl {

// Contract checks stay active in release builds.
#define PSRL_CHECK(cond, msg)                                      \
  do {                                                             \
    if (!(cond)) {                                                 \
      std::ostringstream oss_;                                     \
      oss_ << msg;                                                 \
      throw std::logic_error(std::string(__FILE__) + ":" +         \
                             std::to_string(__LINE__) + ": " +     \
                             oss_.str());                          \
    }                                                              \
  } while (false)

}  // namespace psrl
