#pragma once

#include <stdexcept>

namespace lmpgan {

// Error taxonomy mirrors the CLI exit codes:
//   ConfigError -> 1 (usage / configuration)
//   DataError   -> 2 (malformed or insufficient data)
//   NumericError-> 3 (divergence, non-finite values)
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lmpgan
