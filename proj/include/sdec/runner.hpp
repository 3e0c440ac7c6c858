#pragma once

#include <string>

#include "sdec/config.hpp"

namespace sdec {

inline constexpr const char* kVersion = "sdec 0.1.0";

struct RunResult {
  int exit_code = 0;
  std::string csv_path;
  std::string json_path;
};

// Executes the configured command. Writes <out>/<command>.csv plus a JSON
// sidecar (resolved config, version string, wall time); the CSV bytes depend
// only on (config, seed). Throws ConfigError for invalid command/env
// combinations and numerical_abort when an iterate goes non-finite.
RunResult run(const RunConfig& config);

// Worker cap for parallel sweeps: SDEC_THREADS clamped to [1, tasks];
// unset or unparsable means 1.
int worker_count(int tasks);

}  // namespace sdec
