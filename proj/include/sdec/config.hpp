#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdec/policy_opt.hpp"

namespace sdec {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EnvConfig {
  std::string name = "pendulum";
  double sigma = 0.0;         // process noise scale
  double init_spread = -1.0;  // < 0 keeps the environment default
  std::string noise_target = "accel";  // "accel" | "state"
};

struct FeatureConfig {
  std::string variant = "phase";  // "rff" | "phase" | "nystrom"
  int m = 512;                    // frequencies / kept eigenpairs
  int n_nys = -1;                 // landmark count; < 0 defaults to m
  double alpha = 0.5;             // kernel split parameter
  double sigma = 1.0;             // Gaussian kernel width
  double bandwidth = 1.0;         // phase-shifted frequency scale
};

// Synthetic kernel-approximation sweeps (features-bench, decay-bench).
struct BenchConfig {
  std::vector<int> m_values = {16, 32, 64, 128, 256};
  int seeds = 20;
  int pairs = 200;          // evaluation pairs / points per cell
  int d = 1;                // input dimension
  std::string mu = "p_alpha";  // "p_alpha" | "uniform" | "gauss"
  double box = 1.5;         // uniform half-width / gauss scale
};

struct BaselineConfig {
  std::string name = "energy";  // "energy" | "zero" | "uniform" | "ilqr"
  int episodes = 100;
  int ilqr_iterations = 50;
  int ilqr_horizon = -1;  // < 0 uses the environment horizon
};

struct DiagnosticsConfig {
  int batch_size = 2000;
  int burn_in = 200;
  int stride = 10;
  double gamma = 0.99;
  int gram_points = 256;  // batch prefix used for the eigendecay fit
};

struct RunConfig {
  std::string command = "train";
  std::uint64_t seed = 0;
  std::string out = "out";
  EnvConfig env;
  FeatureConfig features;
  TrainConfig train;
  BenchConfig bench;
  BaselineConfig baseline;
  DiagnosticsConfig diagnostics;
};

// Parses and validates a JSON config. Unknown keys anywhere are rejected,
// defaults are filled in, and cross-field rules (notably n_nys >= m for the
// Nystrom variant) are enforced. Throws ConfigError with the offending key
// path.
RunConfig parse_config(const std::string& text);

// Canonical JSON serialization; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

}  // namespace sdec
