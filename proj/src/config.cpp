#include "sdec/config.hpp"

#include <cmath>
#include <initializer_list>
#include <limits>
#include <string>

#include "json.hpp"

namespace sdec {

namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) fail(path + "." + item.key(), "unknown key");
  }
}

void read_double(const json& j, const char* key, double& out,
                 const std::string& path) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  out = v.get<double>();
  if (std::isnan(out)) fail(path + "." + key, "must not be NaN");
}

void read_int(const json& j, const char* key, int& out,
              const std::string& path) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
  const std::int64_t raw = v.get<std::int64_t>();
  if (raw < std::numeric_limits<int>::min() ||
      raw > std::numeric_limits<int>::max()) {
    fail(path + "." + key, "out of range");
  }
  out = static_cast<int>(raw);
}

void read_u64(const json& j, const char* key, std::uint64_t& out,
              const std::string& path) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (v.is_number_unsigned()) {
    out = v.get<std::uint64_t>();
    return;
  }
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    out = static_cast<std::uint64_t>(v.get<std::int64_t>());
    return;
  }
  fail(path + "." + key, "expected a non-negative integer");
}

void read_string(const json& j, const char* key, std::string& out,
                 const std::string& path) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_string()) fail(path + "." + key, "expected a string");
  out = v.get<std::string>();
}

void read_int_list(const json& j, const char* key, std::vector<int>& out,
                   const std::string& path) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_array()) fail(path + "." + key, "expected an array of integers");
  std::vector<int> parsed;
  for (const json& e : v) {
    if (!e.is_number_integer()) {
      fail(path + "." + key, "expected an array of integers");
    }
    parsed.push_back(e.get<int>());
  }
  out = std::move(parsed);
}

void require_one_of(const std::string& value, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (const char* option : allowed) {
    if (value == option) return;
  }
  std::string list;
  for (const char* option : allowed) {
    if (!list.empty()) list += ", ";
    list += option;
  }
  fail(path, "got \"" + value + "\", expected one of: " + list);
}

void parse_env(const json& j, EnvConfig& env) {
  if (j.is_string()) {
    env.name = j.get<std::string>();
  } else if (j.is_object()) {
    check_keys(j, "env", {"name", "sigma", "init_spread", "noise_target"});
    read_string(j, "name", env.name, "env");
    read_double(j, "sigma", env.sigma, "env");
    read_double(j, "init_spread", env.init_spread, "env");
    read_string(j, "noise_target", env.noise_target, "env");
  } else {
    fail("env", "expected a name string or an object");
  }
  require_one_of(env.name, "env.name",
                 {"pendulum", "cartpole", "pendubot", "drone2d"});
  require_one_of(env.noise_target, "env.noise_target", {"accel", "state"});
  if (env.sigma < 0.0) fail("env.sigma", "must be >= 0");
}

void parse_features(const json& j, FeatureConfig& f) {
  check_keys(j, "features",
             {"variant", "m", "n_nys", "alpha", "sigma", "bandwidth"});
  read_string(j, "variant", f.variant, "features");
  read_int(j, "m", f.m, "features");
  read_int(j, "n_nys", f.n_nys, "features");
  read_double(j, "alpha", f.alpha, "features");
  read_double(j, "sigma", f.sigma, "features");
  read_double(j, "bandwidth", f.bandwidth, "features");
  require_one_of(f.variant, "features.variant", {"rff", "phase", "nystrom"});
  if (f.m < 1) fail("features.m", "must be >= 1");
  if (!(f.alpha >= 0.0 && f.alpha < 1.0)) {
    fail("features.alpha", "must lie in [0, 1)");
  }
  if (f.variant == "rff" && f.alpha == 0.0) {
    fail("features.alpha",
         "the paired-trig rff variant needs alpha > 0; use variant \"phase\" "
         "for a plain stationary kernel");
  }
  if (!(f.sigma > 0.0)) fail("features.sigma", "must be > 0");
  if (!(f.bandwidth > 0.0)) fail("features.bandwidth", "must be > 0");
  if (f.n_nys < 0) f.n_nys = f.m;
  if (f.variant == "nystrom" && f.n_nys < f.m) {
    fail("features.n_nys",
         "the Nystrom landmark count n_nys must satisfy n_nys >= m");
  }
}

void parse_train(const json& j, TrainConfig& t) {
  check_keys(j, "train",
             {"updates", "eta", "gamma", "batch_size", "burn_in", "stride",
              "eval_every", "eval_episodes", "action_points",
              "lspe_iterations", "lspe_ridge"});
  read_int(j, "updates", t.updates, "train");
  read_double(j, "eta", t.eta, "train");
  read_double(j, "gamma", t.gamma, "train");
  read_int(j, "batch_size", t.batch_size, "train");
  read_int(j, "burn_in", t.burn_in, "train");
  read_int(j, "stride", t.stride, "train");
  read_int(j, "eval_every", t.eval_every, "train");
  read_int(j, "eval_episodes", t.eval_episodes, "train");
  read_int(j, "action_points", t.action_points, "train");
  read_int(j, "lspe_iterations", t.lspe_iterations, "train");
  read_double(j, "lspe_ridge", t.lspe_ridge, "train");
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    fail("train", e.what());
  }
}

void parse_bench(const json& j, BenchConfig& b) {
  check_keys(j, "bench", {"m_values", "seeds", "pairs", "d", "mu", "box"});
  read_int_list(j, "m_values", b.m_values, "bench");
  read_int(j, "seeds", b.seeds, "bench");
  read_int(j, "pairs", b.pairs, "bench");
  read_int(j, "d", b.d, "bench");
  read_string(j, "mu", b.mu, "bench");
  read_double(j, "box", b.box, "bench");
  if (b.m_values.empty()) fail("bench.m_values", "must be non-empty");
  for (int m : b.m_values) {
    if (m < 1) fail("bench.m_values", "entries must be >= 1");
  }
  if (b.seeds < 1) fail("bench.seeds", "must be >= 1");
  if (b.pairs < 1) fail("bench.pairs", "must be >= 1");
  if (b.d < 1) fail("bench.d", "must be >= 1");
  require_one_of(b.mu, "bench.mu", {"p_alpha", "uniform", "gauss"});
  if (!(b.box > 0.0)) fail("bench.box", "must be > 0");
}

void parse_baseline(const json& j, BaselineConfig& b) {
  check_keys(j, "baseline",
             {"name", "episodes", "ilqr_iterations", "ilqr_horizon"});
  read_string(j, "name", b.name, "baseline");
  read_int(j, "episodes", b.episodes, "baseline");
  read_int(j, "ilqr_iterations", b.ilqr_iterations, "baseline");
  read_int(j, "ilqr_horizon", b.ilqr_horizon, "baseline");
  require_one_of(b.name, "baseline.name", {"energy", "zero", "uniform", "ilqr"});
  if (b.episodes < 1) fail("baseline.episodes", "must be >= 1");
  if (b.ilqr_iterations < 1) fail("baseline.ilqr_iterations", "must be >= 1");
  if (b.ilqr_horizon == 0) {
    fail("baseline.ilqr_horizon", "must be >= 1 (or < 0 for the env horizon)");
  }
}

void parse_diagnostics(const json& j, DiagnosticsConfig& d) {
  check_keys(j, "diagnostics",
             {"batch_size", "burn_in", "stride", "gamma", "gram_points"});
  read_int(j, "batch_size", d.batch_size, "diagnostics");
  read_int(j, "burn_in", d.burn_in, "diagnostics");
  read_int(j, "stride", d.stride, "diagnostics");
  read_double(j, "gamma", d.gamma, "diagnostics");
  read_int(j, "gram_points", d.gram_points, "diagnostics");
  if (d.batch_size < 1) fail("diagnostics.batch_size", "must be >= 1");
  if (d.burn_in < 0) fail("diagnostics.burn_in", "must be >= 0");
  if (d.stride < 1) fail("diagnostics.stride", "must be >= 1");
  if (!(d.gamma >= 0.0 && d.gamma < 1.0)) {
    fail("diagnostics.gamma", "must lie in [0, 1)");
  }
  if (d.gram_points < 4) fail("diagnostics.gram_points", "must be >= 4");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("top level: expected an object");
  check_keys(j, "config",
             {"command", "seed", "out", "env", "features", "train", "bench",
              "baseline", "diagnostics"});

  RunConfig cfg;
  read_string(j, "command", cfg.command, "config");
  require_one_of(cfg.command, "command",
                 {"features-bench", "decay-bench", "train", "eval-baseline",
                  "diagnostics"});
  read_u64(j, "seed", cfg.seed, "config");
  read_string(j, "out", cfg.out, "config");
  if (cfg.out.empty()) throw ConfigError("out: must be non-empty");

  if (j.contains("env")) parse_env(j.at("env"), cfg.env);
  if (j.contains("features")) parse_features(j.at("features"), cfg.features);
  if (cfg.features.n_nys < 0) cfg.features.n_nys = cfg.features.m;
  if (j.contains("train")) parse_train(j.at("train"), cfg.train);
  if (j.contains("bench")) parse_bench(j.at("bench"), cfg.bench);
  if (j.contains("baseline")) parse_baseline(j.at("baseline"), cfg.baseline);
  if (j.contains("diagnostics")) {
    parse_diagnostics(j.at("diagnostics"), cfg.diagnostics);
  }
  return cfg;
}

std::string serialize_config(const RunConfig& c) {
  ordered j;
  j["command"] = c.command;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["env"] = {{"name", c.env.name},
              {"sigma", c.env.sigma},
              {"init_spread", c.env.init_spread},
              {"noise_target", c.env.noise_target}};
  j["features"] = {{"variant", c.features.variant},
                   {"m", c.features.m},
                   {"n_nys", c.features.n_nys},
                   {"alpha", c.features.alpha},
                   {"sigma", c.features.sigma},
                   {"bandwidth", c.features.bandwidth}};
  j["train"] = {{"updates", c.train.updates},
                {"eta", c.train.eta},
                {"gamma", c.train.gamma},
                {"batch_size", c.train.batch_size},
                {"burn_in", c.train.burn_in},
                {"stride", c.train.stride},
                {"eval_every", c.train.eval_every},
                {"eval_episodes", c.train.eval_episodes},
                {"action_points", c.train.action_points},
                {"lspe_iterations", c.train.lspe_iterations},
                {"lspe_ridge", c.train.lspe_ridge}};
  j["bench"] = {{"m_values", c.bench.m_values},
                {"seeds", c.bench.seeds},
                {"pairs", c.bench.pairs},
                {"d", c.bench.d},
                {"mu", c.bench.mu},
                {"box", c.bench.box}};
  j["baseline"] = {{"name", c.baseline.name},
                   {"episodes", c.baseline.episodes},
                   {"ilqr_iterations", c.baseline.ilqr_iterations},
                   {"ilqr_horizon", c.baseline.ilqr_horizon}};
  j["diagnostics"] = {{"batch_size", c.diagnostics.batch_size},
                      {"burn_in", c.diagnostics.burn_in},
                      {"stride", c.diagnostics.stride},
                      {"gamma", c.diagnostics.gamma},
                      {"gram_points", c.diagnostics.gram_points}};
  return j.dump(2) + "\n";
}

}  // namespace sdec
