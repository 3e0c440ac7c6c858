#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "sdec/config.hpp"
#include "sdec/csv.hpp"
#include "sdec/runner.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  REQUIRE(file.good());
  std::ostringstream out;
  out << file.rdbuf();
  return out.str();
}

std::string first_line(const std::string& text) {
  return text.substr(0, text.find('\n'));
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag)
      : path(std::filesystem::temp_directory_path() /
             ("sdec-test-" + tag + "-" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("parse_config fills defaults from a minimal document") {
  const sdec::RunConfig cfg =
      sdec::parse_config(R"({"command":"train","seed":1})");
  CHECK(cfg.command == "train");
  CHECK(cfg.seed == 1);
  CHECK(cfg.out == "out");
  CHECK(cfg.env.name == "pendulum");
  CHECK(cfg.env.sigma == 0.0);
  CHECK(cfg.env.noise_target == "accel");
  CHECK(cfg.features.variant == "phase");
  CHECK(cfg.features.m == 512);
  CHECK(cfg.features.n_nys == 512);  // resolved to m
  CHECK(cfg.features.alpha == 0.5);
  CHECK(cfg.train.updates == 50);
  CHECK(cfg.train.eta == -1.0);
  CHECK(cfg.train.action_points == 15);
  CHECK(cfg.baseline.name == "energy");
}

TEST_CASE("parse_config accepts a bare env name string") {
  const sdec::RunConfig cfg =
      sdec::parse_config(R"({"command":"train","env":"cartpole"})");
  CHECK(cfg.env.name == "cartpole");
}

TEST_CASE("parse_config rejects unknown keys with the offending path") {
  CHECK_THROWS_WITH_AS(
      sdec::parse_config(R"({"command":"train","comand":"x"})"),
      doctest::Contains("config.comand"), sdec::ConfigError);
  CHECK_THROWS_WITH_AS(
      sdec::parse_config(R"({"command":"train","env":{"nam":"pendulum"}})"),
      doctest::Contains("env.nam"), sdec::ConfigError);
  CHECK_THROWS_WITH_AS(
      sdec::parse_config(
          R"({"command":"train","features":{"bandwidt":1.0}})"),
      doctest::Contains("features.bandwidt"), sdec::ConfigError);
}

TEST_CASE("parse_config rejects malformed documents and bad values") {
  CHECK_THROWS_AS(sdec::parse_config("not json"), sdec::ConfigError);
  CHECK_THROWS_AS(sdec::parse_config("[1,2]"), sdec::ConfigError);
  CHECK_THROWS_AS(sdec::parse_config(R"({"command":"fly"})"),
                  sdec::ConfigError);
  CHECK_THROWS_AS(sdec::parse_config(R"({"command":"train","seed":-5})"),
                  sdec::ConfigError);
  CHECK_THROWS_AS(
      sdec::parse_config(R"({"command":"train","env":{"name":"quadruped"}})"),
      sdec::ConfigError);
  CHECK_THROWS_AS(
      sdec::parse_config(R"({"command":"train","env":3})"),
      sdec::ConfigError);
  CHECK_THROWS_AS(
      sdec::parse_config(
          R"({"command":"train","features":{"m":"big"}})"),
      sdec::ConfigError);
  CHECK_THROWS_WITH_AS(
      sdec::parse_config(
          R"({"command":"train","train":{"gamma":1.0}})"),
      doctest::Contains("train"), sdec::ConfigError);
}

TEST_CASE("parse_config enforces the feature-variant cross rules") {
  // Nystrom must not request more eigenpairs than landmarks.
  CHECK_THROWS_WITH_AS(
      sdec::parse_config(
          R"({"command":"train",
              "features":{"variant":"nystrom","m":32,"n_nys":16}})"),
      doctest::Contains("n_nys"), sdec::ConfigError);
  // The split paired-trig embedding diverges at alpha = 0.
  CHECK_THROWS_WITH_AS(
      sdec::parse_config(
          R"({"command":"train","features":{"variant":"rff","alpha":0.0}})"),
      doctest::Contains("alpha"), sdec::ConfigError);
  // The phase-shifted variant is fine at alpha = 0.
  const sdec::RunConfig ok = sdec::parse_config(
      R"({"command":"train","features":{"variant":"phase","alpha":0.0}})");
  CHECK(ok.features.alpha == 0.0);
}

TEST_CASE("serialize_config round-trips a fully customized config") {
  sdec::RunConfig cfg;
  cfg.command = "decay-bench";
  cfg.seed = 42;
  cfg.out = "elsewhere";
  cfg.env.name = "cartpole";
  cfg.env.sigma = 0.05;
  cfg.env.init_spread = 0.2;
  cfg.env.noise_target = "state";
  cfg.features.variant = "nystrom";
  cfg.features.m = 16;
  cfg.features.n_nys = 32;
  cfg.features.alpha = 0.3;
  cfg.features.sigma = 1.5;
  cfg.features.bandwidth = 0.7;
  cfg.train.updates = 3;
  cfg.train.eta = 0.02;
  cfg.train.gamma = 0.95;
  cfg.train.batch_size = 64;
  cfg.train.eval_episodes = 5;
  cfg.bench.m_values = {4, 8};
  cfg.bench.seeds = 3;
  cfg.bench.pairs = 11;
  cfg.bench.d = 2;
  cfg.bench.mu = "gauss";
  cfg.bench.box = 2.0;
  cfg.baseline.name = "ilqr";
  cfg.baseline.episodes = 7;
  cfg.baseline.ilqr_iterations = 12;
  cfg.baseline.ilqr_horizon = 50;
  cfg.diagnostics.batch_size = 300;
  cfg.diagnostics.gamma = 0.95;
  cfg.diagnostics.gram_points = 64;

  const std::string text = sdec::serialize_config(cfg);
  const sdec::RunConfig back = sdec::parse_config(text);
  CHECK(back.command == cfg.command);
  CHECK(back.seed == cfg.seed);
  CHECK(back.out == cfg.out);
  CHECK(back.env.name == cfg.env.name);
  CHECK(back.env.sigma == cfg.env.sigma);
  CHECK(back.env.init_spread == cfg.env.init_spread);
  CHECK(back.env.noise_target == cfg.env.noise_target);
  CHECK(back.features.variant == cfg.features.variant);
  CHECK(back.features.m == cfg.features.m);
  CHECK(back.features.n_nys == cfg.features.n_nys);
  CHECK(back.features.alpha == cfg.features.alpha);
  CHECK(back.features.sigma == cfg.features.sigma);
  CHECK(back.features.bandwidth == cfg.features.bandwidth);
  CHECK(back.train.updates == cfg.train.updates);
  CHECK(back.train.eta == cfg.train.eta);
  CHECK(back.train.gamma == cfg.train.gamma);
  CHECK(back.train.batch_size == cfg.train.batch_size);
  CHECK(back.train.eval_episodes == cfg.train.eval_episodes);
  CHECK(back.bench.m_values == cfg.bench.m_values);
  CHECK(back.bench.seeds == cfg.bench.seeds);
  CHECK(back.bench.pairs == cfg.bench.pairs);
  CHECK(back.bench.d == cfg.bench.d);
  CHECK(back.bench.mu == cfg.bench.mu);
  CHECK(back.bench.box == cfg.bench.box);
  CHECK(back.baseline.name == cfg.baseline.name);
  CHECK(back.baseline.episodes == cfg.baseline.episodes);
  CHECK(back.baseline.ilqr_iterations == cfg.baseline.ilqr_iterations);
  CHECK(back.baseline.ilqr_horizon == cfg.baseline.ilqr_horizon);
  CHECK(back.diagnostics.batch_size == cfg.diagnostics.batch_size);
  CHECK(back.diagnostics.gamma == cfg.diagnostics.gamma);
  CHECK(back.diagnostics.gram_points == cfg.diagnostics.gram_points);

  // Serialization is canonical: a second pass produces identical bytes.
  CHECK(sdec::serialize_config(back) == text);
}

TEST_CASE("worker_count reads SDEC_THREADS with clamping") {
  ::setenv("SDEC_THREADS", "4", 1);
  CHECK(sdec::worker_count(8) == 4);
  CHECK(sdec::worker_count(2) == 2);  // clamped to the task count
  ::setenv("SDEC_THREADS", "0", 1);
  CHECK(sdec::worker_count(8) == 1);
  ::setenv("SDEC_THREADS", "abc", 1);
  CHECK(sdec::worker_count(8) == 1);
  ::setenv("SDEC_THREADS", "9999", 1);
  CHECK(sdec::worker_count(6) == 6);
  ::unsetenv("SDEC_THREADS");
  CHECK(sdec::worker_count(8) == 1);
}

TEST_CASE("run writes byte-identical CSVs for identical config and seed") {
  TempDir dir_a("decay-a");
  TempDir dir_b("decay-b");
  sdec::RunConfig cfg = sdec::parse_config(R"({
    "command": "decay-bench",
    "seed": 7,
    "features": {"variant": "nystrom", "m": 4, "alpha": 0.5, "sigma": 1.0},
    "bench": {"m_values": [4, 8], "seeds": 2, "pairs": 10, "d": 1}
  })");

  cfg.out = dir_a.str();
  const sdec::RunResult a = sdec::run(cfg);
  cfg.out = dir_b.str();
  const sdec::RunResult b = sdec::run(cfg);

  const std::string csv_a = slurp(a.csv_path);
  const std::string csv_b = slurp(b.csv_path);
  CHECK(csv_a == csv_b);
  CHECK(first_line(csv_a) == "method,m,n_nys,seed,kernel_approx_error");
  // Two m values, two seeds, two methods, plus the header.
  int lines = 0;
  for (char c : csv_a) lines += c == '\n';
  CHECK(lines == 9);

  // The sidecar records the resolved config and the library version.
  const std::string sidecar = slurp(a.json_path);
  CHECK(sidecar.find(sdec::kVersion) != std::string::npos);
  CHECK(sidecar.find("wall_time_seconds") != std::string::npos);
  CHECK(sidecar.find("\"decay-bench\"") != std::string::npos);
}

TEST_CASE("run train emits the learning-curve schema") {
  TempDir dir("train");
  sdec::RunConfig cfg = sdec::parse_config(R"({
    "command": "train",
    "seed": 3,
    "env": {"name": "pendulum"},
    "features": {"variant": "phase", "m": 8},
    "train": {"updates": 2, "eta": 0.01, "batch_size": 40, "burn_in": 4,
              "stride": 1, "eval_every": 1, "eval_episodes": 2,
              "action_points": 3}
  })");
  cfg.out = dir.str();
  const sdec::RunResult res = sdec::run(cfg);
  CHECK(res.exit_code == 0);

  const std::string csv = slurp(res.csv_path);
  CHECK(first_line(csv) == "k,mean_reward,std,upsilon1,upsilon2,seconds");
  // Records at k = 0, 1, 2: header plus three rows.
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 4);
  CHECK(csv.substr(csv.find('\n') + 1, 2) == "0,");
}

TEST_CASE("run eval-baseline writes one summary row and checks the env") {
  TempDir dir("baseline");
  sdec::RunConfig cfg = sdec::parse_config(R"({
    "command": "eval-baseline",
    "seed": 5,
    "baseline": {"name": "zero", "episodes": 3}
  })");
  cfg.out = dir.str();
  const sdec::RunResult res = sdec::run(cfg);
  const std::string csv = slurp(res.csv_path);
  CHECK(first_line(csv) == "baseline,episodes,mean_return,std_return");
  CHECK(csv.find("zero,3,") != std::string::npos);

  // The energy baseline is pendulum-specific.
  sdec::RunConfig bad = cfg;
  bad.env.name = "cartpole";
  bad.baseline.name = "energy";
  CHECK_THROWS_AS(sdec::run(bad), sdec::ConfigError);
}

TEST_CASE("run diagnostics reports conditioning and eigendecay columns") {
  TempDir dir("diag");
  sdec::RunConfig cfg = sdec::parse_config(R"({
    "command": "diagnostics",
    "seed": 2,
    "features": {"variant": "phase", "m": 16},
    "diagnostics": {"batch_size": 300, "burn_in": 20, "stride": 2,
                    "gram_points": 64}
  })");
  cfg.out = dir.str();
  const sdec::RunResult res = sdec::run(cfg);
  const std::string csv = slurp(res.csv_path);
  CHECK(first_line(csv) ==
        "env,variant,m,upsilon1,upsilon2,decay_beta,decay_h,decay_r2");
  CHECK(csv.find("pendulum,phase,16,") != std::string::npos);
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 2);
}

TEST_CASE("CsvWriter quotes per RFC 4180 and pins the float format") {
  sdec::CsvWriter csv({"a", "b"});
  csv.add_row({"plain", "with,comma"});
  csv.add_row({"say \"hi\"", "line\nbreak"});
  const std::string text = csv.to_string();
  CHECK(text ==
        "a,b\n"
        "plain,\"with,comma\"\n"
        "\"say \"\"hi\"\"\",\"line\nbreak\"\n");

  CHECK_THROWS_AS(csv.add_row({"only-one"}), std::invalid_argument);
  CHECK_THROWS_AS(sdec::CsvWriter({}), std::invalid_argument);

  CHECK(sdec::CsvWriter::format(0.1) == "0.10000000000000001");
  CHECK(sdec::CsvWriter::format(1.0) == "1");
  CHECK(sdec::CsvWriter::format(static_cast<std::int64_t>(-3)) == "-3");
}
