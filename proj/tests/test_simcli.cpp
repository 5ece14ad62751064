#include <doctest.h>

#include "mlsmooth/config.hpp"
#include "mlsmooth/oracles.hpp"
#include "mlsmooth/output.hpp"
#include "mlsmooth/study.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mlsmooth;

namespace {

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  return out;
}

std::string csv_of(const RunReport& r) {
  std::ostringstream s;
  write_study_csv(r, s);
  return s.str();
}

ExperimentConfig tiny(const std::string& kind, int n, int M, int N) {
  ExperimentConfig cfg = default_config(kind);
  cfg.n = n;
  cfg.particles = M;
  cfg.replicates = N;
  cfg.seed = 11;
  return cfg;
}

} // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig cfg = parse_config(R"({
    "model": {"kind": "linear"},
    "run": {"n": 40, "M": 500, "N": 30, "seed": 9, "decouple_rts": true},
    "iter": {"scheme": "newton", "epsilon": 1e-8, "max_iters": 50, "damping": 0.5,
             "growth_limit": 4, "max_halvings": 3, "terminal": "maximize"},
    "out": {"dir": "somewhere"}
  })");
  CHECK(cfg.n == 40);
  CHECK(cfg.particles == 500);
  CHECK(cfg.replicates == 30);
  CHECK(cfg.seed == 9);
  CHECK(cfg.decouple_rts);
  CHECK(cfg.iter.scheme == Scheme::newton);
  CHECK(cfg.iter.epsilon == 1e-8);
  CHECK(cfg.iter.max_iters == 50);
  CHECK(cfg.iter.damping == 0.5);
  CHECK(cfg.iter.growth_limit == 4);
  CHECK(cfg.iter.max_halvings == 3);
  CHECK(cfg.iter.terminal == TerminalRule::maximize);
  CHECK(cfg.out_dir == "somewhere");
  CHECK(build_model(cfg)->state_dim() == 3);

  const ExperimentConfig t = parse_config(R"({"model": {"kind": "tanh", "q": 0.5}})");
  CHECK(t.model.q == 0.5);
  CHECK(t.model.r == 1.0);
  CHECK(build_model(t)->kind() == "tanh");

  const ExperimentConfig d = parse_config("{}");
  CHECK(d.model.kind == "linear");
  CHECK(d.n == 100);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"runs": {}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"run": {"particles": 10}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"run": {"n": "ten"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"run": {"seed": -1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"run": {"decouple_rts": 1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"iter": {"scheme": "gauss"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"iter": {"terminal": "last"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"kind": "cubic"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"kind": "tanh", "F": [[1]]}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"kind": "linear", "q": 0.3}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"F": [[1]]}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"run": {"M": 0}})"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);

  // Non-symmetric Q is only caught when the model is built.
  const ExperimentConfig bad = parse_config(R"({"model": {
    "F": [[1, 0], [0, 1]], "H": [[1, 0]], "Q": [[1, 0.5], [0, 1]], "R": [[1]],
    "mu": [0, 0], "P0": [[1, 0], [0, 1]]}})");
  CHECK_THROWS_AS(build_model(bad), ConfigError);
}

TEST_CASE("explicit linear model with control input") {
  const ExperimentConfig cfg = parse_config(R"({"model": {
    "F": [[0.9]], "G": [[1]], "H": [[1]], "Q": [[0.5]], "R": [[1]],
    "mu": [0], "P0": [[1]], "u": [[0.1], [0.2], [0.3], [0.4]]}, "run": {"n": 3}})");
  const LinearGaussianModel m = build_linear_model(cfg);
  CHECK(m.state_dim() == 1);
  CHECK(m.horizon() == 3);
}

TEST_CASE("miniature linear study: shape, columns and precision") {
  const RunReport r = run_linear_study(tiny("linear", 1, 200, 1));
  REQUIRE(r.rows.size() == 2);
  const auto rows = lines(csv_of(r));
  REQUIRE(rows.size() == 3);
  const auto header = split(rows[0]);
  CHECK(header.size() == 1 + 8 * 3 + 1);
  CHECK(header.front() == "k");
  CHECK(header[1] == "x_true[0]");
  CHECK(header.back() == "converged");
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(split(rows[i]).size() == header.size());

  // 17 significant digits round-trip exactly.
  const auto first = split(rows[1]);
  CHECK(std::stod(first[1]) == r.rows[0].x_true[0]);
  for (std::size_t c = 1; c + 1 < first.size(); ++c) CHECK(first[c] != "nan");

  const RunReport again = run_linear_study(tiny("linear", 1, 200, 1));
  CHECK(csv_of(again) == csv_of(r));
}

TEST_CASE("decoupled RTS column equals the filter") {
  ExperimentConfig cfg = tiny("linear", 6, 200, 1);
  cfg.decouple_rts = true;
  const RunReport r = run_linear_study(cfg);
  for (const auto& row : r.rows) CHECK(row.xhat_rts == row.xhat_filt);
}

TEST_CASE("linear study with replicates") {
  const RunReport r = run_linear_study(tiny("linear", 8, 300, 4));
  REQUIRE(r.rows.size() == 9);
  for (const auto& row : r.rows) {
    CHECK(row.s_sample.size() == 3);
    CHECK((row.ci_lo.array() <= row.xhat_smc.array()).all());
    CHECK((row.ci_hi - row.xhat_smc - 1.96 * row.sigma_hat).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(row.sigma_theory.allFinite());
  }
  CHECK(r.coverage_fraction >= 0.0);
  CHECK(r.coverage_fraction <= 1.0);
  CHECK(r.convergence_rate <= 1.0);
  CHECK(r.steps_covered <= 9);
}

TEST_CASE("nonlinear study: NaN reference columns and spread") {
  const RunReport r = run_nonlinear_study(tiny("tanh", 5, 300, 3));
  CHECK(r.kind == "tanh");
  for (const auto& row : r.rows) {
    CHECK(std::isnan(row.xhat_rts[0]));
    CHECK(std::isnan(row.sigma_theory[0]));
    CHECK(std::isfinite(row.xhat_smc[0]));
    CHECK(row.s_sample.size() == 1);
  }
  const auto rows = lines(csv_of(r));
  const auto header = split(rows[0]);
  const auto first = split(rows[1]);
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == "xhat_rts[0]" || header[c] == "sigma_theory[0]") CHECK(first[c] == "nan");

  CHECK_THROWS_AS(run_nonlinear_study(tiny("linear", 5, 300, 3)), ConfigError);
  CHECK(run_study(tiny("tanh", 3, 100, 1)).kind == "tanh");
}

TEST_CASE("summary and files on disk") {
  const RunReport r = run_nonlinear_study(tiny("tanh", 4, 200, 3));
  const auto j = nlohmann::json::parse(summary_json(r));
  CHECK(j.at("kind") == "tanh");
  CHECK(j.at("steps") == 5);
  CHECK(j.at("particles") == 200);
  CHECK(j.at("timings_s").is_object());

  const auto dir = std::filesystem::temp_directory_path() / "mlsmooth_simcli_test";
  std::filesystem::remove_all(dir);
  const auto written = write_outputs(r, dir.string());
  for (const char* name : {"tanh_study.csv", "tanh_standard_errors.csv", "tanh_summary.json", "tanh_states_0.svg",
                           "tanh_stderr_0.svg"})
    CHECK(std::filesystem::exists(dir / name));
  CHECK(written.size() == 5);

  std::ifstream svg(dir / "tanh_states_0.svg");
  const std::string doc((std::istreambuf_iterator<char>(svg)), std::istreambuf_iterator<char>());
  CHECK(doc.find("<svg") != std::string::npos);
  CHECK(doc.find("RTS") == std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("trajectory CSV") {
  const Trajectory t = simulate(three_state_linear_model(100), 5);
  std::ostringstream s;
  write_trajectory_csv(t, s);
  const auto rows = lines(s.str());
  CHECK(rows.size() == 102);
  CHECK(split(rows[0]).size() == 1 + 3 + 1);
}

TEST_CASE("different seeds give different studies") {
  ExperimentConfig a = tiny("linear", 3, 100, 1), b = a;
  b.seed = 12;
  CHECK(csv_of(run_linear_study(a)) != csv_of(run_linear_study(b)));
}

TEST_CASE("reduced particle count widens the Monte Carlo bands") {
  const OracleCheck small = check_particle_filter(7, 50, 10);
  const OracleCheck large = check_particle_filter(7, 5000, 10);
  INFO(small.detail);
  CHECK(small.passed);
  CHECK(large.passed);
}
