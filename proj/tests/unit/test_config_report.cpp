#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "towerstat/config.hpp"
#include "towerstat/experiments.hpp"
#include "towerstat/report.hpp"

using namespace towerstat;

namespace {

std::string error_of(const std::string& text) {
  try {
    ExperimentConfig cfg = parse_config_text(text);
    validate(cfg);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("minimal config gets defaults") {
  const ExperimentConfig cfg = parse_config_text(R"({
    // moments at q = 1.5
    "model": {"kind": "tail", "q": 1.5},
    "grid": {"n": [100, 1000, 10000]}
  })");
  CHECK(cfg.model.q == 1.5);
  CHECK(cfg.model.C == 1.0);
  CHECK(cfg.n_grid == std::vector<std::int64_t>{100, 1000, 10000});
  CHECK(cfg.replicas == 100000);
  CHECK(cfg.seed == 1);
  const ojson echo = config_echo(cfg);
  CHECK(echo["model"]["q"] == 1.5);
  CHECK(echo["run"]["replicas"] == 100000);
  CHECK(echo.begin().key() == "model");
}

TEST_CASE("config errors are precise") {
  CHECK(error_of(R"({"model": {"q": 0.9}})").find("q > 1") != std::string::npos);
  CHECK(error_of(R"({"model": {"q": "big"}})") == "model.q: expected number, got string");
  CHECK(error_of(R"({"model": {"C": 1}})") == "model.q: missing required key");
  CHECK(error_of(R"({"model": {"kind": "lsv", "gamma": 1.2}})") == "model.gamma: must lie in (0,1)");
  CHECK(error_of(R"({"model": {"kind": "lsv"}})") == "model.gamma: missing required key");
  CHECK(error_of(R"({"model": {"q": 2, "colour": 1}})") == "model.colour: unknown key");
  CHECK(error_of(R"({"model": {"q": 2}, "extras": {}})") == "extras: unknown section");
  CHECK(error_of(R"({"model": {"q": 2}, "grid": {"n": [10, "x"]}})").find("grid.n") == 0);
  CHECK(error_of("{\"model\": ").find("syntax") != std::string::npos);
  CHECK(error_of(R"({})") == "model: missing required section");
  CHECK_THROWS_AS(parse_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("seed override reaches the provenance") {
  ExperimentConfig cfg = parse_config_text(R"({"model": {"q": 2, "h_max": 1000}})");
  cfg.seed = 42;
  const ExperimentReport r = run_tower_info(cfg);
  CHECK(r.provenance["seed"] == 42);
  const ojson j = to_json(r);
  CHECK(j["provenance"]["seed"] == 42);
  CHECK(j["config"]["run"]["seed"] == 42);
}

TEST_CASE("report layout is fixed") {
  ExperimentReport r;
  r.id = "demo";
  r.rows.push_back({100, 2.0, 1.5, 0.1, 1.2, 1.0, 0.0, 1.0, 0.0});
  r.check("always", true);
  const ojson j = to_json(r);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys == std::vector<std::string>{"id", "version", "config", "provenance", "cells",
                                         "results", "checks", "passed"});
  const std::string csv = to_csv(r);
  CHECK(csv.substr(0, csv.find('\n')) ==
        "n,p,estimate,stderr,weak_estimate,beta,gamma,predicted_beta,predicted_gamma");
  CHECK(csv.find("\n100,2,1.5,0.10000000000000001,1.2,1,0,1,0\n") != std::string::npos);
}

TEST_CASE("reports are deterministic and append-only") {
  ExperimentConfig cfg = parse_config_text(R"({
    "model": {"q": 3, "h_max": 100000},
    "grid": {"n": [100, 300, 1000], "p": [2]},
    "run": {"replicas": 2000, "seed": 9}
  })");
  const std::string a = to_json(run_moment_scaling(cfg)).dump(2);
  const std::string b = to_json(run_moment_scaling(cfg)).dump(2);
  CHECK(a == b);
  cfg.seed = 10;
  CHECK(to_json(run_moment_scaling(cfg)).dump(2) != a);

  const auto dir = std::filesystem::temp_directory_path() / "towerstat_unit_reports";
  std::filesystem::remove_all(dir);
  ExperimentReport r;
  r.id = "demo";
  r.provenance = {{"seed", 5}};
  const ReportFiles f1 = write_report(r, dir.string(), "20260101T000000Z");
  const ReportFiles f2 = write_report(r, dir.string(), "20260101T000000Z");
  CHECK(f1.json != f2.json);
  CHECK(std::filesystem::path(f1.json).filename() == "demo_20260101T000000Z_s5.json");
  CHECK(slurp(f1.json) == slurp(f2.json));
  CHECK(utc_timestamp().size() == 16);
  std::filesystem::remove_all(dir);
}
