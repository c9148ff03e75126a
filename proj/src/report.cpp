#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "towerstat/report.hpp"

namespace towerstat {

namespace fs = std::filesystem;

bool ExperimentReport::passed() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

void ExperimentReport::check(std::string name, bool pass, std::string detail) {
  checks.push_back({std::move(name), pass, std::move(detail)});
}

ojson model_provenance(const TowerModel& model, std::uint64_t seed) {
  const TailLaw& law = model.tail();
  ojson p;
  p["version"] = kVersion;
  p["seed"] = seed;
  p["h_max"] = model.h_max();
  p["lumped_mass"] = law.lumped_mass();
  p["mu_Y"] = model.mu_Y();
  p["mean_return_time"] = model.mean_return_time();
  p["tail_index"] = law.q();
  p["realized_constant"] = law.realized_constant();
  return p;
}

ojson to_json(const ExperimentReport& r) {
  ojson j;
  j["id"] = r.id;
  j["version"] = kVersion;
  j["config"] = r.config;
  j["provenance"] = r.provenance;
  ojson cells = ojson::array();
  for (const auto& c : r.rows)
    cells.push_back({{"n", c.n},
                     {"p", c.p},
                     {"estimate", c.estimate},
                     {"stderr", c.stderr_},
                     {"weak_estimate", c.weak_estimate},
                     {"beta", c.beta},
                     {"gamma", c.gamma},
                     {"predicted_beta", c.predicted_beta},
                     {"predicted_gamma", c.predicted_gamma}});
  j["cells"] = cells;
  j["results"] = r.results;
  ojson checks = ojson::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["checks"] = checks;
  j["passed"] = r.passed();
  return j;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string unique_path(const fs::path& dir, const std::string& stem, const std::string& ext) {
  fs::path p = dir / (stem + ext);
  for (int k = 1; fs::exists(p); ++k) p = dir / (stem + "_" + std::to_string(k) + ext);
  return p.string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot write report");
  out << content;
}

}  // namespace

std::string to_csv(const ExperimentReport& r) {
  std::string s = "n,p,estimate,stderr,weak_estimate,beta,gamma,predicted_beta,predicted_gamma\n";
  for (const auto& c : r.rows) {
    s += std::to_string(c.n);
    for (double v : {c.p, c.estimate, c.stderr_, c.weak_estimate, c.beta, c.gamma,
                     c.predicted_beta, c.predicted_gamma})
      s += "," + num(v);
    s += "\n";
  }
  return s;
}

std::string utc_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

ReportFiles write_report(const ExperimentReport& r, const std::string& dir,
                         const std::string& timestamp) {
  fs::create_directories(dir);
  std::string seed = "0";
  if (r.provenance.contains("seed")) seed = r.provenance["seed"].dump();
  const std::string stem = r.id + "_" + timestamp + "_s" + seed;
  ReportFiles files;
  files.json = unique_path(dir, stem, ".json");
  files.csv = unique_path(dir, stem, ".csv");
  write_file(files.json, to_json(r).dump(2) + "\n");
  write_file(files.csv, to_csv(r));
  return files;
}

}  // namespace towerstat
