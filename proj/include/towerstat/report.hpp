#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "towerstat/config.hpp"
#include "towerstat/tower.hpp"

namespace towerstat {

/// One (n, p) cell; CSV columns follow the field order.
struct CellRow {
  std::int64_t n = 0;
  double p = 0;
  double estimate = 0, stderr_ = 0, weak_estimate = 0;
  double beta = 0, gamma = 0, predicted_beta = 0, predicted_gamma = 0;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExperimentReport {
  std::string id;
  ojson config = ojson::object();
  ojson provenance = ojson::object();
  ojson results = ojson::object();
  std::vector<CellRow> rows;
  std::vector<CheckResult> checks;

  bool passed() const;
  void check(std::string name, bool pass, std::string detail = {});
};

/// Version, seed, truncation height and lumped mass of the model.
ojson model_provenance(const TowerModel& model, std::uint64_t seed);

/// Keys in order: id, version, config, provenance, cells, results, checks, passed.
ojson to_json(const ExperimentReport& report);
/// Header n,p,estimate,stderr,weak_estimate,beta,gamma,predicted_beta,predicted_gamma.
std::string to_csv(const ExperimentReport& report);

struct ReportFiles {
  std::string json, csv;
};

/// UTC time as YYYYmmddTHHMMSSZ.
std::string utc_timestamp();
/// Writes <id>_<timestamp>_s<seed>.{json,csv} under `dir`, never overwriting
/// an existing file (a numeric suffix is added instead).
ReportFiles write_report(const ExperimentReport& report, const std::string& dir,
                         const std::string& timestamp);

}  // namespace towerstat
