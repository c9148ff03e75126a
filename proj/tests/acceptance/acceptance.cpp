// One PASS/FAIL line per acceptance criterion. Pass criterion numbers as
// arguments to run a subset.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "towerstat/config.hpp"
#include "towerstat/experiments.hpp"
#include "towerstat/lemma_battery.hpp"
#include "towerstat/renewal.hpp"
#include "towerstat/report.hpp"
#include "towerstat/truncated.hpp"

using namespace towerstat;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string config_path(const std::string& name) {
  return std::string(TOWERSTAT_CONFIG_DIR) + "/" + name;
}

std::string out_dir() {
  const char* env = std::getenv(kOutDirEnv);
  return env && *env ? env : "acceptance_reports";
}

// Runs a configured experiment and keeps its report on disk.
ExperimentReport run_saved(const std::function<ExperimentReport(const ExperimentConfig&)>& run,
                           const std::string& config) {
  ExperimentConfig cfg = parse_config(config_path(config));
  cfg.out_dir = out_dir();
  ExperimentReport r = run(cfg);
  write_report(r, cfg.out_dir, utc_timestamp());
  return r;
}

std::string failed_checks(const ExperimentReport& r) {
  std::string s;
  for (const auto& c : r.checks)
    if (!c.pass) s += (s.empty() ? "" : "; ") + c.name + (c.detail.empty() ? "" : " [" + c.detail + "]");
  return s;
}

Outcome from_report(const ExperimentReport& r, const std::string& summary) {
  return {r.passed(), r.passed() ? summary : "failed: " + failed_checks(r)};
}

// Σ over compositions of n of R_{l_1} ... R_{l_k}.
Eigen::MatrixXd composition_sum(const std::vector<Eigen::MatrixXd>& R, int n, const Eigen::MatrixXd& acc) {
  if (n == 0) return acc;
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(acc.rows(), acc.cols());
  for (int l = 1; l <= n; ++l) total += composition_sum(R, n - l, acc * R[l]);
  return total;
}

std::vector<TowerModel> small_models() {
  std::vector<TowerModel> out;
  out.push_back(build_tower(TailLaw::from_pmf({0.5, 0.5})));
  out.push_back(build_tower(TailLaw::from_pmf({0.2, 0.0, 0.3, 0.0, 0.5})));
  out.push_back(build_tower(TailLaw::power(1.5, 1.0, 12)));
  out.push_back(build_tower(TailLaw::power(2.5, 1.0, 7, 0.5, 0.3)));
  for (int S : {2, 3}) {
    Rng rng(derive_seed(1, 0xACC1, static_cast<std::uint64_t>(S)));
    std::vector<double> table(static_cast<std::size_t>(S * S * 12));
    for (double& v : table) v = 0.05 + uniform01(rng);
    out.push_back(build_tower(TailLaw::power(1.5, 1.0, 12), S, [table, S](int s, std::int64_t h) {
      Eigen::VectorXd row(S);
      for (int j = 0; j < S; ++j) row(j) = table[static_cast<std::size_t>(((h - 1) * S + s) * S + j)];
      return Eigen::VectorXd(row / row.sum());
    }));
  }
  return out;
}

Outcome criterion_1() {
  double worst = 0;
  int count = 0;
  for (const TowerModel& m : small_models()) {
    for (int N : {1, 5, 12}) {
      const auto R = first_return_operators(m, N);
      const auto T = renewal_sequence(R, N);
      for (int n = 0; n <= N; ++n) {
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m.base_states(), m.base_states());
        worst = std::max(worst, (T[n] - composition_sum(R, n, I)).cwiseAbs().maxCoeff());
      }
      ++count;
    }
  }
  return {worst <= 1e-12, std::to_string(count) + " (model, N) pairs, max deviation " + fmt(worst)};
}

Outcome criterion_2() {
  std::string detail;
  bool pass = true;
  for (double q : {1.5, 2.5}) {
    ExperimentConfig cfg;
    cfg.model.q = q;
    cfg.model.h_max = 1000000;
    cfg.n_grid = {5000};
    const ExperimentReport r = run_renewal(cfg);
    const double slope = r.results["slope_increment"].get<double>();
    pass = pass && r.passed();
    detail += "q=" + fmt(q) + " slope " + fmt(slope) + "; ";
  }
  ExperimentConfig cfg;
  cfg.model.q = 2.5;
  cfg.model.h_max = 1000000;
  cfg.n_grid = {10000};
  const ExperimentReport r = run_renewal(cfg);
  const double gap = std::fabs(r.results["u_N"].get<double>() - r.results["mu_Y"].get<double>());
  pass = pass && gap <= 1e-3;
  detail += "|u_10^4 - mu(Y)| = " + fmt(gap) + " (q=2.5)";
  return {pass, detail};
}

std::vector<TowerModel> truncated_models() {
  std::vector<TowerModel> out;
  out.push_back(build_tower(TailLaw::from_pmf({0.5, 0.0, 0.5})));
  out.push_back(build_tower(TailLaw::power(1.5, 1.0, 50)));
  out.push_back(build_tower(TailLaw::power(2.5, 1.0, 30)));
  out.push_back(build_tower(TailLaw::power(1.5, 1.0, 25), 2, [](int s, std::int64_t h) {
    Eigen::VectorXd row(2);
    row(0) = 0.2 + 0.5 * s * (h % 2);
    row(1) = 1.0 - row(0);
    return row;
  }));
  return out;
}

Outcome criterion_3() {
  double worst = 0;
  for (const TowerModel& m : truncated_models()) {
    const TruncatedTower tower(m);
    for (const Observable& f : {appendix_observable(m), stable_class_observable(m, 1.0)})
      worst = std::max(worst, entry_operators(tower, f, 30, 4, 7).max_residual);
  }
  return {worst <= 1e-10, "max residual over n ≤ 30: " + fmt(worst)};
}

Outcome criterion_4() {
  double worst_L = 0, worst_rec = 0;
  int orbits = 0;
  for (const TowerModel& m : truncated_models()) {
    const TruncatedTower tower(m);
    MartingaleData md = martingale_decomposition(tower, appendix_observable(m), 201);
    for (int k = 0; k <= 200; ++k)
      worst_L = std::max(worst_L, transfer_of_increment(tower, md, k).cwiseAbs().maxCoeff());
    const ReconstructionCheck rc = sample_increments(tower, md, 1000, 11);
    worst_rec = std::max(worst_rec, rc.max_residual);
    orbits += rc.orbits;
  }
  return {worst_L <= 1e-10 && worst_rec < 1e-9,
          "max |L(A_k)| " + fmt(worst_L) + " for k ≤ 200; reconstruction residual " +
              fmt(worst_rec) + " over " + std::to_string(orbits) + " orbits"};
}

Outcome criterion_5() {
  bool pass = true;
  std::string detail;
  for (double q : {1.5, 2.0, 3.0}) {
    const FkRatioReport f = run_fk_ratio(q, 600, 50, 10, 500);
    const bool ok = f.overall_max <= 2 * f.window_max;
    pass = pass && ok;
    detail += "q=" + fmt(q) + ": max " + fmt(f.overall_max) + " vs k∈[50,60) max " +
              fmt(f.window_max) + "; ";
  }
  return {pass, detail};
}

struct CellSpec {
  double p;
  bool check_gamma;
  double gamma_lo, gamma_hi;
};

Outcome moment_cells(const ExperimentReport& r, const std::vector<CellSpec>& cells, double beta_tol) {
  bool pass = true;
  std::string detail;
  for (const CellSpec& c : cells) {
    bool found = false;
    for (const auto& fit : r.results["fits"]) {
      if (std::fabs(fit["p"].get<double>() - c.p) > 1e-12) continue;
      found = true;
      const double beta = fit["beta"].get<double>(), gamma = fit["gamma"].get<double>();
      const double pb = fit["predicted_beta"].get<double>();
      bool ok = std::fabs(beta - pb) <= beta_tol;
      if (c.check_gamma)
        ok = ok && !fit["gamma_fixed"].get<bool>() && gamma >= c.gamma_lo && gamma <= c.gamma_hi;
      pass = pass && ok;
      detail += "p=" + fmt(c.p) + " β " + fmt(beta) + " (pred " + fmt(pb) + ")";
      if (c.check_gamma) detail += " γ " + fmt(gamma);
      detail += "; ";
    }
    pass = pass && found;
  }
  return {pass, detail};
}

Outcome criterion_6_and_7(Outcome& c7) {
  const ExperimentReport q3 = run_saved(run_moment_scaling, "moments_q3.json");
  const ExperimentReport q2 = run_saved(run_moment_scaling, "moments_q2.json");
  const ExperimentReport q15 = run_saved(run_moment_scaling, "moments_q15.json");
  const Outcome a = moment_cells(q3, {{2, false, 0, 0}, {6, false, 0, 0}}, 0.15);
  const Outcome b = moment_cells(q15, {{1, false, 0, 0}, {3, false, 0, 0}}, 0.15);
  const Outcome c = moment_cells(q2, {{2, true, 0.5, 1.5}, {4, true, -0.5, 0.5}}, 0.15);
  c7 = moment_cells(q15, {{1.5, true, 0.5, 1.5}}, 0.1);
  c7.detail = "q=1.5 " + c7.detail;
  return {a.pass && b.pass && c.pass, "q=3 " + a.detail + "q=1.5 " + b.detail + "q=2 " + c.detail};
}

Outcome criterion_8() {
  const ExperimentReport r = run_saved(run_weak_moment_check, "weak_q15.json");
  return from_report(r, "drift " + fmt(r.results["drift"].get<double>()) +
                            ", tail-indicator drift " +
                            fmt(r.results["drift_tail_indicator"].get<double>()));
}

Outcome criterion_9() {
  const ExperimentReport r = run_saved(run_moment_convergence, "convergence_q15.json");
  const auto& p = r.results["per_p"][0];
  return from_report(r, "E|S_n/n^{1/q}| " + fmt(p["normalised_moments"].back().get<double>()) +
                            " vs E|Z| " + fmt(p["limit"].get<double>()) + ", relative error " +
                            fmt(p["relative_error"].get<double>()));
}

Outcome criterion_10() {
  ExperimentConfig cfg = parse_config(config_path("berry_esseen_q15.json"));
  const TowerModel model = build_tower(TailLaw::power(cfg.model.q, cfg.model.C, cfg.spectral.h_max,
                                                      cfg.model.epsilon, cfg.model.C2));
  const StableLimit lim = stable_limit(model, cfg.spectral, cfg.model.q);
  const double floor = cfg.model.q + cfg.model.epsilon - 0.15;
  return {lim.fit.c.real() < 0 && lim.fit.residual_exponent >= floor,
          "c = " + fmt(lim.fit.c.real()) + (lim.fit.c.imag() < 0 ? " - " : " + ") +
              fmt(std::fabs(lim.fit.c.imag())) + "i, residual exponent " +
              fmt(lim.fit.residual_exponent) + " (need ≥ " + fmt(floor) + ")"};
}

Outcome criterion_11() {
  const ExperimentReport r = run_saved(run_berry_esseen, "berry_esseen_q15.json");
  std::string ks;
  for (const auto& v : r.results["ks_tower"]) ks += fmt(v.get<double>()) + " ";
  return from_report(r, "KS " + ks + "slope " + fmt(r.results["slope_tower"].get<double>()) +
                            ", reference δ " + fmt(r.results["reference_delta"].get<double>()) +
                            ", DKW floor " + fmt(r.results["dkw_floor"].get<double>()));
}

Outcome criterion_12() {
  const std::vector<std::size_t> lengths{64, 128, 256, 512, 1024};
  bool pass = true;
  std::string detail;
  struct Case {
    SequenceLemma lemma;
    double q, eps;
  };
  for (const Case& c : {Case{SequenceLemma::IneqQGt2, 2.5, 0.0}, Case{SequenceLemma::IneqQLt2, 1.5, 0.5}}) {
    const BatteryReport b = run_sequence_battery(c.lemma, c.q, c.eps, lengths, 1000, 1);
    const bool ok = b.growth <= 1.5 && b.homogeneity_error <= 1e-12 && b.translation_error <= 1e-12;
    pass = pass && ok;
    detail += lemma_name(c.lemma) + " growth " + fmt(b.growth) + ", homogeneity " +
              fmt(b.homogeneity_error) + ", translation " + fmt(b.translation_error) + "; ";
  }
  return {pass, detail};
}

Outcome criterion_13() {
  bool pass = true;
  std::string detail;
  for (const char* name : {"concentration_q15.json", "concentration_q2.json", "concentration_q3.json"}) {
    const ExperimentReport r = run_saved(run_concentration, name);
    pass = pass && r.passed();
    double worst = 0;
    for (const auto& c : r.checks) {
      const auto pos = c.detail.find("max/min over windows ");
      if (pos != std::string::npos) worst = std::max(worst, std::stod(c.detail.substr(pos + 21)));
    }
    detail += std::string(name) + " drift " + fmt(worst);
    if (r.results.contains("log_factor_homogeneity_error"))
      detail += ", log-factor change " + fmt(r.results["log_factor_homogeneity_error"].get<double>());
    if (!r.passed()) detail += " (" + failed_checks(r) + ")";
    detail += "; ";
  }
  return {pass, detail};
}

Outcome criterion_14() {
  bool pass = true;
  std::string detail;
  for (double q : {1.2, 1.5, 1.8, 2.0}) {
    ExperimentConfig cfg;
    cfg.model.q = q;
    cfg.replicas = 1000000;
    const ExperimentReport r = run_stable_check(cfg);
    pass = pass && r.passed();
    detail += "q=" + fmt(q) + " KS " + fmt(r.results["ks"].get<double>());
    if (r.results.contains("gaussian_cdf_error"))
      detail += ", Gaussian error " + fmt(r.results["gaussian_cdf_error"].get<double>());
    detail += "; ";
  }
  return {pass, detail};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_15() {
  const auto root = std::filesystem::temp_directory_path() / "towerstat_determinism";
  std::filesystem::remove_all(root);
  ExperimentConfig cfg = parse_config(config_path("moments_q3.json"));
  cfg.replicas = 5000;
  cfg.n_grid = {100, 1000, 10000};
  ExperimentConfig conc = parse_config(config_path("concentration_q15.json"));
  conc.replicas = 5000;
  bool same = true;
  int files = 0;
  const std::string stamp = "20260101T000000Z";
  for (const auto& [run, c] : {std::pair{run_moment_scaling, cfg}, std::pair{run_concentration, conc}}) {
    const ReportFiles a = write_report(run(c), (root / "a").string(), stamp);
    const ReportFiles b = write_report(run(c), (root / "b").string(), stamp);
    same = same && slurp(a.json) == slurp(b.json) && slurp(a.csv) == slurp(b.csv) &&
           !slurp(a.json).empty();
    files += 4;
  }
  std::filesystem::remove_all(root);
  return {same, std::to_string(files) + " report files compared byte for byte"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const auto wanted = [&](int k) { return only.empty() || only.count(k) > 0; };

  int failures = 0;
  const auto report = [&](int k, const char* name, const Outcome& o, double seconds) {
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", k, name,
                o.detail.c_str(), seconds);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };
  const auto timed = [&](int k, const char* name, const std::function<Outcome()>& fn) {
    if (!wanted(k)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    report(k, name, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  };

  timed(1, "renewal exactness", criterion_1);
  timed(2, "operator decay", criterion_2);
  timed(3, "entry-operator identity", criterion_3);
  timed(4, "martingale structure", criterion_4);
  timed(5, "F_k ratio", criterion_5);
  if (wanted(6) || wanted(7)) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome c6, c7;
    try {
      c6 = criterion_6_and_7(c7);
    } catch (const std::exception& e) {
      c6 = c7 = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (wanted(6)) report(6, "moment scaling", c6, s);
    if (wanted(7)) report(7, "critical moment q<2", c7, 0.0);
  }
  timed(8, "weak-moment plateau", criterion_8);
  timed(9, "moment convergence", criterion_9);
  timed(10, "lambda_t expansion", criterion_10);
  timed(11, "Berry-Esseen trend", criterion_11);
  timed(12, "sequence inequalities", criterion_12);
  timed(13, "concentration", criterion_13);
  timed(14, "stable toolchain", criterion_14);
  timed(15, "determinism", criterion_15);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
