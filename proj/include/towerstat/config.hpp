#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "towerstat/lsv.hpp"
#include "towerstat/tower.hpp"

namespace towerstat {

inline constexpr const char* kVersion = "0.1.0";
/// Environment variable naming the default report directory.
inline constexpr const char* kOutDirEnv = "TOWERSTAT_OUT_DIR";

using ojson = nlohmann::ordered_json;

/// Invalid or incomplete configuration; the CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ModelKind { Tail, Lsv };

struct ModelSpec {
  ModelKind kind = ModelKind::Tail;
  double q = 1.5, C = 1.0, epsilon = 0.0, C2 = 0.0;
  std::int64_t h_max = 1000000;
  /// LSV parameter and the number of excursions used to tabulate its return law.
  double gamma = 0.5;
  std::int64_t lsv_returns = 1000000;

  /// Tail index of the model (1/γ for LSV).
  double tail_index() const { return kind == ModelKind::Lsv ? 1.0 / gamma : q; }
};

enum class ObservableKind { Appendix, TailIndicator, StableClass, Zero };

struct ObservableSpec {
  ObservableKind kind = ObservableKind::Appendix;
  double limit = 1.0;
};

enum class FunctionalKind { WeightedSum, Birkhoff, Constant };

struct FunctionalSpecConfig {
  FunctionalKind kind = FunctionalKind::WeightedSum;
  /// w_i = (i+1)^-decay.
  double decay = 0.6;
  /// Dilations λ applied to K for the homogeneity check.
  std::vector<double> lambdas{1.0, 10.0};
};

struct Tolerances {
  double beta = 0.15;
  double gamma = 0.5;
  double drift = 1.5;
  double convergence = 0.10;
};

struct SpectralSpec {
  std::int64_t h_max = 10000000;
  double t_lo = 1e-4, t_hi = 1e-2;
  int points = 24;
};

struct ExperimentConfig {
  ModelSpec model;
  ObservableSpec observable;
  FunctionalSpecConfig functional;
  std::vector<std::int64_t> n_grid{100, 1000, 10000};
  std::vector<double> p_grid{1.0};
  std::vector<std::int64_t> windows{100, 1000, 10000};
  std::int64_t replicas = 100000;
  std::uint64_t seed = 1;
  std::string out_dir;
  int threads = 1;
  bool importance_sampling = true;
  Tolerances tolerance;
  SpectralSpec spectral;
};

/// Parses JSON text (comments allowed); every key is optional except
/// model.q (tail) or model.gamma (lsv). Unknown keys are rejected.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);
/// Structural checks applied after overrides.
void validate(const ExperimentConfig& cfg);
/// Effective configuration in fixed key order.
ojson config_echo(const ExperimentConfig& cfg);

/// Tower for the configured model; LSV return times are tabulated from a
/// long orbit seeded by `seed`.
TowerModel build_model(const ModelSpec& spec, std::uint64_t seed);

/// Empirical return-time law of the LSV map along one orbit of `returns` excursions.
TailLaw lsv_tail_law(const LsvParams& params, std::int64_t returns, std::int64_t cap,
                     std::uint64_t seed);

}  // namespace towerstat
