#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "towerstat/config.hpp"
#include "towerstat/rng.hpp"

namespace towerstat {

namespace {

std::string type_name(const ojson& v) {
  if (v.is_boolean()) return "boolean";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  if (v.is_object()) return "table";
  return "null";
}

void fail_type(const std::string& key, const std::string& want, const ojson& v) {
  throw ConfigError(key + ": expected " + want + ", got " + type_name(v));
}

double as_number(const ojson& v, const std::string& key) {
  if (!v.is_number()) fail_type(key, "number", v);
  return v.get<double>();
}

std::int64_t as_integer(const ojson& v, const std::string& key) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::floor(d) && std::fabs(d) < 9e15)
      return static_cast<std::int64_t>(d);
  }
  fail_type(key, "integer", v);
  return 0;
}

std::string as_string(const ojson& v, const std::string& key) {
  if (!v.is_string()) fail_type(key, "string", v);
  return v.get<std::string>();
}

bool as_bool(const ojson& v, const std::string& key) {
  if (!v.is_boolean()) fail_type(key, "boolean", v);
  return v.get<bool>();
}

template <class T, class Conv>
std::vector<T> as_array(const ojson& v, const std::string& key, Conv conv) {
  if (!v.is_array()) fail_type(key, "array", v);
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(conv(v[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

// Rejects keys outside `allowed` in table `name`.
const ojson& table(const ojson& root, const std::string& name,
                   const std::set<std::string>& allowed) {
  static const ojson empty = ojson::object();
  if (!root.contains(name)) return empty;
  const ojson& t = root.at(name);
  if (!t.is_object()) fail_type(name, "table", t);
  for (const auto& [k, _] : t.items())
    if (!allowed.count(k)) throw ConfigError(name + "." + k + ": unknown key");
  return t;
}

template <class E>
E enum_value(const std::string& s, const std::string& key,
             const std::vector<std::pair<std::string, E>>& names) {
  for (const auto& [n, e] : names)
    if (n == s) return e;
  std::string list;
  for (const auto& [n, _] : names) list += (list.empty() ? "" : ", ") + n;
  throw ConfigError(key + ": unknown value \"" + s + "\" (expected one of " + list + ")");
}

const std::vector<std::pair<std::string, ModelKind>> kModelKinds{{"tail", ModelKind::Tail},
                                                                 {"lsv", ModelKind::Lsv}};
const std::vector<std::pair<std::string, ObservableKind>> kObservableKinds{
    {"appendix", ObservableKind::Appendix},
    {"tail_indicator", ObservableKind::TailIndicator},
    {"stable_class", ObservableKind::StableClass},
    {"zero", ObservableKind::Zero}};
const std::vector<std::pair<std::string, FunctionalKind>> kFunctionalKinds{
    {"weighted_sum", FunctionalKind::WeightedSum},
    {"birkhoff", FunctionalKind::Birkhoff},
    {"constant", FunctionalKind::Constant}};

template <class E>
std::string enum_name(E e, const std::vector<std::pair<std::string, E>>& names) {
  for (const auto& [n, v] : names)
    if (v == e) return n;
  return "?";
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ojson root;
  try {
    root = ojson::parse(text, nullptr, true, true);
  } catch (const ojson::parse_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a table at top level");
  const std::set<std::string> sections{"model", "observable", "functional", "grid",
                                       "run",   "tolerance",  "spectral"};
  for (const auto& [k, _] : root.items())
    if (!sections.count(k)) throw ConfigError(k + ": unknown section");
  if (!root.contains("model")) throw ConfigError("model: missing required section");

  ExperimentConfig cfg;
  const ojson& m = table(root, "model", {"kind", "q", "C", "epsilon", "C2", "h_max", "gamma",
                                         "lsv_returns"});
  if (m.contains("kind")) cfg.model.kind = enum_value(as_string(m["kind"], "model.kind"),
                                                      "model.kind", kModelKinds);
  if (cfg.model.kind == ModelKind::Tail) {
    if (!m.contains("q")) throw ConfigError("model.q: missing required key");
    cfg.model.q = as_number(m["q"], "model.q");
  } else {
    if (!m.contains("gamma")) throw ConfigError("model.gamma: missing required key");
    cfg.model.gamma = as_number(m["gamma"], "model.gamma");
    cfg.model.q = 1.0 / cfg.model.gamma;
  }
  if (m.contains("C")) cfg.model.C = as_number(m["C"], "model.C");
  if (m.contains("epsilon")) cfg.model.epsilon = as_number(m["epsilon"], "model.epsilon");
  if (m.contains("C2")) cfg.model.C2 = as_number(m["C2"], "model.C2");
  if (m.contains("h_max")) cfg.model.h_max = as_integer(m["h_max"], "model.h_max");
  if (m.contains("lsv_returns"))
    cfg.model.lsv_returns = as_integer(m["lsv_returns"], "model.lsv_returns");

  const ojson& o = table(root, "observable", {"kind", "limit"});
  if (o.contains("kind"))
    cfg.observable.kind =
        enum_value(as_string(o["kind"], "observable.kind"), "observable.kind", kObservableKinds);
  if (o.contains("limit")) cfg.observable.limit = as_number(o["limit"], "observable.limit");

  const ojson& f = table(root, "functional", {"kind", "decay", "lambdas"});
  if (f.contains("kind"))
    cfg.functional.kind =
        enum_value(as_string(f["kind"], "functional.kind"), "functional.kind", kFunctionalKinds);
  if (f.contains("decay")) cfg.functional.decay = as_number(f["decay"], "functional.decay");
  if (f.contains("lambdas"))
    cfg.functional.lambdas = as_array<double>(f["lambdas"], "functional.lambdas", as_number);

  const ojson& g = table(root, "grid", {"n", "p", "windows"});
  if (g.contains("n")) cfg.n_grid = as_array<std::int64_t>(g["n"], "grid.n", as_integer);
  if (g.contains("p")) cfg.p_grid = as_array<double>(g["p"], "grid.p", as_number);
  if (g.contains("windows"))
    cfg.windows = as_array<std::int64_t>(g["windows"], "grid.windows", as_integer);

  const ojson& r = table(root, "run", {"replicas", "seed", "out_dir", "threads",
                                       "importance_sampling"});
  if (r.contains("replicas")) cfg.replicas = as_integer(r["replicas"], "run.replicas");
  if (r.contains("seed")) {
    const std::int64_t s = as_integer(r["seed"], "run.seed");
    if (s < 0) throw ConfigError("run.seed: must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (r.contains("out_dir")) cfg.out_dir = as_string(r["out_dir"], "run.out_dir");
  if (r.contains("threads"))
    cfg.threads = static_cast<int>(as_integer(r["threads"], "run.threads"));
  if (r.contains("importance_sampling"))
    cfg.importance_sampling = as_bool(r["importance_sampling"], "run.importance_sampling");

  const ojson& t = table(root, "tolerance", {"beta", "gamma", "drift", "convergence"});
  if (t.contains("beta")) cfg.tolerance.beta = as_number(t["beta"], "tolerance.beta");
  if (t.contains("gamma")) cfg.tolerance.gamma = as_number(t["gamma"], "tolerance.gamma");
  if (t.contains("drift")) cfg.tolerance.drift = as_number(t["drift"], "tolerance.drift");
  if (t.contains("convergence"))
    cfg.tolerance.convergence = as_number(t["convergence"], "tolerance.convergence");

  const ojson& s = table(root, "spectral", {"h_max", "t_lo", "t_hi", "points"});
  if (s.contains("h_max")) cfg.spectral.h_max = as_integer(s["h_max"], "spectral.h_max");
  if (s.contains("t_lo")) cfg.spectral.t_lo = as_number(s["t_lo"], "spectral.t_lo");
  if (s.contains("t_hi")) cfg.spectral.t_hi = as_number(s["t_hi"], "spectral.t_hi");
  if (s.contains("points"))
    cfg.spectral.points = static_cast<int>(as_integer(s["points"], "spectral.points"));

  if (cfg.out_dir.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    cfg.out_dir = env && *env ? env : "reports";
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void validate(const ExperimentConfig& cfg) {
  const ModelSpec& m = cfg.model;
  if (m.kind == ModelKind::Lsv) {
    if (!(m.gamma > 0 && m.gamma < 1)) throw ConfigError("model.gamma: must lie in (0,1)");
    if (m.lsv_returns < 1000) throw ConfigError("model.lsv_returns: must be at least 1000");
  } else {
    if (!(m.q > 1)) throw ConfigError("model.q: tail exponent must satisfy q > 1");
    if (!(m.C > 0)) throw ConfigError("model.C: must be positive");
    if (!(m.epsilon >= 0)) throw ConfigError("model.epsilon: must be nonnegative");
    if (!std::isfinite(m.C2)) throw ConfigError("model.C2: must be finite");
  }
  if (m.h_max < 2) throw ConfigError("model.h_max: must be at least 2");
  if (cfg.n_grid.empty()) throw ConfigError("grid.n: must be nonempty");
  for (auto n : cfg.n_grid)
    if (n < 1) throw ConfigError("grid.n: entries must be positive");
  if (cfg.p_grid.empty()) throw ConfigError("grid.p: must be nonempty");
  for (double p : cfg.p_grid)
    if (!(p > 0)) throw ConfigError("grid.p: entries must be positive");
  if (cfg.windows.empty()) throw ConfigError("grid.windows: must be nonempty");
  for (auto w : cfg.windows)
    if (w < 1) throw ConfigError("grid.windows: entries must be positive");
  if (cfg.replicas < 100) throw ConfigError("run.replicas: must be at least 100");
  if (cfg.threads < 1) throw ConfigError("run.threads: must be at least 1");
  if (!(cfg.functional.decay >= 0)) throw ConfigError("functional.decay: must be nonnegative");
  if (cfg.functional.lambdas.empty()) throw ConfigError("functional.lambdas: must be nonempty");
  if (!(cfg.spectral.t_lo > 0 && cfg.spectral.t_hi > cfg.spectral.t_lo))
    throw ConfigError("spectral: need 0 < t_lo < t_hi");
  if (cfg.spectral.points < 4) throw ConfigError("spectral.points: must be at least 4");
  if (cfg.spectral.h_max < 2) throw ConfigError("spectral.h_max: must be at least 2");
  const Tolerances& t = cfg.tolerance;
  if (!(t.beta > 0 && t.gamma > 0 && t.drift >= 1 && t.convergence > 0))
    throw ConfigError("tolerance: values must be positive (drift at least 1)");
}

ojson config_echo(const ExperimentConfig& cfg) {
  ojson e;
  ojson& m = e["model"];
  m["kind"] = enum_name(cfg.model.kind, kModelKinds);
  if (cfg.model.kind == ModelKind::Lsv) {
    m["gamma"] = cfg.model.gamma;
    m["lsv_returns"] = cfg.model.lsv_returns;
  } else {
    m["q"] = cfg.model.q;
    m["C"] = cfg.model.C;
    m["epsilon"] = cfg.model.epsilon;
    m["C2"] = cfg.model.C2;
  }
  m["h_max"] = cfg.model.h_max;
  e["observable"] = {{"kind", enum_name(cfg.observable.kind, kObservableKinds)},
                     {"limit", cfg.observable.limit}};
  e["functional"] = {{"kind", enum_name(cfg.functional.kind, kFunctionalKinds)},
                     {"decay", cfg.functional.decay},
                     {"lambdas", cfg.functional.lambdas}};
  e["grid"] = {{"n", cfg.n_grid}, {"p", cfg.p_grid}, {"windows", cfg.windows}};
  e["run"] = {{"replicas", cfg.replicas},
              {"seed", cfg.seed},
              {"out_dir", cfg.out_dir},
              {"threads", cfg.threads},
              {"importance_sampling", cfg.importance_sampling}};
  e["tolerance"] = {{"beta", cfg.tolerance.beta},
                    {"gamma", cfg.tolerance.gamma},
                    {"drift", cfg.tolerance.drift},
                    {"convergence", cfg.tolerance.convergence}};
  e["spectral"] = {{"h_max", cfg.spectral.h_max},
                   {"t_lo", cfg.spectral.t_lo},
                   {"t_hi", cfg.spectral.t_hi},
                   {"points", cfg.spectral.points}};
  return e;
}

TailLaw lsv_tail_law(const LsvParams& params, std::int64_t returns, std::int64_t cap,
                     std::uint64_t seed) {
  validate(params);
  Rng rng(derive_seed(seed, 0x15F, 0));
  auto fresh = [&] { return 0.5 + 0.5 * uniform_open0(rng); };
  std::vector<double> counts;
  double x = fresh();
  for (std::int64_t r = 0; r < returns; ++r) {
    const auto ret = lsv_first_return(x, params, cap);
    std::int64_t h = cap;
    if (ret) {
      h = ret->steps;
      x = ret->point;
    }
    // Floating-point orbits can land on the fixed point 1 or fail to return;
    // restart from a fresh point in that case.
    if (!ret || x >= 1.0 || x < 0.5) x = fresh();
    if (static_cast<std::int64_t>(counts.size()) < h) counts.resize(static_cast<std::size_t>(h), 0);
    counts[static_cast<std::size_t>(h - 1)] += 1;
  }
  if (counts.size() < 2) counts.resize(2, 0.0);
  // Normalise, absorbing rounding into the largest entry so the total is 1.
  std::size_t big = 0;
  long double rest = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    counts[i] /= static_cast<double>(returns);
    if (counts[i] > counts[big]) big = i;
  }
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (i != big) rest += counts[i];
  counts[big] = static_cast<double>(1.0L - rest);
  return TailLaw::from_pmf(std::move(counts), params.tail_index());
}

TowerModel build_model(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.kind == ModelKind::Lsv) {
    LsvParams p;
    p.gamma = spec.gamma;
    return TowerModel(lsv_tail_law(p, spec.lsv_returns, spec.h_max, seed));
  }
  return TowerModel(TailLaw::power(spec.q, spec.C, spec.h_max, spec.epsilon, spec.C2));
}

}  // namespace towerstat
