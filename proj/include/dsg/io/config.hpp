#pragma once

// Run configuration as a single JSON document. Unknown keys are errors, and
// every diagnostic carries the JSON path of the offending field.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsg/deflected_subgradient.hpp"
#include "dsg/io/trace_io.hpp"
#include "dsg/penalties.hpp"
#include "dsg/problems.hpp"
#include "dsg/subsolver.hpp"

namespace dsg::io {

using Json = nlohmann::json;

struct LagrangianSpec {
  std::string penalty = "sharp-p2";  // sharp-p2 | sharp-p1 | saturating | squared-norm | weighted-norm
  std::string deflection = "identity";  // identity | penalty | scaled-matrix
  double k_sigma = 0.5;
  Matrix matrix;
  Vector weights;
};

struct InitSpec {
  double c_hat = 0.0;
  std::optional<double> s_level;  // defaults to the problem's analytic optimum
};

struct VerifySettings {
  std::size_t probes = 50;
  double probe_radius = 1.0;
  std::optional<DualPoint> dual_solution;  // Fejer witness; scanned for when absent
};

struct OutputSettings {
  std::optional<std::string> trace_path;
  std::optional<std::string> report_path;
  TraceFormat format = TraceFormat::Csv;
};

struct RunConfig {
  explicit RunConfig(NamedProblem p) : problem(std::move(p)) {}

  NamedProblem problem;
  LagrangianSpec lagrangian;
  DsgConfig dsg;
  SubsolverStrategy subsolver = OracleConfig{};
  std::vector<std::string> checks;
  InitSpec init;
  VerifySettings verify;
  OutputSettings output;
  std::uint64_t seed = 0;
};

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> ids{"weak_duality", "supergradient", "monotone_increase", "telescoping",
                                            "fejer",        "stop_optimality", "lagrangian_estimates"};
  return ids;
}

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& why) {
  throw Error(ErrorCode::ConfigError, path + ": " + why);
}

/// Reads fields of one JSON object and rejects any key left unread.
class Object {
 public:
  Object(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(path_, "expected an object");
  }
  Object(const Object&) = delete;
  ~Object() noexcept(false) {
    if (std::uncaught_exceptions() == 0) finish();
  }

  std::string field(const std::string& key) const { return path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) config_error(field(key), "missing required field");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number()) config_error(field(key), "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : (seen_.insert(key), fallback); }

  std::uint64_t count(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) config_error(field(key), "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }
  std::uint64_t count(const std::string& key, std::uint64_t fallback) { return has(key) ? count(key) : (seen_.insert(key), fallback); }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Json& v = raw(key);
    if (!v.is_boolean()) config_error(field(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_string()) config_error(field(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) { return has(key) ? string(key) : (seen_.insert(key), fallback); }

  Vector vector(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_array()) config_error(field(key), "expected an array of numbers");
    Vector out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) config_error(field(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  Matrix matrix(const std::string& key) {
    const Json& v = raw(key);
    if (!v.is_array()) config_error(field(key), "expected an array of rows");
    Matrix out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string p = field(key) + "[" + std::to_string(i) + "]";
      if (!v[i].is_array()) config_error(p, "expected an array of numbers");
      Vector row;
      for (std::size_t j = 0; j < v[i].size(); ++j) {
        if (!v[i][j].is_number()) config_error(p + "[" + std::to_string(j) + "]", "expected a number");
        row.push_back(v[i][j].get<double>());
      }
      out.push_back(std::move(row));
    }
    return out;
  }

  void finish() {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) config_error(field(it.key()), "unknown field");
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline Schedule parse_schedule(Object& parent, const std::string& key) {
  const Json& j = parent.raw(key);
  if (j.is_number()) return Schedule::constant(j.get<double>());
  Object o(j, parent.field(key));
  const std::string kind = o.string("kind");
  if (kind == "constant") return Schedule::constant(o.number("value"));
  if (kind == "geometric") return Schedule::geometric(o.number("initial"), o.number("ratio"));
  if (kind == "harmonic") return Schedule::harmonic(o.number("scale", 1.0));
  config_error(o.field("kind"), "unknown schedule kind '" + kind + "' (constant, geometric, harmonic)");
}

inline Schedule schedule_or(Object& parent, const std::string& key, Schedule fallback) {
  return parent.has(key) ? parse_schedule(parent, key) : fallback;
}

inline Placement parse_placement(const std::string& s, const std::string& path) {
  if (s == "lower") return Placement::Lower;
  if (s == "midpoint") return Placement::Midpoint;
  if (s == "upper") return Placement::Upper;
  config_error(path, "unknown placement '" + s + "' (lower, midpoint, upper)");
}

/// Inline problem: phi(x) = 0.5 x'Qx + q'x, h(x) = Ax - b on a box.
inline NamedProblem parse_inline_problem(const Json& j, const std::string& path) {
  Object o(j, path);
  const std::string id = o.string("id", "inline");
  Matrix Q = o.matrix("Q");
  Vector q = o.vector("q");
  Matrix A = o.matrix("A");
  Vector b = o.vector("b");
  Vector lower = o.vector("lower");
  Vector upper = o.vector("upper");
  const double step = o.number("grid_step", 0.01);
  const std::size_t n = q.size();
  const std::size_t m = b.size();
  if (n == 0) config_error(o.field("q"), "must be nonempty");
  if (m == 0) config_error(o.field("b"), "must be nonempty");
  if (Q.size() != n) config_error(o.field("Q"), "must have " + std::to_string(n) + " rows");
  for (const auto& row : Q)
    if (row.size() != n) config_error(o.field("Q"), "rows must have length " + std::to_string(n));
  if (A.size() != m) config_error(o.field("A"), "must have " + std::to_string(m) + " rows");
  for (const auto& row : A)
    if (row.size() != n) config_error(o.field("A"), "rows must have length " + std::to_string(n));
  if (lower.size() != n) config_error(o.field("lower"), "must have length " + std::to_string(n));
  if (upper.size() != n) config_error(o.field("upper"), "must have length " + std::to_string(n));
  if (!(step > 0.0)) config_error(o.field("grid_step"), "must be positive");
  try {
    ProblemInstance inst(
        n, m,
        [Q, q](std::span<const double> x) {
          double v = dsg::detail::dot(q, x);
          for (std::size_t i = 0; i < Q.size(); ++i) v += 0.5 * x[i] * dsg::detail::dot(Q[i], x);
          return v;
        },
        [A, b](std::span<const double> x, std::span<double> h) {
          for (std::size_t i = 0; i < A.size(); ++i) h[i] = dsg::detail::dot(A[i], x) - b[i];
        },
        Box{lower, upper});
    return {id, std::move(inst), std::nullopt, std::nullopt, std::nullopt, step, "inline quadratic problem"};
  } catch (const Error& e) {
    config_error(path, e.message());
  }
}

inline LagrangianSpec parse_lagrangian(const Json& j, const std::string& path) {
  Object o(j, path);
  LagrangianSpec s;
  s.penalty = o.string("penalty", s.penalty);
  static const std::set<std::string> penalties{"sharp-p2", "sharp-p1", "saturating", "squared-norm", "weighted-norm"};
  if (!penalties.count(s.penalty)) config_error(o.field("penalty"), "unknown penalty '" + s.penalty + "'");
  s.deflection = o.string("deflection", s.deflection);
  static const std::set<std::string> deflections{"identity", "penalty", "scaled-matrix"};
  if (!deflections.count(s.deflection)) config_error(o.field("deflection"), "unknown deflection '" + s.deflection + "'");
  if (o.has("params")) {
    Object p(o.raw("params"), o.field("params"));
    s.k_sigma = p.number("K_sigma", s.k_sigma);
    if (p.has("matrix")) s.matrix = p.matrix("matrix");
    if (p.has("weights")) s.weights = p.vector("weights");
  }
  if (s.deflection == "scaled-matrix" && s.matrix.empty()) config_error(o.field("params.matrix"), "required for scaled-matrix");
  if (s.penalty == "weighted-norm" && s.weights.empty()) config_error(o.field("params.weights"), "required for weighted-norm");
  return s;
}

inline DsgConfig parse_dsg(const Json& j, const std::string& path, std::size_t m) {
  Object o(j, path);
  DsgConfig c;
  c.y0 = o.has("y0") ? o.vector("y0") : Vector(m, 0.0);
  c.c0 = o.number("c0", c.c0);
  c.epsilon = o.number("epsilon", c.epsilon);
  c.delta = o.number("delta", c.delta);
  c.alpha = schedule_or(o, "alpha", c.alpha);
  c.alpha_max = o.number("alpha_max", c.alpha_max);
  c.r = schedule_or(o, "r", c.r);
  c.max_iter = o.count("max_iter", c.max_iter);
  c.feas_tol = o.number("feas_tol", c.feas_tol);
  if (o.has("gamma0_R")) c.gamma0_R = o.number("gamma0_R");
  c.nonmonotone_check = o.boolean("nonmonotone_check", c.nonmonotone_check);
  if (o.has("rule")) {
    Object r(o.raw("rule"), o.field("rule"));
    const std::string kind = r.string("kind");
    const Placement placement = parse_placement(r.string("placement", "midpoint"), r.field("placement"));
    if (kind == "dsg1") {
      c.rule = Dsg1Rule{r.number("eta", 0.01), r.number("beta", 2.0), placement};
    } else if (kind == "dsg2") {
      c.rule = Dsg2Rule{r.number("beta", 2.0), schedule_or(r, "theta", Schedule::harmonic(1.0)), placement};
    } else {
      config_error(r.field("kind"), "unknown step rule '" + kind + "' (dsg1, dsg2)");
    }
  }
  try {
    c.validate(m);
  } catch (const Error& e) {
    config_error(path, e.message());
  }
  return c;
}

inline SubsolverStrategy parse_subsolver(const Json& j, const std::string& path, double default_step, std::uint64_t seed) {
  Object o(j, path);
  const std::string strategy = o.string("strategy", "oracle");
  if (strategy == "oracle") {
    OracleConfig c;
    c.grid_step = o.number("grid_step", default_step);
    c.refinement_rounds = static_cast<int>(o.count("refinement_rounds", 0));
    c.max_evaluations = o.count("max_evaluations", c.max_evaluations);
    c.threads = static_cast<unsigned>(o.count("threads", 1));
    try {
      c.validate();
    } catch (const Error& e) {
      config_error(path, e.message());
    }
    return c;
  }
  if (strategy == "multistart") {
    MultistartConfig c;
    c.starts = static_cast<int>(o.count("starts", 16));
    c.max_evals_per_start = static_cast<int>(o.count("max_evals_per_start", 20000));
    c.shrink_tolerance = o.number("shrink_tolerance", c.shrink_tolerance);
    c.seed = seed;
    try {
      c.validate();
    } catch (const Error& e) {
      config_error(path, e.message());
    }
    return c;
  }
  config_error(o.field("strategy"), "unknown strategy '" + strategy + "' (oracle, multistart)");
}

}  // namespace detail

/// `seed_override` (from the environment) replaces the file's seed.
inline RunConfig parse_config(const Json& j, std::optional<std::uint64_t> seed_override = std::nullopt) {
  detail::Object o(j, "$");
  const Json& prob = o.raw("problem");
  auto problem = [&]() -> NamedProblem {
    if (!prob.is_string()) return detail::parse_inline_problem(prob, o.field("problem"));
    try {
      return find_problem(prob.get<std::string>());
    } catch (const Error& e) {
      detail::config_error(o.field("problem"), e.message());
    }
  }();
  RunConfig cfg(std::move(problem));
  cfg.seed = o.count("seed", 0);
  if (seed_override) cfg.seed = *seed_override;
  const std::size_t m = cfg.problem.instance.constraint_dimension();

  if (o.has("lagrangian")) cfg.lagrangian = detail::parse_lagrangian(o.raw("lagrangian"), o.field("lagrangian"));
  cfg.dsg = detail::parse_dsg(o.has("dsg") ? o.raw("dsg") : Json::object(), o.field("dsg"), m);
  cfg.subsolver = detail::parse_subsolver(o.has("subsolver") ? o.raw("subsolver") : Json::object(), o.field("subsolver"),
                                          cfg.problem.grid_step, cfg.seed);

  if (o.has("checks")) {
    const Json& c = o.raw("checks");
    if (!c.is_array()) detail::config_error(o.field("checks"), "expected an array of check ids");
    for (std::size_t i = 0; i < c.size(); ++i) {
      const std::string p = o.field("checks") + "[" + std::to_string(i) + "]";
      if (!c[i].is_string()) detail::config_error(p, "expected a string");
      const auto id = c[i].get<std::string>();
      if (std::find(known_checks().begin(), known_checks().end(), id) == known_checks().end())
        detail::config_error(p, "unknown check '" + id + "'");
      cfg.checks.push_back(id);
    }
  }

  if (o.has("init")) {
    detail::Object i(o.raw("init"), o.field("init"));
    cfg.init.c_hat = i.number("c_hat", 0.0);
    if (i.has("s_level")) cfg.init.s_level = i.number("s_level");
  }

  if (o.has("verify")) {
    detail::Object v(o.raw("verify"), o.field("verify"));
    cfg.verify.probes = v.count("probes", cfg.verify.probes);
    cfg.verify.probe_radius = v.number("probe_radius", cfg.verify.probe_radius);
    if (!(cfg.verify.probe_radius > 0.0)) detail::config_error(v.field("probe_radius"), "must be positive");
    if (v.has("dual_solution")) {
      detail::Object d(v.raw("dual_solution"), v.field("dual_solution"));
      DualPoint dp{d.vector("y"), d.number("c")};
      if (dp.y.size() != m) detail::config_error(d.field("y"), "must have length " + std::to_string(m));
      cfg.verify.dual_solution = dp;
    }
  }

  if (o.has("output")) {
    detail::Object out(o.raw("output"), o.field("output"));
    if (out.has("trace_path")) cfg.output.trace_path = out.string("trace_path");
    if (out.has("report_path")) cfg.output.report_path = out.string("report_path");
    const std::string fmt = out.string("format", "csv");
    if (fmt == "csv") cfg.output.format = TraceFormat::Csv;
    else if (fmt == "jsonl") cfg.output.format = TraceFormat::JsonLines;
    else detail::config_error(out.field("format"), "unknown format '" + fmt + "' (csv, jsonl)");
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt) {
  const std::string text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  try {
    return parse_config(j, seed_override);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw Error(ErrorCode::ConfigError, path.string() + ": " + e.message());
    throw;
  }
}

/// Builds (A, sigma) from the spec. scaled-matrix deflections are rescaled
/// to satisfy sigma >= ||A(.)|| on 10^4 samples.
inline LagrangianPair make_lagrangian(const LagrangianSpec& s, std::size_t m, std::uint64_t seed) {
  AugmentingFunction sigma;
  if (s.penalty == "sharp-p2") sigma = make_sharp(2.0, m).second;
  else if (s.penalty == "sharp-p1") sigma = make_sharp(1.0, m).second;
  else if (s.penalty == "saturating") sigma = saturating(s.k_sigma);
  else if (s.penalty == "squared-norm") sigma = squared_norm();
  else if (s.penalty == "weighted-norm") sigma = weighted_norm(s.weights);
  else throw Error(ErrorCode::ConfigError, "lagrangian.penalty: unknown penalty '" + s.penalty + "'");

  if (s.deflection == "identity") return {identity_map(), std::move(sigma)};
  if (s.deflection == "penalty") return {zero_map(), std::move(sigma)};
  if (s.matrix.size() != m) throw Error(ErrorCode::ConfigError, "lagrangian.params.matrix: must be " + std::to_string(m) + " x " + std::to_string(m));
  auto A = normalize_for_domination(s.matrix, sigma, 10'000, seed);
  return {std::move(A), std::move(sigma)};
}

}  // namespace dsg::io
