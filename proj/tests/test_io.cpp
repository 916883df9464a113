#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "dsg/deflected_subgradient.hpp"
#include "dsg/io/config.hpp"
#include "dsg/io/report.hpp"
#include "dsg/io/trace_io.hpp"
#include "dsg/problems.hpp"

using namespace dsg;
using namespace dsg::io;

namespace {

std::string config_error_of(const std::string& text) {
  try {
    parse_config(Json::parse(text));
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError) << e.what();
    return e.message();
  }
  ADD_FAILURE() << "no error for " << text;
  return {};
}

Trace random_trace(std::size_t records, std::size_t m, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1e3);
  Trace t;
  for (std::size_t k = 0; k < records; ++k) {
    IterationRecord r;
    r.k = k;
    for (std::size_t i = 0; i < n; ++i) r.x.push_back(g(rng));
    for (std::size_t i = 0; i < m; ++i) r.z.push_back(g(rng) * 1e-9);
    for (std::size_t i = 0; i < m; ++i) r.y.push_back(g(rng));
    r.sigma_z = std::abs(g(rng));
    r.Az_norm = std::abs(g(rng));
    r.q_k = g(rng) / 3.0;
    r.r_k = 1.0 / 3.0;
    r.s_k = std::abs(g(rng)) * 1e-300;
    r.c = std::abs(g(rng));
    r.certified = k % 2 == 0;
    t.push_back(r);
  }
  return t;
}

/// z is not serialized; readers recompute it from x.
void expect_same(const Trace& a, const Trace& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].k, b[k].k);
    EXPECT_EQ(a[k].x, b[k].x);
    EXPECT_EQ(a[k].y, b[k].y);
    EXPECT_EQ(a[k].sigma_z, b[k].sigma_z);
    EXPECT_EQ(a[k].Az_norm, b[k].Az_norm);
    EXPECT_EQ(a[k].q_k, b[k].q_k);
    EXPECT_EQ(a[k].r_k, b[k].r_k);
    EXPECT_EQ(a[k].s_k, b[k].s_k);
    EXPECT_EQ(a[k].c, b[k].c);
    EXPECT_EQ(a[k].certified, b[k].certified);
  }
}

}  // namespace

TEST(Config, ErrorsNameTheField) {
  EXPECT_NE(config_error_of(R"({"problem": "P1", "dsg": {"epsilon": -1}})").find("epsilon"), std::string::npos);
  EXPECT_NE(config_error_of(R"({"problem": "P1", "dsg": {"epsilom": 1}})").find("$.dsg.epsilom: unknown field"), std::string::npos);
  EXPECT_NE(config_error_of(R"({"problem": "P1", "dsg": {"rule": {"kind": "dsg1", "placement": "middle"}}})")
                .find("$.dsg.rule.placement"),
            std::string::npos);
  EXPECT_NE(config_error_of(R"({"problem": "P1", "dsg": {"r": {"kind": "cubic"}}})").find("$.dsg.r"), std::string::npos);
  EXPECT_NE(config_error_of(R"({"problem": "P7"})").find("$.problem"), std::string::npos);
  EXPECT_NE(config_error_of(R"({"problem": "P1", "checks": ["weak_duality", "nope"]})").find("$.checks[1]"), std::string::npos);
  EXPECT_NE(config_error_of(R"({"problem": "P1", "dsg": {"y0": [0, 0]}})").find("y0"), std::string::npos);
  EXPECT_NE(config_error_of(R"({"problem": "P1", "output": {"format": "xml"}})").find("$.output.format"), std::string::npos);
  EXPECT_NE(config_error_of(R"({"problem": "P1", "subsolver": {"strategy": "newton"}})").find("$.subsolver.strategy"),
            std::string::npos);
}

TEST(Config, InlineProblemShapesAreChecked) {
  const std::string ok = R"({"problem": {"Q": [[2,0],[0,2]], "q": [0,0], "A": [[1,1]], "b": [1],
                                          "lower": [-2,-2], "upper": [2,2], "grid_step": 0.02}})";
  const auto cfg = parse_config(Json::parse(ok));
  EXPECT_EQ(cfg.problem.id, "inline");
  const double x[2] = {0.5, 0.5};
  EXPECT_DOUBLE_EQ(cfg.problem.instance.objective(x), 0.5);
  EXPECT_EQ(cfg.problem.instance.constraint(x)[0], 0.0);
  EXPECT_EQ(std::get<OracleConfig>(cfg.subsolver).grid_step, 0.02);

  EXPECT_NE(config_error_of(R"({"problem": {"Q": [[1]], "q": [0,0], "A": [[1,1]], "b": [1], "lower": [0,0], "upper": [1,1]}})")
                .find("$.problem.Q"),
            std::string::npos);
  EXPECT_NE(config_error_of(R"({"problem": {"Q": [[1,0],[0,1]], "q": [0,0], "A": [[1]], "b": [1], "lower": [0,0], "upper": [1,1]}})")
                .find("$.problem.A"),
            std::string::npos);
  EXPECT_NE(config_error_of(R"({"problem": {"Q": [[1]], "q": [0], "A": [[1]], "b": [1], "lower": [1], "upper": [0]}})")
                .find("$.problem"),
            std::string::npos);
}

TEST(Config, EveryBundledConfigLoads) {
  std::size_t count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(DSG_CONFIG_DIR)) {
    if (entry.path().extension() != ".json") continue;
    const auto cfg = load_config(entry.path());
    EXPECT_FALSE(cfg.checks.empty()) << entry.path();
    EXPECT_TRUE(cfg.output.trace_path.has_value()) << entry.path();
    const auto [A, sigma] = make_lagrangian(cfg.lagrangian, cfg.problem.instance.constraint_dimension(), cfg.seed);
    EXPECT_NO_THROW(AugmentedLagrangian(cfg.problem.instance, A, sigma));
    ++count;
  }
  EXPECT_GE(count, 12u);
}

TEST(Config, LoadErrorsCarryThePath) {
  const auto path = std::filesystem::path(DSG_TEST_DATA_DIR) / "bad_epsilon.json";
  try {
    load_config(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    EXPECT_NE(e.message().find("bad_epsilon.json"), std::string::npos);
  }
  try {
    load_config("/nonexistent/x.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(Config, SeedOverrideWins) {
  const auto j = Json::parse(R"({"problem": "P1", "seed": 5, "subsolver": {"strategy": "multistart"}})");
  EXPECT_EQ(parse_config(j).seed, 5u);
  const auto cfg = parse_config(j, 42);
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(std::get<MultistartConfig>(cfg.subsolver).seed, 42u);
}

TEST(Config, MakeLagrangianVariants) {
  LagrangianSpec s;
  auto [A, sigma] = make_lagrangian(s, 2, 0);
  EXPECT_EQ(sigma.name, "sharp-p2");
  EXPECT_EQ(A(Vector{1.0, 2.0}), (Vector{1.0, 2.0}));
  s.deflection = "penalty";
  auto pen = make_lagrangian(s, 2, 0);
  EXPECT_EQ(pen.first(Vector{1.0, 2.0}), (Vector{0.0, 0.0}));
  s.penalty = "saturating";
  s.k_sigma = 0.25;
  const auto sat = make_lagrangian(s, 1, 0).second;
  EXPECT_DOUBLE_EQ(sat(Vector{1.0}), 0.5);
  EXPECT_EQ(sat.k_sigma, 0.25);
  s.penalty = "sharp-p2";
  s.deflection = "scaled-matrix";
  s.matrix = {{2.0}};
  auto scaled = make_lagrangian(s, 1, 0);
  EXPECT_DOUBLE_EQ(scaled.first(Vector{1.0})[0] * 2.0 * kDominationSafetyFactor, 2.0);
  s.matrix = {{1.0, 0.0}, {0.0, 1.0}};
  EXPECT_THROW(make_lagrangian(s, 1, 0), Error);
}

TEST(TraceIo, CsvAndJsonLinesRoundTripBitExactly) {
  const Trace t = random_trace(7, 2, 3, 9);
  for (auto fmt : {TraceFormat::Csv, TraceFormat::JsonLines}) {
    const auto text = render_trace(t, 2, 3, fmt);
    const auto parsed = parse_trace(text, fmt);
    EXPECT_EQ(parsed.m, 2u);
    EXPECT_EQ(parsed.n, 3u);
    expect_same(t, parsed.trace);
    EXPECT_EQ(render_trace(parsed.trace, 2, 3, fmt), text);
  }
}

TEST(TraceIo, EmptyTraceIsHeaderOnly) {
  const auto csv = render_trace({}, 1, 2, TraceFormat::Csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
  EXPECT_EQ(csv.substr(0, 2), "k,");
  EXPECT_TRUE(parse_trace(csv, TraceFormat::Csv).trace.empty());
}

TEST(TraceIo, MalformedInputIsReported) {
  const auto csv = render_trace(random_trace(2, 1, 1, 0), 1, 1, TraceFormat::Csv);
  std::string broken = csv;
  broken.replace(broken.rfind(','), 1, ",x");
  EXPECT_THROW(parse_trace(broken, TraceFormat::Csv), Error);
  EXPECT_THROW(parse_trace("k,q_k\n", TraceFormat::Csv), Error);
  EXPECT_THROW(parse_trace("{\"k\": 0}\n", TraceFormat::JsonLines), Error);
}

TEST(TraceIo, WriteAtomicLeavesNoTemporary) {
  const auto dir = std::filesystem::temp_directory_path() / "dsg_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "trace.csv";
  write_atomic(path, "a\n");
  write_atomic(path, "b\n");
  EXPECT_EQ(read_file(path), "b\n");
  EXPECT_FALSE(std::filesystem::exists(dir / "trace.csv.tmp"));
  std::filesystem::remove_all(dir);
  EXPECT_EQ(format_for_path("x.jsonl"), TraceFormat::JsonLines);
  EXPECT_EQ(format_for_path("x.csv"), TraceFormat::Csv);
}

TEST(TraceIo, RunTraceSurvivesDisk) {
  const auto cfg = load_config(std::filesystem::path(DSG_CONFIG_DIR) / "p2_sharp_dsg2.json");
  const auto [A, sigma] = make_lagrangian(cfg.lagrangian, 1, 0);
  const AugmentedLagrangian L(cfg.problem.instance, A, sigma);
  const auto out = run(L, cfg.dsg, cfg.subsolver);
  const auto parsed = parse_trace(render_trace(out.trace, 1, 1, TraceFormat::Csv), TraceFormat::Csv);
  expect_same(out.trace, parsed.trace);
  EXPECT_TRUE(check_telescoping(parsed.trace, cfg.dsg.alpha).holds);
}

TEST(Report, ExitCodesFollowPriority) {
  ClaimVerdict ok;
  ok.holds = true;
  ClaimVerdict bad;
  bad.holds = false;
  ClaimVerdict soft = bad;
  soft.downgraded = true;
  EXPECT_EQ(exit_code(RunStatus::StoppedEpsilonOptimal, {ok}), kExitOk);
  EXPECT_EQ(exit_code(RunStatus::MaxIterReached, {ok, soft}), kExitMaxIter);
  EXPECT_EQ(exit_code(RunStatus::MaxIterReached, {bad}), kExitCheckFailed);
  EXPECT_EQ(exit_code(RunStatus::SubsolverFailure, {}), kExitOther);
  EXPECT_EQ(exit_code(std::nullopt, {ok}), kExitOk);
  EXPECT_EQ(exit_code(std::nullopt, {bad}), kExitCheckFailed);
  const auto j = run_report("P1", std::nullopt, std::nullopt, {ok}, 0);
  EXPECT_EQ(j["problem"], "P1");
}
