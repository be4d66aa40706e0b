#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "surfsl/errors.hpp"
#include "surfsl/experiment.hpp"

using namespace surfsl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("surfsl_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_torus(const fs::path& out) {
  ExperimentConfig cfg = parse_config(R"({
    "experiment": "torus_knot_convergence",
    "node_counts": [200, 300, 400],
    "rk_orders": [2],
    "degrees": [2],
    "operators": ["l1", "mls"],
    "t_final": 0.4
  })");
  cfg.output_dir = out.string();
  return cfg;
}

ErrorCode config_code(const std::string& text) {
  try {
    validate(parse_config(text));
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Experiment, FitRateExamples) {
  const std::vector<double> h{0.1, 0.05, 0.025};
  std::vector<double> e2, e15;
  for (double x : h) {
    e2.push_back(x * x);
    e15.push_back(3.0 * std::pow(x, 1.5));
  }
  const RateFit f = fit_rate(h, e2);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_NEAR(fit_rate(h, e15).slope, 1.5, 1e-12);

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> hn, en;
  for (double x = 0.2; x > 0.01; x /= 1.5) {
    hn.push_back(x);
    en.push_back(x * x * (1.0 + 0.01 * u(rng)));
  }
  const double s = fit_rate(hn, en).slope;
  EXPECT_GE(s, 1.9);
  EXPECT_LE(s, 2.1);

  const std::vector<double> bad{0.1, 0.0, 0.2};
  try {
    fit_rate(h, bad);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::NonPositiveInput);
  }
  EXPECT_THROW(fit_rate(std::vector<double>{0.1, 0.2}, std::vector<double>{1.0, 2.0}), Error);
}

TEST(Experiment, ParseConfig) {
  const ExperimentConfig c = parse_config(R"({
    // comments are allowed
    "experiment": "deformational_flow",
    "node_counts": [1000, 2000],
    "rk_orders": [4],
    "degrees": [4, 2],
    "operators": ["l1", "mls"],
    "mls_weight": "bump",
    "radius": {"rule": "epsilon_from_timestep", "theta": 0.6, "c": 2},
    "timestep": {"rule": "cfl", "c_cfl": 4, "u_max": 2.91},
    "seeds": [3, 4],
    "t_final": 5,
    "output_dir": "x",
    "parallel": true
  })");
  EXPECT_EQ(c.experiment, ExperimentKind::DeformationalFlow);
  EXPECT_EQ(c.node_counts, (std::vector<std::size_t>{1000, 2000}));
  EXPECT_EQ(c.degrees, (std::vector<int>{4, 2}));
  EXPECT_EQ(c.operators.size(), 2u);
  EXPECT_EQ(c.mls_weight, MlsWeight::Bump);
  ASSERT_TRUE(std::holds_alternative<EpsilonFromTimestep>(c.radius));
  EXPECT_EQ(std::get<EpsilonFromTimestep>(c.radius).c, 2.0);
  ASSERT_TRUE(std::holds_alternative<CflRule>(c.timestep));
  EXPECT_EQ(std::get<CflRule>(c.timestep).u_max, 2.91);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 4}));
  EXPECT_EQ(*c.t_final, 5.0);
  EXPECT_TRUE(c.parallel);
  validate(c);
}

TEST(Experiment, ConfigErrors) {
  EXPECT_EQ(config_code(R"({"experiment": "torus_knot_convergence", "node_counts": []})"), ErrorCode::ConfigError);
  EXPECT_EQ(config_code(R"({"experiment": "torus_knot_convergence", "node_counts": [2000, 1000]})"),
            ErrorCode::ConfigError);
  EXPECT_EQ(config_code(R"({"experiment": "nope"})"), ErrorCode::ConfigError);
  EXPECT_EQ(config_code(R"({"experiment": "lebesgue_sweep", "bogus": 1})"), ErrorCode::ConfigError);
  EXPECT_EQ(config_code(R"({"experiment": "lebesgue_sweep", "radius": {"rule": "min_points", "factor": 1}})"),
            ErrorCode::ConfigError);
  EXPECT_EQ(config_code(R"({"experiment": "lebesgue_sweep", "rk_orders": [9]})"), ErrorCode::ConfigError);
  EXPECT_EQ(config_code("{\"experiment\": "), ErrorCode::ConfigError);
  EXPECT_EQ(config_code(R"({"experiment": "lebesgue_sweep", "node_counts": "many"})"), ErrorCode::ConfigError);
}

TEST(Experiment, ShippedConfigsParse) {
  const fs::path dir = fs::path(SURFSL_SOURCE_DIR) / "configs";
  int count = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(validate(load_config(e.path()))) << e.path();
    ++count;
  }
  EXPECT_GE(count, 5);
}

TEST(Experiment, TorusRunWritesArtifactsAndCrossChecks) {
  const fs::path out = scratch_dir("torus");
  const ExperimentResult res = run_experiment(small_torus(out));
  ASSERT_EQ(res.reports.size(), 2u);
  EXPECT_TRUE(fs::exists(out / "summary.csv"));
  EXPECT_TRUE(fs::exists(out / "metadata.json"));
  for (const auto& f : res.files) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
    EXPECT_FALSE(fs::exists(out / (f + ".partial"))) << f;
  }
  for (const auto& rep : res.reports) {
    EXPECT_TRUE(fs::exists(out / ("run_" + rep.label + "_n200.csv")));
    EXPECT_TRUE(fs::exists(out / ("field_" + rep.label + "_n400.csv")));
  }

  // Summary rates equal fit_rate applied to the per-run convergence CSVs.
  std::ifstream summary(out / "summary.csv");
  std::string line;
  std::getline(summary, line);
  EXPECT_EQ(line, "experiment,label,rk_order,degree,operator,seed,points,fitted_rate,r_squared");
  int rows = 0;
  while (std::getline(summary, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    ASSERT_EQ(cells.size(), 9u);
    std::ifstream conv(out / ("convergence_" + cells[1] + ".csv"));
    const auto crow = read_convergence_csv(conv);
    std::vector<double> h, e;
    for (const auto& r : crow) {
      h.push_back(r.h_x);
      e.push_back(r.error);
    }
    const RateFit f = fit_rate(h, e);
    EXPECT_EQ(std::stod(cells[7]), f.slope);
    EXPECT_EQ(std::stod(cells[8]), f.r_squared);
    ++rows;
  }
  EXPECT_EQ(rows, 2);
}

TEST(Experiment, RerunIsByteIdentical) {
  const fs::path a = scratch_dir("det_a");
  const fs::path b = scratch_dir("det_b");
  ExperimentConfig ca = small_torus(a);
  ExperimentConfig cb = small_torus(b);
  cb.parallel = true;
  const ExperimentResult ra = run_experiment(ca);
  const ExperimentResult rb = run_experiment(cb);
  ASSERT_EQ(ra.files, rb.files);
  for (const auto& f : ra.files) {
    if (f == "metadata.json") continue;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(Experiment, LebesgueSweepRows) {
  const fs::path out = scratch_dir("leb");
  ExperimentConfig cfg = parse_config(R"({
    "experiment": "lebesgue_sweep",
    "node_counts": [300],
    "degrees": [2],
    "operators": ["l1", "mls"],
    "radius_factors": [1, 2, 4]
  })");
  cfg.output_dir = out.string();
  const ExperimentResult res = run_experiment(cfg);
  ASSERT_EQ(res.lebesgue.size(), 6u);
  std::vector<double> l1;
  for (const auto& r : res.lebesgue) {
    EXPECT_GE(r.lebesgue_minus_1, -1e-12);
    if (r.op == RemapOperator::L1) l1.push_back(r.lebesgue_minus_1);
  }
  ASSERT_EQ(l1.size(), 3u);
  EXPECT_LE(l1[1], 1.05 * l1[0] + 1e-12);
  EXPECT_LE(l1[2], 1.05 * l1[1] + 1e-12);
  EXPECT_EQ(slurp(out / "lebesgue_n300_s1.csv").substr(0, 40), "operator,degree,radius,lebesgue_minus_1\n");
}

TEST(Experiment, RkStudyFitsAgainstTimestep) {
  const fs::path out = scratch_dir("rk");
  ExperimentConfig cfg = parse_config(R"({
    "experiment": "rk_order_study",
    "node_counts": [10, 20, 40, 80],
    "rk_orders": [1, 2, 3, 4]
  })");
  cfg.output_dir = out.string();
  const ExperimentResult res = run_experiment(cfg);
  ASSERT_EQ(res.reports.size(), 4u);
  for (const auto& rep : res.reports) {
    ASSERT_TRUE(rep.fit.has_value());
    EXPECT_NEAR(rep.fit->slope, rep.rk_order, 0.3);
    EXPECT_DOUBLE_EQ(rep.rows[1].h_t, 0.05);
  }
}

TEST(Experiment, CsvNumberFormat) {
  ConvergenceReport rep;
  rep.rows.push_back({100, 0.1, 1.0 / 3.0, std::nan("")});
  std::ostringstream os;
  write_convergence_csv(os, rep);
  EXPECT_EQ(os.str(), "n_nodes,h_x,h_t,error\n100,0.10000000000000001,0.33333333333333331,nan\n");
  std::istringstream is(os.str());
  const auto back = read_convergence_csv(is);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].h_t, 1.0 / 3.0);
  EXPECT_TRUE(std::isnan(back[0].error));
}
