#include "surfsl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>

#include "json.hpp"
#include "surfsl/errors.hpp"
#include "surfsl/parallel.hpp"

namespace surfsl {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void config_error(const std::string& what) { fail(ErrorCode::ConfigError, what); }

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    config_error("bad value for '" + key + "': " + e.what());
  }
}

template <class T>
std::vector<T> get_list(const json& j, const std::string& key) {
  if (!j.is_array()) config_error("'" + key + "' must be a list");
  std::vector<T> out;
  for (const json& v : j) out.push_back(get_as<T>(v, key));
  return out;
}

double field(const json& j, const std::string& key, double fallback) {
  return j.contains(key) ? get_as<double>(j.at(key), key) : fallback;
}

void check_keys(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      config_error("unknown key '" + key + "' in " + where);
    }
  }
}

RemapOperator parse_operator(const std::string& s) {
  if (s == "l1" || s == "L1") return RemapOperator::L1;
  if (s == "mls" || s == "MLS") return RemapOperator::MLS;
  config_error("unknown operator '" + s + "' (expected l1 or mls)");
}

RunRadius parse_radius(const json& j) {
  if (!j.is_object()) config_error("'radius' must be an object");
  const std::string rule = j.contains("rule") ? get_as<std::string>(j.at("rule"), "radius.rule") : "";
  if (rule == "fixed") {
    check_keys(j, "radius", {"rule", "r"});
    return FixedRadius{field(j, "r", 0.0)};
  }
  if (rule == "epsilon_scaled") {
    check_keys(j, "radius", {"rule", "theta", "epsilon"});
    return EpsilonScaledRadius{field(j, "theta", 1.0), field(j, "epsilon", 1.0)};
  }
  if (rule == "min_points") {
    check_keys(j, "radius", {"rule", "factor"});
    return MinPointsRadius{field(j, "factor", 2.0)};
  }
  if (rule == "epsilon_from_timestep") {
    check_keys(j, "radius", {"rule", "theta", "c"});
    return EpsilonFromTimestep{field(j, "theta", 1.0), field(j, "c", 1.0)};
  }
  config_error("unknown radius rule '" + rule + "'");
}

TimestepRule parse_timestep(const json& j) {
  if (!j.is_object()) config_error("'timestep' must be an object");
  const std::string rule = j.contains("rule") ? get_as<std::string>(j.at("rule"), "timestep.rule") : "";
  if (rule == "sqrt") {
    check_keys(j, "timestep", {"rule", "c0"});
    return SqrtCoupling{field(j, "c0", 0.5)};
  }
  if (rule == "cfl") {
    check_keys(j, "timestep", {"rule", "c_cfl", "u_max"});
    return CflRule{field(j, "c_cfl", 4.0), field(j, "u_max", 1.0)};
  }
  if (rule == "power") {
    check_keys(j, "timestep", {"rule", "sigma", "c0"});
    return PowerRule{field(j, "sigma", 2.0), field(j, "c0", 0.5)};
  }
  config_error("unknown timestep rule '" + rule + "'");
}

json radius_json(const RunRadius& r) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, FixedRadius>) return {{"rule", "fixed"}, {"r", v.r}};
        if constexpr (std::is_same_v<T, EpsilonScaledRadius>) {
          return {{"rule", "epsilon_scaled"}, {"theta", v.theta}, {"epsilon", v.epsilon}};
        }
        if constexpr (std::is_same_v<T, MinPointsRadius>) return {{"rule", "min_points"}, {"factor", v.factor}};
        if constexpr (std::is_same_v<T, EpsilonFromTimestep>) {
          return {{"rule", "epsilon_from_timestep"}, {"theta", v.theta}, {"c", v.c}};
        }
      },
      r);
}

json timestep_json(const TimestepRule& r) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, SqrtCoupling>) return {{"rule", "sqrt"}, {"c0", v.c0}};
        if constexpr (std::is_same_v<T, CflRule>) return {{"rule", "cfl"}, {"c_cfl", v.c_cfl}, {"u_max", v.u_max}};
        if constexpr (std::is_same_v<T, PowerRule>) return {{"rule", "power"}, {"sigma", v.sigma}, {"c0", v.c0}};
      },
      r);
}

json config_json(const ExperimentConfig& cfg) {
  json ops = json::array();
  for (RemapOperator op : cfg.operators) ops.push_back(std::string(to_string(op)));
  json j = {{"experiment", std::string(to_string(cfg.experiment))},
            {"node_counts", cfg.node_counts},
            {"rk_orders", cfg.rk_orders},
            {"degrees", cfg.degrees},
            {"operators", ops},
            {"mls_weight", cfg.mls_weight == MlsWeight::WendlandC2 ? "wendland_c2" : "bump"},
            {"radius", radius_json(cfg.radius)},
            {"timestep", timestep_json(cfg.timestep)},
            {"seeds", cfg.seeds},
            {"radius_factors", cfg.radius_factors},
            {"output_dir", cfg.output_dir},
            {"parallel", cfg.parallel}};
  if (cfg.t_final) j["t_final"] = *cfg.t_final;
  return j;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// Collects output files; each is written as `<name>.partial` and renamed
// by commit() once the whole experiment has succeeded.
class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) fail(ErrorCode::InvalidArgument, "cannot create output directory " + dir_.string());
  }

  template <class Writer>
  void write(const std::string& name, Writer&& writer) {
    const fs::path tmp = dir_ / (name + ".partial");
    {
      std::ofstream os(tmp);
      if (!os) fail(ErrorCode::InvalidArgument, "cannot open " + tmp.string());
      writer(os);
      if (!os) fail(ErrorCode::InvalidArgument, "write failed for " + tmp.string());
    }
    std::lock_guard lock(mu_);
    names_.push_back(name);
  }

  std::vector<std::string> commit() {
    std::vector<std::string> names = names_;
    std::sort(names.begin(), names.end());
    for (const std::string& n : names) fs::rename(dir_ / (n + ".partial"), dir_ / n);
    return names;
  }

  const fs::path& path() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
  std::mutex mu_;
};

void write_metadata(const fs::path& dir, const ExperimentConfig& cfg, const std::string& started,
                    const std::string& status, const std::vector<std::string>& files) {
  json j = {{"started", started}, {"finished", utc_now()}, {"status", status}, {"config", config_json(cfg)},
            {"files", files}};
  std::ofstream os(dir / "metadata.json");
  os << j.dump(2) << '\n';
}

std::string label_for(int order, int degree, RemapOperator op, std::uint64_t seed) {
  std::ostringstream os;
  os << "l" << order << "_k" << degree << "_" << to_string(op) << "_s" << seed;
  return os.str();
}

SLProblem problem_for(const ExperimentConfig& cfg) {
  SLProblem p = [&] {
    switch (cfg.experiment) {
      case ExperimentKind::TorusKnotConvergence:
        return torus_knot_problem();
      case ExperimentKind::DeformationalFlow:
        return deformational_problem();
      case ExperimentKind::ManufacturedSolution:
        return manufactured_problem();
      default:
        fail(ErrorCode::InvalidArgument, "experiment has no SL problem");
    }
  }();
  if (cfg.t_final) p.t_final = *cfg.t_final;
  return p;
}

RadiusRule resolve_run_radius(const RunRadius& r, double h_t) {
  return std::visit(
      [h_t](const auto& v) -> RadiusRule {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, EpsilonFromTimestep>) {
          return EpsilonScaledRadius{v.theta, v.c * h_t};
        } else {
          return v;
        }
      },
      r);
}

void finish_fit(ConvergenceReport& rep, bool against_h_t) {
  std::vector<double> h, e;
  for (const ConvergenceRow& row : rep.rows) {
    if (!(std::isfinite(row.error) && row.error > 0.0)) continue;
    h.push_back(against_h_t ? row.h_t : row.h_x);
    e.push_back(row.error);
  }
  if (h.size() >= 3) rep.fit = fit_rate(h, e);
}

struct RunCell {
  int order;
  int degree;
  RemapOperator op;
  std::uint64_t seed;
};

void run_sl_family(const ExperimentConfig& cfg, OutputDir& out, ExperimentResult& result) {
  const SLProblem problem = problem_for(cfg);
  // Clouds depend only on (seed, n); generate each once, in a fixed order.
  std::map<std::pair<std::uint64_t, std::size_t>, PointCloud> clouds;
  for (std::uint64_t seed : cfg.seeds) {
    for (std::size_t n : cfg.node_counts) clouds.emplace(std::make_pair(seed, n), generate_nodes(problem.manifold, n, seed));
  }
  std::vector<RunCell> cells;
  for (std::uint64_t seed : cfg.seeds) {
    for (int order : cfg.rk_orders) {
      for (int degree : cfg.degrees) {
        for (RemapOperator op : cfg.operators) cells.push_back({order, degree, op, seed});
      }
    }
  }
  std::vector<ConvergenceReport> reports(cells.size());
  parallel_for(
      cells.size(),
      [&](std::size_t c) {
        const RunCell& cell = cells[c];
        ConvergenceReport& rep = reports[c];
        rep.label = label_for(cell.order, cell.degree, cell.op, cell.seed);
        rep.rk_order = cell.order;
        rep.degree = cell.degree;
        rep.op = cell.op;
        rep.seed = cell.seed;
        for (std::size_t n : cfg.node_counts) {
          const PointCloud& cloud = clouds.at({cell.seed, n});
          const double h_x = *cloud.fill_distance();
          const double h_t = std::min(resolve_timestep(cfg.timestep, h_x), problem.t_final);
          SLConfig sc;
          sc.n_nodes = n;
          sc.rk_order = cell.order;
          sc.remap.degree = cell.degree;
          sc.remap.op = cell.op;
          sc.remap.weight = cfg.mls_weight;
          sc.remap.radius = resolve_run_radius(cfg.radius, h_t);
          sc.timestep = cfg.timestep;
          sc.seed = cell.seed;
          sc.parallel = cfg.parallel && cells.size() == 1;
          const SLRun run = sl_solve(problem, cloud, sc);
          const std::string tag = rep.label + "_n" + std::to_string(n);
          out.write("run_" + tag + ".csv", [&](std::ostream& os) { write_run_csv(os, run); });
          out.write("field_" + tag + ".csv",
                    [&](std::ostream& os) { write_field_csv(os, cloud, run.final_values()); });
          const auto& last = run.steps.back().rel_error;
          rep.rows.push_back({n, run.h_x, run.h_t, last ? *last : kNaN});
        }
        finish_fit(rep, false);
        out.write("convergence_" + rep.label + ".csv", [&](std::ostream& os) { write_convergence_csv(os, rep); });
      },
      cfg.parallel);
  result.reports = std::move(reports);
}

void run_rk_study(const ExperimentConfig& cfg, OutputDir& out, ExperimentResult& result) {
  // Solid-body rotation on the unit sphere about a tilted axis; the exact
  // flow is a rotation, so global errors are measured directly.
  const Manifold m = Manifold::sphere(1.0);
  const Vec3 axis = Vec3(1.0, 2.0, 3.0).normalized();
  const double T = cfg.t_final.value_or(1.0);
  const OdeRhs g = [axis](double, const Vec3& y) { return Vec3(axis.cross(y)); };
  for (std::uint64_t seed : cfg.seeds) {
    const std::vector<Vec3> starts = sample_uniform(m, 16, seed);
    std::vector<Vec3> exact;
    for (const Vec3& x : starts) exact.push_back(Eigen::AngleAxisd(T, axis) * x);
    for (int order : cfg.rk_orders) {
      const ButcherTableau tab = tableau_for_order(order);
      ConvergenceReport rep;
      rep.label = "l" + std::to_string(order) + "_s" + std::to_string(seed);
      rep.rk_order = order;
      rep.seed = seed;
      for (std::size_t steps : cfg.node_counts) {
        const double h = T / static_cast<double>(steps);
        double err = 0.0;
        for (std::size_t i = 0; i < starts.size(); ++i) {
          Vec3 y = starts[i];
          for (std::size_t s = 0; s < steps; ++s) y = projected_rk_step(tab, m, g, static_cast<double>(s) * h, y, h);
          err = std::max(err, (y - exact[i]).norm());
        }
        rep.rows.push_back({steps, kNaN, h, err});
      }
      finish_fit(rep, true);
      out.write("convergence_" + rep.label + ".csv", [&](std::ostream& os) { write_convergence_csv(os, rep); });
      result.reports.push_back(std::move(rep));
    }
  }
}

void run_lebesgue(const ExperimentConfig& cfg, OutputDir& out, ExperimentResult& result) {
  const Manifold m = Manifold::sphere(1.0);
  for (std::uint64_t seed : cfg.seeds) {
    for (std::size_t n : cfg.node_counts) {
      const PointCloud cloud = generate_nodes(m, n, seed);
      const PointCloud dense(m, sample_uniform(m, 20 * n, seed + 0x9e3779b97f4a7c15ULL));
      std::vector<LebesgueRow> rows;
      for (int degree : cfg.degrees) {
        RemapConfig base;
        base.degree = degree;
        base.radius = MinPointsRadius{2.0};
        const double r0 = resolve_radius(cloud, base);
        for (RemapOperator op : cfg.operators) {
          for (double f : cfg.radius_factors) {
            RemapConfig rc = base;
            rc.op = op;
            rc.weight = cfg.mls_weight;
            rc.radius = FixedRadius{f * r0};
            const double L = lebesgue_constant(cloud, rc, dense, cfg.parallel);
            rows.push_back({op, degree, f * r0, L - 1.0});
          }
        }
      }
      const std::string name = "lebesgue_n" + std::to_string(n) + "_s" + std::to_string(seed) + ".csv";
      out.write(name, [&](std::ostream& os) { write_lebesgue_csv(os, rows); });
      result.lebesgue.insert(result.lebesgue.end(), rows.begin(), rows.end());
    }
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) out.push_back(cell);
  return out;
}

double parse_num(const std::string& s) {
  if (s == "nan") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) fail(ErrorCode::InvalidArgument, "bad number '" + s + "'");
  return v;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::LebesgueSweep:
      return "lebesgue_sweep";
    case ExperimentKind::TorusKnotConvergence:
      return "torus_knot_convergence";
    case ExperimentKind::DeformationalFlow:
      return "deformational_flow";
    case ExperimentKind::RkOrderStudy:
      return "rk_order_study";
    case ExperimentKind::ManufacturedSolution:
      return "manufactured_solution";
  }
  return "unknown";
}

std::string_view to_string(RemapOperator op) { return op == RemapOperator::L1 ? "l1" : "mls"; }

ExperimentKind experiment_kind(std::string_view name) {
  for (ExperimentKind k : {ExperimentKind::LebesgueSweep, ExperimentKind::TorusKnotConvergence,
                           ExperimentKind::DeformationalFlow, ExperimentKind::RkOrderStudy,
                           ExperimentKind::ManufacturedSolution}) {
    if (to_string(k) == name) return k;
  }
  config_error("unknown experiment '" + std::string(name) + "'");
}

ExperimentConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) config_error("config must be a JSON object");
  check_keys(j, "config",
             {"experiment", "node_counts", "rk_orders", "degrees", "operators", "mls_weight", "radius", "timestep",
              "seeds", "radius_factors", "t_final", "output_dir", "parallel"});
  if (!j.contains("experiment")) config_error("missing 'experiment'");
  ExperimentConfig cfg;
  cfg.experiment = experiment_kind(get_as<std::string>(j.at("experiment"), "experiment"));
  if (j.contains("node_counts")) cfg.node_counts = get_list<std::size_t>(j.at("node_counts"), "node_counts");
  if (j.contains("rk_orders")) cfg.rk_orders = get_list<int>(j.at("rk_orders"), "rk_orders");
  if (j.contains("degrees")) cfg.degrees = get_list<int>(j.at("degrees"), "degrees");
  if (j.contains("operators")) {
    cfg.operators.clear();
    for (const std::string& s : get_list<std::string>(j.at("operators"), "operators")) {
      cfg.operators.push_back(parse_operator(s));
    }
  } else if (cfg.experiment == ExperimentKind::LebesgueSweep) {
    cfg.operators = {RemapOperator::L1, RemapOperator::MLS};
  }
  if (j.contains("mls_weight")) {
    const auto w = get_as<std::string>(j.at("mls_weight"), "mls_weight");
    if (w == "wendland_c2") {
      cfg.mls_weight = MlsWeight::WendlandC2;
    } else if (w == "bump") {
      cfg.mls_weight = MlsWeight::Bump;
    } else {
      config_error("unknown mls_weight '" + w + "'");
    }
  }
  if (j.contains("radius")) cfg.radius = parse_radius(j.at("radius"));
  if (j.contains("timestep")) cfg.timestep = parse_timestep(j.at("timestep"));
  if (j.contains("seeds")) cfg.seeds = get_list<std::uint64_t>(j.at("seeds"), "seeds");
  if (j.contains("radius_factors")) cfg.radius_factors = get_list<double>(j.at("radius_factors"), "radius_factors");
  if (j.contains("t_final")) cfg.t_final = get_as<double>(j.at("t_final"), "t_final");
  if (j.contains("output_dir")) cfg.output_dir = get_as<std::string>(j.at("output_dir"), "output_dir");
  if (j.contains("parallel")) cfg.parallel = get_as<bool>(j.at("parallel"), "parallel");
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) config_error("cannot read config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.node_counts.empty()) config_error("node_counts must not be empty");
  if (cfg.rk_orders.empty()) config_error("rk_orders must not be empty");
  if (cfg.degrees.empty()) config_error("degrees must not be empty");
  if (cfg.operators.empty()) config_error("operators must not be empty");
  if (cfg.seeds.empty()) config_error("seeds must not be empty");
  if (cfg.radius_factors.empty()) config_error("radius_factors must not be empty");
  for (std::size_t i = 0; i < cfg.node_counts.size(); ++i) {
    if (cfg.node_counts[i] == 0) config_error("node counts must be positive");
    if (i > 0 && cfg.node_counts[i] <= cfg.node_counts[i - 1]) config_error("node_counts must be ascending");
  }
  for (int l : cfg.rk_orders) {
    if (l < 1 || l > 6) config_error("rk orders must lie in [1, 6]");
  }
  for (int k : cfg.degrees) {
    if (k < 0 || k > 8) config_error("degrees must lie in [0, 8]");
  }
  for (double f : cfg.radius_factors) {
    if (!(f > 0.0)) config_error("radius factors must be positive");
  }
  if (cfg.t_final && !(*cfg.t_final > 0.0)) config_error("t_final must be positive");
  const bool bad_radius = std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, FixedRadius>) return !(v.r > 0.0);
        if constexpr (std::is_same_v<T, EpsilonScaledRadius>) return !(v.theta > 0.0 && v.epsilon > 0.0);
        if constexpr (std::is_same_v<T, MinPointsRadius>) return !(v.factor >= 2.0);
        if constexpr (std::is_same_v<T, EpsilonFromTimestep>) return !(v.theta > 0.0 && v.c > 0.0);
      },
      cfg.radius);
  if (bad_radius) config_error("radius parameters out of range");
  const bool bad_step = std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, SqrtCoupling>) return !(v.c0 > 0.0);
        if constexpr (std::is_same_v<T, CflRule>) return !(v.c_cfl > 0.0 && v.u_max > 0.0);
        if constexpr (std::is_same_v<T, PowerRule>) return !(v.sigma > 0.0 && v.c0 > 0.0);
      },
      cfg.timestep);
  if (bad_step) config_error("timestep parameters out of range");
  if (cfg.output_dir.empty()) config_error("output_dir must not be empty");
}

RateFit fit_rate(std::span<const double> h, std::span<const double> errors) {
  if (h.size() != errors.size()) fail(ErrorCode::InvalidArgument, "h and error lists differ in length");
  if (h.size() < 3) fail(ErrorCode::InvalidArgument, "rate fit needs at least 3 points");
  const auto n = static_cast<double>(h.size());
  double sx = 0.0, sy = 0.0;
  std::vector<double> x(h.size()), y(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(h[i] > 0.0) || !(errors[i] > 0.0)) fail(ErrorCode::NonPositiveInput, "rate fit needs positive h and errors");
    x[i] = std::log(h[i]);
    y[i] = std::log(errors[i]);
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) fail(ErrorCode::InvalidArgument, "rate fit needs distinct h values");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

void write_run_csv(std::ostream& os, const SLRun& run) {
  os << "step,time,rel_max_error,max_departure_dist\n";
  for (std::size_t m = 0; m < run.steps.size(); ++m) {
    const auto& d = run.steps[m];
    os << m << ',' << num(run.times[m]) << ',' << num(d.rel_error ? *d.rel_error : kNaN) << ','
       << num(m == 0 ? kNaN : d.max_departure) << '\n';
  }
}

void write_field_csv(std::ostream& os, const PointCloud& cloud, const Eigen::VectorXd& v) {
  if (static_cast<std::size_t>(v.size()) != cloud.size()) fail(ErrorCode::InvalidArgument, "field size mismatch");
  os << "x,y,z,v\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& x = cloud[i];
    os << num(x.x()) << ',' << num(x.y()) << ',' << num(x.z()) << ',' << num(v(static_cast<Eigen::Index>(i)))
       << '\n';
  }
}

void write_convergence_csv(std::ostream& os, const ConvergenceReport& report) {
  os << "n_nodes,h_x,h_t,error\n";
  for (const ConvergenceRow& r : report.rows) {
    os << r.n_nodes << ',' << num(r.h_x) << ',' << num(r.h_t) << ',' << num(r.error) << '\n';
  }
}

void write_lebesgue_csv(std::ostream& os, std::span<const LebesgueRow> rows) {
  os << "operator,degree,radius,lebesgue_minus_1\n";
  for (const LebesgueRow& r : rows) {
    os << to_string(r.op) << ',' << r.degree << ',' << num(r.radius) << ',' << num(r.lebesgue_minus_1) << '\n';
  }
}

void write_summary_csv(std::ostream& os, ExperimentKind kind, std::span<const ConvergenceReport> reports) {
  os << "experiment,label,rk_order,degree,operator,seed,points,fitted_rate,r_squared\n";
  for (const ConvergenceReport& r : reports) {
    os << to_string(kind) << ',' << r.label << ',' << r.rk_order << ',' << r.degree << ',' << to_string(r.op) << ','
       << r.seed << ',' << r.rows.size() << ',' << num(r.fit ? r.fit->slope : kNaN) << ','
       << num(r.fit ? r.fit->r_squared : kNaN) << '\n';
  }
}

std::vector<ConvergenceRow> read_convergence_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "n_nodes,h_x,h_t,error") {
    fail(ErrorCode::InvalidArgument, "expected header n_nodes,h_x,h_t,error");
  }
  std::vector<ConvergenceRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 4) fail(ErrorCode::InvalidArgument, "malformed convergence row: " + line);
    rows.push_back({static_cast<std::size_t>(std::stoull(cells[0])), parse_num(cells[1]), parse_num(cells[2]),
                    parse_num(cells[3])});
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const std::string started = utc_now();
  OutputDir out(cfg.output_dir);
  ExperimentResult result;
  try {
    switch (cfg.experiment) {
      case ExperimentKind::LebesgueSweep:
        run_lebesgue(cfg, out, result);
        break;
      case ExperimentKind::RkOrderStudy:
        run_rk_study(cfg, out, result);
        break;
      default:
        run_sl_family(cfg, out, result);
        break;
    }
    if (!result.reports.empty()) {
      out.write("summary.csv", [&](std::ostream& os) { write_summary_csv(os, cfg.experiment, result.reports); });
    }
  } catch (...) {
    write_metadata(out.path(), cfg, started, "failed", {});
    throw;
  }
  result.files = out.commit();
  write_metadata(out.path(), cfg, started, "complete", result.files);
  return result;
}

}  // namespace surfsl
