#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "surfsl/remap.hpp"
#include "surfsl/sl.hpp"

namespace surfsl {

enum class ExperimentKind {
  LebesgueSweep,
  TorusKnotConvergence,
  DeformationalFlow,
  RkOrderStudy,
  ManufacturedSolution,
};

std::string_view to_string(ExperimentKind kind);
/// Throws ConfigError for unknown names.
ExperimentKind experiment_kind(std::string_view name);

/// Ball radius for the SL experiments. EpsilonFromTimestep resolves to
/// EpsilonScaledRadius{theta, c h_t} once h_t is known for a run.
struct EpsilonFromTimestep {
  double theta = 1.0;
  double c = 1.0;
};
using RunRadius = std::variant<FixedRadius, EpsilonScaledRadius, MinPointsRadius, EpsilonFromTimestep>;

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::TorusKnotConvergence;
  /// Node counts (ascending). For rk_order_study: step counts.
  std::vector<std::size_t> node_counts{500, 1000, 2000, 4000};
  std::vector<int> rk_orders{4};
  std::vector<int> degrees{4};
  std::vector<RemapOperator> operators{RemapOperator::L1};
  MlsWeight mls_weight = MlsWeight::WendlandC2;
  RunRadius radius = MinPointsRadius{2.0};
  TimestepRule timestep = SqrtCoupling{0.5};
  std::vector<std::uint64_t> seeds{1};
  /// lebesgue_sweep: multiples of the min_points(2) radius.
  std::vector<double> radius_factors{1.0, 2.0, 4.0};
  /// Final time; unset means the problem default.
  std::optional<double> t_final;
  std::string output_dir = "out";
  /// Runs grid cells concurrently and parallelizes inside each run.
  bool parallel = false;
};

/// Parses the JSON config text. Throws ConfigError with a readable message.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Checks list lengths, ordering and parameter ranges. Throws ConfigError.
void validate(const ExperimentConfig& cfg);

struct RateFit {
  double slope = 0.0;
  double r_squared = 0.0;
};

/// Least-squares line through (log h, log e). Needs >= 3 pairs, all positive.
RateFit fit_rate(std::span<const double> h, std::span<const double> errors);

struct ConvergenceRow {
  std::size_t n_nodes = 0;
  double h_x = 0.0;
  double h_t = 0.0;
  double error = 0.0;
};

struct ConvergenceReport {
  std::string label;
  int rk_order = 0;
  int degree = 0;
  RemapOperator op = RemapOperator::L1;
  std::uint64_t seed = 0;
  std::vector<ConvergenceRow> rows;
  /// Slope against h_x, or against h_t for rk_order_study. Unset when fewer
  /// than three finite positive errors are available.
  std::optional<RateFit> fit;
};

struct LebesgueRow {
  RemapOperator op = RemapOperator::L1;
  int degree = 0;
  double radius = 0.0;
  double lebesgue_minus_1 = 0.0;
};

struct ExperimentResult {
  std::vector<ConvergenceReport> reports;
  std::vector<LebesgueRow> lebesgue;
  /// Output files, relative to the output directory.
  std::vector<std::string> files;
};

/// Runs the configured grid and writes the CSV artifacts into
/// cfg.output_dir. Files are written with a `.partial` suffix that is
/// removed only once every run has completed; on failure the exception
/// propagates and the partial files stay. Timestamps go only to
/// metadata.json.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// CSV writers (17 significant digits).
void write_run_csv(std::ostream& os, const SLRun& run);
void write_field_csv(std::ostream& os, const PointCloud& cloud, const Eigen::VectorXd& v);
void write_convergence_csv(std::ostream& os, const ConvergenceReport& report);
void write_lebesgue_csv(std::ostream& os, std::span<const LebesgueRow> rows);
void write_summary_csv(std::ostream& os, ExperimentKind kind, std::span<const ConvergenceReport> reports);

/// Reads a convergence CSV back (for cross-checking summary rates).
std::vector<ConvergenceRow> read_convergence_csv(std::istream& is);

std::string_view to_string(RemapOperator op);

}  // namespace surfsl
