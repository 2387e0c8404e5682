#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pmt/geometry.hpp"
#include "pmt/inequality.hpp"

namespace pmt {

std::string toolkit_version();

enum class ExperimentKind { MassStudy, SolverConvergence, Inequality, FullSuite };
std::string to_string(ExperimentKind kind);

/// Named metric family with its parameters.
struct MetricSpec {
  std::string family = "flat";  // flat | half-schwarzschild | conformal | perturbed-flat | rescaled
  double mass = 1.0;
  std::vector<Bubble> bubbles;
  bool mirror = true;
  double amplitude = 0.0;
  double tau = 1.0;
  std::uint64_t seed = 1;
  double lambda = 1.0;
  std::shared_ptr<MetricSpec> base;
};

MetricPtr make_metric(const MetricSpec& spec);

struct MetricFamilyInfo {
  std::string name;
  std::string parameters;
  std::string description;
};
std::vector<MetricFamilyInfo> metric_families();

/// Verdict thresholds. Defaults match the acceptance rules.
struct Tolerances {
  double mass = 5e-4;                 // |mass - expected_mass|
  double finite_radius = 1e-6;        // hemisphere flux vs m (1 + m / 2r)^3 / 2
  /// Hemisphere vs half-cylinder; unset means the sum of both fit uncertainties.
  std::optional<double> exhaustion = 1e-3;
  double residual_order = 1.8;
  double min_gradient_stability = 0.02;  // relative change over the last refinement
  double identity_order = 1.0;
  double coarea = 0.02;
  double budget_fraction = 0.05;      // tol_total < fraction * mass
  double derivative_order = 1.9;
  double trace_defect = 1e-10;
  double flat_mass = 1e-8;
  double flat_integrals = 1e-10;
  double flat_solution = 1e-8;        // max |u - x3|
  double scale_mass = 1e-3;           // |mass(lambda) - lambda mass|
  double scale_rhs = 0.05;            // relative
};

struct ExperimentConfig {
  std::string name = "experiment";
  ExperimentKind kind = ExperimentKind::FullSuite;
  MetricSpec metric;
  std::vector<int> resolutions{16, 32, 64};
  std::vector<double> truncations{50.0};
  std::vector<double> radii;  // default_radii(metric) when empty
  std::vector<ExhaustionShape> shapes{ExhaustionShape::Hemisphere};
  int panels = kDefaultPanels;
  double solver_tolerance = 1e-10;
  DomainOptions domain;
  std::string output = "pmt-out";
  std::uint64_t seed = 1;
  int random_points = 10000;
  int derivative_points = 1000;
  std::vector<double> levels{0.1, 1.0, 5.0};
  std::optional<double> expected_mass;
  /// Also run the pullback by x -> lambda x and compare (0 disables).
  double scale_lambda = 0.0;
  Tolerances tolerances;
};

/// Throws `ConfigError` with the offending line for malformed files, unknown
/// keys, wrong types, non-increasing ladders or parameters rejected by the
/// metric family.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// The parsed config with every default filled in, as indented JSON.
std::string echo_config(const ExperimentConfig& config);
/// Commented schema with the default of every key.
std::string describe_config_schema();

/// Diagnostics of one solve in a resolution ladder.
struct ResolutionSample {
  int resolution = 0;
  double truncation = 0.0;
  std::size_t nodes = 0;
  int iterations = 0;
  double relative_residual = 0.0;
  double residual = 0.0;      // max |Delta_g u| at interior nodes
  double min_gradient = 0.0;  // on Sigma
  double identity = 0.0;      // normal-derivative identity defect
  double coarea = 0.0;        // worst level mismatch
  double bulk = 0.0;
  double boundary = 0.0;
  double solution_error = 0.0;  // max |u - x3|, flat metric only (NaN otherwise)
  std::vector<LevelComponents> levels;
};

struct VerdictRecord {
  std::string rule;
  Verdict status = Verdict::Pass;
  std::string detail;
};

/// SKIPPED-INEQUALITY for the mass-estimate rules, SKIPPED for the others.
std::string status_label(const VerdictRecord& v);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunRecord {
  ExperimentConfig config;
  std::string version;
  int workers = 1;
  std::vector<StageTiming> timings;
  std::optional<DerivativeCheck> derivatives;
  std::vector<MassReport> mass;
  std::vector<ResolutionSample> ladder;
  std::vector<InequalityReport> inequality;
  std::vector<VerdictRecord> verdicts;

  /// 0 when every verdict passes or is skipped, 3 if any stage errored,
  /// 1 otherwise.
  int exit_code() const;
  const VerdictRecord* verdict(const std::string& rule) const;
};

struct RunOptions {
  bool quiet = false;
  bool write_outputs = true;
};

/// Executes the pipeline of `config.kind`, writes the record into
/// `config.output` and returns it. Pipeline errors become ERRORED verdicts.
RunRecord run(const ExperimentConfig& config, const RunOptions& options = {});

/// Writes record.jsonl (one JSON object per line, no timings), timings.json,
/// report.txt, convergence.tsv and one mass_<shape>.tsv per exhaustion.
void write_outputs(const RunRecord& record, const std::string& directory);

/// Resolution samples stored in a record.jsonl file.
std::vector<ResolutionSample> read_ladder(const std::string& record_path);

struct ObservableOrder {
  std::string observable;
  std::vector<int> resolutions;
  std::vector<double> values;
  /// log2(|e_h - e_h/2| / |e_h/2 - e_h/4|) over the three finest points.
  double order = 0.0;
  bool exact = false;
  std::string note;
};

/// Observed orders of every ladder observable. Needs at least three samples
/// (`DomainError` otherwise). Observables at round-off are reported exact;
/// non-monotone differences give a NaN order with a note.
std::vector<ObservableOrder> convergence_table(const std::vector<ResolutionSample>& ladder);
std::string format_convergence_table(const std::vector<ObservableOrder>& table);

/// Observed order from three successive values on a halving ladder.
ObservableOrder observed_order(const std::string& name, const std::vector<int>& resolutions,
                               const std::vector<double>& values);

std::string format_report(const InequalityReport& report);

}  // namespace pmt
