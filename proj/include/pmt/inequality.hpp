#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pmt/domain.hpp"
#include "pmt/harmonic_solver.hpp"
#include "pmt/mass.hpp"

namespace pmt {

/// Control volume of each node: V/8 from every active cell touching it.
std::vector<double> nodal_weights(const Domain& domain);

struct BulkIntegral {
  /// (1/16 pi) int (|hess u|^2 / max(|grad u|, eps) + R |grad u|) dV
  double value = 0.0;
  double hessian_part = 0.0;
  double curvature_part = 0.0;
  double epsilon = 0.0;  // 1e-8 max |grad u|
  /// Share of nodes with |grad u| < epsilon.
  double regularized_fraction = 0.0;
};

/// Nodal (trapezoid) quadrature over the closed truncated domain with
/// finite-difference jets of u and analytic curvature.
BulkIntegral bulk_integral(const MetricField& metric, const DiscreteField& u);

/// (1/8 pi) int_Sigma H |grad u| dA with the induced area element.
double boundary_integral(const MetricField& metric, const DiscreteField& u);

struct IdentityCheck {
  double max_defect = 0.0;
  /// max |grad u| H over the samples, for scale.
  double scale = 0.0;
  std::size_t samples = 0;
};

/// Max over SIGMA nodes of |d_nu |grad u| + |grad u| H| with nu the outward
/// unit normal of Sigma, with d_nu |grad u| = hess u(nu, grad u) / |grad u|
/// from the finite-difference jet of u. Uses every SIGMA node at least two nodes away from
/// the edges of Sigma unless `nodes` is given.
IdentityCheck normal_derivative_identity(const MetricField& metric, const DiscreteField& u,
                                         const std::vector<std::size_t>& nodes = {});

enum class CoareaIntegrand { One, ScalarCurvature };

struct CoareaOptions {
  CoareaIntegrand integrand = CoareaIntegrand::One;
  /// Levels as fractions of max u on the clipped block.
  std::vector<double> level_fractions{0.1, 0.25, 0.4, 0.55, 0.7};
  /// Slab width is bin_factor * (u range) / sqrt(resolution).
  double bin_factor = 0.2;
  /// Clip block: shell radius in units of the inner radius; box half-width
  /// as a fraction of the truncation.
  double shell_clip = 16.0;
  double box_clip = 0.5;
};

struct CoareaLevel {
  double t = 0.0;
  double slab = 0.0;        // (1/dt) int_{|u - t| < dt/2} f |grad u| dV
  double isosurface = 0.0;  // int_{u = t} f dA on the triangulated level set
  double mismatch = 0.0;    // relative
};

struct CoareaReport {
  double cell_sum = 0.0;    // int f |grad u| dV over the clip block
  double slab_total = 0.0;  // sum over a bin partition of dt * slab estimate
  double bin_width = 0.0;
  std::size_t empty_bins = 0;
  std::vector<CoareaLevel> levels;
  double worst_mismatch = 0.0;
};

/// Coarea consistency on a grid-aligned clip block: cell-sum and slab routes
/// (exact integrals of the linear interpolants on the six tetrahedra of each
/// uncut cell) against marching-tetrahedra isosurface quadrature in the chart
/// metric.
CoareaReport coarea_check(const MetricField& metric, const DiscreteField& u, const CoareaOptions& options = {});

struct LevelComponents {
  double t = 0.0;  // after regularization
  int components = 0;
  int touching = 0;  // components with a cell touching OUTER
};

/// Connected components (26-adjacency of cells straddling the level, azimuth
/// periodic) of each level set {u = t} and whether they reach OUTER.
std::vector<LevelComponents> level_connectedness(const DiscreteField& u, const std::vector<double>& levels);

struct EnergySample {
  double min_scalar_curvature = 0.0;
  double min_mean_curvature = 0.0;
  std::size_t samples = 0;
  bool satisfied = true;
};

/// R_g at every in-domain node and `random_points` random chart points; H_g
/// at every SIGMA node and as many random boundary points. Satisfied iff
/// both minima are >= -tolerance.
EnergySample sample_energy_conditions(const MetricField& metric, const Domain& domain, int random_points = 10000,
                                      std::uint64_t seed = 1, double tolerance = 1e-8);

enum class Verdict { Pass, Fail, Skipped, Errored };
std::string to_string(Verdict v);

struct InequalityOptions {
  SolveOptions solver;
  DomainOptions domain;
  int mass_panels = kDefaultPanels;
  std::vector<double> radii;  // default_radii(metric) when empty
  int random_points = 10000;
  std::uint64_t seed = 1;
  double energy_tolerance = 1e-8;
  bool refinement_run = true;  // solve at resolution / 2
  bool truncation_run = true;  // solve at 2 * truncation
  std::vector<double> connectedness_levels{0.1, 1.0, 5.0};
  CoareaOptions coarea;
};

struct InequalityReport {
  std::string metric;
  int resolution = 0;
  double truncation = 0.0;
  std::string domain;

  EnergySample energy;
  MassReport mass;
  BulkIntegral bulk;
  double boundary = 0.0;
  double rhs = 0.0;    // B + S
  double slack = 0.0;  // mass - (B + S)

  double refinement_delta = 0.0;
  double truncation_delta = 0.0;
  double tol_total = 0.0;  // fit uncertainty + refinement and truncation deltas

  double residual = 0.0;
  double min_gradient_sigma = 0.0;
  int solver_iterations = 0;
  double solver_relative_residual = 0.0;
  IdentityCheck identity;
  CoareaReport coarea;
  std::vector<LevelComponents> connectedness;

  Verdict verdict = Verdict::Skipped;
  std::string note;
};

/// Full pipeline: energy-condition sampling, solve, integrals, mass
/// extrapolation and slack. PASS iff mass >= B + S - tol_total; SKIPPED when
/// the sampled energy conditions fail.
InequalityReport check_inequality(const MetricField& metric, int resolution, double truncation,
                                  const InequalityOptions& options = {});

}  // namespace pmt
