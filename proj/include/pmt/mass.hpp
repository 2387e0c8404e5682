#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmt/metric_zoo.hpp"

namespace pmt {

enum class ExhaustionShape { Hemisphere, Sphere, HalfCylinder };

std::string to_string(ExhaustionShape shape);
ExhaustionShape exhaustion_shape_from_string(const std::string& name);

/// Rule along the non-periodic surface direction (polar angle, or the radius
/// and height of the half-cylinder). The azimuth always uses the periodic
/// trapezoid rule with twice as many panels.
enum class LineQuadrature { GaussLegendre, Trapezoid };

inline constexpr int kDefaultPanels = 96;

/// (1/16 pi) [ int_{S^2_{r,+}} (g_ij,j - g_jj,i) mu^i dS + int_{S^1_r} g_a3 theta^a ds ]
/// with Euclidean coordinate normals and measures.
double mass_hemisphere(const MetricField& metric, double r, int panels = kDefaultPanels,
                       LineQuadrature rule = LineQuadrature::GaussLegendre);

/// Full-sphere ADM flux of the mirror-doubled metric.
double mass_sphere(const MetricField& metric, double r, int panels = kDefaultPanels,
                   LineQuadrature rule = LineQuadrature::GaussLegendre);

/// Flux through the half-cylinder of radius and height L (top disk plus
/// tube) plus the circle term on the boundary circle of radius L.
double mass_halfcylinder(const MetricField& metric, double L, int panels = kDefaultPanels,
                         LineQuadrature rule = LineQuadrature::GaussLegendre);

struct FitResult {
  double mass = 0.0;          // extrapolated value
  double exponent = 0.0;      // p in value(r) = mass + c r^-p (NaN when undefined)
  double coefficient = 0.0;   // c
  double residual = 0.0;      // RMS misfit of the model
  /// max(residual, change of the extrapolated value when the smallest radius
  /// is dropped); the quantity used in tolerance budgets.
  double uncertainty = 0.0;
  bool converged = true;
  std::string note;
};

/// Least-squares fit of value(r) = mass + c r^-p. The exponent starts from
/// the slope of log|successive differences| versus log r and is refined by
/// minimizing the misfit. Needs at least three samples with strictly
/// increasing radii (`DomainError` otherwise); a non-monotone tail or a
/// non-positive exponent is reported through `converged = false`.
FitResult extrapolate(std::span<const std::pair<double, double>> samples);

struct MassReport {
  ExhaustionShape shape = ExhaustionShape::Hemisphere;
  std::vector<std::pair<double, double>> samples;  // (radius or L, flux value)
  FitResult fit;
};

/// Geometric ladder r0 * 2^k, k = 0..count-1, with r0 chosen so the smallest
/// surface clears every excision by a factor of 4 (and r0 >= 20).
std::vector<double> default_radii(const MetricField& metric, int count = 5);

MassReport mass_study(const MetricField& metric, ExhaustionShape shape,
                      const std::vector<double>& radii, int panels = kDefaultPanels,
                      LineQuadrature rule = LineQuadrature::GaussLegendre);

}  // namespace pmt
