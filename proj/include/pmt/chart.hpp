#pragma once

#include <array>

#include "pmt/metric_zoo.hpp"
#include "pmt/tensor.hpp"

namespace pmt {

enum class ChartKind { Cartesian, Spherical };

/// Radial coordinate of the spherical chart: r itself, or s = log r (uniform
/// spacing in s concentrates nodes near the horizon).
enum class RadialMap { Linear, Log };

/// Derivatives of the chart map y -> x at a point: `jacobian(i, a)` =
/// dx^i/dy^a, `d1[c](i, a)` = d_c d_a x^i, `d2[c][d](i, a)` = d_d d_c d_a x^i.
struct ChartDerivatives {
  Mat3 jacobian = Mat3::Identity();
  std::array<Mat3, 3> d1{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
  std::array<std::array<Mat3, 3>, 3> d2{
      {{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()},
       {Mat3::Zero(), Mat3::Zero(), Mat3::Zero()},
       {Mat3::Zero(), Mat3::Zero(), Mat3::Zero()}}};
};

/// Coordinate chart on the half-space. Cartesian charts are the identity, or
/// with a stretch length L > 0 the per-axis map x^i = L sinh(y^i / L) (unit
/// spacing near the origin, geometric growth far out); spherical charts use y = (radial, theta, azimuth) about `origin` with
/// x3 = r cos(theta), so the boundary plane is theta = pi/2.
///
/// The polar axis is degenerate; the spherical chart refuses theta below
/// `kThetaMin` and the omitted cone has solid angle 2 pi (1 - cos kThetaMin)
/// (about 3.1e-6 sr).
class Chart {
 public:
  static constexpr double kThetaMin = 1.0e-3;

  static Chart cartesian(double stretch = 0.0);
  static Chart spherical(RadialMap map = RadialMap::Linear, const Vec3& origin = Vec3::Zero()) {
    return Chart(ChartKind::Spherical, map, origin);
  }

  ChartKind kind() const { return kind_; }
  RadialMap radial_map() const { return map_; }
  const Vec3& origin() const { return origin_; }
  double stretch() const { return stretch_; }
  bool identity() const { return kind_ == ChartKind::Cartesian && stretch_ == 0.0; }

  Vec3 to_cartesian(const Vec3& y) const;
  /// Inverse map; for the spherical chart returns theta in [0, pi] and
  /// azimuth in [0, 2 pi).
  Vec3 from_cartesian(const Vec3& x) const;

  Mat3 jacobian(const Vec3& y) const;
  ChartDerivatives derivatives(const Vec3& y) const;

 private:
  Chart(ChartKind kind, RadialMap map, const Vec3& origin) : kind_(kind), map_(map), origin_(origin) {}
  void check(const Vec3& y) const;

  ChartKind kind_;
  RadialMap map_;
  Vec3 origin_;
  double stretch_ = 0.0;
};

/// Pullback of Cartesian metric data to chart coordinates:
/// g^_ab = J^i_a J^j_b g_ij, with partials by the chain rule.
MetricJet<double> pullback(const MetricJet<double>& cartesian, const ChartDerivatives& d);
Mat3 pullback(const Mat3& cartesian, const Mat3& jacobian);

/// Chart components of a Cartesian scalar jet.
ScalarJet<double> pullback(const ScalarJet<double>& cartesian, const ChartDerivatives& d);

/// Metric components evaluated in a chart.
class ChartMetric {
 public:
  ChartMetric(MetricPtr metric, Chart chart) : metric_(std::move(metric)), chart_(chart) {}

  MetricJet<double> jet(const Vec3& y) const;
  Mat3 eval(const Vec3& y) const;

  const Chart& chart() const { return chart_; }
  const MetricField& metric() const { return *metric_; }
  const MetricPtr& metric_ptr() const { return metric_; }

 private:
  MetricPtr metric_;
  Chart chart_;
};

ChartMetric chart_transform(MetricPtr metric, const Chart& chart);

/// Chart components and partials of `metric` at chart point y.
MetricJet<double> chart_jet(const MetricField& metric, const Chart& chart, const Vec3& y);
Mat3 chart_components(const MetricField& metric, const Chart& chart, const Vec3& y);

}  // namespace pmt
