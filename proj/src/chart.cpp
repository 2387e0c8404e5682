#include "pmt/chart.hpp"

#include <algorithm>
#include <cmath>

#include "pmt/error.hpp"

namespace pmt {

namespace {

// n-th derivative of sin / cos at t.
double sin_derivative(int n, double t) {
  switch (n % 4) {
    case 0: return std::sin(t);
    case 1: return std::cos(t);
    case 2: return -std::sin(t);
    default: return -std::cos(t);
  }
}

double cos_derivative(int n, double t) { return sin_derivative(n + 1, t); }

// The spherical map is x^i = origin_i + R(rho) A_i(theta) B_i(azimuth) with
// A = (sin, sin, cos), B = (cos, sin, 1); every partial factorizes.
struct SphericalFactors {
  RadialMap map;
  double rho, theta, azimuth;

  double radial(int n) const {
    if (map == RadialMap::Log) return std::exp(rho);
    if (n == 0) return rho;
    return n == 1 ? 1.0 : 0.0;
  }
  double polar(int i, int n) const {
    return i < 2 ? sin_derivative(n, theta) : cos_derivative(n, theta);
  }
  double azimuthal(int i, int n) const {
    if (i == 0) return cos_derivative(n, azimuth);
    if (i == 1) return sin_derivative(n, azimuth);
    return n == 0 ? 1.0 : 0.0;
  }
  // Partial of x^i with multiplicities (n_rho, n_theta, n_azimuth).
  double partial(int i, const std::array<int, 3>& n) const {
    return radial(n[0]) * polar(i, n[1]) * azimuthal(i, n[2]);
  }
};

}  // namespace

Chart Chart::cartesian(double stretch) {
  if (!(stretch >= 0.0) || !std::isfinite(stretch)) throw DomainError("cartesian chart: invalid stretch length");
  Chart c(ChartKind::Cartesian, RadialMap::Linear, Vec3::Zero());
  c.stretch_ = stretch;
  return c;
}

void Chart::check(const Vec3& y) const {
  if (kind_ != ChartKind::Spherical) return;
  const double r = map_ == RadialMap::Log ? std::exp(y[0]) : y[0];
  if (!(r > 0.0)) throw DomainError("spherical chart: non-positive radius");
  if (y[1] < kThetaMin || y[1] > M_PI - kThetaMin) {
    throw DomainError("spherical chart: polar angle " + std::to_string(y[1]) +
                      " inside the excluded axis cone");
  }
}

Vec3 Chart::to_cartesian(const Vec3& y) const {
  if (identity()) return y;
  if (kind_ == ChartKind::Cartesian) {
    const double l = stretch_;
    return Vec3(l * std::sinh(y[0] / l), l * std::sinh(y[1] / l), l * std::sinh(y[2] / l));
  }
  const double r = map_ == RadialMap::Log ? std::exp(y[0]) : y[0];
  const double st = std::sin(y[1]);
  return origin_ + Vec3(r * st * std::cos(y[2]), r * st * std::sin(y[2]), r * std::cos(y[1]));
}

Vec3 Chart::from_cartesian(const Vec3& x) const {
  if (identity()) return x;
  if (kind_ == ChartKind::Cartesian) {
    const double l = stretch_;
    return Vec3(l * std::asinh(x[0] / l), l * std::asinh(x[1] / l), l * std::asinh(x[2] / l));
  }
  const Vec3 d = x - origin_;
  const double r = d.norm();
  double azimuth = std::atan2(d.y(), d.x());
  if (azimuth < 0.0) azimuth += 2.0 * M_PI;
  const double theta = r > 0.0 ? std::acos(std::clamp(d.z() / r, -1.0, 1.0)) : 0.0;
  return Vec3(map_ == RadialMap::Log ? std::log(r) : r, theta, azimuth);
}

Mat3 Chart::jacobian(const Vec3& y) const {
  if (identity()) return Mat3::Identity();
  if (kind_ == ChartKind::Cartesian) {
    const double l = stretch_;
    return Vec3(std::cosh(y[0] / l), std::cosh(y[1] / l), std::cosh(y[2] / l)).asDiagonal();
  }
  check(y);
  const SphericalFactors f{map_, y[0], y[1], y[2]};
  Mat3 j;
  for (int i = 0; i < 3; ++i) {
    for (int a = 0; a < 3; ++a) {
      std::array<int, 3> n{0, 0, 0};
      ++n[a];
      j(i, a) = f.partial(i, n);
    }
  }
  return j;
}

ChartDerivatives Chart::derivatives(const Vec3& y) const {
  ChartDerivatives out;
  if (identity()) return out;
  if (kind_ == ChartKind::Cartesian) {
    const double l = stretch_;
    for (int a = 0; a < 3; ++a) {
      out.jacobian(a, a) = std::cosh(y[a] / l);
      out.d1[a](a, a) = std::sinh(y[a] / l) / l;
      out.d2[a][a](a, a) = std::cosh(y[a] / l) / (l * l);
    }
    return out;
  }
  check(y);
  const SphericalFactors f{map_, y[0], y[1], y[2]};
  for (int i = 0; i < 3; ++i) {
    for (int a = 0; a < 3; ++a) {
      std::array<int, 3> n{0, 0, 0};
      ++n[a];
      out.jacobian(i, a) = f.partial(i, n);
      for (int c = 0; c < 3; ++c) {
        std::array<int, 3> nc = n;
        ++nc[c];
        out.d1[c](i, a) = f.partial(i, nc);
        for (int d = 0; d < 3; ++d) {
          std::array<int, 3> ncd = nc;
          ++ncd[d];
          out.d2[c][d](i, a) = f.partial(i, ncd);
        }
      }
    }
  }
  return out;
}

Mat3 pullback(const Mat3& g, const Mat3& j) { return j.transpose() * g * j; }

MetricJet<double> pullback(const MetricJet<double>& cart, const ChartDerivatives& d) {
  const Mat3& J = d.jacobian;
  const Mat3& G = cart.g;
  std::array<Mat3, 3> gc;  // chart partials of the Cartesian components
  for (int c = 0; c < 3; ++c) {
    gc[c] = Mat3::Zero();
    for (int k = 0; k < 3; ++k) gc[c] += J(k, c) * cart.dg[k];
  }
  MetricJet<double> out;
  out.g = J.transpose() * G * J;
  for (int c = 0; c < 3; ++c) {
    const Mat3& Jc = d.d1[c];
    out.dg[c] = Jc.transpose() * G * J + J.transpose() * G * Jc + J.transpose() * gc[c] * J;
  }
  for (int c = 0; c < 3; ++c) {
    const Mat3& Jc = d.d1[c];
    for (int e = 0; e < 3; ++e) {
      const Mat3& Je = d.d1[e];
      const Mat3& Jce = d.d2[c][e];
      Mat3 gce = Mat3::Zero();
      for (int k = 0; k < 3; ++k) {
        gce += Je(k, c) * cart.dg[k];
        for (int l = 0; l < 3; ++l) gce += J(k, c) * J(l, e) * cart.d2g[k][l];
      }
      out.d2g[c][e] = Jce.transpose() * G * J + Jc.transpose() * gc[e] * J + Jc.transpose() * G * Je +
                      Je.transpose() * G * Jc + J.transpose() * gc[e] * Jc + J.transpose() * G * Jce +
                      Je.transpose() * gc[c] * J + J.transpose() * gce * J + J.transpose() * gc[c] * Je;
    }
  }
  return out;
}

ScalarJet<double> pullback(const ScalarJet<double>& cart, const ChartDerivatives& d) {
  ScalarJet<double> out;
  out.value = cart.value;
  out.d = d.jacobian.transpose() * cart.d;
  out.d2 = d.jacobian.transpose() * cart.d2 * d.jacobian;
  for (int b = 0; b < 3; ++b) {
    for (int a = 0; a < 3; ++a) {
      for (int i = 0; i < 3; ++i) out.d2(a, b) += d.d1[b](i, a) * cart.d[i];
    }
  }
  return out;
}

MetricJet<double> ChartMetric::jet(const Vec3& y) const { return chart_jet(*metric_, chart_, y); }

Mat3 ChartMetric::eval(const Vec3& y) const { return chart_components(*metric_, chart_, y); }

MetricJet<double> chart_jet(const MetricField& metric, const Chart& chart, const Vec3& y) {
  if (chart.identity()) return metric.jet(y);
  return pullback(metric.jet(chart.to_cartesian(y)), chart.derivatives(y));
}

Mat3 chart_components(const MetricField& metric, const Chart& chart, const Vec3& y) {
  if (chart.identity()) return metric.eval(y);
  return pullback(metric.eval(chart.to_cartesian(y)), chart.jacobian(y));
}

ChartMetric chart_transform(MetricPtr metric, const Chart& chart) {
  return ChartMetric(std::move(metric), chart);
}

}  // namespace pmt
