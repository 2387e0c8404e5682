#include "pmt/mass.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "pmt/error.hpp"
#include "pmt/parallel.hpp"

namespace pmt {

namespace {

constexpr double kFluxNormalization = 1.0 / (16.0 * M_PI);

// omega_i = g_ij,j - g_jj,i
Vec3 flux_density(const MetricJet<double>& j) {
  Vec3 w;
  for (int i = 0; i < 3; ++i) {
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s += j.dg[k](i, k) - j.dg[i](k, k);
    w[i] = s;
  }
  return w;
}

void check_panels(int panels) {
  if (panels < 4) throw DomainError("mass quadrature needs at least 4 panels");
}

struct LineRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

LineRule gauss_legendre(int n, double length) {
  LineRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / dp;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = 0.5 * length * (1.0 - x);
    rule.nodes[n - 1 - i] = 0.5 * length * (1.0 + x);
    rule.weights[i] = rule.weights[n - 1 - i] = 0.5 * length * w;
  }
  return rule;
}

LineRule line_rule(LineQuadrature kind, int n, double length) {
  if (kind == LineQuadrature::GaussLegendre) return gauss_legendre(n, length);
  LineRule rule;
  const double h = length / n;
  for (int i = 0; i <= n; ++i) {
    rule.nodes.push_back(h * i);
    rule.weights.push_back((i == 0 || i == n) ? 0.5 * h : h);
  }
  return rule;
}

// int_{S^1_r} g_a3 theta^a ds on the boundary circle.
double circle_term(const MetricField& metric, double r, int azimuth_panels) {
  const double dphi = 2.0 * M_PI / azimuth_panels;
  return r * dphi * deterministic_sum(static_cast<std::size_t>(azimuth_panels), [&](std::size_t k) {
    const double phi = dphi * static_cast<double>(k);
    const Vec3 x(r * std::cos(phi), r * std::sin(phi), 0.0);
    const Mat3 g = metric.eval(x);
    return g(0, 2) * std::cos(phi) + g(1, 2) * std::sin(phi);
  });
}

// Flux of omega through the sphere of radius r, polar angle in
// [0, theta_max], using `jet_at` for the metric data.
template <typename JetAt>
double spherical_flux(JetAt&& jet_at, double r, double theta_max, int polar_nodes, int azimuth_panels,
                      LineQuadrature kind) {
  const LineRule polar = line_rule(kind, polar_nodes, theta_max);
  const double dphi = 2.0 * M_PI / azimuth_panels;
  const std::size_t rows = polar.nodes.size();
  const std::size_t cols = static_cast<std::size_t>(azimuth_panels);
  const double sum = deterministic_sum(rows * cols, [&](std::size_t idx) {
    const std::size_t i = idx / cols;
    const double theta = polar.nodes[i];
    const double st = std::sin(theta);
    const double phi = dphi * static_cast<double>(idx % cols);
    const Vec3 mu(st * std::cos(phi), st * std::sin(phi), std::cos(theta));
    return polar.weights[i] * st * flux_density(jet_at(r * mu)).dot(mu);
  });
  return r * r * dphi * sum;
}

void require_enclosed_by_sphere(const MetricField& metric, double r, const char* what) {
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError(std::string(what) + ": radius must be positive");
  for (const Excision& e : metric.excisions()) {
    if (e.center.norm() + e.radius >= r) {
      throw DomainError(std::string(what) + ": surface of radius " + std::to_string(r) +
                        " meets the excision at " + format_point(e.center));
    }
  }
}

}  // namespace

std::string to_string(ExhaustionShape shape) {
  switch (shape) {
    case ExhaustionShape::Hemisphere: return "hemisphere";
    case ExhaustionShape::Sphere: return "sphere";
    case ExhaustionShape::HalfCylinder: return "half-cylinder";
  }
  return "unknown";
}

ExhaustionShape exhaustion_shape_from_string(const std::string& name) {
  if (name == "hemisphere") return ExhaustionShape::Hemisphere;
  if (name == "sphere") return ExhaustionShape::Sphere;
  if (name == "half-cylinder" || name == "halfcylinder") return ExhaustionShape::HalfCylinder;
  throw DomainError("unknown exhaustion shape '" + name + "'");
}

double mass_hemisphere(const MetricField& metric, double r, int panels, LineQuadrature rule) {
  check_panels(panels);
  require_enclosed_by_sphere(metric, r, "hemisphere flux");
  const auto jet_at = [&](const Vec3& x) { return metric.jet(x); };
  const double bulk = spherical_flux(jet_at, r, 0.5 * M_PI, panels, 2 * panels, rule);
  return kFluxNormalization * (bulk + circle_term(metric, r, 2 * panels));
}

double mass_sphere(const MetricField& metric, double r, int panels, LineQuadrature rule) {
  check_panels(panels);
  require_enclosed_by_sphere(metric, r, "sphere flux");
  if (!metric.mirror_symmetric()) {
    throw DomainError(metric.name() + ": sphere flux needs a mirror-symmetric metric");
  }
  const auto jet_at = [&](const Vec3& x) { return mirror_extended_jet(metric, x); };
  return kFluxNormalization * spherical_flux(jet_at, r, M_PI, 2 * panels, 2 * panels, rule);
}

double mass_halfcylinder(const MetricField& metric, double L, int panels, LineQuadrature rule) {
  check_panels(panels);
  if (!(L > 0.0) || !std::isfinite(L)) throw DomainError("half-cylinder flux: size must be positive");
  for (const Excision& e : metric.excisions()) {
    if (e.center.head<2>().norm() + e.radius >= L || e.center.z() + e.radius >= L) {
      throw DomainError("half-cylinder flux: surface of size " + std::to_string(L) +
                        " meets the excision at " + format_point(e.center));
    }
  }
  const int n = panels;
  const int m = 2 * panels;
  const LineRule line = line_rule(rule, n, L);
  const double dphi = 2.0 * M_PI / m;
  const std::size_t cols = static_cast<std::size_t>(m);
  const std::size_t rows = line.nodes.size();

  // Top disk {x3 = L, rho <= L}, normal e3, area element rho drho dphi.
  const double disk = deterministic_sum(rows * cols, [&](std::size_t idx) {
    const std::size_t i = idx / cols;
    const double rho = line.nodes[i];
    const double phi = dphi * static_cast<double>(idx % cols);
    const Vec3 x(rho * std::cos(phi), rho * std::sin(phi), L);
    return line.weights[i] * rho * flux_density(metric.jet(x))[2];
  });

  // Tube {rho = L, 0 <= x3 <= L}, radial normal, area element L dphi dx3.
  const double tube = deterministic_sum(rows * cols, [&](std::size_t idx) {
    const std::size_t i = idx / cols;
    const double phi = dphi * static_cast<double>(idx % cols);
    const Vec3 nu(std::cos(phi), std::sin(phi), 0.0);
    const Vec3 x(L * nu.x(), L * nu.y(), line.nodes[i]);
    return line.weights[i] * flux_density(metric.jet(x)).dot(nu);
  });

  const double flux = dphi * disk + L * dphi * tube;
  return kFluxNormalization * (flux + circle_term(metric, L, m));
}

namespace {

struct LinearFit {
  double mass = 0.0;
  double coefficient = 0.0;
  double rms = 0.0;
};

LinearFit fit_fixed_exponent(std::span<const std::pair<double, double>> s, double p) {
  const Eigen::Index n = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = std::pow(s[i].first, -p);
    b(i) = s[i].second;
  }
  const Eigen::Vector2d x = a.colPivHouseholderQr().solve(b);
  LinearFit out;
  out.mass = x(0);
  out.coefficient = x(1);
  out.rms = std::sqrt((a * x - b).squaredNorm() / static_cast<double>(n));
  return out;
}

// Golden-section minimization of the misfit over p in [lo, hi].
double best_exponent(std::span<const std::pair<double, double>> s, double lo, double hi) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = fit_fixed_exponent(s, c).rms, fd = fit_fixed_exponent(s, d).rms;
  for (int it = 0; it < 200 && (b - a) > 1e-10 * std::max(1.0, std::abs(b)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = fit_fixed_exponent(s, c).rms;
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = fit_fixed_exponent(s, d).rms;
    }
  }
  return 0.5 * (a + b);
}

FitResult fit_power_law(std::span<const std::pair<double, double>> s) {
  FitResult out;
  const std::size_t n = s.size();
  const double last = s[n - 1].second;
  double spread = 0.0;
  for (const auto& [r, v] : s) spread = std::max(spread, std::abs(v - last));
  if (spread <= 1e-14 * std::max(1.0, std::abs(last))) {
    out.mass = last;
    out.exponent = std::numeric_limits<double>::quiet_NaN();
    out.note = "constant sequence";
    return out;
  }

  std::vector<double> diffs(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) diffs[k] = s[k + 1].second - s[k].second;
  const bool monotone = std::all_of(diffs.begin(), diffs.end(), [&](double d) {
    return d != 0.0 && std::signbit(d) == std::signbit(diffs[0]);
  });
  if (!monotone) {
    out.mass = last;
    out.exponent = std::numeric_limits<double>::quiet_NaN();
    out.residual = std::abs(diffs.back());
    out.uncertainty = spread;
    out.converged = false;
    out.note = "no convergence evidence: non-monotone tail";
    return out;
  }

  // Initial exponent: slope of log|d_k| against log r_k.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double x = std::log(s[k].first);
    const double y = std::log(std::abs(diffs[k]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(n - 1);
  double p0;
  if (n - 1 >= 2) {
    p0 = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
  } else {
    p0 = 1.0;
  }
  if (!(p0 > 0.0) || !std::isfinite(p0)) {
    out.mass = last;
    out.exponent = p0;
    out.residual = std::abs(diffs.back());
    out.uncertainty = spread;
    out.converged = false;
    out.note = "no convergence evidence: differences do not decay";
    return out;
  }

  const double p = best_exponent(s, 0.25 * p0, 4.0 * p0);
  const LinearFit fit = fit_fixed_exponent(s, p);
  out.mass = fit.mass;
  out.exponent = p;
  out.coefficient = fit.coefficient;
  out.residual = fit.rms;
  out.uncertainty = fit.rms;
  return out;
}

}  // namespace

FitResult extrapolate(std::span<const std::pair<double, double>> samples) {
  if (samples.size() < 3) throw DomainError("extrapolation needs at least three samples");
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (!(samples[k].first > 0.0) || !std::isfinite(samples[k].second)) {
      throw DomainError("extrapolation: radii must be positive and values finite");
    }
    if (k > 0 && !(samples[k].first > samples[k - 1].first)) {
      throw DomainError("extrapolation: radii must be strictly increasing");
    }
  }
  FitResult out = fit_power_law(samples);
  if (out.converged && samples.size() >= 4 && out.note.empty()) {
    const FitResult tail = fit_power_law(samples.subspan(1));
    const double shift = tail.converged ? std::abs(tail.mass - out.mass) : std::abs(out.mass - samples.back().second);
    out.uncertainty = std::max(out.uncertainty, shift);
  } else if (out.converged && out.note.empty()) {
    out.note = "three samples: uncertainty is the fit misfit only";
  }
  return out;
}

std::vector<double> default_radii(const MetricField& metric, int count) {
  double extent = 0.0;
  for (const Excision& e : metric.excisions()) extent = std::max(extent, e.center.norm() + e.radius);
  const double r0 = std::max(20.0, 4.0 * extent);
  std::vector<double> radii;
  for (int k = 0; k < count; ++k) radii.push_back(r0 * std::ldexp(1.0, k));
  return radii;
}

MassReport mass_study(const MetricField& metric, ExhaustionShape shape, const std::vector<double>& radii,
                      int panels, LineQuadrature rule) {
  MassReport report;
  report.shape = shape;
  for (double r : radii) {
    double v = 0.0;
    switch (shape) {
      case ExhaustionShape::Hemisphere: v = mass_hemisphere(metric, r, panels, rule); break;
      case ExhaustionShape::Sphere: v = mass_sphere(metric, r, panels, rule); break;
      case ExhaustionShape::HalfCylinder: v = mass_halfcylinder(metric, r, panels, rule); break;
    }
    report.samples.emplace_back(r, v);
  }
  report.fit = extrapolate(report.samples);
  return report;
}

}  // namespace pmt
