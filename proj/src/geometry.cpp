#include "pmt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace pmt {

namespace {

void require_outside_excision(const MetricField& metric, const Vec3& x) {
  if (metric.inside_excision(x)) {
    throw DomainError(metric.name() + ": point " + format_point(x) + " lies inside an excision");
  }
}

}  // namespace

PointFrame<double> frame(const MetricField& metric, const Vec3& x) {
  require_outside_excision(metric, x);
  return frame(metric.jet(x), " at " + format_point(x));
}

double scalar_curvature(const MetricField& metric, const Vec3& x) {
  require_outside_excision(metric, x);
  const MetricJet<double> jet = metric.jet(x);
  return scalar_curvature(jet, frame(jet, " at " + format_point(x)));
}

double boundary_mean_curvature(const MetricField& metric, const Vec3& x) {
  if (std::abs(x.z()) > 1e-12 * std::max(1.0, x.norm())) {
    throw DomainError("boundary_mean_curvature: point " + format_point(x) + " is not on x3 = 0");
  }
  require_outside_excision(metric, x);
  const Vec3 on_plane(x.x(), x.y(), 0.0);
  const MetricJet<double> jet = metric.jet(on_plane);
  return boundary_mean_curvature(jet, frame(jet, " at " + format_point(x)));
}

DerivativeCheck check_derivatives(const MetricField& metric, int points, std::uint64_t seed, double extent,
                                  double h) {
  if (points <= 0 || extent <= 0.0 || h <= 0.0) throw DomainError("check_derivatives: invalid sampling parameters");
  constexpr double kFloor = 1e-10;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lateral(-extent, extent);
  std::uniform_real_distribution<double> height(h, extent);
  auto far_from_excisions = [&](const Vec3& x) {
    return std::none_of(metric.excisions().begin(), metric.excisions().end(),
                        [&](const Excision& e) { return (x - e.center).norm() < 1.5 * e.radius; });
  };
  auto fd_error = [&](const Vec3& x, const MetricJet<double>& jet, double step) {
    double e = 0.0;
    for (int k = 0; k < 3; ++k) {
      const Vec3 dx = Vec3::Unit(k) * step;
      const MetricJet<double> plus = metric.jet(x + dx);
      const MetricJet<double> minus = metric.jet(x - dx);
      e = std::max(e, ((plus.g - minus.g) / (2 * step) - jet.dg[k]).cwiseAbs().maxCoeff());
      for (int l = 0; l < 3; ++l) {
        e = std::max(e, ((plus.dg[l] - minus.dg[l]) / (2 * step) - jet.d2g[k][l]).cwiseAbs().maxCoeff());
      }
    }
    return e;
  };

  ScalarJet<double> test;
  DerivativeCheck out;
  out.min_order = std::numeric_limits<double>::infinity();
  double sum_coarse = 0.0;
  double sum_fine = 0.0;
  while (out.points < static_cast<std::size_t>(points)) {
    const Vec3 x(lateral(rng), lateral(rng), height(rng));
    if (!far_from_excisions(x)) continue;
    ++out.points;
    const MetricJet<double> jet = metric.jet(x);
    const double coarse = fd_error(x, jet, h);
    const double fine = fd_error(x, jet, h / 2);
    out.max_error = std::max(out.max_error, coarse);
    if (fine > kFloor) {
      ++out.measured;
      out.min_order = std::min(out.min_order, std::log2(coarse / fine));
      sum_coarse += coarse;
      sum_fine += fine;
    }

    test.value = x.z() + 0.3 * x.x() * x.z() - 0.2 * x.y() * x.y() + 0.1 * x.x() * x.y();
    test.d = Vec3(0.3 * x.z() + 0.1 * x.y(), -0.4 * x.y() + 0.1 * x.x(), 1.0 + 0.3 * x.x());
    test.d2 << 0.0, 0.1, 0.3, 0.1, -0.4, 0.0, 0.3, 0.0, 0.0;
    const PointFrame<double> f = frame(jet);
    const double trace = laplacian(f, test);
    const double divergence = laplacian_divergence_form(jet, f, test);
    out.max_trace_defect = std::max(out.max_trace_defect, std::abs(trace - divergence) / std::max(1.0, std::abs(trace)));
  }
  if (out.measured == 0) {
    out.min_order = std::numeric_limits<double>::quiet_NaN();
    out.aggregate_order = std::numeric_limits<double>::quiet_NaN();
  } else {
    out.aggregate_order = std::log2(sum_coarse / sum_fine);
  }
  return out;
}

}  // namespace pmt
