#include <cmath>

#include "doctest.h"
#include "pmt/chart.hpp"
#include "pmt/error.hpp"
#include "pmt/geometry.hpp"

using namespace pmt;

TEST_CASE("spherical chart round trip") {
  for (RadialMap map : {RadialMap::Linear, RadialMap::Log}) {
    const Chart c = Chart::spherical(map);
    const Vec3 x(1.3, -0.7, 0.4);
    CHECK((c.to_cartesian(c.from_cartesian(x)) - x).norm() < 1e-14);
  }
  const Chart c = Chart::spherical();
  const Vec3 y = c.from_cartesian(Vec3(1.0, 0.0, 0.0));
  CHECK(y[1] == doctest::Approx(M_PI / 2));
  CHECK_THROWS_AS(c.jacobian(Vec3(1.0, 1e-4, 0.0)), DomainError);
  CHECK_THROWS_AS(c.jacobian(Vec3(-1.0, 1.0, 0.0)), DomainError);
}

TEST_CASE("chart derivatives agree with finite differences") {
  for (RadialMap map : {RadialMap::Linear, RadialMap::Log}) {
    const Chart c = Chart::spherical(map, Vec3(0.1, 0.0, 0.0));
    const Vec3 y(map == RadialMap::Log ? 0.4 : 1.5, 1.1, 2.3);
    const ChartDerivatives d = c.derivatives(y);
    const double h = 1e-5;
    for (int a = 0; a < 3; ++a) {
      Vec3 e = Vec3::Zero();
      e[a] = h;
      const Mat3 fd = (c.jacobian(y + e) - c.jacobian(y - e)) / (2 * h);
      CHECK((fd - d.d1[a]).cwiseAbs().maxCoeff() < 1e-8);
      for (int b = 0; b < 3; ++b) {
        const Mat3 fd2 = (c.derivatives(y + e).d1[b] - c.derivatives(y - e).d1[b]) / (2 * h);
        CHECK((fd2 - d.d2[b][a]).cwiseAbs().maxCoeff() < 1e-8);
      }
      const Vec3 dx = (c.to_cartesian(y + e) - c.to_cartesian(y - e)) / (2 * h);
      CHECK((dx - d.jacobian.col(a)).norm() < 1e-8);
    }
  }
}

TEST_CASE("scalar curvature is chart invariant") {
  const auto g = make_perturbed_flat(0.2, 0.8, 23);
  const Vec3 x(1.2, -0.4, 0.9);
  const double cart = scalar_curvature(*g, x);
  CHECK(std::abs(cart) > 1e-4);
  for (RadialMap map : {RadialMap::Linear, RadialMap::Log}) {
    const ChartMetric m = chart_transform(g, Chart::spherical(map));
    const MetricJet<double> jet = m.jet(m.chart().from_cartesian(x));
    CHECK(scalar_curvature(jet) == doctest::Approx(cart).epsilon(1e-10));
  }
}

TEST_CASE("boundary mean curvature is chart invariant") {
  ConformalBubbleSpec spec{{{1.0, Vec3(0.0, 0.3, 1.0)}}, false};
  const auto g = make_conformal_superposition(spec);
  const Vec3 x(0.8, -0.3, 0.0);
  const double cart = boundary_mean_curvature(*g, x);
  for (RadialMap map : {RadialMap::Linear, RadialMap::Log}) {
    const ChartMetric m = chart_transform(g, Chart::spherical(map));
    const MetricJet<double> jet = m.jet(m.chart().from_cartesian(x));
    CHECK(boundary_mean_curvature(jet, frame(jet), 1, +1) == doctest::Approx(cart).epsilon(1e-11));
  }
}

TEST_CASE("laplacian of a scalar is chart invariant") {
  const auto g = make_perturbed_flat(0.2, 0.8, 5);
  const Vec3 x(0.7, 1.1, 0.5);
  ScalarJet<double> u;  // u = x1 x3 + x2^2
  u.value = x[0] * x[2] + x[1] * x[1];
  u.d = Vec3(x[2], 2 * x[1], x[0]);
  u.d2 << 0, 0, 1, 0, 2, 0, 1, 0, 0;
  const double cart = laplacian(frame(g->jet(x)), u);
  const Chart c = Chart::spherical(RadialMap::Log);
  const ChartMetric m = chart_transform(g, c);
  const Vec3 y = c.from_cartesian(x);
  const ScalarJet<double> uy = pullback(u, c.derivatives(y));
  CHECK(laplacian(frame(m.jet(y)), uy) == doctest::Approx(cart).epsilon(1e-11));
}
