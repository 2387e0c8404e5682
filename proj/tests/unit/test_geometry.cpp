#include <cmath>
#include <random>

#include "doctest.h"
#include "pmt/error.hpp"
#include "pmt/geometry.hpp"

using namespace pmt;

namespace {

// g = phi^4 delta with phi = 1 + eps |x|^2, for which R = -8 phi^-5 lap(phi) = -48 eps phi^-5.
MetricJet<double> quadratic_conformal_jet(const Vec3& x, double eps) {
  const double p = 1.0 + eps * x.squaredNorm();
  const Vec3 dp = 2.0 * eps * x;
  const Mat3 d2p = 2.0 * eps * Mat3::Identity();
  MetricJet<double> j;
  j.g = std::pow(p, 4) * Mat3::Identity();
  for (int k = 0; k < 3; ++k) {
    j.dg[k] = 4.0 * p * p * p * dp[k] * Mat3::Identity();
    for (int l = 0; l < 3; ++l) {
      j.d2g[k][l] = (12.0 * p * p * dp[k] * dp[l] + 4.0 * p * p * p * d2p(k, l)) * Mat3::Identity();
    }
  }
  return j;
}

ScalarJet<double> random_scalar_jet(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ScalarJet<double> s;
  s.value = u(rng);
  for (int i = 0; i < 3; ++i) s.d[i] = u(rng);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) s.d2(i, j) = s.d2(j, i) = u(rng);
  return s;
}

}  // namespace

TEST_CASE("christoffel symbols of half-schwarzschild") {
  const auto g = make_half_schwarzschild(1.0);
  const PointFrame<double> a = frame(*g, Vec3(2.0, 0.0, 0.0));
  CHECK(a.gamma(0, 0, 0) == doctest::Approx(-0.2).epsilon(1e-14));
  const PointFrame<double> b = frame(*g, Vec3(1.3, -0.7, 0.4));
  CHECK(b.gamma(0, 2, 2) == doctest::Approx(0.2737123482397223).epsilon(1e-13));
  CHECK(std::abs(b.gamma(2, 0, 1)) < 1e-15);
  CHECK(a.sqrt_det == doctest::Approx(std::pow(1.25, 6)).epsilon(1e-14));
}

TEST_CASE("scalar curvature vanishes for harmonic conformal factors") {
  const auto hs = make_half_schwarzschild(1.0);
  for (const Vec3& x : {Vec3(1.3, -0.7, 0.4), Vec3(0.6, 0.0, 0.0), Vec3(5.0, 2.0, 3.0)}) {
    CHECK(std::abs(scalar_curvature(*hs, x)) < 1e-12);
  }
  ConformalBubbleSpec spec{{{1.0, Vec3(1.5, 0.0, 1.0)}, {0.5, Vec3(-2.0, 0.5, 0.0)}}};
  const auto two = make_conformal_superposition(spec);
  CHECK(std::abs(scalar_curvature(*two, Vec3(0.1, 0.2, 0.3))) < 1e-11);
}

TEST_CASE("scalar curvature of a non-harmonic conformal factor") {
  const double eps = 0.07;
  for (const Vec3& x : {Vec3(0.0, 0.0, 0.0), Vec3(0.5, -1.0, 2.0)}) {
    const double p = 1.0 + eps * x.squaredNorm();
    CHECK(scalar_curvature(quadratic_conformal_jet(x, eps)) ==
          doctest::Approx(-48.0 * eps / std::pow(p, 5)).epsilon(1e-12));
  }
}

TEST_CASE("boundary mean curvature") {
  CHECK(std::abs(boundary_mean_curvature(*make_half_schwarzschild(1.0), Vec3(1.0, 2.0, 0.0))) < 1e-15);
  // Unmirrored bubble above the plane: H = -4 phi^-3 d3 phi.
  ConformalBubbleSpec spec{{{1.0, Vec3(0.0, 0.0, 1.0)}}, false};
  const auto g = make_conformal_superposition(spec);
  const Vec3 x(0.8, -0.3, 0.0);
  const auto phi = g->conformal_factor(x);
  REQUIRE(phi);
  const double expected = -4.0 * phi->d[2] / std::pow(phi->value, 3);
  CHECK(boundary_mean_curvature(*g, x) == doctest::Approx(expected).epsilon(1e-13));
  CHECK(expected < 0.0);
  CHECK_THROWS_AS(boundary_mean_curvature(*g, Vec3(0.8, -0.3, 0.1)), DomainError);
}

TEST_CASE("excised points are rejected") {
  const auto g = make_half_schwarzschild(2.0);
  CHECK_THROWS_AS(frame(*g, Vec3(0.2, 0.2, 0.2)), DomainError);
  CHECK_THROWS_AS(scalar_curvature(*g, Vec3(0.5, 0.0, 0.1)), DomainError);
}

TEST_CASE("non-positive metrics are reported") {
  MetricJet<double> j;
  j.g(2, 2) = -1.0;
  CHECK_THROWS_AS(frame(j), NumericalError);
}

TEST_CASE("laplacian: trace of the hessian equals the divergence form") {
  std::mt19937_64 rng(3);
  const auto g = make_perturbed_flat(0.2, 0.8, 17);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 x(0.3 * trial - 3.0, 1.0 - 0.1 * trial, 0.05 * trial);
    const MetricJet<double> jet = g->jet(x);
    const PointFrame<double> f = frame(jet);
    const ScalarJet<double> u = random_scalar_jet(rng);
    CHECK(laplacian(f, u) == doctest::Approx(laplacian_divergence_form(jet, f, u)).epsilon(1e-12));
    const Hessian<double> h = hessian(f, u);
    CHECK((h.matrix - h.matrix.transpose()).norm() == 0.0);
    CHECK(h.norm_squared >= 0.0);
  }
}

TEST_CASE("gradient norm uses the inverse metric") {
  const auto g = make_half_schwarzschild(1.0);
  const PointFrame<double> f = frame(*g, Vec3(1.0, 0.0, 0.0));
  ScalarJet<double> u;
  u.d = Vec3(0.0, 0.0, 1.0);
  // g = phi^4 delta with phi = 1.5 at r = 1.
  CHECK(gradient(f, u).norm == doctest::Approx(1.0 / (1.5 * 1.5)).epsilon(1e-14));
}

TEST_CASE("analytic partials refine at second order against finite differences") {
  const DerivativeCheck hs = check_derivatives(*make_half_schwarzschild(1.0), 200, 5);
  CHECK(hs.points == 200);
  CHECK(hs.measured == 200);
  CHECK(hs.min_order > 1.9);
  CHECK(hs.max_trace_defect < 1e-12);
  const DerivativeCheck flat = check_derivatives(*make_flat(), 50, 5);
  CHECK(flat.measured == 0);
  CHECK(flat.max_error == 0.0);
  CHECK(std::isnan(flat.min_order));
  CHECK_THROWS_AS(check_derivatives(*make_flat(), 0, 5), DomainError);
}
