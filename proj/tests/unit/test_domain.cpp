#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pmt/domain.hpp"
#include "pmt/error.hpp"
#include "pmt/inequality.hpp"

using namespace pmt;

namespace {
MetricPtr two_bubbles() {
  ConformalBubbleSpec spec;
  spec.bubbles = {{2.0, Vec3(-2.0, 0.0, 0.0)}, {2.0, Vec3(2.0, 0.0, 0.0)}};
  return make_conformal_superposition(spec);
}
}  // namespace

TEST_CASE("flat half-box tags") {
  const auto d = build_domain(*make_flat(), 8, 4.0);
  CHECK(d->chart().kind() == ChartKind::Cartesian);
  CHECK(d->node_count() == 9 * 9 * 5);
  CHECK(d->count(NodeTag::Sigma) == 81);
  CHECK(d->count(NodeTag::Outer) == 81 + 3 * (81 - 49));
  CHECK(d->count(NodeTag::Interior) == 7 * 7 * 3);
  CHECK(d->unknown_count() == 7 * 7 * 3);
  CHECK(d->axis(0).spacing == doctest::Approx(1.0));
  CHECK_FALSE(d->cut_cells());
  CHECK(d->cartesian_point(d->index(0, 8, 4)).isApprox(Vec3(-4.0, 4.0, 4.0)));
}

TEST_CASE("half-shell around the horizon") {
  const auto d = build_domain(*make_half_schwarzschild(1.0), 8, 50.0);
  CHECK(d->chart().kind() == ChartKind::Spherical);
  CHECK(d->axis(0).nodes == 9);
  CHECK(d->axis(1).nodes == 7);
  CHECK(d->axis(2).nodes == 12);
  CHECK(d->axis(2).periodic);
  CHECK(d->axis(0).start == doctest::Approx(std::log(0.5)));
  CHECK(d->count(NodeTag::Interior) == 7 * 5 * 12);
  CHECK(d->count(NodeTag::Outer) == 6 * 12);
  CHECK(d->count(NodeTag::Sigma) == 9 * 12);
  const Vec3 x = d->cartesian_point(d->index(8, 6, 3));
  CHECK(x.norm() == doctest::Approx(50.0));
  CHECK(std::abs(x.z()) < 1e-12);
}

TEST_CASE("boundary distance grows inward") {
  const auto d = build_domain(*make_flat(), 8, 4.0);
  CHECK(d->boundary_distance(d->index(0, 0, 0)) == 0);
  CHECK(d->boundary_distance(d->index(4, 4, 1)) == 1);
  CHECK(d->boundary_distance(d->index(4, 4, 2)) == 2);
}

TEST_CASE("invalid domains are rejected") {
  CHECK_THROWS_AS(build_domain(*make_flat(), 4, 4.0), DomainError);
  CHECK_THROWS_AS(build_domain(*make_flat(), 8, -1.0), DomainError);
  DomainOptions box;
  box.chart = ChartChoice::Cartesian;
  CHECK_THROWS_AS(build_domain(*make_half_schwarzschild(1.0), 16, 8.0, box), DomainError);
  CHECK_THROWS_AS(build_domain(*two_bubbles(), 8, 64.0), DomainError);
}

TEST_CASE("stretched box chart") {
  const auto d = build_domain(*two_bubbles(), 32, 64.0);
  REQUIRE(d->chart().stretch() > 0.0);
  CHECK(d->chart().stretch() == doctest::Approx(3.0));
  const Vec3 far = d->cartesian_point(d->index(32, 32, 16));
  CHECK(far.x() == doctest::Approx(64.0));
  CHECK(far.z() == doctest::Approx(64.0));
  const Vec3 y(0.3, -1.7, 2.2);
  const Chart& c = d->chart();
  CHECK((c.from_cartesian(c.to_cartesian(y)) - y).norm() < 1e-13);
  const double h = 1e-6;
  const Mat3 j = c.jacobian(y);
  for (int a = 0; a < 3; ++a) {
    const Vec3 e = Vec3::Unit(a) * h;
    const Vec3 fd = (c.to_cartesian(y + e) - c.to_cartesian(y - e)) / (2 * h);
    CHECK((j.col(a) - fd).norm() < 1e-8);
  }
}

TEST_CASE("cut cells measure the excised volume") {
  DomainOptions uniform;
  uniform.stretch = 0.0;
  const auto metric = two_bubbles();
  const auto d = build_domain(*metric, 32, 8.0, uniform);
  REQUIRE(d->cut_cells());
  double volume = 0.0;
  for (int i = 0; i < d->axis(0).cells(); ++i)
    for (int j = 0; j < d->axis(1).cells(); ++j)
      for (int k = 0; k < d->axis(2).cells(); ++k) {
        if (!d->cell_active(i, j, k)) continue;
        for (int o = 0; o < 8; ++o) volume += d->octant_fraction(d->cell_index(i, j, k), o) * d->cell_volume() / 8;
      }
  double excised = 0.0;
  for (const Excision& e : metric->excisions()) excised += 2.0 / 3.0 * std::numbers::pi * std::pow(e.radius, 3);
  CHECK(volume == doctest::Approx(16.0 * 16.0 * 8.0 - excised).epsilon(1e-3));

  std::size_t ghosts = 0;
  for (std::size_t n = 0; n < d->node_count(); ++n) {
    if (!d->ghost(n)) continue;
    ++ghosts;
    CHECK(d->tag(n) == NodeTag::Horizon);
    CHECK(metric->inside_excision(d->cartesian_point(n)));
  }
  CHECK(ghosts > 0);
}

TEST_CASE("finite-difference jets are exact for quadratics") {
  const auto d = build_domain(*make_flat(), 8, 4.0);
  const auto u = DiscreteField::sample(d, [](const Vec3& x) { return x.x() * x.x() + x.y() * x.z() - 3 * x.z(); });
  for (std::size_t n : {d->index(0, 0, 0), d->index(4, 3, 2), d->index(8, 8, 4)}) {
    const Vec3 x = d->cartesian_point(n);
    const ScalarJet<double> jet = u.jet(n);
    CHECK((jet.d - Vec3(2 * x.x(), x.z(), x.y() - 3)).norm() < 1e-12);
    Mat3 hess;
    hess << 2, 0, 0, 0, 0, 1, 0, 1, 0;
    CHECK((jet.d2 - hess).norm() < 1e-11);
    CHECK((u.derivative(n) - jet.d).norm() < 1e-12);
  }
}

TEST_CASE("nodal weights sum to the domain volume") {
  const auto d = build_domain(*make_flat(), 8, 4.0);
  double total = 0.0;
  for (double w : nodal_weights(*d)) total += w;
  CHECK(total == doctest::Approx(8.0 * 8.0 * 4.0));
}
