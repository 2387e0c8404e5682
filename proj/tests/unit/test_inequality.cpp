#include <cmath>

#include "doctest.h"
#include "pmt/error.hpp"
#include "pmt/inequality.hpp"
#include "pmt/parallel.hpp"

using namespace pmt;

namespace {
DomainPtr flat_box(int n = 16, double a = 4.0) { return build_domain(*make_flat(), n, a); }

/// Exact harmonic coordinate of the truncated half-Schwarzschild problem (m = 1).
double exact_u(const Vec3& x, double r_out) {
  const double a = 0.5;
  const double c = r_out / (r_out - a + a * a / r_out);
  const double r = x.norm();
  return c * (r - a + a * a / r) * x.z() / r;
}
}  // namespace

TEST_CASE("flat space: both integrals vanish for u = x3") {
  const auto metric = make_flat();
  const auto u = DiscreteField::sample(flat_box(), [](const Vec3& x) { return x.z(); });
  const BulkIntegral b = bulk_integral(*metric, u);
  CHECK(std::abs(b.value) <= 1e-10);
  CHECK(b.regularized_fraction == 0.0);
  CHECK(std::abs(boundary_integral(*metric, u)) <= 1e-10);
  CHECK(normal_derivative_identity(*metric, u).max_defect == 0.0);
}

TEST_CASE("bulk integral of a quadratic on the flat box") {
  // u = x3 + x1 x3: |hess|^2 = 2, |grad u| = sqrt(x3^2 + (1 + x1)^2)
  const auto metric = make_flat();
  const auto u = DiscreteField::sample(flat_box(32, 0.5), [](const Vec3& x) { return x.z() + x.x() * x.z(); });
  const BulkIntegral b = bulk_integral(*metric, u);
  CHECK(b.curvature_part == 0.0);
  const double reference = 0.020651343330559808;
  CHECK(std::abs(b.value - reference) < 1e-3 * reference);
}

TEST_CASE("normal derivative identity on sampled fields") {
  const auto metric = make_flat();
  const auto d = flat_box();
  const auto good = DiscreteField::sample(d, [](const Vec3& x) { return x.z() + x.z() * x.x(); });
  const IdentityCheck ok = normal_derivative_identity(*metric, good);
  CHECK(ok.samples > 0);
  CHECK(ok.max_defect < 1e-12);
  // d_nu |grad u| = -2 on Sigma while H = 0
  const auto bad = DiscreteField::sample(d, [](const Vec3& x) { return x.z() + x.z() * x.z(); });
  CHECK(normal_derivative_identity(*metric, bad).max_defect == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("bulk integral of the exact half-schwarzschild coordinate") {
  const auto metric = make_half_schwarzschild(1.0);
  const double r_out = 50.0;
  const auto d = build_domain(*metric, 32, r_out);
  const auto exact = DiscreteField::sample(d, [&](const Vec3& x) { return exact_u(x, r_out); });
  const double reference = 0.37002958273901815;
  CHECK(std::abs(bulk_integral(*metric, exact).value - reference) < 0.02 * reference);
  const DiscreteField solved = solve_harmonic(*metric, d);
  CHECK(std::abs(bulk_integral(*metric, solved).value - reference) < 0.01 * reference);
  CHECK(std::abs(boundary_integral(*metric, solved)) < 1e-12);
}

TEST_CASE("integrals are independent of the worker count") {
  const auto metric = make_half_schwarzschild(1.0);
  const auto d = build_domain(*metric, 16, 20.0);
  const auto u = DiscreteField::sample(d, [&](const Vec3& x) { return exact_u(x, 20.0); });
  const int saved = worker_count();
  set_worker_count(1);
  const double one = bulk_integral(*metric, u).value;
  set_worker_count(3);
  const double three = bulk_integral(*metric, u).value;
  set_worker_count(saved);
  CHECK(one == three);
}

TEST_CASE("coarea routes agree for a linear field") {
  const auto metric = make_flat();
  const auto u = DiscreteField::sample(flat_box(), [](const Vec3& x) { return x.z(); });
  const CoareaReport r = coarea_check(*metric, u);
  REQUIRE(r.levels.size() == 5);
  // clip block |x1|, |x2| <= 2: every level set is a 4 x 4 square
  for (const CoareaLevel& l : r.levels) {
    CHECK(std::abs(l.isosurface - 16.0) < 1e-9);
    CHECK(std::abs(l.slab - 16.0) < 1e-9);
    CHECK(l.mismatch < 1e-10);
  }
  CHECK(r.slab_total == doctest::Approx(r.cell_sum).epsilon(1e-12));
  CHECK(r.cell_sum == doctest::Approx(4.0 * 4.0 * 4.0).epsilon(1e-12));
}

TEST_CASE("coarea mismatch shrinks under refinement") {
  const auto metric = make_half_schwarzschild(1.0);
  double previous = 1.0;
  for (int n : {16, 32}) {
    const auto d = build_domain(*metric, n, 50.0);
    const auto u = DiscreteField::sample(d, [](const Vec3& x) { return exact_u(x, 50.0); });
    const CoareaReport r = coarea_check(*metric, u);
    CHECK(std::abs(r.slab_total - r.cell_sum) <= 1e-10 * r.cell_sum);
    CHECK(r.worst_mismatch < previous);
    previous = r.worst_mismatch;
  }
  CHECK(previous < 0.05);
}

TEST_CASE("level sets of monotone fields are connected and reach the outer boundary") {
  const auto u = DiscreteField::sample(flat_box(), [](const Vec3& x) { return x.z(); });
  for (const LevelComponents& l : level_connectedness(u, {0.5, 1.0, 2.5})) {
    CHECK(l.components == 1);
    CHECK(l.touching == 1);
  }
  // a level exactly on a grid plane is nudged off it
  const auto levels = level_connectedness(u, {1.0});
  CHECK(levels[0].t != 1.0);
}

TEST_CASE("a closed level surface is a non-touching component") {
  const auto u = DiscreteField::sample(flat_box(32, 8.0), [](const Vec3& x) {
    return x.z() + 3.0 * std::exp(-(x - Vec3(0.0, 0.0, 2.0)).squaredNorm());
  });
  for (const LevelComponents& l : level_connectedness(u, {4.2, 4.8})) {
    CHECK(l.components == 2);
    CHECK(l.touching == 1);
  }
}

TEST_CASE("energy condition sampling") {
  const auto d = build_domain(*make_half_schwarzschild(1.0), 8, 20.0);
  const EnergySample s = sample_energy_conditions(*make_half_schwarzschild(1.0), *d, 1000);
  CHECK(s.satisfied);
  CHECK(s.samples > 1000);
  CHECK(s.min_scalar_curvature > -1e-8);

  const auto bumpy = make_perturbed_flat(0.3, 1.5, 7);
  const EnergySample v = sample_energy_conditions(*bumpy, *build_domain(*bumpy, 8, 20.0), 1000);
  CHECK_FALSE(v.satisfied);
  CHECK(v.min_scalar_curvature < 0.0);
}

TEST_CASE("flat space passes the full pipeline with equality") {
  InequalityOptions opt;
  opt.random_points = 1000;
  const InequalityReport r = check_inequality(*make_flat(), 16, 8.0, opt);
  CHECK(r.verdict == Verdict::Pass);
  CHECK(std::abs(r.mass.fit.mass) <= 1e-8);
  CHECK(std::abs(r.bulk.value) <= 1e-10);
  CHECK(std::abs(r.boundary) <= 1e-10);
  CHECK(r.slack == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(to_string(r.verdict) == "PASS");
}

TEST_CASE("energy-violating metrics are skipped") {
  InequalityOptions opt;
  opt.random_points = 1000;
  const InequalityReport r = check_inequality(*make_perturbed_flat(0.3, 1.5, 7), 8, 20.0, opt);
  CHECK(r.verdict == Verdict::Skipped);
  CHECK(to_string(r.verdict) == "SKIPPED-INEQUALITY");
}
