#include <cmath>

#include "doctest.h"
#include "pmt/error.hpp"
#include "pmt/metric_zoo.hpp"

using namespace pmt;

namespace {

// Central differences of the components and first partials against the
// analytic jet.
void check_jet_consistency(const MetricField& metric, const Vec3& x, double tol) {
  const double h = 1e-5;
  const MetricJet<double> j = metric.jet(x);
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = h;
    const MetricJet<double> jp = metric.jet(x + e);
    const MetricJet<double> jm = metric.jet(x - e);
    const Mat3 dg = (jp.g - jm.g) / (2 * h);
    CHECK((dg - j.dg[k]).cwiseAbs().maxCoeff() < tol);
    for (int l = 0; l < 3; ++l) {
      const Mat3 d2 = (jp.dg[l] - jm.dg[l]) / (2 * h);
      CHECK((d2 - j.d2g[k][l]).cwiseAbs().maxCoeff() < tol);
    }
  }
  CHECK((metric.eval(x) - j.g).cwiseAbs().maxCoeff() < 1e-14);
}

}  // namespace

TEST_CASE("half-schwarzschild components") {
  const auto g = make_half_schwarzschild(1.0);
  const Mat3 v = g->eval(Vec3(2.0, 0.0, 0.0));
  CHECK(v(0, 0) == doctest::Approx(2.44140625).epsilon(1e-15));
  CHECK(v(0, 1) == 0.0);
  CHECK(g->excisions().size() == 1);
  CHECK(g->excisions()[0].radius == 0.5);
  CHECK_FALSE(g->excisions()[0].approximate);
  CHECK(g->decay_rate() == 1.0);
  CHECK(g->mirror_symmetric());
  CHECK_FALSE(g->energy_conditions_unverified());
  CHECK(g->inside_excision(Vec3(0.1, 0.1, 0.1)));
  CHECK_FALSE(g->inside_excision(Vec3(0.6, 0.0, 0.0)));
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(make_half_schwarzschild(0.0), DomainError);
  CHECK_THROWS_AS(make_half_schwarzschild(-1.0), DomainError);
  CHECK_THROWS_AS(make_perturbed_flat(0.1, 0.4, 1), DomainError);
  CHECK_THROWS_AS(make_perturbed_flat(-20.0, 0.8, 1), DomainError);
  CHECK_THROWS_AS(make_rescaled(make_flat(), 0.0), DomainError);
  ConformalBubbleSpec below{{{1.0, Vec3(0, 0, -1)}}};
  CHECK_THROWS_AS(make_conformal_superposition(below), DomainError);
  ConformalBubbleSpec twice{{{1.0, Vec3(1, 0, 0)}, {0.5, Vec3(1, 0, 0)}}};
  CHECK_THROWS_AS(make_conformal_superposition(twice), DomainError);
  ConformalBubbleSpec massless{{{0.0, Vec3(1, 0, 0)}}};
  CHECK_THROWS_AS(make_conformal_superposition(massless), DomainError);
}

TEST_CASE("evaluation at a bubble center throws") {
  const auto g = make_half_schwarzschild(1.0);
  CHECK_THROWS_AS(g->jet(Vec3::Zero()), DomainError);
}

TEST_CASE("conformal superposition with no bubbles is flat") {
  const auto g = make_conformal_superposition({});
  CHECK(g->name() == "flat");
  CHECK((g->eval(Vec3(1, 2, 3)) - Mat3::Identity()).norm() == 0.0);
}

TEST_CASE("mirrored bubbles give a vanishing normal derivative on the boundary") {
  ConformalBubbleSpec spec{{{1.0, Vec3(1.5, 0.0, 1.0)}, {0.5, Vec3(-2.0, 0.5, 0.0)}}};
  const auto g = make_conformal_superposition(spec);
  CHECK(g->mirror_symmetric());
  const MetricJet<double> j = g->jet(Vec3(0.3, -0.8, 0.0));
  CHECK(j.dg[2].cwiseAbs().maxCoeff() < 1e-14);
  CHECK(g->excisions().size() == 2);
  CHECK(g->excisions()[0].approximate);

  spec.mirror = false;
  const auto h = make_conformal_superposition(spec);
  CHECK_FALSE(h->mirror_symmetric());
  CHECK(h->jet(Vec3(0.3, -0.8, 0.0)).dg[2].cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("analytic partials agree with finite differences") {
  check_jet_consistency(*make_half_schwarzschild(1.0), Vec3(1.3, -0.7, 0.4), 1e-7);
  ConformalBubbleSpec spec{{{1.0, Vec3(1.5, 0.0, 1.0)}, {0.5, Vec3(-2.0, 0.5, 0.0)}}};
  check_jet_consistency(*make_conformal_superposition(spec), Vec3(0.2, 0.9, 0.6), 1e-7);
  for (std::uint64_t seed : {1u, 7u, 42u}) {
    const auto p = make_perturbed_flat(0.1, 0.8, seed);
    check_jet_consistency(*p, Vec3(0.7, -1.1, 0.9), 1e-7);
    check_jet_consistency(*p, Vec3(-3.0, 2.0, 0.0), 1e-7);
  }
  check_jet_consistency(*make_perturbed_flat(0.05, 1.5, 3), Vec3(2.0, 1.0, 0.5), 1e-7);
  check_jet_consistency(*make_rescaled(make_half_schwarzschild(1.0), 2.5), Vec3(1.0, 2.0, 0.5), 1e-7);
}

TEST_CASE("perturbed metrics are deterministic in the seed") {
  const auto a = make_perturbed_flat(0.1, 0.8, 11);
  const auto b = make_perturbed_flat(0.1, 0.8, 11);
  const auto c = make_perturbed_flat(0.1, 0.8, 12);
  const Vec3 x(0.4, 0.5, 0.6);
  CHECK((a->eval(x) - b->eval(x)).norm() == 0.0);
  CHECK((a->eval(x) - c->eval(x)).norm() > 1e-6);
  CHECK(a->energy_conditions_unverified());
  CHECK((make_perturbed_flat(0.0, 0.8, 11)->eval(x) - Mat3::Identity()).norm() == 0.0);
}

TEST_CASE("rescaling is a homothety in pulled-back coordinates") {
  const auto base = make_half_schwarzschild(1.0);
  const double lambda = 3.0;
  const auto g = make_rescaled(base, lambda);
  const Vec3 y(2.0, 1.0, 0.7);
  CHECK((g->eval(y) - base->eval(y / lambda)).norm() < 1e-15);
  CHECK(g->excisions()[0].radius == doctest::Approx(1.5));
}

TEST_CASE("mirror doubling reflects components and partials") {
  const auto base = make_perturbed_flat(0.1, 0.8, 5);
  CHECK_THROWS_AS(make_mirror_double(base), DomainError);
  ConformalBubbleSpec spec{{{1.0, Vec3(1.0, 0.0, 0.8)}}};
  const auto c = make_conformal_superposition(spec);
  const auto d = make_mirror_double(c);
  const Vec3 x(0.3, 0.2, -0.5);
  // Conformal sources already contain their images, so the doubled metric
  // must coincide with the closed form below the plane.
  const MetricJet<double> a = d->jet(x);
  const MetricJet<double> b = c->jet(x);
  CHECK((a.g - b.g).norm() < 1e-14);
  for (int k = 0; k < 3; ++k) CHECK((a.dg[k] - b.dg[k]).norm() < 1e-13);
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) CHECK((a.d2g[k][l] - b.d2g[k][l]).norm() < 1e-12);
}

TEST_CASE("decay sampling") {
  const DecayBound flat = sample_decay(*make_flat(), 20, 1);
  CHECK(flat.max() == 0.0);
  const DecayBound hs = sample_decay(*make_half_schwarzschild(1.0), 50, 1);
  // |phi^4 - 1| r -> 2m, |d(phi^4)| r^2 -> 2m, second partials bounded.
  CHECK(hs.value < 3.0);
  CHECK(hs.value > 1.9);
  CHECK(hs.first < 4.5);
  CHECK(hs.second < 12.0);
  const DecayBound near = sample_decay(*make_perturbed_flat(0.1, 0.8, 9), 50, 2, 2.0, 1e2);
  const DecayBound far = sample_decay(*make_perturbed_flat(0.1, 0.8, 9), 50, 2, 1e2, 1e4);
  CHECK(std::isfinite(near.max()));
  CHECK(far.max() < 2.0 * near.max());
}
