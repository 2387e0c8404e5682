#include "pmt/metric_zoo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "pmt/error.hpp"

namespace pmt {

std::string format_point(const Vec3& x) {
  std::ostringstream out;
  out.precision(17);
  out << "(" << x.x() << ", " << x.y() << ", " << x.z() << ")";
  return out.str();
}

bool MetricField::inside_excision(const Vec3& x) const {
  return std::any_of(excisions_.begin(), excisions_.end(),
                     [&](const Excision& e) { return e.contains(x); });
}

double DecayBound::max() const { return std::max({value, first, second}); }

namespace {

// splitmix64; portable, so seeded metrics agree across standard libraries.
class SeededStream {
 public:
  explicit SeededStream(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform(double lo, double hi) {
    const double unit = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
  }

 private:
  std::uint64_t state_;
};

// P(x) = (offset + |x - center|^2)^power with partials through third order.
struct PowerProfile {
  Vec3 center = Vec3::Zero();
  double offset = 1.0;
  double power = -0.5;

  struct Jet {
    double value;
    Vec3 d;
    Mat3 d2;
    std::array<Mat3, 3> d3;  // d3[k](i, j) = d_k d_i d_j P
  };

  Jet evaluate(const Vec3& x) const {
    const Vec3 r = x - center;
    const double q = offset + r.squaredNorm();
    const double b = power;
    const double p0 = std::pow(q, b);
    const double p1 = p0 / q;       // q^(b-1)
    const double p2 = p1 / q;       // q^(b-2)
    const double p3 = p2 / q;       // q^(b-3)
    Jet out;
    out.value = p0;
    out.d = 2.0 * b * p1 * r;
    out.d2 = 2.0 * b * (p1 * Mat3::Identity() + 2.0 * (b - 1.0) * p2 * r * r.transpose());
    for (int k = 0; k < 3; ++k) {
      Mat3 t;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const double sym = r[k] * (i == j) + r[i] * (j == k) + r[j] * (i == k);
          t(i, j) = 2.0 * b *
                    (2.0 * (b - 1.0) * p2 * sym + 4.0 * (b - 1.0) * (b - 2.0) * p3 * r[i] * r[j] * r[k]);
        }
      }
      out.d3[k] = t;
    }
    return out;
  }
};

class FlatMetric final : public MetricField {
 public:
  FlatMetric() : MetricField("flat", kInfiniteDecay, true, {}) {}
  MetricJet<double> jet(const Vec3&) const override { return {}; }
  Mat3 eval(const Vec3&) const override { return Mat3::Identity(); }
  std::optional<ScalarJet<double>> conformal_factor(const Vec3&) const override {
    ScalarJet<double> phi;
    phi.value = 1.0;
    return phi;
  }
  bool conformally_flat() const override { return true; }
};

class ConformalMetric final : public MetricField {
 public:
  ConformalMetric(std::string name, std::vector<Bubble> sources, bool mirror,
                  std::vector<Excision> excisions)
      : MetricField(std::move(name), sources.empty() ? kInfiniteDecay : 1.0, mirror,
                    std::move(excisions)),
        sources_(std::move(sources)) {}

  std::optional<ScalarJet<double>> conformal_factor(const Vec3& x) const override {
    return phi(x);
  }
  bool conformally_flat() const override { return true; }

  Mat3 eval(const Vec3& x) const override {
    const double p = phi_value(x);
    return std::pow(p, 4) * Mat3::Identity();
  }

  MetricJet<double> jet(const Vec3& x) const override {
    const ScalarJet<double> f = phi(x);
    const double p = f.value;
    MetricJet<double> out;
    out.g = std::pow(p, 4) * Mat3::Identity();
    for (int k = 0; k < 3; ++k) {
      out.dg[k] = 4.0 * p * p * p * f.d[k] * Mat3::Identity();
      for (int l = 0; l < 3; ++l) {
        out.d2g[k][l] = (12.0 * p * p * f.d[k] * f.d[l] + 4.0 * p * p * p * f.d2(k, l)) *
                        Mat3::Identity();
      }
    }
    return out;
  }

 private:
  double distance_to(const Bubble& b, const Vec3& x) const {
    const double rho = (x - b.center).norm();
    if (rho == 0.0) {
      throw DomainError(name() + ": evaluation at a bubble center " + format_point(x));
    }
    return rho;
  }

  double phi_value(const Vec3& x) const {
    double p = 1.0;
    for (const Bubble& b : sources_) p += 0.5 * b.mass / distance_to(b, x);
    return p;
  }

  ScalarJet<double> phi(const Vec3& x) const {
    ScalarJet<double> f;
    f.value = 1.0;
    for (const Bubble& b : sources_) {
      const Vec3 r = x - b.center;
      const double rho = distance_to(b, x);
      const double c = 0.5 * b.mass;
      const double inv = 1.0 / rho;
      const double inv3 = inv * inv * inv;
      f.value += c * inv;
      f.d -= c * inv3 * r;
      f.d2 += c * (3.0 * inv3 * inv * inv * r * r.transpose() - inv3 * Mat3::Identity());
    }
    return f;
  }

  std::vector<Bubble> sources_;
};

// g = delta + a [ kappa P delta + sum_modes (d_i X_j + d_j X_i) ], with
// X_alpha = c_alpha w, X_3 = c_3 x3 s, w ~ r^(1-tau), s ~ r^-tau. The
// vector-field part is a linearized boundary-preserving diffeomorphism
// (X_3 = 0 on x3 = 0) and carries no mass at linear order; the kappa part
// carries mass kappa * a / 4.
class PerturbedFlatMetric final : public MetricField {
 public:
  struct Mode {
    Vec3 c;
    PowerProfile w;
    PowerProfile s;
  };

  PerturbedFlatMetric(double amplitude, double tau, std::uint64_t seed)
      : MetricField("perturbed-flat", tau, false, {}, true), amplitude_(amplitude) {
    SeededStream rng(seed);
    kappa_ = rng.uniform(0.5, 1.0);
    mass_profile_.center = Vec3(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), -rng.uniform(0.5, 1.5));
    mass_profile_.offset = 1.0;
    mass_profile_.power = -0.5 * std::max(tau, 1.0);
    for (int m = 0; m < 2; ++m) {
      Mode mode;
      mode.c = Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
      const Vec3 q(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
      mode.w = PowerProfile{q, 1.0, 0.5 * (1.0 - tau)};
      mode.s = PowerProfile{q, 1.0, -0.5 * tau};
      modes_.push_back(mode);
    }
  }

  MetricJet<double> jet(const Vec3& x) const override {
    MetricJet<double> out;
    if (amplitude_ == 0.0) return out;

    const PowerProfile::Jet p = mass_profile_.evaluate(x);
    Mat3 h = kappa_ * p.value * Mat3::Identity();
    std::array<Mat3, 3> dh;
    std::array<std::array<Mat3, 3>, 3> d2h;
    for (int k = 0; k < 3; ++k) {
      dh[k] = kappa_ * p.d[k] * Mat3::Identity();
      for (int l = 0; l < 3; ++l) d2h[k][l] = kappa_ * p.d2(k, l) * Mat3::Identity();
    }

    for (const Mode& mode : modes_) {
      const PowerProfile::Jet w = mode.w.evaluate(x);
      const PowerProfile::Jet s = mode.s.evaluate(x);
      const double x3 = x.z();
      auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
      // D(i, j) = d_i X_j and its partials.
      Mat3 d;
      std::array<Mat3, 3> dd;
      std::array<std::array<Mat3, 3>, 3> ddd;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 2; ++j) d(i, j) = mode.c[j] * w.d[i];
        d(i, 2) = mode.c[2] * (delta(i, 2) * s.value + x3 * s.d[i]);
      }
      for (int k = 0; k < 3; ++k) {
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 2; ++j) dd[k](i, j) = mode.c[j] * w.d2(k, i);
          dd[k](i, 2) = mode.c[2] * (delta(i, 2) * s.d[k] + delta(k, 2) * s.d[i] + x3 * s.d2(k, i));
        }
        for (int l = 0; l < 3; ++l) {
          for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 2; ++j) ddd[k][l](i, j) = mode.c[j] * w.d3[l](k, i);
            ddd[k][l](i, 2) = mode.c[2] * (delta(i, 2) * s.d2(k, l) + delta(k, 2) * s.d2(i, l) +
                                           delta(l, 2) * s.d2(i, k) + x3 * s.d3[l](k, i));
          }
        }
      }
      h += d + d.transpose();
      for (int k = 0; k < 3; ++k) {
        dh[k] += dd[k] + dd[k].transpose();
        for (int l = 0; l < 3; ++l) d2h[k][l] += ddd[k][l] + ddd[k][l].transpose();
      }
    }

    out.g += amplitude_ * h;
    for (int k = 0; k < 3; ++k) {
      out.dg[k] = amplitude_ * dh[k];
      for (int l = 0; l < 3; ++l) out.d2g[k][l] = amplitude_ * d2h[k][l];
    }
    return out;
  }

  void check_positivity() const {
    for (double x1 = -60.0; x1 <= 60.0; x1 += 4.0) {
      for (double x2 = -60.0; x2 <= 60.0; x2 += 4.0) {
        for (double x3 = 0.0; x3 <= 60.0; x3 += 2.0) {
          const Vec3 x(x1, x2, x3);
          const Eigen::SelfAdjointEigenSolver<Mat3> eig(eval(x), Eigen::EigenvaluesOnly);
          if (!(eig.eigenvalues().minCoeff() > 0.0)) {
            throw DomainError("perturbed-flat: metric not positive definite at " + format_point(x) +
                              "; reduce the amplitude");
          }
        }
      }
    }
  }

 private:
  double amplitude_;
  double kappa_ = 0.0;
  PowerProfile mass_profile_;
  std::vector<Mode> modes_;
};

class RescaledMetric final : public MetricField {
 public:
  RescaledMetric(MetricPtr base, double lambda, std::vector<Excision> excisions)
      : MetricField(base->name() + "*" + std::to_string(lambda), base->decay_rate(),
                    base->mirror_symmetric(), std::move(excisions),
                    base->energy_conditions_unverified()),
        base_(std::move(base)),
        lambda_(lambda) {}

  MetricJet<double> jet(const Vec3& y) const override {
    MetricJet<double> out = base_->jet(y / lambda_);
    const double s1 = 1.0 / lambda_;
    const double s2 = s1 * s1;
    for (int k = 0; k < 3; ++k) {
      out.dg[k] *= s1;
      for (int l = 0; l < 3; ++l) out.d2g[k][l] *= s2;
    }
    return out;
  }
  Mat3 eval(const Vec3& y) const override { return base_->eval(y / lambda_); }

  std::optional<ScalarJet<double>> conformal_factor(const Vec3& y) const override {
    auto f = base_->conformal_factor(y / lambda_);
    if (f) {
      f->d /= lambda_;
      f->d2 /= lambda_ * lambda_;
    }
    return f;
  }
  bool conformally_flat() const override { return base_->conformally_flat(); }

 private:
  MetricPtr base_;
  double lambda_;
};

class MirrorDoubledMetric final : public MetricField {
 public:
  explicit MirrorDoubledMetric(MetricPtr base)
      : MetricField(base->name() + "+mirror", base->decay_rate(), true, base->excisions(),
                    base->energy_conditions_unverified()),
        base_(std::move(base)) {}

  MetricJet<double> jet(const Vec3& x) const override { return mirror_extended_jet(*base_, x); }

 private:
  MetricPtr base_;
};

double max_abs(const Mat3& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

MetricPtr make_flat() { return std::make_shared<FlatMetric>(); }

MetricPtr make_half_schwarzschild(double m) {
  if (!(m > 0.0) || !std::isfinite(m)) {
    throw DomainError("half-schwarzschild: mass parameter must be positive, got " + std::to_string(m));
  }
  return std::make_shared<ConformalMetric>("half-schwarzschild", std::vector<Bubble>{{m, Vec3::Zero()}},
                                           true, std::vector<Excision>{{Vec3::Zero(), 0.5 * m, false}});
}

MetricPtr make_conformal_superposition(const ConformalBubbleSpec& spec) {
  std::vector<Bubble> sources;
  std::vector<Excision> excisions;
  bool mirror_symmetric = true;
  const bool single = spec.bubbles.size() == 1;
  for (const Bubble& b : spec.bubbles) {
    if (!(b.mass > 0.0) || !std::isfinite(b.mass)) {
      throw DomainError("conformal: bubble masses must be positive");
    }
    if (b.center.z() < 0.0) {
      throw DomainError("conformal: bubble center below the boundary plane " + format_point(b.center));
    }
    sources.push_back(b);
    const bool on_boundary = b.center.z() == 0.0;
    if (!on_boundary) {
      if (spec.mirror) {
        sources.push_back({b.mass, Vec3(b.center.x(), b.center.y(), -b.center.z())});
      } else {
        mirror_symmetric = false;
      }
    }
    excisions.push_back({b.center, 0.5 * b.mass, !(single && on_boundary)});
  }
  for (std::size_t i = 0; i < sources.size(); ++i) {
    for (std::size_t j = i + 1; j < sources.size(); ++j) {
      if ((sources[i].center - sources[j].center).norm() == 0.0) {
        throw DomainError("conformal: coincident bubble centers at " + format_point(sources[i].center));
      }
    }
  }
  std::string name = spec.bubbles.empty() ? "flat" : "conformal";
  return std::make_shared<ConformalMetric>(name, std::move(sources), mirror_symmetric, std::move(excisions));
}

MetricPtr make_perturbed_flat(double amplitude, double tau, std::uint64_t seed) {
  if (!(tau > 0.5) || !std::isfinite(tau)) {
    throw DomainError("perturbed-flat: decay rate must exceed 1/2, got " + std::to_string(tau));
  }
  if (!std::isfinite(amplitude)) throw DomainError("perturbed-flat: amplitude must be finite");
  auto metric = std::make_shared<PerturbedFlatMetric>(amplitude, tau, seed);
  metric->check_positivity();
  return metric;
}

MetricPtr make_rescaled(MetricPtr base, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw DomainError("rescale: factor must be positive");
  }
  std::vector<Excision> excisions = base->excisions();
  for (Excision& e : excisions) {
    e.center *= lambda;
    e.radius *= lambda;
  }
  return std::make_shared<RescaledMetric>(std::move(base), lambda, std::move(excisions));
}

MetricJet<double> mirror_extended_jet(const MetricField& metric, const Vec3& x) {
  if (x.z() >= 0.0) return metric.jet(x);
  if (!metric.mirror_symmetric()) {
    throw DomainError(metric.name() + ": no mirror extension below x3 = 0");
  }
  const Vec3 reflected(x.x(), x.y(), -x.z());
  const MetricJet<double> src = metric.jet(reflected);
  const Eigen::DiagonalMatrix<double, 3> flip(1.0, 1.0, -1.0);
  const double sign[3] = {1.0, 1.0, -1.0};
  MetricJet<double> out;
  out.g = flip * src.g * flip;
  for (int k = 0; k < 3; ++k) {
    out.dg[k] = sign[k] * (flip * src.dg[k] * flip);
    for (int l = 0; l < 3; ++l) out.d2g[k][l] = sign[k] * sign[l] * (flip * src.d2g[k][l] * flip);
  }
  return out;
}

MetricPtr make_mirror_double(MetricPtr base) {
  if (!base->mirror_symmetric()) {
    throw DomainError(base->name() + ": doubling across x3 = 0 needs a mirror-symmetric metric");
  }
  return std::make_shared<MirrorDoubledMetric>(std::move(base));
}

DecayBound sample_decay(const MetricField& metric, int rays, std::uint64_t seed, double r_min,
                        double r_max, int samples_per_ray) {
  SeededStream rng(seed);
  const double tau = std::isfinite(metric.decay_rate()) ? metric.decay_rate() : 0.0;
  DecayBound bound;
  for (int ray = 0; ray < rays; ++ray) {
    // Uniform direction on the upper hemisphere.
    const double cos_theta = rng.uniform(0.0, 1.0);
    const double azimuth = rng.uniform(0.0, 2.0 * M_PI);
    const double sin_theta = std::sqrt(1.0 - cos_theta * cos_theta);
    const Vec3 dir(sin_theta * std::cos(azimuth), sin_theta * std::sin(azimuth), cos_theta);
    for (int s = 0; s < samples_per_ray; ++s) {
      const double r = r_min * std::pow(r_max / r_min, static_cast<double>(s) / (samples_per_ray - 1));
      const Vec3 x = r * dir;
      if (metric.inside_excision(x)) continue;
      const MetricJet<double> j = metric.jet(x);
      double first = 0.0;
      double second = 0.0;
      for (int k = 0; k < 3; ++k) {
        first = std::max(first, max_abs(j.dg[k]));
        for (int l = 0; l < 3; ++l) second = std::max(second, max_abs(j.d2g[k][l]));
      }
      const double weight = std::pow(r, tau);
      bound.value = std::max(bound.value, max_abs(j.g - Mat3::Identity()) * weight);
      bound.first = std::max(bound.first, first * r * weight);
      bound.second = std::max(bound.second, second * r * r * weight);
    }
  }
  return bound;
}

}  // namespace pmt
