#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pmt/tensor.hpp"

namespace pmt {

/// A horizon removed from the computational domain: a coordinate ball
/// (a half-ball when the center lies on the boundary plane x3 = 0).
struct Excision {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  /// True when the coordinate sphere only approximates the minimal surface.
  bool approximate = false;

  bool on_boundary() const { return center.z() == 0.0; }
  bool contains(const Vec3& x) const { return (x - center).norm() < radius; }
};

/// Closed-form Riemannian metric on the half-space {x3 >= 0} with exact first
/// and second partials.
///
/// Evaluation is pure and reentrant. Implementations throw `DomainError` at
/// points where the closed form is singular.
class MetricField {
 public:
  virtual ~MetricField() = default;

  /// Components and partials at a Cartesian point.
  virtual MetricJet<double> jet(const Vec3& x) const = 0;

  /// Components only; cheaper than `jet` for most families.
  virtual Mat3 eval(const Vec3& x) const { return jet(x).g; }

  Mat3 eval_partial(const Vec3& x, int k) const { return jet(x).dg.at(k); }
  Mat3 eval_partial2(const Vec3& x, int k, int l) const { return jet(x).d2g.at(k).at(l); }

  /// Conformal factor phi with g = phi^4 delta, if the family has one.
  virtual std::optional<ScalarJet<double>> conformal_factor(const Vec3&) const {
    return std::nullopt;
  }
  virtual bool conformally_flat() const { return false; }

  const std::string& name() const { return name_; }
  /// Decay exponent tau; +infinity for the flat metric.
  double decay_rate() const { return decay_rate_; }
  bool mirror_symmetric() const { return mirror_symmetric_; }
  /// Perturbed families make no promise about R_g >= 0, H_g >= 0.
  bool energy_conditions_unverified() const { return energy_conditions_unverified_; }
  const std::vector<Excision>& excisions() const { return excisions_; }
  bool inside_excision(const Vec3& x) const;

 protected:
  MetricField(std::string name, double decay_rate, bool mirror_symmetric,
              std::vector<Excision> excisions, bool energy_conditions_unverified = false)
      : name_(std::move(name)),
        decay_rate_(decay_rate),
        mirror_symmetric_(mirror_symmetric),
        energy_conditions_unverified_(energy_conditions_unverified),
        excisions_(std::move(excisions)) {}

 private:
  std::string name_;
  double decay_rate_;
  bool mirror_symmetric_;
  bool energy_conditions_unverified_;
  std::vector<Excision> excisions_;
};

using MetricPtr = std::shared_ptr<const MetricField>;

inline constexpr double kInfiniteDecay = std::numeric_limits<double>::infinity();

struct Bubble {
  double mass = 0.0;
  Vec3 center = Vec3::Zero();
};

/// phi = 1 + sum_i m_i / (2 |x - p_i|), optionally with every off-boundary
/// center mirrored across x3 = 0 so that d3 phi vanishes on the boundary.
struct ConformalBubbleSpec {
  std::vector<Bubble> bubbles;
  bool mirror = true;
};

/// Euclidean half-space.
MetricPtr make_flat();

/// phi^4 delta with phi = 1 + m / (2r); horizon is the coordinate hemisphere
/// r = m/2. Mass (boundary-corrected) is m/2.
MetricPtr make_half_schwarzschild(double m);

MetricPtr make_conformal_superposition(const ConformalBubbleSpec& spec);

/// delta + h with h a deterministic (in `seed`) sum of smooth decaying
/// profiles of size `amplitude` * r^-tau. The family does not enforce the
/// energy conditions. Throws `DomainError` if positivity fails on the
/// construction lattice.
MetricPtr make_perturbed_flat(double amplitude, double tau, std::uint64_t seed);

/// The homothety lambda^2 g written in the coordinates y = lambda x, i.e.
/// g~(y) = g(y / lambda). Masses and both sides of the mass estimate scale
/// by lambda.
MetricPtr make_rescaled(MetricPtr base, double lambda);

/// Extension of a mirror-symmetric metric to all of R^3 by reflection across
/// x3 = 0. Throws `DomainError` for metrics without the symmetry.
MetricPtr make_mirror_double(MetricPtr base);

/// Sup over sampled points of the weighted decay quantities
/// |g - delta| r^tau, r^(1+tau) |dg|, r^(2+tau) |d2g| (max-abs entry norms).
struct DecayBound {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
  double max() const;
};

DecayBound sample_decay(const MetricField& metric, int rays, std::uint64_t seed,
                        double r_min = 2.0, double r_max = 1.0e3, int samples_per_ray = 24);

}  // namespace pmt

namespace pmt {

/// Components of the reflection-doubled metric at any x: for x3 < 0 the
/// values are R g(Rx) R with R = diag(1, 1, -1), partials transformed
/// accordingly. Requires a mirror-symmetric metric.
MetricJet<double> mirror_extended_jet(const MetricField& metric, const Vec3& x);

}  // namespace pmt
