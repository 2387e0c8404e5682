#pragma once

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "pmt/error.hpp"
#include "pmt/metric_zoo.hpp"
#include "pmt/tensor.hpp"

namespace pmt {

/// Christoffel symbols of the second kind: `symbols[k](i, j)` = Gamma^k_ij.
template <typename Scalar>
struct Christoffel {
  std::array<Matrix3<Scalar>, 3> symbols;

  Scalar operator()(int k, int i, int j) const { return symbols[k](i, j); }
};

/// Cached pointwise quantities of a metric.
template <typename Scalar>
struct PointFrame {
  Matrix3<Scalar> g;
  Matrix3<Scalar> g_inv;
  Scalar sqrt_det{1};
  Christoffel<Scalar> gamma;
};

namespace detail {

template <typename Scalar>
Matrix3<Scalar> inverse_checked(const Matrix3<Scalar>& g, Scalar& det, const std::string& where) {
  det = g.determinant();
  const Eigen::LLT<Matrix3<Scalar>> llt(g);
  if (!(det > Scalar(0)) || llt.info() != Eigen::Success) {
    throw NumericalError("metric is not positive definite" + where);
  }
  return g.inverse();
}

// Gamma_{l i j} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij), stored as first[l](i, j).
template <typename Scalar>
std::array<Matrix3<Scalar>, 3> christoffel_first_kind(const std::array<Matrix3<Scalar>, 3>& dg) {
  std::array<Matrix3<Scalar>, 3> first;
  for (int l = 0; l < 3; ++l) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        first[l](i, j) = Scalar(0.5) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
      }
    }
  }
  return first;
}

}  // namespace detail

template <typename Scalar>
PointFrame<Scalar> frame(const MetricJet<Scalar>& jet, const std::string& where = {}) {
  PointFrame<Scalar> out;
  out.g = jet.g;
  Scalar det;
  out.g_inv = detail::inverse_checked(jet.g, det, where);
  out.sqrt_det = std::sqrt(det);
  const auto first = detail::christoffel_first_kind(jet.dg);
  for (int k = 0; k < 3; ++k) {
    Matrix3<Scalar> gk = Matrix3<Scalar>::Zero();
    for (int l = 0; l < 3; ++l) gk += out.g_inv(k, l) * first[l];
    out.gamma.symbols[k] = gk;
  }
  return out;
}

/// Frame of `metric` at Cartesian point x; rejects points inside an excision.
PointFrame<double> frame(const MetricField& metric, const Vec3& x);

/// Scalar curvature from analytic first and second partials:
/// R = g^ij (d_k Gamma^k_ij - d_j Gamma^k_ik + Gamma^k_kl Gamma^l_ij - Gamma^k_jl Gamma^l_ik).
template <typename Scalar>
Scalar scalar_curvature(const MetricJet<Scalar>& jet, const PointFrame<Scalar>& f) {
  const auto first = detail::christoffel_first_kind(jet.dg);
  // d_m g^{kl} = -(g^-1 d_m g g^-1)^{kl}
  std::array<Matrix3<Scalar>, 3> d_inv;
  for (int m = 0; m < 3; ++m) d_inv[m] = -f.g_inv * jet.dg[m] * f.g_inv;

  // dgamma[m][k](i, j) = d_m Gamma^k_ij
  std::array<std::array<Matrix3<Scalar>, 3>, 3> dgamma;
  for (int m = 0; m < 3; ++m) {
    std::array<Matrix3<Scalar>, 3> dfirst;
    for (int l = 0; l < 3; ++l) {
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          dfirst[l](i, j) = Scalar(0.5) * (jet.d2g[i][m](j, l) + jet.d2g[j][m](i, l) -
                                           jet.d2g[l][m](i, j));
        }
      }
    }
    for (int k = 0; k < 3; ++k) {
      Matrix3<Scalar> acc = Matrix3<Scalar>::Zero();
      for (int l = 0; l < 3; ++l) acc += d_inv[m](k, l) * first[l] + f.g_inv(k, l) * dfirst[l];
      dgamma[m][k] = acc;
    }
  }

  const auto& G = f.gamma.symbols;
  Matrix3<Scalar> ricci = Matrix3<Scalar>::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      Scalar r(0);
      for (int k = 0; k < 3; ++k) {
        r += dgamma[k][k](i, j) - dgamma[j][k](i, k);
        for (int l = 0; l < 3; ++l) r += G[k](k, l) * G[l](i, j) - G[k](j, l) * G[l](i, k);
      }
      ricci(i, j) = r;
    }
  }
  return (f.g_inv.cwiseProduct(ricci)).sum();
}

template <typename Scalar>
Scalar scalar_curvature(const MetricJet<Scalar>& jet) {
  return scalar_curvature(jet, frame(jet));
}

double scalar_curvature(const MetricField& metric, const Vec3& x);

/// Mean curvature of the coordinate surface {y_axis = const} with respect to
/// the unit normal N = sign * grad(y_axis) / |grad(y_axis)|, computed as div N.
/// With axis = 2 and sign = -1 this is H = div(-grad x3 / |grad x3|), the
/// convention under which a totally geodesic boundary has H = 0 and the
/// outward normal of the half-space is used.
template <typename Scalar>
Scalar boundary_mean_curvature(const MetricJet<Scalar>& jet, const PointFrame<Scalar>& f,
                               int axis = 2, int sign = -1) {
  std::array<Matrix3<Scalar>, 3> d_inv;
  for (int m = 0; m < 3; ++m) d_inv[m] = -f.g_inv * jet.dg[m] * f.g_inv;
  const Scalar gaa = f.g_inv(axis, axis);
  const Scalar norm = std::sqrt(gaa);
  Scalar div(0);
  for (int i = 0; i < 3; ++i) {
    const Scalar n_i = f.g_inv(i, axis) / norm;
    // d_i N^i
    div += d_inv[i](i, axis) / norm - Scalar(0.5) * f.g_inv(i, axis) * d_inv[i](axis, axis) / (gaa * norm);
    // N^i d_i log sqrt(det g)
    div += n_i * Scalar(0.5) * (f.g_inv.cwiseProduct(jet.dg[i])).sum();
  }
  return Scalar(sign) * div;
}

/// H_g at a point of the boundary plane {x3 = 0}.
double boundary_mean_curvature(const MetricField& metric, const Vec3& x);

struct DerivativeCheck {
  std::size_t points = 0;
  /// Points where both finite-difference errors sit above the round-off
  /// floor; the order is measured only there.
  std::size_t measured = 0;
  double min_order = 0.0;
  /// log2 of the summed errors at h and h/2 over all measured points.
  double aggregate_order = 0.0;
  double max_error = 0.0;  // at the larger step
  /// max |trace of the Hessian - divergence-form Laplacian| / max(1, |trace|)
  /// for a fixed quadratic test function.
  double max_trace_defect = 0.0;
};

/// Compares analytic first and second partials with centered differences of
/// `eval` and of the analytic first partials at steps h and h/2, at `points`
/// uniform random points of [-extent, extent]^2 x [h, extent] kept 1.5 radii
/// away from every excision.
DerivativeCheck check_derivatives(const MetricField& metric, int points, std::uint64_t seed,
                                  double extent = 10.0, double h = 1e-2);

template <typename Scalar>
struct Gradient {
  Vector3<Scalar> vector;  // grad^i u = g^ij d_j u
  Scalar norm{0};
};

template <typename Scalar>
Gradient<Scalar> gradient(const PointFrame<Scalar>& f, const ScalarJet<Scalar>& u) {
  Gradient<Scalar> out;
  out.vector = f.g_inv * u.d;
  const Scalar sq = u.d.dot(out.vector);
  out.norm = sq > Scalar(0) ? std::sqrt(sq) : Scalar(0);
  return out;
}

template <typename Scalar>
struct Hessian {
  Matrix3<Scalar> matrix;     // (hess u)_ij = d_i d_j u - Gamma^k_ij d_k u
  Scalar norm_squared{0};     // g^ia g^jb (hess u)_ij (hess u)_ab
};

template <typename Scalar>
Hessian<Scalar> hessian(const PointFrame<Scalar>& f, const ScalarJet<Scalar>& u) {
  Hessian<Scalar> out;
  Matrix3<Scalar> h = u.d2;
  for (int k = 0; k < 3; ++k) h -= u.d[k] * f.gamma.symbols[k];
  // Symmetrize exactly; the inputs are symmetric up to round-off.
  out.matrix = Scalar(0.5) * (h + h.transpose());
  const Matrix3<Scalar> raised = f.g_inv * out.matrix * f.g_inv;
  out.norm_squared = raised.cwiseProduct(out.matrix).sum();
  return out;
}

/// Laplace-Beltrami operator as the trace of the Hessian.
template <typename Scalar>
Scalar laplacian(const PointFrame<Scalar>& f, const ScalarJet<Scalar>& u) {
  return f.g_inv.cwiseProduct(hessian(f, u).matrix).sum();
}

/// Divergence form (1/sqrt g) d_i (sqrt g g^ij d_j u), expanded analytically.
template <typename Scalar>
Scalar laplacian_divergence_form(const MetricJet<Scalar>& jet, const PointFrame<Scalar>& f,
                                 const ScalarJet<Scalar>& u) {
  Scalar out = f.g_inv.cwiseProduct(u.d2).sum();
  for (int i = 0; i < 3; ++i) {
    const Matrix3<Scalar> d_inv = -f.g_inv * jet.dg[i] * f.g_inv;
    const Scalar dlog = Scalar(0.5) * (f.g_inv.cwiseProduct(jet.dg[i])).sum();
    for (int j = 0; j < 3; ++j) out += (d_inv(i, j) + f.g_inv(i, j) * dlog) * u.d[j];
  }
  return out;
}

}  // namespace pmt
