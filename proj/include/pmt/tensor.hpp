#pragma once

#include <array>

#include <Eigen/Core>

namespace pmt {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec3 = Vector3<double>;
using Mat3 = Matrix3<double>;

/// Metric components at a point together with their first and second
/// coordinate partials, in whatever chart the point is expressed in.
///
/// `dg[k]` holds the matrix of partials along coordinate k, and
/// `d2g[k][l]` the mixed partials along k then l (symmetric in k, l).
template <typename Scalar>
struct MetricJet {
  Matrix3<Scalar> g = Matrix3<Scalar>::Identity();
  std::array<Matrix3<Scalar>, 3> dg{Matrix3<Scalar>::Zero(), Matrix3<Scalar>::Zero(),
                                    Matrix3<Scalar>::Zero()};
  std::array<std::array<Matrix3<Scalar>, 3>, 3> d2g{
      {{Matrix3<Scalar>::Zero(), Matrix3<Scalar>::Zero(), Matrix3<Scalar>::Zero()},
       {Matrix3<Scalar>::Zero(), Matrix3<Scalar>::Zero(), Matrix3<Scalar>::Zero()},
       {Matrix3<Scalar>::Zero(), Matrix3<Scalar>::Zero(), Matrix3<Scalar>::Zero()}}};
};

/// Value, coordinate gradient and coordinate Hessian of a scalar field.
template <typename Scalar>
struct ScalarJet {
  Scalar value{0};
  Vector3<Scalar> d = Vector3<Scalar>::Zero();
  Matrix3<Scalar> d2 = Matrix3<Scalar>::Zero();
};

}  // namespace pmt
