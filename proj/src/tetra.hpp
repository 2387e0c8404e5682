#pragma once

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>

#include "pmt/tensor.hpp"

namespace pmt::detail {

/// Kuhn decomposition of the unit cube along the 0-7 diagonal; corner c has
/// offsets ((c >> 2) & 1, (c >> 1) & 1, c & 1).
inline constexpr int kKuhnTets[6][4] = {{0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7},
                                        {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7}};

inline double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return std::abs((b - a).dot((c - a).cross(d - a))) / 6.0;
}

/// A tetrahedron carrying linear u and f.
struct LinearTet {
  Vec3 p[4];
  double u[4];
  double f[4];

  /// Integral of f over the part where u < s.
  double below(double s) const {
    int lo[4], hi[4], nlo = 0, nhi = 0;
    for (int v = 0; v < 4; ++v) (u[v] < s ? lo[nlo++] : hi[nhi++]) = v;
    if (nlo == 0) return 0.0;
    const double whole = tet_volume(p[0], p[1], p[2], p[3]) * (f[0] + f[1] + f[2] + f[3]) / 4.0;
    if (nhi == 0) return whole;
    struct Point {
      Vec3 x;
      double f;
    };
    auto vertex = [&](int v) { return Point{p[v], f[v]}; };
    auto cut = [&](int a, int b) {
      const double lambda = (s - u[a]) / (u[b] - u[a]);
      return Point{p[a] + lambda * (p[b] - p[a]), f[a] + lambda * (f[b] - f[a])};
    };
    auto integral = [](const Point& a, const Point& b, const Point& c, const Point& d) {
      return tet_volume(a.x, b.x, c.x, d.x) * (a.f + b.f + c.f + d.f) / 4.0;
    };
    if (nlo == 1) return integral(vertex(lo[0]), cut(lo[0], hi[0]), cut(lo[0], hi[1]), cut(lo[0], hi[2]));
    if (nhi == 1) return whole - integral(vertex(hi[0]), cut(hi[0], lo[0]), cut(hi[0], lo[1]), cut(hi[0], lo[2]));
    // Prism with triangles (a, p1, p2) and (b, q1, q2) and lateral edges
    // a-b, p1-q1, p2-q2.
    const Point a = vertex(lo[0]), b = vertex(lo[1]);
    const Point p1 = cut(lo[0], hi[0]), p2 = cut(lo[0], hi[1]);
    const Point q1 = cut(lo[1], hi[0]), q2 = cut(lo[1], hi[1]);
    return integral(a, p1, p2, q2) + integral(a, p1, q1, q2) + integral(a, b, q1, q2);
  }
};

/// Fraction of the unit cube where the piecewise-linear interpolant (on the
/// Kuhn tetrahedra) of the corner values `psi` is positive.
inline double positive_fraction(const double (&psi)[8]) {
  bool pos = false, neg = false;
  for (double v : psi) (v > 0.0 ? pos : neg) = true;
  if (!neg) return 1.0;
  if (!pos) return 0.0;
  double total = 0.0;
  for (const auto& tet : kKuhnTets) {
    LinearTet t;
    for (int v = 0; v < 4; ++v) {
      const int c = tet[v];
      t.p[v] = Vec3((c >> 2) & 1, (c >> 1) & 1, c & 1);
      t.u[v] = -psi[c];
      t.f[v] = 1.0;
    }
    total += t.below(0.0);
  }
  return std::clamp(total, 0.0, 1.0);
}

}  // namespace pmt::detail
