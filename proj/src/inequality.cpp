#include "pmt/inequality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>


#include "pmt/error.hpp"
#include "pmt/geometry.hpp"
#include "pmt/parallel.hpp"
#include "tetra.hpp"

namespace pmt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct CellIndex {
  int i, j, k;
};

CellIndex cell_of(const Domain& d, std::size_t c) {
  const int c1 = d.axis(1).cells(), c2 = d.axis(2).cells();
  return {static_cast<int>(c / (static_cast<std::size_t>(c1) * c2)), static_cast<int>((c / c2) % c1),
          static_cast<int>(c % c2)};
}

double sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

// Chart coordinates of corner `corner` (bits 4, 2, 1 = axes 0, 1, 2) of a
// cell, without periodic wrap.
Vec3 corner_point(const Domain& d, const CellIndex& c, int corner) {
  return Vec3(d.axis(0).coord(c.i + ((corner >> 2) & 1)), d.axis(1).coord(c.j + ((corner >> 1) & 1)),
              d.axis(2).coord(c.k + (corner & 1)));
}

double sigma_level(const Domain& d) {
  const GridAxis& ax = d.axis(d.sigma_axis());
  return d.chart().kind() == ChartKind::Cartesian ? ax.start : ax.coord(ax.nodes - 1);
}

// Area element of Sigma (a level set of chart axis s) from chart components.
double sigma_area_element(const Mat3& g, int s) {
  const int b = (s + 1) % 3, c = (s + 2) % 3;
  return std::sqrt(std::max(0.0, g(b, b) * g(c, c) - g(b, c) * g(b, c)));
}

}  // namespace

std::vector<double> nodal_weights(const Domain& d) {
  std::vector<double> w(d.node_count(), 0.0);
  const double v8 = d.cell_volume() / 8.0;
  for (std::size_t c = 0; c < d.cell_count(); ++c) {
    const CellIndex ci = cell_of(d, c);
    if (!d.cell_active(ci.i, ci.j, ci.k)) continue;
    const auto corners = d.cell_corners(ci.i, ci.j, ci.k);
    for (int o = 0; o < 8; ++o) {
      if (!d.ghost(corners[o])) w[corners[o]] += v8 * d.octant_fraction(c, o);
    }
  }
  return w;
}

BulkIntegral bulk_integral(const MetricField& metric, const DiscreteField& u) {
  const Domain& d = u.domain();
  const std::size_t nodes = d.node_count();
  const std::vector<double> w = nodal_weights(d);
  std::vector<double> grad(nodes, 0.0), hess(nodes, 0.0), curv(nodes, 0.0), vol(nodes, 0.0);
  parallel_for(nodes, [&](std::size_t n) {
    if (w[n] == 0.0) return;
    const MetricJet<double> jet = node_metric_jet(metric, d, n);
    const PointFrame<double> f = frame(jet);
    const ScalarJet<double> uj = u.jet(n);
    grad[n] = gradient(f, uj).norm;
    hess[n] = hessian(f, uj).norm_squared;
    curv[n] = scalar_curvature(jet, f);
    vol[n] = w[n] * f.sqrt_det;
  });
  BulkIntegral out;
  const double max_grad = *std::max_element(grad.begin(), grad.end());
  out.epsilon = 1e-8 * max_grad;
  std::size_t in_domain = 0, regularized = 0;
  for (std::size_t n = 0; n < nodes; ++n) {
    if (w[n] == 0.0) continue;
    ++in_domain;
    if (grad[n] < out.epsilon) ++regularized;
  }
  out.regularized_fraction = in_domain ? static_cast<double>(regularized) / static_cast<double>(in_domain) : 0.0;
  const double norm = 1.0 / (16.0 * M_PI);
  const double eps = out.epsilon;
  out.hessian_part = norm * deterministic_sum(nodes, [&](std::size_t n) {
    return vol[n] == 0.0 ? 0.0 : vol[n] * hess[n] / std::max(grad[n], eps);
  });
  out.curvature_part = norm * deterministic_sum(nodes, [&](std::size_t n) { return vol[n] * curv[n] * grad[n]; });
  out.value = out.hessian_part + out.curvature_part;
  return out;
}

namespace {

// Trapezoid area weights (in chart coordinates) of SIGMA nodes.
std::vector<double> sigma_weights(const Domain& d) {
  const int s = d.sigma_axis();
  const int b = (s + 1) % 3, c = (s + 2) % 3;
  const double face = d.axis(b).spacing * d.axis(c).spacing / 4.0;
  const int sigma_cell = d.chart().kind() == ChartKind::Cartesian ? 0 : d.axis(s).cells() - 1;
  const int sigma_bit = 4 >> s;
  const bool sigma_upper = d.chart().kind() != ChartKind::Cartesian;
  std::vector<double> w(d.node_count(), 0.0);
  for (std::size_t cell = 0; cell < d.cell_count(); ++cell) {
    const CellIndex ci = cell_of(d, cell);
    const int idx[3] = {ci.i, ci.j, ci.k};
    if (idx[s] != sigma_cell || !d.cell_active(ci.i, ci.j, ci.k)) continue;
    const auto corners = d.cell_corners(ci.i, ci.j, ci.k);
    for (int corner = 0; corner < 8; ++corner) {
      if (static_cast<bool>(corner & sigma_bit) != sigma_upper || d.tag(corners[corner]) != NodeTag::Sigma) continue;
      w[corners[corner]] += face * d.octant_fraction(cell, corner);
    }
  }
  return w;
}

}  // namespace

double boundary_integral(const MetricField& metric, const DiscreteField& u) {
  const Domain& d = u.domain();
  const std::vector<double> w = sigma_weights(d);
  const int s = d.sigma_axis();
  std::vector<double> term(d.node_count(), 0.0);
  parallel_for(d.node_count(), [&](std::size_t n) {
    if (w[n] == 0.0) return;
    const MetricJet<double> jet = node_metric_jet(metric, d, n);
    const PointFrame<double> f = frame(jet);
    const double h = boundary_mean_curvature(jet, f, s, d.sigma_sign());
    term[n] = w[n] * sigma_area_element(jet.g, s) * h * gradient(f, u.jet(n)).norm;
  });
  return sum(term) / (8.0 * M_PI);
}

IdentityCheck normal_derivative_identity(const MetricField& metric, const DiscreteField& u,
                                         const std::vector<std::size_t>& nodes) {
  const Domain& d = u.domain();
  const int s = d.sigma_axis();
  std::vector<std::size_t> samples = nodes;
  if (samples.empty()) {
    for (std::size_t n = 0; n < d.node_count(); ++n) {
      if (d.tag(n) != NodeTag::Sigma) continue;
      bool clear = true;
      for (int a = 0; a < 3 && clear; ++a) {
        if (a == s) continue;
        for (int step : {-2, -1, 1, 2}) {
          const long m = d.neighbor(n, a, step);
          if (m < 0) {
            clear = false;
            break;
          }
        }
      }
      const auto mi = d.multi_index(n);
      for (int di = -2; di <= 2 && clear; ++di) {
        for (int dj = -2; dj <= 2 && clear; ++dj) {
          for (int dk = -2; dk <= 2 && clear; ++dk) {
            std::array<int, 3> q{mi[0] + di, mi[1] + dj, mi[2] + dk};
            bool inside = true;
            for (int a = 0; a < 3; ++a) {
              if (d.axis(a).periodic) q[a] = (q[a] + d.axis(a).nodes) % d.axis(a).nodes;
              else if (q[a] < 0 || q[a] >= d.axis(a).nodes) inside = false;
            }
            if (!inside) continue;
            const NodeTag t = d.tag(d.index(q[0], q[1], q[2]));
            if (t != NodeTag::Sigma && t != NodeTag::Interior) clear = false;
          }
        }
      }
      if (clear) samples.push_back(n);
    }
  }

  // d_nu |grad u| = hess u(nu, grad u) / |grad u|.
  std::vector<double> defect(samples.size(), 0.0), scale(samples.size(), 0.0);
  parallel_for(samples.size(), [&](std::size_t i) {
    const std::size_t n = samples[i];
    const MetricJet<double> jet = node_metric_jet(metric, d, n);
    const PointFrame<double> f = frame(jet);
    const double h = boundary_mean_curvature(jet, f, s, d.sigma_sign());
    const Vec3 nu = d.sigma_sign() * f.g_inv.col(s) / std::sqrt(f.g_inv(s, s));
    const ScalarJet<double> uj = u.jet(n);
    const Gradient<double> g = gradient(f, uj);
    if (g.norm == 0.0) return;
    const double dnu = nu.dot(hessian(f, uj).matrix * g.vector) / g.norm;
    defect[i] = std::abs(dnu + g.norm * h);
    scale[i] = std::abs(g.norm * h);
  });
  IdentityCheck out;
  out.samples = samples.size();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.max_defect = std::max(out.max_defect, defect[i]);
    out.scale = std::max(out.scale, scale[i]);
  }
  return out;
}

namespace {

struct ClipBlock {
  std::array<int, 3> lo{}, hi{};  // node index ranges, inclusive
  bool contains_cell(const Domain& d, const CellIndex& c) const {
    const int idx[3] = {c.i, c.j, c.k};
    for (int a = 0; a < 3; ++a) {
      if (d.axis(a).periodic) continue;
      if (idx[a] < lo[a] || idx[a] + 1 > hi[a]) return false;
    }
    return true;
  }
  bool contains_node(const Domain& d, std::size_t n) const {
    const auto m = d.multi_index(n);
    for (int a = 0; a < 3; ++a) {
      if (d.axis(a).periodic) continue;
      if (m[a] < lo[a] || m[a] > hi[a]) return false;
    }
    return true;
  }
};

ClipBlock clip_block(const Domain& d, const CoareaOptions& o) {
  ClipBlock b;
  for (int a = 0; a < 3; ++a) {
    b.lo[a] = 0;
    b.hi[a] = d.axis(a).nodes - 1;
  }
  if (d.chart().kind() == ChartKind::Spherical) {
    const GridAxis& r = d.axis(0);
    const double r_in = d.chart().radial_map() == RadialMap::Log ? std::exp(r.start) : r.start;
    const double limit = o.shell_clip * r_in;
    int hi = 1;
    for (int i = 0; i < r.nodes; ++i) {
      const double ri = d.chart().radial_map() == RadialMap::Log ? std::exp(r.coord(i)) : r.coord(i);
      if (ri <= limit * (1 + 1e-12)) hi = i;
    }
    b.hi[0] = std::max(hi, 2);
  } else {
    const double half = d.chart().from_cartesian(Vec3(o.box_clip * d.truncation(), 0.0, 0.0))[0];
    for (int a = 0; a < 2; ++a) {
      const GridAxis& ax = d.axis(a);
      b.lo[a] = static_cast<int>(std::ceil((-half - ax.start) / ax.spacing - 1e-9));
      b.hi[a] = static_cast<int>(std::floor((half - ax.start) / ax.spacing + 1e-9));
    }
  }
  return b;
}

double triangle_area(const Mat3& g, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a, e2 = c - a;
  const double g11 = e1.dot(g * e1), g22 = e2.dot(g * e2), g12 = e1.dot(g * e2);
  return 0.5 * std::sqrt(std::max(0.0, g11 * g22 - g12 * g12));
}

}  // namespace

CoareaReport coarea_check(const MetricField& metric, const DiscreteField& u, const CoareaOptions& o) {
  const Domain& d = u.domain();
  if (!(o.bin_factor > 0.0)) throw DomainError("coarea: invalid slab parameters");
  const ClipBlock block = clip_block(d, o);
  const bool curvature = o.integrand == CoareaIntegrand::ScalarCurvature;

  // f |grad u| sqrt(g) on the clip nodes.
  std::vector<double> F(d.node_count(), 0.0);
  parallel_for(d.node_count(), [&](std::size_t n) {
    if (!d.in_domain(n) || !block.contains_node(d, n)) return;
    const MetricJet<double> jet = node_metric_jet(metric, d, n);
    const PointFrame<double> f = frame(jet);
    const double weight = curvature ? scalar_curvature(jet, f) : 1.0;
    F[n] = weight * gradient(f, u.jet(n)).norm * f.sqrt_det;
  });

  std::vector<std::size_t> cells;
  double t_lo = kInf, t_hi = -kInf;
  for (std::size_t c = 0; c < d.cell_count(); ++c) {
    const CellIndex ci = cell_of(d, c);
    if (!block.contains_cell(d, ci) || !d.cell_active(ci.i, ci.j, ci.k) || !d.cell_uncut(c)) continue;
    cells.push_back(c);
    for (std::size_t n : d.cell_corners(ci.i, ci.j, ci.k)) {
      t_lo = std::min(t_lo, u[n]);
      t_hi = std::max(t_hi, u[n]);
    }
  }
  if (cells.empty()) throw DomainError("coarea: clip block contains no active cells");

  CoareaReport out;
  const double range = t_hi - t_lo;
  const double dt = o.bin_factor * range / std::sqrt(static_cast<double>(d.resolution()));
  out.bin_width = dt;
  const std::size_t bins = static_cast<std::size_t>(std::ceil(range / dt));
  std::vector<double> bin_sum(bins + 1, 0.0);

  std::vector<double> levels;
  for (double frac : o.level_fractions) {
    double t = t_lo + frac * range;
    // Keep levels regular: no node exactly on the level.
    for (std::size_t c : cells) {
      const CellIndex ci = cell_of(d, c);
      for (std::size_t n : d.cell_corners(ci.i, ci.j, ci.k)) {
        if (u[n] == t) t += 1e-12 * std::max(1.0, range);
      }
    }
    levels.push_back(t);
  }
  std::vector<double> slab(levels.size(), 0.0);

  // Slab and cell-sum routes: u and f |grad u| sqrt(g) interpolated
  // linearly on the Kuhn tetrahedra of each cell, integrated exactly over
  // the parts of each tetrahedron between two values of u.
  std::vector<double> cell_total(cells.size(), 0.0);
  for (std::size_t idx = 0; idx < cells.size(); ++idx) {
    const CellIndex ci = cell_of(d, cells[idx]);
    const auto corners = d.cell_corners(ci.i, ci.j, ci.k);
    double total = 0.0;
    for (const auto& tet : detail::kKuhnTets) {
      detail::LinearTet lt;
      for (int v = 0; v < 4; ++v) {
        lt.p[v] = corner_point(d, ci, tet[v]);
        lt.u[v] = u[corners[tet[v]]];
        lt.f[v] = F[corners[tet[v]]];
      }
      const double whole = lt.below(kInf);
      total += whole;
      const double umin = std::min({lt.u[0], lt.u[1], lt.u[2], lt.u[3]});
      const double umax = std::max({lt.u[0], lt.u[1], lt.u[2], lt.u[3]});
      const std::size_t b0 = std::min(bins, static_cast<std::size_t>(std::max(0.0, (umin - t_lo) / dt)));
      const std::size_t b1 = std::min(bins, static_cast<std::size_t>(std::max(0.0, (umax - t_lo) / dt)));
      double previous = 0.0;
      for (std::size_t bin = b0; bin < b1; ++bin) {
        const double next = lt.below(t_lo + static_cast<double>(bin + 1) * dt);
        bin_sum[bin] += next - previous;
        previous = next;
      }
      bin_sum[b1] += whole - previous;
      for (std::size_t l = 0; l < levels.size(); ++l) {
        const double lo = levels[l] - 0.5 * dt, hi = levels[l] + 0.5 * dt;
        if (umax <= lo || umin >= hi) continue;
        slab[l] += lt.below(hi) - lt.below(lo);
      }
    }
    cell_total[idx] = total;
  }
  out.cell_sum = sum(cell_total);
  out.slab_total = sum(bin_sum);
  for (std::size_t b = 0; b < bins; ++b) out.empty_bins += (bin_sum[b] == 0.0);

  // Isosurface route.
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const double t = levels[l];
    std::vector<double> area(cells.size(), 0.0), area_one(cells.size(), 0.0);
    parallel_for(cells.size(), [&](std::size_t idx) {
      const CellIndex ci = cell_of(d, cells[idx]);
      const auto corners = d.cell_corners(ci.i, ci.j, ci.k);
      double s[8];
      bool above = false, below = false;
      for (int c = 0; c < 8; ++c) {
        s[c] = u[corners[c]] - t;
        (s[c] > 0 ? above : below) = true;
      }
      if (!above || !below) return;
      double acc = 0.0, acc_one = 0.0;
      for (const auto& tet : detail::kKuhnTets) {
        Vec3 pts[4];
        int np = 0;
        int pos[4], neg[4], npos = 0, nneg = 0;
        for (int v = 0; v < 4; ++v) (s[tet[v]] > 0 ? pos[npos++] : neg[nneg++]) = tet[v];
        if (npos == 0 || nneg == 0) continue;
        auto cut = [&](int a, int b) {
          const double lambda = s[a] / (s[a] - s[b]);
          return Vec3(corner_point(d, ci, a) + lambda * (corner_point(d, ci, b) - corner_point(d, ci, a)));
        };
        if (npos == 1 || nneg == 1) {
          const int apex = npos == 1 ? pos[0] : neg[0];
          const int* others = npos == 1 ? neg : pos;
          for (int v = 0; v < 3; ++v) pts[np++] = cut(apex, others[v]);
        } else {
          pts[np++] = cut(pos[0], neg[0]);
          pts[np++] = cut(pos[0], neg[1]);
          pts[np++] = cut(pos[1], neg[1]);
          pts[np++] = cut(pos[1], neg[0]);
        }
        auto add = [&](const Vec3& a, const Vec3& b, const Vec3& c) {
          const Vec3 centroid = (a + b + c) / 3.0;
          double weight = 1.0;
          Mat3 g;
          if (curvature) {
            const MetricJet<double> jet = chart_jet(metric, d.chart(), centroid);
            g = jet.g;
            weight = scalar_curvature(jet);
          } else {
            g = chart_components(metric, d.chart(), centroid);
          }
          const double da = triangle_area(g, a, b, c);
          acc += weight * da;
          acc_one += da;
        };
        add(pts[0], pts[1], pts[2]);
        if (np == 4) add(pts[0], pts[2], pts[3]);
      }
      area[idx] = acc;
      area_one[idx] = acc_one;
    });
    CoareaLevel level;
    level.t = t;
    level.slab = slab[l] / dt;
    level.isosurface = sum(area);
    const double floor = 1e-8 * sum(area_one);
    level.mismatch = std::abs(level.slab - level.isosurface) / std::max(std::abs(level.isosurface), floor);
    out.worst_mismatch = std::max(out.worst_mismatch, level.mismatch);
    out.levels.push_back(level);
  }
  return out;
}

std::vector<LevelComponents> level_connectedness(const DiscreteField& u, const std::vector<double>& levels) {
  const Domain& d = u.domain();
  double lo = kInf, hi = -kInf;
  for (std::size_t n = 0; n < d.node_count(); ++n) {
    if (!d.in_domain(n)) continue;
    lo = std::min(lo, u[n]);
    hi = std::max(hi, u[n]);
  }
  const double quantum = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
  std::vector<LevelComponents> out(levels.size());
  parallel_for(levels.size(), [&](std::size_t l) {
    double t = levels[l];
    bool exact = true;
    while (exact) {
      exact = false;
      for (std::size_t n = 0; n < d.node_count(); ++n) {
        if (d.in_domain(n) && u[n] == t) {
          t += 0.5 * quantum;
          exact = true;
          break;
        }
      }
    }
    const std::size_t cells = d.cell_count();
    std::vector<std::uint8_t> straddle(cells, 0);
    for (std::size_t c = 0; c < cells; ++c) {
      const CellIndex ci = cell_of(d, c);
      if (!d.cell_active(ci.i, ci.j, ci.k)) continue;
      bool above = false, below = false;
      for (std::size_t n : d.cell_corners(ci.i, ci.j, ci.k)) (u[n] > t ? above : below) = true;
      straddle[c] = above && below;
    }
    std::vector<std::size_t> parent(cells);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    const int c1 = d.axis(1).cells(), c2 = d.axis(2).cells();
    for (std::size_t c = 0; c < cells; ++c) {
      if (!straddle[c]) continue;
      const CellIndex ci = cell_of(d, c);
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          for (int dk = -1; dk <= 1; ++dk) {
            std::array<int, 3> q{ci.i + di, ci.j + dj, ci.k + dk};
            bool ok = true;
            for (int a = 0; a < 3; ++a) {
              const int count = d.axis(a).cells();
              if (d.axis(a).periodic) q[a] = (q[a] + count) % count;
              else if (q[a] < 0 || q[a] >= count) ok = false;
            }
            if (!ok) continue;
            const std::size_t other = (static_cast<std::size_t>(q[0]) * c1 + q[1]) * c2 + q[2];
            if (straddle[other]) parent[find(other)] = find(c);
          }
        }
      }
    }
    std::vector<std::uint8_t> is_root(cells, 0), touches(cells, 0);
    for (std::size_t c = 0; c < cells; ++c) {
      if (!straddle[c]) continue;
      const std::size_t root = find(c);
      is_root[root] = 1;
      const CellIndex ci = cell_of(d, c);
      for (std::size_t n : d.cell_corners(ci.i, ci.j, ci.k)) {
        if (d.tag(n) == NodeTag::Outer) touches[root] = 1;
      }
    }
    LevelComponents r;
    r.t = t;
    for (std::size_t c = 0; c < cells; ++c) {
      r.components += is_root[c];
      r.touching += is_root[c] && touches[c];
    }
    out[l] = r;
  });
  return out;
}

EnergySample sample_energy_conditions(const MetricField& metric, const Domain& d, int random_points,
                                      std::uint64_t seed, double tolerance) {
  const int s = d.sigma_axis();
  std::mt19937_64 rng(seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto random_point = [&](bool on_sigma) {
    Vec3 y;
    for (int a = 0; a < 3; ++a) {
      const GridAxis& ax = d.axis(a);
      const double extent = ax.spacing * ax.cells();
      y[a] = ax.start + unit() * extent;
    }
    if (on_sigma) y[s] = sigma_level(d);
    return y;
  };
  std::vector<Vec3> bulk_points, sigma_points;
  for (std::size_t n = 0; n < d.node_count(); ++n) {
    if (!d.in_domain(n) || metric.inside_excision(d.cartesian_point(n))) continue;
    bulk_points.push_back(d.chart_point(n));
    if (d.tag(n) == NodeTag::Sigma) sigma_points.push_back(d.chart_point(n));
  }
  for (int i = 0; i < random_points; ++i) {
    const Vec3 y = random_point(false);
    if (!metric.inside_excision(d.chart().to_cartesian(y))) bulk_points.push_back(y);
    const Vec3 z = random_point(true);
    if (!metric.inside_excision(d.chart().to_cartesian(z))) sigma_points.push_back(z);
  }
  std::vector<double> r(bulk_points.size()), h(sigma_points.size());
  parallel_for(bulk_points.size(), [&](std::size_t i) { r[i] = scalar_curvature(chart_jet(metric, d.chart(), bulk_points[i])); });
  parallel_for(sigma_points.size(), [&](std::size_t i) {
    const MetricJet<double> jet = chart_jet(metric, d.chart(), sigma_points[i]);
    h[i] = boundary_mean_curvature(jet, frame(jet), s, d.sigma_sign());
  });
  EnergySample out;
  out.samples = r.size() + h.size();
  out.min_scalar_curvature = r.empty() ? 0.0 : *std::min_element(r.begin(), r.end());
  out.min_mean_curvature = h.empty() ? 0.0 : *std::min_element(h.begin(), h.end());
  out.satisfied = out.min_scalar_curvature >= -tolerance && out.min_mean_curvature >= -tolerance;
  return out;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Skipped: return "SKIPPED-INEQUALITY";
    case Verdict::Errored: return "ERRORED";
  }
  return "UNKNOWN";
}

InequalityReport check_inequality(const MetricField& metric, int resolution, double truncation,
                                  const InequalityOptions& options) {
  InequalityReport rep;
  rep.metric = metric.name();
  rep.resolution = resolution;
  rep.truncation = truncation;

  const DomainPtr domain = build_domain(metric, resolution, truncation, options.domain);
  rep.domain = domain->describe();

  const std::vector<double> radii = options.radii.empty() ? default_radii(metric) : options.radii;
  rep.mass = mass_study(metric, ExhaustionShape::Hemisphere, radii, options.mass_panels);

  rep.energy = sample_energy_conditions(metric, *domain, options.random_points, options.seed, options.energy_tolerance);
  if (!rep.energy.satisfied) {
    rep.verdict = Verdict::Skipped;
    rep.note = "sampled energy conditions fail (min R " + std::to_string(rep.energy.min_scalar_curvature) +
               ", min H " + std::to_string(rep.energy.min_mean_curvature) + ")";
    return rep;
  }

  const DiscreteField u = solve_harmonic(metric, domain, options.solver);
  rep.solver_iterations = u.info().iterations;
  rep.solver_relative_residual = u.info().relative_residual;
  rep.bulk = bulk_integral(metric, u);
  rep.boundary = boundary_integral(metric, u);
  rep.rhs = rep.bulk.value + rep.boundary;
  rep.slack = rep.mass.fit.mass - rep.rhs;
  rep.residual = residual(metric, u);
  rep.min_gradient_sigma = min_gradient_on_sigma(metric, u);
  rep.identity = normal_derivative_identity(metric, u);
  rep.coarea = coarea_check(metric, u, options.coarea);
  std::vector<double> levels;
  double u_max = 0.0;
  for (double v : u.values()) {
    if (std::isfinite(v)) u_max = std::max(u_max, v);
  }
  for (double t : options.connectedness_levels) {
    if (t > 0.0 && t < u_max) levels.push_back(t);
  }
  rep.connectedness = level_connectedness(u, levels);

  // The truncation run keeps the spacing of the primary axis.
  auto matched_resolution = [&](double a) {
    const GridAxis& ax = domain->axis(0);
    double extent = 0.0;
    if (domain->chart().kind() == ChartKind::Spherical) {
      extent = (domain->chart().radial_map() == RadialMap::Log ? std::log(a) : a) - ax.start;
    } else {
      extent = 2.0 * domain->chart().from_cartesian(Vec3(a, 0.0, 0.0))[0];
    }
    return static_cast<int>(std::ceil(extent / ax.spacing - 1e-9));
  };
  auto rhs_at = [&](int n, double a) {
    const DomainPtr dom = build_domain(metric, n, a, options.domain);
    const DiscreteField v = solve_harmonic(metric, dom, options.solver);
    return bulk_integral(metric, v).value + boundary_integral(metric, v);
  };
  if (options.refinement_run) rep.refinement_delta = std::abs(rep.rhs - rhs_at(std::max(8, resolution / 2), truncation));
  if (options.truncation_run) rep.truncation_delta = std::abs(rhs_at(matched_resolution(2.0 * truncation), 2.0 * truncation) - rep.rhs);
  rep.tol_total = rep.mass.fit.uncertainty + rep.refinement_delta + rep.truncation_delta;

  rep.verdict = rep.mass.fit.mass >= rep.rhs - rep.tol_total ? Verdict::Pass : Verdict::Fail;
  if (!rep.mass.fit.converged) rep.note = rep.mass.fit.note;
  return rep;
}

}  // namespace pmt
