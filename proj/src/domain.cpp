#include "pmt/domain.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "pmt/error.hpp"
#include "pmt/parallel.hpp"
#include "tetra.hpp"

namespace pmt {

std::string to_string(NodeTag tag) {
  switch (tag) {
    case NodeTag::Interior: return "INTERIOR";
    case NodeTag::Sigma: return "SIGMA";
    case NodeTag::Outer: return "OUTER";
    case NodeTag::Horizon: return "HORIZON";
    case NodeTag::Axis: return "AXIS";
    case NodeTag::Excised: return "EXCISED";
  }
  return "UNKNOWN";
}

Domain::Domain(Chart chart, std::array<GridAxis, 3> axes, double truncation)
    : chart_(chart), axes_(axes), truncation_(truncation) {
  tags_.assign(static_cast<std::size_t>(axes_[0].nodes) * axes_[1].nodes * axes_[2].nodes, NodeTag::Interior);
}

std::array<int, 3> Domain::multi_index(std::size_t n) const {
  const int k = static_cast<int>(n % axes_[2].nodes);
  n /= axes_[2].nodes;
  const int j = static_cast<int>(n % axes_[1].nodes);
  const int i = static_cast<int>(n / axes_[1].nodes);
  return {i, j, k};
}

long Domain::neighbor(std::size_t n, int axis, int step) const {
  std::array<int, 3> m = multi_index(n);
  const GridAxis& ax = axes_[axis];
  int v = m[axis] + step;
  if (ax.periodic) {
    v %= ax.nodes;
    if (v < 0) v += ax.nodes;
  } else if (v < 0 || v >= ax.nodes) {
    return -1;
  }
  m[axis] = v;
  return static_cast<long>(index(m[0], m[1], m[2]));
}

std::size_t Domain::count(NodeTag tag) const {
  std::size_t c = 0;
  for (NodeTag t : tags_) c += (t == tag);
  return c;
}

Vec3 Domain::chart_point(std::size_t n) const {
  const auto m = multi_index(n);
  return Vec3(axes_[0].coord(m[0]), axes_[1].coord(m[1]), axes_[2].coord(m[2]));
}

std::size_t Domain::cell_count() const {
  return static_cast<std::size_t>(axes_[0].cells()) * axes_[1].cells() * axes_[2].cells();
}

std::array<std::size_t, 8> Domain::cell_corners(int i, int j, int k) const {
  std::array<std::size_t, 8> out;
  int c = 0;
  for (int di = 0; di < 2; ++di) {
    for (int dj = 0; dj < 2; ++dj) {
      for (int dk = 0; dk < 2; ++dk) {
        int a = i + di, b = j + dj, e = k + dk;
        if (axes_[0].periodic) a %= axes_[0].nodes;
        if (axes_[1].periodic) b %= axes_[1].nodes;
        if (axes_[2].periodic) e %= axes_[2].nodes;
        out[c++] = index(a, b, e);
      }
    }
  }
  return out;
}

bool Domain::cell_active(int i, int j, int k) const {
  for (std::size_t n : cell_corners(i, j, k)) {
    if (!in_domain(n)) return false;
  }
  if (fractions_.empty()) return true;
  const auto& f = fractions_[cell_index(i, j, k)];
  return std::any_of(f.begin(), f.end(), [](double v) { return v > 0.0; });
}

bool Domain::cell_uncut(std::size_t cell) const {
  if (fractions_.empty()) return true;
  const auto& f = fractions_[cell];
  return std::all_of(f.begin(), f.end(), [](double v) { return v == 1.0; });
}

int Domain::boundary_distance(std::size_t n) const { return distance_[n]; }

void Domain::finalize() {
  // Drop nodes that no active octant reaches (an octant couples its corner
  // to the three adjacent corners); repeat since dropping can deactivate
  // further cells.
  const int c0 = axes_[0].cells(), c1 = axes_[1].cells(), c2 = axes_[2].cells();
  bool changed = true;
  std::vector<std::uint8_t> used;
  while (changed) {
    changed = false;
    used.assign(tags_.size(), 0);
    for (int i = 0; i < c0; ++i)
      for (int j = 0; j < c1; ++j)
        for (int k = 0; k < c2; ++k) {
          if (!cell_active(i, j, k)) continue;
          const auto corners = cell_corners(i, j, k);
          const std::size_t c = cell_index(i, j, k);
          for (int o = 0; o < 8; ++o) {
            if (octant_fraction(c, o) <= 0.0) continue;
            used[corners[o]] = used[corners[o ^ 4]] = used[corners[o ^ 2]] = used[corners[o ^ 1]] = 1;
          }
        }
    for (std::size_t n = 0; n < tags_.size(); ++n) {
      if (in_domain(n) && !used[n]) {
        tags_[n] = NodeTag::Excised;
        changed = true;
      }
    }
  }

  unknown_.assign(tags_.size(), -1);
  unknown_count_ = 0;
  for (std::size_t n = 0; n < tags_.size(); ++n) {
    if (in_domain(n) && !dirichlet(n)) unknown_[n] = static_cast<long>(unknown_count_++);
  }

  // Breadth-first distance (26-neighborhood) from boundary and excised nodes.
  distance_.assign(tags_.size(), std::numeric_limits<int>::max());
  std::deque<std::size_t> queue;
  for (std::size_t n = 0; n < tags_.size(); ++n) {
    if (tags_[n] != NodeTag::Interior) {
      distance_[n] = 0;
      queue.push_back(n);
    }
  }
  while (!queue.empty()) {
    const std::size_t n = queue.front();
    queue.pop_front();
    const auto m = multi_index(n);
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        for (int dk = -1; dk <= 1; ++dk) {
          std::array<int, 3> q{m[0] + di, m[1] + dj, m[2] + dk};
          bool ok = true;
          for (int a = 0; a < 3; ++a) {
            if (axes_[a].periodic) {
              q[a] = (q[a] + axes_[a].nodes) % axes_[a].nodes;
            } else if (q[a] < 0 || q[a] >= axes_[a].nodes) {
              ok = false;
            }
          }
          if (!ok) continue;
          const std::size_t p = index(q[0], q[1], q[2]);
          if (distance_[p] > distance_[n] + 1) {
            distance_[p] = distance_[n] + 1;
            queue.push_back(p);
          }
        }
      }
    }
  }
}

std::string Domain::describe() const {
  std::ostringstream out;
  out << (chart_.kind() == ChartKind::Cartesian ? "cartesian half-box" : "spherical half-shell") << " nodes "
      << axes_[0].nodes << "x" << axes_[1].nodes << "x" << axes_[2].nodes << ", unknowns " << unknown_count_
      << ", sigma " << count(NodeTag::Sigma) << ", outer " << count(NodeTag::Outer) << ", horizon "
      << count(NodeTag::Horizon) << ", axis " << count(NodeTag::Axis) << ", excised " << count(NodeTag::Excised);
  if (chart_.stretch() > 0.0) out << ", stretch " << chart_.stretch();
  if (cut_cells()) out << " (cut-cell horizon)";
  return out.str();
}

namespace {

// Smallest excision radius, in local grid spacings, that the cut-cell box
// accepts.
constexpr double kMinExcisionCells = 1.0;

const Excision* exact_boundary_excision(const MetricField& metric) {
  const auto& ex = metric.excisions();
  if (ex.size() == 1 && ex[0].on_boundary() && !ex[0].approximate) return &ex[0];
  return nullptr;
}

}  // namespace

DomainPtr build_domain(const MetricField& metric, int resolution, double truncation, const DomainOptions& options) {
  if (resolution < 8) throw DomainError("resolution must be at least 8 cells, got " + std::to_string(resolution));
  if (!(truncation > 0.0) || !std::isfinite(truncation)) throw DomainError("truncation must be positive");

  const Excision* horizon = exact_boundary_excision(metric);
  ChartChoice choice = options.chart;
  if (choice == ChartChoice::Automatic) choice = horizon ? ChartChoice::Spherical : ChartChoice::Cartesian;

  if (choice == ChartChoice::Spherical) {
    if (!horizon) {
      throw DomainError("the spherical half-shell needs exactly one exact excision centered on the boundary plane");
    }
    const double r_in = horizon->radius;
    if (!(truncation > 2.0 * r_in)) {
      throw DomainError("truncation radius " + std::to_string(truncation) + " does not clear the horizon");
    }
    const int n_theta = std::max(2, static_cast<int>(std::lround(0.75 * resolution)));
    const int n_phi = std::max(4, static_cast<int>(std::lround(1.5 * resolution)));
    std::array<GridAxis, 3> axes;
    if (options.radial_map == RadialMap::Log) {
      axes[0] = {resolution + 1, std::log(r_in), (std::log(truncation) - std::log(r_in)) / resolution, false};
    } else {
      axes[0] = {resolution + 1, r_in, (truncation - r_in) / resolution, false};
    }
    axes[1] = {n_theta + 1, Chart::kThetaMin, (0.5 * M_PI - Chart::kThetaMin) / n_theta, false};
    axes[2] = {n_phi, 0.0, 2.0 * M_PI / n_phi, true};
    auto domain = std::shared_ptr<Domain>(
        new Domain(Chart::spherical(options.radial_map, horizon->center), axes, truncation));
    domain->resolution_ = resolution;
    for (std::size_t n = 0; n < domain->node_count(); ++n) {
      const auto m = domain->multi_index(n);
      NodeTag t = NodeTag::Interior;
      if (m[1] == n_theta) t = NodeTag::Sigma;
      else if (m[0] == 0) t = NodeTag::Horizon;
      else if (m[0] == resolution) t = NodeTag::Outer;
      else if (m[1] == 0) t = NodeTag::Axis;
      domain->tags_[n] = t;
    }
    domain->finalize();
    return domain;
  }

  if (horizon) {
    throw DomainError("a cut-cell approximation of the exact horizon at " + format_point(horizon->center) +
                      " is not allowed; use the spherical half-shell");
  }
  double stretch = options.stretch;
  if (stretch < 0.0) {
    stretch = 0.0;
    for (const Excision& e : metric.excisions()) {
      stretch = std::max({stretch, std::abs(e.center.x()) + e.radius, std::abs(e.center.y()) + e.radius});
    }
  }
  const Chart chart = Chart::cartesian(stretch);
  const double half = chart.from_cartesian(Vec3(truncation, 0.0, 0.0))[0];
  const double h = 2.0 * half / resolution;
  const int nz = std::max(2, static_cast<int>(std::lround(0.5 * resolution)));
  const double height = chart.to_cartesian(Vec3(0.0, 0.0, nz * h)).z();
  for (const Excision& e : metric.excisions()) {
    if (std::abs(e.center.x()) + e.radius >= truncation || std::abs(e.center.y()) + e.radius >= truncation ||
        e.center.z() + e.radius >= height) {
      throw DomainError("truncation " + std::to_string(truncation) + " does not clear the excision at " +
                        format_point(e.center));
    }
    // Coarsest Cartesian spacing over the excision's bounding box.
    const Vec3 far(std::abs(e.center.x()) + e.radius, std::abs(e.center.y()) + e.radius, e.center.z() + e.radius);
    const Mat3 jac = chart.jacobian(chart.from_cartesian(far));
    const double spacing = h * jac.diagonal().maxCoeff();
    if (e.radius < kMinExcisionCells * spacing) {
      throw DomainError("excision at " + format_point(e.center) + " of radius " + std::to_string(e.radius) +
                        " is not resolved at spacing " + std::to_string(spacing));
    }
  }
  std::array<GridAxis, 3> axes{GridAxis{resolution + 1, -half, h, false}, GridAxis{resolution + 1, -half, h, false},
                               GridAxis{nz + 1, 0.0, h, false}};
  auto domain = std::shared_ptr<Domain>(new Domain(chart, axes, truncation));
  domain->resolution_ = resolution;

  if (!metric.excisions().empty()) {
    // Signed distance to the nearest excision surface, positive outside.
    auto psi = [&](const Vec3& y) {
      const Vec3 x = chart.to_cartesian(y);
      double d = std::numeric_limits<double>::infinity();
      for (const Excision& e : metric.excisions()) d = std::min(d, (x - e.center).norm() - e.radius);
      return d;
    };
    domain->fractions_.assign(domain->cell_count(), {});
    parallel_for(domain->cell_count(), [&](std::size_t c) {
      const int i = static_cast<int>(c / (static_cast<std::size_t>(resolution) * nz));
      const int j = static_cast<int>((c / nz) % resolution);
      const int k = static_cast<int>(c % nz);
      const Vec3 lower(axes[0].coord(i), axes[1].coord(j), axes[2].coord(k));
      double value[3][3][3];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int e = 0; e < 3; ++e) value[a][b][e] = psi(lower + 0.5 * h * Vec3(a, b, e));
      for (int o = 0; o < 8; ++o) {
        const int oa = (o >> 2) & 1, ob = (o >> 1) & 1, oe = o & 1;
        double corner[8];
        for (int v = 0; v < 8; ++v) corner[v] = value[oa + ((v >> 2) & 1)][ob + ((v >> 1) & 1)][oe + (v & 1)];
        domain->fractions_[c][o] = detail::positive_fraction(corner);
      }
    });
  }
  for (std::size_t n = 0; n < domain->node_count(); ++n) {
    const auto m = domain->multi_index(n);
    NodeTag t = NodeTag::Interior;
    if (domain->cut_cells() && metric.inside_excision(domain->cartesian_point(n))) t = NodeTag::Horizon;
    else if (m[2] == 0) t = NodeTag::Sigma;
    else if (m[0] == 0 || m[0] == resolution || m[1] == 0 || m[1] == resolution || m[2] == nz) t = NodeTag::Outer;
    domain->tags_[n] = t;
  }
  domain->finalize();
  if (domain->cut_cells()) {
    domain->ghost_.assign(domain->node_count(), 0);
    for (std::size_t n = 0; n < domain->node_count(); ++n) {
      domain->ghost_[n] = domain->tag(n) == NodeTag::Horizon;
    }
  }
  return domain;
}

DiscreteField::DiscreteField(DomainPtr domain, std::vector<double> values, SolveInfo info)
    : domain_(std::move(domain)), values_(std::move(values)), info_(std::move(info)) {
  if (values_.size() != domain_->node_count()) throw DomainError("field size does not match its domain");
}

DiscreteField DiscreteField::sample(DomainPtr domain, const std::function<double(const Vec3&)>& f) {
  std::vector<double> v(domain->node_count(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(v.size(), [&](std::size_t n) {
    if (domain->in_domain(n)) v[n] = f(domain->cartesian_point(n));
  });
  return DiscreteField(std::move(domain), std::move(v));
}

namespace {

struct Stencil {
  std::array<std::pair<int, double>, 4> terms{};
  int size = 0;
  void add(int offset, double weight) { terms[size++] = {offset, weight}; }
};

struct AxisStencils {
  Stencil first;
  Stencil second;
};

AxisStencils axis_stencils(const Domain& d, std::size_t n, int axis, bool allow_ghosts) {
  const double h = d.axis(axis).spacing;
  auto ok = [&](int s) {
    const long m = d.neighbor(n, axis, s);
    return m >= 0 && d.in_domain(static_cast<std::size_t>(m)) && (allow_ghosts || !d.ghost(static_cast<std::size_t>(m)));
  };
  AxisStencils s;
  if (ok(-1) && ok(1)) {
    s.first.add(-1, -0.5 / h);
    s.first.add(1, 0.5 / h);
    s.second.add(-1, 1.0 / (h * h));
    s.second.add(0, -2.0 / (h * h));
    s.second.add(1, 1.0 / (h * h));
    return s;
  }
  for (int dir : {1, -1}) {
    if (ok(dir) && ok(2 * dir)) {
      s.first.add(0, -1.5 * dir / h);
      s.first.add(dir, 2.0 * dir / h);
      s.first.add(2 * dir, -0.5 * dir / h);
      if (ok(3 * dir)) {
        s.second.add(0, 2.0 / (h * h));
        s.second.add(dir, -5.0 / (h * h));
        s.second.add(2 * dir, 4.0 / (h * h));
        s.second.add(3 * dir, -1.0 / (h * h));
      } else {
        s.second.add(0, 1.0 / (h * h));
        s.second.add(dir, -2.0 / (h * h));
        s.second.add(2 * dir, 1.0 / (h * h));
      }
      return s;
    }
  }
  for (int dir : {1, -1}) {
    if (ok(dir)) {
      s.first.add(0, -1.0 * dir / h);
      s.first.add(dir, 1.0 * dir / h);
      return s;  // no second derivative available: left empty (zero)
    }
  }
  if (!allow_ghosts) return axis_stencils(d, n, axis, true);
  throw StencilError("no finite-difference stencil along axis " + std::to_string(axis) + " at " +
                     format_point(d.chart_point(n)));
}

// Ghost nodes only enter where the other nodes admit no stencil.
AxisStencils axis_stencils(const Domain& d, std::size_t n, int axis) { return axis_stencils(d, n, axis, d.ghost(n)); }

double apply(const Domain& d, const std::vector<double>& v, std::size_t n, int axis, const Stencil& s) {
  double out = 0.0;
  for (int t = 0; t < s.size; ++t) {
    const auto [offset, w] = s.terms[t];
    out += w * v[offset == 0 ? n : static_cast<std::size_t>(d.neighbor(n, axis, offset))];
  }
  return out;
}

}  // namespace

Vec3 DiscreteField::derivative(std::size_t n) const {
  const Domain& d = *domain_;
  if (!d.in_domain(n)) throw StencilError("derivative requested at an excised node " + format_point(d.chart_point(n)));
  Vec3 out;
  for (int a = 0; a < 3; ++a) out[a] = apply(d, values_, n, a, axis_stencils(d, n, a).first);
  return out;
}

ScalarJet<double> DiscreteField::jet(std::size_t n) const {
  const Domain& d = *domain_;
  if (!d.in_domain(n)) throw StencilError("jet requested at an excised node " + format_point(d.chart_point(n)));
  ScalarJet<double> out;
  out.value = values_[n];
  std::array<AxisStencils, 3> st;
  for (int a = 0; a < 3; ++a) {
    st[a] = axis_stencils(d, n, a);
    out.d[a] = apply(d, values_, n, a, st[a].first);
    out.d2(a, a) = apply(d, values_, n, a, st[a].second);
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      double mixed = 0.0;
      for (int t = 0; t < st[a].first.size; ++t) {
        const auto [offset, w] = st[a].first.terms[t];
        const std::size_t m = offset == 0 ? n : static_cast<std::size_t>(d.neighbor(n, a, offset));
        mixed += w * apply(d, values_, m, b, axis_stencils(d, m, b).first);
      }
      out.d2(a, b) = out.d2(b, a) = mixed;
    }
  }
  return out;
}

}  // namespace pmt
