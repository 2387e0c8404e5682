#include "pmt/harmonic_solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "pmt/error.hpp"
#include "pmt/parallel.hpp"

namespace pmt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// K = sqrt(det g) g^-1 in chart components.
Mat3 flux_coefficient(const Mat3& g, const Vec3& where) {
  const double det = g.determinant();
  if (!(det > 0.0)) throw NumericalError("metric is not positive definite at chart point " + format_point(where));
  return std::sqrt(det) * g.inverse();
}

// Lower corners of the (up to four) cells containing the edge from node
// (i, j, k) in direction `axis`.
int active_cells_on_edge(const Domain& d, const std::array<int, 3>& m, int axis) {
  const int b = (axis + 1) % 3, c = (axis + 2) % 3;
  int count = 0;
  for (int ob : {-1, 0}) {
    for (int oc : {-1, 0}) {
      std::array<int, 3> cell = m;
      cell[b] += ob;
      cell[c] += oc;
      bool ok = true;
      for (int e : {b, c}) {
        const GridAxis& ax = d.axis(e);
        if (ax.periodic) {
          cell[e] = (cell[e] + ax.nodes) % ax.nodes;
        } else if (cell[e] < 0 || cell[e] >= ax.cells()) {
          ok = false;
        }
      }
      if (ok && d.cell_active(cell[0], cell[1], cell[2])) ++count;
    }
  }
  return count;
}

}  // namespace

MetricJet<double> node_metric_jet(const MetricField& metric, const Domain& domain, std::size_t n) {
  return chart_jet(metric, domain.chart(), domain.chart_point(n));
}

LinearSystem assemble(const MetricField& metric, DomainPtr domain, FaceCoefficient face) {
  const Domain& d = *domain;
  if (d.cut_cells() && face == FaceCoefficient::NodeGeometricMean) {
    throw DomainError("node geometric-mean coefficients do not support cut cells");
  }
  const std::size_t nodes = d.node_count();
  const std::array<double, 3> h{d.axis(0).spacing, d.axis(1).spacing, d.axis(2).spacing};
  const double volume = d.cell_volume();

  std::vector<Mat3> k_node(nodes, Mat3::Zero());
  parallel_for(nodes, [&](std::size_t n) {
    if (!d.in_domain(n) || face != FaceCoefficient::NodeGeometricMean) return;
    const Vec3 y = d.chart_point(n);
    k_node[n] = flux_coefficient(chart_components(metric, d.chart(), y), y);
  });

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(nodes * 7);
  auto couple = [&](std::size_t p, std::size_t q, double w) {
    triplets.emplace_back(p, p, w);
    triplets.emplace_back(q, q, w);
    triplets.emplace_back(p, q, -w);
    triplets.emplace_back(q, p, -w);
  };

  // Off-diagonal coefficients, per active cell.
  const int c1 = d.axis(1).cells(), c2 = d.axis(2).cells();
  const std::size_t cells = d.cell_count();
  std::vector<Mat3> k_cell(cells, Mat3::Zero());
  std::vector<std::uint8_t> cross(cells, 0);
  const bool cell_diagonal = face == FaceCoefficient::CellCentre;
  const bool octant = face == FaceCoefficient::Octant;
  // Octant mode: weights of the four edges along each axis, indexed by the
  // lower corner's position among the corners with that axis bit clear.
  std::vector<std::array<double, 12>> k_edge(octant ? cells : 0);
  parallel_for(cells, [&](std::size_t c) {
    const int i = static_cast<int>(c / (static_cast<std::size_t>(c1) * c2));
    const int j = static_cast<int>((c / c2) % c1);
    const int k = static_cast<int>(c % c2);
    if (!d.cell_active(i, j, k)) return;
    const Vec3 lower(d.axis(0).coord(i), d.axis(1).coord(j), d.axis(2).coord(k));
    Mat3 kc;
    if (octant) {
      std::array<Mat3, 8> ko;
      kc.setZero();
      for (int o = 0; o < 8; ++o) {
        const Vec3 y = lower + Vec3((o & 4) ? 0.75 * h[0] : 0.25 * h[0], (o & 2) ? 0.75 * h[1] : 0.25 * h[1],
                                    (o & 1) ? 0.75 * h[2] : 0.25 * h[2]);
        const double fraction = d.octant_fraction(c, o);
        ko[o] = Mat3::Zero();
        if (fraction > 0.0) ko[o] = fraction * flux_coefficient(chart_components(metric, d.chart(), y), y);
        kc += ko[o] / 8.0;
      }
      for (int a = 0; a < 3; ++a) {
        const int bit = 4 >> a;
        int e = 0;
        for (int corner = 0; corner < 8; ++corner) {
          if (corner & bit) continue;
          k_edge[c][a * 4 + e++] = (ko[corner](a, a) + ko[corner | bit](a, a)) * volume / (8.0 * h[a] * h[a]);
        }
      }
    } else {
      const Vec3 y = lower + 0.5 * Vec3(h[0], h[1], h[2]);
      double fraction = 0.0;
      for (int o = 0; o < 8; ++o) fraction += d.octant_fraction(c, o) / 8.0;
      kc = fraction * flux_coefficient(chart_components(metric, d.chart(), y), y);
    }
    const double diag = kc.diagonal().cwiseAbs().maxCoeff();
    const double off = std::max({std::abs(kc(0, 1)), std::abs(kc(0, 2)), std::abs(kc(1, 2))});
    if (off > 1e-14 * diag || cell_diagonal) k_cell[c] = kc;
    if (off > 1e-14 * diag) cross[c] = 1;
  });

  if (cell_diagonal || octant) {
    for (std::size_t c = 0; c < cells; ++c) {
      const int i = static_cast<int>(c / (static_cast<std::size_t>(c1) * c2));
      const int j = static_cast<int>((c / c2) % c1);
      const int k = static_cast<int>(c % c2);
      if (!d.cell_active(i, j, k)) continue;
      const auto corners = d.cell_corners(i, j, k);
      for (int a = 0; a < 3; ++a) {
        const int bit = 4 >> a;
        const double w = octant ? 0.0 : k_cell[c](a, a) * volume / (4.0 * h[a] * h[a]);
        int e = 0;
        for (int corner = 0; corner < 8; ++corner) {
          if (corner & bit) continue;
          couple(corners[corner], corners[corner | bit], octant ? k_edge[c][a * 4 + e++] : w);
        }
      }
    }
  } else {
    for (std::size_t p = 0; p < nodes; ++p) {
      if (!d.in_domain(p)) continue;
      const auto m = d.multi_index(p);
      for (int a = 0; a < 3; ++a) {
        const long q = d.neighbor(p, a, 1);
        if (q < 0 || !d.in_domain(static_cast<std::size_t>(q))) continue;
        const int count = active_cells_on_edge(d, m, a);
        if (count == 0) continue;
        const double k = std::sqrt(k_node[p](a, a) * k_node[q](a, a));
        couple(p, static_cast<std::size_t>(q), k * volume / (h[a] * h[a]) * 0.25 * count);
      }
    }
  }
  for (std::size_t c = 0; c < cells; ++c) {
    if (!cross[c]) continue;
    const int i = static_cast<int>(c / (static_cast<std::size_t>(c1) * c2));
    const int j = static_cast<int>((c / c2) % c1);
    const int k = static_cast<int>(c % c2);
    const auto corners = d.cell_corners(i, j, k);
    // d_a: edge-averaged difference operator along axis a (corner bit of
    // axis a is 4, 2, 1 for a = 0, 1, 2).
    std::array<Eigen::Matrix<double, 8, 1>, 3> grad;
    for (int a = 0; a < 3; ++a) {
      const int bit = 4 >> a;
      grad[a].setZero();
      for (int corner = 0; corner < 8; ++corner) {
        grad[a][corner] = ((corner & bit) ? 1.0 : -1.0) / (4.0 * h[a]);
      }
    }
    Eigen::Matrix<double, 8, 8> local = Eigen::Matrix<double, 8, 8>::Zero();
    for (int a = 0; a < 3; ++a) {
      for (int b = a + 1; b < 3; ++b) {
        local += volume * k_cell[c](a, b) * (grad[a] * grad[b].transpose() + grad[b] * grad[a].transpose());
      }
    }
    for (int r = 0; r < 8; ++r) {
      for (int s = 0; s < 8; ++s) {
        if (local(r, s) != 0.0) triplets.emplace_back(corners[r], corners[s], local(r, s));
      }
    }
  }

  LinearSystem out;
  out.domain = domain;
  out.stiffness.resize(static_cast<Eigen::Index>(nodes), static_cast<Eigen::Index>(nodes));
  out.stiffness.setFromTriplets(triplets.begin(), triplets.end());
  triplets.clear();
  triplets.shrink_to_fit();

  out.boundary_values.assign(nodes, kNaN);
  for (std::size_t n = 0; n < nodes; ++n) {
    if (d.tag(n) == NodeTag::Sigma) out.boundary_values[n] = 0.0;
    if (d.tag(n) == NodeTag::Outer) out.boundary_values[n] = d.cartesian_point(n).z();
  }

  const Eigen::Index unknowns = static_cast<Eigen::Index>(d.unknown_count());
  out.rhs = Eigen::VectorXd::Zero(unknowns);
  std::vector<Eigen::Triplet<double>> reduced;
  reduced.reserve(static_cast<std::size_t>(out.stiffness.nonZeros()));
  for (Eigen::Index row = 0; row < out.stiffness.outerSize(); ++row) {
    const long ur = d.unknown(static_cast<std::size_t>(row));
    if (ur < 0) continue;
    for (SparseMatrix::InnerIterator it(out.stiffness, row); it; ++it) {
      const long uc = d.unknown(static_cast<std::size_t>(it.col()));
      if (uc >= 0) {
        reduced.emplace_back(ur, uc, it.value());
      } else {
        out.rhs[ur] -= it.value() * out.boundary_values[static_cast<std::size_t>(it.col())];
      }
    }
  }
  out.matrix.resize(unknowns, unknowns);
  out.matrix.setFromTriplets(reduced.begin(), reduced.end());
  return out;
}

namespace {

double dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return deterministic_sum(static_cast<std::size_t>(a.size()),
                           [&](std::size_t i) { return a[static_cast<Eigen::Index>(i)] * b[static_cast<Eigen::Index>(i)]; });
}

}  // namespace

DiscreteField solve(const LinearSystem& system, const SolveOptions& options) {
  if (!(options.tolerance > 0.0 && options.tolerance < 1.0)) {
    throw DomainError("solver tolerance must lie in (0, 1)");
  }
  const Domain& d = *system.domain;
  const Eigen::Index n = system.matrix.rows();
  if (!options.initial.empty() && options.initial.size() != d.node_count()) {
    throw DomainError("initial guess does not match the domain");
  }

  Eigen::VectorXd x(n);
  for (std::size_t p = 0; p < d.node_count(); ++p) {
    const long u = d.unknown(p);
    if (u >= 0) x[u] = options.initial.empty() ? d.cartesian_point(p).z() : options.initial[p];
  }
  const Eigen::VectorXd inv_diag = system.matrix.diagonal().cwiseInverse();

  SolveInfo info;
  const double b_norm = std::sqrt(dot(system.rhs, system.rhs));
  Eigen::VectorXd r = system.rhs - system.matrix * x;
  double r_norm = std::sqrt(dot(r, r));
  const double scale = b_norm > 0.0 ? b_norm : 1.0;
  info.history.push_back(r_norm / scale);

  const double cap_f = std::max(500.0, 10.0 * std::sqrt(static_cast<double>(n)) * std::log(1.0 / options.tolerance));
  const int cap = static_cast<int>(std::min(cap_f, 1e9));
  if (n > 0 && r_norm / scale > options.tolerance) {
    Eigen::VectorXd z = inv_diag.cwiseProduct(r);
    Eigen::VectorXd p = z;
    double rz = dot(r, z);
    Eigen::VectorXd ap(n);
    int it = 0;
    while (true) {
      if (it >= cap) {
        throw ConvergenceError("conjugate gradients did not reach relative residual " +
                                   std::to_string(options.tolerance) + " in " + std::to_string(cap) +
                                   " iterations (last " + std::to_string(info.history.back()) + ")",
                               info.history);
      }
      ap.noalias() = system.matrix * p;
      const double pap = dot(p, ap);
      if (!(pap > 0.0)) throw NumericalError("operator is not positive definite (p.Ap = " + std::to_string(pap) + ")");
      const double alpha = rz / pap;
      x += alpha * p;
      r -= alpha * ap;
      ++it;
      r_norm = std::sqrt(dot(r, r));
      info.history.push_back(r_norm / scale);
      if (r_norm / scale <= options.tolerance) break;
      z = inv_diag.cwiseProduct(r);
      const double rz_next = dot(r, z);
      p = z + (rz_next / rz) * p;
      rz = rz_next;
    }
    info.iterations = it;
    // Report the true residual, not the recursively updated one.
    const Eigen::VectorXd true_r = system.rhs - system.matrix * x;
    info.relative_residual = std::sqrt(dot(true_r, true_r)) / scale;
  } else {
    info.relative_residual = r_norm / scale;
  }

  std::vector<double> values(d.node_count(), kNaN);
  for (std::size_t q = 0; q < d.node_count(); ++q) {
    const long u = d.unknown(q);
    if (u >= 0) values[q] = x[u];
    else if (d.in_domain(q)) values[q] = system.boundary_values[q];
  }
  return DiscreteField(system.domain, std::move(values), std::move(info));
}

DiscreteField solve_harmonic(const MetricField& metric, DomainPtr domain, const SolveOptions& options) {
  return solve(assemble(metric, std::move(domain), options.face), options);
}

double residual(const MetricField& metric, const DiscreteField& u, int margin) {
  const Domain& d = u.domain();
  std::vector<double> local(d.node_count(), 0.0);
  parallel_for(d.node_count(), [&](std::size_t n) {
    if (!d.in_domain(n) || d.boundary_distance(n) < margin) return;
    const MetricJet<double> jet = node_metric_jet(metric, d, n);
    local[n] = std::abs(laplacian(frame(jet), u.jet(n)));
  });
  double worst = 0.0;
  for (double v : local) worst = std::max(worst, v);
  return worst;
}

double min_gradient_on_sigma(const MetricField& metric, const DiscreteField& u) {
  const Domain& d = u.domain();
  std::vector<double> local(d.node_count(), std::numeric_limits<double>::infinity());
  parallel_for(d.node_count(), [&](std::size_t n) {
    if (d.tag(n) != NodeTag::Sigma) return;
    const MetricJet<double> jet = node_metric_jet(metric, d, n);
    local[n] = gradient(frame(jet), u.jet(n)).norm;
  });
  double best = std::numeric_limits<double>::infinity();
  for (double v : local) best = std::min(best, v);
  return best;
}

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw Error("truncated field dump");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

int chart_code(const Chart& c) {
  if (c.kind() == ChartKind::Cartesian) return c.stretch() > 0.0 ? 3 : 0;
  return c.radial_map() == RadialMap::Linear ? 1 : 2;
}

constexpr char kMagic[8] = {'P', 'M', 'T', 'F', 'I', 'E', 'L', 'D'};

}  // namespace

void write_field(const DiscreteField& u, const std::string& path) {
  const Domain& d = u.domain();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(kMagic, 8);
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(chart_code(d.chart())));
  for (int a = 0; a < 3; ++a) put<std::uint64_t>(out, static_cast<std::uint64_t>(d.axis(a).nodes));
  for (int a = 0; a < 3; ++a) put<double>(out, d.axis(a).start);
  for (int a = 0; a < 3; ++a) put<double>(out, d.axis(a).spacing);
  for (int a = 0; a < 3; ++a) put<double>(out, d.chart().origin()[a]);
  put<double>(out, d.chart().stretch());
  for (double v : u.values()) put<double>(out, v);
  if (!out) throw Error("failed writing " + path);

  nlohmann::json meta;
  meta["format"] = "PMTFIELD";
  meta["version"] = 1;
  meta["layout"] = "little-endian float64, index (i * n1 + j) * n2 + k, last axis fastest, NaN on excised nodes";
  meta["chart"] = d.chart().kind() == ChartKind::Cartesian ? "cartesian" : "spherical";
  meta["radial_map"] = d.chart().radial_map() == RadialMap::Log ? "log" : "linear";
  meta["stretch"] = d.chart().stretch();
  for (int a = 0; a < 3; ++a) {
    meta["axes"].push_back({{"nodes", d.axis(a).nodes},
                            {"start", d.axis(a).start},
                            {"spacing", d.axis(a).spacing},
                            {"periodic", d.axis(a).periodic}});
  }
  meta["truncation"] = d.truncation();
  meta["resolution"] = d.resolution();
  for (NodeTag t : {NodeTag::Interior, NodeTag::Sigma, NodeTag::Outer, NodeTag::Horizon, NodeTag::Axis,
                    NodeTag::Excised}) {
    meta["tag_counts"][to_string(t)] = d.count(t);
  }
  meta["solver"] = {{"iterations", u.info().iterations}, {"relative_residual", u.info().relative_residual}};
  std::ofstream side(path + ".json");
  if (!side) throw Error("cannot open " + path + ".json for writing");
  side << meta.dump(2) << "\n";
}

FieldDump read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw Error(path + " is not a field dump");
  if (get<std::uint32_t>(in) != 1) throw Error(path + ": unsupported dump version");
  FieldDump dump;
  dump.chart_code = static_cast<int>(get<std::uint32_t>(in));
  for (int a = 0; a < 3; ++a) dump.nodes[a] = get<std::uint64_t>(in);
  for (int a = 0; a < 3; ++a) dump.start[a] = get<double>(in);
  for (int a = 0; a < 3; ++a) dump.spacing[a] = get<double>(in);
  for (int a = 0; a < 3; ++a) dump.origin[a] = get<double>(in);
  dump.stretch = get<double>(in);
  const std::uint64_t count = dump.nodes[0] * dump.nodes[1] * dump.nodes[2];
  dump.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) dump.values[i] = get<double>(in);
  return dump;
}

}  // namespace pmt
