#pragma once

#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "pmt/domain.hpp"
#include "pmt/geometry.hpp"

namespace pmt {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Finite-volume discretization of d_a (sqrt(g) g^ab d_b u) = 0 with the
/// boundary data eliminated.
struct LinearSystem {
  DomainPtr domain;
  /// Stiffness over all grid nodes before elimination (rows of excised
  /// nodes are empty). Constants are in its kernel.
  SparseMatrix stiffness;
  /// Reduced symmetric positive definite operator on the unknowns.
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  /// Dirichlet data per node (0 on SIGMA, x3 on OUTER), NaN elsewhere.
  std::vector<double> boundary_values;
};

/// How the diagonal coefficients sqrt(g) g^aa enter the edge weights.
enum class FaceCoefficient {
  /// Geometric mean of the values at the two end nodes of the edge.
  NodeGeometricMean,
  /// Value at the centre of each active cell sharing the edge.
  CellCentre,
  /// Each cell split into octants, evaluated at the octant centres; an edge
  /// collects the two octants of every cell it borders.
  Octant,
};

/// Vertex-centred finite volumes on the domain's cells: each active cell
/// contributes (V / 4 h_a^2) K_aa (u_q - u_p)^2 per edge along axis a, and
/// the off-diagonal part V K_ab D_a D_b with edge-averaged differences D,
/// where K = sqrt(g) g^-1 in chart components and off-diagonal K is taken at
/// the cell centre. Zero flux across HORIZON and AXIS arises naturally.
LinearSystem assemble(const MetricField& metric, DomainPtr domain,
                      FaceCoefficient face = FaceCoefficient::Octant);

struct SolveOptions {
  FaceCoefficient face = FaceCoefficient::Octant;
  double tolerance = 1e-10;  // relative residual ||b - Ax|| / ||b||
  /// Optional starting values for every node; defaults to x3.
  std::vector<double> initial;
};

/// Jacobi-preconditioned conjugate gradients. Throws `ConvergenceError`
/// (carrying the residual history) after
/// max(500, 10 sqrt(N) log(1/tol)) iterations.
DiscreteField solve(const LinearSystem& system, const SolveOptions& options = {});

/// Assemble and solve in one step.
DiscreteField solve_harmonic(const MetricField& metric, DomainPtr domain, const SolveOptions& options = {});

/// Chart-coordinate metric jet at a grid node.
MetricJet<double> node_metric_jet(const MetricField& metric, const Domain& domain, std::size_t n);

/// Max |Delta_g u| over nodes at graph distance >= `margin` from any
/// non-interior node, using finite-difference jets of u.
double residual(const MetricField& metric, const DiscreteField& u, int margin = 2);

/// Min |grad u| over SIGMA nodes (one-sided stencils).
double min_gradient_on_sigma(const MetricField& metric, const DiscreteField& u);

/// Binary dump: 8-byte magic "PMTFIELD", u32 version (1), u32 chart code
/// (0 cartesian, 1 spherical r, 2 spherical log r, 3 sinh-stretched
/// cartesian), u64 nodes[3], f64 start[3], f64 spacing[3], f64 origin[3],
/// f64 stretch length, then nodes[0]*nodes[1]*nodes[2] f64 values
/// with the last axis fastest; all little-endian, NaN on excised nodes. A
/// JSON sidecar `<path>.json` carries tags counts and solver metadata.
void write_field(const DiscreteField& u, const std::string& path);

struct FieldDump {
  int chart_code = 0;
  std::array<std::uint64_t, 3> nodes{};
  Vec3 start = Vec3::Zero();
  Vec3 spacing = Vec3::Zero();
  Vec3 origin = Vec3::Zero();
  double stretch = 0.0;
  std::vector<double> values;
};

FieldDump read_field(const std::string& path);

}  // namespace pmt
