#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pmt/chart.hpp"
#include "pmt/metric_zoo.hpp"

namespace pmt {

enum class NodeTag : std::uint8_t {
  Interior,
  Sigma,    // boundary plane, Dirichlet u = 0
  Outer,    // truncation surface, Dirichlet u = x3
  Horizon,  // excision surface, zero flux
  Axis,     // edge of the omitted polar cone of the spherical chart, zero flux
  Excised,  // not part of the domain
};

std::string to_string(NodeTag tag);

/// Uniform grid along one chart coordinate.
struct GridAxis {
  int nodes = 0;
  double start = 0.0;
  double spacing = 0.0;
  bool periodic = false;

  double coord(int i) const { return start + spacing * i; }
  int cells() const { return periodic ? nodes : nodes - 1; }
};

enum class ChartChoice { Automatic, Cartesian, Spherical };

struct DomainOptions {
  ChartChoice chart = ChartChoice::Automatic;
  RadialMap radial_map = RadialMap::Log;
  /// Stretch length of the Cartesian chart; 0 gives a uniform box, negative
  /// picks one from the excisions (uniform when there are none).
  double stretch = -1.0;
};

/// Truncated computational region with tagged nodes.
///
/// Cartesian half-box: x1, x2 in [-A, A], x3 in [0, A] with n x n x n/2
/// cells, cubic in chart coordinates (uniform, or sinh-stretched). Spherical half-shell about the single on-boundary excision:
/// radial coordinate over [r_in, A] with n cells, theta in [theta_min, pi/2]
/// with round(3n/4) cells, azimuth periodic with round(3n/2) nodes.
///
/// Node (i, j, k) has linear index (i * n1 + j) * n2 + k (last axis fastest).
class Domain {
 public:
  Domain(Chart chart, std::array<GridAxis, 3> axes, double truncation);

  const Chart& chart() const { return chart_; }
  const std::array<GridAxis, 3>& axes() const { return axes_; }
  const GridAxis& axis(int a) const { return axes_[a]; }
  double truncation() const { return truncation_; }
  int resolution() const { return resolution_; }

  std::size_t node_count() const { return tags_.size(); }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * axes_[1].nodes + j) * axes_[2].nodes + k;
  }
  std::array<int, 3> multi_index(std::size_t n) const;
  /// Neighbor along `axis` at offset `step`; -1 if outside the grid.
  long neighbor(std::size_t n, int axis, int step) const;

  NodeTag tag(std::size_t n) const { return tags_[n]; }
  bool in_domain(std::size_t n) const { return tags_[n] != NodeTag::Excised; }
  bool dirichlet(std::size_t n) const { return tags_[n] == NodeTag::Sigma || tags_[n] == NodeTag::Outer; }
  /// Position in the reduced unknown vector, or -1 for Dirichlet/excised nodes.
  long unknown(std::size_t n) const { return unknown_[n]; }
  std::size_t unknown_count() const { return unknown_count_; }
  std::size_t count(NodeTag tag) const;

  Vec3 chart_point(std::size_t n) const;
  Vec3 cartesian_point(std::size_t n) const { return chart_.to_cartesian(chart_point(n)); }

  /// Cells are indexed by their lower corner; a cell is active iff all eight
  /// corners are in the domain and some part of it lies outside the
  /// excisions.
  std::size_t cell_count() const;
  std::size_t cell_index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * axes_[1].cells() + j) * axes_[2].cells() + k;
  }
  std::array<std::size_t, 8> cell_corners(int i, int j, int k) const;
  bool cell_active(int i, int j, int k) const;
  /// Chart-volume fraction of octant `octant` (numbered like the corners) of
  /// a cell lying outside every excision; 1 unless the domain has cut cells.
  double octant_fraction(std::size_t cell, int octant) const {
    return fractions_.empty() ? 1.0 : fractions_[cell][octant];
  }
  /// True when all eight octants of the cell lie outside the excisions.
  bool cell_uncut(std::size_t cell) const;
  double cell_volume() const { return axes_[0].spacing * axes_[1].spacing * axes_[2].spacing; }

  /// Chart axis whose level set {y_axis = const} is Sigma and the sign that
  /// turns grad(y_axis) into the outward normal.
  int sigma_axis() const { return chart_.kind() == ChartKind::Cartesian ? 2 : 1; }
  int sigma_sign() const { return chart_.kind() == ChartKind::Cartesian ? -1 : +1; }

  /// True when excisions cut through box cells (multi-bubble data). HORIZON
  /// nodes are then the in-domain nodes inside an excision; they carry the
  /// continuation of u and close the cut-cell scheme.
  bool cut_cells() const { return !fractions_.empty(); }
  /// In-domain node inside an excision (cut-cell continuation only). Finite
  /// differences at other nodes do not reach into ghosts.
  bool ghost(std::size_t n) const { return !ghost_.empty() && ghost_[n]; }

  /// Graph distance (26-neighborhood) to the nearest non-interior node.
  int boundary_distance(std::size_t n) const;

  std::string describe() const;

 private:
  friend std::shared_ptr<const Domain> build_domain(const MetricField&, int, double, const DomainOptions&);
  void finalize();

  Chart chart_;
  std::array<GridAxis, 3> axes_;
  double truncation_;
  int resolution_ = 0;
  std::vector<std::array<double, 8>> fractions_;
  std::vector<std::uint8_t> ghost_;
  std::vector<NodeTag> tags_;
  std::vector<long> unknown_;
  std::size_t unknown_count_ = 0;
  std::vector<int> distance_;
};

using DomainPtr = std::shared_ptr<const Domain>;

/// `resolution` is the number of cells along the primary axis (>= 8);
/// `truncation` is the half-width A of the box or the outer radius of the
/// shell. The chart defaults to the shell when the metric has exactly one
/// excision centered on Sigma that is not flagged approximate.
DomainPtr build_domain(const MetricField& metric, int resolution, double truncation,
                       const DomainOptions& options = {});

/// Nodal values of a scalar on a domain; NaN on excised nodes.
struct SolveInfo {
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<double> history;
};

class DiscreteField {
 public:
  DiscreteField(DomainPtr domain, std::vector<double> values, SolveInfo info = {});

  /// Samples `f` (a function of the Cartesian point) on all in-domain nodes.
  static DiscreteField sample(DomainPtr domain, const std::function<double(const Vec3&)>& f);

  const Domain& domain() const { return *domain_; }
  const DomainPtr& domain_ptr() const { return domain_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t n) const { return values_[n]; }
  const SolveInfo& info() const { return info_; }

  /// Chart-coordinate value, gradient and Hessian at a node by finite
  /// differences: centered where both neighbors exist, second-order one-sided
  /// otherwise, first-order as a last resort. Throws `StencilError` when an
  /// axis has no usable neighbor.
  ScalarJet<double> jet(std::size_t n) const;
  /// First derivatives only, with the same stencil rules.
  Vec3 derivative(std::size_t n) const;

 private:
  DomainPtr domain_;
  std::vector<double> values_;
  SolveInfo info_;
};

}  // namespace pmt
