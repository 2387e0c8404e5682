#include "pmt/harness.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pmt/error.hpp"
#include "pmt/parallel.hpp"

#ifndef PMT_VERSION
#define PMT_VERSION "0.0.0"
#endif

namespace pmt {

using json = nlohmann::ordered_json;

std::string toolkit_version() { return PMT_VERSION; }

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::MassStudy:
      return "mass-study";
    case ExperimentKind::SolverConvergence:
      return "solver-convergence";
    case ExperimentKind::Inequality:
      return "inequality";
    case ExperimentKind::FullSuite:
      return "full-suite";
  }
  return "unknown";
}

MetricPtr make_metric(const MetricSpec& spec) {
  if (spec.family == "flat") return make_flat();
  if (spec.family == "half-schwarzschild") return make_half_schwarzschild(spec.mass);
  if (spec.family == "conformal") return make_conformal_superposition({spec.bubbles, spec.mirror});
  if (spec.family == "perturbed-flat") return make_perturbed_flat(spec.amplitude, spec.tau, spec.seed);
  if (spec.family == "rescaled") {
    if (!spec.base) throw DomainError("rescaled: missing base metric");
    return make_rescaled(make_metric(*spec.base), spec.lambda);
  }
  throw DomainError("unknown metric family '" + spec.family + "'");
}

std::vector<MetricFamilyInfo> metric_families() {
  return {
      {"flat", "(none)", "Euclidean half-space; mass 0"},
      {"half-schwarzschild", "m > 0", "phi^4 delta with phi = 1 + m/2r, horizon hemisphere r = m/2; mass m/2"},
      {"conformal", "bubbles: [{m, center: [x1, x2, x3]}], mirror: bool",
       "phi = 1 + sum m_i / 2|x - p_i|, centers mirrored across x3 = 0; R = H = 0"},
      {"perturbed-flat", "amplitude, tau, seed", "delta plus seeded decaying profiles; energy conditions not enforced"},
      {"rescaled", "lambda > 0, base: {metric}", "homothety lambda^2 g in the coordinates y = lambda x"},
  };
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line; }

[[noreturn]] void fail(const YAML::Node& n, const std::string& what) { throw ConfigError(what, line_of(n)); }

void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) {
  if (!map.IsMap()) fail(map, where + ": expected a mapping");
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(kv.first, where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) fail(n, "field '" + field + "': expected a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    fail(n, "field '" + field + "': cannot convert '" + n.Scalar() + "'");
  }
}

template <typename T>
std::vector<T> get_list(const YAML::Node& n, const std::string& field) {
  if (!n.IsSequence()) fail(n, "field '" + field + "': expected a list");
  std::vector<T> out;
  for (const auto& item : n) out.push_back(get<T>(item, field));
  return out;
}

template <typename T>
void require_increasing(const YAML::Node& n, const std::vector<T>& v, const std::string& field, bool allow_empty) {
  if (v.empty() && !allow_empty) fail(n, "field '" + field + "': ladder is empty");
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) fail(n, "field '" + field + "': ladder is not strictly increasing");
  }
}

Vec3 get_point(const YAML::Node& n, const std::string& field) {
  const auto v = get_list<double>(n, field);
  if (v.size() != 3) fail(n, "field '" + field + "': expected three coordinates");
  return Vec3(v[0], v[1], v[2]);
}

MetricSpec parse_metric(const YAML::Node& n) {
  if (!n.IsMap()) fail(n, "metric: expected a mapping");
  if (!n["family"]) fail(n, "metric: missing 'family'");
  MetricSpec spec;
  spec.family = get<std::string>(n["family"], "metric.family");
  if (spec.family == "flat") {
    check_keys(n, {"family"}, "metric");
  } else if (spec.family == "half-schwarzschild") {
    check_keys(n, {"family", "m"}, "metric");
    if (n["m"]) spec.mass = get<double>(n["m"], "metric.m");
  } else if (spec.family == "conformal") {
    check_keys(n, {"family", "bubbles", "mirror"}, "metric");
    if (!n["bubbles"] || !n["bubbles"].IsSequence()) fail(n, "metric.bubbles: expected a list");
    for (const auto& b : n["bubbles"]) {
      check_keys(b, {"m", "center"}, "metric.bubbles");
      if (!b["m"] || !b["center"]) fail(b, "metric.bubbles: each bubble needs 'm' and 'center'");
      spec.bubbles.push_back({get<double>(b["m"], "metric.bubbles.m"), get_point(b["center"], "metric.bubbles.center")});
    }
    if (n["mirror"]) spec.mirror = get<bool>(n["mirror"], "metric.mirror");
  } else if (spec.family == "perturbed-flat") {
    check_keys(n, {"family", "amplitude", "tau", "seed"}, "metric");
    if (n["amplitude"]) spec.amplitude = get<double>(n["amplitude"], "metric.amplitude");
    if (n["tau"]) spec.tau = get<double>(n["tau"], "metric.tau");
    if (n["seed"]) spec.seed = get<std::uint64_t>(n["seed"], "metric.seed");
  } else if (spec.family == "rescaled") {
    check_keys(n, {"family", "lambda", "base"}, "metric");
    if (n["lambda"]) spec.lambda = get<double>(n["lambda"], "metric.lambda");
    if (!n["base"]) fail(n, "metric: rescaled needs a 'base' metric");
    spec.base = std::make_shared<MetricSpec>(parse_metric(n["base"]));
  } else {
    fail(n["family"], "metric.family: unknown family '" + spec.family + "'");
  }
  try {
    make_metric(spec);
  } catch (const DomainError& e) {
    fail(n, std::string("metric: ") + e.what());
  }
  return spec;
}

ExperimentKind parse_kind(const YAML::Node& n) {
  const std::string s = get<std::string>(n, "kind");
  for (ExperimentKind k : {ExperimentKind::MassStudy, ExperimentKind::SolverConvergence, ExperimentKind::Inequality,
                           ExperimentKind::FullSuite}) {
    if (to_string(k) == s) return k;
  }
  fail(n, "field 'kind': expected mass-study, solver-convergence, inequality or full-suite, got '" + s + "'");
}

void parse_tolerances(const YAML::Node& n, Tolerances& t) {
  check_keys(n, {"mass", "finite_radius", "exhaustion", "residual_order", "min_gradient_stability", "identity_order",
                 "coarea", "budget_fraction", "derivative_order", "trace_defect", "flat_mass", "flat_integrals",
                 "flat_solution", "scale_mass", "scale_rhs"},
             "tolerances");
  auto set = [&](const char* key, double& field) {
    if (n[key]) field = get<double>(n[key], std::string("tolerances.") + key);
  };
  set("mass", t.mass);
  set("finite_radius", t.finite_radius);
  if (n["exhaustion"]) {
    if (n["exhaustion"].IsScalar() && n["exhaustion"].Scalar() == "fit") {
      t.exhaustion.reset();
    } else {
      t.exhaustion = get<double>(n["exhaustion"], "tolerances.exhaustion");
    }
  }
  set("residual_order", t.residual_order);
  set("min_gradient_stability", t.min_gradient_stability);
  set("identity_order", t.identity_order);
  set("coarea", t.coarea);
  set("budget_fraction", t.budget_fraction);
  set("derivative_order", t.derivative_order);
  set("trace_defect", t.trace_defect);
  set("flat_mass", t.flat_mass);
  set("flat_integrals", t.flat_integrals);
  set("flat_solution", t.flat_solution);
  set("scale_mass", t.scale_mass);
  set("scale_rhs", t.scale_rhs);
}

void parse_domain(const YAML::Node& n, DomainOptions& d) {
  check_keys(n, {"chart", "radial_map", "stretch"}, "domain");
  if (n["chart"]) {
    const std::string s = get<std::string>(n["chart"], "domain.chart");
    if (s == "automatic") {
      d.chart = ChartChoice::Automatic;
    } else if (s == "cartesian") {
      d.chart = ChartChoice::Cartesian;
    } else if (s == "spherical") {
      d.chart = ChartChoice::Spherical;
    } else {
      fail(n["chart"], "domain.chart: expected automatic, cartesian or spherical");
    }
  }
  if (n["radial_map"]) {
    const std::string s = get<std::string>(n["radial_map"], "domain.radial_map");
    if (s == "log") {
      d.radial_map = RadialMap::Log;
    } else if (s == "linear") {
      d.radial_map = RadialMap::Linear;
    } else {
      fail(n["radial_map"], "domain.radial_map: expected log or linear");
    }
  }
  if (n["stretch"]) d.stretch = get<double>(n["stretch"], "domain.stretch");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line);
  }
  if (!root.IsMap()) throw ConfigError("config: expected a mapping at the top level");
  check_keys(root,
             {"name", "kind", "metric", "resolutions", "truncations", "radii", "shapes", "panels", "solver", "domain",
              "output", "seed", "samples", "levels", "expected_mass", "scale_lambda", "tolerances"},
             "config");

  ExperimentConfig c;
  if (root["name"]) c.name = get<std::string>(root["name"], "name");
  if (!root["kind"]) throw ConfigError("config: missing 'kind'");
  c.kind = parse_kind(root["kind"]);
  if (!root["metric"]) throw ConfigError("config: missing 'metric'");
  c.metric = parse_metric(root["metric"]);

  if (root["resolutions"]) {
    c.resolutions = get_list<int>(root["resolutions"], "resolutions");
    require_increasing(root["resolutions"], c.resolutions, "resolutions", false);
    if (c.resolutions.front() < 8) fail(root["resolutions"], "field 'resolutions': entries must be >= 8");
  }
  if (root["truncations"]) {
    c.truncations = get_list<double>(root["truncations"], "truncations");
    require_increasing(root["truncations"], c.truncations, "truncations", false);
    if (c.truncations.front() <= 0.0) fail(root["truncations"], "field 'truncations': entries must be positive");
  }
  if (root["radii"]) {
    c.radii = get_list<double>(root["radii"], "radii");
    require_increasing(root["radii"], c.radii, "radii", false);
    if (c.radii.size() < 3) fail(root["radii"], "field 'radii': the extrapolation needs at least three radii");
  }
  if (root["shapes"]) {
    c.shapes.clear();
    for (const auto& s : root["shapes"]) {
      try {
        c.shapes.push_back(exhaustion_shape_from_string(get<std::string>(s, "shapes")));
      } catch (const DomainError& e) {
        fail(s, std::string("field 'shapes': ") + e.what());
      }
    }
    if (c.shapes.empty()) fail(root["shapes"], "field 'shapes': list is empty");
  }
  if (root["panels"]) {
    c.panels = get<int>(root["panels"], "panels");
    if (c.panels < 4) fail(root["panels"], "field 'panels': must be >= 4");
  }
  if (root["solver"]) {
    check_keys(root["solver"], {"tolerance"}, "solver");
    if (root["solver"]["tolerance"]) {
      c.solver_tolerance = get<double>(root["solver"]["tolerance"], "solver.tolerance");
      if (!(c.solver_tolerance > 0.0 && c.solver_tolerance < 1.0)) {
        fail(root["solver"]["tolerance"], "solver.tolerance: must lie in (0, 1)");
      }
    }
  }
  if (root["domain"]) parse_domain(root["domain"], c.domain);
  if (root["output"]) c.output = get<std::string>(root["output"], "output");
  if (root["seed"]) c.seed = get<std::uint64_t>(root["seed"], "seed");
  if (root["samples"]) {
    check_keys(root["samples"], {"random_points", "derivative_points"}, "samples");
    if (root["samples"]["random_points"]) {
      c.random_points = get<int>(root["samples"]["random_points"], "samples.random_points");
    }
    if (root["samples"]["derivative_points"]) {
      c.derivative_points = get<int>(root["samples"]["derivative_points"], "samples.derivative_points");
      if (c.derivative_points < 1) fail(root["samples"]["derivative_points"], "samples.derivative_points: must be >= 1");
    }
  }
  if (root["levels"]) c.levels = get_list<double>(root["levels"], "levels");
  if (root["expected_mass"]) c.expected_mass = get<double>(root["expected_mass"], "expected_mass");
  if (root["scale_lambda"]) {
    c.scale_lambda = get<double>(root["scale_lambda"], "scale_lambda");
    if (c.scale_lambda < 0.0) fail(root["scale_lambda"], "field 'scale_lambda': must be >= 0");
  }
  if (root["tolerances"]) parse_tolerances(root["tolerances"], c.tolerances);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string describe_config_schema() {
  return R"(# Experiment config (YAML). Every key except kind and metric is optional.
name: experiment              # label echoed into the record
kind: full-suite              # mass-study | solver-convergence | inequality | full-suite
metric:
  family: half-schwarzschild  # see list-metrics
  m: 1.0
resolutions: [16, 32, 64]     # cells along the primary axis, strictly increasing, >= 8
truncations: [50.0]           # box half-width or shell outer radius, strictly increasing
radii: []                     # mass ladder; empty picks r0 2^k clearing every excision
shapes: [hemisphere]          # hemisphere | sphere | half-cylinder
panels: 96                    # quadrature panels along the non-periodic surface direction
solver:
  tolerance: 1.0e-10          # relative residual of the conjugate-gradient solve
domain:
  chart: automatic            # automatic | cartesian | spherical
  radial_map: log             # log | linear (spherical chart)
  stretch: -1                 # sinh stretch length of the box; negative picks one from the excisions
output: pmt-out               # directory for record.jsonl, report.txt and tables
seed: 1                       # random sampling seed
samples:
  random_points: 10000        # energy-condition sample size beyond the grid nodes
  derivative_points: 1000     # points for the analytic-vs-finite-difference check
levels: [0.1, 1.0, 5.0]       # level values for the connectedness diagnostic
expected_mass: null           # reference mass for the mass-oracle verdict
scale_lambda: 0               # > 0 adds the x -> lambda x covariance run
tolerances:
  mass: 5.0e-4                # |mass - expected_mass|
  finite_radius: 1.0e-6       # half-schwarzschild hemisphere flux vs m (1 + m/2r)^3 / 2
  exhaustion: 1.0e-3          # hemisphere vs half-cylinder; "fit" uses the summed fit uncertainties
  residual_order: 1.8         # observed order of max |Delta u| over the three finest resolutions
  min_gradient_stability: 0.02
  identity_order: 1.0
  coarea: 0.02                # worst isosurface vs slab mismatch at the finest resolution
  budget_fraction: 0.05       # tol_total < fraction * mass
  derivative_order: 1.9
  trace_defect: 1.0e-10
  flat_mass: 1.0e-8
  flat_integrals: 1.0e-10
  flat_solution: 1.0e-8       # max |u - x3| for the flat metric
  scale_mass: 1.0e-3          # |mass(lambda g) - lambda mass(g)|
  scale_rhs: 0.05             # relative change of (B + S) / lambda
)";
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double as_double(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

json to_json(const MetricSpec& m) {
  json j;
  j["family"] = m.family;
  if (m.family == "half-schwarzschild") j["m"] = m.mass;
  if (m.family == "conformal") {
    j["bubbles"] = json::array();
    for (const Bubble& b : m.bubbles) {
      j["bubbles"].push_back({{"m", b.mass}, {"center", {b.center.x(), b.center.y(), b.center.z()}}});
    }
    j["mirror"] = m.mirror;
  }
  if (m.family == "perturbed-flat") {
    j["amplitude"] = m.amplitude;
    j["tau"] = m.tau;
    j["seed"] = m.seed;
  }
  if (m.family == "rescaled") {
    j["lambda"] = m.lambda;
    if (m.base) j["base"] = to_json(*m.base);
  }
  return j;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["kind"] = to_string(c.kind);
  j["metric"] = to_json(c.metric);
  j["resolutions"] = c.resolutions;
  j["truncations"] = c.truncations;
  j["radii"] = c.radii;
  j["shapes"] = json::array();
  for (ExhaustionShape s : c.shapes) j["shapes"].push_back(to_string(s));
  j["panels"] = c.panels;
  j["solver"] = {{"tolerance", c.solver_tolerance}};
  const char* chart = c.domain.chart == ChartChoice::Automatic   ? "automatic"
                      : c.domain.chart == ChartChoice::Cartesian ? "cartesian"
                                                                 : "spherical";
  j["domain"] = {{"chart", chart},
                 {"radial_map", c.domain.radial_map == RadialMap::Log ? "log" : "linear"},
                 {"stretch", c.domain.stretch}};
  j["output"] = c.output;
  j["seed"] = c.seed;
  j["samples"] = {{"random_points", c.random_points}, {"derivative_points", c.derivative_points}};
  j["levels"] = c.levels;
  j["expected_mass"] = c.expected_mass ? json(*c.expected_mass) : json(nullptr);
  j["scale_lambda"] = c.scale_lambda;
  const Tolerances& t = c.tolerances;
  j["tolerances"] = {{"mass", t.mass},
                     {"finite_radius", t.finite_radius},
                     {"exhaustion", t.exhaustion ? json(*t.exhaustion) : json("fit")},
                     {"residual_order", t.residual_order},
                     {"min_gradient_stability", t.min_gradient_stability},
                     {"identity_order", t.identity_order},
                     {"coarea", t.coarea},
                     {"budget_fraction", t.budget_fraction},
                     {"derivative_order", t.derivative_order},
                     {"trace_defect", t.trace_defect},
                     {"flat_mass", t.flat_mass},
                     {"flat_integrals", t.flat_integrals},
                     {"flat_solution", t.flat_solution},
                     {"scale_mass", t.scale_mass},
                     {"scale_rhs", t.scale_rhs}};
  return j;
}

json to_json(const FitResult& f) {
  return {{"mass", number(f.mass)},       {"exponent", number(f.exponent)}, {"coefficient", number(f.coefficient)},
          {"residual", number(f.residual)}, {"uncertainty", number(f.uncertainty)}, {"converged", f.converged},
          {"note", f.note}};
}

json to_json(const MassReport& r) {
  json samples = json::array();
  for (const auto& [radius, value] : r.samples) samples.push_back({radius, number(value)});
  return {{"shape", to_string(r.shape)}, {"samples", samples}, {"fit", to_json(r.fit)}};
}

json to_json(const std::vector<LevelComponents>& levels) {
  json out = json::array();
  for (const LevelComponents& l : levels) out.push_back({{"t", l.t}, {"components", l.components}, {"touching", l.touching}});
  return out;
}

json to_json(const ResolutionSample& s) {
  return {{"resolution", s.resolution},
          {"truncation", s.truncation},
          {"nodes", s.nodes},
          {"iterations", s.iterations},
          {"relative_residual", number(s.relative_residual)},
          {"residual", number(s.residual)},
          {"min_gradient", number(s.min_gradient)},
          {"identity", number(s.identity)},
          {"coarea", number(s.coarea)},
          {"bulk", number(s.bulk)},
          {"boundary", number(s.boundary)},
          {"solution_error", number(s.solution_error)},
          {"levels", to_json(s.levels)}};
}

ResolutionSample sample_from_json(const json& j) {
  ResolutionSample s;
  s.resolution = j.at("resolution").get<int>();
  s.truncation = as_double(j.at("truncation"));
  s.nodes = j.at("nodes").get<std::size_t>();
  s.iterations = j.at("iterations").get<int>();
  s.relative_residual = as_double(j.at("relative_residual"));
  s.residual = as_double(j.at("residual"));
  s.min_gradient = as_double(j.at("min_gradient"));
  s.identity = as_double(j.at("identity"));
  s.coarea = as_double(j.at("coarea"));
  s.bulk = as_double(j.at("bulk"));
  s.boundary = as_double(j.at("boundary"));
  s.solution_error = as_double(j.at("solution_error"));
  for (const json& l : j.at("levels")) {
    s.levels.push_back({as_double(l.at("t")), l.at("components").get<int>(), l.at("touching").get<int>()});
  }
  return s;
}

json to_json(const InequalityReport& r) {
  json coarea_levels = json::array();
  for (const CoareaLevel& l : r.coarea.levels) {
    coarea_levels.push_back({{"t", l.t}, {"slab", number(l.slab)}, {"isosurface", number(l.isosurface)},
                             {"mismatch", number(l.mismatch)}});
  }
  return {{"metric", r.metric},
          {"resolution", r.resolution},
          {"truncation", r.truncation},
          {"domain", r.domain},
          {"verdict", to_string(r.verdict)},
          {"note", r.note},
          {"energy",
           {{"sampled", true},
            {"min_scalar_curvature", number(r.energy.min_scalar_curvature)},
            {"min_mean_curvature", number(r.energy.min_mean_curvature)},
            {"samples", r.energy.samples},
            {"satisfied", r.energy.satisfied}}},
          {"mass", to_json(r.mass)},
          {"bulk",
           {{"value", number(r.bulk.value)},
            {"hessian_part", number(r.bulk.hessian_part)},
            {"curvature_part", number(r.bulk.curvature_part)},
            {"epsilon", number(r.bulk.epsilon)},
            {"regularized_fraction", number(r.bulk.regularized_fraction)}}},
          {"boundary", number(r.boundary)},
          {"rhs", number(r.rhs)},
          {"slack", number(r.slack)},
          {"refinement_delta", number(r.refinement_delta)},
          {"truncation_delta", number(r.truncation_delta)},
          {"tol_total", number(r.tol_total)},
          {"residual", number(r.residual)},
          {"min_gradient_sigma", number(r.min_gradient_sigma)},
          {"solver_iterations", r.solver_iterations},
          {"solver_relative_residual", number(r.solver_relative_residual)},
          {"identity", {{"max_defect", number(r.identity.max_defect)}, {"scale", number(r.identity.scale)},
                        {"samples", r.identity.samples}}},
          {"coarea",
           {{"cell_sum", number(r.coarea.cell_sum)},
            {"slab_total", number(r.coarea.slab_total)},
            {"bin_width", number(r.coarea.bin_width)},
            {"empty_bins", r.coarea.empty_bins},
            {"worst_mismatch", number(r.coarea.worst_mismatch)},
            {"levels", coarea_levels}}},
          {"connectedness", to_json(r.connectedness)}};
}

json to_json(const DerivativeCheck& d) {
  return {{"points", d.points},
          {"measured", d.measured},
          {"min_order", number(d.min_order)},
          {"aggregate_order", number(d.aggregate_order)},
          {"max_error", number(d.max_error)},
          {"max_trace_defect", number(d.max_trace_defect)}};
}

std::string fmt(double v, const char* spec = "%.6g") {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

std::string echo_config(const ExperimentConfig& config) { return to_json(config).dump(2); }

std::string format_report(const InequalityReport& r) {
  std::ostringstream out;
  out << "inequality report: " << r.metric << "\n"
      << "  domain              " << r.domain << "\n"
      << "  resolution          " << r.resolution << "\n"
      << "  truncation          " << fmt(r.truncation) << "\n"
      << "  verdict             " << to_string(r.verdict) << (r.note.empty() ? "" : " (" + r.note + ")") << "\n"
      << "  energy conditions   " << (r.energy.satisfied ? "satisfied" : "violated") << " (sampled at "
      << r.energy.samples << " points; min R " << fmt(r.energy.min_scalar_curvature) << ", min H "
      << fmt(r.energy.min_mean_curvature) << ")\n"
      << "  mass                " << fmt(r.mass.fit.mass, "%.8f") << " +- " << fmt(r.mass.fit.uncertainty, "%.2e")
      << " (" << to_string(r.mass.shape) << ", exponent " << fmt(r.mass.fit.exponent, "%.3f") << ")\n"
      << "  bulk B              " << fmt(r.bulk.value, "%.8f") << " (hessian " << fmt(r.bulk.hessian_part, "%.8f")
      << ", curvature " << fmt(r.bulk.curvature_part, "%.3e") << ", regularized "
      << fmt(r.bulk.regularized_fraction, "%.2e") << ")\n"
      << "  boundary S          " << fmt(r.boundary, "%.8f") << "\n"
      << "  B + S               " << fmt(r.rhs, "%.8f") << "\n"
      << "  slack               " << fmt(r.slack, "%.8f") << "\n"
      << "  tol_total           " << fmt(r.tol_total, "%.3e") << " (fit " << fmt(r.mass.fit.uncertainty, "%.2e")
      << ", refinement " << fmt(r.refinement_delta, "%.2e") << ", truncation " << fmt(r.truncation_delta, "%.2e")
      << ")\n"
      << "  residual max|Du|    " << fmt(r.residual, "%.3e") << "\n"
      << "  min |grad u| on S   " << fmt(r.min_gradient_sigma, "%.6f") << "\n"
      << "  solver              " << r.solver_iterations << " iterations, relative residual "
      << fmt(r.solver_relative_residual, "%.2e") << "\n"
      << "  identity defect     " << fmt(r.identity.max_defect, "%.3e") << " over " << r.identity.samples
      << " Sigma nodes\n"
      << "  coarea mismatch     " << fmt(r.coarea.worst_mismatch, "%.3e") << " (cell sum "
      << fmt(r.coarea.cell_sum) << ", slab total " << fmt(r.coarea.slab_total) << ")\n";
  for (const LevelComponents& l : r.connectedness) {
    out << "  level " << fmt(l.t) << ": " << l.components << " component(s), " << l.touching
        << " touching the outer boundary\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Convergence tables

ObservableOrder observed_order(const std::string& name, const std::vector<int>& resolutions,
                               const std::vector<double>& values) {
  if (values.size() < 3 || values.size() != resolutions.size()) {
    throw DomainError("convergence table for '" + name + "' needs at least three ladder points");
  }
  ObservableOrder o{name, resolutions, values, std::numeric_limits<double>::quiet_NaN(), false, {}};
  const std::size_t n = values.size();
  const double a = values[n - 3], b = values[n - 2], c = values[n - 1];
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
    o.note = "undefined values";
    return o;
  }
  const double scale = std::max({1.0, std::abs(a), std::abs(b), std::abs(c)});
  const double d1 = a - b;
  const double d2 = b - c;
  if ((std::abs(d1) <= 1e-12 * scale && std::abs(d2) <= 1e-12 * scale) ||
      std::max({std::abs(a), std::abs(b), std::abs(c)}) <= 1e-10) {
    o.exact = true;
    o.note = "exact";
    return o;
  }
  if (d2 == 0.0 || d1 * d2 < 0.0 || std::abs(d2) >= std::abs(d1)) {
    o.note = "non-monotone differences";
    return o;
  }
  o.order = std::log2(std::abs(d1) / std::abs(d2));
  return o;
}

std::vector<ObservableOrder> convergence_table(const std::vector<ResolutionSample>& ladder) {
  if (ladder.size() < 3) throw DomainError("convergence table needs at least three ladder points");
  std::vector<int> res;
  for (const ResolutionSample& s : ladder) res.push_back(s.resolution);
  auto column = [&](double ResolutionSample::*field) {
    std::vector<double> v;
    for (const ResolutionSample& s : ladder) v.push_back(s.*field);
    return v;
  };
  std::vector<ObservableOrder> out;
  out.push_back(observed_order("residual", res, column(&ResolutionSample::residual)));
  out.push_back(observed_order("min_gradient", res, column(&ResolutionSample::min_gradient)));
  out.push_back(observed_order("identity", res, column(&ResolutionSample::identity)));
  out.push_back(observed_order("coarea", res, column(&ResolutionSample::coarea)));
  out.push_back(observed_order("bulk", res, column(&ResolutionSample::bulk)));
  out.push_back(observed_order("boundary", res, column(&ResolutionSample::boundary)));
  if (std::isfinite(ladder.back().solution_error)) {
    out.push_back(observed_order("solution_error", res, column(&ResolutionSample::solution_error)));
  }
  return out;
}

std::string format_convergence_table(const std::vector<ObservableOrder>& table) {
  std::ostringstream out;
  out << "observable";
  if (!table.empty()) {
    for (int n : table.front().resolutions) out << "\tn=" << n;
  }
  out << "\torder\tnote\n";
  for (const ObservableOrder& o : table) {
    out << o.observable;
    for (double v : o.values) out << "\t" << fmt(v, "%.6e");
    out << "\t" << (o.exact ? "exact" : fmt(o.order, "%.3f")) << "\t" << o.note << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Pipeline

std::string status_label(const VerdictRecord& v) {
  if (v.status == Verdict::Skipped && v.rule != "main-estimate" && v.rule != "energy-conditions") return "SKIPPED";
  return to_string(v.status);
}

int RunRecord::exit_code() const {
  bool failed = false;
  for (const VerdictRecord& v : verdicts) {
    if (v.status == Verdict::Errored) return 3;
    if (v.status == Verdict::Fail) failed = true;
  }
  return failed ? 1 : 0;
}

const VerdictRecord* RunRecord::verdict(const std::string& rule) const {
  for (const VerdictRecord& v : verdicts) {
    if (v.rule == rule) return &v;
  }
  return nullptr;
}

namespace {

class Pipeline {
 public:
  Pipeline(const ExperimentConfig& config, const RunOptions& options) : c_(config), options_(options) {
    rec_.config = config;
    rec_.version = toolkit_version();
    rec_.workers = worker_count();
  }

  RunRecord execute() {
    MetricPtr metric;
    stage("metric", {"metric"}, [&] { metric = make_metric(c_.metric); });
    if (!metric) return std::move(rec_);
    metric_ = metric;
    flat_ = c_.metric.family == "flat";
    stage("derivatives", {"derivative-order"}, [&] { derivative_stage(); });
    switch (c_.kind) {
      case ExperimentKind::MassStudy:
        stage("mass", {"mass"}, [&] { mass_stage(); });
        break;
      case ExperimentKind::SolverConvergence:
        stage("ladder", {"ladder"}, [&] { ladder_stage(); });
        break;
      case ExperimentKind::Inequality:
        stage("inequality", {"main-estimate"}, [&] { inequality_stage(false); });
        break;
      case ExperimentKind::FullSuite:
        stage("mass", {"mass"}, [&] { mass_stage(); });
        stage("ladder", {"ladder"}, [&] { ladder_stage(); });
        stage("inequality", {"main-estimate"}, [&] { inequality_stage(true); });
        stage("connectedness-control", {"connectedness-control"}, [&] { control_stage(); });
        break;
    }
    return std::move(rec_);
  }

 private:
  template <typename Body>
  void stage(const std::string& name, const std::vector<std::string>& rules, Body&& body) {
    log("stage " + name);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body();
    } catch (const std::exception& e) {
      for (const std::string& r : rules) add(r, Verdict::Errored, e.what());
    }
    rec_.timings.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
  }

  void log(const std::string& msg) const {
    if (!options_.quiet) std::cerr << "[" << c_.name << "] " << msg << std::endl;
  }

  void add(const std::string& rule, Verdict status, const std::string& detail) {
    rec_.verdicts.push_back({rule, status, detail});
    log("  " + rule + ": " + status_label(rec_.verdicts.back()) + (detail.empty() ? "" : " (" + detail + ")"));
  }

  void check(const std::string& rule, bool ok, const std::string& detail) {
    add(rule, ok ? Verdict::Pass : Verdict::Fail, detail);
  }

  std::vector<double> radii(const MetricField& metric) const {
    return c_.radii.empty() ? default_radii(metric) : c_.radii;
  }

  void derivative_stage() {
    const DerivativeCheck d = check_derivatives(*metric_, c_.derivative_points, c_.seed);
    rec_.derivatives = d;
    const Tolerances& t = c_.tolerances;
    if (d.measured == 0) {
      check("derivative-order", true, "finite differences exact at all " + std::to_string(d.points) + " points");
    } else {
      check("derivative-order", d.min_order >= t.derivative_order,
            "min order " + fmt(d.min_order, "%.3f") + " over " + std::to_string(d.measured) + " of " +
                std::to_string(d.points) + " points, threshold " + fmt(t.derivative_order));
    }
    check("trace-identity", d.max_trace_defect <= t.trace_defect,
          "max defect " + fmt(d.max_trace_defect, "%.2e") + ", threshold " + fmt(t.trace_defect, "%.1e"));
  }

  void mass_stage() {
    const Tolerances& t = c_.tolerances;
    const std::vector<double> r = radii(*metric_);
    for (ExhaustionShape shape : c_.shapes) {
      MassReport m = mass_study(*metric_, shape, r, c_.panels);
      const std::string name = to_string(shape);
      check("mass-fit-" + name, m.fit.converged,
            "mass " + fmt(m.fit.mass, "%.8f") + " +- " + fmt(m.fit.uncertainty, "%.2e") +
                (m.fit.note.empty() ? "" : ", " + m.fit.note));
      if (c_.expected_mass) {
        const double err = std::abs(m.fit.mass - *c_.expected_mass);
        check("mass-oracle-" + name, err <= t.mass,
              "|mass - " + fmt(*c_.expected_mass) + "| = " + fmt(err, "%.2e") + ", threshold " + fmt(t.mass, "%.1e"));
      }
      if (c_.metric.family == "half-schwarzschild" && shape == ExhaustionShape::Hemisphere) {
        double worst = 0.0;
        const double mm = c_.metric.mass;
        for (const auto& [radius, value] : m.samples) {
          worst = std::max(worst, std::abs(value - 0.5 * mm * std::pow(1.0 + mm / (2.0 * radius), 3)));
        }
        check("finite-radius-oracle", worst <= t.finite_radius,
              "max deviation " + fmt(worst, "%.2e") + ", threshold " + fmt(t.finite_radius, "%.1e"));
      }
      rec_.mass.push_back(std::move(m));
    }
    if (rec_.mass.size() >= 2) {
      const MassReport& a = rec_.mass[0];
      const MassReport& b = rec_.mass[1];
      const double diff = std::abs(a.fit.mass - b.fit.mass);
      const double tol = t.exhaustion ? *t.exhaustion : a.fit.uncertainty + b.fit.uncertainty;
      check("exhaustion-invariance", diff <= tol,
            to_string(a.shape) + " vs " + to_string(b.shape) + ": " + fmt(diff, "%.2e") + ", threshold " +
                fmt(tol, "%.2e") + (t.exhaustion ? "" : " (fit uncertainties)"));
    }
  }

  ResolutionSample solve_sample(int n, double truncation) {
    log("  solve n=" + std::to_string(n) + " A=" + fmt(truncation));
    ResolutionSample s;
    s.resolution = n;
    s.truncation = truncation;
    const DomainPtr d = build_domain(*metric_, n, truncation, c_.domain);
    SolveOptions so;
    so.tolerance = c_.solver_tolerance;
    const DiscreteField u = solve_harmonic(*metric_, d, so);
    s.nodes = d->node_count();
    s.iterations = u.info().iterations;
    s.relative_residual = u.info().relative_residual;
    s.residual = residual(*metric_, u);
    s.min_gradient = min_gradient_on_sigma(*metric_, u);
    s.identity = normal_derivative_identity(*metric_, u).max_defect;
    s.coarea = coarea_check(*metric_, u).worst_mismatch;
    s.bulk = bulk_integral(*metric_, u).value;
    s.boundary = boundary_integral(*metric_, u);
    s.solution_error = std::numeric_limits<double>::quiet_NaN();
    if (flat_) {
      s.solution_error = 0.0;
      for (std::size_t i = 0; i < d->node_count(); ++i) {
        if (d->in_domain(i)) s.solution_error = std::max(s.solution_error, std::abs(u[i] - d->cartesian_point(i).z()));
      }
    }
    double u_max = 0.0;
    for (double v : u.values()) {
      if (std::isfinite(v)) u_max = std::max(u_max, v);
    }
    std::vector<double> levels;
    for (double t : c_.levels) {
      if (t > 0.0 && t < u_max) levels.push_back(t);
    }
    s.levels = level_connectedness(u, levels);
    return s;
  }

  void ladder_stage() {
    const Tolerances& t = c_.tolerances;
    for (int n : c_.resolutions) rec_.ladder.push_back(solve_sample(n, c_.truncations.front()));
    const auto& L = rec_.ladder;
    std::vector<int> res;
    for (const ResolutionSample& s : L) res.push_back(s.resolution);

    if (L.size() >= 3) {
      std::vector<double> r;
      for (const ResolutionSample& s : L) r.push_back(s.residual);
      const ObservableOrder o = observed_order("residual", res, r);
      check("residual-order", o.exact || o.order >= t.residual_order,
            o.exact ? "residual at round-off" : "order " + fmt(o.order, "%.3f") + ", threshold " + fmt(t.residual_order));
    } else {
      add("residual-order", Verdict::Skipped, "needs three resolutions");
    }

    bool positive = true;
    for (const ResolutionSample& s : L) positive = positive && s.min_gradient > 0.0;
    check("min-gradient-positive", positive, "finest " + fmt(L.back().min_gradient));
    if (L.size() >= 2) {
      const double change = std::abs(L.back().min_gradient - L[L.size() - 2].min_gradient) / L.back().min_gradient;
      check("min-gradient-stable", change <= t.min_gradient_stability,
            "relative change " + fmt(change, "%.2e") + ", threshold " + fmt(t.min_gradient_stability));
    }

    if (flat_) {
      bool zero = true;
      double worst = 0.0;
      for (const ResolutionSample& s : L) {
        zero = zero && s.identity == 0.0;
        worst = std::max(worst, s.solution_error);
      }
      check("identity-exact", zero, "defect " + fmt(L.back().identity, "%.2e"));
      check("flat-solution", worst <= t.flat_solution,
            "max |u - x3| " + fmt(worst, "%.2e") + ", threshold " + fmt(t.flat_solution, "%.1e"));
    } else if (L.size() >= 2) {
      bool decreasing = true;
      for (std::size_t i = 1; i < L.size(); ++i) decreasing = decreasing && L[i].identity < L[i - 1].identity;
      const double order = std::log2(L[L.size() - 2].identity / L.back().identity);
      check("identity-order", decreasing && order >= t.identity_order,
            "order " + fmt(order, "%.3f") + (decreasing ? "" : ", not decreasing") + ", threshold " +
                fmt(t.identity_order));
    }

    {
      const double finest = L.back().coarea;
      bool shrinking = true;
      for (std::size_t i = 1; i < L.size(); ++i) shrinking = shrinking && L[i].coarea < L[i - 1].coarea;
      const bool round_off = finest <= 1e-10;
      check("coarea-consistency", finest <= t.coarea && (shrinking || round_off),
            "finest mismatch " + fmt(finest, "%.3e") + (shrinking || round_off ? "" : ", not shrinking") +
                ", threshold " + fmt(t.coarea));
    }

    std::size_t tested = 0;
    bool connected = true;
    for (const ResolutionSample& s : L) {
      for (const LevelComponents& l : s.levels) {
        ++tested;
        connected = connected && l.components == 1 && l.touching == 1;
      }
    }
    if (tested == 0) {
      add("connectedness", Verdict::Skipped, "no regular level inside the range of u");
    } else {
      check("connectedness", connected, std::to_string(tested) + " level sets tested");
    }
  }

  InequalityOptions inequality_options(const std::vector<double>& r) const {
    InequalityOptions o;
    o.solver.tolerance = c_.solver_tolerance;
    o.domain = c_.domain;
    o.mass_panels = c_.panels;
    o.radii = r;
    o.random_points = c_.random_points;
    o.seed = c_.seed;
    o.connectedness_levels = c_.levels;
    return o;
  }

  void judge(const InequalityReport& r) {
    const Tolerances& t = c_.tolerances;
    const std::string where = "n=" + std::to_string(r.resolution) + " A=" + fmt(r.truncation);
    add("energy-conditions", r.energy.satisfied ? Verdict::Pass : Verdict::Skipped,
        where + ", sampled at " + std::to_string(r.energy.samples) + " points");
    add("main-estimate", r.verdict,
        where + ": mass " + fmt(r.mass.fit.mass, "%.6f") + ", B + S " + fmt(r.rhs, "%.6f") + ", tol_total " +
            fmt(r.tol_total, "%.2e") + (r.note.empty() ? "" : ", " + r.note));
    if (r.verdict == Verdict::Skipped) return;
    if (flat_) {
      const bool ok = std::abs(r.mass.fit.mass) <= t.flat_mass && std::abs(r.bulk.value) <= t.flat_integrals &&
                      std::abs(r.boundary) <= t.flat_integrals;
      check("flat-rigidity", ok,
            where + ": mass " + fmt(r.mass.fit.mass, "%.2e") + ", B " + fmt(r.bulk.value, "%.2e") + ", S " +
                fmt(r.boundary, "%.2e"));
    } else {
      check("tol-budget", r.tol_total < t.budget_fraction * r.mass.fit.mass,
            where + ": tol_total " + fmt(r.tol_total, "%.3e") + " = " +
                fmt(100.0 * r.tol_total / r.mass.fit.mass, "%.2f") + "% of the mass, threshold " +
                fmt(100.0 * t.budget_fraction, "%.1f") + "%");
    }
  }

  void inequality_stage(bool finest_only) {
    const std::vector<double> r = radii(*metric_);
    const InequalityOptions opt = inequality_options(r);
    std::vector<std::pair<int, double>> runs;
    if (finest_only) {
      runs.emplace_back(c_.resolutions.back(), c_.truncations.front());
    } else {
      for (double a : c_.truncations) {
        for (int n : c_.resolutions) runs.emplace_back(n, a);
      }
    }
    for (const auto& [n, a] : runs) {
      log("  check_inequality n=" + std::to_string(n) + " A=" + fmt(a));
      rec_.inequality.push_back(check_inequality(*metric_, n, a, opt));
      judge(rec_.inequality.back());
    }
    if (c_.scale_lambda > 0.0) scale_stage(rec_.inequality.back(), r);
  }

  void scale_stage(const InequalityReport& base, const std::vector<double>& r) {
    const Tolerances& t = c_.tolerances;
    const double lambda = c_.scale_lambda;
    std::vector<double> scaled_radii;
    for (double x : r) scaled_radii.push_back(lambda * x);
    const auto scaled = make_rescaled(metric_, lambda);
    log("  scaled check_inequality lambda=" + fmt(lambda));
    rec_.inequality.push_back(
        check_inequality(*scaled, base.resolution, lambda * base.truncation, inequality_options(scaled_radii)));
    const InequalityReport& s = rec_.inequality.back();
    const double dm = std::abs(s.mass.fit.mass - lambda * base.mass.fit.mass);
    check("scale-mass", dm <= t.scale_mass,
          "mass " + fmt(s.mass.fit.mass, "%.6f") + " vs " + fmt(lambda * base.mass.fit.mass, "%.6f") + ", |diff| " +
              fmt(dm, "%.2e") + ", threshold " + fmt(t.scale_mass, "%.1e"));
    const double rel = std::abs(s.rhs - lambda * base.rhs) / std::max(std::abs(lambda * base.rhs), 1e-300);
    check("scale-rhs", rel <= t.scale_rhs,
          "B + S " + fmt(s.rhs, "%.6f") + " vs " + fmt(lambda * base.rhs, "%.6f") + ", relative " + fmt(rel, "%.2e") +
              ", threshold " + fmt(t.scale_rhs));
  }

  /// u = x3 plus a bump: levels above the saddle value carry a closed
  /// component around the bump.
  void control_stage() {
    const DomainPtr d = build_domain(*make_flat(), 32, 8.0);
    const auto u = DiscreteField::sample(
        d, [](const Vec3& x) { return x.z() + 3.0 * std::exp(-(x - Vec3(0.0, 0.0, 2.0)).squaredNorm()); });
    const LevelComponents l = level_connectedness(u, {4.5}).front();
    check("connectedness-control", l.components > l.touching,
          std::to_string(l.components) + " component(s), " + std::to_string(l.touching) + " touching");
  }

  const ExperimentConfig& c_;
  RunOptions options_;
  RunRecord rec_;
  MetricPtr metric_;
  bool flat_ = false;
};

}  // namespace

RunRecord run(const ExperimentConfig& config, const RunOptions& options) {
  RunRecord rec = Pipeline(config, options).execute();
  if (options.write_outputs) write_outputs(rec, config.output);
  return rec;
}

void write_outputs(const RunRecord& rec, const std::string& directory) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  const fs::path dir(directory);

  std::ofstream lines(dir / "record.jsonl");
  lines << json{{"type", "config"}, {"config", to_json(rec.config)}}.dump() << "\n";
  if (rec.derivatives) lines << json{{"type", "derivatives"}, {"check", to_json(*rec.derivatives)}}.dump() << "\n";
  for (const MassReport& m : rec.mass) lines << json{{"type", "mass"}, {"report", to_json(m)}}.dump() << "\n";
  for (const ResolutionSample& s : rec.ladder) lines << json{{"type", "resolution"}, {"sample", to_json(s)}}.dump() << "\n";
  for (const InequalityReport& r : rec.inequality) {
    lines << json{{"type", "inequality"}, {"report", to_json(r)}}.dump() << "\n";
  }
  json counts = {{"PASS", 0}, {"FAIL", 0}, {"SKIPPED", 0}, {"SKIPPED-INEQUALITY", 0}, {"ERRORED", 0}};
  for (const VerdictRecord& v : rec.verdicts) {
    lines << json{{"type", "verdict"}, {"rule", v.rule}, {"status", status_label(v)}, {"detail", v.detail}}.dump()
          << "\n";
    counts[status_label(v)] = counts[status_label(v)].get<int>() + 1;
  }
  lines << json{{"type", "summary"},     {"version", rec.version}, {"seed", rec.config.seed},
                {"workers", rec.workers}, {"verdicts", counts},     {"exit_code", rec.exit_code()}}
                   .dump()
        << "\n";

  json timings = json::array();
  double total = 0.0;
  for (const StageTiming& t : rec.timings) {
    timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
    total += t.seconds;
  }
  std::ofstream(dir / "timings.json") << json{{"stages", timings}, {"total_seconds", total}}.dump(2) << "\n";

  std::ofstream report(dir / "report.txt");
  report << "experiment " << rec.config.name << " (" << to_string(rec.config.kind) << "), toolkit " << rec.version
         << ", seed " << rec.config.seed << ", workers " << rec.workers << "\n\n";
  if (rec.derivatives) {
    const DerivativeCheck& d = *rec.derivatives;
    report << "derivatives: " << d.points << " points, min order " << fmt(d.min_order, "%.3f") << ", max error "
           << fmt(d.max_error, "%.2e") << ", trace defect " << fmt(d.max_trace_defect, "%.2e") << "\n\n";
  }
  for (const MassReport& m : rec.mass) {
    report << "mass (" << to_string(m.shape) << "): " << fmt(m.fit.mass, "%.8f") << " +- "
           << fmt(m.fit.uncertainty, "%.2e") << ", exponent " << fmt(m.fit.exponent, "%.3f")
           << (m.fit.converged ? "" : ", not converged") << "\n";
  }
  if (!rec.mass.empty()) report << "\n";
  for (const ResolutionSample& s : rec.ladder) {
    report << "solve n=" << s.resolution << " A=" << fmt(s.truncation) << ": " << s.iterations
           << " iterations, residual " << fmt(s.residual, "%.3e") << ", min |grad u| " << fmt(s.min_gradient)
           << ", identity " << fmt(s.identity, "%.3e") << ", coarea " << fmt(s.coarea, "%.3e") << ", B "
           << fmt(s.bulk, "%.8f") << "\n";
  }
  if (!rec.ladder.empty()) report << "\n";
  for (const InequalityReport& r : rec.inequality) report << format_report(r) << "\n";
  report << "verdicts:\n";
  for (const VerdictRecord& v : rec.verdicts) {
    report << "  " << status_label(v) << "  " << v.rule << (v.detail.empty() ? "" : "  " + v.detail) << "\n";
  }

  if (rec.ladder.size() >= 3) {
    std::ofstream(dir / "convergence.tsv") << format_convergence_table(convergence_table(rec.ladder));
  }
  for (const MassReport& m : rec.mass) {
    std::ofstream table(dir / ("mass_" + to_string(m.shape) + ".tsv"));
    table << "# fit mass=" << fmt(m.fit.mass, "%.10f") << " exponent=" << fmt(m.fit.exponent, "%.6f")
          << " residual=" << fmt(m.fit.residual, "%.3e") << " uncertainty=" << fmt(m.fit.uncertainty, "%.3e")
          << " converged=" << (m.fit.converged ? "true" : "false") << "\n";
    table << "radius\tvalue\n";
    for (const auto& [radius, value] : m.samples) table << fmt(radius, "%.10g") << "\t" << fmt(value, "%.15e") << "\n";
  }
}

std::vector<ResolutionSample> read_ladder(const std::string& record_path) {
  std::ifstream in(record_path);
  if (!in) throw ConfigError("cannot open record file '" + record_path + "'");
  std::vector<ResolutionSample> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    if (line.empty()) {
      ++number;
      continue;
    }
    try {
      const json j = json::parse(line);
      if (j.at("type") == "resolution") out.push_back(sample_from_json(j.at("sample")));
    } catch (const json::exception& e) {
      throw ConfigError(record_path + ": " + e.what(), number);
    }
    ++number;
  }
  return out;
}

}  // namespace pmt
