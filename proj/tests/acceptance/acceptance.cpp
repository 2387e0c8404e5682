#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pmt/harness.hpp"

using namespace pmt;

namespace {

struct Run {
  RunRecord record;
  double seconds = 0.0;
};

struct Outcome {
  bool pass = true;
  std::vector<std::string> lines;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

std::string fmt(double v, const char* spec = "%.4g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

class Acceptance {
 public:
  Acceptance(std::string config_dir, std::string out_dir)
      : config_dir_(std::move(config_dir)), out_dir_(std::move(out_dir)) {}

  const Run& get(const std::string& name) {
    auto it = runs_.find(name);
    if (it != runs_.end()) return it->second;
    ExperimentConfig c = load_config(config_dir_ + "/" + name + ".yaml");
    c.output = out_dir_ + "/" + name;
    std::fprintf(stderr, "running %s\n", name.c_str());
    const auto t0 = std::chrono::steady_clock::now();
    Run r;
    r.record = run(c, {true, true});
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return runs_.emplace(name, std::move(r)).first->second;
  }

 private:
  std::string config_dir_;
  std::string out_dir_;
  std::map<std::string, Run> runs_;
};

void no_errors(Outcome& o, const Run& r) {
  o.require(r.record.exit_code() != 3, r.record.config.name + ": no ERRORED stage");
}

double fit_mass(const RunRecord& r, ExhaustionShape shape) {
  for (const MassReport& m : r.mass) {
    if (m.shape == shape) return m.fit.mass;
  }
  return std::nan("");
}

Outcome flat_rigidity(Acceptance& a) {
  Outcome o;
  const Run& r = a.get("flat_full_suite");
  no_errors(o, r);
  o.require(r.record.config.resolutions.back() == 32, "finest resolution n = 32");
  o.require(!r.record.inequality.empty(), "inequality report present");
  if (r.record.inequality.empty()) return o;
  const InequalityReport& q = r.record.inequality.front();
  o.require(std::abs(q.mass.fit.mass) <= 1e-8, "|mass| = " + fmt(std::abs(q.mass.fit.mass)) + " <= 1e-8");
  o.require(std::abs(q.bulk.value) <= 1e-10, "B = " + fmt(q.bulk.value) + " <= 1e-10");
  o.require(std::abs(q.boundary) <= 1e-10, "S = " + fmt(q.boundary) + " <= 1e-10");
  double worst = 0.0;
  for (const ResolutionSample& s : r.record.ladder) worst = std::max(worst, s.solution_error);
  o.require(!r.record.ladder.empty() && worst <= 1e-8, "max |u - x3| = " + fmt(worst) + " (solver tolerance 1e-10)");
  o.require(q.verdict == Verdict::Pass, "main estimate holds with equality");
  o.require(r.seconds <= 10.0, "runtime " + fmt(r.seconds, "%.1f") + " s <= 10 s");
  return o;
}

Outcome schwarzschild_mass(Acceptance& a) {
  Outcome o;
  const Run& r = a.get("schwarzschild_mass");
  no_errors(o, r);
  if (r.record.mass.empty()) return o.require(false, "mass report present"), o;
  const MassReport& m = r.record.mass.front();
  bool ladder = m.samples.size() == 4;
  double worst = 0.0;
  for (std::size_t k = 0; k < m.samples.size(); ++k) {
    const auto [radius, value] = m.samples[k];
    ladder = ladder && radius == 20.0 * std::pow(2.0, static_cast<double>(k));
    worst = std::max(worst, std::abs(value - 0.5 * std::pow(1.0 + 1.0 / (2.0 * radius), 3)));
  }
  o.require(ladder, "ladder r = 20 * 2^k, k = 0..3");
  o.require(std::abs(m.fit.mass - 0.5) <= 5e-4, "mass " + fmt(m.fit.mass, "%.6f") + " within 5e-4 of 0.5");
  o.require(worst <= 1e-6, "finite-radius values match m(1+m/2r)^3/2 within " + fmt(worst) + " <= 1e-6");
  o.require(r.seconds <= 5.0, "runtime " + fmt(r.seconds, "%.2f") + " s <= 5 s");
  return o;
}

Outcome exhaustion(Acceptance& a) {
  Outcome o;
  const Run& hs = a.get("schwarzschild_exhaustion");
  no_errors(o, hs);
  const double d = std::abs(fit_mass(hs.record, ExhaustionShape::Hemisphere) -
                            fit_mass(hs.record, ExhaustionShape::HalfCylinder));
  o.require(d <= 1e-3, "half-schwarzschild hemisphere vs half-cylinder " + fmt(d) + " <= 1e-3");
  const Run& p = a.get("perturbed_exhaustion");
  no_errors(o, p);
  if (p.record.mass.size() < 2) return o.require(false, "perturbed mass reports present"), o;
  const FitResult& x = p.record.mass[0].fit;
  const FitResult& y = p.record.mass[1].fit;
  const double dp = std::abs(x.mass - y.mass);
  o.require(dp <= x.uncertainty + y.uncertainty,
            "perturbed-flat " + fmt(dp) + " <= combined fit residuals " + fmt(x.uncertainty + y.uncertainty));
  return o;
}

Outcome bvp_fidelity(Acceptance& a) {
  Outcome o;
  const Run& r = a.get("schwarzschild_ladder");
  no_errors(o, r);
  const auto& L = r.record.ladder;
  if (L.size() != 3) return o.require(false, "three resolutions"), o;
  o.require(r.record.config.metric.family == "half-schwarzschild" && r.record.config.metric.mass == 1.0,
            "half-schwarzschild m = 1 on the spherical half-shell");
  const ObservableOrder res = observed_order("residual", {L[0].resolution, L[1].resolution, L[2].resolution},
                                             {L[0].residual, L[1].residual, L[2].residual});
  o.require(res.order >= 1.8, "residual self-convergence order " + fmt(res.order, "%.3f") + " >= 1.8");
  bool positive = true;
  for (const ResolutionSample& s : L) positive = positive && s.min_gradient > 0.0;
  o.require(positive, "min |grad u| on Sigma > 0 at every resolution");
  const double change = std::abs(L[2].min_gradient - L[1].min_gradient) / L[2].min_gradient;
  o.require(change <= 0.02, "min |grad u| stable: " + fmt(100 * change, "%.2f") + "% <= 2%");
  return o;
}

Outcome main_estimate(Acceptance& a) {
  Outcome o;
  for (const char* name : {"schwarzschild_inequality", "two_bubble_inequality"}) {
    const Run& r = a.get(name);
    no_errors(o, r);
    if (r.record.inequality.empty()) {
      o.require(false, std::string(name) + ": report present");
      continue;
    }
    const InequalityReport& q = r.record.inequality.front();
    o.require(q.resolution == 64, std::string(name) + ": production resolution n = 64 (" + q.domain + ")");
    o.require(q.verdict == Verdict::Pass && q.mass.fit.mass >= q.rhs - q.tol_total,
              std::string(name) + ": mass " + fmt(q.mass.fit.mass, "%.6f") + " >= B + S - tol = " +
                  fmt(q.rhs - q.tol_total, "%.6f"));
    o.require(q.tol_total < 0.05 * q.mass.fit.mass,
              std::string(name) + ": tol_total " + fmt(q.tol_total) + " < 0.05 mass = " + fmt(0.05 * q.mass.fit.mass));
    o.require(r.seconds <= 300.0, std::string(name) + ": runtime " + fmt(r.seconds, "%.1f") + " s <= 5 min");
  }
  const Run& two = a.get("two_bubble_inequality");
  o.require(two.record.config.metric.bubbles.size() == 2, "second metric has two bubbles");
  return o;
}

Outcome identity(Acceptance& a) {
  Outcome o;
  const Run& r = a.get("schwarzschild_ladder");
  const auto& L = r.record.ladder;
  if (L.size() < 2) return o.require(false, "ladder present"), o;
  bool decreasing = true;
  std::string values;
  for (std::size_t i = 0; i < L.size(); ++i) {
    if (i > 0) decreasing = decreasing && L[i].identity < L[i - 1].identity;
    values += (i ? ", " : "") + fmt(L[i].identity, "%.3e");
  }
  o.require(decreasing, "half-schwarzschild defect decreases: " + values);
  const double order = std::log2(L[L.size() - 2].identity / L.back().identity);
  o.require(order >= 1.0, "observed order " + fmt(order, "%.3f") + " >= 1");
  const Run& f = a.get("flat_full_suite");
  bool zero = !f.record.ladder.empty();
  for (const ResolutionSample& s : f.record.ladder) zero = zero && s.identity == 0.0;
  o.require(zero, "flat defect exactly 0 at every resolution");
  return o;
}

Outcome coarea(Acceptance& a) {
  Outcome o;
  const Run& r = a.get("schwarzschild_ladder");
  const auto& L = r.record.ladder;
  if (L.size() < 2) return o.require(false, "ladder present"), o;
  o.require(L.back().resolution == 64 && L.back().coarea <= 0.02,
            "mismatch at n = 64: " + fmt(100 * L.back().coarea, "%.3f") + "% <= 2%");
  bool shrinking = true;
  std::string values;
  for (std::size_t i = 0; i < L.size(); ++i) {
    if (i > 0) shrinking = shrinking && L[i].coarea < L[i - 1].coarea;
    values += (i ? ", " : "") + fmt(L[i].coarea, "%.3e");
  }
  o.require(shrinking, "shrinking under refinement: " + values);
  return o;
}

Outcome connectedness(Acceptance& a) {
  Outcome o;
  auto check_levels = [&](const std::string& label, const std::vector<LevelComponents>& levels) {
    bool ok = !levels.empty();
    for (const LevelComponents& l : levels) ok = ok && l.components == 1 && l.touching == 1;
    o.require(ok, label + ": " + std::to_string(levels.size()) + " level(s), each one touching component");
  };
  for (const char* name : {"flat_full_suite", "schwarzschild_ladder", "perturbed_levels"}) {
    const Run& r = a.get(name);
    for (const ResolutionSample& s : r.record.ladder) {
      check_levels(r.record.config.metric.family + " n=" + std::to_string(s.resolution), s.levels);
    }
  }
  for (const char* name : {"two_bubble_inequality", "schwarzschild_scale"}) {
    const Run& r = a.get(name);
    for (const InequalityReport& q : r.record.inequality) {
      check_levels(q.metric + " n=" + std::to_string(q.resolution), q.connectedness);
    }
  }
  const VerdictRecord* control = a.get("flat_full_suite").record.verdict("connectedness-control");
  o.require(control && control->status == Verdict::Pass,
            "negative control has a non-touching component" + (control ? " (" + control->detail + ")" : ""));
  return o;
}

Outcome derivatives(Acceptance& a) {
  Outcome o;
  for (const char* name : {"flat_full_suite", "schwarzschild_mass", "perturbed_exhaustion", "two_bubble_inequality",
                           "rescaled_mass"}) {
    const Run& r = a.get(name);
    if (!r.record.derivatives) {
      o.require(false, std::string(name) + ": derivative check present");
      continue;
    }
    const DerivativeCheck& d = *r.record.derivatives;
    const std::string label = r.record.config.metric.family;
    o.require(d.points >= 1000, label + ": " + std::to_string(d.points) + " random points");
    if (d.measured == 0) {
      o.require(d.max_error == 0.0, label + ": finite differences exact");
    } else {
      o.require(d.min_order >= 1.9, label + ": min observed order " + fmt(d.min_order, "%.3f") + " >= 1.9 over " +
                                        std::to_string(d.measured) + " points");
    }
    o.require(d.max_trace_defect <= 1e-10, label + ": trace identity defect " + fmt(d.max_trace_defect) + " <= 1e-10");
  }
  return o;
}

Outcome scale(Acceptance& a) {
  Outcome o;
  const Run& r = a.get("schwarzschild_scale");
  no_errors(o, r);
  if (r.record.inequality.size() != 2) return o.require(false, "base and scaled reports present"), o;
  const InequalityReport& base = r.record.inequality[0];
  const InequalityReport& scaled = r.record.inequality[1];
  o.require(r.record.config.scale_lambda == 2.0, "lambda = 2");
  const double dm = std::abs(scaled.mass.fit.mass - 2.0 * base.mass.fit.mass);
  o.require(dm <= 1e-3, "mass " + fmt(base.mass.fit.mass, "%.6f") + " -> " + fmt(scaled.mass.fit.mass, "%.6f") +
                            ", |diff| " + fmt(dm) + " <= 1e-3");
  const double rel = std::abs(scaled.rhs - 2.0 * base.rhs) / (2.0 * base.rhs);
  o.require(rel <= 0.05, "B + S " + fmt(base.rhs, "%.6f") + " -> " + fmt(scaled.rhs, "%.6f") + ", relative " +
                             fmt(rel) + " <= 5%");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string config_dir = argc > 1 ? argv[1] : PMT_CONFIG_DIR;
  const std::string out_dir = argc > 2 ? argv[2] : "acceptance-out";
  std::filesystem::create_directories(out_dir);
  Acceptance a(config_dir, out_dir);

  const std::vector<std::pair<std::string, std::function<Outcome(Acceptance&)>>> criteria{
      {"1 flat rigidity", flat_rigidity},
      {"2 half-schwarzschild mass", schwarzschild_mass},
      {"3 exhaustion invariance", exhaustion},
      {"4 BVP fidelity", bvp_fidelity},
      {"5 main estimate", main_estimate},
      {"6 pointwise identity", identity},
      {"7 coarea consistency", coarea},
      {"8 connectedness", connectedness},
      {"9 derivative validation", derivatives},
      {"10 scale covariance", scale},
  };
  int failures = 0;
  for (const auto& [name, criterion] : criteria) {
    Outcome o;
    try {
      o = criterion(a);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::printf("%s  criterion %s\n", o.pass ? "PASS" : "FAIL", name.c_str());
    for (const std::string& line : o.lines) std::printf("      %s\n", line.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
