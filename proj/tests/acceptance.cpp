// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Criteria 5-10 share one design run per shipped config.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>

#include "support.hpp"
#include "wavefirst/io/runs.hpp"
#include "wavefirst/metrics.hpp"

using namespace wavefirst;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = WAVEFIRST_CONFIG_DIR;

const char* kDesignConfigs[] = {"coupler_small.ini", "mode_converter.ini", "ar_coating.ini", "cylinder_cloak.ini",
                                "cylinder_mimic.ini", "lens_mimic.ini",     "mask_mimic.ini"};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct DesignRun {
  io::RunConfig config;
  io::DesignSummary summary;
  fs::path out;
  double seconds = 0.0;
};

double metric(const DesignRun& r, const std::string& key) {
  double v = 0.0;
  io::parse_double(r.summary.metrics.at(key), v);
  return v;
}

Outcome bilinearity() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937 rng(1);
  const GridSpec g(32, 24, 25.0, Boundary::absorbing({6}), Boundary::absorbing({6}));
  const YeeOperators ops = YeeOperators::build(g);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Structure s = random_structure(g, rng);
    const FieldState x{random_complex(g.cells(), rng)};
    const SourceSpec src{random_complex(g.edges(), rng)};
    const CVec b = assemble_b(s, src, ops);
    const CVec d = assemble_d(x, g.omega());
    const CVec lhs = assemble_A(s, ops) * x.hz - b;
    const CVec rhs = assemble_B_full(x, src, ops) * s.p.cast<cplx>() - d;
    worst = std::max(worst, (lhs - rhs).norm() / (b.norm() + d.norm()));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-12 && t < 10.0, "worst relative gap " + num(worst) + ", " + num(t) + " s"};
}

Outcome dispersion() {
  const auto t0 = std::chrono::steady_clock::now();
  // Eigen-relation on a homogeneous periodic vacuum grid.
  const GridSpec g(32, 32, 25.0, Boundary::periodic(), Boundary::periodic());
  const SparseOperator a = assemble_A(Structure::uniform(g, 1.0), YeeOperators::build(g));
  double eig_err = 0.0;
  for (int m = 0; m < 32; ++m) {
    const double k = 2.0 * kPi * m / 32.0;
    for (int axis = 0; axis < 2; ++axis) {
      CVec x(g.cells());
      for (int i = 0; i < 32; ++i) {
        for (int j = 0; j < 32; ++j) x[g.cell(i, j)] = std::exp(cplx(0.0, k * (axis == 0 ? i : j)));
      }
      const double s = std::sin(k / 2.0);
      eig_err = std::max(eig_err, (a * x - (4.0 * s * s - g.omega() * g.omega()) * x).cwiseAbs().maxCoeff());
    }
  }
  // PML reflection from the standing-wave ratio between source and PML.
  double refl = 0.0;
  for (double lambda : {21.0, 25.0, 40.0}) {
    const GridSpec p(64, 64, lambda, Boundary::absorbing(), Boundary::periodic());
    const YeeOperators ops = YeeOperators::build(p);
    const ModeProfile m = plane_wave_profile(p);
    const Simulation sim =
        simulate(Structure::uniform(p, 1.0), mode_source(m, {Axis::X, 32, 0, 64, +1}, p, 1.0, 32), ops);
    double lo = 1e300, hi = 0.0;
    for (int n = 36; n < 54; ++n) {
      const double v = std::abs(sim.field.hz[p.cell(n, 7)]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    refl = std::max(refl, (hi / lo - 1.0) / (hi / lo + 1.0));
  }
  const double t = seconds_since(t0);
  return {eig_err <= 1e-10 && refl < 1e-3 && t < 30.0,
          "eigen-relation error " + num(eig_err) + ", PML reflection " + num(refl) + ", " + num(t) + " s"};
}

Outcome simulation_equivalence(const std::map<std::string, DesignRun>& runs) {
  double worst_res = 0.0;
  double worst_field = 0.0;
  for (const char* name : {"coupler_small.ini", "ar_coating.ini", "cylinder_cloak.ini"}) {
    const DesignRun& r = runs.at(name);
    const io::Device d = io::build_device(r.config);
    const Structure& s = r.summary.result.structure;
    const SourceSpec& src = d.measurements[0].source;
    const YeeOperators& ops = *d.ops[0];
    const Simulation sim = simulate(s, src, ops);
    const FieldStep fs = field_subproblem(s, DesignObjective{}, ops, src);
    const double bn = assemble_b(s, src, ops).norm();
    worst_res = std::max(worst_res, std::abs(fs.residual - physics_residual(s, sim.field, src, ops)) / bn);
    worst_field = std::max(worst_field, (fs.field.hz - sim.field.hz).norm() / sim.field.hz.norm());
  }
  return {worst_res <= 1e-9 && worst_field <= 1e-9,
          "3 designed structures, residual gap " + num(worst_res) + ", field gap " + num(worst_field)};
}

Outcome inverse_crime() {
  std::mt19937 rng(7);
  const GridSpec g(14, 12, 9.0, Boundary::absorbing({4}), Boundary::absorbing({4}));
  const YeeOperators ops = YeeOperators::build(g);
  Structure truth = Structure::uniform(g, 1.0);
  truth.p = random_uniform(g.cells(), 0.2, 0.8, rng);
  truth.vary.assign(g.cells(), true);
  SourceSpec src = SourceSpec::zero(g);
  src.j[g.ey_edge(7, 6)] = 1.0;
  const FieldState x = simulate(truth, src, ops).field;
  const Eigen::MatrixXcd b = Eigen::MatrixXcd(assemble_B(x, src, truth, ops));
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(b).singularValues();
  const double cond = sv.maxCoeff() / sv.minCoeff();
  Structure start = truth;
  start.p += random_uniform(g.cells(), -0.1, 0.1, rng);
  StructureOptions opt;
  opt.relative_tolerance = 1e-14;
  const StructureStep st = structure_subproblem({FieldTerm{&x, &ops, {}, &src}}, start, opt);
  const double err = (st.structure.p - truth.p).lpNorm<Eigen::Infinity>();
  return {cond < 1e12 && err <= 1e-6, "cond(B) " + num(cond) + ", recovery error " + num(err)};
}

Outcome monotone(const std::map<std::string, DesignRun>& runs) {
  std::string detail;
  bool ok = true;
  for (const auto& [name, r] : runs) {
    const ConvergenceTrace t = io::parse_trace(io::read_file(r.out / "trace.csv"));
    const bool m = !t.records.empty() && t.monotone(1e-8);
    ok = ok && m;
    detail += (detail.empty() ? "" : ", ") + name.substr(0, name.size() - 4) + (m ? " ok" : " NOT monotone");
  }
  return {ok, detail};
}

}  // namespace

int main() {
  const fs::path root = fs::temp_directory_path() / "wavefirst_acceptance";
  fs::remove_all(root);

  std::map<std::string, DesignRun> runs;
  for (const char* name : kDesignConfigs) {
    DesignRun r;
    r.config = io::load_config(kConfigs / name);
    r.out = root / fs::path(name).stem();
    io::RunOptions opt;
    opt.out_dir = r.out;
    opt.images = false;
    const auto t0 = std::chrono::steady_clock::now();
    r.summary = io::run_design(r.config, opt);
    r.seconds = seconds_since(t0);
    std::printf("design run %-20s %6.1f s\n", name, r.seconds);
    runs.emplace(name, std::move(r));
  }

  const DesignRun& coupler = runs.at("coupler_small.ini");
  const DesignRun& converter = runs.at("mode_converter.ini");
  const DesignRun& ar = runs.at("ar_coating.ini");
  const DesignRun& cloak = runs.at("cylinder_cloak.ini");
  const DesignRun& mimic = runs.at("cylinder_mimic.ini");

  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"bilinearity identity", bilinearity},
      {"forward-solver dispersion and PML", dispersion},
      {"empty pinning equals simulation", [&] { return simulation_equivalence(runs); }},
      {"inverse-crime structure recovery", inverse_crime},
      {"monotone traces", [&] { return monotone(runs); }},
      {"desk-scale coupler",
       [&] {
         const double e = metric(coupler, "efficiency_0");
         return Outcome{e >= 0.90, "efficiency " + num(e) + " (>= 0.90), " + num(coupler.seconds) + " s"};
       }},
      {"mode converter",
       [&] {
         const double e0 = metric(converter, "initial_efficiency_0");
         const double e = metric(converter, "efficiency_0");
         return Outcome{e0 <= 0.01 && e >= 0.85,
                        "initial " + num(e0) + " (<= 0.01), final " + num(e) + " (>= 0.85)"};
       }},
      {"anti-reflection coating",
       [&] {
         const double e = metric(ar, "efficiency_0");
         return Outcome{e >= 0.99, "efficiency " + num(e) + " (>= 0.99), bare interface " +
                                       num(metric(ar, "baseline_efficiency_0"))};
       }},
      {"cylinder cloak",
       [&] {
         const double diverted = 1.0 - metric(cloak, "baseline_efficiency_0");
         const double e = metric(cloak, "efficiency_0");
         return Outcome{diverted >= 0.30 && e >= 0.95,
                        "uncloaked diverts " + num(diverted) + " (>= 0.30), cloaked " + num(e) + " (>= 0.95)"};
       }},
      {"cylinder mimic",
       [&] {
         const double err = metric(mimic, "relative_error_0");
         return Outcome{err <= 0.20, "relative error " + num(err) + " (<= 0.20)"};
       }},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("criterion %2zu %s  %s: %s\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(),
                o.detail.c_str());
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
