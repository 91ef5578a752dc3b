#pragma once

// The three runs behind the command-line tool. Each writes its files into an
// output directory and returns what it measured.
//
// Errors map to the tool's exit codes through exit_code(): configuration and
// geometry problems give 2, numerical failures 3.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "wavefirst/io/config.hpp"
#include "wavefirst/io/devices.hpp"
#include "wavefirst/io/gridfile.hpp"
#include "wavefirst/io/heatmap.hpp"
#include "wavefirst/io/trace.hpp"

namespace wavefirst::io {

inline int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidGrid:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::PortInPml:
    case ErrorCode::PlaneInPml:
    case ErrorCode::RequiresPeriodic:
      return 2;
    default:
      return 3;
  }
}

struct RunOptions {
  std::filesystem::path out_dir = ".";
  int threads = 1;
  bool images = true;
  std::ostream* log = nullptr;  // progress lines, if set
};

/// "key = value" lines, values in shortest round-trip form.
using Metrics = std::map<std::string, std::string>;

inline std::string format_metrics(const Metrics& m) {
  std::string out;
  for (const auto& [k, v] : m) out += k + " = " + v + "\n";
  return out;
}

inline Metrics parse_metrics(const std::string& text) {
  Metrics m;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return m;
}

namespace detail {

inline std::string metric_name(const Device& d, std::size_t k) {
  return (d.measurements[k].is_error() ? "relative_error_" : "efficiency_") + std::to_string(k);
}

inline void write_fields(const Device& d, const std::vector<Simulation>& sims, const RunOptions& opt) {
  for (std::size_t k = 0; k < sims.size(); ++k) {
    const GridSpec& g = d.ops[k]->grid;
    const std::filesystem::path stem = opt.out_dir / ("field_" + std::to_string(k));
    write_grid(std::filesystem::path(stem) += ".grid", sims[k].field.hz, g.nx(), g.ny());
    if (opt.images) write_field_pngs(stem, sims[k].field.hz, g.nx(), g.ny());
  }
}

inline void write_structure(const Device& d, const Structure& s, const RunOptions& opt) {
  const GridSpec& g = d.ops.front()->grid;
  const RVec eps = eps_of(s);
  write_grid(opt.out_dir / "structure.grid", eps, g.nx(), g.ny());
  if (opt.images) write_eps_png(opt.out_dir / "structure.png", eps, g.nx(), g.ny(), d.config.eps_lo, d.config.eps_hi);
}

/// Simulates every objective on `s` and records its metric under `prefix`.
inline std::vector<Simulation> evaluate(const Device& d, const Structure& s, Metrics& m, const std::string& prefix) {
  std::vector<Simulation> sims;
  for (std::size_t k = 0; k < d.objectives.size(); ++k) {
    sims.push_back(simulate_objective(d, k, s));
    m[prefix + metric_name(d, k)] = format_double(measure(d, k, sims.back().field));
  }
  return sims;
}

inline void prepare(const RunOptions& opt) {
  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + opt.out_dir.string() + ": " + ec.message());
}

}  // namespace detail

struct DesignSummary {
  DesignResult result;
  Metrics metrics;
};

inline DesignSummary run_design(const RunConfig& config, const RunOptions& opt) {
  const Device d = build_device(config);
  detail::prepare(opt);
  DesignSummary out;
  Metrics& m = out.metrics;
  m["kind"] = detail::kind_name(config.kind);
  m["objectives"] = std::to_string(d.objectives.size());
  for (std::size_t k = 0; k < d.objectives.size(); ++k) {
    m["wavelength_" + std::to_string(k)] = format_double(d.ops[k]->grid.wavelength());
  }
  detail::evaluate(d, d.initial, m, "initial_");
  if (d.baseline) detail::evaluate(d, *d.baseline, m, "baseline_");

  const int every = std::max(1, config.iterations / 10);
  out.result = alternating_directions(make_problem(d, opt.threads), [&](const TraceRecord& r) {
    if (opt.log && (r.iteration % every == 0 || r.iteration + 1 == config.iterations)) {
      *opt.log << "iteration " << r.iteration << "  field " << format_double(r.residual_after_field_step)
               << "  structure " << format_double(r.residual_after_structure_step) << "\n";
    }
  });
  const DesignResult& res = out.result;
  const std::vector<Simulation> sims = detail::evaluate(d, res.structure, m, "");
  m["iterations"] = std::to_string(res.trace.records.size());
  m["final_residual"] =
      res.trace.records.empty() ? "0" : format_double(res.trace.records.back().residual_after_structure_step);
  m["monotone"] = res.trace.monotone() ? "true" : "false";
  m["structure_converged"] = res.structure_converged ? "true" : "false";

  detail::write_structure(d, res.structure, opt);
  detail::write_fields(d, sims, opt);
  write_file_atomic(opt.out_dir / "trace.csv", format_trace(res.trace));
  write_file_atomic(opt.out_dir / "metrics.txt", format_metrics(m));
  return out;
}

struct SimulateSummary {
  std::vector<Simulation> sims;
  Metrics metrics;
};

/// Forward solve of the configured device on `run.structure_file` (an eps
/// grid) or, without one, on the device's background.
inline SimulateSummary run_simulate(const RunConfig& config, const RunOptions& opt) {
  const Device d = build_device(config);
  const Structure s = config.structure_file.empty()
                          ? d.background
                          : load_structure(config.resolve(config.structure_file), d.ops.front()->grid);
  detail::prepare(opt);
  SimulateSummary out;
  Metrics& m = out.metrics;
  m["kind"] = detail::kind_name(config.kind);
  m["objectives"] = std::to_string(d.objectives.size());
  out.sims = detail::evaluate(d, s, m, "");
  for (std::size_t k = 0; k < out.sims.size(); ++k) {
    const SolveReport& r = out.sims[k].report;
    const std::string n = std::to_string(k);
    m["wavelength_" + n] = format_double(d.ops[k]->grid.wavelength());
    m["solve_relative_residual_" + n] = format_double(r.relative_residual);
    m["solve_method_" + n] = r.method == SolveMethod::Iterative ? "iterative" : "direct";
    m["solve_iterations_" + n] = std::to_string(r.iterations);
  }
  detail::write_fields(d, out.sims, opt);
  write_file_atomic(opt.out_dir / "metrics.txt", format_metrics(m));
  return out;
}

/// Guided modes of the configured slice.
inline std::vector<ModeProfile> run_modes(const RunConfig& config, const RunOptions& opt, std::ostream& table) {
  if (!config.modes) throw config_error("modes needs a [modes] section");
  const ModesConfig& mc = *config.modes;
  const double omega = 2.0 * kPi / config.wavelengths.front();
  RVec slice;
  if (mc.slab_cells > 0) {
    slice = RVec::Constant(mc.slab_cells, mc.eps_clad);
    for (int t = 0; t < mc.slab_cells; ++t) {
      if (std::abs(t + 0.5 - 0.5 * mc.slab_cells) < 0.5 * mc.core_width) slice[t] = mc.eps_core;
    }
  } else {
    const Device d = build_device(config);
    const GridSpec& g = d.ops.front()->grid;
    if (mc.column >= g.nx()) throw config_error("modes.column_cells lies outside the grid");
    const Rect in = g.interior();
    slice = slice_eps(d.background, g, {Axis::X, mc.column, in.y0, in.y1(), +1});
  }
  std::vector<ModeProfile> modes;
  if (mc.mode_index >= 0) {
    modes.push_back(solve_waveguide_mode(slice, omega, mc.mode_index));
  } else {
    modes = guided_modes(slice, omega);
  }
  detail::prepare(opt);
  table << "mode_index beta\n";
  for (const ModeProfile& mode : modes) {
    table << mode.mode_index << " " << format_double(mode.beta) << "\n";
    write_grid(opt.out_dir / ("mode_" + std::to_string(mode.mode_index) + ".grid"), mode.profile,
               static_cast<int>(mode.profile.size()), 1);
  }
  return modes;
}

}  // namespace wavefirst::io
