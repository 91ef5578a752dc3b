#pragma once

// Turns a RunConfig into a runnable device: operators and pinned objectives
// for each wavelength, the background, starting and baseline structures, and
// the validation measurement (source plus efficiency or error plane).

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wavefirst/design.hpp"
#include "wavefirst/io/config.hpp"
#include "wavefirst/io/gridfile.hpp"
#include "wavefirst/metrics.hpp"
#include "wavefirst/modes.hpp"
#include "wavefirst/objective.hpp"
#include "wavefirst/solver.hpp"

namespace wavefirst::io {

struct Measurement {
  SourceSpec source;
  double input_power = 0.0;
  PortPlane plane;
  std::optional<ModeProfile> output_mode;  // efficiency into this mode, or
  CVec target;                             // relative error against this field
  bool is_error() const { return !output_mode; }
};

struct Device {
  RunConfig config;
  std::vector<std::shared_ptr<const YeeOperators>> ops;  // one per wavelength
  Structure background;  // no design; objects present
  Structure initial;     // design starting point
  std::optional<Structure> baseline;  // uncloaked object, when there is one
  std::vector<DesignObjective> objectives;
  std::vector<Measurement> measurements;
};

namespace detail {

/// Plane `offset` cells inside the absorbing layer on `side`, across the whole
/// interior, facing into the grid.
inline PortPlane source_plane(const GridSpec& grid, Side side, int offset) {
  const Rect in = grid.interior();
  switch (side) {
    case Side::Left: return {Axis::X, in.x0 + offset, in.y0, in.y1(), +1};
    case Side::Right: return {Axis::X, in.x1() - 1 - offset, in.y0, in.y1(), -1};
    case Side::Bottom: return {Axis::Y, in.y0 + offset, in.x0, in.x1(), +1};
    case Side::Top: return {Axis::Y, in.y1() - 1 - offset, in.x0, in.x1(), -1};
  }
  return {};
}

/// Plane `gap` cells beyond a box side, across the whole interior, facing out.
inline PortPlane exit_plane(const GridSpec& grid, const Rect& box, Side side, int gap) {
  PortPlane p = side_plane(box, side, gap, true);
  const Rect in = grid.interior();
  if (p.axis == Axis::X) {
    p.lo = in.y0;
    p.hi = in.y1();
  } else {
    p.lo = in.x0;
    p.hi = in.x1();
  }
  return p;
}

inline std::vector<bool> cylinder_mask(const GridSpec& grid, const Rect& box, const Cylinder& c, double radius) {
  std::vector<bool> mask(grid.cells(), false);
  if (!(radius > 0.0)) return mask;
  const double cx = c.center_x >= 0.0 ? c.center_x : box.x0 + 0.5 * box.width;
  const double cy = c.center_y >= 0.0 ? c.center_y : box.y0 + 0.5 * box.height;
  for (int i = 0; i < grid.nx(); ++i) {
    for (int j = 0; j < grid.ny(); ++j) {
      if (std::hypot(i + 0.5 - cx, j + 0.5 - cy) <= radius) mask[grid.cell(i, j)] = true;
    }
  }
  return mask;
}

/// Starting structure: background with the box's free cells at eps_initial,
/// the pinned layers frozen to the exterior.
inline Structure start_structure(const RunConfig& c, const GridSpec& grid, const Structure& background,
                                 const std::vector<bool>& vary, const DesignObjective& obj) {
  Structure s = background;
  s.p_lo = 1.0 / c.eps_hi;
  s.p_hi = 1.0 / c.eps_lo;
  s.vary = vary;
  for (int k = 0; k < grid.cells(); ++k) {
    if (s.vary[k]) s.p[k] = 1.0 / c.eps_initial;
  }
  freeze_pinned_layers(s, grid, obj);
  return s;
}

inline std::vector<bool> box_mask(const GridSpec& grid, const Rect& box) {
  std::vector<bool> m(grid.cells(), false);
  for (int c : window_cells(grid, box)) m[c] = true;
  return m;
}

inline Structure load_background(const RunConfig& c) {
  GridData g;
  try {
    g = read_grid(c.resolve(c.background_file));
  } catch (const Error& e) {
    throw config_error(std::string("custom.background_file: ") + e.what());
  }
  if (g.nx != c.nx || g.ny != c.ny) {
    throw config_error("custom.background_file is " + std::to_string(g.nx) + "x" + std::to_string(g.ny) +
                       ", grid is " + std::to_string(c.nx) + "x" + std::to_string(c.ny));
  }
  Structure s;
  s.p.resize(g.values.size());
  s.vary.assign(g.values.size(), false);
  for (Eigen::Index k = 0; k < g.values.size(); ++k) {
    const double eps = g.values[k].real();
    if (eps == 0.0 || !std::isfinite(eps)) throw config_error("custom.background_file holds a zero or non-finite eps");
    s.p[k] = 1.0 / eps;
  }
  return s;
}

inline void build_port_device(Device& d) {
  const RunConfig& c = d.config;
  const GridSpec& g0 = d.ops.front()->grid;
  if (c.kind == DeviceKind::Coupler) {
    d.background = Structure::uniform(g0, 1.0);
    const double yc = c.box.y0 + 0.5 * c.box.height;
    for (int i = 0; i < g0.nx(); ++i) {
      for (int j = 0; j < g0.ny(); ++j) {
        const double dy = std::abs(j + 0.5 - yc);
        if (i < c.box.x0 && dy < 0.5 * c.input.width) d.background.p[g0.cell(i, j)] = 1.0 / c.input.eps;
        if (i >= c.box.x1() && dy < 0.5 * c.output.width) d.background.p[g0.cell(i, j)] = 1.0 / c.output.eps;
      }
    }
  } else {
    d.background = load_background(c);
  }
  for (std::size_t k = 0; k < d.ops.size(); ++k) {
    const GridSpec& g = d.ops[k]->grid;
    auto port_mode = [&](const PortConfig& port) {
      const PortPlane edge = side_plane(c.box, port.side, 0, true);
      return PortMode{port.side, solve_waveguide_mode(slice_eps(d.background, g, edge), g.omega(), port.mode)};
    };
    d.objectives.push_back(
        build_coupler_objective(g, c.box, port_mode(c.input), port_mode(c.output), c.output_phase));

    Measurement m;
    const PortPlane src = source_plane(g, c.input.side, c.source_offset);
    const ModeProfile launched = solve_waveguide_mode(slice_eps(d.background, g, src), g.omega(), c.input.mode);
    m.source = mode_source(launched, src, g, 1.0, src.position);
    m.input_power = launched.unit_power();
    m.plane = exit_plane(g, c.box, c.output.side, c.plane_offset);
    m.output_mode = solve_waveguide_mode(slice_eps(d.background, g, m.plane), g.omega(), c.output.mode);
    d.measurements.push_back(std::move(m));
  }
  d.initial = start_structure(c, g0, d.background, box_mask(g0, c.box), d.objectives.front());
}

inline Measurement plane_wave_measurement(const RunConfig& c, const GridSpec& g, double eps_in) {
  Measurement m;
  const ModeProfile in = plane_wave_profile(g, eps_in);
  const PortPlane src = source_plane(g, Side::Left, c.source_offset);
  m.source = mode_source(in, src, g, 1.0, src.position);
  m.input_power = in.unit_power();
  return m;
}

inline void build_cloak_device(Device& d) {
  const RunConfig& c = d.config;
  const GridSpec& g0 = d.ops.front()->grid;
  d.background = Structure::uniform(g0, 1.0 / c.eps_in);
  for (int i = c.box.x1(); i < g0.nx(); ++i) {
    for (int j = 0; j < g0.ny(); ++j) d.background.p[g0.cell(i, j)] = 1.0 / c.eps_out;
  }
  const std::vector<bool> object = cylinder_mask(g0, c.box, c.object, c.object.radius);
  const std::vector<bool> near = cylinder_mask(g0, c.box, c.object, c.channel_radius);
  std::vector<bool> channel(g0.cells(), false);
  for (int k = 0; k < g0.cells(); ++k) {
    if (object[k]) {
      if (!c.box.contains(g0.cell_x(k), g0.cell_y(k))) throw config_error("cloak object must lie inside the box");
      d.background.p[k] = 1.0 / c.object.eps;
    }
    channel[k] = near[k] && !object[k];
  }
  CloakOptions opt;
  opt.eps_in = c.eps_in;
  opt.eps_out = c.eps_out;
  opt.output_phase = c.output_phase;
  opt.channel_mask = channel;
  std::vector<bool> vary;
  for (const auto& ops : d.ops) {
    const GridSpec& g = ops->grid;
    CloakObjective co = build_cloak_objective(g, c.box, object, opt);
    vary = co.vary;
    d.objectives.push_back(std::move(co.objective));
    Measurement m = plane_wave_measurement(c, g, c.eps_in);
    m.plane = exit_plane(g, c.box, Side::Right, c.plane_offset);
    m.output_mode = plane_wave_profile(g, c.eps_out);
    d.measurements.push_back(std::move(m));
  }
  d.initial = start_structure(c, g0, d.background, vary, d.objectives.front());
  for (int k = 0; k < g0.cells(); ++k) {
    if (object[k] && d.initial.p[k] != d.background.p[k]) {
      throw config_error("cloak object overlaps the pinned layers of the box");
    }
  }
  d.baseline = d.background;
}

inline void build_mimic_device(Device& d) {
  const RunConfig& c = d.config;
  const GridSpec& g0 = d.ops.front()->grid;
  d.background = Structure::uniform(g0, 1.0);
  std::optional<Structure> object;
  if (c.target == MimicKind::Object) {
    object = d.background;
    const std::vector<bool> mask = cylinder_mask(g0, c.box, c.object, c.object.radius);
    for (int k = 0; k < g0.cells(); ++k) {
      if (mask[k]) object->p[k] = 1.0 / c.object.eps;
    }
  }
  for (const auto& ops : d.ops) {
    const GridSpec& g = ops->grid;
    Measurement m = plane_wave_measurement(c, g, 1.0);
    MimicTarget t;
    const double centre = 0.5 * g.ny();
    switch (c.target) {
      case MimicKind::Object: {
        const int plane = c.plane_column >= 0 ? c.plane_column : default_error_plane(c.box);
        t = target_from_field(simulate(*object, m.source, *ops).field, g, c.box, plane);
        break;
      }
      case MimicKind::Lens: {
        const int plane = c.plane_column >= 0 ? c.plane_column : c.box.x1() - 1 + c.focus_depth;
        t = lens_target(g, c.box, c.fwhm_wavelengths * g.wavelength(), c.focus_depth, centre, plane);
        break;
      }
      case MimicKind::Mask: {
        const int plane = c.plane_column >= 0 ? c.plane_column : default_error_plane(c.box);
        t = mask_target(g, c.box, c.peaks, c.separation_wavelengths * g.wavelength(), c.peak_fwhm, centre, plane);
        break;
      }
    }
    if (!t.input) {
      const cplx phase = std::exp(cplx(0.0, c.output_phase));
      t.output.outer *= phase;
      t.output.inner *= phase;
      t.plane_target *= phase;
    }
    d.objectives.push_back(build_mimic_objective(g, c.box, t));
    m.plane = {Axis::X, t.plane_column, 0, g.ny(), +1};
    m.target = t.plane_target;
    d.measurements.push_back(std::move(m));
  }
  d.initial = start_structure(c, g0, d.background, box_mask(g0, c.box), d.objectives.front());
  d.baseline = object;
}

}  // namespace detail

inline Device build_device(const RunConfig& config) {
  if (config.kind == DeviceKind::None) throw config_error("run.kind is required");
  Device d;
  d.config = config;
  for (double w : config.wavelengths) {
    d.ops.push_back(std::make_shared<const YeeOperators>(YeeOperators::build(config.grid(w))));
  }
  switch (config.kind) {
    case DeviceKind::Coupler:
    case DeviceKind::Custom:
      detail::build_port_device(d);
      break;
    case DeviceKind::Cloak:
      detail::build_cloak_device(d);
      break;
    case DeviceKind::Mimic:
      detail::build_mimic_device(d);
      break;
    case DeviceKind::None:
      break;
  }
  return d;
}

inline DesignProblem make_problem(const Device& d, int threads = 1) {
  DesignProblem prob;
  prob.structure = d.initial;
  prob.max_iterations = d.config.iterations;
  prob.threads = threads;
  for (std::size_t k = 0; k < d.objectives.size(); ++k) prob.objectives.push_back({d.objectives[k], d.ops[k]});
  return prob;
}

/// Efficiency (or relative error, for mimics) of field `x` for objective k.
inline double measure(const Device& d, std::size_t k, const FieldState& x) {
  const Measurement& m = d.measurements[k];
  const GridSpec& g = d.ops[k]->grid;
  if (m.is_error()) return relative_error(x, m.target, g, m.plane).relative_error;
  return coupling_efficiency(x, g, *m.output_mode, m.plane, m.input_power).efficiency;
}

inline Simulation simulate_objective(const Device& d, std::size_t k, const Structure& s) {
  return simulate(s, d.measurements[k].source, *d.ops[k]);
}

/// Structure read from an eps grid file (frozen everywhere).
inline Structure load_structure(const std::filesystem::path& path, const GridSpec& grid) {
  GridData g;
  try {
    g = read_grid(path);
  } catch (const Error& e) {
    throw config_error(std::string("structure file: ") + e.what());
  }
  if (g.nx != grid.nx() || g.ny != grid.ny()) throw config_error("structure file size does not match the grid");
  Structure s = Structure::uniform(grid, 1.0);
  for (Eigen::Index k = 0; k < g.values.size(); ++k) s.p[k] = 1.0 / g.values[k].real();
  return s;
}

inline RVec eps_of(const Structure& s) { return s.p.cwiseInverse(); }

}  // namespace wavefirst::io
