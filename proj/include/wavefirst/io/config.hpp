#pragma once

// Run configuration: a flat INI file.
//
//   [run]        kind, iterations, output_phase_rad, random_free, structure_file
//   [grid]       nx_cells, ny_cells, wavelength_grid_points (one or more),
//                pml_cells, periodic_y
//   [materials]  eps_lo, eps_hi, eps_initial
//   [box]        x0_cells, y0_cells, width_cells, height_cells
//   [coupler] [cloak] [mimic] [custom]   keys for that device kind
//   [modes]      slice for the `modes` command
//
// Full-line comments start with ';' or '#'. Unknown sections and keys are
// rejected with the offending name.

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "wavefirst/error.hpp"
#include "wavefirst/grid.hpp"
#include "wavefirst/io/gridfile.hpp"
#include "wavefirst/objective.hpp"

namespace wavefirst::io {

enum class DeviceKind { None, Coupler, Cloak, Mimic, Custom };
enum class MimicKind { Object, Lens, Mask };

struct Cylinder {
  double radius = 0.0;  // 0: no object
  double eps = -2.0;
  double center_x = -1.0;  // negative: box centre
  double center_y = -1.0;
  bool operator==(const Cylinder&) const = default;
};

struct PortConfig {
  Side side = Side::Left;
  int mode = 0;
  double width = 0.0;  // guide width (coupler)
  double eps = 12.25;  // guide permittivity (coupler)
  bool operator==(const PortConfig&) const = default;
};

struct ModesConfig {
  int slab_cells = 0;  // > 0: standalone slab slice
  double core_width = 0.0;
  double eps_core = 12.25;
  double eps_clad = 1.0;
  int column = -1;  // >= 0: x column of the device background
  int mode_index = -1;  // -1: every guided mode
  bool operator==(const ModesConfig&) const = default;
};

struct RunConfig {
  DeviceKind kind = DeviceKind::None;
  int iterations = 400;
  double output_phase = 0.0;
  bool random_free = true;  // nothing in a run is random; kept for the record
  std::string structure_file;

  int nx = 0;
  int ny = 0;
  std::vector<double> wavelengths;
  int pml_cells = 10;
  bool periodic_y = false;

  double eps_lo = 1.0;
  double eps_hi = 12.25;
  double eps_initial = 9.0;

  Rect box;

  // coupler and custom
  PortConfig input;
  PortConfig output{Side::Right, 0, 0.0, 12.25};
  std::string background_file;
  int source_offset = 3;  // cells between the PML and the source plane
  int plane_offset = 3;   // cells between the box and the measurement plane

  // cloak
  double eps_in = 1.0;
  double eps_out = 1.0;
  Cylinder object;
  double channel_radius = 0.0;  // > object radius: frozen vacuum ring around the object

  // mimic
  MimicKind target = MimicKind::Object;
  double fwhm_wavelengths = 1.5;
  int focus_depth = 20;
  int peaks = 3;
  double separation_wavelengths = 0.28;
  double peak_fwhm = 3.0;
  int plane_column = -1;  // -1: default plane right of the box

  std::optional<ModesConfig> modes;

  // Directory that relative file names resolve against (not serialized).
  std::filesystem::path base_dir;

  bool operator==(const RunConfig& o) const {
    auto tie = [](const RunConfig& c) {
      return std::tie(c.kind, c.iterations, c.output_phase, c.random_free, c.structure_file, c.nx, c.ny,
                      c.wavelengths, c.pml_cells, c.periodic_y, c.eps_lo, c.eps_hi, c.eps_initial, c.box,
                      c.input, c.output, c.background_file, c.source_offset, c.plane_offset, c.eps_in,
                      c.eps_out, c.object, c.channel_radius, c.target, c.fwhm_wavelengths, c.focus_depth,
                      c.peaks, c.separation_wavelengths, c.peak_fwhm, c.plane_column, c.modes);
    };
    return tie(*this) == tie(o);
  }

  std::filesystem::path resolve(const std::string& file) const {
    const std::filesystem::path p(file);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  }

  GridSpec grid(double wavelength) const {
    PmlParams pml;
    pml.thickness = pml_cells;
    return {nx, ny, wavelength, Boundary::absorbing(pml),
            periodic_y ? Boundary::periodic() : Boundary::absorbing(pml)};
  }
};

inline Error config_error(const std::string& what) { return Error(ErrorCode::InvalidConfig, what); }

namespace detail {

inline std::string kind_name(DeviceKind k) {
  switch (k) {
    case DeviceKind::Coupler: return "coupler";
    case DeviceKind::Cloak: return "cloak";
    case DeviceKind::Mimic: return "mimic";
    case DeviceKind::Custom: return "custom";
    case DeviceKind::None: break;
  }
  return "";
}

inline std::string side_name(Side s) {
  switch (s) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Bottom: return "bottom";
    case Side::Top: return "top";
  }
  return "";
}

inline std::string target_name(MimicKind k) {
  switch (k) {
    case MimicKind::Object: return "object";
    case MimicKind::Lens: return "lens";
    case MimicKind::Mask: return "mask";
  }
  return "";
}

/// Typed access to one INI file that remembers which keys were read.
class Reader {
 public:
  explicit Reader(const boost::property_tree::ptree& tree) : tree_(tree) {}

  bool has_section(const std::string& section) const { return tree_.find(section) != tree_.not_found(); }

  std::optional<std::string> raw(const std::string& section, const std::string& key) {
    const auto sec = tree_.find(section);
    if (sec == tree_.not_found()) return std::nullopt;
    const auto it = sec->second.find(key);
    if (it == sec->second.not_found()) return std::nullopt;
    used_.insert(section + "." + key);
    std::string v = it->second.data();
    v.erase(0, v.find_first_not_of(" \t"));
    v.erase(v.find_last_not_of(" \t\r") + 1);
    return v;
  }

  void get(const std::string& section, const std::string& key, double& out) {
    if (auto v = raw(section, key)) {
      if (!parse_double(*v, out) || !std::isfinite(out)) throw bad(section, key, *v, "a number");
    }
  }

  void get(const std::string& section, const std::string& key, int& out) {
    if (auto v = raw(section, key)) {
      const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
      if (res.ec != std::errc() || res.ptr != v->data() + v->size()) throw bad(section, key, *v, "an integer");
    }
  }

  void get(const std::string& section, const std::string& key, bool& out) {
    if (auto v = raw(section, key)) {
      if (*v == "true") {
        out = true;
      } else if (*v == "false") {
        out = false;
      } else {
        throw bad(section, key, *v, "true or false");
      }
    }
  }

  void get(const std::string& section, const std::string& key, std::string& out) {
    if (auto v = raw(section, key)) out = *v;
  }

  void get(const std::string& section, const std::string& key, std::vector<double>& out) {
    if (auto v = raw(section, key)) {
      out.clear();
      std::string text = *v;
      std::replace(text.begin(), text.end(), ',', ' ');  // "21 25" or "21, 25"
      std::istringstream ss(text);
      std::string tok;
      while (ss >> tok) {
        double d = 0.0;
        if (!parse_double(tok, d) || !std::isfinite(d)) throw bad(section, key, *v, "a list of numbers");
        out.push_back(d);
      }
      if (out.empty()) throw bad(section, key, *v, "a list of numbers");
    }
  }

  void get(const std::string& section, const std::string& key, Side& out) {
    if (auto v = raw(section, key)) {
      for (Side s : {Side::Left, Side::Right, Side::Bottom, Side::Top}) {
        if (*v == side_name(s)) {
          out = s;
          return;
        }
      }
      throw bad(section, key, *v, "left, right, bottom or top");
    }
  }

  /// Every key in the file must have been read.
  void reject_unknown() const {
    for (const auto& [section, keys] : tree_) {
      if (keys.empty() && !keys.data().empty()) throw config_error("key '" + section + "' outside any section");
      for (const auto& kv : keys) {
        if (!used_.count(section + "." + kv.first)) {
          throw config_error("unknown key '" + section + "." + kv.first + "'");
        }
      }
    }
  }

  static Error bad(const std::string& section, const std::string& key, const std::string& v, const char* want) {
    return config_error(section + "." + key + " = '" + v + "': expected " + want);
  }

 private:
  const boost::property_tree::ptree& tree_;
  std::set<std::string> used_;
};

inline void read_cylinder(Reader& r, const std::string& sec, Cylinder& c) {
  r.get(sec, "object_radius_cells", c.radius);
  r.get(sec, "object_eps", c.eps);
  r.get(sec, "object_center_x_cells", c.center_x);
  r.get(sec, "object_center_y_cells", c.center_y);
}

inline void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw config_error(what);
  };
  require(c.random_free, "run.random_free must be true: runs are deterministic");
  require(c.eps_lo >= 1.0, "materials.eps_lo must be >= 1 (got " + format_double(c.eps_lo) + ")");
  require(c.eps_hi >= c.eps_lo, "materials.eps_hi must be >= materials.eps_lo");
  require(c.eps_initial >= c.eps_lo && c.eps_initial <= c.eps_hi,
          "materials.eps_initial must lie in [eps_lo, eps_hi]");
  if (c.modes) {
    const ModesConfig& m = *c.modes;
    require(m.slab_cells > 0 || m.column >= 0, "modes needs modes.slab_cells or modes.column_cells");
    require(m.slab_cells == 0 || (m.core_width >= 0.0 && m.core_width <= m.slab_cells),
            "modes.core_width_cells must lie in [0, slab_cells]");
    require(m.eps_core > 0.0 && m.eps_clad > 0.0, "modes.eps_core and modes.eps_clad must be positive");
    require(!c.wavelengths.empty(), "grid.wavelength_grid_points is required");
  }
  if (c.kind == DeviceKind::None) return;
  require(c.nx > 0 && c.ny > 0, "grid.nx_cells and grid.ny_cells are required");
  require(!c.wavelengths.empty(), "grid.wavelength_grid_points is required");
  require(c.iterations >= 0, "run.iterations must be >= 0");
  require(c.box.width > 0 && c.box.height > 0, "box.width_cells and box.height_cells are required");
  require(c.source_offset >= 0, "source_offset_cells must be >= 0");
  require(c.plane_offset >= 0, "plane_offset_cells must be >= 0");
  const bool periodic_kind = c.kind == DeviceKind::Cloak || c.kind == DeviceKind::Mimic;
  require(!periodic_kind || c.periodic_y, "grid.periodic_y must be true for " + kind_name(c.kind) + " devices");
  if (c.kind == DeviceKind::Coupler) {
    require(c.input.width > 0.0, "coupler.input_width_cells must be positive");
    require(c.output.width > 0.0, "coupler.output_width_cells must be positive");
    require(c.input.eps >= 1.0 && c.output.eps >= 1.0, "coupler guide eps must be >= 1");
  }
  if (c.kind == DeviceKind::Custom) {
    require(!c.background_file.empty(), "custom.background_file is required");
    require(c.input.side != c.output.side, "custom.input_side and custom.output_side must differ");
  }
  if (c.kind == DeviceKind::Cloak) {
    require(c.eps_in >= 1.0 && c.eps_out >= 1.0, "cloak.eps_in and cloak.eps_out must be >= 1");
    require(c.object.radius >= 0.0, "cloak.object_radius_cells must be >= 0");
  }
  if (c.kind == DeviceKind::Mimic) {
    require(c.target != MimicKind::Object || c.object.radius > 0.0, "mimic.object_radius_cells must be positive");
    require(c.fwhm_wavelengths > 0.0, "mimic.fwhm_wavelengths must be positive");
    require(c.focus_depth >= 1, "mimic.focus_depth_cells must be >= 1");
    require(c.peaks >= 1, "mimic.peaks must be >= 1");
    require(c.peak_fwhm > 0.0, "mimic.peak_fwhm_cells must be positive");
  }
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw config_error(std::string("line ") + std::to_string(e.line()) + ": " + e.message());
  }
  detail::Reader r(tree);
  RunConfig c;
  c.base_dir = base_dir;

  std::string kind;
  r.get("run", "kind", kind);
  if (kind == "coupler") {
    c.kind = DeviceKind::Coupler;
  } else if (kind == "cloak") {
    c.kind = DeviceKind::Cloak;
  } else if (kind == "mimic") {
    c.kind = DeviceKind::Mimic;
  } else if (kind == "custom") {
    c.kind = DeviceKind::Custom;
  } else if (!kind.empty()) {
    throw detail::Reader::bad("run", "kind", kind, "coupler, cloak, mimic or custom");
  }
  r.get("run", "iterations", c.iterations);
  r.get("run", "output_phase_rad", c.output_phase);
  r.get("run", "random_free", c.random_free);
  r.get("run", "structure_file", c.structure_file);

  r.get("grid", "nx_cells", c.nx);
  r.get("grid", "ny_cells", c.ny);
  r.get("grid", "wavelength_grid_points", c.wavelengths);
  r.get("grid", "pml_cells", c.pml_cells);
  r.get("grid", "periodic_y", c.periodic_y);

  r.get("materials", "eps_lo", c.eps_lo);
  r.get("materials", "eps_hi", c.eps_hi);
  r.get("materials", "eps_initial", c.eps_initial);

  r.get("box", "x0_cells", c.box.x0);
  r.get("box", "y0_cells", c.box.y0);
  r.get("box", "width_cells", c.box.width);
  r.get("box", "height_cells", c.box.height);

  // Only the section of the configured kind is read; another kind's section
  // is reported as unknown.
  switch (c.kind) {
    case DeviceKind::Coupler:
      r.get("coupler", "input_width_cells", c.input.width);
      r.get("coupler", "input_eps", c.input.eps);
      r.get("coupler", "input_mode", c.input.mode);
      r.get("coupler", "output_width_cells", c.output.width);
      r.get("coupler", "output_eps", c.output.eps);
      r.get("coupler", "output_mode", c.output.mode);
      r.get("coupler", "source_offset_cells", c.source_offset);
      r.get("coupler", "plane_offset_cells", c.plane_offset);
      break;
    case DeviceKind::Custom:
      r.get("custom", "background_file", c.background_file);
      r.get("custom", "input_side", c.input.side);
      r.get("custom", "input_mode", c.input.mode);
      r.get("custom", "output_side", c.output.side);
      r.get("custom", "output_mode", c.output.mode);
      r.get("custom", "source_offset_cells", c.source_offset);
      r.get("custom", "plane_offset_cells", c.plane_offset);
      break;
    case DeviceKind::Cloak:
      r.get("cloak", "eps_in", c.eps_in);
      r.get("cloak", "eps_out", c.eps_out);
      detail::read_cylinder(r, "cloak", c.object);
      r.get("cloak", "channel_radius_cells", c.channel_radius);
      r.get("cloak", "source_offset_cells", c.source_offset);
      r.get("cloak", "plane_offset_cells", c.plane_offset);
      break;
    case DeviceKind::Mimic: {
      std::string target;
      r.get("mimic", "target", target);
      if (target == "object" || target.empty()) {
        c.target = MimicKind::Object;
      } else if (target == "lens") {
        c.target = MimicKind::Lens;
      } else if (target == "mask") {
        c.target = MimicKind::Mask;
      } else {
        throw detail::Reader::bad("mimic", "target", target, "object, lens or mask");
      }
      detail::read_cylinder(r, "mimic", c.object);
      r.get("mimic", "fwhm_wavelengths", c.fwhm_wavelengths);
      r.get("mimic", "focus_depth_cells", c.focus_depth);
      r.get("mimic", "peaks", c.peaks);
      r.get("mimic", "separation_wavelengths", c.separation_wavelengths);
      r.get("mimic", "peak_fwhm_cells", c.peak_fwhm);
      r.get("mimic", "plane_column_cells", c.plane_column);
      r.get("mimic", "source_offset_cells", c.source_offset);
      break;
    }
    case DeviceKind::None:
      break;
  }

  if (r.has_section("modes")) {
    ModesConfig m;
    r.get("modes", "slab_cells", m.slab_cells);
    r.get("modes", "core_width_cells", m.core_width);
    r.get("modes", "eps_core", m.eps_core);
    r.get("modes", "eps_clad", m.eps_clad);
    r.get("modes", "column_cells", m.column);
    r.get("modes", "mode_index", m.mode_index);
    c.modes = m;
  }

  r.reject_unknown();
  detail::validate(c);
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw config_error(e.what());
  }
  return parse_config(text, path.parent_path());
}

/// INI text that parses back to an equal configuration.
inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream o;
  auto num = [](double v) { return format_double(v); };
  auto cylinder = [&](const Cylinder& cy) {
    o << "object_radius_cells = " << num(cy.radius) << "\nobject_eps = " << num(cy.eps)
      << "\nobject_center_x_cells = " << num(cy.center_x) << "\nobject_center_y_cells = " << num(cy.center_y)
      << "\n";
  };
  o << "[run]\n";
  if (c.kind != DeviceKind::None) o << "kind = " << detail::kind_name(c.kind) << "\n";
  o << "iterations = " << c.iterations << "\noutput_phase_rad = " << num(c.output_phase)
    << "\nrandom_free = " << (c.random_free ? "true" : "false") << "\n";
  if (!c.structure_file.empty()) o << "structure_file = " << c.structure_file << "\n";
  o << "\n[grid]\nnx_cells = " << c.nx << "\nny_cells = " << c.ny << "\n";
  if (!c.wavelengths.empty()) {
    o << "wavelength_grid_points =";
    for (double w : c.wavelengths) o << " " << num(w);
    o << "\n";
  }
  o << "pml_cells = " << c.pml_cells << "\nperiodic_y = " << (c.periodic_y ? "true" : "false") << "\n";
  o << "\n[materials]\neps_lo = " << num(c.eps_lo) << "\neps_hi = " << num(c.eps_hi)
    << "\neps_initial = " << num(c.eps_initial) << "\n";
  o << "\n[box]\nx0_cells = " << c.box.x0 << "\ny0_cells = " << c.box.y0 << "\nwidth_cells = " << c.box.width
    << "\nheight_cells = " << c.box.height << "\n";
  switch (c.kind) {
    case DeviceKind::Coupler:
      o << "\n[coupler]\ninput_width_cells = " << num(c.input.width) << "\ninput_eps = " << num(c.input.eps)
        << "\ninput_mode = " << c.input.mode << "\noutput_width_cells = " << num(c.output.width)
        << "\noutput_eps = " << num(c.output.eps) << "\noutput_mode = " << c.output.mode
        << "\nsource_offset_cells = " << c.source_offset << "\nplane_offset_cells = " << c.plane_offset << "\n";
      break;
    case DeviceKind::Custom:
      o << "\n[custom]\nbackground_file = " << c.background_file
        << "\ninput_side = " << detail::side_name(c.input.side) << "\ninput_mode = " << c.input.mode
        << "\noutput_side = " << detail::side_name(c.output.side) << "\noutput_mode = " << c.output.mode
        << "\nsource_offset_cells = " << c.source_offset << "\nplane_offset_cells = " << c.plane_offset << "\n";
      break;
    case DeviceKind::Cloak:
      o << "\n[cloak]\neps_in = " << num(c.eps_in) << "\neps_out = " << num(c.eps_out) << "\n";
      cylinder(c.object);
      o << "channel_radius_cells = " << num(c.channel_radius) << "\nsource_offset_cells = " << c.source_offset
        << "\nplane_offset_cells = " << c.plane_offset << "\n";
      break;
    case DeviceKind::Mimic:
      o << "\n[mimic]\ntarget = " << detail::target_name(c.target) << "\n";
      cylinder(c.object);
      o << "fwhm_wavelengths = " << num(c.fwhm_wavelengths) << "\nfocus_depth_cells = " << c.focus_depth
        << "\npeaks = " << c.peaks << "\nseparation_wavelengths = " << num(c.separation_wavelengths)
        << "\npeak_fwhm_cells = " << num(c.peak_fwhm) << "\nplane_column_cells = " << c.plane_column
        << "\nsource_offset_cells = " << c.source_offset << "\n";
      break;
    case DeviceKind::None:
      break;
  }
  if (c.modes) {
    const ModesConfig& m = *c.modes;
    o << "\n[modes]\nslab_cells = " << m.slab_cells << "\ncore_width_cells = " << num(m.core_width)
      << "\neps_core = " << num(m.eps_core) << "\neps_clad = " << num(m.eps_clad)
      << "\ncolumn_cells = " << m.column << "\nmode_index = " << m.mode_index << "\n";
  }
  return o.str();
}

}  // namespace wavefirst::io
