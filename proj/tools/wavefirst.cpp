// wavefirst: design | simulate | modes <config> [--out DIR]
//
// Exit codes: 0 success, 2 configuration error, 3 solver failure.
// WAVEFIRST_THREADS caps the number of field solves run at once.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wavefirst/io/runs.hpp"

namespace {

int threads_from_env() {
  const char* v = std::getenv("WAVEFIRST_THREADS");
  if (!v || !*v) return 1;
  int n = 0;
  const std::string s(v);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), n);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || n < 1) {
    throw wavefirst::Error(wavefirst::ErrorCode::InvalidConfig, "WAVEFIRST_THREADS must be a positive integer");
  }
  return n;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace wavefirst;
  CLI::App app{"Objective-first FDFD design of 2D photonic devices"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = ".";
  bool no_images = false;
  std::string structure;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "run configuration (INI)")->required();
    sub->add_option("--out", out_dir, "output directory");
  };
  CLI::App* design = app.add_subcommand("design", "run an objective-first design");
  add_common(design);
  design->add_flag("--no-images", no_images, "skip the PNG heatmaps");
  CLI::App* sim = app.add_subcommand("simulate", "forward-simulate a structure");
  add_common(sim);
  sim->add_option("--structure", structure, "eps grid to simulate (overrides run.structure_file)");
  sim->add_flag("--no-images", no_images, "skip the PNG heatmaps");
  CLI::App* modes = app.add_subcommand("modes", "list the guided modes of a slice");
  add_common(modes);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    io::RunOptions opt;
    opt.out_dir = out_dir;
    opt.threads = threads_from_env();
    opt.images = !no_images;
    opt.log = &std::cerr;
    io::RunConfig config = io::load_config(config_path);
    if (design->parsed()) {
      const io::DesignSummary s = io::run_design(config, opt);
      std::cout << io::format_metrics(s.metrics);
    } else if (sim->parsed()) {
      if (!structure.empty()) {
        config.structure_file = std::filesystem::absolute(structure).string();
      }
      const io::SimulateSummary s = io::run_simulate(config, opt);
      std::cout << io::format_metrics(s.metrics);
    } else {
      io::run_modes(config, opt, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "wavefirst: " << e.what() << "\n";
    return io::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "wavefirst: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
