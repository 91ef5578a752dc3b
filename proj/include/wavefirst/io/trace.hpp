#pragma once

// trace.csv: one row per iteration with the residual after each half step.
// Wall time is left out so reruns are byte-identical.

#include <sstream>
#include <string>
#include <vector>

#include "wavefirst/design.hpp"
#include "wavefirst/io/gridfile.hpp"

namespace wavefirst::io {

inline constexpr const char* kTraceHeader = "iteration,field_step_residual,structure_step_residual";

inline std::string format_trace(const ConvergenceTrace& trace) {
  std::string out = std::string(kTraceHeader) + "\n";
  for (const TraceRecord& r : trace.records) {
    out += std::to_string(r.iteration) + "," + format_double(r.residual_after_field_step) + "," +
           format_double(r.residual_after_structure_step) + "\n";
  }
  return out;
}

inline ConvergenceTrace parse_trace(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw Error(ErrorCode::Io, "trace: missing header");
  ConvergenceTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string it, f, s;
    TraceRecord r;
    if (!std::getline(ls, it, ',') || !std::getline(ls, f, ',') || !std::getline(ls, s) ||
        !parse_double(f, r.residual_after_field_step) || !parse_double(s, r.residual_after_structure_step)) {
      throw Error(ErrorCode::Io, "trace: bad row '" + line + "'");
    }
    r.iteration = std::stoi(it);
    trace.records.push_back(r);
  }
  return trace;
}

}  // namespace wavefirst::io
