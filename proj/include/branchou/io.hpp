#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "branchou/analysis.hpp"
#include "branchou/generation.hpp"
#include "branchou/params.hpp"
#include "branchou/simulate.hpp"

namespace branchou::io {

struct Trajectory {
  std::string run_id;
  std::vector<Generation> snapshots;
};

// CSV, one row per particle per snapshot, sorted by (generation, t, particle).
// particle_index is the 1-based label. Coordinates carry 17 significant digits.
void write_snapshot(const Trajectory& trajectory, std::ostream& out);
void write_snapshot(const Trajectory& trajectory, const std::filesystem::path& path);

// Throws ParseError with the 1-based line number of the offending row.
Trajectory read_snapshot(std::istream& in, const std::string& source = "<stream>");
Trajectory read_snapshot(const std::filesystem::path& path);

// Fixed key order; NaN and infinities are written as null.
std::string report_json(const ExperimentReport& report);
void write_report(const ExperimentReport& report, const std::filesystem::path& path);

// JSON run configuration. Keys mirror the field names of ModelParams and
// StepperConfig: dim, b, gamma, horizon_m, seed, start, bounded{lower, upper,
// function_id, center, amplitude}, mode ("exact" | "euler"), h.
struct RunConfig {
  ModelParams params;
  StepperConfig stepper;
};

RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig read_config(const std::filesystem::path& path);
std::string config_json(const RunConfig& config);

// Text form of a double that parses back to the same value.
std::string format_double(double x);

}  // namespace branchou::io
