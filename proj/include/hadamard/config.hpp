#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hadamard/metric.hpp"
#include "hadamard/qoperator.hpp"
#include "hadamard/scaffold.hpp"
#include "hadamard/solver.hpp"
#include "hadamard/subsolution.hpp"

namespace hadamard {

enum class CachePolicy { Use, Refresh, Require };

struct MetricSection {
  FieldWindow window;
  StepControl steps;
  double pde_tol = 1e-6;
  // NaN: leave beta alone. Otherwise see force_beta.
  double force_beta = std::numeric_limits<double>::quiet_NaN();
};

struct CurvatureSection {
  double tol = 1e-6;
};

struct SubsolutionSection {
  double a = 0.0;
  double c = 1.0;
  QProfileOptions q;
  double tol = 1e-8;
  std::size_t stride = 1;
  // Point and level for the threshold search on a.
  HalfPlanePoint threshold_point{0.0, 0.0};
  double threshold_level = 0.999;
};

struct SupersolutionSection {
  int max_doublings = 20;
  double tol = 1e-6;
  std::size_t stride = 2;
};

struct SolverSection {
  std::vector<Box> boxes{{-6, 6, 0, 4}, {-8, 8, 0, 6}, {-10, 10, 0, 8}};
  SolverOptions options;
  double sandwich_tol = 1e-3;
  double trace_tol = 0.05;  // fraction of c
};

struct RunConfig {
  ScaffoldConfig scaffold;
  MetricSection metric;
  std::string operator_name = "minimal_graph";
  CurvatureSection curvature;
  SubsolutionSection subsolution;
  SupersolutionSection supersolution;
  SolverSection solver;
  std::string out_dir = "out";
  CachePolicy cache = CachePolicy::Use;
  bool deterministic = false;
};

// Parses a YAML document. Unknown keys and bad values throw ConfigError
// with the dotted path of the offending node.
RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::string& path);

// Nesting and positivity checks; throws ConfigError.
void validate(const RunConfig& config);

// Multiplies the field node counts (intervals) by `scale` and divides the
// solver mesh by it.
void apply_resolution_scale(RunConfig& config, double scale);

// Canonical JSON form, used for the report and the cache keys.
nlohmann::json to_json(const RunConfig& config);
nlohmann::json section_json(const RunConfig& config, const std::string& section);

OperatorSpec operator_spec(const RunConfig& config);

} // namespace hadamard
