#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hadamard/config.hpp"
#include "hadamard/supersolution.hpp"

namespace hadamard {

inline const std::vector<std::string> kStages{"scaffold",      "metric", "curvature",
                                              "subsolution",   "supersolution",
                                              "solve",         "plot"};

struct StageResult {
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  nlohmann::json report;  // GridReport JSON or stage summary
  std::vector<std::string> artifacts;
  std::string error;  // error kind and message when the stage threw
};

struct RunReport {
  std::string command;
  std::string config_hash;
  nlohmann::json config;
  std::vector<StageResult> stages;
  bool pass() const;
  nlohmann::json to_json() const;
};

std::string sha256_hex(const std::string& data);

// Runs one subcommand (a stage name or "all") and writes its JSON report to
// <out>/<command>.json. Stages compute their prerequisites silently; the
// metric field goes through the binary cache under <out>/cache.
class Pipeline {
public:
  explicit Pipeline(RunConfig config);
  RunReport run(const std::string& command);

private:
  StageResult stage(const std::string& name);
  StageResult do_scaffold();
  StageResult do_metric();
  StageResult do_curvature();
  StageResult do_subsolution();
  StageResult do_supersolution();
  StageResult do_solve();
  StageResult do_plot();

  const ScaffoldProfile& profile();
  const MetricField& field();
  const SubsolutionParams& sub();
  const SupersolutionParams& sup();
  const DistanceField& dist();
  std::string path(const std::string& file) const;

  RunConfig cfg_;
  OperatorSpec spec_;
  std::unique_ptr<ScaffoldProfile> profile_;
  std::unique_ptr<MetricField> field_;
  std::unique_ptr<SubsolutionParams> sub_;
  std::unique_ptr<SupersolutionParams> sup_;
  std::unique_ptr<DistanceField> dist_;
  bool field_from_cache_ = false;
};

RunReport run(const std::string& command, const RunConfig& config);

} // namespace hadamard
