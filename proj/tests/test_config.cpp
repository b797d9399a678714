#include <gtest/gtest.h>

#include <filesystem>
#include <algorithm>
#include <fstream>
#include <iterator>

#include "hadamard/config.hpp"
#include "hadamard/errors.hpp"
#include "hadamard/pipeline.hpp"

using namespace hadamard;
namespace fs = std::filesystem;

namespace {

std::string config_error_path(const std::string& yaml) {
  try {
    parse_config(yaml);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

// A window and boxes small enough for a unit test.
const char* kSmall = R"(
metric:
  window: {s_min: -10, s_max: 10, r_min: 0, r_max: 6, ns: 81, nr: 25}
solver:
  boxes:
    - {s_min: -2, s_max: 2, r_min: 0, r_max: 1}
    - {s_min: -3, s_max: 3, r_min: 0, r_max: 2}
  mesh: 0.1
)";

} // namespace

TEST(Config, EmptyDocumentGivesDefaults) {
  const RunConfig c = parse_config("{}");
  EXPECT_EQ(c.operator_name, "minimal_graph");
  EXPECT_EQ(c.metric.window.ns, 601u);
  EXPECT_EQ(c.solver.boxes.size(), 3u);
  EXPECT_EQ(c.scaffold.plateau_schedule.size(), 1u);
  EXPECT_EQ(c.cache, CachePolicy::Use);
}

TEST(Config, ShippedDefaultsMatchBuiltIns) {
  const RunConfig a = load_config(std::string(HADAMARD_SOURCE_DIR) + "/configs/default.yaml");
  EXPECT_EQ(to_json(a), to_json(parse_config("{}")));
}

TEST(Config, UnknownKeysNamePath) {
  EXPECT_EQ(config_error_path("metric: {window: {ns: 5, nz: 3}}"), "metric.window.nz");
  EXPECT_EQ(config_error_path("solverr: {}"), "solverr");
  EXPECT_EQ(config_error_path("scaffold: {plateau_schedule: [{start: 48, end: 74, lvl: 1}]}"),
            "scaffold.plateau_schedule[0].lvl");
}

TEST(Config, BadValues) {
  EXPECT_EQ(config_error_path("solver: {mesh: -1}"), "solver.mesh");
  EXPECT_EQ(config_error_path("metric: {window: {ns: abc}}"), "metric.window.ns");
  EXPECT_EQ(config_error_path("output: {cache: maybe}"), "output.cache");
  EXPECT_EQ(config_error_path("operator: {name: heat}"), "operator");
}

TEST(Config, BoxesMustNest) {
  EXPECT_EQ(config_error_path(R"(solver: {boxes: [{s_min: -4, s_max: 4, r_min: 0, r_max: 3},
                                                {s_min: -3, s_max: 3, r_min: 0, r_max: 4}]})"),
            "solver.boxes[1]");
  EXPECT_EQ(config_error_path("solver: {boxes: [{s_min: -40, s_max: 4, r_min: 0, r_max: 3}]}"),
            "solver.boxes[0]");
}

TEST(Config, OperatorParameter) {
  const RunConfig c = parse_config("operator: {name: p_laplace, p: 3}");
  EXPECT_EQ(operator_spec(c).B0, 0.5);
}

TEST(Config, ResolutionScale) {
  RunConfig c = parse_config("{}");
  apply_resolution_scale(c, 2.0);
  EXPECT_EQ(c.metric.window.ns, 1201u);
  EXPECT_EQ(c.metric.window.nr, 801u);
  EXPECT_DOUBLE_EQ(c.solver.options.mesh, 0.025);
  EXPECT_THROW(apply_resolution_scale(c, 0.0), ConfigError);
}

TEST(Config, Sha256) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Pipeline, SmallRunWritesReports) {
  RunConfig c = parse_config(kSmall);
  c.out_dir = fresh_dir("hadamard_pipeline").string();
  c.deterministic = true;
  const RunReport rep = run("all", c);
  ASSERT_EQ(rep.stages.size(), kStages.size());
  for (const StageResult& s : rep.stages) {
    EXPECT_TRUE(s.error.empty()) << s.name << ": " << s.error;
    EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / (s.name + ".json"))) << s.name;
  }
  for (const char* name : {"metric", "curvature", "subsolution", "supersolution"})
    EXPECT_TRUE(rep.stages[std::size_t(std::find(kStages.begin(), kStages.end(), name) - kStages.begin())].pass)
        << name;
  for (const char* f : {"report_all.json", "solution.csv", "curvature.csv", "q_profile.svg"})
    EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / f)) << f;

  // A second run reuses the cached field and reproduces the CSV byte for byte.
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string first = slurp(fs::path(c.out_dir) / "metric.csv");
  c.cache = CachePolicy::Require;
  EXPECT_TRUE(run("metric", c).pass());
  EXPECT_EQ(slurp(fs::path(c.out_dir) / "metric.csv"), first);
}

TEST(Pipeline, PlotWithoutInputsIsCacheMiss) {
  RunConfig c = parse_config(kSmall);
  c.out_dir = fresh_dir("hadamard_plot_only").string();
  const RunReport rep = run("plot", c);
  ASSERT_EQ(rep.stages.size(), 1u);
  EXPECT_FALSE(rep.pass());
  EXPECT_EQ(rep.stages[0].report["error_kind"], "CacheMiss");
}

TEST(Pipeline, RequireWithoutCacheFails) {
  RunConfig c = parse_config(kSmall);
  c.out_dir = fresh_dir("hadamard_require").string();
  c.cache = CachePolicy::Require;
  const RunReport rep = run("curvature", c);
  EXPECT_EQ(rep.stages[0].report["error_kind"], "CacheMiss");
}

TEST(Pipeline, ForcedBetaFailsCurvature) {
  RunConfig c = parse_config(kSmall);
  c.metric.force_beta = 0.5;
  c.out_dir = fresh_dir("hadamard_forced").string();
  const RunReport rep = run("curvature", c);
  EXPECT_FALSE(rep.pass());
  EXPECT_FALSE(rep.stages[0].report["failed_nodes"].empty());
}
