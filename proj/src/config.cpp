#include "hadamard/config.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "hadamard/errors.hpp"

namespace hadamard {

namespace {

// A mapping node with its dotted path. Every key must be claimed by get()
// or section(); finish() rejects the rest.
class Section {
public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(path_, "expected a mapping");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!has(key)) return;
    try {
      out = node_[key].as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(at(key), "bad value '" + YAML::Dump(node_[key]) + "'");
    }
  }

  Section section(const std::string& key) {
    seen_.insert(key);
    return Section(has(key) ? node_[key] : YAML::Node(), at(key));
  }

  // Absent or null keys give nullopt.
  std::optional<YAML::Node> raw(const std::string& key) {
    seen_.insert(key);
    if (!has(key) || node_[key].IsNull()) return std::nullopt;
    return node_[key];
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string k = kv.first.as<std::string>();
      if (!seen_.count(k)) throw ConfigError(at(k), "unknown key");
    }
  }

private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_box(Section sec, Box& b) {
  sec.get("s_min", b.s_min);
  sec.get("s_max", b.s_max);
  sec.get("r_min", b.r_min);
  sec.get("r_max", b.r_max);
  sec.finish();
}

std::string policy_name(CachePolicy p) {
  switch (p) {
    case CachePolicy::Use: return "use";
    case CachePolicy::Refresh: return "refresh";
    case CachePolicy::Require: return "require";
  }
  return "use";
}

void positive(const std::string& path, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(path, "must be positive");
}

nlohmann::json box_json(const Box& b) {
  return {{"s_min", b.s_min}, {"s_max", b.s_max}, {"r_min", b.r_min}, {"r_max", b.r_max}};
}

} // namespace

RunConfig parse_config(const std::string& text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<document>", e.what());
  }
  RunConfig c;
  Section top(doc, "");

  {
    Section s = top.section("scaffold");
    ScaffoldConfig& sc = c.scaffold;
    s.get("epsilon", sc.epsilon);
    s.get("base_level", sc.base_level);
    s.get("r1", sc.r1);
    s.get("smoothing_width", sc.smoothing_width);
    s.get("grid_resolution", sc.grid_resolution);
    s.get("range_max", sc.range_max);
    s.get("n_zero", sc.n_zero);
    s.get("enforce_invariants", sc.enforce_invariants);
    if (auto opt = s.raw("plateau_schedule")) {
      const YAML::Node list = *opt;
      if (!list.IsSequence()) throw ConfigError(s.at("plateau_schedule"), "expected a list");
      sc.plateau_schedule.clear();
      for (std::size_t k = 0; k < list.size(); ++k) {
        Section d(list[k], s.at("plateau_schedule") + "[" + std::to_string(k) + "]");
        Drop drop{0, 0, 0};
        d.get("start", drop.start);
        d.get("end", drop.end);
        d.get("level", drop.level);
        d.finish();
        sc.plateau_schedule.push_back(drop);
      }
    }
    s.finish();
  }
  {
    Section s = top.section("metric");
    Section w = s.section("window");
    FieldWindow& fw = c.metric.window;
    w.get("s_min", fw.s_min);
    w.get("s_max", fw.s_max);
    w.get("r_min", fw.r_min);
    w.get("r_max", fw.r_max);
    w.get("ns", fw.ns);
    w.get("nr", fw.nr);
    w.finish();
    Section st = s.section("steps");
    st.get("abs_tol", c.metric.steps.abs_tol);
    st.get("rel_tol", c.metric.steps.rel_tol);
    st.get("event_tol", c.metric.steps.event_tol);
    st.get("max_steps", c.metric.steps.max_steps);
    st.finish();
    s.get("pde_tol", c.metric.pde_tol);
    s.get("force_beta", c.metric.force_beta);
    s.finish();
  }
  {
    Section s = top.section("operator");
    std::string name = c.operator_name;
    double p = NAN;
    s.get("name", name);
    s.get("p", p);
    s.finish();
    c.operator_name = std::isnan(p) ? name : name + ":" + std::to_string(p);
    try {
      parse_operator(c.operator_name);
    } catch (const InvalidParameter& e) {
      throw ConfigError("operator", e.what());
    }
  }
  {
    Section s = top.section("curvature");
    s.get("tol", c.curvature.tol);
    s.finish();
  }
  {
    Section s = top.section("subsolution");
    SubsolutionSection& ss = c.subsolution;
    s.get("a", ss.a);
    s.get("c", ss.c);
    s.get("tol", ss.tol);
    s.get("stride", ss.stride);
    s.get("threshold_level", ss.threshold_level);
    Section pt = s.section("threshold_point");
    pt.get("s", ss.threshold_point.s);
    pt.get("r", ss.threshold_point.r);
    pt.finish();
    Section q = s.section("q");
    q.get("smoothing_width", ss.q.smoothing_width);
    q.get("lattice", ss.q.lattice);
    q.get("bridge_width", ss.q.bridge_width);
    q.get("bridge_fraction", ss.q.bridge_fraction);
    q.get("table_step", ss.q.table_step);
    q.get("strict_xi", ss.q.strict_xi);
    q.finish();
    s.finish();
  }
  {
    Section s = top.section("supersolution");
    s.get("max_doublings", c.supersolution.max_doublings);
    s.get("tol", c.supersolution.tol);
    s.get("stride", c.supersolution.stride);
    s.finish();
  }
  {
    Section s = top.section("solver");
    SolverSection& sv = c.solver;
    if (auto opt = s.raw("boxes")) {
      const YAML::Node list = *opt;
      if (!list.IsSequence() || list.size() == 0)
        throw ConfigError(s.at("boxes"), "expected a non-empty list");
      sv.boxes.clear();
      for (std::size_t k = 0; k < list.size(); ++k) {
        Box b;
        read_box(Section(list[k], s.at("boxes") + "[" + std::to_string(k) + "]"), b);
        sv.boxes.push_back(b);
      }
    }
    s.get("mesh", sv.options.mesh);
    s.get("rel_tol", sv.options.rel_tol);
    s.get("abs_tol", sv.options.abs_tol);
    s.get("max_iterations", sv.options.max_iterations);
    s.get("max_halvings", sv.options.max_halvings);
    s.get("sandwich_tol", sv.sandwich_tol);
    s.get("trace_tol", sv.trace_tol);
    s.finish();
  }
  {
    Section s = top.section("output");
    s.get("dir", c.out_dir);
    std::string cache = "use";
    s.get("cache", cache);
    if (cache == "use") c.cache = CachePolicy::Use;
    else if (cache == "refresh") c.cache = CachePolicy::Refresh;
    else if (cache == "require") c.cache = CachePolicy::Require;
    else throw ConfigError(s.at("cache"), "expected use, refresh or require");
    s.get("deterministic", c.deterministic);
    s.finish();
  }
  top.finish();
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const RunConfig& c) {
  const FieldWindow& w = c.metric.window;
  if (!(w.s_min < w.s_max && w.r_min >= 0.0 && w.r_min < w.r_max))
    throw ConfigError("metric.window", "empty or below the axis");
  if (w.ns < 3 || w.nr < 3) throw ConfigError("metric.window", "needs at least 3 nodes per side");
  positive("metric.steps.abs_tol", c.metric.steps.abs_tol);
  positive("metric.steps.rel_tol", c.metric.steps.rel_tol);
  positive("metric.steps.event_tol", c.metric.steps.event_tol);
  positive("metric.pde_tol", c.metric.pde_tol);
  positive("curvature.tol", c.curvature.tol);
  positive("subsolution.c", c.subsolution.c);
  positive("subsolution.tol", c.subsolution.tol);
  if (c.subsolution.stride == 0) throw ConfigError("subsolution.stride", "must be positive");
  if (!(c.subsolution.threshold_level > 0.0 && c.subsolution.threshold_level < 1.0))
    throw ConfigError("subsolution.threshold_level", "must lie in (0, 1)");
  positive("supersolution.tol", c.supersolution.tol);
  if (c.supersolution.stride == 0) throw ConfigError("supersolution.stride", "must be positive");
  positive("solver.mesh", c.solver.options.mesh);
  positive("solver.rel_tol", c.solver.options.rel_tol);
  positive("solver.abs_tol", c.solver.options.abs_tol);
  positive("solver.sandwich_tol", c.solver.sandwich_tol);
  positive("solver.trace_tol", c.solver.trace_tol);
  if (c.solver.options.max_iterations <= 0)
    throw ConfigError("solver.max_iterations", "must be positive");
  for (std::size_t k = 0; k < c.solver.boxes.size(); ++k) {
    const Box& b = c.solver.boxes[k];
    const std::string path = "solver.boxes[" + std::to_string(k) + "]";
    if (!(b.s_min < b.s_max && b.r_min >= 0.0 && b.r_min < b.r_max))
      throw ConfigError(path, "empty or below the axis");
    if (b.s_min < w.s_min || b.s_max > w.s_max || b.r_min < w.r_min || b.r_max > w.r_max)
      throw ConfigError(path, "not inside metric.window");
    if (k > 0) {
      const Box& p = c.solver.boxes[k - 1];
      if (!(b.s_min <= p.s_min && b.s_max >= p.s_max && b.r_min <= p.r_min && b.r_max >= p.r_max))
        throw ConfigError(path, "boxes must be nested and increasing");
    }
  }
}

void apply_resolution_scale(RunConfig& c, double scale) {
  if (!(scale > 0.0)) throw ConfigError("--resolution-scale", "must be positive");
  FieldWindow& w = c.metric.window;
  w.ns = std::size_t(std::llround(double(w.ns - 1) * scale)) + 1;
  w.nr = std::size_t(std::llround(double(w.nr - 1) * scale)) + 1;
  c.solver.options.mesh /= scale;
  validate(c);
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  for (const char* s : {"scaffold", "metric", "operator", "curvature", "subsolution",
                        "supersolution", "solver"})
    j[s] = section_json(c, s);
  j["output"] = {{"dir", c.out_dir}, {"cache", policy_name(c.cache)},
                 {"deterministic", c.deterministic}};
  return j;
}

nlohmann::json section_json(const RunConfig& c, const std::string& section) {
  using nlohmann::json;
  if (section == "scaffold") {
    const ScaffoldConfig& s = c.scaffold;
    json drops = json::array();
    for (const Drop& d : s.plateau_schedule)
      drops.push_back({{"start", d.start}, {"end", d.end}, {"level", d.level}});
    return {{"epsilon", s.epsilon},
            {"base_level", s.base_level},
            {"r1", s.r1},
            {"plateau_schedule", drops},
            {"smoothing_width", s.smoothing_width},
            {"grid_resolution", s.grid_resolution},
            {"range_max", s.range_max},
            {"n_zero", s.n_zero},
            {"enforce_invariants", s.enforce_invariants}};
  }
  if (section == "metric") {
    const FieldWindow& w = c.metric.window;
    json j = {{"window",
               {{"s_min", w.s_min}, {"s_max", w.s_max}, {"r_min", w.r_min},
                {"r_max", w.r_max}, {"ns", w.ns}, {"nr", w.nr}}},
              {"steps",
               {{"abs_tol", c.metric.steps.abs_tol}, {"rel_tol", c.metric.steps.rel_tol},
                {"event_tol", c.metric.steps.event_tol},
                {"max_steps", c.metric.steps.max_steps}}},
              {"pde_tol", c.metric.pde_tol}};
    j["force_beta"] = std::isnan(c.metric.force_beta) ? json(nullptr) : json(c.metric.force_beta);
    return j;
  }
  if (section == "operator") {
    const OperatorSpec o = operator_spec(c);
    json j = {{"name", o.name}};
    if (o.name == "p_laplace") j["p"] = o.param;
    return j;
  }
  if (section == "curvature") return {{"tol", c.curvature.tol}};
  if (section == "subsolution") {
    const SubsolutionSection& s = c.subsolution;
    return {{"a", s.a},
            {"c", s.c},
            {"tol", s.tol},
            {"stride", s.stride},
            {"threshold_point", {{"s", s.threshold_point.s}, {"r", s.threshold_point.r}}},
            {"threshold_level", s.threshold_level},
            {"q",
             {{"smoothing_width", s.q.smoothing_width},
              {"lattice", s.q.lattice},
              {"bridge_width", s.q.bridge_width},
              {"bridge_fraction", s.q.bridge_fraction},
              {"table_step", s.q.table_step},
              {"strict_xi", s.q.strict_xi}}}};
  }
  if (section == "supersolution")
    return {{"max_doublings", c.supersolution.max_doublings},
            {"tol", c.supersolution.tol},
            {"stride", c.supersolution.stride}};
  if (section == "solver") {
    json boxes = json::array();
    for (const Box& b : c.solver.boxes) boxes.push_back(box_json(b));
    const SolverOptions& o = c.solver.options;
    return {{"boxes", boxes},
            {"mesh", o.mesh},
            {"rel_tol", o.rel_tol},
            {"abs_tol", o.abs_tol},
            {"max_iterations", o.max_iterations},
            {"max_halvings", o.max_halvings},
            {"sandwich_tol", c.solver.sandwich_tol},
            {"trace_tol", c.solver.trace_tol}};
  }
  throw InvalidParameter("unknown config section '" + section + "'");
}

OperatorSpec operator_spec(const RunConfig& c) { return parse_operator(c.operator_name); }

} // namespace hadamard
