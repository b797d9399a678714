#include "hadamard/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "hadamard/curvature.hpp"
#include "hadamard/errors.hpp"
#include "hadamard/io.hpp"
#include "hadamard/numerics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hadamard {

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream o;
  for (unsigned int k = 0; k < len; ++k) o << std::hex << std::setw(2) << std::setfill('0') << int(md[k]);
  return o.str();
}

bool RunReport::pass() const {
  for (const StageResult& s : stages)
    if (!s.pass) return false;
  return !stages.empty();
}

json RunReport::to_json() const {
  json st = json::array();
  for (const StageResult& s : stages) {
    json j = {{"stage", s.name}, {"pass", s.pass}, {"seconds", s.seconds},
              {"artifacts", s.artifacts}, {"report", s.report}};
    if (!s.error.empty()) j["error"] = s.error;
    st.push_back(j);
  }
  return {{"command", command}, {"pass", pass()}, {"config_hash", config_hash},
          {"config", config}, {"stages", st}};
}

namespace {

// Config minus the output section: what the numbers depend on.
std::string numbers_hash(const RunConfig& c) {
  json j = to_json(c);
  j.erase("output");
  return sha256_hex(j.dump());
}

GridView csv_grid(const CsvTable& t, const std::string& column, std::vector<double>& store) {
  const std::size_t cs = t.column("s"), cr = t.column("r"), cv = t.column(column);
  if (t.rows.size() < 4) throw CacheMiss("grid CSV too small");
  std::size_t ns = 0;
  while (ns < t.rows.size() && t.rows[ns][cr] == t.rows[0][cr]) ++ns;
  const std::size_t nr = t.rows.size() / ns;
  store.resize(t.rows.size());
  for (std::size_t k = 0; k < t.rows.size(); ++k) store[k] = t.rows[k][cv];
  return {t.rows[0][cs], t.rows[1][cs] - t.rows[0][cs], ns, t.rows[0][cr],
          t.rows[ns][cr] - t.rows[0][cr], nr, &store};
}

CsvTable require_csv(const std::string& path) {
  if (!fs::exists(path)) throw CacheMiss(path + " is missing; run the producing stage first");
  return read_csv(path);
}

} // namespace

Pipeline::Pipeline(RunConfig config) : cfg_(std::move(config)), spec_(operator_spec(cfg_)) {
  set_worker_count(cfg_.deterministic ? 1u : 0u);
  fs::create_directories(cfg_.out_dir);
}

std::string Pipeline::path(const std::string& file) const { return (fs::path(cfg_.out_dir) / file).string(); }

const ScaffoldProfile& Pipeline::profile() {
  if (!profile_) profile_ = std::make_unique<ScaffoldProfile>(build_scaffold(cfg_.scaffold));
  return *profile_;
}

const MetricField& Pipeline::field() {
  if (field_) return *field_;
  json key = {{"scaffold", section_json(cfg_, "scaffold")}};
  json m = section_json(cfg_, "metric");
  key["window"] = m["window"];
  key["steps"] = m["steps"];
  const std::string digest = sha256_hex(key.dump());
  fs::create_directories(path("cache"));
  const std::string file = path("cache/metric-" + digest.substr(0, 16) + ".bin");
  field_from_cache_ = false;
  if (cfg_.cache != CachePolicy::Refresh) {
    try {
      field_ = std::make_unique<MetricField>(MetricField::load(file, digest));
      field_from_cache_ = true;
    } catch (const CacheMiss&) {
      if (cfg_.cache == CachePolicy::Require) throw;
    }
  }
  if (!field_) {
    field_ = std::make_unique<MetricField>(
        build_metric_field(cfg_.metric.window, profile(), cfg_.metric.steps, nullptr, cfg_.metric.pde_tol));
    field_->save(file, digest);
  }
  if (!std::isnan(cfg_.metric.force_beta)) force_beta(*field_, cfg_.metric.force_beta);
  return *field_;
}

const SubsolutionParams& Pipeline::sub() {
  if (!sub_)
    sub_ = std::make_unique<SubsolutionParams>(make_subsolution(
        cfg_.subsolution.a, cfg_.subsolution.c, spec_, profile(), cfg_.subsolution.q));
  return *sub_;
}

const SupersolutionParams& Pipeline::sup() {
  if (!sup_)
    sup_ = std::make_unique<SupersolutionParams>(
        make_supersolution(sub(), spec_, profile(), cfg_.supersolution.max_doublings));
  return *sup_;
}

const DistanceField& Pipeline::dist() {
  if (!dist_) dist_ = std::make_unique<DistanceField>(distance_field(sup().front, cfg_.metric.window));
  return *dist_;
}

StageResult Pipeline::do_scaffold() {
  StageResult r;
  const GridReport rep = validate_scaffold(profile(), {0.0, std::min(30.0, cfg_.scaffold.range_max)});
  write_scaffold_csv(profile(), path("scaffold.csv"));
  r.pass = rep.pass();
  r.report = rep.to_json();
  r.artifacts = {path("scaffold.csv")};
  return r;
}

StageResult Pipeline::do_metric() {
  StageResult r;
  const MetricField& f = field();
  GridReport rep("metric", 1e-8);
  const std::string kPde = "|rho_s - beta h^2 rho_r| <= pde_tol";
  rep.set_tolerance(kPde, 0.0);
  for (std::size_t j = 0; j < f.nr(); ++j) {
    const double h = std::cosh(f.r(j));
    for (std::size_t i = 0; i < f.ns(); ++i) {
      const std::size_t k = f.index(i, j);
      const double s = f.s(i), rr = f.r(j);
      rep.record("rho >= r", s, rr, f.rho[k] - rr);
      rep.record("rho_r >= 1", s, rr, f.rho_r[k] - 1.0);
      if (!f.closed[k])
        rep.record(kPde, s, rr, cfg_.metric.pde_tol - std::fabs(f.rho_s[k] - f.beta[k] * h * h * f.rho_r[k]));
    }
  }
  rep.note("max_pde_residual", f.max_pde_residual());
  rep.note("from_cache", field_from_cache_);
  std::size_t closed = 0;
  for (auto c : f.closed) closed += c;
  rep.note("closed_form_nodes", closed);
  rep.note("traced_nodes", f.closed.size() - closed);
  write_metric_csv(f, path("metric.csv"));
  r.pass = rep.pass();
  r.report = rep.to_json();
  r.artifacts = {path("metric.csv")};
  return r;
}

StageResult Pipeline::do_curvature() {
  StageResult r;
  const MetricField& f = field();
  const GridReport rep = verify_curvature(f, cfg_.curvature.tol);
  const MarginGrids g = curvature_grids(f);
  {
    CsvWriter csv(path("curvature.csv"), {"s", "r", "m_A", "m_B", "m_C", "m_cross"});
    for (std::size_t j = 0; j < f.nr(); ++j)
      for (std::size_t i = 0; i < f.ns(); ++i) {
        const std::size_t k = f.index(i, j);
        csv.row({f.s(i), f.r(j), g.m_A[k], g.m_B[k], g.m_C[k], g.m_cross[k]});
      }
  }
  r.pass = rep.pass();
  r.report = rep.to_json();
  r.artifacts = {path("curvature.csv")};
  return r;
}

StageResult Pipeline::do_subsolution() {
  StageResult r;
  const SubsolutionSection& sc = cfg_.subsolution;
  GridReport rep = verify_subsolution(sub(), spec_, field(), sc.tol, sc.stride);
  // Threshold on a for phi_{a,1}(point) >= level.
  const double a_star = a_threshold(spec_, profile(), sc.threshold_point, sc.threshold_level, sc.q);
  const std::string kLim = "phi_{a,1}(o) >= level for a <= a*";
  rep.set_tolerance(kLim, 0.0);
  for (double da : {0.0, 1.0, 2.0, 5.0}) {
    const SubsolutionParams p = make_subsolution(a_star - da, 1.0, spec_, profile(), sc.q);
    rep.record(kLim, a_star - da, sc.threshold_point.r,
               phi_eval(p, sc.threshold_point).phi - sc.threshold_level);
  }
  rep.note("a_star", a_star);
  rep.note("threshold_level", sc.threshold_level);
  write_q_csv(sub().q, path("q.csv"));
  r.pass = rep.pass();
  r.report = rep.to_json();
  r.artifacts = {path("q.csv")};
  return r;
}

StageResult Pipeline::do_supersolution() {
  StageResult r;
  const SupersolutionParams& p = sup();
  const DistanceField& d = dist();
  GridReport rep = verify_supersolution(p, spec_, field(), d, cfg_.supersolution.tol,
                                        cfg_.supersolution.stride);
  const std::string kOrder = "phi <= psi";
  rep.set_tolerance(kOrder, 0.0);
  const FieldWindow& w = cfg_.metric.window;
  {
    CsvWriter csv(path("distance.csv"), {"s", "r", "rho_a", "rho_a_marched", "phi", "psi"});
    for (std::size_t j = 0; j < w.nr; ++j)
      for (std::size_t i = 0; i < w.ns; ++i) {
        const HalfPlanePoint pt{d.s(i), d.r(j)};
        const double phi = phi_eval(sub(), pt).phi, psi = psi_eval(p, d, pt);
        rep.record(kOrder, pt.s, pt.r, psi - phi);
        csv.row({pt.s, pt.r, d.at(i, j), d.marched(i, j), phi, psi});
      }
  }
  write_front_csv(p.front, path("front.csv"));
  rep.note("b", p.b);
  rep.note("containment_slack", p.containment.min_slack);
  rep.note("containment_argmin_r", p.containment.argmin_r);
  r.pass = rep.pass() && p.containment.passed;
  r.report = rep.to_json();
  r.artifacts = {path("distance.csv"), path("front.csv")};
  return r;
}

StageResult Pipeline::do_solve() {
  StageResult r;
  const SolverSection& sv = cfg_.solver;
  const double c = cfg_.subsolution.c;
  const ExhaustionResult ex = exhaustion_run(sub(), spec_, field(), sv.boxes, sv.options);
  auto phi = [this](double s, double rr) { return phi_eval(sub(), {s, rr}).phi; };
  auto psi = [this](double s, double rr) { return psi_eval(sup(), dist(), {s, rr}); };
  const DiscreteSolution& big = ex.solutions.back();
  GridReport rep = verify_sandwich(big, phi, psi, sv.sandwich_tol);

  const std::string kBounds = "0 <= u_k <= c", kLow = "u_k >= phi", kDec = "sup |u_{k+1} - u_k| decreasing";
  rep.set_tolerance(kBounds, 1e-10);
  rep.set_tolerance(kDec, 0.0);
  json boxes = json::array();
  for (const DiscreteSolution& sol : ex.solutions) {
    for (std::size_t j = 0; j < sol.nr; ++j)
      for (std::size_t i = 0; i < sol.ns; ++i) {
        const double u = sol.at(i, j);
        rep.record(kBounds, sol.s(i), sol.r(j), std::min(u, c - u));
        rep.record(kLow, sol.s(i), sol.r(j), u - phi(sol.s(i), sol.r(j)));
      }
    json hist = json::array();
    for (const IterationRecord& h : sol.history)
      hist.push_back({{"energy", h.energy}, {"residual", h.residual}, {"step", h.step}});
    boxes.push_back({{"box", {sol.box.s_min, sol.box.s_max, sol.box.r_min, sol.box.r_max}},
                     {"iterations", sol.iterations},
                     {"initial_residual", sol.initial_residual},
                     {"residual", sol.residual},
                     {"energy", sol.energy},
                     {"log_energy_scale", sol.log_energy_scale},
                     {"history", hist}});
  }
  for (std::size_t k = 1; k < ex.successive_sup_diff.size(); ++k) {
    const double a = ex.successive_sup_diff[k - 1], b = ex.successive_sup_diff[k];
    rep.record(kDec, 0.0, double(k), a > b ? a - b : -1.0);
  }
  if (ex.successive_sup_diff.size() < 2) rep.record(kDec, 0.0, 0.0, -1.0);

  // Traces from the origin toward the ends of the largest box, stopping one
  // tenth short of the Dirichlet sides.
  const Box& b = big.box;
  const std::vector<Ray> rays{{"toward large s", {0.0, 0.0}, {0.9 * b.s_max, 0.0}},
                              {"toward negative s", {0.0, 0.0}, {0.9 * b.s_min, 0.0}},
                              {"toward large r", {0.0, 0.0}, {0.0, 0.9 * b.r_max}}};
  const auto traces = asymptotic_profile(big, rays);
  const std::string kHi = "trace toward large s ends within tol c of c",
                    kLo = "trace toward negative s ends within tol c of 0";
  rep.set_tolerance(kHi, 0.0);
  rep.set_tolerance(kLo, 0.0);
  rep.record(kHi, traces[0].points.back().s, 0.0, sv.trace_tol * c - std::fabs(traces[0].last - c));
  rep.record(kLo, traces[1].points.back().s, 0.0, sv.trace_tol * c - std::fabs(traces[1].last));
  json tr = json::array();
  for (const RayTrace& t : traces)
    tr.push_back({{"label", t.label}, {"first", t.first}, {"last", t.last}, {"min", t.min}, {"max", t.max}});
  rep.note("boxes", boxes);
  rep.note("successive_sup_diff", ex.successive_sup_diff);
  rep.note("traces", tr);
  write_solution_csv(big, path("solution.csv"), phi, psi);
  r.pass = rep.pass();
  r.report = rep.to_json();
  r.artifacts = {path("solution.csv")};
  return r;
}

StageResult Pipeline::do_plot() {
  StageResult r;
  std::vector<double> a, b, c;
  {
    const CsvTable t = require_csv(path("curvature.csv"));
    for (const char* m : {"m_B", "m_C", "m_cross"}) {
      const std::string file = path(std::string("curvature_") + m + ".svg");
      svg_heatmap(file, std::string("curvature margin ") + m, csv_grid(t, m, a));
      r.artifacts.push_back(file);
    }
  }
  {
    const CsvTable t = require_csv(path("q.csv"));
    Series q{"q", {}, {}}, iq{"int q", {}, {}}, bd{"int beta0 + int 1/cosh", {}, {}};
    for (const auto& row : t.rows) {
      const double rr = row[t.column("r")];
      q.x.push_back(rr);
      q.y.push_back(row[t.column("q")]);
      iq.x.push_back(rr);
      iq.y.push_back(row[t.column("int_q")]);
      bd.x.push_back(rr);
      bd.y.push_back(row[t.column("bound")]);
    }
    svg_lines(path("q_profile.svg"), "radial profile q", {q, iq, bd}, "r", "");
    r.artifacts.push_back(path("q_profile.svg"));
  }
  {
    const CsvTable t = require_csv(path("front.csv"));
    Series f{"front", {}, {}};
    for (const auto& row : t.rows) {
      f.x.push_back(row[t.column("r")]);
      f.y.push_back(row[t.column("s")]);
    }
    svg_lines(path("fronts.svg"), "front of V_a", {f}, "r", "s");
    r.artifacts.push_back(path("fronts.svg"));
  }
  {
    const CsvTable t = require_csv(path("solution.csv"));
    const std::vector<double> levels{0.1, 0.3, 0.5, 0.7, 0.9};
    std::vector<ContourSet> sets{{"u", csv_grid(t, "u", a), levels, "#1f77b4"},
                                 {"phi", csv_grid(t, "phi", b), levels, "#2ca02c"},
                                 {"psi", csv_grid(t, "psi", c), levels, "#d62728"}};
    svg_contours(path("solution_contours.svg"), "u, phi and psi", sets);
    r.artifacts.push_back(path("solution_contours.svg"));
  }
  r.pass = true;
  r.report = {{"files", r.artifacts.size()}};
  return r;
}

StageResult Pipeline::stage(const std::string& name) {
  const auto t0 = std::chrono::steady_clock::now();
  StageResult r;
  try {
    if (name == "scaffold") r = do_scaffold();
    else if (name == "metric") r = do_metric();
    else if (name == "curvature") r = do_curvature();
    else if (name == "subsolution") r = do_subsolution();
    else if (name == "supersolution") r = do_supersolution();
    else if (name == "solve") r = do_solve();
    else if (name == "plot") r = do_plot();
    else throw InvalidParameter("unknown stage '" + name + "'");
  } catch (const Error& e) {
    r = StageResult{};
    r.pass = false;
    r.error = e.what();
    r.report = {{"error_kind", e.kind()}, {"message", e.what()}};
  } catch (const std::exception& e) {
    r = StageResult{};
    r.pass = false;
    r.error = e.what();
    r.report = {{"error_kind", "Error"}, {"message", e.what()}};
  }
  r.name = name;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_json(path(name + ".json"), r.report);
  return r;
}

RunReport Pipeline::run(const std::string& command) {
  RunReport rep;
  rep.command = command;
  rep.config = to_json(cfg_);
  rep.config_hash = numbers_hash(cfg_);
  if (command == "all") {
    for (const std::string& s : kStages) rep.stages.push_back(stage(s));
  } else {
    if (std::find(kStages.begin(), kStages.end(), command) == kStages.end())
      throw InvalidParameter("unknown command '" + command + "'");
    rep.stages.push_back(stage(command));
  }
  write_json(path("report_" + command + ".json"), rep.to_json());
  return rep;
}

RunReport run(const std::string& command, const RunConfig& config) {
  Pipeline p(config);
  return p.run(command);
}

} // namespace hadamard
