#include "hadamard/metric.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

#include <boost/numeric/odeint.hpp>

#include "hadamard/errors.hpp"
#include "hadamard/io.hpp"

namespace hadamard {

namespace odeint = boost::numeric::odeint;

bool in_omega_closure(double s, double r, const ScaffoldProfile& profile) {
  return r <= 3.0 || s + profile.ell(r) <= 0.0;
}

namespace {

using State = std::array<double, 6>;

// Backward flow of Z in the variables (r, x = s + ell(r)), reparametrized by
// d tau = (1 + P) d sigma with sigma = -s and P = xi(x) beta0 h^2, so that the
// right-hand side stays bounded where beta0 h^2 is huge. Components 2..5 carry
// two tangent vectors of the flow.
struct BackwardFlow {
  const ScaffoldProfile& p;

  void operator()(const State& y, State& dy, double /*tau*/) const {
    const double r = y[0], x = y[1];
    double f = 0.0, f1 = 0.0, l1 = 0.0, l2 = 0.0;
    if (r > 3.0) {
      f = p.beta0_h2(r);
      f1 = p.beta0_h2_d1(r);
      l1 = p.ell_d1(r);
      l2 = p.ell_d2(r);
    }
    const double xi0 = ScaffoldProfile::xi(x), xi1 = ScaffoldProfile::xi_d1(x);
    const double P = xi0 * f;
    const double lam = 1.0 / (1.0 + P);
    const double lP = P * lam, lPr = xi0 * f1 * lam, lPx = xi1 * f * lam;
    const double F0 = lP;
    const double F1 = -lam + l1 * lP;
    dy[0] = F0;
    dy[1] = F1;
    const double a00 = lPr - F0 * lPr, a01 = lPx - F0 * lPx;
    const double a10 = l2 * lP + l1 * lPr - F1 * lPr, a11 = l1 * lPx - F1 * lPx;
    for (int k = 2; k < 6; k += 2) {
      dy[k] = a00 * y[k] + a01 * y[k + 1];
      dy[k + 1] = a10 * y[k] + a11 * y[k + 1];
    }
  }
};

bool inside(const State& y) { return y[0] <= 3.0 || y[1] <= 0.0; }

} // namespace

CharacteristicPath trace_characteristic(HalfPlanePoint start, const ScaffoldProfile& p,
                                        const StepControl& ctl) {
  CharacteristicPath path;
  if (start.r < 0.0) throw InvalidParameter("start.r < 0");
  const double x0 = start.s + p.ell(start.r);
  if (start.r <= 3.0 || x0 <= 0.0) {
    path.interior = true;
    path.nodes = {start};
    path.entry = start;
    path.rho_value = start.r;
    return path;
  }
  if (start.r > p.range_max())
    throw MaxStepsExceeded("start radius beyond the scaffold range");

  BackwardFlow flow{p};
  State y{start.r, x0, 1.0, p.ell_d1(start.r), 0.0, 1.0};
  auto stepper = odeint::make_dense_output(ctl.abs_tol, ctl.rel_tol,
                                           odeint::runge_kutta_dopri5<State>());
  stepper.initialize(y, 0.0, 1e-3);
  auto record = [&](const State& st) {
    if (ctl.record_nodes) path.nodes.push_back({st[1] - p.ell(st[0]), st[0]});
  };
  record(y);
  const double tau_budget = 2.0 * (x0 + 1.0) + (p.range_max() - start.r) + 10.0;
  std::size_t steps = 0;
  for (;;) {
    stepper.do_step(flow);
    ++steps;
    const State& cur = stepper.current_state();
    if (inside(cur)) break;
    record(cur);
    if (cur[0] > p.range_max())
      throw MaxStepsExceeded("characteristic from (" + std::to_string(start.s) + ", " +
                             std::to_string(start.r) + ") leaves the scaffold range");
    if (steps >= ctl.max_steps || stepper.current_time() > tau_budget)
      throw MaxStepsExceeded("characteristic from (" + std::to_string(start.s) + ", " +
                             std::to_string(start.r) + ") exhausted its budget");
  }
  double lo = stepper.previous_time(), hi = stepper.current_time();
  State mid;
  while (hi - lo > ctl.event_tol) {
    const double t = 0.5 * (lo + hi);
    stepper.calc_state(t, mid);
    (inside(mid) ? hi : lo) = t;
  }
  stepper.calc_state(hi, y);
  State dy;
  flow(y, dy, hi);
  // Sensitivity of the exit point: project the tangent vectors along the
  // flow onto the exit curve x = 0.
  const double ratio = dy[1] != 0.0 ? dy[0] / dy[1] : 0.0;
  path.rho_value = y[0];
  path.rho_r = y[2] - ratio * y[3];
  path.rho_s = y[4] - ratio * y[5];
  path.entry = {y[1] - p.ell(y[0]), y[0]};
  if (ctl.record_nodes) path.nodes.push_back(path.entry);
  path.steps = steps;
  return path;
}

double rho(HalfPlanePoint point, const ScaffoldProfile& profile) {
  StepControl ctl;
  ctl.record_nodes = false;
  return trace_characteristic(point, profile, ctl).rho_value;
}

double law_J(GLaw law, double rho) {
  if (law == GLaw::Hyperbolic) return 1.0 / std::tanh(rho);
  return 2.0 * std::cosh(2.0 * rho) / std::tanh(std::sinh(2.0 * rho));
}

double law_K(GLaw law, double rho) {
  if (law == GLaw::Hyperbolic) return 1.0;
  const double c = std::cosh(2.0 * rho);
  return 4.0 * x_coth_x(std::sinh(2.0 * rho)) + 4.0 * c * c;
}

double law_log_g(GLaw law, double rho) {
  if (law == GLaw::Hyperbolic) {
    if (rho > 20.0) return rho - std::log(2.0) + std::log1p(-std::exp(-2.0 * rho));
    return std::log(std::sinh(rho));
  }
  const double S = std::sinh(2.0 * rho);
  if (S > 20.0) return S - std::log(4.0) + std::log1p(-std::exp(-2.0 * S));
  return std::log(0.5 * std::sinh(S));
}

double law_axis_K(GLaw law) { return law == GLaw::Hyperbolic ? 1.0 : 8.0; }

GRatios g_ratios(GLaw law, const RhoJet& q) {
  const double J = law_J(law, q.rho), K = law_K(law, q.rho);
  return {law_log_g(law, q.rho),
          J * q.rho_r,
          J * q.rho_s,
          K * q.rho_r * q.rho_r + J * q.rho_rr,
          K * q.rho_s * q.rho_s + J * q.rho_ss,
          K * q.rho_r * q.rho_s + J * q.rho_rs};
}

MetricField::MetricField(FieldWindow window, GLaw law) : window_(window), law_(law) {
  const std::size_t n = window.ns * window.nr;
  rho.assign(n, 0.0);
  rho_r.assign(n, 1.0);
  rho_s.assign(n, 0.0);
  rho_rr.assign(n, 0.0);
  rho_ss.assign(n, 0.0);
  rho_rs.assign(n, 0.0);
  beta.assign(n, 0.0);
  closed.assign(n, 1);
}

bool MetricField::contains(double s, double r) const {
  const double es = 1e-9 * (1.0 + std::fabs(s)), er = 1e-9 * (1.0 + r);
  return s >= window_.s_min - es && s <= window_.s_max + es && r >= window_.r_min - er &&
         r <= window_.r_max + er;
}

RhoJet MetricField::jet(std::size_t i, std::size_t j) const {
  const std::size_t k = index(i, j);
  return {rho[k], rho_r[k], rho_s[k], rho_rr[k], rho_ss[k], rho_rs[k], beta[k], closed[k] != 0};
}

RhoJet MetricField::sample(double s, double r) const {
  if (!contains(s, r)) throw InvalidParameter("sample outside the field window");
  auto cell = [](double u, std::size_t n) {
    if (u <= 0.0) return std::pair<std::size_t, double>{0, 0.0};
    std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(u), n - 2);
    return std::pair<std::size_t, double>{i, std::min(1.0, u - double(i))};
  };
  const auto [i, ts] = cell((s - window_.s_min) / window_.ds(), window_.ns);
  const auto [j, tr] = cell((r - window_.r_min) / window_.dr(), window_.nr);
  const std::size_t k00 = index(i, j), k10 = index(i + 1, j), k01 = index(i, j + 1),
                    k11 = index(i + 1, j + 1);
  auto mix = [&](const std::vector<double>& v) {
    return (1 - ts) * (1 - tr) * v[k00] + ts * (1 - tr) * v[k10] + (1 - ts) * tr * v[k01] +
           ts * tr * v[k11];
  };
  RhoJet q{mix(rho), mix(rho_r), mix(rho_s), mix(rho_rr), mix(rho_ss), mix(rho_rs), mix(beta),
           closed[k00] && closed[k10] && closed[k01] && closed[k11]};
  if (q.closed_form) {
    // Exact in the closure of Omega.
    q = RhoJet{r, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, true};
  }
  return q;
}

double MetricField::max_pde_residual() const {
  double worst = 0.0;
  for (std::size_t j = 0; j < nr(); ++j) {
    const double c = std::cosh(r(j));
    for (std::size_t i = 0; i < ns(); ++i) {
      const std::size_t k = index(i, j);
      if (closed[k]) continue;
      worst = std::max(worst, std::fabs(rho_s[k] - beta[k] * c * c * rho_r[k]));
    }
  }
  return worst;
}

void MetricField::fill_second_derivatives() {
  const double ds = window_.ds(), dr = window_.dr();
  auto d_s = [&](const std::vector<double>& v, std::size_t i, std::size_t j) {
    if (i == 0)
      return (-3 * v[index(0, j)] + 4 * v[index(1, j)] - v[index(2, j)]) / (2 * ds);
    if (i == ns() - 1)
      return (3 * v[index(i, j)] - 4 * v[index(i - 1, j)] + v[index(i - 2, j)]) / (2 * ds);
    return (v[index(i + 1, j)] - v[index(i - 1, j)]) / (2 * ds);
  };
  auto d_r = [&](const std::vector<double>& v, std::size_t i, std::size_t j) {
    if (j == 0)
      return (-3 * v[index(i, 0)] + 4 * v[index(i, 1)] - v[index(i, 2)]) / (2 * dr);
    if (j == nr() - 1)
      return (3 * v[index(i, j)] - 4 * v[index(i, j - 1)] + v[index(i, j - 2)]) / (2 * dr);
    return (v[index(i, j + 1)] - v[index(i, j - 1)]) / (2 * dr);
  };
  for (std::size_t j = 0; j < nr(); ++j)
    for (std::size_t i = 0; i < ns(); ++i) {
      const std::size_t k = index(i, j);
      if (closed[k]) {
        rho_rr[k] = rho_ss[k] = rho_rs[k] = 0.0;
        continue;
      }
      rho_rr[k] = d_r(rho_r, i, j);
      rho_ss[k] = d_s(rho_s, i, j);
      rho_rs[k] = 0.5 * (d_s(rho_r, i, j) + d_r(rho_s, i, j));
    }
}

MetricField build_metric_field(const FieldWindow& window, const ScaffoldProfile& profile,
                               const StepControl& control, FieldBuildStats* stats,
                               double pde_tol) {
  if (window.r_min < 0.0) throw InvalidParameter("window.r_min < 0");
  if (window.ns < 3 || window.nr < 3) throw InvalidParameter("window needs >= 3 nodes per axis");
  MetricField field(window, GLaw::Warped);
  StepControl ctl = control;
  ctl.record_nodes = false;
  std::vector<std::size_t> row_steps(window.nr, 0), row_traced(window.nr, 0);
  parallel_for(window.nr, [&](std::size_t j) {
    const double r = field.r(j);
    const double c = std::cosh(r);
    for (std::size_t i = 0; i < window.ns; ++i) {
      const double s = field.s(i);
      const std::size_t k = field.index(i, j);
      field.beta[k] = profile.beta(s, r).value;
      if (in_omega_closure(s, r, profile)) {
        field.rho[k] = r;
        continue;
      }
      const CharacteristicPath path = trace_characteristic({s, r}, profile, ctl);
      field.rho[k] = path.rho_value;
      field.rho_r[k] = path.rho_r;
      field.rho_s[k] = path.rho_s;
      field.closed[k] = 0;
      row_steps[j] += path.steps;
      ++row_traced[j];
      (void)c;
    }
  });
  field.fill_second_derivatives();
  const double residual = field.max_pde_residual();
  if (stats) {
    stats->traced = stats->steps = 0;
    for (std::size_t j = 0; j < window.nr; ++j) {
      stats->traced += row_traced[j];
      stats->steps += row_steps[j];
    }
    stats->closed = window.ns * window.nr - stats->traced;
    stats->max_pde_residual = residual;
  }
  if (residual > pde_tol)
    throw InconsistentField("max |rho_s - beta h^2 rho_r| = " + std::to_string(residual));
  return field;
}

void force_beta(MetricField& field, double value) {
  for (std::size_t j = 0; j < field.nr(); ++j) {
    const double c = std::cosh(field.r(j));
    for (std::size_t i = 0; i < field.ns(); ++i) {
      const std::size_t k = field.index(i, j);
      if (field.closed[k]) continue;
      field.beta[k] = value;
      field.rho_s[k] = value * c * c * field.rho_r[k];
    }
  }
  field.fill_second_derivatives();
}

MetricField hyperbolic_reference_field(const FieldWindow& window) {
  MetricField field(window, GLaw::Hyperbolic);
  for (std::size_t j = 0; j < window.nr; ++j)
    for (std::size_t i = 0; i < window.ns; ++i) field.rho[field.index(i, j)] = field.r(j);
  return field;
}

namespace {
constexpr char kMagic[8] = {'H', 'D', 'M', 'F', 'I', 'E', 'L', 'D'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& o, const T& v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
void get(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}
} // namespace

void MetricField::save(const std::string& path, const std::string& key) const {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw std::runtime_error("cannot write " + path);
  o.write(kMagic, sizeof kMagic);
  put(o, kVersion);
  const std::uint64_t klen = key.size();
  put(o, klen);
  o.write(key.data(), std::streamsize(klen));
  put(o, window_);
  put(o, law_);
  for (const auto* v : {&rho, &rho_r, &rho_s, &rho_rr, &rho_ss, &rho_rs, &beta})
    o.write(reinterpret_cast<const char*>(v->data()), std::streamsize(v->size() * sizeof(double)));
  o.write(reinterpret_cast<const char*>(closed.data()), std::streamsize(closed.size()));
}

MetricField MetricField::load(const std::string& path, const std::string& key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CacheMiss("no cached field at " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  std::uint32_t version = 0;
  get(in, version);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0 || version != kVersion)
    throw CacheMiss("unreadable cache " + path);
  std::uint64_t klen = 0;
  get(in, klen);
  std::string stored(klen, '\0');
  in.read(stored.data(), std::streamsize(klen));
  if (stored != key) throw CacheMiss("cache key mismatch at " + path);
  FieldWindow w;
  GLaw law;
  get(in, w);
  get(in, law);
  MetricField f(w, law);
  for (auto* v : {&f.rho, &f.rho_r, &f.rho_s, &f.rho_rr, &f.rho_ss, &f.rho_rs, &f.beta})
    in.read(reinterpret_cast<char*>(v->data()), std::streamsize(v->size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(f.closed.data()), std::streamsize(f.closed.size()));
  if (!in) throw CacheMiss("truncated cache " + path);
  return f;
}

void write_metric_csv(const MetricField& f, const std::string& path) {
  CsvWriter csv(path, {"s", "r", "rho", "rho_r", "rho_s", "log_g", "g_r/g", "g_s/g",
                       "g_rr/g", "g_ss/g", "g_rs/g", "beta"});
  for (std::size_t j = 0; j < f.nr(); ++j)
    for (std::size_t i = 0; i < f.ns(); ++i) {
      const RhoJet q = f.jet(i, j);
      // On the axis the ratios are infinite; report the Omega-branch limits.
      GRatios g = q.rho > 0.0 ? g_ratios(f.law(), q)
                              : GRatios{-INFINITY, INFINITY, 0.0, law_axis_K(f.law()), 0.0, 0.0};
      csv.row({f.s(i), f.r(j), q.rho, q.rho_r, q.rho_s, g.log_g, g.g_r, g.g_s, g.g_rr, g.g_ss,
               g.g_rs, q.beta});
    }
}

} // namespace hadamard
