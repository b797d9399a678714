#include "hadamard/qoperator.hpp"

#include <cmath>
#include <limits>

#include "hadamard/errors.hpp"

namespace hadamard {

std::string OperatorSpec::label() const {
  if (name == "p_laplace") {
    char buf[48];
    std::snprintf(buf, sizeof buf, "p_laplace(%g)", param);
    return buf;
  }
  return name;
}

OperatorSpec builtin_operator(const std::string& name, double p) {
  OperatorSpec o;
  o.name = name;
  if (name == "minimal_graph") {
    o.A = [](double t) { return 1.0 / std::sqrt(1.0 + t); };
    o.A_d1 = [](double t) { return -0.5 / ((1.0 + t) * std::sqrt(1.0 + t)); };
    o.A0 = 1.0;
    o.p = 1.0;
    o.B0 = 0.0;
    // sqrt(1 + t) - 1: the constant does not change the minimizer and would
    // swamp energy differences in floating point.
    o.F = [](double t) { return t / (1.0 + std::sqrt(1.0 + t)); };
    o.F_d1 = [](double t) { return 0.5 / std::sqrt(1.0 + t); };
    o.F_d2 = [](double t) { return -0.25 / ((1.0 + t) * std::sqrt(1.0 + t)); };
    o.energy_scale = 0.5;
    o.A_at_zero = 1.0;
  } else if (name == "laplace") {
    o.A = [](double) { return 1.0; };
    o.A_d1 = [](double) { return 0.0; };
    o.p = 2.0;
    o.F = [](double t) { return t; };
    o.F_d1 = [](double) { return 1.0; };
    o.F_d2 = [](double) { return 0.0; };
  } else if (name == "p_laplace") {
    if (!(p > 1.0)) throw InvalidParameter("p_laplace needs p > 1, got " + std::to_string(p));
    o.param = p;
    const double e = 0.5 * (p - 2.0);
    o.A = [e](double t) { return std::pow(t, e); };
    o.A_d1 = [e](double t) { return e == 0.0 ? 0.0 : e * std::pow(t, e - 1.0); };
    o.A0 = 1.0;
    o.p = p;
    o.B0 = e;
    o.F = [p](double t) { return 2.0 / p * std::pow(t, 0.5 * p); };
    o.F_d1 = [e](double t) { return std::pow(t, e); };
    o.F_d2 = [e](double t) { return e == 0.0 ? 0.0 : e * std::pow(t, e - 1.0); };
    o.A_at_zero = p > 2.0 ? 0.0 : (p == 2.0 ? 1.0 : std::numeric_limits<double>::infinity());
  } else {
    throw InvalidParameter("unknown operator '" + name + "'");
  }
  return o;
}

OperatorSpec parse_operator(const std::string& text) {
  std::string name = text, arg;
  if (auto k = text.find(':'); k != std::string::npos) {
    name = text.substr(0, k);
    arg = text.substr(k + 1);
  } else if (auto k = text.find('('); k != std::string::npos && text.back() == ')') {
    name = text.substr(0, k);
    arg = text.substr(k + 1, text.size() - k - 2);
  }
  double p = 0.0;
  if (!arg.empty()) {
    char* end = nullptr;
    p = std::strtod(arg.c_str(), &end);
    if (end == arg.c_str() || *end != '\0') throw InvalidParameter("bad operator parameter '" + arg + "'");
  }
  if (name == "p_laplace" && arg.empty()) throw InvalidParameter("p_laplace needs a parameter");
  return builtin_operator(name, p);
}

GridReport check_operator(const OperatorSpec& o) {
  GridReport rep("operator " + o.label(), 0.0);
  // Relative margins: each inequality divided by its right-hand side scale.
  double prev = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 240; ++k) {
    const double t = std::pow(10.0, -12.0 + 0.1 * k);  // 1e-12 .. 1e12
    const double a = o.A(t);
    const double bound = o.A0 * std::pow(t, 0.5 * (o.p - 2.0));
    rep.record("A(t) <= A0 t^((p-2)/2)", 0.0, t, 1.0 - a / bound + 1e-14);
    const double tb = t * o.B(t);
    rep.record("B(t) > -1/(2t)", 0.0, t, tb + 0.5);
    rep.record("B(t) <= B0/t", 0.0, t, o.B0 - tb + 1e-14);
    if (t >= 1e-9 && t <= 1e3) {
      const double m = t * o.A(t * t);
      rep.record("t A(t^2) increasing", 0.0, t, m - prev);
      prev = m;
    }
  }
  // t A(t^2) -> 0 as t -> 0+: the value at 1e-12 must be small and shrinking.
  const double v12 = 1e-12 * o.A(1e-24), v9 = 1e-9 * o.A(1e-18);
  rep.record("t A(t^2) -> 0", 0.0, 1e-12, v12 < 1e-5 && v12 < v9 ? 1.0 : -1.0);
  rep.note("A0", o.A0);
  rep.note("p", o.p);
  rep.note("B0", o.B0);
  rep.note("delta_sub", o.delta_sub());
  return rep;
}

double laplacian(const ScalarJet& u, const WarpData& w) {
  // On the axis g ~ r, so (g_r/g) u_r -> u_rr for u even in r.
  if (w.r == 0.0) return 2.0 * u.u_rr + u.u_ss;
  const double h = std::cosh(w.r), t = std::tanh(w.r);
  return u.u_rr + (w.g_r + t) * u.u_r + (u.u_ss + w.g_s * u.u_s) / (h * h);
}

double q_of_smooth(const ScalarJet& u, const OperatorSpec& spec, const WarpData& w) {
  const double h = std::cosh(w.r), th = std::tanh(w.r);
  const double h2 = h * h;
  const double grad2 = u.u_r * u.u_r + u.u_s * u.u_s / h2;
  const double lap = laplacian(u, w);
  if (grad2 < kDegenerateCutoff * kDegenerateCutoff) {
    if (!std::isfinite(spec.A_at_zero))
      throw DegenerateGradient("|grad u| below cutoff and A has no finite limit at 0");
    return spec.A_at_zero == 0.0 ? 0.0 : spec.A_at_zero * lap;
  }
  // Hessian in (r, s) with Gamma^r_ss = -h h', Gamma^s_rs = h'/h.
  const double H_rr = u.u_rr;
  const double H_rs = u.u_rs - th * u.u_s;
  const double H_ss = u.u_ss + h2 * th * u.u_r;
  const double vr = u.u_r, vs = u.u_s / h2;
  const double hess = vr * vr * H_rr + 2.0 * vr * vs * H_rs + vs * vs * H_ss;
  return spec.A(grad2) * lap + 2.0 * spec.A_d1(grad2) * hess;
}

ScalarJet jet_from_stencil(const std::array<double, 9>& v, double e) {
  ScalarJet j;
  j.u = v[0];
  j.u_s = (v[1] - v[2]) / (2 * e);
  j.u_r = (v[3] - v[4]) / (2 * e);
  j.u_ss = (v[1] - 2 * v[0] + v[2]) / (e * e);
  j.u_rr = (v[3] - 2 * v[0] + v[4]) / (e * e);
  j.u_rs = (v[5] - v[6] - v[7] + v[8]) / (4 * e * e);
  return j;
}

std::array<double, 9> stencil(const std::function<double(double, double)>& u, double s, double r,
                              double e) {
  return {u(s, r),         u(s + e, r),     u(s - e, r),     u(s, r + e),    u(s, r - e),
          u(s + e, r + e), u(s + e, r - e), u(s - e, r + e), u(s - e, r - e)};
}

ScalarJet fd_jet(const std::function<double(double, double)>& u, double s, double r,
                 double e) {
  return jet_from_stencil(stencil(u, s, r, e), e);
}

WarpData warp_at(const MetricField& field, double s, double r) {
  const RhoJet q = field.sample(s, r);
  const double J = law_J(field.law(), q.rho);
  return {r, J * q.rho_r, J * q.rho_s};
}

} // namespace hadamard
