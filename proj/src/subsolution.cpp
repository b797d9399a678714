#include "hadamard/subsolution.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/roots.hpp>

#include "hadamard/errors.hpp"
#include "hadamard/io.hpp"

namespace hadamard {

namespace {

double sech(double r) { return 1.0 / std::cosh(r); }

// int_x^inf sech^3, by the exponential series for x >= 3 (no cancellation
// against the slowly varying primitive) and quadrature below.
double sech3_tail(double x) {
  if (x < 3.0)
    return gauss_integrate_panels([](double t) { return std::pow(sech(t), 3); }, x, 3.0, 8) +
           sech3_tail(3.0);
  const double e2 = std::exp(-2.0 * x);
  double term = std::exp(-3.0 * x), sum = 0.0;
  for (int k = 0; k < 60; ++k) {
    const double add = double((k + 1) * (k + 2)) / 2.0 * term / (3.0 + 2.0 * k);
    sum += (k % 2 ? -add : add);
    if (add < 1e-18 * std::fabs(sum)) break;
    term *= e2;
  }
  return 8.0 * sum;
}

// Gudermannian, int_0^r 1/cosh.
double gd(double r) { return 2.0 * std::atan(std::tanh(0.5 * r)); }

// Left side of the sufficient inequality given its first term
// t1 = (g_r/g) h (beta - q). h^3 q' q^2 is formed as (hq)^2 (hq') so it
// cannot overflow.
double sufficient(double r, double q, double qd, double t1, double Bbar0) {
  const double h = std::cosh(r), hr = std::sinh(r);
  const double hq = h * q;
  const double w = 1.0 + hq * hq;
  return t1 - h * qd - hr * q - w / h - 2.0 * Bbar0 * std::fabs(hq * hq * h * qd - hr * q) / w;
}

} // namespace

double t0_bracket(double r, double T0, double Bbar0) {
  const double sr = sech(r), s0 = sech(T0), t = std::tanh(r);
  return std::cosh(2.0 * r) + sr * sr - s0 * s0 - t * t - 2.0 * Bbar0;
}

double QProfile::bridge_weight(double r) const { return lam_ * smoothstep((r - T1_) / wb_); }

double QProfile::bridge_gain(double r) const {
  if (r <= T1_) return 0.0;
  if (r <= T1_ + wb_)
    return gauss_integrate(
        [this](double t) { return 2.0 * bridge_weight(t) * std::pow(sech(t), 3); }, T1_, r);
  return gain_ramp_ + 2.0 * lam_ * (sech3_tail(T1_ + wb_) - sech3_tail(r));
}

double QProfile::q_bridge(double r) const {
  return cT0_ * (-std::tanh(r) * sech(r) + bridge_gain(r));
}

double QProfile::q_bridge_d1(double r) const {
  const double sr = sech(r), t = std::tanh(r);
  return cT0_ * (t * t * sr - sr * sr * sr + 2.0 * bridge_weight(r) * sr * sr * sr);
}

double QProfile::q(double r) const {
  const double half = 0.5 * w_;
  if (r < T0_ - half) return -std::tanh(r);
  if (r <= T0_ + half) {
    const double sg = smoothstep((r - T0_ + half) / w_);
    return (1.0 - sg) * -std::tanh(r) + sg * -cT0_ * std::tanh(r) * sech(r);
  }
  if (r <= T1_) return -cT0_ * std::tanh(r) * sech(r);
  if (r < T2_ - w_) return q_bridge(r);
  if (r <= T2_) return (1.0 - smoothstep((r - T2_ + w_) / w_)) * q_bridge(r);
  if (r <= T3_) return 0.0;
  const double qd = scaffold_->beta0(r) - sech(r);
  if (r <= T3_ + w_) return smoothstep((r - T3_) / w_) * qd;
  return qd;
}

double QProfile::q_d1(double r) const {
  const double half = 0.5 * w_;
  auto dA = [](double x) { return -std::pow(sech(x), 2); };
  auto dB = [this](double x) {
    const double sr = sech(x), t = std::tanh(x);
    return cT0_ * (t * t * sr - sr * sr * sr);
  };
  if (r < T0_ - half) return dA(r);
  if (r <= T0_ + half) {
    const double u = (r - T0_ + half) / w_;
    const double sg = smoothstep(u), sgd = smoothstep_d1(u) / w_;
    const double qa = -std::tanh(r), qb = -cT0_ * std::tanh(r) * sech(r);
    return (1.0 - sg) * dA(r) + sg * dB(r) + sgd * (qb - qa);
  }
  if (r <= T1_) return dB(r);
  if (r < T2_ - w_) return q_bridge_d1(r);
  if (r <= T2_) {
    const double u = (r - T2_ + w_) / w_;
    return (1.0 - smoothstep(u)) * q_bridge_d1(r) - smoothstep_d1(u) / w_ * q_bridge(r);
  }
  if (r <= T3_) return 0.0;
  const double qd = scaffold_->beta0(r) - sech(r);
  const double qdd = scaffold_->beta0_d1(r) + sech(r) * std::tanh(r);
  if (r <= T3_ + w_) {
    const double u = (r - T3_) / w_;
    return smoothstep(u) * qdd + smoothstep_d1(u) / w_ * qd;
  }
  return qdd;
}

double QProfile::integral(double r) const {
  if (r < 0.0 || r > table_.x_max() + 1e-9)
    throw InvalidParameter("r=" + std::to_string(r) + " outside the q table");
  return table_(std::min(r, table_.x_max()));
}

double QProfile::bound(double r) const { return beta0_table_(std::min(r, r_max())) + gd(r); }

std::vector<double> QProfile::breakpoints() const {
  return {T0_ - 0.5 * w_, T0_ + 0.5 * w_, T1_, T1_ + wb_, T2_ - w_, T2_, T3_, T3_ + w_};
}

QProfile build_q(double a, const OperatorSpec& spec, const ScaffoldProfile& profile,
                 const QProfileOptions& opt) {
  QProfile P;
  P.scaffold_ = std::make_shared<const ScaffoldProfile>(profile);
  P.a_ = a;
  P.w_ = opt.smoothing_width;
  P.wb_ = opt.bridge_width;
  P.lam_ = opt.bridge_fraction;
  const double Bbar0 = spec.Bbar0();
  const double R = profile.range_max();
  const double L = opt.lattice;

  // T0: smallest lattice radius >= 1 whose bracket stays positive beyond it,
  // re-checked at ten times the lattice density.
  bool found = false;
  for (double t0 = 1.0; t0 < R; t0 += L) {
    bool ok = true;
    for (double r = t0 + 0.1 * L; r <= std::min(R, t0 + 10.0) && ok; r += 0.1 * L)
      ok = t0_bracket(r, t0, Bbar0) > 0.0;
    if (ok && t0_bracket(t0 + 1e-9, t0, Bbar0) > 0.0) {
      P.T0_ = t0;
      found = true;
      break;
    }
  }
  if (!found) throw SearchExhausted("T0", 1.0, R);
  P.cT0_ = std::cosh(P.T0_);

  // T1: s' + ell(r) >= 4 for s' >= a - log cosh T0 - 1, and beta0 h^2 >= 1,
  // both for every r >= T1.
  auto f_ok_from = [&](double t1) {
    for (double r = t1; r <= R; r += profile.config().grid_resolution)
      if (profile.beta0_h2(r) < 1.0) return false;
    return true;
  };
  const double s_low = a - log_cosh(P.T0_) - 1.0;
  const double t_first = P.T0_ + 0.5 * P.w_ + L;
  double t1_xi = NAN, t1_f = NAN;
  for (double t1 = std::ceil(t_first / L) * L; t1 < R; t1 += L) {
    const bool fo = f_ok_from(t1);
    if (fo && std::isnan(t1_f)) t1_f = t1;
    if (fo && s_low + profile.ell(t1) >= 4.0) {
      t1_xi = t1;
      break;
    }
  }
  if (!std::isnan(t1_xi)) {
    P.T1_ = t1_xi;
    P.xi_met_ = true;
  } else if (!opt.strict_xi && !std::isnan(t1_f)) {
    P.T1_ = t1_f;
    P.xi_met_ = false;
  } else {
    throw SearchExhausted("T1", t_first, R);
  }
  P.gain_ramp_ = 0.0;
  P.gain_ramp_ = P.bridge_gain(P.T1_ + P.wb_);

  // T2: the bridge value reaches 0.
  auto D = [&](double r) { return -std::tanh(r) * sech(r) + P.bridge_gain(r); };
  double lo = P.T1_ + P.wb_, hi = lo;
  if (D(lo) >= 0.0) throw SearchExhausted("T2", lo, R);
  while (D(hi) < 0.0) {
    lo = hi;
    hi += 1.0;
    if (hi > R) throw SearchExhausted("T2", P.T1_, R);
  }
  boost::uintmax_t iters = 200;
  auto root = boost::math::tools::toms748_solve(
      D, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  P.T2_ = 0.5 * (root.first + root.second);
  if (P.T2_ - P.w_ < P.T1_ + P.wb_) throw SearchExhausted("T2", P.T1_, R);

  // T3: first zero of beta0 - 1/cosh past T2 after which the (q5) lower
  // bound stays positive on the lattice.
  auto q5 = [&](double r) {
    const double b = profile.beta0(r), bd = profile.beta0_d1(r);
    const double ch = std::cosh(r), sh = std::sinh(r);
    return 2.0 * std::cosh(2.0 * r) - bd * ch - b * sh - b * b * ch + 2.0 * b - 2.0 / ch -
           2.0 * Bbar0 * (std::fabs(bd) * ch + b * sh + 2.0 * std::tanh(r));
  };
  found = false;
  for (double z : profile.sign_changes()) {
    if (z <= P.T2_) continue;
    bool ok = true;
    for (double r = z; r <= R && ok; r += profile.config().grid_resolution) ok = q5(r) > 0.0;
    if (ok) {
      P.T3_ = z;
      found = true;
      break;
    }
  }
  if (!found) throw SearchExhausted("T3", P.T2_, R);

  // Running integrals of q and beta0, exact per cell up to quadrature, with
  // cells split at every joint.
  std::vector<double> cuts = P.breakpoints();
  cuts.push_back(3.0);
  cuts.push_back(5.0);
  const double ws = profile.config().smoothing_width;
  for (const Drop& d : profile.config().plateau_schedule)
    for (double x : {d.start, d.start + ws, d.end - ws, d.end}) cuts.push_back(x);
  std::sort(cuts.begin(), cuts.end());
  const double dx = opt.table_step;
  const std::size_t n = std::size_t(std::floor(R / dx + 1e-9)) + 1;
  std::vector<double> Q(n, 0.0), q(n), B(n, 0.0), b(n);
  auto cell = [&](const std::function<double(double)>& f, double x0, double x1) {
    double sum = 0.0, left = x0;
    for (double c : cuts)
      if (c > x0 && c < x1) {
        sum += gauss_integrate(f, left, c);
        left = c;
      }
    return sum + gauss_integrate(f, left, x1);
  };
  auto qf = [&](double r) { return P.q(r); };
  auto bf = [&](double r) { return profile.beta0(r); };
  for (std::size_t k = 0; k < n; ++k) {
    const double x = dx * double(k);
    q[k] = P.q(x);
    b[k] = profile.beta0(x);
    if (k) {
      Q[k] = Q[k - 1] + cell(qf, x - dx, x);
      B[k] = B[k - 1] + cell(bf, x - dx, x);
    }
  }
  P.table_ = HermiteTable(0.0, dx, std::move(Q), std::move(q));
  P.beta0_table_ = HermiteTable(0.0, dx, std::move(B), std::move(b));
  return P;
}

SubsolutionParams make_subsolution(double a, double c, const OperatorSpec& spec,
                                   const ScaffoldProfile& profile, const QProfileOptions& opt) {
  if (!(c > 0.0)) throw InvalidParameter("c must be positive");
  SubsolutionParams p;
  p.a = a;
  p.c = c;
  p.delta = spec.delta_sub();
  p.Bbar0 = spec.Bbar0();
  p.q = build_q(a, spec, profile, opt);
  return p;
}

double f_value(const SubsolutionParams& p, double s) {
  return s <= p.a ? 0.0 : p.c * std::tanh(p.delta * (s - p.a));
}

double f_d1(const SubsolutionParams& p, double s) {
  if (s <= p.a) return 0.0;
  const double sh = sech(p.delta * (s - p.a));
  return p.c * p.delta * sh * sh;
}

double f_d2(const SubsolutionParams& p, double s) {
  if (s <= p.a) return 0.0;
  const double x = p.delta * (s - p.a), sh = sech(x);
  return -2.0 * p.c * p.delta * p.delta * sh * sh * std::tanh(x);
}

PhiValue phi_eval(const SubsolutionParams& p, HalfPlanePoint pt) {
  PhiValue v;
  v.s = pt.s - p.q.integral(pt.r);
  if (v.s <= p.a) return v;
  const double fp = f_d1(p, v.s), q = p.q.q(pt.r), sr = sech(pt.r);
  v.phi = f_value(p, v.s);
  v.phi_s = fp;
  v.grad_R = -fp * q;
  v.grad_S = fp * sr * sr;
  v.norm = fp * std::sqrt(sr * sr + q * q);
  return v;
}

QsubMargin qsub_terms(const SubsolutionParams& p, const OperatorSpec& spec, HalfPlanePoint pt,
                      double gr_over_g, double beta) {
  const double r = pt.r;
  const double s = pt.s - p.q.integral(r);
  if (s <= p.a) throw OutsideSupport("recovered s=" + std::to_string(s) + " <= a");
  const double q = p.q.q(r), qd = p.q.q_d1(r);
  const double h = std::cosh(r), hr = std::sinh(r);
  // On the axis g_r/g is infinite while beta - q vanishes; the product tends
  // to -q'(0) because g_r/g ~ 1/r there.
  const double t1 = r == 0.0 ? beta - qd : gr_over_g * h * (beta - q);
  QsubMargin m;
  m.sufficient = sufficient(r, q, qd, t1, p.Bbar0);

  const double fp = f_d1(p, s);
  const double ratio = -2.0 * p.delta * std::tanh(p.delta * (s - p.a));  // f''/f'
  const double sr = 1.0 / h;
  const double grad2 = fp * fp * (sr * sr + q * q);
  const double Bt = grad2 > 0.0 ? spec.B(grad2) * grad2 : 0.0;
  const double hq = h * q;
  const double w = 1.0 + hq * hq;
  const double brace = t1 - h * qd - hr * q + ratio * w / h * (1.0 + 2.0 * Bt) -
                       2.0 * Bt * (hq * hq * h * qd - hr * q) / w;
  m.exact = fp > 0.0 ? spec.A(grad2) * fp / h * brace : 0.0;
  return m;
}

QsubMargin qsub_margin(const SubsolutionParams& p, const OperatorSpec& spec,
                       const MetricField& field, HalfPlanePoint pt) {
  const RhoJet q = field.sample(pt.s, pt.r);
  return qsub_terms(p, spec, pt, law_J(field.law(), q.rho) * q.rho_r, q.beta);
}

double radial_margin(const SubsolutionParams& p, double r) {
  const double q = p.q.q(r), qd = p.q.q_d1(r);
  const double beta = r < p.q.T1() ? 0.0 : p.q.scaffold().beta0(r);
  const double t1 = r == 0.0 ? beta - qd : law_J(GLaw::Warped, r) * std::cosh(r) * (beta - q);
  return sufficient(r, q, qd, t1, p.Bbar0);
}

GridReport verify_subsolution(const SubsolutionParams& p, const OperatorSpec& spec,
                              const MetricField& field, double tol, std::size_t stride) {
  GridReport rep("subsolution", tol);
  const std::string kSuff = "(Qsubphi) margin", kExact = "Q[phi] exact";
  rep.set_tolerance(kSuff, 0.0);
  const QProfile& Q = p.q;
  std::size_t in_support = 0;
  stride = std::max<std::size_t>(1, stride);
  for (std::size_t j = 0; j < field.nr(); j += stride) {
    const double r = field.r(j);
    if (r > Q.r_max()) break;
    const double Qr = Q.integral(r);
    for (std::size_t i = 0; i < field.ns(); i += stride) {
      const double sp = field.s(i);
      if (sp - Qr <= p.a) continue;
      const RhoJet jet = field.jet(i, j);
      const double gr = law_J(field.law(), jet.rho) * jet.rho_r;
      const QsubMargin m = qsub_terms(p, spec, {sp, r}, gr, jet.beta);
      rep.record(kSuff, sp, r, m.sufficient);
      rep.record(kExact, sp, r, m.exact);
      ++in_support;
    }
  }

  // Profile checks along r.
  const ScaffoldProfile& sc = Q.scaffold();
  const double R = Q.r_max(), w = Q.smoothing_width();
  rep.record("q(0) = 0", 0.0, 0.0, -std::fabs(Q.q(0.0)));
  rep.set_tolerance("q(0) = 0", 0.0);
  rep.record("q(T2) = 0", 0.0, Q.T2(), -std::fabs(Q.q(Q.T2())));
  rep.set_tolerance("q(T2) = 0", 0.0);
  rep.record("beta0(T3) cosh T3 = 1", 0.0, Q.T3(),
             1e-8 - std::fabs(sc.beta0(Q.T3()) * std::cosh(Q.T3()) - 1.0));
  rep.set_tolerance("beta0(T3) cosh T3 = 1", 0.0);
  std::vector<double> rs;
  for (double r = 0.0; r <= R + 1e-12; r += 0.01) rs.push_back(r);
  for (double b : Q.breakpoints())
    for (double r = b - w; r <= b + w; r += 0.001)
      if (r >= 0.0 && r <= R) rs.push_back(r);
  std::sort(rs.begin(), rs.end());
  const std::string kRad = "(Qsubphi) radial lower bound";
  rep.set_tolerance(kRad, 0.0);
  const std::string kInt = "int q <= int beta0 + int 1/cosh";
  rep.set_tolerance(kInt, 1e-10);
  const std::string kLow = "bridge: -cosh T0 sinh r/cosh^2 r <= q <= 0";
  const std::string kSlope = "bridge: L < q' < cosh T0/cosh r";
  const std::string kGrow = "int q increasing beyond T3";
  rep.set_tolerance(kLow, 0.0);
  rep.set_tolerance(kSlope, 0.0);
  rep.set_tolerance(kGrow, 0.0);
  const double cT0 = std::cosh(Q.T0());
  for (double r : rs) {
    rep.record(kRad, 0.0, r, radial_margin(p, r));
    rep.record(kInt, 0.0, r, Q.bound(r) - Q.integral(r));
    if (r > Q.T1() && r <= Q.T2() - w) {
      // Relative margins. On the bridge q' = L + lambda (U - L), and U - L
      // = 2 cosh T0 sech^3 r cancels badly, so the slope test is on lambda and
      // L / (U - L) = (sinh^2 r - 1) / 2.
      const double q = Q.q(r), qB = -cT0 * std::tanh(r) * sech(r);
      const double lam = Q.bridge_weight(r), sh = std::sinh(r);
      rep.record(kLow, 0.0, r, std::min(-q, q - qB) / std::fabs(qB));
      rep.record(kSlope, 0.0, r, std::min({0.5 * (sh * sh - 1.0), lam, 1.0 - lam}));
    }
    if (r > Q.T3()) rep.record(kGrow, 0.0, r, Q.q(r) / (sc.beta0(r) + sech(r)));
  }

  rep.note("a", p.a);
  rep.note("c", p.c);
  rep.note("delta", p.delta);
  rep.note("Bbar0", p.Bbar0);
  rep.note("operator", spec.label());
  rep.note("T0", Q.T0());
  rep.note("T1", Q.T1());
  rep.note("T2", Q.T2());
  rep.note("T3", Q.T3());
  rep.note("xi_condition_met", Q.xi_condition_met());
  rep.note("nodes_in_support", in_support);
  rep.note("int_q_at_r_max", Q.integral(R));
  return rep;
}

double a_threshold(const OperatorSpec& spec, const ScaffoldProfile& profile, HalfPlanePoint pt,
                   double level, const QProfileOptions& opt) {
  auto g = [&](double a) {
    const SubsolutionParams p = make_subsolution(a, 1.0, spec, profile, opt);
    return phi_eval(p, pt).phi - level;
  };
  const double span = std::atanh(level) / spec.delta_sub();
  double lo = pt.s - 4.0 * span - 50.0, hi = pt.s + 50.0;
  if (!(g(lo) > 0.0) || !(g(hi) < 0.0)) throw SearchExhausted("a*", lo, hi);
  for (int k = 0; k < 60 && hi - lo > 1e-12; ++k) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) >= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

void write_q_csv(const QProfile& Q, const std::string& path, double step) {
  CsvWriter csv(path, {"r", "q", "q_r", "int_q", "bound"});
  for (double r = 0.0; r <= Q.r_max() + 1e-12; r += step)
    csv.row({r, Q.q(r), Q.q_d1(r), Q.integral(r), Q.bound(r)});
}

} // namespace hadamard
