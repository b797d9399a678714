#include "hadamard/scaffold.hpp"

#include <algorithm>
#include <cmath>

#include "hadamard/errors.hpp"
#include "hadamard/io.hpp"

namespace hadamard {

namespace {
constexpr double kRampStart = 3.0;
constexpr double kRampEnd = 5.0;
constexpr double kRampWidth = kRampEnd - kRampStart;
} // namespace

double ScaffoldProfile::xi(double x) { return smoothstep(x / 4.0); }
double ScaffoldProfile::xi_d1(double x) { return smoothstep_d1(x / 4.0) / 4.0; }
double ScaffoldProfile::xi_d2(double x) { return smoothstep_d2(x / 4.0) / 16.0; }
double ScaffoldProfile::xi_integral(double x) {
  return 4.0 * smoothstep_integral(x / 4.0);
}

ScaffoldProfile::ScaffoldProfile(const ScaffoldConfig& config) : config_(config) {
  check_config();
  const double w = config_.smoothing_width;
  double prev = config_.base_level;
  for (const Drop& d : config_.plateau_schedule) {
    eta_.push_back(std::log(prev / d.level) / (d.end - d.start - w));
    prev = d.level;
  }
  if (config_.enforce_invariants) check_schedule();
  build_ell();
  if (config_.enforce_invariants) check_invariants();
}

void ScaffoldProfile::check_config() const {
  const ScaffoldConfig& c = config_;
  if (!(c.epsilon > 0.0)) throw ConstraintViolation("epsilon > 0", 0.0, c.epsilon);
  if (!(c.epsilon < 0.25))
    throw ConstraintViolation("epsilon < 1/4", 0.0, 0.25 - c.epsilon);
  if (!(c.base_level > 0.0))
    throw ConstraintViolation("base_level > 0", kRampEnd, c.base_level);
  if (!(c.r1 > kRampEnd)) throw ConstraintViolation("r1 > 5", c.r1, c.r1 - kRampEnd);
  const double lg = std::log(c.base_level) + 2.0 * log_cosh(c.r1);
  if (!(lg > 0.0)) throw ConstraintViolation("beta0(r1) cosh^2(r1) > 1", c.r1, lg);
  if (!(c.smoothing_width > 0.0))
    throw ConstraintViolation("smoothing_width > 0", 0.0, c.smoothing_width);
  if (!(c.grid_resolution > 0.0 && c.grid_resolution <= 0.1))
    throw ConstraintViolation("grid_resolution in (0, 0.1]", 0.0, c.grid_resolution);
  if (!(c.range_max > c.r1 && c.range_max <= 300.0))
    throw ConstraintViolation("range_max in (r1, 300]", c.range_max, c.range_max - c.r1);
  if (c.n_zero < 0) throw ConstraintViolation("n_zero >= 0", 0.0, c.n_zero);
  double last_end = c.r1, last_level = c.base_level;
  for (const Drop& d : c.plateau_schedule) {
    if (d.start < last_end)
      throw ConstraintViolation("drops disjoint, increasing, beyond r1", d.start,
                                d.start - last_end);
    if (d.end - d.start < 2.0 * c.smoothing_width)
      throw ConstraintViolation("drop length >= 2 smoothing_width", d.start,
                                d.end - d.start - 2.0 * c.smoothing_width);
    if (!(d.level > 0.0 && d.level < last_level))
      throw ConstraintViolation("drop level decreasing and positive", d.start,
                                last_level - d.level);
    last_end = d.end;
    last_level = d.level;
  }
}

double ScaffoldProfile::log_drop(double r) const {
  const double w = config_.smoothing_width;
  double phi = 0.0;
  for (std::size_t k = 0; k < eta_.size(); ++k) {
    const Drop& d = config_.plateau_schedule[k];
    phi += eta_[k] * w *
           (smoothstep_integral((r - d.start) / w) -
            smoothstep_integral((r - d.end + w) / w));
  }
  return phi;
}

double ScaffoldProfile::log_rate(double r) const {
  const double w = config_.smoothing_width;
  double v = 0.0;
  for (std::size_t k = 0; k < eta_.size(); ++k) {
    const Drop& d = config_.plateau_schedule[k];
    v += eta_[k] * (smoothstep((r - d.start) / w) - smoothstep((r - d.end + w) / w));
  }
  return v;
}

double ScaffoldProfile::log_rate_d1(double r) const {
  const double w = config_.smoothing_width;
  double v = 0.0;
  for (std::size_t k = 0; k < eta_.size(); ++k) {
    const Drop& d = config_.plateau_schedule[k];
    v += eta_[k] / w *
         (smoothstep_d1((r - d.start) / w) - smoothstep_d1((r - d.end + w) / w));
  }
  return v;
}

void ScaffoldProfile::check_schedule() const {
  // (beta0 h^2)' >= 0 needs Phi' <= 2 tanh r on every drop.
  for (const Drop& d : config_.plateau_schedule) {
    for (double r = d.start; r <= d.end; r += config_.grid_resolution) {
      const double slack = 2.0 * std::tanh(r) - log_rate(r);
      if (slack < 0.0)
        throw ScheduleInfeasible("drop [" + std::to_string(d.start) + ", " +
                                 std::to_string(d.end) + "] forces (beta0 h^2)' < 0 at r=" +
                                 std::to_string(r));
    }
  }
}

double ScaffoldProfile::beta0(double r) const {
  if (r <= kRampStart) return 0.0;
  if (r < kRampEnd) return config_.base_level * smoothstep((r - kRampStart) / kRampWidth);
  return config_.base_level * std::exp(-log_drop(r));
}

double ScaffoldProfile::beta0_d1(double r) const {
  if (r <= kRampStart) return 0.0;
  if (r < kRampEnd)
    return config_.base_level * smoothstep_d1((r - kRampStart) / kRampWidth) / kRampWidth;
  return -log_rate(r) * beta0(r);
}

double ScaffoldProfile::beta0_d2(double r) const {
  if (r <= kRampStart) return 0.0;
  if (r < kRampEnd)
    return config_.base_level * smoothstep_d2((r - kRampStart) / kRampWidth) /
           (kRampWidth * kRampWidth);
  const double p = log_rate(r);
  return (p * p - log_rate_d1(r)) * beta0(r);
}

double ScaffoldProfile::beta0_h2(double r) const {
  if (r <= kRampStart) return 0.0;
  if (r < kRampEnd) {
    const double c = std::cosh(r);
    return beta0(r) * c * c;
  }
  return std::exp(std::log(config_.base_level) - log_drop(r) + 2.0 * log_cosh(r));
}

double ScaffoldProfile::beta0_h2_d1(double r) const {
  if (r <= kRampStart) return 0.0;
  if (r < kRampEnd) {
    const double c = std::cosh(r);
    return beta0_d1(r) * c * c + beta0(r) * std::sinh(2.0 * r);
  }
  return (2.0 * std::tanh(r) - log_rate(r)) * beta0_h2(r);
}

double ScaffoldProfile::beta0_h2_d2(double r) const {
  if (r <= kRampStart) return 0.0;
  if (r < kRampEnd) {
    const double c = std::cosh(r);
    return beta0_d2(r) * c * c + 2.0 * beta0_d1(r) * std::sinh(2.0 * r) +
           2.0 * beta0(r) * std::cosh(2.0 * r);
  }
  const double p = 2.0 * std::tanh(r) - log_rate(r);
  const double c = std::cosh(r);
  const double dp = 2.0 / (c * c) - log_rate_d1(r);
  return (p * p + dp) * beta0_h2(r);
}

double ScaffoldProfile::ell_d1(double r) const {
  if (r <= kRampStart) return 0.0;
  if (r < kRampEnd) {
    // eps * S^2 / f with f = b S cosh^2, written without the 0/0.
    const double c = std::cosh(r);
    return config_.epsilon / config_.base_level *
           smoothstep((r - kRampStart) / kRampWidth) / (c * c);
  }
  return config_.epsilon / beta0_h2(r);
}

double ScaffoldProfile::ell_d2(double r) const {
  if (r <= kRampStart) return 0.0;
  if (r < kRampEnd) {
    const double t = (r - kRampStart) / kRampWidth;
    const double c = std::cosh(r);
    return config_.epsilon / config_.base_level *
           (smoothstep_d1(t) / kRampWidth - 2.0 * smoothstep(t) * std::tanh(r)) / (c * c);
  }
  return -ell_d1(r) * (2.0 * std::tanh(r) - log_rate(r));
}

double ScaffoldProfile::ell(double r) const {
  if (r <= kRampStart) return 0.0;
  if (r >= ell_table_.x_max()) return ell_table_.values().back();
  return ell_table_(r);
}

void ScaffoldProfile::build_ell() {
  const double dr = config_.grid_resolution;
  const auto n = static_cast<std::size_t>(std::ceil(config_.range_max / dr)) + 1;
  std::vector<double> values(n, 0.0), slopes(n, 0.0);
  auto d1 = [this](double r) { return ell_d1(r); };
  for (std::size_t k = 1; k < n; ++k) {
    const double a = dr * double(k - 1), b = dr * double(k);
    values[k] = values[k - 1] + (b <= kRampStart ? 0.0 : gauss_integrate(d1, a, b));
    slopes[k] = ell_d1(b);
  }
  ell_table_ = HermiteTable(0.0, dr, std::move(values), std::move(slopes));
}

void ScaffoldProfile::check_invariants() const {
  for (double x = 0.001; x < 4.0; x += 0.001) {
    if (!(xi_d1(x) < 0.5)) throw ConstraintViolation("xi' < 1/2", x, 0.5 - xi_d1(x));
    if (!(std::fabs(xi_d2(x)) < 0.5))
      throw ConstraintViolation("|xi''| < 1/2", x, 0.5 - std::fabs(xi_d2(x)));
    if (!(xi_d2(x) + xi(x) > 0.0))
      throw ConstraintViolation("xi'' + xi > 0", x, xi_d2(x) + xi(x));
  }
  const double dr = config_.grid_resolution;
  const auto n = static_cast<std::size_t>(std::floor(config_.range_max / dr));
  for (std::size_t k = 0; k <= n; ++k) {
    const double r = dr * double(k);
    if (r <= kRampStart) continue;
    const double f = beta0_h2(r), f1 = beta0_h2_d1(r), f2 = beta0_h2_d2(r);
    if (f1 < -1e-12 * f) throw ConstraintViolation("(beta0 h^2)' >= 0", r, f1);
    if (f2 < -1e-12 * f) throw ConstraintViolation("(beta0 h^2)'' >= 0", r, f2);
    if (r >= kRampEnd && !(f * f2 > config_.epsilon))
      throw ConstraintViolation("(beta0 h^2)'' > eps/(beta0 h^2)", r,
                                f * f2 / config_.epsilon - 1.0);
    if (r >= config_.r1 && beta0_d1(r) > 0.0)
      throw ConstraintViolation("beta0 non-increasing beyond r1", r, -beta0_d1(r));
  }
  const auto zeros = sign_changes();
  if (static_cast<int>(zeros.size()) < config_.n_zero)
    throw ConstraintViolation("beta0 - 1/cosh sign changes >= n_zero", config_.range_max,
                              double(zeros.size()) - config_.n_zero);
}

Beta ScaffoldProfile::beta(double s, double r) const {
  const double b0 = beta0(r);
  if (b0 == 0.0) return {0.0, 0.0, 0.0};
  const double x = s + ell(r);
  if (x <= 0.0) return {0.0, 0.0, 0.0};
  const double xi0 = xi(x), xi1 = xi_d1(x);
  return {xi0 * b0, xi1 * b0, xi1 * ell_d1(r) * b0 + xi0 * beta0_d1(r)};
}

std::vector<double> ScaffoldProfile::sign_changes() const {
  // Sign of beta0 cosh r - 1, compared in logs.
  auto d = [this](double r) {
    const double b = beta0(r);
    if (b <= 0.0) return -1.0;
    return std::log(b) + log_cosh(r);
  };
  std::vector<double> zeros;
  const double dr = config_.grid_resolution;
  double r_prev = 0.0, d_prev = d(0.0);
  for (double r = dr; r <= config_.range_max + 1e-12; r += dr) {
    const double dv = d(r);
    if ((dv > 0.0) != (d_prev > 0.0)) {
      double lo = r_prev, hi = r;
      const bool rising = dv > 0.0;
      while (hi - lo > 1e-13) {
        const double mid = 0.5 * (lo + hi);
        ((d(mid) > 0.0) == rising ? hi : lo) = mid;
      }
      zeros.push_back(0.5 * (lo + hi));
    }
    r_prev = r;
    d_prev = dv;
  }
  return zeros;
}

ScaffoldProfile build_scaffold(const ScaffoldConfig& config) {
  return ScaffoldProfile(config);
}

GridReport validate_scaffold(const ScaffoldProfile& p, Interval range, double tol) {
  GridReport rep("scaffold", tol);
  const double eps = p.epsilon();
  const double dr = p.config().grid_resolution;
  static const double xs[] = {-1.0, 0.0, 0.05, 0.1, 0.25, 0.5, 1.0, 1.5, 2.0,
                              2.5,  3.0, 3.5,  3.9, 4.0,  5.0, 10.0};
  const auto n = static_cast<std::size_t>(std::floor((range.hi - range.lo) / dr + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) {
    const double r = range.lo + dr * double(k);
    const double ch = std::cosh(r);
    const double f = p.beta0_h2(r), f1 = p.beta0_h2_d1(r), f2 = p.beta0_h2_d2(r);
    const double l1 = p.ell_d1(r), l2 = p.ell_d2(r), ell = p.ell(r);
    for (double x : xs) {
      const double s = x - ell;
      const Beta b = p.beta(s, r);
      rep.record("beta >= 0", s, r, b.value);
      rep.record("beta <= 1/1000", s, r, 1e-3 - b.value);
      rep.record("|beta_r| <= 1/1000", s, r, 1e-3 - std::fabs(b.dr));
      rep.record("beta_s >= 0", s, r, b.ds);
      rep.record("beta_s <= 1/1000", s, r, 1e-3 - b.ds);
      rep.record("beta beta_r h^3 <= h_r/1000", s, r,
                 std::sinh(r) / 1000.0 - b.value * b.dr * ch * ch * ch);
      const double xi0 = ScaffoldProfile::xi(x), xi1 = ScaffoldProfile::xi_d1(x),
                   xi2 = ScaffoldProfile::xi_d2(x);
      rep.record("(beta h^2)_r >= 0", s, r, xi1 * l1 * f + xi0 * f1);
      rep.record("(beta h^2)_rr >= 0", s, r,
                 xi2 * l1 * l1 * f + 2.0 * xi1 * l1 * f1 + xi1 * l2 * f + xi0 * f2);
    }
    rep.record("(beta0 h^2)' >= 0", 0.0, r, f1);
    rep.record("(beta0 h^2)'' >= 0", 0.0, r, f2);
    if (r >= 5.0) {
      // Relative form: f f''/eps - 1 > 0.
      rep.record("(beta0 h^2)'' > eps/(beta0 h^2)", 0.0, r, f * f2 / eps - 1.0);
    }
    if (f > 0.0) {
      rep.record("ell' <= eps/(beta0 h^2)", 0.0, r, 1.0 - l1 * f / eps);
      rep.record("ell'' >= -ell'(beta0 h^2)'/(beta0 h^2)", 0.0, r, (l2 + l1 * f1 / f) * f / eps);
    }
  }
  for (double x = 0.01; x < 4.0; x += 0.01) {
    rep.record("xi'' + xi > 0", x, 0.0,
               ScaffoldProfile::xi_d2(x) + ScaffoldProfile::xi(x));
    rep.record("xi' < 1/2", x, 0.0, 0.5 - ScaffoldProfile::xi_d1(x));
    rep.record("|xi''| < 1/2", x, 0.0, 0.5 - std::fabs(ScaffoldProfile::xi_d2(x)));
  }

  // Partial-integral growth: I(r) = int_0^r beta0, J(r) = int_5^r 1/(beta0 h^2).
  auto b0 = [&p](double r) { return p.beta0(r); };
  auto inv = [&p](double r) { return 1.0 / p.beta0_h2(r); };
  const double r_ref = 10.0, r_end = range.hi;
  std::vector<double> marks;
  for (double r = 5.0; r <= r_end + 1e-9; r += 1.0) marks.push_back(r);
  double I = gauss_integrate_panels(b0, 3.0, 5.0, 4), J = 0.0;
  double I_ref = 0.0, J_ref = 0.0;
  bool increasing = true;
  for (std::size_t k = 1; k < marks.size(); ++k) {
    // Increments, not differences of the sums: late 1/(beta0 h^2) terms are
    // far below the rounding unit of J.
    const double dI = gauss_integrate_panels(b0, marks[k - 1], marks[k], 2);
    const double dJ = gauss_integrate_panels(inv, marks[k - 1], marks[k], 4);
    I += dI;
    J += dJ;
    if (!(dI > 0.0) || !(dJ > 0.0)) increasing = false;
    rep.record("partial integrals strictly increasing", 0.0, marks[k], std::min(dI / I, dJ / J));
    if (std::fabs(marks[k] - r_ref) < 1e-9) {
      I_ref = I;
      J_ref = J;
    }
  }
  if (r_end > r_ref) {
    rep.record("int beta0 growth (x5 from r=10)", 0.0, r_end, I / I_ref - 5.0);
    rep.record("int 1/(beta0 h^2) growth (x5 from r=10)", 0.0, r_end, J / J_ref - 5.0);
    rep.set_tolerance("int beta0 growth (x5 from r=10)", 0.0);
    rep.set_tolerance("int 1/(beta0 h^2) growth (x5 from r=10)", 0.0);
  }
  rep.note("int_beta0", {{"r10", I_ref}, {"r_end", I}, {"ratio", I_ref > 0 ? I / I_ref : 0.0}});
  rep.note("int_inv_beta0h2", {{"r10", J_ref}, {"r_end", J}, {"ratio", J_ref > 0 ? J / J_ref : 0.0}});
  rep.note("partial_integrals_increasing", increasing);
  rep.note("sign_changes", p.sign_changes());
  rep.note("range", {range.lo, range.hi});
  return rep;
}

void write_scaffold_csv(const ScaffoldProfile& p, const std::string& path) {
  CsvWriter csv(path, {"r", "beta0", "beta0'", "ell", "ell'", "beta0h2", "beta0h2'",
                       "beta0h2''"});
  const double dr = p.config().grid_resolution;
  const auto n = static_cast<std::size_t>(std::floor(p.range_max() / dr + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) {
    const double r = dr * double(k);
    csv.row({r, p.beta0(r), p.beta0_d1(r), p.ell(r), p.ell_d1(r), p.beta0_h2(r),
             p.beta0_h2_d1(r), p.beta0_h2_d2(r)});
  }
}

} // namespace hadamard
