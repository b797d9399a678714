#pragma once

#include <string>
#include <vector>

#include "hadamard/grid_report.hpp"
#include "hadamard/numerics.hpp"

namespace hadamard {

struct Drop {
  double start;  // drop begins (radius)
  double end;    // drop ends (radius)
  double level;  // beta0 value after the drop
};

struct ScaffoldConfig {
  double epsilon = 1e-30;
  // beta0 on [5, r1]. Small enough that every characteristic of the default
  // field window reaches Omega inside the tabulated range.
  double base_level = 2e-19;
  double r1 = 48.0;
  std::vector<Drop> plateau_schedule{{48.0, 74.0, 2.5e-33}};
  // Width of the smooth rise and fall of the log-rate inside each drop.
  double smoothing_width = 6.0;
  double grid_resolution = 0.01;
  double range_max = 80.0;
  int n_zero = 3;
  // false skips the drop-schedule and inequality checks at construction, so
  // that a violating scaffold can be fed to the later stages on purpose.
  bool enforce_invariants = true;
};

struct Beta {
  double value;
  double ds;
  double dr;
};

// Scaffolding functions xi, beta0, ell and beta(s,r) = xi(s + ell(r)) beta0(r).
//
// beta0 is 0 on [0,3], a smoothstep ramp on [3,5], the constant base_level
// on [5, first drop], and base_level * exp(-Phi(r)) afterwards, where Phi'
// is a sum of flat-topped bumps, one per drop. Everything except ell is in
// closed form; ell is integrated once and stored as a Hermite table.
class ScaffoldProfile {
public:
  explicit ScaffoldProfile(const ScaffoldConfig& config);

  const ScaffoldConfig& config() const { return config_; }
  double epsilon() const { return config_.epsilon; }
  double range_max() const { return config_.range_max; }

  static double xi(double x);
  static double xi_d1(double x);
  static double xi_d2(double x);
  // Primitive of xi vanishing at 0.
  static double xi_integral(double x);

  double beta0(double r) const;
  double beta0_d1(double r) const;
  double beta0_d2(double r) const;

  // f = beta0 cosh^2 r and derivatives.
  double beta0_h2(double r) const;
  double beta0_h2_d1(double r) const;
  double beta0_h2_d2(double r) const;

  double ell(double r) const;
  double ell_d1(double r) const;
  double ell_d2(double r) const;

  Beta beta(double s, double r) const;

  // Drop log-rate Phi' and its integral and slope.
  double log_rate(double r) const;
  double log_rate_d1(double r) const;
  double log_drop(double r) const;

  double plateau_level() const { return config_.base_level; }

  // Radii where beta0 - 1/cosh changes sign, located to 1e-12.
  std::vector<double> sign_changes() const;

private:
  void check_config() const;
  void check_schedule() const;
  void build_ell();
  void check_invariants() const;

  ScaffoldConfig config_;
  std::vector<double> eta_;  // plateau height of Phi' per drop
  HermiteTable ell_table_;
};

ScaffoldProfile build_scaffold(const ScaffoldConfig& config);

struct Interval {
  double lo;
  double hi;
};

// Margins of every scaffold inequality on a lattice of r (and s samples
// spanning the xi transition), plus the partial-integral growth checks.
GridReport validate_scaffold(const ScaffoldProfile& profile, Interval range,
                             double tol = 1e-6);

// CSV rows r, beta0, beta0', ell, ell', beta0h2, beta0h2', beta0h2''.
void write_scaffold_csv(const ScaffoldProfile& profile, const std::string& path);

} // namespace hadamard
