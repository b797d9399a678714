#pragma once

#include <array>
#include <functional>
#include <string>

#include "hadamard/grid_report.hpp"
#include "hadamard/metric.hpp"

namespace hadamard {

// Q[u] = div A(|grad u|^2) grad u with its structure constants.
struct OperatorSpec {
  std::string name;
  double param = 0.0;  // p for p_laplace, unused otherwise
  std::function<double(double)> A;
  std::function<double(double)> A_d1;
  double A0 = 1.0;
  double p = 2.0;
  double B0 = 0.0;
  // F with F' = energy_scale * A, so the Euler-Lagrange equation of
  // sum F(|grad u|^2) is Q[u] = 0 up to the factor 2 energy_scale. F(0) = 0.
  std::function<double(double)> F;
  std::function<double(double)> F_d1;
  std::function<double(double)> F_d2;
  double energy_scale = 1.0;
  // lim A(t) as t -> 0+; infinite when the operator has no finite limit.
  double A_at_zero = 1.0;

  double B(double t) const { return A_d1(t) / A(t); }
  double Bbar0() const { return std::max(B0, 0.5); }
  double delta_sub() const { return 1.0 / (2.0 * (1.0 + 2.0 * B0)); }
  double delta_sup() const { return std::min(1.0, delta_sub()); }
  std::string label() const;
};

// "minimal_graph", "laplace", "p_laplace" (with p). Throws InvalidParameter
// for an unknown name or p <= 1.
OperatorSpec builtin_operator(const std::string& name, double p = 0.0);
// Parses NAME, NAME:PARAM or NAME(PARAM).
OperatorSpec parse_operator(const std::string& text);

// Samples the growth and monotonicity conditions on a log grid.
GridReport check_operator(const OperatorSpec& spec);

// Value and derivatives of a function of (s, r) at a point.
struct ScalarJet {
  double u = 0.0;
  double u_s = 0.0;
  double u_r = 0.0;
  double u_ss = 0.0;
  double u_rr = 0.0;
  double u_rs = 0.0;
};

// Metric data at a point: r, and g_r/g, g_s/g (h = cosh r).
struct WarpData {
  double r;
  double g_r;
  double g_s;
};

inline constexpr double kDegenerateCutoff = 1e-12;

// Q[u] via A Lap u + 2 A' Hess u(grad u, grad u) for the metric
// dr^2 + cosh^2 r ds^2 + g^2 dtheta^2 and u independent of theta.
// Below the gradient cutoff returns the limit A(0) Lap u, or throws
// DegenerateGradient when A has no finite limit at 0.
double q_of_smooth(const ScalarJet& u, const OperatorSpec& spec, const WarpData& w);

// Metric Laplacian of u.
double laplacian(const ScalarJet& u, const WarpData& w);

// Values at (s,r), (s+-e,r), (s,r+-e), (s+e,r+e), (s+e,r-e), (s-e,r+e),
// (s-e,r-e), and the central-difference jet built from them.
std::array<double, 9> stencil(const std::function<double(double, double)>& u, double s,
                              double r, double e);
ScalarJet jet_from_stencil(const std::array<double, 9>& values, double e);
ScalarJet fd_jet(const std::function<double(double, double)>& u, double s, double r,
                 double step);

// g_r/g and g_s/g at (s, r) from the field (exact in the closure of Omega).
WarpData warp_at(const MetricField& field, double s, double r);

} // namespace hadamard
