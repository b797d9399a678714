#pragma once

#include <memory>
#include <vector>

#include "hadamard/grid_report.hpp"
#include "hadamard/metric.hpp"
#include "hadamard/qoperator.hpp"
#include "hadamard/scaffold.hpp"

namespace hadamard {

struct QProfileOptions {
  double smoothing_width = 0.1;
  double lattice = 0.25;        // junction search step
  double bridge_width = 1.0;    // rise of the bridge weight after T1
  double bridge_fraction = 0.9; // final share of the gap U - L taken by q'
  double table_step = 0.01;     // running-integral table spacing
  // Refuse to build when the xi condition for T1 cannot be met, instead of
  // falling back to the beta0 h^2 >= 1 condition alone.
  bool strict_xi = false;
};

// Radial profile q_a: -tanh r, then -cosh T0 sinh r / cosh^2 r, a bridge
// rising to 0 at T2, 0 up to T3 and beta0 - 1/cosh beyond, with the joints
// blended by smoothsteps.
class QProfile {
public:
  QProfile() = default;

  double a() const { return a_; }
  double T0() const { return T0_; }
  double T1() const { return T1_; }
  double T2() const { return T2_; }
  double T3() const { return T3_; }
  double smoothing_width() const { return w_; }
  double r_max() const { return table_.x_max(); }
  bool xi_condition_met() const { return xi_met_; }

  double q(double r) const;
  double q_d1(double r) const;
  // int_0^r q, from the table.
  double integral(double r) const;
  // int_0^r beta0 + int_0^r 1/cosh.
  double bound(double r) const;
  const ScaffoldProfile& scaffold() const { return *scaffold_; }

  // Piece boundaries, in increasing order.
  std::vector<double> breakpoints() const;

  friend QProfile build_q(double a, const OperatorSpec& spec,
                          const ScaffoldProfile& profile, const QProfileOptions& opt);

  // Share of the gap U - L taken by q' on the bridge.
  double bridge_weight(double r) const;

private:
  double bridge_gain(double r) const;  // 2 int_T1^r lambda sech^3
  double q_bridge(double r) const;
  double q_bridge_d1(double r) const;

  std::shared_ptr<const ScaffoldProfile> scaffold_;
  double a_ = 0.0, T0_ = 0.0, T1_ = 0.0, T2_ = 0.0, T3_ = 0.0;
  double w_ = 0.1, wb_ = 1.0, lam_ = 0.9, cT0_ = 1.0;
  double gain_ramp_ = 0.0;  // bridge_gain(T1 + wb)
  bool xi_met_ = false;
  HermiteTable table_;
  HermiteTable beta0_table_;
};

// Throws SearchExhausted when a junction cannot be placed in the scaffold range.
QProfile build_q(double a, const OperatorSpec& spec, const ScaffoldProfile& profile,
                 const QProfileOptions& opt = {});

// Bracket of the lower bound on [T0, T1]; positive for r > T0 by choice of T0.
double t0_bracket(double r, double T0, double Bbar0);

struct SubsolutionParams {
  double a = 0.0;
  double c = 1.0;
  double delta = 0.5;
  double Bbar0 = 0.5;
  QProfile q;
};

SubsolutionParams make_subsolution(double a, double c, const OperatorSpec& spec,
                                   const ScaffoldProfile& profile,
                                   const QProfileOptions& opt = {});

struct PhiValue {
  double phi = 0.0;
  double phi_s = 0.0;   // f'(s), derivative along S at fixed r
  double grad_R = 0.0;  // coefficient of R in grad phi
  double grad_S = 0.0;  // coefficient of S in grad phi
  double norm = 0.0;
  double s = 0.0;       // recovered level parameter
};

// f(s) = c max(0, tanh(delta (s - a))) and its first two derivatives.
double f_value(const SubsolutionParams& p, double s);
double f_d1(const SubsolutionParams& p, double s);
double f_d2(const SubsolutionParams& p, double s);

PhiValue phi_eval(const SubsolutionParams& params, HalfPlanePoint point);

struct QsubMargin {
  double sufficient = 0.0;  // left side of the sufficient inequality
  double exact = 0.0;       // Q[phi] from the exact formula
};

// The sufficient margin and Q[phi] from metric data at the point; the
// first term is taken in the limit at r = 0. Throws OutsideSupport when the
// recovered s is <= a.
QsubMargin qsub_terms(const SubsolutionParams& params, const OperatorSpec& spec,
                      HalfPlanePoint point, double gr_over_g, double beta);

QsubMargin qsub_margin(const SubsolutionParams& params, const OperatorSpec& spec,
                       const MetricField& field, HalfPlanePoint point);

// Margin of the sufficient inequality along r with g_r/g replaced by its
// lower bound J(r) and beta by 0 below T1 and by beta0 from T1 on.
double radial_margin(const SubsolutionParams& params, double r);

// Grid certification over the field nodes in M_a (every `stride`-th node),
// plus the profile checks.
GridReport verify_subsolution(const SubsolutionParams& params, const OperatorSpec& spec,
                              const MetricField& field, double tol = 1e-8,
                              std::size_t stride = 1);

// Largest a with phi_{a,c}(point) >= level * c, found by bisection.
double a_threshold(const OperatorSpec& spec, const ScaffoldProfile& profile,
                   HalfPlanePoint point, double level = 0.999,
                   const QProfileOptions& opt = {});

void write_q_csv(const QProfile& q, const std::string& path, double step = 0.01);

} // namespace hadamard
