#pragma once

#include <vector>

#include "hadamard/grid_report.hpp"
#include "hadamard/metric.hpp"
#include "hadamard/qoperator.hpp"
#include "hadamard/subsolution.hpp"

namespace hadamard {

// Integral curve of R + beta S from the axis point (anchor, 0), sampled on a
// uniform r lattice. V is the side containing s > front.
class Front {
public:
  Front() = default;
  Front(double anchor, double dr, std::vector<double> s, std::vector<double> slope);

  double anchor() const { return anchor_; }
  double r_max() const { return table_.x_max(); }
  double dr() const { return table_.dx(); }
  std::size_t size() const { return table_.size(); }
  double s_at(double r) const;  // r clamped to [0, r_max]
  std::vector<HalfPlanePoint> nodes() const;

private:
  double anchor_ = 0.0;
  HermiteTable table_;
};

Front trace_front(double anchor, const ScaffoldProfile& profile, double r_max,
                  double dr = 0.01);
// The front of a region where beta vanishes.
Front vertical_front(double anchor, double r_max, double dr = 0.01);

// Distance in the slice metric dr^2 + cosh^2 r ds^2 between (s1, r1) and
// (s2, r2), with signed radii (the slice continues across the axis).
double slice_distance(double s1, double r1, double s2, double r2);

class DistanceField {
public:
  DistanceField() = default;
  DistanceField(FieldWindow window, Front front, std::vector<double> exact,
                std::vector<double> marched);

  const FieldWindow& window() const { return window_; }
  const Front& front() const { return front_; }
  std::size_t index(std::size_t i, std::size_t j) const { return j * window_.ns + i; }
  double s(std::size_t i) const { return window_.s_min + window_.ds() * double(i); }
  double r(std::size_t j) const { return window_.r_min + window_.dr() * double(j); }
  // Distance at a node: exact minimization over the front.
  double at(std::size_t i, std::size_t j) const { return exact_[index(i, j)]; }
  // First-order marching solution at a node.
  double marched(std::size_t i, std::size_t j) const { return marched_[index(i, j)]; }
  const std::vector<double>& values() const { return exact_; }
  const std::vector<double>& marched_values() const { return marched_; }
  bool in_closure(double s, double r) const { return s >= front_.s_at(std::fabs(r)); }

  // Exact distance to the closure of V at any point (even in r).
  double operator()(double s, double r) const;

private:
  FieldWindow window_;
  Front front_;
  std::vector<double> exact_;
  std::vector<double> marched_;
};

// Ordered upwind marching on the window grid plus exact minimization over
// the front at every node. Throws GridTooCoarse when the front crosses
// more than one s-cell within one r-cell, or does not span the window.
DistanceField distance_field(const Front& front, const FieldWindow& window);

struct ContainmentCertificate {
  double b = 0.0;
  double min_slack = 0.0;
  double argmin_r = 0.0;
  double r_max = 0.0;
  bool passed = false;
};

// s'(r) = a + int_0^r q versus the front anchored at a - b, on the front's
// lattice. Throws ContainmentFailed when the slack goes negative.
ContainmentCertificate verify_containment(double a, double b, const QProfile& q,
                                          const Front& front);

struct SupersolutionParams {
  double a = 0.0;
  double c = 1.0;
  double b = 0.0;
  double delta = 0.5;
  double B0 = 0.0;
  ContainmentCertificate containment;
  Front front;  // traced over the q table range
};

// Starts b at log cosh T0 + pi/2 + int_0^R beta0 and doubles it until the
// containment certificate passes.
SupersolutionParams make_supersolution(const SubsolutionParams& sub, const OperatorSpec& spec,
                                       const ScaffoldProfile& profile, int max_doublings = 20);

// psi = c - c tanh(delta rho), written as 2c/(exp(2 delta rho) + 1).
double psi_of_distance(double c, double delta, double rho);
double psi_eval(const SupersolutionParams& params, const DistanceField& dist,
                HalfPlanePoint point);

// Checks (i) Lap rho >= 2 tanh rho, (ii) the chain of lower bounds on Q[v]
// and (iii) Q[psi] <= 0 at the nodes outside the closure of V, plus the
// eikonal residual and psi bounds. `delta_override` > 0 replaces delta.
GridReport verify_supersolution(const SupersolutionParams& params, const OperatorSpec& spec,
                                const MetricField& field, const DistanceField& dist,
                                double tol = 1e-6, std::size_t stride = 1,
                                double delta_override = 0.0);

// Metric Laplacian of the distance at a point, by central differences with a
// step that shrinks near the front.
double distance_laplacian(const DistanceField& dist, const WarpData& w, double s);

void write_front_csv(const Front& front, const std::string& path);

} // namespace hadamard
