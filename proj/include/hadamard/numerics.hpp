#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace hadamard {

// Quintic smoothstep S(t) = 10t^3 - 15t^4 + 6t^5 clamped to [0,1], and its
// derivatives. `smoothstep_integral` is the primitive vanishing at t <= 0.
double smoothstep(double t);
double smoothstep_d1(double t);
double smoothstep_d2(double t);
double smoothstep_integral(double t);

// log(cosh x) without overflow.
double log_cosh(double x);
// x * coth(x), continuous at 0.
double x_coth_x(double x);
// 1 - tanh(x) computed without cancellation.
double one_minus_tanh(double x);

// Cubic Hermite interpolation on a uniform grid from values and slopes.
class HermiteTable {
public:
  HermiteTable() = default;
  HermiteTable(double x0, double dx, std::vector<double> values,
               std::vector<double> slopes);

  double operator()(double x) const;
  double derivative(double x) const;
  double x0() const { return x0_; }
  double dx() const { return dx_; }
  double x_max() const { return x0_ + dx_ * double(values_.size() - 1); }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& slopes() const { return slopes_; }

private:
  double x0_ = 0.0;
  double dx_ = 1.0;
  std::vector<double> values_;
  std::vector<double> slopes_;
};

// 20-point Gauss-Legendre rule on [a,b].
double gauss_integrate(const std::function<double(double)>& f, double a,
                       double b);

// Splits [a,b] into n equal panels and applies the 20-point rule on each.
double gauss_integrate_panels(const std::function<double(double)>& f, double a,
                              double b, int n);

// Worker count used by parallel loops; 1 forces serial execution.
void set_worker_count(unsigned n);
unsigned worker_count();

// Runs body(i) for i in [0, n). Each index is handled by exactly one worker,
// so results written to per-index slots are independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace hadamard
