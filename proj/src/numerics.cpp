#include "hadamard/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include <boost/math/quadrature/gauss.hpp>

namespace hadamard {

double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

double smoothstep_d1(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double u = t * (1.0 - t);
  return 30.0 * u * u;
}

double smoothstep_d2(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
}

double smoothstep_integral(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return t - 0.5;
  const double t2 = t * t;
  return t2 * t2 * (2.5 + t * (-3.0 + t));
}

double log_cosh(double x) {
  const double a = std::fabs(x);
  if (a > 20.0) return a - std::log(2.0) + std::log1p(std::exp(-2.0 * a));
  return std::log(std::cosh(a));
}

double x_coth_x(double x) {
  const double a = std::fabs(x);
  if (a < 1e-4) return 1.0 + a * a / 3.0;
  return a / std::tanh(a);
}

double one_minus_tanh(double x) {
  if (x > 0.0) return 2.0 / (std::exp(2.0 * x) + 1.0);
  return 1.0 - std::tanh(x);
}

HermiteTable::HermiteTable(double x0, double dx, std::vector<double> values,
                           std::vector<double> slopes)
    : x0_(x0), dx_(dx), values_(std::move(values)), slopes_(std::move(slopes)) {}

namespace {
struct Cell {
  std::size_t i;
  double t;
};

Cell locate(double x, double x0, double dx, std::size_t n) {
  double u = (x - x0) / dx;
  if (u <= 0.0) return {0, u};
  std::size_t i = static_cast<std::size_t>(u);
  if (i >= n - 1) i = n - 2;
  return {i, u - double(i)};
}
} // namespace

double HermiteTable::operator()(double x) const {
  const Cell c = locate(x, x0_, dx_, values_.size());
  const double t = c.t, t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * values_[c.i] + h10 * dx_ * slopes_[c.i] +
         h01 * values_[c.i + 1] + h11 * dx_ * slopes_[c.i + 1];
}

double HermiteTable::derivative(double x) const {
  const Cell c = locate(x, x0_, dx_, values_.size());
  const double t = c.t, t2 = t * t;
  const double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1;
  const double d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
  return (d00 * values_[c.i] + d01 * values_[c.i + 1]) / dx_ +
         d10 * slopes_[c.i] + d11 * slopes_[c.i + 1];
}

double gauss_integrate(const std::function<double(double)>& f, double a,
                       double b) {
  if (a == b) return 0.0;
  return boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
}

double gauss_integrate_panels(const std::function<double(double)>& f, double a,
                              double b, int n) {
  double sum = 0.0;
  const double h = (b - a) / n;
  for (int k = 0; k < n; ++k) sum += gauss_integrate(f, a + k * h, a + (k + 1) * h);
  return sum;
}

namespace {
std::atomic<unsigned> g_workers{0};
}

void set_worker_count(unsigned n) { g_workers = n; }

unsigned worker_count() {
  unsigned n = g_workers.load();
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const unsigned workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

} // namespace hadamard
