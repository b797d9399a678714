#include "hadamard/supersolution.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>

#include "hadamard/errors.hpp"
#include "hadamard/io.hpp"

namespace hadamard {

Front::Front(double anchor, double dr, std::vector<double> s, std::vector<double> slope)
    : anchor_(anchor), table_(0.0, dr, std::move(s), std::move(slope)) {}

double Front::s_at(double r) const { return table_(std::clamp(r, 0.0, table_.x_max())); }

std::vector<HalfPlanePoint> Front::nodes() const {
  std::vector<HalfPlanePoint> out;
  out.reserve(size());
  for (std::size_t k = 0; k < size(); ++k) out.push_back({table_.values()[k], dr() * double(k)});
  return out;
}

Front trace_front(double anchor, const ScaffoldProfile& profile, double r_max, double dr) {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 1>;
  auto rhs = [&](const State& y, State& dy, double r) { dy[0] = profile.beta(y[0], r).value; };
  const std::size_t n = std::size_t(std::ceil(r_max / dr - 1e-9)) + 1;
  std::vector<double> s, slope;
  s.reserve(n);
  slope.reserve(n);
  State y{anchor};
  auto stepper = odeint::make_dense_output(1e-13, 1e-13, odeint::runge_kutta_dopri5<State>());
  odeint::integrate_n_steps(stepper, rhs, y, 0.0, dr, n - 1, [&](const State& st, double r) {
    s.push_back(st[0]);
    slope.push_back(profile.beta(st[0], r).value);
  });
  return Front(anchor, dr, std::move(s), std::move(slope));
}

Front vertical_front(double anchor, double r_max, double dr) {
  const std::size_t n = std::size_t(std::ceil(r_max / dr - 1e-9)) + 1;
  return Front(anchor, dr, std::vector<double>(n, anchor), std::vector<double>(n, 0.0));
}

double slice_distance(double s1, double r1, double s2, double r2) {
  const double a = std::sinh(0.5 * (r1 - r2)), b = std::sinh(0.5 * (s1 - s2));
  // cosh d - 1 = 2 sinh^2((r1-r2)/2) + 2 cosh r1 cosh r2 sinh^2((s1-s2)/2)
  const double x = 2.0 * a * a + 2.0 * std::cosh(r1) * std::cosh(r2) * b * b;
  return 2.0 * std::asinh(std::sqrt(0.5 * x));
}

DistanceField::DistanceField(FieldWindow window, Front front, std::vector<double> exact,
                             std::vector<double> marched)
    : window_(window), front_(std::move(front)), exact_(std::move(exact)),
      marched_(std::move(marched)) {}

namespace {

// Minimizes over signed r2 in [-lim, lim] of the distance to the front
// point (s_f(|r2|), r2): coarse scan, then Brent on the best bracket.
double distance_to_front(const Front& f, double s, double r) {
  r = std::fabs(r);
  if (s >= f.s_at(r)) return 0.0;
  const double lim = std::min(f.r_max(), r + 2.0);
  const double step = std::max(f.dr(), 0.2);
  auto d = [&](double r2) { return slice_distance(s, r, f.s_at(std::fabs(r2)), r2); };
  double best = d(-lim), arg = -lim;
  for (double r2 = -lim + step; r2 <= lim + 1e-12; r2 += step) {
    const double v = d(r2);
    if (v < best) {
      best = v;
      arg = r2;
    }
  }
  const double lo = std::max(-lim, arg - step), hi = std::min(lim, arg + step);
  const auto m = boost::math::tools::brent_find_minima(d, lo, hi, 40);
  return std::min(best, m.second);
}

} // namespace

double DistanceField::operator()(double s, double r) const {
  return distance_to_front(front_, s, r);
}

DistanceField distance_field(const Front& front, const FieldWindow& w) {
  if (w.r_min != 0.0) throw InvalidParameter("distance grid must start on the axis");
  if (front.r_max() < w.r_max - 1e-9)
    throw GridTooCoarse("front stops at r=" + std::to_string(front.r_max()) +
                        " below the window top " + std::to_string(w.r_max));
  const std::size_t ns = w.ns, nr = w.nr;
  const double ds = w.ds(), dr = w.dr();
  // Resolution: within one r-cell the front may move by at most one s-cell.
  for (std::size_t j = 0; j + 1 < nr; ++j) {
    const double r0 = w.r_min + dr * double(j);
    const double a = front.s_at(r0), b = front.s_at(r0 + dr);
    if (std::fabs(b - a) > ds)
      throw GridTooCoarse("front crosses " + std::to_string(std::fabs(b - a) / ds) +
                          " s-cells between r=" + std::to_string(r0) + " and r+dr");
  }
  auto idx = [&](std::size_t i, std::size_t j) { return j * ns + i; };
  auto S = [&](std::size_t i) { return w.s_min + ds * double(i); };
  auto Rr = [&](std::size_t j) { return w.r_min + dr * double(j); };

  std::vector<double> exact(ns * nr, 0.0);
  parallel_for(nr, [&](std::size_t j) {
    for (std::size_t i = 0; i < ns; ++i) exact[idx(i, j)] = distance_to_front(front, S(i), Rr(j));
  });

  // Ordered upwind marching: known set = closure of V plus its first outer
  // ring, seeded with exact values.
  enum : std::uint8_t { Far, Trial, Known };
  std::vector<std::uint8_t> state(ns * nr, Far);
  std::vector<double> T(ns * nr, INFINITY);
  for (std::size_t j = 0; j < nr; ++j)
    for (std::size_t i = 0; i < ns; ++i)
      if (exact[idx(i, j)] == 0.0) {
        state[idx(i, j)] = Known;
        T[idx(i, j)] = 0.0;
      }
  auto neighbours = [&](std::size_t i, std::size_t j, auto&& fn) {
    if (i > 0) fn(i - 1, j);
    if (i + 1 < ns) fn(i + 1, j);
    if (j > 0) fn(i, j - 1);
    if (j + 1 < nr) fn(i, j + 1);
  };
  for (std::size_t j = 0; j < nr; ++j)
    for (std::size_t i = 0; i < ns; ++i) {
      if (state[idx(i, j)] != Far) continue;
      bool ring = false;
      neighbours(i, j, [&](std::size_t a, std::size_t b) {
        ring = ring || (exact[idx(a, b)] == 0.0);
      });
      if (ring) {
        state[idx(i, j)] = Known;
        T[idx(i, j)] = exact[idx(i, j)];
      }
    }
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  auto update = [&](std::size_t i, std::size_t j) {
    const std::size_t k = idx(i, j);
    if (state[k] == Known) return;
    double a = INFINITY, b = INFINITY;
    if (i > 0 && state[idx(i - 1, j)] == Known) a = std::min(a, T[idx(i - 1, j)]);
    if (i + 1 < ns && state[idx(i + 1, j)] == Known) a = std::min(a, T[idx(i + 1, j)]);
    // The axis row mirrors onto j = 1.
    const std::size_t jd = j > 0 ? j - 1 : 1;
    if (jd < nr && state[idx(i, jd)] == Known) b = std::min(b, T[idx(i, jd)]);
    if (j + 1 < nr && state[idx(i, j + 1)] == Known) b = std::min(b, T[idx(i, j + 1)]);
    const double hs = ds * std::cosh(Rr(j)), hr = dr;
    double t = std::min(a + hs, b + hr);
    if (std::isfinite(a) && std::isfinite(b)) {
      // (t - a)^2 / hs^2 + (t - b)^2 / hr^2 = 1
      const double A = 1.0 / (hs * hs) + 1.0 / (hr * hr);
      const double B = -2.0 * (a / (hs * hs) + b / (hr * hr));
      const double C = a * a / (hs * hs) + b * b / (hr * hr) - 1.0;
      const double disc = B * B - 4.0 * A * C;
      if (disc >= 0.0) {
        const double t2 = (-B + std::sqrt(disc)) / (2.0 * A);
        if (t2 >= std::max(a, b)) t = std::min(t, t2);
      }
    }
    if (t < T[k]) {
      T[k] = t;
      state[k] = Trial;
      heap.push({t, k});
    }
  };
  for (std::size_t j = 0; j < nr; ++j)
    for (std::size_t i = 0; i < ns; ++i)
      if (state[idx(i, j)] == Known) neighbours(i, j, update);
  while (!heap.empty()) {
    const auto [t, k] = heap.top();
    heap.pop();
    if (state[k] == Known || t > T[k]) continue;
    state[k] = Known;
    const std::size_t i = k % ns, j = k / ns;
    neighbours(i, j, update);
  }
  return DistanceField(w, front, std::move(exact), std::move(T));
}

ContainmentCertificate verify_containment(double a, double b, const QProfile& q,
                                          const Front& front) {
  ContainmentCertificate c;
  c.b = b;
  c.min_slack = INFINITY;
  c.r_max = std::min(q.r_max(), front.r_max());
  for (std::size_t k = 0;; ++k) {
    const double r = front.dr() * double(k);
    if (r > c.r_max + 1e-12) break;
    const double slack = (a + q.integral(r)) - front.s_at(r);
    if (slack < c.min_slack) {
      c.min_slack = slack;
      c.argmin_r = r;
    }
  }
  c.passed = c.min_slack >= 0.0;
  if (!c.passed) throw ContainmentFailed(c.min_slack, c.argmin_r);
  return c;
}

SupersolutionParams make_supersolution(const SubsolutionParams& sub, const OperatorSpec& spec,
                                       const ScaffoldProfile& profile, int max_doublings) {
  SupersolutionParams p;
  p.a = sub.a;
  p.c = sub.c;
  p.delta = spec.delta_sup();
  p.B0 = spec.B0;
  const double R = sub.q.r_max();
  double b = log_cosh(sub.q.T0()) + M_PI / 2.0 + sub.q.bound(R) - 2.0 * std::atan(std::tanh(0.5 * R));
  for (int k = 0; k <= max_doublings; ++k, b *= 2.0) {
    Front f = trace_front(sub.a - b, profile, R);
    try {
      p.containment = verify_containment(sub.a, b, sub.q, f);
    } catch (const ContainmentFailed& e) {
      if (k == max_doublings) throw;
      continue;
    }
    p.b = b;
    p.front = std::move(f);
    return p;
  }
  throw ContainmentFailed(-INFINITY, 0.0);
}

double psi_of_distance(double c, double delta, double rho) {
  return 2.0 * c / (std::exp(2.0 * delta * rho) + 1.0);
}

double psi_eval(const SupersolutionParams& p, const DistanceField& dist, HalfPlanePoint pt) {
  return psi_of_distance(p.c, p.delta, dist(pt.s, pt.r));
}

namespace {

double fd_step(double rho) { return std::clamp(0.25 * rho, 1e-5, 1e-3); }

} // namespace

double distance_laplacian(const DistanceField& dist, const WarpData& w, double s) {
  const double rho = dist(s, w.r);
  const ScalarJet j = fd_jet([&](double x, double y) { return dist(x, y); }, s, w.r, fd_step(rho));
  return laplacian(j, w);
}

GridReport verify_supersolution(const SupersolutionParams& p, const OperatorSpec& spec,
                                const MetricField& field, const DistanceField& dist, double tol,
                                std::size_t stride, double delta_override) {
  const double delta = delta_override > 0.0 ? delta_override : p.delta;
  GridReport rep("supersolution", tol);
  const std::string kLap = "Lap rho >= 2 tanh rho";
  const std::string kChainA = "chain: Q[v] >= bound with Lap rho";
  const std::string kChainB = "chain: 2 tanh rho - 2 delta (1+2B0) tanh(delta rho) >= 0";
  const std::string kQpsi = "Q[psi] <= 0";
  const std::string kEik = "eikonal residual <= 2 grid steps";
  const std::string kRange = "0 < psi <= c";
  rep.set_tolerance(kLap, 5e-3);
  rep.set_tolerance(kChainB, 0.0);
  rep.set_tolerance(kRange, 0.0);
  const FieldWindow& w = dist.window();
  const double step = std::max(w.ds(), w.dr());
  stride = std::max<std::size_t>(1, stride);
  const double k = 2.0 * delta * (1.0 + 2.0 * p.B0);

  struct NodeOut {
    double s, r, lap, chainA, chainB, qpsi, eik, range;
    bool outside, eik_ok;
  };
  std::vector<std::vector<NodeOut>> rows((w.nr + stride - 1) / stride);
  parallel_for(rows.size(), [&](std::size_t jj) {
    const std::size_t j = jj * stride;
    const double r = dist.r(j);
    for (std::size_t i = 0; i < w.ns; i += stride) {
      NodeOut o{dist.s(i), r, 0, 0, 0, 0, 0, 0, false, false};
      const double rho = dist.at(i, j);
      const double ps = psi_of_distance(p.c, delta, rho);
      o.range = std::min(ps, p.c - ps);
      if (rho > 0.0) {
        o.outside = true;
        const WarpData wd = warp_at(field, o.s, r);
        const double e = fd_step(rho);
        const auto rv = stencil([&](double x, double y) { return dist(x, y); }, o.s, r, e);
        const ScalarJet jr = jet_from_stencil(rv, e);
        const double lap = laplacian(jr, wd);
        o.lap = lap - 2.0 * std::tanh(rho);
        // Q[v] / (A c delta sech^2(delta rho)) = Lap rho - 2 delta tanh(delta rho)(1 + 2 B t),
        // t = |grad v|^2; its bound with B t replaced by B0.
        const double sh = 1.0 / std::cosh(delta * rho);
        const double gv = p.c * delta * sh * sh;
        const double t = gv * gv;
        const double Bt = t > 0.0 ? spec.B(t) * t : 0.0;
        const double td = std::tanh(delta * rho);
        o.chainA = (lap - 2.0 * delta * td * (1.0 + 2.0 * Bt)) - (lap - k * td);
        o.chainB = 2.0 * std::tanh(rho) - k * td;
        std::array<double, 9> pv;
        for (int m = 0; m < 9; ++m) pv[m] = psi_of_distance(p.c, delta, rv[m]);
        const ScalarJet jp = jet_from_stencil(pv, e);
        o.qpsi = -q_of_smooth(jp, spec, wd);
        // Metric gradient norm by central differences, away from the front
        // and the axis row.
        if (i > 0 && i + 1 < w.ns && j > 0 && j + 1 < w.nr && dist.at(i - 1, j) > 0.0 &&
            dist.at(i + 1, j) > 0.0 && dist.at(i, j - 1) > 0.0) {
          const double gs = (dist.at(i + 1, j) - dist.at(i - 1, j)) / (2.0 * w.ds());
          const double gr = (dist.at(i, j + 1) - dist.at(i, j - 1)) / (2.0 * w.dr());
          const double h = std::cosh(r);
          o.eik = 2.0 * step - std::fabs(std::sqrt(gr * gr + gs * gs / (h * h)) - 1.0);
          o.eik_ok = true;
        }
      }
      rows[jj].push_back(o);
    }
  });
  std::size_t outside = 0;
  double marched_err = 0.0;
  for (const auto& row : rows)
    for (const NodeOut& o : row) {
      rep.record(kRange, o.s, o.r, o.range);
      if (!o.outside) continue;
      ++outside;
      rep.record(kLap, o.s, o.r, o.lap);
      rep.record(kChainA, o.s, o.r, o.chainA);
      rep.record(kChainB, o.s, o.r, o.chainB);
      rep.record(kQpsi, o.s, o.r, o.qpsi);
      if (o.eik_ok) rep.record(kEik, o.s, o.r, o.eik);
    }
  for (std::size_t k2 = 0; k2 < dist.values().size(); ++k2)
    marched_err = std::max(marched_err, std::fabs(dist.values()[k2] - dist.marched_values()[k2]));
  rep.note("a", p.a);
  rep.note("c", p.c);
  rep.note("b", p.b);
  rep.note("delta", delta);
  rep.note("operator", spec.label());
  rep.note("nodes_outside_V", outside);
  rep.note("max_marching_minus_exact", marched_err);
  rep.note("containment_min_slack", p.containment.min_slack);
  rep.note("containment_argmin_r", p.containment.argmin_r);
  return rep;
}

void write_front_csv(const Front& front, const std::string& path) {
  CsvWriter csv(path, {"r", "s"});
  for (const HalfPlanePoint& n : front.nodes()) csv.row({n.r, n.s});
}

} // namespace hadamard
