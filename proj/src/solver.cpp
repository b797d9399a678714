#include "hadamard/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "hadamard/errors.hpp"
#include "hadamard/io.hpp"

namespace hadamard {

double DiscreteSolution::sample(double s, double r) const {
  const double x = std::clamp((s - box.s_min) / mesh, 0.0, double(ns - 1));
  const double y = std::clamp((r - box.r_min) / mesh, 0.0, double(nr - 1));
  const std::size_t i = std::min<std::size_t>(std::size_t(x), ns - 2);
  const std::size_t j = std::min<std::size_t>(std::size_t(y), nr - 2);
  const double ts = x - double(i), tr = y - double(j);
  return (1 - ts) * (1 - tr) * at(i, j) + ts * (1 - tr) * at(i + 1, j) +
         (1 - ts) * tr * at(i, j + 1) + ts * tr * at(i + 1, j + 1);
}

double FieldWeights::log_g(double s, double r) const {
  return law_log_g(field_.law(), field_.sample(s, r).rho);
}

namespace {

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

// Discretization of one problem: cells with log weights, unknown numbering
// and the per-row scale.
struct Mesh {
  std::size_t ns, nr;
  double m;
  Box box;
  bool axis;
  std::vector<double> logw;   // per cell
  std::vector<double> a_s;    // per cell: 1 / (2 m^2 h_c^2)
  std::vector<long> unknown;  // per node: index or -1
  std::vector<std::size_t> nodes;  // unknown -> node
  std::vector<double> row_scale;   // per unknown: max log w of adjacent cells
  double log_wmax;
  std::vector<double> source;  // per node, already times 2 energy_scale

  std::size_t node(std::size_t i, std::size_t j) const { return j * ns + i; }
  std::size_t cell(std::size_t i, std::size_t j) const { return j * (ns - 1) + i; }
};

Mesh make_mesh(const DirichletProblem& P, const CellWeights& W) {
  Mesh M;
  M.box = P.box;
  M.m = P.options.mesh;
  const double ls = (P.box.s_max - P.box.s_min) / M.m, lr = (P.box.r_max - P.box.r_min) / M.m;
  if (std::fabs(ls - std::round(ls)) > 1e-6 || std::fabs(lr - std::round(lr)) > 1e-6)
    throw InvalidParameter("box sides must be multiples of the mesh");
  M.ns = std::size_t(std::round(ls)) + 1;
  M.nr = std::size_t(std::round(lr)) + 1;
  if (M.ns < 3 || M.nr < 3) throw MeshTooCoarse("box needs at least 3 nodes per side");
  M.axis = P.box.r_min == 0.0;
  const std::size_t nc = (M.ns - 1) * (M.nr - 1);
  M.logw.resize(nc);
  M.a_s.resize(nc);
  M.log_wmax = -INFINITY;
  for (std::size_t j = 0; j + 1 < M.nr; ++j)
    for (std::size_t i = 0; i + 1 < M.ns; ++i) {
      const double sc = P.box.s_min + M.m * (double(i) + 0.5);
      const double rc = P.box.r_min + M.m * (double(j) + 0.5);
      const std::size_t c = M.cell(i, j);
      M.logw[c] = W.log_g(sc, rc) + log_cosh(rc) + 2.0 * std::log(M.m);
      const double h = std::cosh(rc);
      M.a_s[c] = 1.0 / (2.0 * M.m * M.m * h * h);
      M.log_wmax = std::max(M.log_wmax, M.logw[c]);
    }
  M.unknown.assign(M.ns * M.nr, -1);
  for (std::size_t j = 0; j + 1 < M.nr; ++j) {
    if (j == 0 && !M.axis) continue;
    for (std::size_t i = 1; i + 1 < M.ns; ++i) {
      M.unknown[M.node(i, j)] = long(M.nodes.size());
      M.nodes.push_back(M.node(i, j));
    }
  }
  M.row_scale.resize(M.nodes.size());
  for (std::size_t k = 0; k < M.nodes.size(); ++k) {
    const std::size_t i = M.nodes[k] % M.ns, j = M.nodes[k] / M.ns;
    double best = -INFINITY;
    for (int di = -1; di <= 0; ++di)
      for (int dj = -1; dj <= 0; ++dj) {
        const long ci = long(i) + di, cj = long(j) + dj;
        if (ci < 0 || cj < 0 || ci + 1 >= long(M.ns) || cj + 1 >= long(M.nr)) continue;
        best = std::max(best, M.logw[M.cell(std::size_t(ci), std::size_t(cj))]);
      }
    M.row_scale[k] = best;
  }
  if (P.source) {
    M.source.resize(M.ns * M.nr);
    for (std::size_t j = 0; j < M.nr; ++j)
      for (std::size_t i = 0; i < M.ns; ++i)
        M.source[M.node(i, j)] = 2.0 * P.spec.energy_scale *
                                 P.source(P.box.s_min + M.m * double(i), P.box.r_min + M.m * double(j));
  }
  return M;
}

struct CellGeom {
  std::size_t c;
  std::size_t corner[4];  // (i,j), (i+1,j), (i,j+1), (i+1,j+1)
};

template <class Fn>
void for_cells(const Mesh& M, Fn&& fn) {
  for (std::size_t j = 0; j + 1 < M.nr; ++j)
    for (std::size_t i = 0; i + 1 < M.ns; ++i)
      fn(CellGeom{M.cell(i, j), {M.node(i, j), M.node(i + 1, j), M.node(i, j + 1), M.node(i + 1, j + 1)}});
}

struct CellState {
  double t;
  double dt[4];
};

CellState cell_state(const Mesh& M, const CellGeom& g, const std::vector<double>& u) {
  const double ar = 1.0 / (2.0 * M.m * M.m), as = M.a_s[g.c];
  const double v0 = u[g.corner[0]], v1 = u[g.corner[1]], v2 = u[g.corner[2]], v3 = u[g.corner[3]];
  const double er0 = v2 - v0, er1 = v3 - v1, es0 = v1 - v0, es1 = v3 - v2;
  CellState st;
  st.t = ar * (er0 * er0 + er1 * er1) + as * (es0 * es0 + es1 * es1);
  st.dt[0] = -2 * ar * er0 - 2 * as * es0;
  st.dt[1] = -2 * ar * er1 + 2 * as * es0;
  st.dt[2] = 2 * ar * er0 - 2 * as * es1;
  st.dt[3] = 2 * ar * er1 + 2 * as * es1;
  return st;
}

// Constant Hessian of t on a cell.
void cell_t_hessian(const Mesh& M, const CellGeom& g, double H[4][4]) {
  const double ar = 1.0 / (2.0 * M.m * M.m), as = M.a_s[g.c];
  for (int a = 0; a < 4; ++a) std::fill(H[a], H[a] + 4, 0.0);
  auto edge = [&](int a, int b, double w) {
    H[a][a] += 2 * w;
    H[b][b] += 2 * w;
    H[a][b] -= 2 * w;
    H[b][a] -= 2 * w;
  };
  edge(0, 2, ar);
  edge(1, 3, ar);
  edge(0, 1, as);
  edge(2, 3, as);
}

// Energy scaled by exp(-log_wmax).
double energy(const Mesh& M, const OperatorSpec& spec, const std::vector<double>& u) {
  double e = 0.0;
  for_cells(M, [&](const CellGeom& g) {
    const double w = std::exp(M.logw[g.c] - M.log_wmax);
    if (w == 0.0) return;
    double val = spec.F(cell_state(M, g, u).t);
    if (!M.source.empty())
      for (std::size_t n : g.corner) val += 0.25 * M.source[n] * u[n];
    e += w * val;
  });
  return e;
}

struct Linearization {
  Eigen::VectorXd residual;  // scaled gradient per unknown
  double floor = 0.0;        // rounding level of the largest row
  std::vector<Eigen::Triplet<double>> jac;
};

// lagged = true drops the F'' term, giving the frozen-coefficient operator.
Linearization linearize(const Mesh& M, const OperatorSpec& spec, const std::vector<double>& u,
                        bool want_jac, bool lagged) {
  Linearization L;
  L.residual = Eigen::VectorXd::Zero(long(M.nodes.size()));
  if (want_jac) L.jac.reserve(M.nodes.size() * 9 * 2);
  std::vector<double> row_mag(M.nodes.size(), 0.0);
  double Ht[4][4];
  for_cells(M, [&](const CellGeom& g) {
    const CellState st = cell_state(M, g, u);
    // F'' may blow up at t = 0 (p_laplace, 2 < p < 4) while dt vanishes there;
    // the product tends to 0.
    const double f1 = spec.F_d1(st.t), f2 = lagged || st.t == 0.0 ? 0.0 : spec.F_d2(st.t);
    if (want_jac) cell_t_hessian(M, g, Ht);
    for (int a = 0; a < 4; ++a) {
      const long k = M.unknown[g.corner[a]];
      if (k < 0) continue;
      const double w = std::exp(M.logw[g.c] - M.row_scale[std::size_t(k)]);
      if (w == 0.0) continue;
      double grad = f1 * st.dt[a];
      if (!M.source.empty()) grad += 0.25 * M.source[g.corner[a]];
      L.residual[k] += w * grad;
      row_mag[std::size_t(k)] += std::fabs(w * grad);
      if (!want_jac) continue;
      for (int b = 0; b < 4; ++b) {
        const long l = M.unknown[g.corner[b]];
        if (l < 0) continue;
        const double h = f1 * Ht[a][b] + f2 * st.dt[a] * st.dt[b];
        if (h != 0.0) L.jac.emplace_back(k, l, w * h);
      }
    }
  });
  for (double m : row_mag) L.floor = std::max(L.floor, m);
  L.floor *= 1024.0 * std::numeric_limits<double>::epsilon();
  return L;
}

// Degenerate operators (A(0) = 0) leave zero rows where the iterate is flat,
// so a failed factorization is retried with a growing diagonal shift. The
// shifted direction is still a descent direction for the energy.
bool solve_linear(const Mesh& M, const Linearization& L, Eigen::VectorXd& delta) {
  const long n = long(M.nodes.size());
  Eigen::SparseMatrix<double> J(n, n);
  J.setFromTriplets(L.jac.begin(), L.jac.end());
  double scale = 0.0;
  for (long k = 0; k < n; ++k) scale = std::max(scale, std::fabs(J.coeff(k, k)));
  if (scale == 0.0) scale = 1.0;
  Eigen::SparseMatrix<double> I(n, n);
  I.setIdentity();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (double shift = 0.0; shift <= 1e-2 * scale; shift = shift == 0.0 ? 1e-12 * scale : 100.0 * shift) {
    Eigen::SparseMatrix<double> A = shift == 0.0 ? J : Eigen::SparseMatrix<double>(J + shift * I);
    A.makeCompressed();
    lu.compute(A);
    if (lu.info() != Eigen::Success) continue;
    delta = lu.solve(-L.residual);
    if (lu.info() == Eigen::Success && delta.allFinite()) return true;
  }
  return false;
}

std::vector<double> initial_field(const DirichletProblem& P, const Mesh& M) {
  std::vector<double> u(M.ns * M.nr);
  for (std::size_t j = 0; j < M.nr; ++j)
    for (std::size_t i = 0; i < M.ns; ++i) {
      const double s = P.box.s_min + M.m * double(i), r = P.box.r_min + M.m * double(j);
      const bool interior = M.unknown[M.node(i, j)] >= 0;
      u[M.node(i, j)] = interior && P.initial ? P.initial(s, r) : P.boundary(s, r);
    }
  return u;
}

} // namespace

std::vector<double> discrete_residual(const DirichletProblem& P, const CellWeights& W,
                                      const std::vector<double>& u) {
  const Mesh M = make_mesh(P, W);
  const Linearization L = linearize(M, P.spec, u, false, false);
  std::vector<double> out(M.nodes.size());
  for (std::size_t k = 0; k < M.nodes.size(); ++k) {
    const std::size_t i = M.nodes[k] % M.ns, j = M.nodes[k] / M.ns;
    double vol = 0.0;  // nodal volume over exp(row scale)
    for (int di = -1; di <= 0; ++di)
      for (int dj = -1; dj <= 0; ++dj) {
        const long ci = long(i) + di, cj = long(j) + dj;
        if (ci < 0 || cj < 0 || ci + 1 >= long(M.ns) || cj + 1 >= long(M.nr)) continue;
        vol += 0.25 * std::exp(M.logw[M.cell(std::size_t(ci), std::size_t(cj))] - M.row_scale[k]);
      }
    out[k] = -L.residual[long(k)] / vol;
  }
  return out;
}

GridReport verify_sandwich(const DiscreteSolution& sol,
                           const std::function<double(double, double)>& phi,
                           const std::function<double(double, double)>& psi, double tol) {
  GridReport rep("sandwich", tol);
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t j = 0; j < sol.nr; ++j)
    for (std::size_t i = 0; i < sol.ns; ++i) {
      const double s = sol.s(i), r = sol.r(j), u = sol.at(i, j);
      rep.record("u >= phi", s, r, u - phi(s, r));
      rep.record("u <= psi", s, r, psi(s, r) - u);
      lo = std::min(lo, u);
      hi = std::max(hi, u);
    }
  rep.note("u_min", lo);
  rep.note("u_max", hi);
  return rep;
}

DiscreteSolution solve(const DirichletProblem& P, const CellWeights& W) {
  const Mesh M = make_mesh(P, W);
  const SolverOptions& opt = P.options;
  DiscreteSolution sol;
  sol.box = P.box;
  sol.mesh = M.m;
  sol.ns = M.ns;
  sol.nr = M.nr;
  sol.log_energy_scale = M.log_wmax;
  std::vector<double> u = initial_field(P, M);

  auto res_norm = [](const Eigen::VectorXd& r) { return r.size() ? r.lpNorm<Eigen::Infinity>() : 0.0; };
  Linearization L = linearize(M, P.spec, u, true, false);
  double res = res_norm(L.residual);
  double E = energy(M, P.spec, u);
  sol.initial_residual = res;
  sol.history.push_back({E, res, 0.0});
  const double target = std::max(opt.rel_tol * res, opt.abs_tol);
  int it = 0;
  std::vector<double> trial(u.size());
  while (res > target && res > L.floor) {
    if (it >= opt.max_iterations)
      throw NonConvergence("residual " + sci(res) + " after " + std::to_string(it) +
                           " iterations");
    Eigen::VectorXd delta;
    bool accepted = false;
    double step = 1.0, E_new = E, res_new = res;
    if (solve_linear(M, L, delta)) {
      for (int h = 0; h <= opt.max_halvings; ++h, step *= 0.5) {
        trial = u;
        for (std::size_t k = 0; k < M.nodes.size(); ++k) trial[M.nodes[k]] += step * delta[long(k)];
        E_new = energy(M, P.spec, trial);
        // Near the minimum the energy change drops below the rounding noise of
        // the sum; inside that band a residual decrease decides.
        const double noise = 1e-13 * std::fabs(E);
        if (!(E_new <= E + noise)) continue;
        if (E_new < E - noise) {
          accepted = true;
          break;
        }
        res_new = res_norm(linearize(M, P.spec, trial, false, false).residual);
        if (res_new < res) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      // Frozen-coefficient step.
      const Linearization lag = linearize(M, P.spec, u, true, true);
      step = 0.0;
      if (solve_linear(M, lag, delta)) {
        trial = u;
        for (std::size_t k = 0; k < M.nodes.size(); ++k) trial[M.nodes[k]] += delta[long(k)];
        E_new = energy(M, P.spec, trial);
        res_new = res_norm(linearize(M, P.spec, trial, false, false).residual);
        accepted = E_new <= E || res_new < res;
      }
      if (!accepted && res <= L.floor) break;  // nothing left above rounding
      if (!accepted) {
        if (it == 0) throw MeshTooCoarse("no descent step from the initial iterate");
        throw NonConvergence("line search and lagged step both failed at residual " +
                             sci(res));
      }
    }
    u.swap(trial);
    E = E_new;
    ++it;
    L = linearize(M, P.spec, u, true, false);
    res = res_norm(L.residual);
    sol.history.push_back({E, res, step});
  }
  sol.u = std::move(u);
  sol.residual = res;
  sol.energy = E;
  sol.iterations = it;
  sol.converged = true;
  return sol;
}

DiscreteSolution solve(const DirichletProblem& problem, const MetricField& field) {
  const Box& b = problem.box;
  if (!field.contains(b.s_min, b.r_min) || !field.contains(b.s_max, b.r_max))
    throw InvalidParameter("box outside the metric field window");
  return solve(problem, FieldWeights(field));
}

ExhaustionResult exhaustion_run(const SubsolutionParams& params, const OperatorSpec& spec,
                                const MetricField& field, const std::vector<Box>& boxes,
                                const SolverOptions& options) {
  ExhaustionResult out;
  auto phi = [&](double s, double r) { return phi_eval(params, {s, r}).phi; };
  for (const Box& b : boxes) {
    DirichletProblem P{b, spec, phi, {}, phi, options};
    out.solutions.push_back(solve(P, field));
  }
  if (boxes.empty()) return out;
  const Box& small = boxes.front();
  const DiscreteSolution& s0 = out.solutions.front();
  for (std::size_t k = 1; k < out.solutions.size(); ++k) {
    double d = 0.0;
    for (std::size_t j = 0; j < s0.nr; ++j)
      for (std::size_t i = 0; i < s0.ns; ++i) {
        const double s = s0.s(i), r = s0.r(j);
        if (s < small.s_min || s > small.s_max || r > small.r_max) continue;
        d = std::max(d, std::fabs(out.solutions[k].sample(s, r) - out.solutions[k - 1].sample(s, r)));
      }
    out.successive_sup_diff.push_back(d);
  }
  return out;
}

std::vector<RayTrace> asymptotic_profile(const DiscreteSolution& sol, const std::vector<Ray>& rays) {
  std::vector<RayTrace> out;
  for (const Ray& ray : rays) {
    RayTrace t;
    t.label = ray.label;
    const std::size_t n = std::max<std::size_t>(2, ray.samples);
    for (std::size_t k = 0; k < n; ++k) {
      const double x = double(k) / double(n - 1);
      const HalfPlanePoint p{ray.from.s + x * (ray.to.s - ray.from.s),
                             ray.from.r + x * (ray.to.r - ray.from.r)};
      t.points.push_back(p);
      t.values.push_back(sol.sample(p.s, p.r));
    }
    t.first = t.values.front();
    t.last = t.values.back();
    t.min = *std::min_element(t.values.begin(), t.values.end());
    t.max = *std::max_element(t.values.begin(), t.values.end());
    out.push_back(std::move(t));
  }
  return out;
}

void write_solution_csv(const DiscreteSolution& sol, const std::string& path,
                        const std::function<double(double, double)>& phi,
                        const std::function<double(double, double)>& psi) {
  std::vector<std::string> header{"s", "r", "u"};
  if (phi) header.push_back("phi");
  if (psi) header.push_back("psi");
  CsvWriter csv(path, header);
  std::vector<double> row;
  for (std::size_t j = 0; j < sol.nr; ++j)
    for (std::size_t i = 0; i < sol.ns; ++i) {
      row = {sol.s(i), sol.r(j), sol.at(i, j)};
      if (phi) row.push_back(phi(sol.s(i), sol.r(j)));
      if (psi) row.push_back(psi(sol.s(i), sol.r(j)));
      csv.row(row);
    }
}

} // namespace hadamard
