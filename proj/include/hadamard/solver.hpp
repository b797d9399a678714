#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hadamard/grid_report.hpp"
#include "hadamard/metric.hpp"
#include "hadamard/qoperator.hpp"
#include "hadamard/subsolution.hpp"
#include "hadamard/supersolution.hpp"

namespace hadamard {

struct Box {
  double s_min = -10.0;
  double s_max = 10.0;
  double r_min = 0.0;  // 0 means the axis, with the reflection condition
  double r_max = 8.0;
};

struct SolverOptions {
  double mesh = 0.05;
  double rel_tol = 1e-9;
  double abs_tol = 1e-14;
  int max_iterations = 200;
  int max_halvings = 30;
};

// Q[u] = source on the box, u = boundary on the Dirichlet sides (all sides
// except the axis).
struct DirichletProblem {
  Box box;
  OperatorSpec spec;
  std::function<double(double, double)> boundary;
  std::function<double(double, double)> source;  // optional
  std::function<double(double, double)> initial; // optional; boundary otherwise
  SolverOptions options;
};

struct IterationRecord {
  double energy;    // scaled energy, see DiscreteSolution
  double residual;  // max scaled residual
  double step;      // accepted line-search factor, 0 for a lagged step
};

struct DiscreteSolution {
  Box box;
  double mesh = 0.0;
  std::size_t ns = 0, nr = 0;
  std::vector<double> u;  // index j*ns + i
  double residual = 0.0;
  double initial_residual = 0.0;
  // Energy = exp(log_energy_scale) * energy; the scale is the largest cell
  // weight, since g spans thousands of orders of magnitude.
  double energy = 0.0;
  double log_energy_scale = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<IterationRecord> history;

  double s(std::size_t i) const { return box.s_min + mesh * double(i); }
  double r(std::size_t j) const { return box.r_min + mesh * double(j); }
  double at(std::size_t i, std::size_t j) const { return u[j * ns + i]; }
  // Bilinear interpolation inside the box.
  double sample(double s, double r) const;
};

// Volume weights g h on cells, from a metric field.
class CellWeights {
public:
  virtual ~CellWeights() = default;
  virtual double log_g(double s, double r) const = 0;
};

class FieldWeights : public CellWeights {
public:
  explicit FieldWeights(const MetricField& field) : field_(field) {}
  double log_g(double s, double r) const override;

private:
  const MetricField& field_;
};

// Damped Newton on the discrete energy sum_c w_c F(t_c), with a lagged
// coefficient step when the line search stalls. Steps never raise the energy
// by more than its rounding band (1e-13 relative). Throws NonConvergence or
// MeshTooCoarse.
DiscreteSolution solve(const DirichletProblem& problem, const CellWeights& weights);
DiscreteSolution solve(const DirichletProblem& problem, const MetricField& field);

// Discrete residual of a nodal field per unit nodal volume, so that it
// approximates 2 energy_scale (Q[u] - source) pointwise. One entry per
// unknown node, in (j, i) order.
std::vector<double> discrete_residual(const DirichletProblem& problem, const CellWeights& weights,
                                      const std::vector<double>& u);

// phi <= u <= psi at every node, with margins u - phi and psi - u.
GridReport verify_sandwich(const DiscreteSolution& sol,
                           const std::function<double(double, double)>& phi,
                           const std::function<double(double, double)>& psi, double tol);

struct ExhaustionResult {
  std::vector<DiscreteSolution> solutions;
  std::vector<double> successive_sup_diff;  // on the smallest box
};

ExhaustionResult exhaustion_run(const SubsolutionParams& params, const OperatorSpec& spec,
                                const MetricField& field, const std::vector<Box>& boxes,
                                const SolverOptions& options = {});

struct Ray {
  std::string label;
  HalfPlanePoint from;
  HalfPlanePoint to;
  std::size_t samples = 101;
};

struct RayTrace {
  std::string label;
  std::vector<HalfPlanePoint> points;
  std::vector<double> values;
  double first = 0.0, last = 0.0, min = 0.0, max = 0.0;
};

std::vector<RayTrace> asymptotic_profile(const DiscreteSolution& solution,
                                         const std::vector<Ray>& rays);

void write_solution_csv(const DiscreteSolution& sol, const std::string& path,
                        const std::function<double(double, double)>& phi = {},
                        const std::function<double(double, double)>& psi = {});

} // namespace hadamard
