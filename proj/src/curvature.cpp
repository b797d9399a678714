#include "hadamard/curvature.hpp"

#include <cmath>

#include "hadamard/errors.hpp"

namespace hadamard {

CurvatureMargins closed_form_margins(GLaw law, double r) {
  CurvatureMargins m;
  if (law == GLaw::Hyperbolic) return m;  // constant curvature -1
  m.m_B = law_K(law, r) - 1.0;
  // J(r) tanh r - 1, written so it stays finite at r = 0.
  const double c = std::cosh(r);
  m.m_C = std::cosh(2.0 * r) / (c * c) * x_coth_x(std::sinh(2.0 * r)) - 1.0;
  m.m_cross = m.m_B * m.m_C;
  return m;
}

CurvatureMargins margins_at(const MetricField& field, std::size_t i, std::size_t j,
                            double axis_cutoff) {
  const RhoJet q = field.jet(i, j);
  const double r = field.r(j);
  if (q.closed_form) return closed_form_margins(field.law(), r);
  if (r < axis_cutoff) throw AxisSingularity("traced node at r=" + std::to_string(r));
  const double J = law_J(field.law(), q.rho), K = law_K(field.law(), q.rho);
  const double h = std::cosh(r), t = std::tanh(r);
  const double sigma = q.rho_s / h;
  // Expanded so that the K^2 terms of the cross product cancel exactly.
  const double A1 = J * q.rho_rr - 1.0;
  const double C1 = J * q.rho_ss / (h * h) + J * q.rho_r * t - 1.0;
  const double X1 = (-J * q.rho_rs + J * q.rho_s * t) / h;
  CurvatureMargins m;
  m.m_B = K * q.rho_r * q.rho_r + A1;
  m.m_C = K * sigma * sigma + C1;
  m.m_cross = K * (q.rho_r * q.rho_r * C1 + sigma * sigma * A1 + 2.0 * q.rho_r * sigma * X1) +
              A1 * C1 - X1 * X1;
  return m;
}

MarginGrids curvature_grids(const MetricField& field) {
  const std::size_t n = field.ns() * field.nr();
  MarginGrids g{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n),
                std::vector<double>(n)};
  parallel_for(field.nr(), [&](std::size_t j) {
    for (std::size_t i = 0; i < field.ns(); ++i) {
      const std::size_t k = field.index(i, j);
      CurvatureMargins m;
      try {
        m = margins_at(field, i, j);
      } catch (const AxisSingularity&) {
        m = {NAN, NAN, NAN, NAN};
      }
      g.m_A[k] = m.m_A;
      g.m_B[k] = m.m_B;
      g.m_C[k] = m.m_C;
      g.m_cross[k] = m.m_cross;
    }
  });
  return g;
}

GridReport verify_curvature(const MetricField& field, double tol) {
  const MarginGrids g = curvature_grids(field);
  GridReport report("curvature", tol);
  std::size_t closed = 0;
  for (std::size_t j = 0; j < field.nr(); ++j)
    for (std::size_t i = 0; i < field.ns(); ++i) {
      const std::size_t k = field.index(i, j);
      const double s = field.s(i), r = field.r(j);
      closed += field.closed[k];
      report.record("m_A", s, r, g.m_A[k]);
      report.record("m_B", s, r, g.m_B[k]);
      report.record("m_C", s, r, g.m_C[k]);
      report.record("m_cross", s, r, g.m_cross[k]);
    }
  report.note("closed_form_nodes", closed);
  report.note("traced_nodes", field.ns() * field.nr() - closed);
  return report;
}

} // namespace hadamard
