#pragma once

#include "hadamard/grid_report.hpp"
#include "hadamard/metric.hpp"

namespace hadamard {

// Margins of the four plane curvature conditions at one node; all four are
// >= 0 exactly when the sectional curvatures there are <= -1.
struct CurvatureMargins {
  double m_A = 0.0;
  double m_B = 0.0;
  double m_C = 0.0;
  double m_cross = 0.0;
};

// Below this radius a traced node is refused (g -> 0 makes the ratios 0/0).
inline constexpr double kAxisCutoff = 0.05;

// Closed-form branch valid wherever rho = r.
CurvatureMargins closed_form_margins(GLaw law, double r);

// Uses the closed form for nodes in the closure of Omega, tabulated
// derivatives elsewhere. Throws AxisSingularity for a traced node with
// r < axis_cutoff.
CurvatureMargins margins_at(const MetricField& field, std::size_t i, std::size_t j,
                            double axis_cutoff = kAxisCutoff);

// Records m_A, m_B, m_C and m_cross at every node; notes the number of
// closed-form nodes.
GridReport verify_curvature(const MetricField& field, double tol = 1e-6);

// Per-node margin grids in field layout, for plotting.
struct MarginGrids {
  std::vector<double> m_A, m_B, m_C, m_cross;
};
MarginGrids curvature_grids(const MetricField& field);

} // namespace hadamard
