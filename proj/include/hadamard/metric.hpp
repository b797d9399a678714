#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hadamard/scaffold.hpp"

namespace hadamard {

struct HalfPlanePoint {
  double s;
  double r;
};

struct StepControl {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  // Bisection tolerance for the crossing of the boundary of Omega.
  double event_tol = 1e-12;
  std::size_t max_steps = 100000;
  bool record_nodes = true;
};

// Backward integral curve of Z = beta h^2 R - S from `start` to the boundary
// of Omega, with the sensitivities of the entry radius to the start point.
struct CharacteristicPath {
  std::vector<HalfPlanePoint> nodes;
  HalfPlanePoint entry{};
  bool interior = false;  // start already in the closure of Omega
  double rho_value = 0.0;
  double rho_r = 1.0;
  double rho_s = 0.0;
  std::size_t steps = 0;
};

// True when (s, r) lies in the closure of Omega = {r < 3} u {s + ell(r) < 0}.
bool in_omega_closure(double s, double r, const ScaffoldProfile& profile);

CharacteristicPath trace_characteristic(HalfPlanePoint start, const ScaffoldProfile& profile,
                                        const StepControl& control = {});

double rho(HalfPlanePoint point, const ScaffoldProfile& profile);

// Closed-form law G in g = G(rho).
enum class GLaw : std::uint8_t {
  Warped,      // G = sinh(sinh 2 rho) / 2
  Hyperbolic,  // G = sinh rho, the hyperbolic reference
};

double law_J(GLaw law, double rho);      // G'/G
double law_K(GLaw law, double rho);      // G''/G
double law_log_g(GLaw law, double rho);  // log G
// G'''(0)/G'(0): limit of G''/G at the axis.
double law_axis_K(GLaw law);

// rho and its derivatives at a node, plus beta there.
struct RhoJet {
  double rho = 0.0;
  double rho_r = 1.0;
  double rho_s = 0.0;
  double rho_rr = 0.0;
  double rho_ss = 0.0;
  double rho_rs = 0.0;
  double beta = 0.0;
  bool closed_form = true;  // node in the closure of Omega (rho = r)
};

// Derivatives of g divided by g, and log g; g itself overflows for rho > 3.6.
struct GRatios {
  double log_g;
  double g_r;
  double g_s;
  double g_rr;
  double g_ss;
  double g_rs;
};

GRatios g_ratios(GLaw law, const RhoJet& jet);

struct FieldWindow {
  double s_min = -30.0;
  double s_max = 30.0;
  double r_min = 0.0;
  double r_max = 20.0;
  std::size_t ns = 601;
  std::size_t nr = 401;

  double ds() const { return (s_max - s_min) / double(ns - 1); }
  double dr() const { return (r_max - r_min) / double(nr - 1); }
};

class MetricField {
public:
  MetricField() = default;
  MetricField(FieldWindow window, GLaw law);

  const FieldWindow& window() const { return window_; }
  GLaw law() const { return law_; }
  std::size_t ns() const { return window_.ns; }
  std::size_t nr() const { return window_.nr; }
  std::size_t index(std::size_t i, std::size_t j) const { return j * window_.ns + i; }
  double s(std::size_t i) const { return window_.s_min + window_.ds() * double(i); }
  double r(std::size_t j) const { return window_.r_min + window_.dr() * double(j); }
  bool contains(double s, double r) const;

  RhoJet jet(std::size_t i, std::size_t j) const;
  GRatios ratios(std::size_t i, std::size_t j) const { return g_ratios(law_, jet(i, j)); }
  // Bilinear interpolation of the tabulated jet.
  RhoJet sample(double s, double r) const;

  // Max over non-closed-form nodes of |rho_s - beta h^2 rho_r|.
  double max_pde_residual() const;

  std::vector<double> rho, rho_r, rho_s, rho_rr, rho_ss, rho_rs, beta;
  std::vector<std::uint8_t> closed;

  void save(const std::string& path, const std::string& key) const;
  // Throws CacheMiss when the file is absent or carries another key.
  static MetricField load(const std::string& path, const std::string& key);

  void fill_second_derivatives();

private:
  FieldWindow window_;
  GLaw law_ = GLaw::Warped;
};

struct FieldBuildStats {
  std::size_t traced = 0;
  std::size_t closed = 0;
  std::size_t steps = 0;
  double max_pde_residual = 0.0;
};

MetricField build_metric_field(const FieldWindow& window, const ScaffoldProfile& profile,
                               const StepControl& control = {},
                               FieldBuildStats* stats = nullptr,
                               double pde_tol = 1e-6);

// Perturbation for failure-path tests: beta := value at every traced node,
// with rho_s reset to beta h^2 rho_r and the second derivatives redone.
void force_beta(MetricField& field, double value);

// g = sinh r everywhere (rho = r, beta = 0): the space of constant curvature -1.
MetricField hyperbolic_reference_field(const FieldWindow& window);

void write_metric_csv(const MetricField& field, const std::string& path);

} // namespace hadamard
