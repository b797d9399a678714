#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "hadamard/errors.hpp"
#include "hadamard/metric.hpp"
#include "oracles.hpp"

using namespace hadamard;

namespace {

const ScaffoldProfile& profile() {
  static const ScaffoldProfile p = build_scaffold(ScaffoldConfig{});
  return p;
}

FieldWindow small_window() {
  FieldWindow w;
  w.s_min = -10;
  w.s_max = 20;
  w.r_min = 0;
  w.r_max = 12;
  w.ns = 61;
  w.nr = 49;
  return w;
}

const MetricField& small_field() {
  static const MetricField f = build_metric_field(small_window(), profile());
  return f;
}

} // namespace

TEST(Characteristic, InteriorStartIsOneNode) {
  const CharacteristicPath p = trace_characteristic({5.0, 2.0}, profile());
  EXPECT_TRUE(p.interior);
  EXPECT_EQ(p.nodes.size(), 1u);
  EXPECT_EQ(p.rho_value, 2.0);
}

TEST(Characteristic, OmegaStartKeepsRadius) {
  const double r = 9.0, s = -profile().ell(r) - 1.0;
  EXPECT_EQ(rho({s, r}, profile()), r);
}

TEST(Characteristic, AxisAndThree) {
  EXPECT_EQ(rho({4.0, 0.0}, profile()), 0.0);
  EXPECT_EQ(rho({4.0, 3.0}, profile()), 3.0);
}

TEST(Characteristic, MatchesFixedStepOracle) {
  for (auto [s, r] : {std::pair{10.0, 8.0}, {0.0, 10.0}, {30.0, 20.0}, {2.0, 4.0}, {25.0, 15.5}}) {
    const double got = rho({s, r}, profile());
    const double ref = oracle::rho_rk4(profile(), s, r);
    EXPECT_NEAR(got, ref, 1e-6) << s << "," << r;
    EXPECT_GE(got, r);
  }
  EXPECT_GT(rho({10.0, 8.0}, profile()), 8.0);
}

TEST(Characteristic, SensitivitiesMatchDifferences) {
  const double s = 12.0, r = 9.0, e = 1e-4;
  const CharacteristicPath p = trace_characteristic({s, r}, profile());
  const double dr = (rho({s, r + e}, profile()) - rho({s, r - e}, profile())) / (2 * e);
  const double ds = (rho({s + e, r}, profile()) - rho({s - e, r}, profile())) / (2 * e);
  EXPECT_NEAR(p.rho_r, dr, 1e-6);
  EXPECT_NEAR(p.rho_s, ds, 1e-6);
}

TEST(Law, ClosedFormValues) {
  // g = sinh(sinh 2r)/2 at r = 1.
  EXPECT_NEAR(std::exp(law_log_g(GLaw::Warped, 1.0)), 0.5 * std::sinh(std::sinh(2.0)), 1e-12);
  const double r = 1.3;
  EXPECT_NEAR(law_J(GLaw::Warped, r), 2.0 * std::cosh(2 * r) / std::tanh(std::sinh(2 * r)), 1e-12);
  auto G = [](double x) { return 0.5 * std::sinh(std::sinh(2 * x)); };
  const double h = 1e-4;
  const double g2 = (G(r + h) - 2 * G(r) + G(r - h)) / (h * h) / G(r);
  EXPECT_NEAR(law_K(GLaw::Warped, r), g2, 1e-5 * g2);
  EXPECT_NEAR(law_K(GLaw::Warped, 1e-9), law_axis_K(GLaw::Warped), 1e-6);
}

TEST(Field, ClosedNodesAndResidual) {
  const MetricField& f = small_field();
  for (std::size_t i = 0; i < f.ns(); ++i) {
    const RhoJet q = f.jet(i, 10);  // r = 2.5
    EXPECT_TRUE(q.closed_form);
    EXPECT_EQ(q.rho, f.r(10));
  }
  EXPECT_LE(f.max_pde_residual(), 1e-6);
  for (std::size_t k = 0; k < f.rho.size(); ++k) {
    EXPECT_GE(f.rho_r[k], 1.0 - 1e-8);
  }
}

TEST(Field, NodesAgreeWithTracing) {
  const MetricField& f = small_field();
  for (auto [i, j] : {std::pair<std::size_t, std::size_t>{60, 48}, {45, 30}, {30, 20}}) {
    EXPECT_NEAR(f.jet(i, j).rho, oracle::rho_rk4(profile(), f.s(i), f.r(j)), 1e-6);
  }
}

TEST(Field, SecondDerivativesConsistent) {
  const MetricField& f = small_field();
  // rho_rr against a difference of traced rho_r.
  const double s = 15.0, r = 9.0, e = 1e-3;
  const double d = (trace_characteristic({s, r + e}, profile()).rho_r -
                    trace_characteristic({s, r - e}, profile()).rho_r) / (2 * e);
  const RhoJet q = f.sample(s, r);
  EXPECT_NEAR(q.rho_rr, d, 1e-2 * std::fabs(d) + 1e-8);
}

TEST(Field, HyperbolicReference) {
  const MetricField f = hyperbolic_reference_field(small_window());
  const RhoJet q = f.sample(1.234, 5.5);
  EXPECT_NEAR(q.rho, 5.5, 1e-12);
  EXPECT_EQ(q.rho_s, 0.0);
  EXPECT_NEAR(law_J(GLaw::Hyperbolic, 2.0), 1.0 / std::tanh(2.0), 1e-15);
}

TEST(Field, CacheRoundTrip) {
  const auto path = (std::filesystem::temp_directory_path() / "hadamard_field.bin").string();
  small_field().save(path, "key-1");
  const MetricField g = MetricField::load(path, "key-1");
  EXPECT_EQ(g.rho, small_field().rho);
  EXPECT_EQ(g.rho_rs, small_field().rho_rs);
  EXPECT_THROW(MetricField::load(path, "key-2"), CacheMiss);
  EXPECT_THROW(MetricField::load(path + ".absent", "key-1"), CacheMiss);
}

TEST(Field, ForceBetaBreaksOnlyTracedNodes) {
  MetricField f = small_field();
  force_beta(f, 0.5);
  std::size_t changed = 0;
  for (std::size_t k = 0; k < f.rho.size(); ++k)
    if (!f.closed[k]) changed += f.beta[k] == 0.5;
  EXPECT_GT(changed, 0u);
}
