#include <gtest/gtest.h>

#include <cmath>

#include "hadamard/errors.hpp"
#include "hadamard/subsolution.hpp"

using namespace hadamard;

namespace {

const ScaffoldProfile& profile() {
  static const ScaffoldProfile p = build_scaffold(ScaffoldConfig{});
  return p;
}

const OperatorSpec& mg() {
  static const OperatorSpec o = builtin_operator("minimal_graph");
  return o;
}

const SubsolutionParams& sub() {
  static const SubsolutionParams p = make_subsolution(0.0, 1.0, mg(), profile());
  return p;
}

} // namespace

TEST(QProfile, EndpointsAndJunctions) {
  const QProfile& q = sub().q;
  EXPECT_EQ(q.q(0.0), 0.0);
  EXPECT_NEAR(q.q_d1(0.0), -1.0, 1e-12);
  EXPECT_EQ(q.T0(), 1.0);
  EXPECT_LT(q.T0(), q.T1());
  EXPECT_LT(q.T1(), q.T2());
  EXPECT_LT(q.T2(), q.T3());
  EXPECT_NEAR(q.q(q.T2()), 0.0, 1e-14);
  EXPECT_NEAR(profile().beta0(q.T3()) * std::cosh(q.T3()), 1.0, 1e-8);
  // Beyond T3 q is beta0 - sech.
  const double r = q.T3() + 1.0;
  EXPECT_NEAR(q.q(r), profile().beta0(r) - 1.0 / std::cosh(r), 1e-12 * std::fabs(q.q(r)));
}

TEST(QProfile, PiecesAwayFromJoints) {
  const QProfile& q = sub().q;
  EXPECT_NEAR(q.q(0.5), -std::tanh(0.5), 1e-12);
  const double r = 0.5 * (q.T0() + q.T1()), c = std::cosh(r);
  EXPECT_NEAR(q.q(r), -std::cosh(q.T0()) * std::sinh(r) / (c * c), 1e-12 * std::fabs(q.q(r)));
}

TEST(QProfile, IntegralMatchesQuadrature) {
  const QProfile& q = sub().q;
  for (double r : {0.7, 3.0, 40.0}) {
    const double ref = gauss_integrate_panels([&](double x) { return q.q(x); }, 0.0, r, 400);
    EXPECT_NEAR(q.integral(r), ref, 1e-7) << r;
  }
}

TEST(QProfile, OperatorDependentT0) {
  EXPECT_EQ(build_q(0.0, builtin_operator("p_laplace", 6), profile()).T0(), 1.25);
}

TEST(Phi, ZeroOutsideSupport) {
  const SubsolutionParams& p = sub();
  EXPECT_EQ(phi_eval(p, {-0.5, 0.0}).phi, 0.0);
  const double r = 2.0, s = p.a + p.q.integral(r);
  EXPECT_EQ(phi_eval(p, {s, r}).phi, 0.0);
  EXPECT_GT(phi_eval(p, {s + 0.1, r}).phi, 0.0);
  EXPECT_THROW(qsub_terms(p, mg(), {s, r}, 1.0, 0.0), OutsideSupport);
}

TEST(Phi, GradientOnAxis) {
  const SubsolutionParams& p = sub();
  const PhiValue v = phi_eval(p, {3.0, 0.0});
  EXPECT_DOUBLE_EQ(v.norm, f_d1(p, 3.0));
  EXPECT_DOUBLE_EQ(v.phi, std::tanh(0.5 * 3.0));
}

TEST(Phi, ExactQMatchesDifferencedOperator) {
  // Independent route: Q applied to a difference jet of phi, with warp data
  // g_s/g = beta h^2 g_r/g (the characteristic relation).
  const SubsolutionParams& p = sub();
  auto phi = [&](double s, double r) { return phi_eval(p, {s, r}).phi; };
  for (auto [s, r, gr, beta] : {std::tuple{2.0, 0.5, 2.3, 0.0}, {1.5, 2.0, 4.1, 0.2},
                                 {4.0, 1.6, 3.0, 0.05}}) {
    const double h = std::cosh(r);
    const WarpData w{r, gr, beta * h * h * gr};
    const double ref = q_of_smooth(fd_jet(phi, s, r, 1e-3), mg(), w);
    const double got = qsub_terms(p, mg(), {s, r}, gr, beta).exact;
    EXPECT_NEAR(got, ref, 1e-5 * (1.0 + std::fabs(ref))) << s << "," << r;
  }
}

TEST(Subsolution, SufficientBoundsExact) {
  // The sufficient margin positive forces Q[phi] >= 0.
  const SubsolutionParams& p = sub();
  for (double r : {0.0, 0.5, 2.0, 10.0}) {
    const double s = p.a + p.q.integral(r) + 1.0;
    const double gr = r == 0.0 ? 0.0 : law_J(GLaw::Warped, r);
    const QsubMargin m = qsub_terms(p, mg(), {s, r}, gr, 0.0);
    EXPECT_GT(m.sufficient, 0.0) << r;
    EXPECT_GE(m.exact, 0.0) << r;
  }
}

TEST(Subsolution, VerifiesOnCoarseField) {
  FieldWindow w;
  w.s_min = -10;
  w.s_max = 20;
  w.r_max = 12;
  w.ns = 61;
  w.nr = 49;
  const MetricField f = build_metric_field(w, profile());
  const GridReport rep = verify_subsolution(sub(), mg(), f);
  for (const CheckSummary& c : rep.checks()) EXPECT_TRUE(rep.check_pass(c.name)) << c.name;
  EXPECT_GT(rep.check("(Qsubphi) margin").min_margin, 0.0);
  EXPECT_GT(rep.notes()["nodes_in_support"].get<std::size_t>(), 100u);
}

TEST(Subsolution, ThresholdOnA) {
  const double a = a_threshold(mg(), profile(), {0.0, 0.0}, 0.999);
  EXPECT_NEAR(a, -7.6004, 1e-3);
  EXPECT_GE(phi_eval(make_subsolution(a, 1.0, mg(), profile()), {0, 0}).phi, 0.999 - 1e-9);
  EXPECT_GE(phi_eval(make_subsolution(a - 2.0, 1.0, mg(), profile()), {0, 0}).phi, 0.999);
  EXPECT_LT(phi_eval(make_subsolution(a + 0.01, 1.0, mg(), profile()), {0, 0}).phi, 0.999);
}

TEST(Subsolution, RejectsNonPositiveC) {
  EXPECT_THROW(make_subsolution(0.0, 0.0, mg(), profile()), InvalidParameter);
}
