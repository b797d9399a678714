#include <gtest/gtest.h>

#include <cmath>

#include "hadamard/errors.hpp"
#include "hadamard/qoperator.hpp"

using namespace hadamard;

namespace {

// Hyperbolic slice data: g = sinh r.
WarpData hyp(double r) { return {r, 1.0 / std::tanh(r), 0.0}; }

// Conservative form (1/(g h)) [d_r(g h A u_r) + d_s(g A u_s / h)] by nested
// central differences on the hyperbolic metric.
double divergence_oracle(const std::function<double(double, double)>& u, const OperatorSpec& o,
                         double s, double r, double e) {
  const double d = 1e-5;
  auto ur = [&](double x, double y) { return (u(x, y + d) - u(x, y - d)) / (2 * d); };
  auto us = [&](double x, double y) { return (u(x + d, y) - u(x - d, y)) / (2 * d); };
  auto A = [&](double x, double y) {
    const double h = std::cosh(y), a = ur(x, y), b = us(x, y);
    return o.A(a * a + b * b / (h * h));
  };
  auto Fr = [&](double x, double y) { return std::sinh(y) * std::cosh(y) * A(x, y) * ur(x, y); };
  auto Fs = [&](double x, double y) { return std::sinh(y) / std::cosh(y) * A(x, y) * us(x, y); };
  const double div = (Fr(s, r + e) - Fr(s, r - e)) / (2 * e) + (Fs(s + e, r) - Fs(s - e, r)) / (2 * e);
  return div / (std::sinh(r) * std::cosh(r));
}

} // namespace

TEST(Operator, BuiltinsSatisfyStructure) {
  for (const char* name : {"minimal_graph", "laplace", "p_laplace:3", "p_laplace:6", "p_laplace:1.5"}) {
    const GridReport rep = check_operator(parse_operator(name));
    EXPECT_TRUE(rep.pass()) << name;
  }
}

TEST(Operator, ParseForms) {
  EXPECT_EQ(parse_operator("p_laplace(4)").param, 4.0);
  EXPECT_EQ(parse_operator("p_laplace:4").param, 4.0);
  EXPECT_EQ(parse_operator("minimal_graph").name, "minimal_graph");
  EXPECT_THROW(parse_operator("p_laplace"), InvalidParameter);
  EXPECT_THROW(parse_operator("p_laplace:1"), InvalidParameter);
  EXPECT_THROW(parse_operator("p_laplace:x"), InvalidParameter);
  EXPECT_THROW(parse_operator("heat"), InvalidParameter);
}

TEST(Operator, StructureConstants) {
  EXPECT_EQ(builtin_operator("minimal_graph").B0, 0.0);
  EXPECT_EQ(builtin_operator("p_laplace", 3).B0, 0.5);
  EXPECT_DOUBLE_EQ(builtin_operator("p_laplace", 4).delta_sub(), 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(builtin_operator("minimal_graph").delta_sub(), 0.5);
  EXPECT_DOUBLE_EQ(builtin_operator("minimal_graph").delta_sup(), 0.5);
}

TEST(Operator, PLaplaceTwoIsLaplace) {
  const OperatorSpec a = builtin_operator("p_laplace", 2), b = builtin_operator("laplace");
  const ScalarJet j{0.3, 0.7, -0.2, 0.1, 0.4, -0.05};
  EXPECT_DOUBLE_EQ(q_of_smooth(j, a, hyp(1.1)), q_of_smooth(j, b, hyp(1.1)));
  EXPECT_DOUBLE_EQ(q_of_smooth(j, b, hyp(1.1)), laplacian(j, hyp(1.1)));
}

TEST(Operator, EnergyDerivativeIsScaledA) {
  for (const char* name : {"minimal_graph", "laplace", "p_laplace:3", "p_laplace:5"}) {
    const OperatorSpec o = parse_operator(name);
    for (double t : {1e-3, 0.2, 1.0, 7.5}) {
      EXPECT_NEAR(o.F_d1(t), o.energy_scale * o.A(t), 1e-14 * (1 + o.A(t))) << name;
      const double h = 1e-6 * t;
      EXPECT_NEAR(o.F_d1(t), (o.F(t + h) - o.F(t - h)) / (2 * h), 1e-6 * (1 + o.F_d1(t))) << name;
      EXPECT_NEAR(o.F_d2(t), (o.F_d1(t + h) - o.F_d1(t - h)) / (2 * h), 1e-5 * (1 + std::fabs(o.F_d2(t))))
          << name;
    }
    EXPECT_EQ(o.F(0.0), 0.0);
  }
}

TEST(Operator, ConstantAndCoordinateAreSolutions) {
  const OperatorSpec o = builtin_operator("minimal_graph");
  EXPECT_EQ(q_of_smooth(ScalarJet{2.0, 0, 0, 0, 0, 0}, o, hyp(1.0)), 0.0);
  // s is harmonic and has zero Hessian along its gradient in the hyperbolic slice.
  for (double r : {0.3, 1.0, 2.5})
    EXPECT_NEAR(q_of_smooth(ScalarJet{0.4, 1.0, 0, 0, 0, 0}, o, hyp(r)), 0.0, 1e-14);
}

TEST(Operator, MatchesConservativeDivergence) {
  auto u = [](double s, double r) { return std::sin(0.7 * s) * r * r + 0.3 * s; };
  for (const char* name : {"minimal_graph", "p_laplace:3"}) {
    const OperatorSpec o = parse_operator(name);
    const double s = 0.4, r = 1.2;
    const double q = q_of_smooth(fd_jet(u, s, r, 1e-4), o, hyp(r));
    const double e1 = std::fabs(divergence_oracle(u, o, s, r, 2e-2) - q);
    const double e2 = std::fabs(divergence_oracle(u, o, s, r, 1e-2) - q);
    EXPECT_LT(e2, 1e-3) << name;
    EXPECT_GT(std::log2(e1 / e2), 1.7) << name;  // second order
  }
}

TEST(Operator, DegenerateGradient) {
  const ScalarJet flat{1.0, 0, 0, 0.1, 0.1, 0};
  EXPECT_THROW(q_of_smooth(flat, builtin_operator("p_laplace", 1.5), hyp(1.0)), DegenerateGradient);
  EXPECT_EQ(q_of_smooth(flat, builtin_operator("p_laplace", 3), hyp(1.0)), 0.0);
  EXPECT_DOUBLE_EQ(q_of_smooth(flat, builtin_operator("minimal_graph"), hyp(1.0)),
                   laplacian(flat, hyp(1.0)));
}

TEST(Operator, AxisLimitOfLaplacian) {
  const ScalarJet j{0, 0.5, 0, 0.2, 0.3, 0};
  EXPECT_DOUBLE_EQ(laplacian(j, WarpData{0.0, 0.0, 0.0}), 0.8);
}
