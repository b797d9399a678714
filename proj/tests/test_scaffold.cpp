#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "hadamard/errors.hpp"
#include "hadamard/io.hpp"
#include "hadamard/scaffold.hpp"
#include "oracles.hpp"

using namespace hadamard;

namespace {

const ScaffoldProfile& profile() {
  static const ScaffoldProfile p = build_scaffold(ScaffoldConfig{});
  return p;
}

} // namespace

TEST(Scaffold, BetaZeroBelowThree) {
  EXPECT_EQ(profile().beta0(2.0), 0.0);
  EXPECT_EQ(profile().beta(7.0, 2.5).value, 0.0);
}

TEST(Scaffold, XiEndpoints) {
  EXPECT_EQ(ScaffoldProfile::xi(-1.0), 0.0);
  EXPECT_EQ(ScaffoldProfile::xi(5.0), 1.0);
  EXPECT_EQ(ScaffoldProfile::xi_d1(0.0), 0.0);
}

TEST(Scaffold, XiPrimitiveMatchesQuadrature) {
  const double x = 2.7;
  EXPECT_NEAR(ScaffoldProfile::xi_integral(x),
              gauss_integrate_panels(ScaffoldProfile::xi, 0.0, x, 8), 1e-12);
}

TEST(Scaffold, EllDerivativeLaw) {
  const ScaffoldProfile& p = profile();
  EXPECT_EQ(p.ell(2.0), 0.0);
  const double r = 6.0, c = std::cosh(r);
  const double expect = p.epsilon() / (p.beta0(r) * c * c);
  EXPECT_NEAR(p.ell_d1(r) / expect, 1.0, 1e-10);
}

TEST(Scaffold, PlateauClosedForm) {
  const ScaffoldProfile& p = profile();
  for (double r : {5.0, 12.0, 30.0, 47.0}) {
    EXPECT_EQ(p.beta0(r), p.config().base_level) << r;
    EXPECT_NEAR(p.ell(r), oracle::plateau_ell(p, r), 1e-12 * std::fabs(oracle::plateau_ell(p, r)) + 1e-300);
  }
  // beta = beta0(5) once xi has saturated.
  const double r = 20.0;
  EXPECT_EQ(p.beta(4.0 - p.ell(r) + 1.0, r).value, p.beta0(5.0));
}

TEST(Scaffold, BetaVanishesInOmega) {
  const ScaffoldProfile& p = profile();
  const double r = 10.0;
  EXPECT_EQ(p.beta(-p.ell(r) - 0.5, r).value, 0.0);
  EXPECT_EQ(p.beta(-p.ell(r), r).value, 0.0);
}

TEST(Scaffold, DerivativesAgreeWithDifferences) {
  const ScaffoldProfile& p = profile();
  for (double r : {3.5, 4.2, 52.0, 60.0, 71.0}) {
    auto b = [&](double x) { return p.beta0(x); };
    auto f = [&](double x) { return p.beta0_h2(x); };
    auto f1 = [&](double x) { return p.beta0_h2_d1(x); };
    EXPECT_NEAR(p.beta0_d1(r), oracle::diff(b, r), 1e-6 * std::fabs(p.beta0(r)) + 1e-300) << r;
    EXPECT_NEAR(p.beta0_h2_d1(r) / oracle::diff(f, r), 1.0, 1e-6) << r;
    EXPECT_NEAR(p.beta0_h2_d2(r) / oracle::diff(f1, r), 1.0, 1e-6) << r;
  }
}

TEST(Scaffold, SignChanges) {
  const auto z = profile().sign_changes();
  ASSERT_GE(z.size(), 3u);
  for (double r : z) {
    EXPECT_NEAR(profile().beta0(r) * std::cosh(r), 1.0, 1e-8);
  }
}

TEST(Scaffold, EpsilonBound) {
  ScaffoldConfig c;
  c.epsilon = 0.3;
  EXPECT_THROW(build_scaffold(c), ConstraintViolation);
  try {
    build_scaffold(c);
  } catch (const ConstraintViolation& e) {
    EXPECT_EQ(e.constraint(), "epsilon < 1/4");
  }
}

TEST(Scaffold, SteepDropIsInfeasible) {
  ScaffoldConfig c;
  c.plateau_schedule = {{48.0, 62.0, 1e-60}};
  EXPECT_THROW(build_scaffold(c), ScheduleInfeasible);
}

TEST(Scaffold, OverlappingDropsRejected) {
  ScaffoldConfig c;
  c.plateau_schedule = {{48.0, 74.0, 2.5e-33}, {70.0, 80.0, 1e-40}};
  EXPECT_THROW(build_scaffold(c), ConstraintViolation);
}

TEST(Scaffold, Deterministic) {
  const ScaffoldProfile a = build_scaffold(ScaffoldConfig{});
  for (double r : {6.0, 33.3, 66.6}) EXPECT_EQ(a.ell(r), profile().ell(r));
}

TEST(Scaffold, ValidationSuite) {
  const GridReport rep = validate_scaffold(profile(), {0.0, 30.0});
  for (const CheckSummary& c : rep.checks()) {
    if (c.name.find("growth") != std::string::npos) continue;  // see acceptance
    EXPECT_TRUE(rep.check_pass(c.name)) << c.name << " min " << c.min_margin;
  }
  EXPECT_TRUE(rep.notes()["partial_integrals_increasing"].get<bool>());
}

TEST(Scaffold, CsvColumns) {
  const auto path = (std::filesystem::temp_directory_path() / "hadamard_scaffold.csv").string();
  write_scaffold_csv(profile(), path);
  const CsvTable t = read_csv(path);
  ASSERT_EQ(t.header.size(), 8u);
  EXPECT_EQ(t.header[0], "r");
  EXPECT_EQ(t.header[7], "beta0h2''");
  EXPECT_EQ(t.rows.size(), 8001u);
  EXPECT_DOUBLE_EQ(t.rows[600][t.column("beta0")], profile().beta0(6.0));
}
