#include <gtest/gtest.h>

#include "fracsing/bifurcation.hpp"
#include "fracsing/error.hpp"
#include "fracsing/singular.hpp"
#include "oracles.hpp"

using namespace fracsing;

namespace {

struct Fixture {
  StiffnessSystem sys;
  ProblemParams p0;
  Solution w;
};

Fixture make(int n, double s = 0.4, double q = 2) {
  const ProblemParams p = make_params(s, q, 0);
  StiffnessSystem sys = assemble_stiffness(build_grid(-1, 1, n), p);
  Solution w = solve_pure_singular(sys, p);
  return {std::move(sys), p, std::move(w)};
}

const Fixture& f64() {
  static const Fixture f = make(64);
  return f;
}

const Fixture& f128() {
  static const Fixture f = make(128);
  return f;
}

}  // namespace

TEST(Schedule, StandardMeetsInvariants) {
  const auto s = RegularizationSchedule::standard();
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(s.eps_list.size(), 13u);
  EXPECT_LE(s.eps_list.back(), 1e-6 * s.eps_list.front());
  EXPECT_GT(s.floor, 0.0);
  RegularizationSchedule bad = s;
  std::swap(bad.eps_list[1], bad.eps_list[2]);
  EXPECT_THROW(bad.validate(), ParameterError);
  EXPECT_THROW(RegularizationSchedule::geometric(0.1, 0.25, 5), ParameterError);
}

TEST(PureSingular, PositiveAndConverged) {
  const Fixture& f = f128();
  EXPECT_TRUE(f.w.report.converged);
  EXPECT_LE(f.w.report.residual, 1e-8);
  EXPECT_GT(f.w.u.minCoeff(), 0.0);
  EXPECT_EQ(f.w.report.branch, Branch::pure_singular);
  for (int i = 0; i < 128; ++i) EXPECT_NEAR(f.w.u[i], f.w.u[127 - i], 1e-10);
}

TEST(PureSingular, ScheduleIndependent) {
  const Fixture& f = f128();
  SemilinearOptions other;
  other.schedule = RegularizationSchedule::geometric(0.5, 0.1, 10);
  const Solution w2 = solve_pure_singular(f.sys, f.p0, other);
  EXPECT_LE((w2.u - f.w.u).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Semilinear, RegularizedSolutionsIncreaseAsEpsDecreases) {
  const Fixture& f = f64();
  std::vector<Eigen::VectorXd> stages;
  SemilinearOptions opts;
  opts.stages = &stages;
  const Eigen::VectorXd g = 0.3 * Eigen::VectorXd::Ones(64);
  const Solution u = solve_singular_semilinear(f.sys, f.p0, g, opts);
  ASSERT_EQ(stages.size(), opts.schedule.eps_list.size());
  for (std::size_t k = 1; k < stages.size(); ++k) EXPECT_GE((stages[k] - stages[k - 1]).minCoeff(), -1e-9);
  EXPECT_GE((u.u - stages.back()).minCoeff(), -1e-9);
}

TEST(Semilinear, MonotoneInData) {
  const Fixture& f = f64();
  const Eigen::VectorXd x = f.sys.grid.coordinates();
  oracle::Sampler rng(17);
  for (int k = 0; k < 10; ++k) {
    const Eigen::VectorXd g1 = rng.bumps(x, -1, 1);
    const Eigen::VectorXd g2 = g1 + rng.bumps(x, -1, 1);
    const Solution u1 = solve_singular_semilinear(f.sys, f.p0, g1);
    const Solution u2 = solve_singular_semilinear(f.sys, f.p0, g2);
    ASSERT_TRUE(u1.report.converged && u2.report.converged);
    EXPECT_LE((u1.u - u2.u).maxCoeff(), 1e-8);
  }
}

TEST(Semilinear, RejectsNegativeData) {
  const Fixture& f = f64();
  Eigen::VectorXd g = Eigen::VectorXd::Ones(64);
  g[10] = -1e-3;
  EXPECT_THROW(solve_singular_semilinear(f.sys, f.p0, g), ParameterError);
}

TEST(Semilinear, WarmStartGivesSameSolution) {
  const Fixture& f = f64();
  const Eigen::VectorXd g = 0.5 * Eigen::VectorXd::Ones(64);
  const Solution cold = solve_singular_semilinear(f.sys, f.p0, g);
  SemilinearOptions opts;
  opts.warm_start = &f.w.u;
  const Solution warm = solve_singular_semilinear(f.sys, f.p0, g, opts);
  EXPECT_LE((cold.u - warm.u).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Supersolution, ZeroLambdaAlwaysValid) {
  const Fixture& f = f64();
  for (double M : {0.0, 1e-3, 1.0, 100.0}) EXPECT_TRUE(build_supersolution(f.sys, f.p0, f.w.u, M).valid) << M;
}

TEST(Supersolution, SmallLambdaHasValidM) {
  const Fixture& f = f64();
  const ProblemParams p = f.p0.with_lambda(1e-3);
  const auto sup = search_supersolution(f.sys, p, f.w.u, power_ladder());
  ASSERT_TRUE(sup.has_value());
  EXPECT_GE(sup->min_defect, -1e-8);
  EXPECT_GE((sup->ubar - f.w.u).minCoeff(), 0.0);
}

TEST(Supersolution, NoneFarAboveCertificate) {
  const Fixture& f = f64();
  const double cert = lambda_certificate(f.p0, principal_eigenpair(f.sys).lam1);
  EXPECT_FALSE(search_supersolution(f.sys, f.p0.with_lambda(10 * cert), f.w.u, power_ladder(0, 20)).has_value());
  EXPECT_FALSE(search_supersolution(f.sys, f.p0.with_lambda(10 * cert), f.w.u, power_ladder()).has_value());
}

TEST(MonotoneIteration, ZeroLambdaReturnsW) {
  const Fixture& f = f64();
  const IterationResult it = monotone_iteration(f.sys, f.p0, f.w.u);
  EXPECT_EQ(it.status, IterationStatus::converged);
  EXPECT_EQ(it.report.iterations, 1);
  EXPECT_LE((it.u - f.w.u).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(MonotoneIteration, SandwichAndResidual) {
  const Fixture& f = f128();
  const ProblemParams p = f.p0.with_lambda(0.02);
  const auto sup = search_supersolution(f.sys, p, f.w.u, power_ladder());
  ASSERT_TRUE(sup.has_value());
  IterationOptions opts;
  opts.keep_trace = true;
  const IterationResult it = monotone_iteration(f.sys, p, f.w.u, &sup->ubar, opts);
  EXPECT_EQ(it.status, IterationStatus::converged);
  EXPECT_GE(it.min_increment, -1e-10);
  EXPECT_LE(it.max_above_bound, 1e-8);
  EXPECT_LE(it.report.residual, 1e-7);
  EXPECT_GE((it.u - f.w.u).minCoeff(), -1e-10);
  for (std::size_t k = 1; k < it.sup_trace.size(); ++k) EXPECT_GE(it.sup_trace[k], it.sup_trace[k - 1] - 1e-10);
}

TEST(MonotoneIteration, DivergesAboveCertificate) {
  const Fixture& f = f64();
  const double cert = lambda_certificate(f.p0, principal_eigenpair(f.sys).lam1);
  const IterationResult it = monotone_iteration(f.sys, f.p0.with_lambda(2 * cert), f.w.u);
  EXPECT_EQ(it.status, IterationStatus::diverged);
  EXPECT_FALSE(it.report.converged);
}

TEST(MonotoneIteration, MinimalBranchIncreasesWithLambda) {
  const Fixture& f = f64();
  Eigen::VectorXd prev = f.w.u;
  for (double lam : {0.005, 0.01, 0.02, 0.04}) {
    const IterationResult it = monotone_iteration(f.sys, f.p0.with_lambda(lam), f.w.u);
    ASSERT_EQ(it.status, IterationStatus::converged) << lam;
    EXPECT_GE((it.u - prev).minCoeff(), -1e-8);
    prev = it.u;
  }
}

TEST(MonotoneIteration, PositiveOnCompactsAboveW) {
  const Fixture& f = f64();
  const IterationResult it = monotone_iteration(f.sys, f.p0.with_lambda(0.03), f.w.u);
  for (double eta : {0.05, 0.2, 0.5}) {
    double mu = 1e300, mw = 1e300;
    for (int i = 0; i < 64; ++i) {
      const double x = f.sys.grid.node(i);
      if (x < -1 + eta || x > 1 - eta) continue;
      mu = std::min(mu, it.u[i]);
      mw = std::min(mw, f.w.u[i]);
    }
    EXPECT_GE(mu, mw - 1e-10);
    EXPECT_GT(mw, 0.0);
  }
}

TEST(MinimalNewton, AgreesWithIteration) {
  const Fixture& f = f64();
  const ProblemParams p = f.p0.with_lambda(0.03);
  const IterationResult it = monotone_iteration(f.sys, p, f.w.u);
  const Solution nw = minimal_newton(f.sys, p, f.w.u);
  ASSERT_TRUE(nw.report.converged);
  EXPECT_LE((nw.u - it.u).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Comparison, EqualDataGiveEqualSolutions) {
  const Fixture& f = f64();
  const Eigen::VectorXd g = Eigen::VectorXd::Constant(64, 0.7);
  const Solution u1 = solve_singular_semilinear(f.sys, f.p0, g);
  SemilinearOptions other;
  other.schedule = RegularizationSchedule::geometric(1.0, 0.1, 12);
  const Solution u2 = solve_singular_semilinear(f.sys, f.p0, g, other);
  const ComparisonResult c = comparison_check(f.sys, f.p0, u1.u, u2.u, g, g);
  EXPECT_EQ(c.verdict, Verdict::holds);
  EXPECT_LE((u1.u - u2.u).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Comparison, BumpRaisesSolution) {
  const Fixture& f = f64();
  const Eigen::VectorXd x = f.sys.grid.coordinates();
  const Eigen::VectorXd g1 = Eigen::VectorXd::Constant(64, 0.2);
  const Eigen::VectorXd g2 = g1 + (-(x.array() / 0.2).square()).exp().matrix();
  const Solution u1 = solve_singular_semilinear(f.sys, f.p0, g1);
  const Solution u2 = solve_singular_semilinear(f.sys, f.p0, g2);
  EXPECT_EQ(comparison_check(f.sys, f.p0, u1.u, u2.u, g1, g2).verdict, Verdict::holds);
  EXPECT_EQ(comparison_check(f.sys, f.p0, u2.u, u1.u, g2, g1).verdict, Verdict::holds);  // unordered data
  EXPECT_GT((u2.u - u1.u).minCoeff(), 0.0);
}

TEST(Comparison, NonSolutionsAreIndeterminate) {
  const Fixture& f = f64();
  const Eigen::VectorXd g = Eigen::VectorXd::Zero(64);
  EXPECT_EQ(comparison_check(f.sys, f.p0, 1.01 * f.w.u, f.w.u, g, g).verdict, Verdict::indeterminate);
}

TEST(Envelope, MinimalSolutionPasses) {
  const Fixture& f = f64();
  const ProblemParams p = f.p0.with_lambda(0.02);
  const IterationResult it = monotone_iteration(f.sys, p, f.w.u);
  const EnvelopeReport e = envelope_check(f.sys, p, it.u, f.w.u);
  EXPECT_TRUE(e.ok());
  EXPECT_NEAR(e.max_u, it.u.maxCoeff(), 0.0);
}

TEST(Envelope, WAtZeroLambdaPassesWithEquality) {
  const Fixture& f = f64();
  const EnvelopeReport e = envelope_check(f.sys, f.p0, f.w.u, f.w.u);
  EXPECT_TRUE(e.ok());
  EXPECT_LE((e.z_lambda - f.w.u).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Envelope, LowerViolationIsLocated) {
  const Fixture& f = f64();
  const Eigen::VectorXd x = f.sys.grid.coordinates();
  const Eigen::VectorXd bump = 0.1 * (-((x.array() - 0.3) / 0.05).square()).exp().matrix();
  const EnvelopeReport e = envelope_check(f.sys, f.p0, f.w.u - bump, f.w.u);
  EXPECT_FALSE(e.lower_ok);
  Eigen::Index peak;
  bump.maxCoeff(&peak);
  EXPECT_EQ(e.worst_node, peak);
}
