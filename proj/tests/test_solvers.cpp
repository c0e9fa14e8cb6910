#include <gtest/gtest.h>

#include <random>

#include "nlsmix/solvers.hpp"
#include "oracles.hpp"

using namespace nlsmix;

namespace {

ModelParams params(int dim, double q, double p, double mu, double a = 1.0) {
  ModelParams m;
  m.dim = dim;
  m.q = q;
  m.p = p;
  m.mu = mu;
  m.a = a;
  return m;
}

ErrorCategory category_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.category();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCategory::io;
}

// Mixed configuration used throughout: half of the threshold mu at a = 1.
constexpr double kMuMixed = 8.72891397;

class MixedBranches : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    prm_ = new ModelParams(params(1, 3.0, 8.0, kMuMixed));
    gn_ = new GNPair(gn_pair(*prm_));
    tilde_ = new GroundStateResult(solve_prescribed_mass(*prm_, Branch::LocalMin, *gn_));
    hat_ = new GroundStateResult(solve_prescribed_mass(*prm_, Branch::MountainPass, *gn_));
  }
  static void TearDownTestSuite() {
    delete prm_;
    delete gn_;
    delete tilde_;
    delete hat_;
  }
  static inline ModelParams* prm_ = nullptr;
  static inline GNPair* gn_ = nullptr;
  static inline GroundStateResult* tilde_ = nullptr;
  static inline GroundStateResult* hat_ = nullptr;
};

}  // namespace

TEST(Stationary, CubicHomogeneousIsSqrt2Sech) {
  const auto prm = params(1, 3.0, 4.0, 0.0);
  const auto u = stationary_shoot(-1.0, prm);
  double err = 0;
  for (std::size_t j = 0; j < u.size(); ++j) err = std::max(err, std::abs(u.values[j] - oracle::soliton_1d(u.grid.r(j), 4.0)));
  EXPECT_LT(err, 1e-6);
  EXPECT_NEAR(u.mass2(), 4.0, 1e-6);
}

// Without the lower power u_lambda(r) = |lambda|^{1/(p-2)} w(|lambda|^{1/2} r),
// so |u_lambda|_2^2 = |lambda|^{2/(p-2) - N/2} |w|_2^2.
TEST(Stationary, HomogeneousMassFollowsScalingLaw) {
  for (int n = 1; n <= 3; ++n) {
    const double p = n == 3 ? 4.0 : 5.0;
    const auto prm = params(n, 3.0, p, 0.0);
    const double w2 = stationary_shoot(-1.0, prm).mass2();
    for (double lambda : {-0.05, -0.3, -4.0, -25.0}) {
      const double expect = std::pow(-lambda, 2.0 / (p - 2.0) - 0.5 * n) * w2;
      EXPECT_NEAR(stationary_shoot(lambda, prm).mass2(), expect, 1e-6 * expect) << "N=" << n << " lambda=" << lambda;
    }
  }
  // 1D cubic: |u_lambda|_2^2 = 4 |lambda|^{1/2}
  const auto cubic = params(1, 3.0, 4.0, 0.0);
  for (const auto& pt : mass_curve(log_lambda_grid(-1e-2, -1e2, 9), cubic)) {
    ASSERT_TRUE(pt.ok) << pt.error;
    EXPECT_NEAR(pt.mass * pt.mass, 4.0 * std::sqrt(-pt.lambda), 1e-6 * pt.mass * pt.mass);
  }
}

TEST(Stationary, RejectsNonNegativeLambda) {
  const auto prm = params(1, 3.0, 8.0, 1.0);
  EXPECT_EQ(category_of([&] { (void)stationary_shoot(0.0, prm); }), ErrorCategory::validation);
  EXPECT_EQ(category_of([&] { (void)stationary_shoot(0.5, prm); }), ErrorCategory::validation);
  EXPECT_EQ(category_of([&] { (void)mass_curve({-1.0, -2.0}, prm); }), ErrorCategory::validation);
}

TEST(MassCurve, LogGridIsSortedAndCoversTheRange) {
  const auto g = log_lambda_grid(-1e-4, -1e2, 7);
  ASSERT_EQ(g.size(), 7u);
  EXPECT_DOUBLE_EQ(g.front(), -1e2);
  EXPECT_NEAR(g.back(), -1e-4, 1e-18);
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
  EXPECT_TRUE(log_lambda_grid(-1, -2, 0).empty());
}

TEST(PrescribedMass, HomogeneousCubicAtMassTwo) {
  // |u_lambda|_2 = 2 |lambda|^{1/4} equals 2 exactly at lambda = -1
  const auto prm = params(1, 3.0, 4.0, 0.0, 2.0);
  const auto g = solve_prescribed_mass(prm, Branch::Unique, gn_pair(prm));
  EXPECT_NEAR(g.lambda, -1.0, 1e-7);
  EXPECT_LT(g.mass_error, 1e-8);
  EXPECT_NEAR(g.profile.values[0], std::sqrt(2.0), 1e-6);
}

TEST_F(MixedBranches, TwoBranchesWithSeparatedLevels) {
  const auto& t = *tilde_;
  const auto& h = *hat_;
  const auto geom = h_roots(*prm_, gn_->q, gn_->p);
  ASSERT_TRUE(geom);
  EXPECT_LT(t.energy_level, 0.0);
  EXPECT_GT(h.energy_level, 0.0);
  EXPECT_LT(t.grad_norm(), geom->r0);
  EXPECT_GT(h.grad_norm(), geom->r0);
  EXPECT_EQ(t.fiber_class, PohozaevClass::Pplus);
  EXPECT_EQ(h.fiber_class, PohozaevClass::Pminus);
  for (const auto* g : {tilde_, hat_}) {
    EXPECT_LT(g->lambda, 0.0);
    EXPECT_LT(g->mass_error, 1e-8);
    EXPECT_LT(g->pohozaev_residual, 1e-6);
    EXPECT_LT(g->ode_residual, 1e-8);
  }
  // frozen from the first converged run, cross-checked against the flow below
  EXPECT_NEAR(t.lambda, -5.948570953551465, 1e-6);
  EXPECT_NEAR(t.energy_level, -1.6787078219706992, 1e-7);
}

TEST_F(MixedBranches, ProfilesArePositiveAndNonIncreasing) {
  for (const auto* g : {tilde_, hat_}) {
    const auto& v = g->profile.values;
    EXPECT_GT(v[0], 0.0);
    for (std::size_t j = 1; j < v.size(); ++j) {
      ASSERT_GE(v[j], 0.0) << j;
      ASSERT_LE(v[j], v[j - 1] + 1e-14) << j;
    }
  }
}

TEST_F(MixedBranches, GradientFlowAgreesWithShooting) {
  const RadialGrid grid{1, 20.0, 8192};
  FlowTrace trace;
  const auto f = gradient_flow_local_min(*prm_, local_min_seed(*prm_, grid), FlowConfig{}, *gn_, &trace);
  // the flow grid has h = 2.4e-3, so lambda carries an O(h^2) discretization error
  EXPECT_NEAR(f.lambda, tilde_->lambda, 1e-5 * std::abs(tilde_->lambda));
  const auto shot = resample(tilde_->profile, grid);
  EXPECT_LT(profile_distance(f.profile, shot).l2, 1e-4);
  EXPECT_EQ(f.fiber_class, PohozaevClass::Pplus);

  // accepted steps never raise the energy and never leave the ball
  const double r0 = h_roots(*prm_, gn_->q, gn_->p)->r0;
  for (std::size_t i = 1; i < trace.energy.size(); ++i) ASSERT_LE(trace.energy[i], trace.energy[i - 1]) << i;
  for (double g2 : trace.grad2) ASSERT_LT(g2, r0 * r0);
}

TEST(GradientFlow, RejectsDatumOutsideTheWell) {
  const auto prm = params(1, 3.0, 8.0, kMuMixed);
  const auto gn = gn_pair(prm);
  const RadialGrid grid{1, 20.0, 4096};
  auto g = gaussian_profile(grid, 1.0, 0.01);
  normalize_mass(g, 1.0);
  EXPECT_EQ(category_of([&] { (void)gradient_flow_local_min(prm, g, FlowConfig{}, gn); }), ErrorCategory::flow);
}

// The analytic gradient of the discrete energy against central differences.
TEST(GradientFlow, DiscreteGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int n = 1; n <= 3; ++n) {
    const auto prm = params(n, 3.0, n == 3 ? 4.0 : 5.0, 0.7);
    const RadialGrid grid{n, 12.0, 97};
    const RadialDiscretization disc(grid);
    const auto f = oracle::random_profile(rng, true);
    std::vector<double> u(grid.points);
    for (std::size_t j = 0; j < u.size(); ++j) u[j] = f(grid.r(j));
    u.back() = 0.0;
    const auto g = disc.gradient(u, prm);
    for (std::size_t j = 0; j + 1 < u.size(); j += 7) {
      const double h = 1e-6;
      auto up = u, dn = u;
      up[j] += h;
      dn[j] -= h;
      const double fd = (disc.energy(up, prm) - disc.energy(dn, prm)) / (2 * h);
      EXPECT_NEAR(g[j], fd, 1e-6 * (1.0 + std::abs(fd))) << "N=" << n << " j=" << j;
    }
  }
}

TEST(GradientFlow, ShiftedSolveInvertsTheOperator) {
  const RadialGrid grid{2, 10.0, 64};
  const RadialDiscretization disc(grid);
  std::vector<double> rhs(grid.points);
  for (std::size_t j = 0; j < rhs.size(); ++j) rhs[j] = std::cos(0.3 * static_cast<double>(j));
  const double tau = 0.7;
  const auto x = disc.solve_shifted(tau, rhs);
  EXPECT_EQ(x.back(), 0.0);
  const auto kx = disc.stiffness(x);
  for (std::size_t j = 0; j + 1 < x.size(); ++j) EXPECT_NEAR(disc.mass()[j] * x[j] + tau * kx[j], rhs[j], 1e-11) << j;
}

TEST(PrescribedMass, MixedBranchAbsentAboveThreshold) {
  const auto prm = params(1, 3.0, 8.0, 40.0);
  const auto gn = gn_pair(prm);
  EXPECT_EQ(category_of([&] { (void)solve_prescribed_mass(prm, Branch::LocalMin, gn); }), ErrorCategory::no_branch);
  // two-branch requests outside the mixed regime
  const auto crit = params(1, 6.0, 8.0, 0.3);
  EXPECT_EQ(category_of([&] { (void)solve_prescribed_mass(crit, Branch::MountainPass, gn_pair(crit)); }),
            ErrorCategory::no_branch);
}

TEST(PrescribedMass, DegenerateExponentsRejected) {
  EXPECT_EQ(category_of([] {
              const auto prm = params(1, 4.0, 4.0, 1.0);
              (void)solve_prescribed_mass(prm, Branch::Unique, GNPair{});
            }),
            ErrorCategory::validation);
}

TEST(PrescribedMass, UniqueStateCriticalPerturbation) {
  const auto prm = params(1, 6.0, 8.0, 0.3);
  const auto g = solve_prescribed_mass(prm, Branch::Unique, gn_pair(prm));
  EXPECT_GT(g.energy_level, 0.0);
  EXPECT_LT(g.lambda, 0.0);
  EXPECT_EQ(g.fiber_class, PohozaevClass::Pminus);
  EXPECT_LT(g.pohozaev_residual, 1e-6);
  EXPECT_LT(g.mass_error, 1e-8);
}

TEST(PrescribedMass, UniqueStateDefocusing) {
  const auto prm = params(1, 3.0, 8.0, -1.0);
  const auto g = solve_prescribed_mass(prm, Branch::Unique, gn_pair(prm));
  EXPECT_GT(g.energy_level, 0.0);
  EXPECT_LT(g.lambda, 0.0);
  EXPECT_EQ(g.fiber_class, PohozaevClass::Pminus);
  EXPECT_LT(g.pohozaev_residual, 1e-6);
}

TEST(Asymptotics, LocalMinShrinksAsMuVanishes) {
  const auto base = params(1, 3.0, 8.0, 1.0);
  const auto rows = asymptotic_sweep(base, SweepVariable::mu_to_zero, {1e-1, 1e-2});
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) ASSERT_TRUE(r.ok) << r.error;
  EXPECT_LT(rows[1].grad_tilde, rows[0].grad_tilde);
  EXPECT_GT(rows[1].m, rows[0].m);
  EXPECT_LT(rows[1].m, 0.0);
  EXPECT_LT(*rows[1].hat_to_u0, *rows[0].hat_to_u0);
}
