#include <gtest/gtest.h>

#include <random>

#include "nlsmix/dynamics.hpp"
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

WaveField cubic_soliton(const WaveGrid& grid) {
  WaveField w;
  w.grid = grid;
  for (std::size_t j = 0; j < grid.points; ++j) w.values.emplace_back(oracle::soliton_1d(grid.coord(j), 4.0));
  return w;
}

double l2_diff(const std::vector<cplx>& a, const std::vector<cplx>& b, const FieldMeasures& m) {
  std::vector<cplx> d(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) d[j] = a[j] - b[j];
  return std::sqrt(m.mass2(d));
}

double modulus_diff(const std::vector<cplx>& a, const std::vector<cplx>& b, const FieldMeasures& m) {
  std::vector<cplx> d(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) d[j] = std::abs(a[j]) - std::abs(b[j]);
  return std::sqrt(m.mass2(d));
}

EvolveOptions fixed_step(double dt, double T) {
  EvolveOptions o;
  o.dt = dt;
  o.T = T;
  o.adaptive = false;
  return o;
}

constexpr double kMuMixed = 8.72891397;

}  // namespace

// -u'' - u^3 = -u for u = sqrt2 sech, so psi(t) = e^{it} u.
TEST(StandingWave, CubicSolitonKeepsModulusAndRotatesPhase) {
  const auto prm = params(1, 3.0, 4.0, 0.0);
  const WaveGrid grid{Geometry::periodic, 1, 40.0, 4096};
  const auto u = cubic_soliton(grid);
  const auto tr = evolve(u, prm, fixed_step(5e-4, 1.0));
  FieldMeasures m(grid);
  EXPECT_EQ(tr.outcome, Outcome::Global);
  EXPECT_NEAR(tr.t_end, 1.0, 1e-12);
  EXPECT_LT(modulus_diff(tr.final_state.values, u.values, m), 1e-6);
  std::vector<cplx> rotated(u.values);
  for (auto& v : rotated) v *= std::polar(1.0, 1.0);
  EXPECT_LT(l2_diff(tr.final_state.values, rotated, m), 1e-5);
  EXPECT_LT(tr.mass_drift(), 1e-10);
  EXPECT_LT(tr.energy_drift(), 1e-6);
}

TEST(StandingWave, MixedLocalMinimizer) {
  const auto prm = params(1, 3.0, 8.0, kMuMixed);
  const auto gs = solve_prescribed_mass(prm, Branch::LocalMin, gn_pair(prm));
  const auto grid = stationary_wave_grid(1, gs.lambda, 2048);
  const auto u = wave_from_radial(gs.profile, grid);
  const auto tr = evolve(u, prm, fixed_step(5e-4, 1.0));
  FieldMeasures m(grid);
  EXPECT_LT(modulus_diff(tr.final_state.values, u.values, m) / prm.a, 1e-5);
  EXPECT_LT(tr.mass_drift(), 1e-10);
  EXPECT_LT(tr.energy_drift(), 1e-6);
}

TEST(Propagator, StepIsUnitaryAndReversible) {
  std::mt19937_64 rng(3);
  for (const auto& grid : {WaveGrid{Geometry::periodic, 1, 20.0, 512}, WaveGrid{Geometry::radial, 2, 20.0, 512},
                           WaveGrid{Geometry::radial, 3, 20.0, 512}}) {
    const auto prm = params(grid.dim, 3.0, grid.dim == 3 ? 4.0 : 5.0, 0.8);
    Propagator prop(grid, prm);
    auto psi = gaussian_wave(grid, 1.3, 1.5).values;
    for (std::size_t j = 0; j < psi.size(); ++j) psi[j] *= std::polar(1.0, 0.3 * grid.coord(j));
    if (grid.geometry == Geometry::radial) psi.back() = 0.0;
    const auto start = psi;
    FieldMeasures m(grid);
    const double m0 = m.mass2(psi);
    for (int i = 0; i < 50; ++i) prop.step(psi, 1e-3);
    EXPECT_NEAR(m.mass2(psi), m0, 1e-12 * m0) << "N=" << grid.dim;
    for (int i = 0; i < 50; ++i) prop.step(psi, -1e-3);
    EXPECT_LT(l2_diff(psi, start, m), 1e-10 * std::sqrt(m0)) << "N=" << grid.dim;
  }
}

// Errors at T against a fine reference shrink by 4 per halving of dt.
TEST(Propagator, StrangSplittingIsSecondOrder) {
  const auto prm = params(1, 3.0, 8.0, 2.0);
  const WaveGrid grid{Geometry::periodic, 1, 20.0, 1024};
  const auto u = gaussian_wave(grid, 1.0, 1.0);
  const double T = 0.2;
  const auto ref = evolve(u, prm, fixed_step(T / 1600, T)).final_state.values;
  FieldMeasures m(grid);
  std::vector<double> err;
  for (int n : {25, 50, 100}) err.push_back(l2_diff(evolve(u, prm, fixed_step(T / n, T)).final_state.values, ref, m));
  for (std::size_t i = 1; i < err.size(); ++i) EXPECT_NEAR(std::log2(err[i - 1] / err[i]), 2.0, 0.1) << i;
}

TEST(Conservation, GaussianRunAndVirialIdentity) {
  const auto prm = params(1, 3.0, 8.0, 1.0);
  const WaveGrid grid{Geometry::periodic, 1, 20.0, 2048};
  const auto u = gaussian_wave(grid, 0.8, 1.2);
  auto opt = fixed_step(1e-3, 1.0);
  opt.sample_every = 10;
  const auto tr = evolve(u, prm, opt);
  EXPECT_EQ(tr.outcome, Outcome::Global);
  EXPECT_LT(tr.mass_drift(), 1e-10);
  EXPECT_LT(tr.energy_drift(), 1e-5);
  const auto rep = virial_check(tr);
  EXPECT_GT(rep.samples, 50u);
  EXPECT_LT(rep.max_rel, 1e-3);
}

TEST(Conservation, RadialGeometryKeepsMassAndEnergy) {
  for (int n = 2; n <= 3; ++n) {
    const auto prm = params(n, 3.0, n == 3 ? 10.0 / 3.0 : 4.0, -0.5);
    const WaveGrid grid{Geometry::radial, n, 15.0, 2048};
    const auto tr = evolve(gaussian_wave(grid, 0.7, 1.5), prm, fixed_step(1e-3, 0.5));
    EXPECT_EQ(tr.outcome, Outcome::Global) << tr.diagnostics;
    EXPECT_LT(tr.mass_drift(), 1e-10) << "N=" << n;
    EXPECT_LT(tr.energy_drift(), 1e-4) << "N=" << n;
    EXPECT_LT(virial_check(tr).max_rel, 1e-2) << "N=" << n;
  }
}

TEST(Evolve, RejectsBadOptions) {
  const auto prm = params(1, 3.0, 8.0, 1.0);
  const WaveGrid grid{Geometry::periodic, 1, 20.0, 256};
  const auto u = gaussian_wave(grid, 1.0, 1.0);
  EXPECT_THROW(evolve(u, prm, fixed_step(0.0, 1.0)), Error);
  EXPECT_THROW(evolve(u, prm, fixed_step(1e-3, -1.0)), Error);
  EXPECT_THROW(evolve(u, params(2, 3.0, 8.0, 1.0), fixed_step(1e-3, 1.0)), Error);
  EXPECT_THROW((WaveGrid{Geometry::periodic, 1, 20.0, 300}.validate()), Error);
  EXPECT_THROW((WaveGrid{Geometry::radial, 1, 20.0, 256}.validate()), Error);
}

class MixedDatum : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    prm_ = new ModelParams(params(1, 3.0, 8.0, kMuMixed));
    gn_ = new GNPair(gn_pair(*prm_));
    const auto hat = solve_prescribed_mass(*prm_, Branch::MountainPass, *gn_);
    level_ = hat.energy_level;
    hat_ = new WaveField(wave_from_radial(hat.profile, stationary_wave_grid(1, hat.lambda, 2048)));
    normalize_mass(*hat_, prm_->a);
  }
  static void TearDownTestSuite() {
    delete prm_;
    delete gn_;
    delete hat_;
  }
  static inline ModelParams* prm_ = nullptr;
  static inline GNPair* gn_ = nullptr;
  static inline WaveField* hat_ = nullptr;
  static inline double level_ = 0;
};

// t_u of s * u-hat is -s, and E(s * u-hat) < E(u-hat) for s != 0.
TEST_F(MixedDatum, ScalingsOfMountainPassArePredictedBySide) {
  for (double s : {-0.4, -0.1, 0.1, 0.4}) {
    const auto d = classify_datum(dilate(*hat_, s), *prm_, *gn_, level_);
    ASSERT_TRUE(d.t_u) << d.reason;
    EXPECT_NEAR(*d.t_u, -s, 2e-3) << s;
    EXPECT_LT(d.energy, level_);
    EXPECT_EQ(d.prediction, s < 0 ? Prediction::Global : Prediction::BlowUp) << s;
    EXPECT_EQ(d.pohozaev < 0.0, s > 0.0) << s;
  }
}

TEST_F(MixedDatum, NoPredictionCases) {
  // at or above the level
  EXPECT_EQ(classify_datum(*hat_, *prm_, *gn_, level_).prediction, Prediction::NoPrediction);
  EXPECT_EQ(classify_datum(dilate(*hat_, 0.4), *prm_, *gn_, level_ - 10.0).prediction, Prediction::NoPrediction);
  // mass condition violated
  auto heavy = params(1, 3.0, 8.0, 40.0);
  EXPECT_EQ(classify_datum(*hat_, heavy, *gn_, 1e9).prediction, Prediction::NoPrediction);
  // no established classifier
  const auto sub = params(1, 3.0, 5.0, 1.0);
  const auto d = classify_datum(*hat_, sub, gn_pair(sub), 1e9);
  EXPECT_EQ(d.prediction, Prediction::NoPrediction);
  EXPECT_NE(d.reason.find("no established classifier"), std::string::npos);
}

TEST_F(MixedDatum, OutwardScalingBlowsUpInwardStaysGlobal) {
  EvolveOptions opt;
  opt.dt = 1e-3;
  opt.T = 1.0;
  const auto up = prediction_experiment(dilate(*hat_, 0.3), *prm_, *gn_, level_, opt);
  EXPECT_EQ(up.trace.outcome, Outcome::BlowUp) << up.trace.diagnostics;
  ASSERT_TRUE(up.agree);
  EXPECT_TRUE(*up.agree);
  EXPECT_GE(up.trace.signals.size(), 2u);
  ASSERT_TRUE(up.trace.blowup_time);
  EXPECT_LT(*up.trace.blowup_time, 1.0);

  opt.T = 0.5;
  const auto down = prediction_experiment(dilate(*hat_, -0.3), *prm_, *gn_, level_, opt);
  EXPECT_EQ(down.trace.outcome, Outcome::Global) << down.trace.diagnostics;
  ASSERT_TRUE(down.agree);
  EXPECT_TRUE(*down.agree);
}

TEST(Orbital, DistanceIgnoresPhaseAndTranslation) {
  const WaveGrid grid{Geometry::periodic, 1, 20.0, 1024};
  FieldMeasures m(grid);
  const auto g = gaussian_wave(grid, 1.0, 1.0);
  const auto moved = gaussian_wave(grid, 1.0, 1.0, 2.5);
  std::vector<cplx> psi(moved.values);
  for (auto& v : psi) v *= std::polar(1.0, 0.7);
  const auto d = orbital_distance(psi, g.values, m);
  // the shift search is on grid points; 2.5 is a multiple of h = 40/1024
  EXPECT_LT(d.distance, 1e-10);
  EXPECT_NEAR(std::abs(d.shift), 2.5, 1e-12);
  EXPECT_NEAR(std::abs(std::remainder(d.theta, 2 * std::numbers::pi)), 0.7, 1e-10);
  EXPECT_NEAR(orbital_distance(g.values, g.values, m).distance, 0.0, 1e-7);
}

TEST(Orbital, PerturbationKeepsMassAndSize) {
  const WaveGrid grid{Geometry::periodic, 1, 20.0, 1024};
  FieldMeasures m(grid);
  const auto base = cubic_soliton(grid);
  const double a = std::sqrt(m.mass2(base.values));
  const double h1 = h1_norm(base.values, m);
  std::mt19937_64 rng(17);
  for (int i = 0; i < 5; ++i) {
    const auto p = perturb(base, 1e-2, a, rng);
    EXPECT_NEAR(std::sqrt(m.mass2(p.values)), a, 1e-12);
    const double rel = orbital_distance(p.values, base.values, m).distance / h1;
    EXPECT_GT(rel, 1e-4);
    EXPECT_LT(rel, 2e-2);
  }
}

TEST(Orbital, UnperturbedStabilityRunStaysOnTheOrbit) {
  const auto prm = params(1, 3.0, 4.0, 0.0, 2.0);
  const auto gs = solve_prescribed_mass(prm, Branch::Unique, gn_pair(prm));
  const auto rep = stability_experiment(gs, prm, 0.0, 2.0, 1, 1);
  ASSERT_EQ(rep.trials.size(), 1u);
  EXPECT_LT(rep.trials[0].initial_distance, 1e-12);
  EXPECT_LT(rep.max_distance, 1e-4);
  EXPECT_FALSE(rep.blowup_seen);
}
