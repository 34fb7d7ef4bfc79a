#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "fixtures.hpp"
#include "tpplab/error.hpp"
#include "tpplab/training.hpp"

using namespace tpp;
using namespace tpp::fixtures;

namespace {

std::vector<PathRecord> ensemble(const CommittorModel& m, int n, double dt, std::uint64_t seed) {
  TppOptions o;
  o.dt = dt;
  o.theta_functionals = true;
  return simulate_ensemble(TppSimulator(m, o), flux_theta(m), n, seed);
}

TrainConfig quick_config(std::uint64_t seed) {
  TrainConfig c;
  c.n_paths_per_step = 64;
  c.n_steps = 4;
  c.sim.dt = 2e-3;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(GradientEstimate, RejectsTooFewPaths) {
  const auto recs = ensemble(training_family(0.5, 0.3), 1, 2e-3, 1);
  EXPECT_THROW(gradient_estimate(recs), ConfigError);
}

TEST(GradientEstimate, RejectsRecordsWithoutThetaFunctionals) {
  const auto m = training_family(0.5, 0.3);
  const auto recs = simulate_ensemble(TppSimulator(m, TppOptions{}), flux_theta(m), 3, 1);
  EXPECT_THROW(gradient_estimate(recs), ConfigError);
}

TEST(GradientEstimate, NonFiniteAccumulatorNamesThePath) {
  auto recs = ensemble(training_family(0.5, 0.3), 6, 2e-3, 2);
  recs[4].theta_integral[1] = NAN;
  try {
    gradient_estimate(recs);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("path 4"), std::string::npos);
  }
}

TEST(GradientEstimate, MatchesTextbookCovariance) {
  const auto recs = ensemble(training_family(0.5, 0.3), 50, 2e-3, 3);
  const auto g = gradient_estimate(recs);
  const double n = static_cast<double>(recs.size());
  for (std::size_t j = 0; j < 2; ++j) {
    double sa = 0.0, sb = 0.0, sab = 0.0;
    for (const auto& r : recs) {
      const double a = r.log_q_at_tau - r.functional_direct;
      const double b = r.theta_log_q_tau[j] - r.theta_integral[j];
      sa += a, sb += b, sab += a * b;
    }
    EXPECT_NEAR(g.g[j], (sab - sa * sb / n) / (n - 1.0), 1e-10 * (1.0 + std::abs(g.g[j])));
    EXPECT_NEAR(g.k_n[j], sb / n, 1e-12 * (1.0 + std::abs(sb / n)));
  }
}

// Doubling the sample keeps the centred sum and raises the divisor from
// n - 1 to 2n - 1.
TEST(GradientEstimate, DuplicatingPathsScalesByFiniteSampleFactor) {
  const auto recs = ensemble(training_family(0.5, 0.3), 40, 2e-3, 4);
  auto doubled = recs;
  doubled.insert(doubled.end(), recs.begin(), recs.end());
  const auto g = gradient_estimate(recs), g2 = gradient_estimate(doubled);
  const double n = static_cast<double>(recs.size());
  for (std::size_t j = 0; j < 2; ++j)
    EXPECT_NEAR(g2.g[j], g.g[j] * 2.0 * (n - 1.0) / (2.0 * n - 1.0), 1e-12 * std::abs(g.g[j]));
  EXPECT_DOUBLE_EQ(g2.j_n, g.j_n);
}

TEST(GradientEstimate, ExactMemberHasZeroMeanGradient) {
  const auto star = training_family(1.0, 0.0);
  std::vector<std::vector<double>> comps(2);
  for (std::uint64_t k = 0; k < 10; ++k) {
    const auto g = gradient_estimate(ensemble(star, 100, 2e-3, 100 + k));
    for (std::size_t j = 0; j < 2; ++j) comps[j].push_back(g.g[j]);
  }
  for (std::size_t j = 0; j < 2; ++j) {
    const Moments m = moments(comps[j]);
    EXPECT_LE(std::abs(m.mean), 3.0 * m.se + 1e-9) << "component " << j;
  }
}

TEST(GradientEstimate, ScoreHasZeroMean) {
  const auto q = distorted_model(0.5, -0.3);
  const auto flux = flux_theta(q);
  const auto grad_mu = grad_theta_log_mu(q, flux);
  EXPECT_GT(std::abs(grad_mu[0]), 0.5);  // the w0 constant moves mu
  const auto scores = path_scores(ensemble(q, 1000, 2.5e-4, 5), grad_mu);
  for (std::size_t j = 0; j < grad_mu.size(); ++j) {
    std::vector<double> s;
    for (const auto& v : scores) s.push_back(v[j]);
    const Moments m = moments(s);
    EXPECT_LE(std::abs(m.mean), 3.0 * m.se) << "component " << j;
  }
}

TEST(FluxTheta, PointBoundaryNormalizerIsTheDensity) {
  const auto q = distorted_model(0.5, -0.3);
  const auto f = flux_theta(q);
  const Vec z{interval().a_A()};
  EXPECT_TRUE(f.is_point());
  EXPECT_DOUBLE_EQ(f.log_mu(), q.log_boundary_flux(z));
  EXPECT_DOUBLE_EQ(f.log_density(z), q.log_boundary_flux(z));
}

TEST(FluxTheta, ScalingTheCommittorLeavesTheLawUnchanged) {
  const RegionGeometry g(RegionKind::HalfspacePlanar, 2, -1.0, 1.0, 0);
  const PotentialModel u = make_double_well_2d(1.0, 1.0, 0.5);
  const Basis w0{BasisFunction::constant(2), BasisFunction::gaussian(Vec{-1.0, 0.5}, 1.0)};
  const Basis w2{BasisFunction::legendre(2, 1, 2, -4.0, 4.0)};
  const CommittorModel base(u, g, w0, w2, {0.0, 0.7, 0.2}, true);
  const CommittorModel scaled = base.with_theta({std::log(3.0), 0.7, 0.2});
  const auto fb = flux_theta(base), fs = flux_theta(scaled);
  EXPECT_NEAR(fs.log_mu() - fb.log_mu(), std::log(3.0), 1e-12);
  for (double y : {-2.0, 0.0, 1.3}) {
    const Vec z{-1.0, y};
    EXPECT_NEAR(fs.log_density(z) - fs.log_mu(), fb.log_density(z) - fb.log_mu(), 1e-12);
  }
  for (double u01 : {0.1, 0.5, 0.9}) EXPECT_NEAR(fs.point_at(u01)[1], fb.point_at(u01)[1], 1e-12);
}

TEST(FluxTheta, PlanarTrapezoidAgreesWithSimpson) {
  const RegionGeometry g(RegionKind::HalfspacePlanar, 2, -1.0, 1.0, 0);
  const PotentialModel u = make_double_well_2d(1.0, 1.0, 0.5);
  const Basis w0{BasisFunction::constant(2), BasisFunction::gaussian(Vec{-1.0, 0.5}, 1.0)};
  const CommittorModel m(u, g, w0, {}, {0.3, -0.8}, true);
  const auto f = flux_theta(m);
  EXPECT_NEAR(std::exp(f.log_mu()) / f.mu_simpson(), 1.0, 1e-6);
}

TEST(GradThetaLogMu, MatchesFiniteDifferenceOfNormalizer) {
  const RegionGeometry g(RegionKind::HalfspacePlanar, 2, -1.0, 1.0, 0);
  const PotentialModel u = make_double_well_2d(1.0, 1.0, 0.5);
  const Basis w0{BasisFunction::constant(2), BasisFunction::gaussian(Vec{-1.0, 0.5}, 1.0)};
  const CommittorModel m(u, g, w0, {}, {0.3, -0.8}, true);
  const auto grad = grad_theta_log_mu(m, flux_theta(m));
  const double h = 1e-5;
  for (std::size_t j = 0; j < 2; ++j) {
    auto p = m.theta(), n = m.theta();
    p[j] += h, n[j] -= h;
    const double fd = (flux_theta(m.with_theta(p)).log_mu() - flux_theta(m.with_theta(n)).log_mu()) / (2 * h);
    EXPECT_NEAR(grad[j], fd, 1e-7);
  }
  EXPECT_NEAR(grad[0], 1.0, 1e-12);  // d log mu / d(log scale)
}

TEST(SgdTrain, ZeroLearningRateKeepsThetaFlat) {
  auto cfg = quick_config(7);
  cfg.lr0 = 0.0;
  const auto family = training_family();
  TrainState s = initial_state(family);
  sgd_train(family, s, cfg);
  ASSERT_EQ(s.history.size(), 4u);
  for (const auto& r : s.history) {
    EXPECT_EQ(r.theta, family.theta());
    EXPECT_FALSE(r.rejected);
    EXPECT_EQ(r.lr, 0.0);
  }
}

TEST(SgdTrain, HistoryIsMonotoneAndDeterministic) {
  const auto family = training_family();
  auto cfg = quick_config(8);
  cfg.probe_every = 2;
  cfg.probe_paths = 64;
  cfg.probe_bar_samples = 10;
  TrainState a = initial_state(family), b = initial_state(family);
  int calls = 0;
  sgd_train(family, a, cfg, {[&](const TrainRecord&) { ++calls; }, nullptr});
  sgd_train(family, b, cfg);
  EXPECT_EQ(calls, 4);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].step, static_cast<int>(i));
    EXPECT_EQ(a.history[i].theta, b.history[i].theta);
    EXPECT_EQ(a.history[i].j_n, b.history[i].j_n);
  }
  ASSERT_EQ(a.probes.size(), 2u);
  EXPECT_EQ(a.probes[1].step, 4);
  EXPECT_EQ(a.probes[1].delta_vs_init, b.probes[1].delta_vs_init);
  EXPECT_NE(a.history.back().theta, family.theta());

  TrainState c = initial_state(family);
  cfg.seed = 9;
  sgd_train(family, c, cfg);
  EXPECT_NE(c.history.back().theta, a.history.back().theta);
}

TEST(SgdTrain, ResumingFromCheckpointContinuesTheRun) {
  const auto family = training_family();
  const auto cfg = quick_config(10);
  TrainState full = initial_state(family);
  sgd_train(family, full, cfg);

  auto half_cfg = cfg;
  half_cfg.n_steps = 2;
  TrainState half = initial_state(family);
  sgd_train(family, half, half_cfg);
  const std::string path = (std::filesystem::temp_directory_path() / "tpplab_ckpt_test.bin").string();
  save_checkpoint(path, half, "abc123");
  std::string hash;
  TrainState resumed = load_checkpoint(path, &hash);
  EXPECT_EQ(hash, "abc123");
  EXPECT_EQ(resumed.step, 2);
  EXPECT_EQ(resumed.theta, half.theta);
  EXPECT_EQ(resumed.theta_init, family.theta());
  sgd_train(family, resumed, cfg);
  ASSERT_EQ(resumed.history.size(), 2u);
  EXPECT_EQ(resumed.history.front().step, 2);
  EXPECT_EQ(resumed.theta, full.theta);
  std::remove(path.c_str());
  std::remove((path + ".json").c_str());
}

TEST(SgdTrain, TruncatedCheckpointIsRejected) {
  const std::string path = (std::filesystem::temp_directory_path() / "tpplab_ckpt_bad.bin").string();
  TrainState s = initial_state(training_family());
  save_checkpoint(path, s, "h");
  std::filesystem::resize_file(path, 8);
  EXPECT_THROW(load_checkpoint(path), ConfigError);
  std::remove(path.c_str());
  std::remove((path + ".json").c_str());
}

// Step 1 overshoots to a committor that overflows and is rejected; step 2
// has an infinite learning rate.
TEST(SgdTrain, NonFiniteUpdateAbortsWithHistoryIntact) {
  const auto family = training_family();
  auto cfg = quick_config(11);
  cfg.lr0 = 1e-3;
  cfg.lr_decay = 1e300;
  TrainState s = initial_state(family);
  try {
    sgd_train(family, s, cfg);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("step 2"), std::string::npos);
  }
  ASSERT_EQ(s.history.size(), 2u);
  EXPECT_EQ(s.step, 2);
  EXPECT_TRUE(s.history[1].rejected);
  EXPECT_EQ(s.lr_scale, 0.5);
  EXPECT_EQ(s.theta, s.history[0].theta);
}

TEST(SgdTrain, RejectsInvalidConfiguration) {
  const auto family = training_family();
  TrainState s = initial_state(family);
  auto cfg = quick_config(12);
  cfg.n_paths_per_step = 1;
  EXPECT_THROW(sgd_train(family, s, cfg), ConfigError);
  cfg = quick_config(12);
  cfg.lr0 = -1.0;
  EXPECT_THROW(sgd_train(family, s, cfg), ConfigError);
  s.theta = {1.0};
  EXPECT_THROW(sgd_train(family, s, quick_config(12)), ConfigError);
}
