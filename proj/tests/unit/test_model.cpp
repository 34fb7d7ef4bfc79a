#include <gtest/gtest.h>

#include <cmath>

#include "tpplab/error.hpp"
#include "tpplab/model.hpp"
#include "tpplab/rng.hpp"

using namespace tpp;

namespace {

// Central-difference gradient of the energy.
Vec fd_gradient(const PotentialModel& m, const Vec& x, double h = 1e-5) {
  Vec g(m.dim());
  for (int i = 0; i < m.dim(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (m.energy(xp) - m.energy(xm)) / (2 * h);
  }
  return g;
}

Mat fd_hessian(const PotentialModel& m, const Vec& x, double h = 1e-5) {
  Mat H;
  for (int j = 0; j < m.dim(); ++j) {
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Vec gp = m.gradient(xp), gm = m.gradient(xm);
    for (int i = 0; i < m.dim(); ++i) H(i, j) = (gp[i] - gm[i]) / (2 * h);
  }
  return H;
}

}  // namespace

TEST(DoubleWell1D, EnergyAtMinimumAndBarrier) {
  const auto m = make_double_well_1d(1.0, 0.5);
  EXPECT_EQ(m.energy(Vec{1.0}), 0.0);
  EXPECT_EQ(m.energy(Vec{0.0}), 1.0);
  EXPECT_EQ(m.epsilon(), 0.5);
}

TEST(DoubleWell1D, GradientMatchesFiniteDifference) {
  const auto m = make_double_well_1d(2.0, 0.25);
  const Vec x{0.5};
  EXPECT_NEAR(m.gradient(x)[0], fd_gradient(m, x)[0], 1e-6);
}

TEST(DoubleWell2D, EnergyValues) {
  const auto m = make_double_well_2d(1.0, 1.0, 0.5);
  EXPECT_EQ(m.energy(Vec{-1.0, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(m.energy(Vec{0.0, 1.0}), 1.5);
}

TEST(DoubleWell2D, GradientMatchesFiniteDifference) {
  const auto m = make_double_well_2d(1.0, 2.0, 0.5);
  const Vec x{0.3, -0.4};
  const Vec g = m.gradient(x), fd = fd_gradient(m, x);
  EXPECT_NEAR(g[0], fd[0], 1e-6);
  EXPECT_NEAR(g[1], fd[1], 1e-6);
}

TEST(Potentials, RejectNonPositiveInputs) {
  EXPECT_THROW(make_double_well_1d(0.0, 0.5), ConfigError);
  EXPECT_THROW(make_double_well_1d(1.0, -0.5), ConfigError);
  EXPECT_THROW(make_double_well_2d(1.0, 0.0, 0.5), ConfigError);
  EXPECT_THROW(make_double_well_2d(-1.0, 1.0, 0.5), ConfigError);
  EXPECT_THROW(make_harmonic(1, 1.0, 0.0), ConfigError);
}

// Property: analytic gradient, Hessian and third derivatives agree with
// finite differences at random points.
TEST(Potentials, DerivativesAgreeWithFiniteDifferencesAtRandomPoints) {
  const PotentialModel models[] = {make_double_well_1d(1.3, 0.5),
                                   make_double_well_2d(0.7, 1.9, 0.3), make_harmonic(3, 2.0, 1.0),
                                   make_flat(2, 0.5)};
  NormalStream rng(7, stream_word(Stream::Test), 0);
  for (const auto& m : models) {
    for (int trial = 0; trial < 50; ++trial) {
      Vec x(m.dim());
      for (int i = 0; i < m.dim(); ++i) x[i] = 1.5 * rng.normal();
      const Vec g = m.gradient(x), fd = fd_gradient(m, x);
      for (int i = 0; i < m.dim(); ++i)
        EXPECT_LE(std::abs(g[i] - fd[i]), 1e-5 * std::max(1.0, std::abs(g[i])));
      const Mat H = m.hessian(x), fdH = fd_hessian(m, x);
      for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j)
          EXPECT_NEAR(H(i, j), fdH(i, j), 1e-5 * std::max(1.0, std::abs(H(i, j))));
      for (int k = 0; k < m.dim(); ++k) {
        Vec xp = x, xm = x;
        xp[k] += 1e-5;
        xm[k] -= 1e-5;
        const Mat Hp = m.hessian(xp), Hm = m.hessian(xm);
        for (int i = 0; i < m.dim(); ++i)
          for (int j = 0; j < m.dim(); ++j)
            EXPECT_NEAR(m.third(x, i, j, k), (Hp(i, j) - Hm(i, j)) / 2e-5,
                        1e-4 * std::max(1.0, std::abs(m.third(x, i, j, k))));
      }
    }
  }
}

TEST(Geometry, BoundaryPointInterval) {
  const RegionGeometry g(RegionKind::Interval1D, 1, -1.0, 1.0);
  const auto b = boundary_geometry(g, Vec{-1.0});
  EXPECT_EQ(b.T, 0.0);
  EXPECT_EQ(b.n[0], 1.0);
}

TEST(Geometry, PlanarProjection) {
  const RegionGeometry g(RegionKind::HalfspacePlanar, 2, -1.0, 1.0, 0);
  const auto b = boundary_geometry(g, Vec{0.0, 3.0});
  EXPECT_EQ(b.rho[0], -1.0);
  EXPECT_EQ(b.rho[1], 3.0);
  EXPECT_EQ(b.h, 1.0);
}

TEST(Geometry, ReconstructionIdentityIsExact) {
  const RegionGeometry g1(RegionKind::Interval1D, 1, -1.0, 1.0);
  const auto b = boundary_geometry(g1, Vec{-0.5});
  EXPECT_EQ(b.rho[0] + b.h * b.n[0], -0.5);

  const RegionGeometry g2(RegionKind::HalfspacePlanar, 3, -0.7, 1.2, 1);
  NormalStream rng(3, stream_word(Stream::Test), 1);
  for (int trial = 0; trial < 200; ++trial) {
    Vec x{rng.normal(), -0.7 + 1.9 * rng.uniform(), rng.normal()};
    const auto bg = boundary_geometry(g2, x);
    const Vec recon = bg.rho + bg.h * bg.n;
    for (int i = 0; i < 3; ++i) EXPECT_EQ(recon[i], x[i]);
    EXPECT_GT(bg.T, 0.0);
  }
}

TEST(Geometry, BoundaryPropertiesOnGrid) {
  const RegionGeometry g(RegionKind::HalfspacePlanar, 2, -1.0, 1.0, 0);
  for (int j = -20; j <= 20; ++j) {
    const Vec z{-1.0, 0.25 * j};
    const auto b = boundary_geometry(g, z);
    EXPECT_EQ(b.T, 0.0);
    EXPECT_GT(dot(b.grad_T, b.n), 0.0);
    // grad T = |grad T| n componentwise.
    for (int i = 0; i < 2; ++i) EXPECT_EQ(b.grad_T[i], norm(b.grad_T) * b.n[i]);
  }
  for (int i = 1; i < 20; ++i) {
    const Vec x{-1.0 + 0.1 * i, 0.3};
    EXPECT_GT(boundary_geometry(g, x).T, 0.0);
  }
}

TEST(Geometry, InteriorOfAOrBIsDomainError) {
  const RegionGeometry g(RegionKind::Interval1D, 1, -1.0, 1.0);
  EXPECT_THROW(boundary_geometry(g, Vec{-1.5}), DomainError);
  EXPECT_THROW(boundary_geometry(g, Vec{1.01}), DomainError);
  EXPECT_NO_THROW(boundary_geometry(g, Vec{1.0}));
}

TEST(Geometry, RejectsInvertedRegions) {
  EXPECT_THROW(RegionGeometry(RegionKind::Interval1D, 1, 1.0, -1.0), ConfigError);
  EXPECT_THROW(RegionGeometry(RegionKind::Interval1D, 1, 0.0, 0.0), ConfigError);
  EXPECT_THROW(RegionGeometry(RegionKind::HalfspacePlanar, 2, -1.0, 1.0, 2), ConfigError);
}

TEST(Generator, ConstantIsAnnihilated) {
  const auto m = make_double_well_1d(1.0, 0.5);
  EXPECT_EQ(apply_generator(m, Vec{0.0}, 0.0, Vec{0.3}).value, 0.0);
}

TEST(Generator, LinearFunctionAtCriticalPoint) {
  const auto m = make_double_well_1d(1.0, 0.5);
  EXPECT_EQ(apply_generator(m, Vec{1.0}, 0.0, Vec{0.0}).value, 0.0);
}

TEST(Generator, QuadraticAtWellMinimum) {
  const auto m = make_double_well_1d(1.0, 0.5);
  // f = x^2 at x = 1: grad f = 2, lap f = 2.
  EXPECT_DOUBLE_EQ(apply_generator(m, Vec{2.0}, 2.0, Vec{1.0}).value, 1.0);
}

TEST(Generator, LinearInArguments) {
  const auto m = make_double_well_2d(1.0, 1.5, 0.4);
  NormalStream rng(11, stream_word(Stream::Test), 2);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec x{rng.normal(), rng.normal()};
    const Vec gf{rng.normal(), rng.normal()}, gg{rng.normal(), rng.normal()};
    const double lf = rng.normal(), lg = rng.normal();
    const double a = rng.normal(), b = rng.normal();
    const double lhs = apply_generator(m, a * gf + b * gg, a * lf + b * lg, x).value;
    const double rhs =
        a * apply_generator(m, gf, lf, x).value + b * apply_generator(m, gg, lg, x).value;
    EXPECT_NEAR(lhs, rhs, 1e-12 * (1.0 + std::abs(lhs)));
  }
}

TEST(Generator, DimensionMismatchIsRejected) {
  const auto m = make_double_well_2d(1.0, 1.0, 0.5);
  EXPECT_THROW(apply_generator(m, Vec{1.0}, 0.0, Vec{0.0, 0.0}), DomainError);
  EXPECT_THROW(apply_generator(m, Vec{1.0, 0.0}, 0.0, Vec{0.0}), DomainError);
}
