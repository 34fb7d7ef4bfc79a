#pragma once

// Shared problem setups for the statistical tests: the 1D double well
// U = (x^2 - 1)^2 at eps = 0.5 with A = (-inf, -1], B = [1, inf).

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "tpplab/committor.hpp"
#include "tpplab/flux.hpp"
#include "tpplab/oracle.hpp"

namespace tpp::fixtures {

inline const RegionGeometry& interval() {
  static const RegionGeometry g(RegionKind::Interval1D, 1, -1.0, 1.0);
  return g;
}

inline const PotentialModel& double_well() {
  static const PotentialModel p = make_double_well_1d(1.0, 0.5);
  return p;
}

inline const QuadratureCommittor1D& oracle() {
  static const std::unique_ptr<QuadratureCommittor1D> o =
      exact_committor_1d(double_well(), interval(), 256);
  return *o;
}

inline const CommittorModel& exact_model() {
  static const CommittorModel m = oracle().as_model();
  return m;
}

// Exact committor times exp(a1 P1 + a2 P2) in the quadratic coefficient.
// theta = (w0, exact w2 weight, a1, a2).
inline CommittorModel distorted_model(double a1, double a2) {
  const auto& g = interval();
  Basis w0{BasisFunction::constant(1)};
  Basis w2{oracle().w2_basis_function(), BasisFunction::legendre(1, 0, 1, g.a_A(), g.a_B()),
           BasisFunction::legendre(1, 0, 2, g.a_A(), g.a_B())};
  return CommittorModel(double_well(), g, std::move(w0), std::move(w2),
                        {exact_model().theta()[0], 1.0, a1, a2}, true);
}

// Calibration family for training: no boundary term, w2 spanned by the exact
// quadratic coefficient and P1. theta = (1, 0) reproduces q up to scale.
inline CommittorModel training_family(double c_exact = 0.0, double c_linear = 0.0) {
  const auto& g = interval();
  Basis w2{oracle().w2_basis_function(), BasisFunction::legendre(1, 0, 1, g.a_A(), g.a_B())};
  return CommittorModel(double_well(), g, {}, std::move(w2), {c_exact, c_linear}, true);
}

// m = grad q . n e^{-U/eps} of the given committor, optionally scaled.
inline FluxSampler model_flux(const CommittorModel& m, double log_scale = 0.0) {
  return FluxSampler::make(m.geometry(), [&m, log_scale](const Vec& z) {
    return m.log_boundary_flux(z) + log_scale;
  });
}

// log nu of the exact committor from the oracle's boundary derivative.
inline double log_nu() {
  const auto& g = interval();
  return std::log(oracle().dq_at(g.a_A())) -
         double_well().energy(Vec{g.a_A()}) / double_well().epsilon();
}

struct Moments {
  double mean = 0.0, var = 0.0, se = 0.0;
};

inline Moments moments(const std::vector<double>& xs) {
  Moments m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  for (double x : xs) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(xs.size() - 1);
  m.se = std::sqrt(m.var / static_cast<double>(xs.size()));
  return m;
}

inline double median_abs(std::vector<double> xs) {
  for (double& x : xs) x = std::abs(x);
  const auto mid = xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  return *mid;
}

}  // namespace tpp::fixtures
