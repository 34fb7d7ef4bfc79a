#pragma once

#include <cstdint>
#include <vector>

#include "tpplab/girsanov.hpp"
#include "tpplab/oracle.hpp"

namespace tpp {

// Empirical stand-ins for the moment conditions behind a finite-variance
// entropy estimate. Reported, never enforced.
struct TailDiagnostics {
  double kurtosis = 0.0;         // excess kurtosis of the per-path summand
  double max_over_median = 0.0;  // max |x - median| / median |x - median|
  double tau_m2_half = 0.0;      // E tau^2 on the first half of the paths
  double tau_m2_full = 0.0;      // E tau^2 on all paths
  bool ok = true;
};

// Mean of log_z_shifted over paths drawn from the committor's own law:
// E[log m/(grad q . n e^{-U/eps})(Y_0) + log q(Y_tau) - int Lq/q].
struct EntropyTerm {
  double i_hat = 0.0;
  double se = 0.0;
  int n = 0;
  TailDiagnostics tails;
};

EntropyTerm entropy_term(const WeightedEnsemble& ensemble);

// Bennett acceptance ratio for log(mu_tilde / mu_bar). Inputs are the log
// density differences d = log m_tilde - log m_bar at points drawn from
// m_tilde / mu_tilde and from m_bar / mu_bar respectively.
struct BarResult {
  double log_ratio = 0.0;
  double se = 0.0;
  int n_tilde = 0;
  int n_bar = 0;
  bool converged = false;
  int iterations = 0;
  double overlap = 0.0;  // effective number of samples in the overlap region
};

BarResult bar_ratio(const std::vector<double>& d_tilde, const std::vector<double>& d_bar,
                    double tol = 1e-12, int max_iter = 200);

// Draws n_tilde points from m_tilde and n_bar from m_bar on the Bar stream of
// seed (rounds 0 and 1) and solves the BAR equation.
BarResult bar_ratio(const FluxSampler& tilde, const FluxSampler& bar, int n_tilde, int n_bar,
                    std::uint64_t seed);

// delta = D(P_tilde | Q) - D(P_bar | Q) = log_mu_ratio + i_tilde - i_bar with
// log_mu_ratio = log(mu_bar / mu_tilde).
struct SelectionReport {
  double delta = 0.0;
  double se = 0.0;
  double log_mu_ratio = 0.0;
  double i_tilde = 0.0;
  double i_bar = 0.0;
  EntropyTerm tilde;
  EntropyTerm bar;
  BarResult ratio;
  double ess_tilde = 0.0;
  double ess_bar = 0.0;
};

SelectionReport select(const EntropyTerm& tilde, const EntropyTerm& bar, const BarResult& ratio);

struct SelectionSettings {
  int n_paths = 1000;
  int bar_samples = 10000;
  TppOptions sim;
  IntegralForm form = IntegralForm::Alternative;
};

// Both ensembles and the BAR samples use seeds derived from `seed` with
// distinct tags, so the three estimates are independent.
SelectionReport select(const CommittorModel& tilde, const FluxSampler& flux_tilde,
                       const CommittorModel& bar, const FluxSampler& flux_bar,
                       const SelectionSettings& settings, std::uint64_t seed);

// log nu = log int grad q . n e^{-U/eps} dS by boundary quadrature of the
// oracle gradient.
double oracle_log_nu(const ExactCommittorOracle& oracle, const PotentialModel& potential,
                     double extent = 4.0, int n_nodes = 1025);

struct KlEstimate {
  double d_kl = 0.0;
  double se = 0.0;
  double log_nu = 0.0;
  double log_mu = 0.0;
  double boundary_term = 0.0;  // E_{m/mu} log(m / (grad q . n e^{-U/eps})) by quadrature
  double path_term = 0.0;      // E[log q(Y_tau) - int Lq/q]
};

// Test-only absolute relative entropy D(P | Q) of the approximate law.
KlEstimate oracle_kl(const CommittorModel& committor, const FluxSampler& flux, double log_nu,
                     const SelectionSettings& settings, std::uint64_t seed);

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);
// Asymptotic critical value sqrt(-log(alpha / 2) / 2) sqrt((n + m) / (n m)).
double ks_critical_value(double alpha, std::size_t n, std::size_t m);

}  // namespace tpp
