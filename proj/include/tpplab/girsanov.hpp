#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tpplab/committor.hpp"
#include "tpplab/flux.hpp"
#include "tpplab/integrator.hpp"

namespace tpp {

enum class IntegralForm { Direct, Alternative };

// log Z_tau of one path without the unknown shift log(nu / mu).
// Invariant: log_z_shifted == log_m_over_flux + log_q_tau - integral_term.
struct LogWeight {
  double log_z_shifted = 0.0;
  double log_q_tau = 0.0;
  double log_m_over_flux = 0.0;  // log m(Y_0) - log(grad q . n e^{-U/eps})(Y_0)
  double integral_term = 0.0;
};

LogWeight log_weight(const PathRecord& record, const CommittorModel& committor,
                     const FluxSampler& flux, IntegralForm form = IntegralForm::Alternative);

struct WeightedEnsemble {
  std::vector<PathRecord> records;
  std::vector<LogWeight> log_weights;
  // Of the importance weights exp(-log_z_shifted); in [1, n].
  double effective_sample_size = 0.0;
};

WeightedEnsemble weight_ensemble(std::vector<PathRecord> records, const CommittorModel& committor,
                                 const FluxSampler& flux,
                                 IntegralForm form = IntegralForm::Alternative);

double log_sum_exp(const std::vector<double>& values);
// (sum e^l)^2 / sum e^{2l}, evaluated with max subtraction.
double effective_sample_size(const std::vector<double>& log_weights);

struct ImportanceEstimate {
  double estimate = 0.0;
  double se = 0.0;  // jackknife
  double ess = 0.0;
  bool low_ess = false;  // ess < 10
};

// Experimental. Self-normalized estimate of the exact-process expectation of
// an observable from approximate paths, weighting path k by 1 / Z_tau.
ImportanceEstimate importance_estimate(const WeightedEnsemble& ensemble,
                                       const std::function<double(const PathRecord&)>& observable);

struct LogEstimate {
  double value = 0.0;
  double se = 0.0;  // delta method
};

// Experimental. log(nu / mu) as log mean exp(-log_z_shifted) over paths of
// the approximate process.
LogEstimate log_nu_over_mu(const WeightedEnsemble& ensemble);

// Integral of Lq/q along a stored path through a reference factor S, with
// w = log(q / S) and the Ito sum taken against the applied noise
// displacements. Needs record.states; reproduces record.functional_alt when S
// is the simulator's reference factor and functional_direct when S = q.
double alternative_integral(const PathRecord& record, const CommittorModel& committor,
                            const CommittorModel& reference, double drift_cap = 4.0);

struct MartingalePoint {
  double t = 0.0;  // +inf stands for tau
  double mean = 0.0;
  double se = 0.0;
};

// Test-only: E_Q[Z_{t ^ tau}] for paths of the process driven by `exact`,
// started from exact_flux. log(nu / mu) comes from the two flux normalizers.
// Grid times are snapped down to the step grid. Path i uses the same stream
// addressing as simulate_ensemble (round 0).
std::vector<MartingalePoint> martingale_check(const CommittorModel& exact,
                                              const FluxSampler& exact_flux,
                                              const CommittorModel& approx,
                                              const FluxSampler& approx_flux,
                                              const std::vector<double>& t_grid, int n_paths,
                                              const TppOptions& options, std::uint64_t seed);

}  // namespace tpp
