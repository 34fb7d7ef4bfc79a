#include "tpplab/girsanov.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "tpplab/error.hpp"
#include "tpplab/rng.hpp"

namespace tpp {

namespace {

std::string path_label(std::uint32_t id) {
  std::ostringstream os;
  os << "path " << id;
  return os.str();
}

}  // namespace

LogWeight log_weight(const PathRecord& record, const CommittorModel& committor,
                     const FluxSampler& flux, IntegralForm form) {
  if (!record.complete) throw DomainError("log_weight: " + path_label(record.path_id) + " did not reach B");
  const double log_flux = committor.log_boundary_flux(record.initial_point);
  if (!std::isfinite(log_flux))
    throw InvariantViolation("log_weight: boundary gradient of the committor is not positive at the start of " +
                             path_label(record.path_id));
  LogWeight lw;
  lw.log_q_tau = record.log_q_at_tau;
  lw.log_m_over_flux = flux.log_density(record.initial_point) - log_flux;
  lw.integral_term = form == IntegralForm::Alternative ? record.functional_alt : record.functional_direct;
  lw.log_z_shifted = lw.log_m_over_flux + lw.log_q_tau - lw.integral_term;
  return lw;
}

double log_sum_exp(const std::vector<double>& values) {
  if (values.empty()) return -INFINITY;
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double v : values) s += std::exp(v - top);
  return top + std::log(s);
}

double effective_sample_size(const std::vector<double>& log_weights) {
  if (log_weights.empty()) return 0.0;
  std::vector<double> twice(log_weights.size());
  for (std::size_t i = 0; i < twice.size(); ++i) twice[i] = 2.0 * log_weights[i];
  return std::exp(2.0 * log_sum_exp(log_weights) - log_sum_exp(twice));
}

WeightedEnsemble weight_ensemble(std::vector<PathRecord> records, const CommittorModel& committor,
                                 const FluxSampler& flux, IntegralForm form) {
  WeightedEnsemble ens;
  ens.log_weights.reserve(records.size());
  std::vector<double> importance;
  importance.reserve(records.size());
  for (const PathRecord& r : records) {
    ens.log_weights.push_back(log_weight(r, committor, flux, form));
    importance.push_back(-ens.log_weights.back().log_z_shifted);
  }
  ens.effective_sample_size = effective_sample_size(importance);
  ens.records = std::move(records);
  return ens;
}

ImportanceEstimate importance_estimate(const WeightedEnsemble& ensemble,
                                       const std::function<double(const PathRecord&)>& observable) {
  const std::size_t n = ensemble.records.size();
  if (n < 2) throw ConfigError("importance_estimate: need at least two paths");
  double top = -INFINITY;
  for (const LogWeight& lw : ensemble.log_weights) top = std::max(top, -lw.log_z_shifted);
  std::vector<double> w(n), g(n);
  double sw = 0.0, swg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(-ensemble.log_weights[i].log_z_shifted - top);
    g[i] = observable(ensemble.records[i]);
    if (!std::isfinite(g[i]))
      throw NumericError("importance_estimate: observable not finite on " +
                         path_label(ensemble.records[i].path_id));
    sw += w[i];
    swg += w[i] * g[i];
  }
  ImportanceEstimate out;
  out.estimate = swg / sw;
  // Leave-one-out ratios; a path carrying all the weight leaves 0/0 and is skipped.
  std::vector<double> loo;
  loo.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double rest = sw - w[i];
    if (rest > 0.0) loo.push_back((swg - w[i] * g[i]) / rest);
  }
  double mean = 0.0;
  for (double r : loo) mean += r;
  mean /= static_cast<double>(loo.size());
  double ss = 0.0;
  for (double r : loo) ss += (r - mean) * (r - mean);
  out.se = loo.size() > 1 ? std::sqrt(ss * (static_cast<double>(n) - 1.0) / static_cast<double>(n)) : INFINITY;
  out.ess = ensemble.effective_sample_size;
  out.low_ess = out.ess < 10.0;
  return out;
}

LogEstimate log_nu_over_mu(const WeightedEnsemble& ensemble) {
  const std::size_t n = ensemble.log_weights.size();
  if (n < 2) throw ConfigError("log_nu_over_mu: need at least two paths");
  std::vector<double> l(n);
  for (std::size_t i = 0; i < n; ++i) l[i] = -ensemble.log_weights[i].log_z_shifted;
  const double top = *std::max_element(l.begin(), l.end());
  double m1 = 0.0, m2 = 0.0;
  for (double v : l) {
    const double x = std::exp(v - top);
    m1 += x;
    m2 += x * x;
  }
  m1 /= static_cast<double>(n);
  m2 /= static_cast<double>(n);
  const double var = std::max(0.0, m2 - m1 * m1) * static_cast<double>(n) / static_cast<double>(n - 1);
  return {top + std::log(m1), std::sqrt(var / static_cast<double>(n)) / m1};
}

double alternative_integral(const PathRecord& record, const CommittorModel& committor,
                            const CommittorModel& reference, double drift_cap) {
  if (!record.complete || record.states.size() != static_cast<std::size_t>(record.n_steps) + 1)
    throw ConfigError("alternative_integral: record must be complete with stored states");
  const RegionGeometry& g = committor.geometry();
  const double eps = committor.potential().epsilon();
  const double dt = record.dt;
  const double cap = drift_cap * std::sqrt(2.0 * eps * dt);
  const int a = g.axis();
  const unsigned needs = kNeedValue | kNeedGradient | kNeedGenerator;

  CommittorEvaluation e, s;
  const auto reference_at = [&](const Vec& x) {
    reference.evaluate(x, needs, s);
    if (g.T(x) > 0.0 && !(s.q > 0.0 && std::isfinite(s.w)))
      throw DomainError("alternative_integral: reference factor not positive on " + path_label(record.path_id));
  };

  const std::vector<Vec>& y = record.states;
  committor.evaluate(y[0], needs, e);
  reference_at(y[0]);
  const double w_rel0 = e.w - s.w;
  Vec gw = e.grad_w - s.grad_w;
  double f_prev = s.Lq_over_q - eps * norm2(gw);
  double integral = 0.0, ito = 0.0, w_rel_end = w_rel0;

  const long n = record.n_steps;
  for (long i = 0; i < n; ++i) {
    const Vec drift = tpp_drift_step(committor, y[i], e.grad_log_q, dt, cap);
    const Vec applied_noise = y[i + 1] - y[i] - drift;
    if (i + 1 == n) {
      const double lambda = std::clamp((g.a_B() - y[i][a]) / (y[i + 1][a] - y[i][a]), 0.0, 1.0);
      committor.evaluate(record.y_tau, needs, e);
      reference_at(record.y_tau);
      const Vec gw_end = e.grad_w - s.grad_w;
      integral += 0.5 * lambda * dt * (f_prev + s.Lq_over_q - eps * norm2(gw_end));
      ito += lambda * dot(gw, applied_noise);
      w_rel_end = e.w - s.w;
      break;
    }
    ito += dot(gw, applied_noise);
    committor.evaluate(y[i + 1], needs, e);
    reference_at(y[i + 1]);
    gw = e.grad_w - s.grad_w;
    const double f = s.Lq_over_q - eps * norm2(gw);
    integral += 0.5 * dt * (f_prev + f);
    f_prev = f;
  }
  return w_rel_end - w_rel0 + integral - ito;
}

std::vector<MartingalePoint> martingale_check(const CommittorModel& exact,
                                              const FluxSampler& exact_flux,
                                              const CommittorModel& approx,
                                              const FluxSampler& approx_flux,
                                              const std::vector<double>& t_grid, int n_paths,
                                              const TppOptions& options, std::uint64_t seed) {
  if (n_paths < 2) throw ConfigError("martingale_check: need at least two paths");
  TppOptions opt = options;
  opt.store_states = true;
  opt.store_noise = false;
  opt.theta_functionals = false;
  opt.alternative_integral = false;
  const TppSimulator sim(exact, opt);
  const double log_shift = exact_flux.log_mu() - approx_flux.log_mu();
  const std::vector<Vec> starts = sample_reactive_flux(exact_flux, n_paths, seed, 0);
  const std::size_t nt = t_grid.size();
  const double dt = opt.dt;
  const unsigned needs = kNeedValue | kNeedGenerator;

  std::vector<double> sum(nt * static_cast<std::size_t>(n_paths));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_paths));
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < n_paths; ++i) {
    try {
      const auto idx = static_cast<std::uint32_t>(i);
      const PathRecord rec = sim.run(starts[idx], seed, stream_word(Stream::Path, 0), idx);
      const Vec& y0 = rec.initial_point;
      const double base = log_shift + approx_flux.log_density(y0) - approx.log_boundary_flux(y0);
      const long n = rec.n_steps;
      CommittorEvaluation ea, eq;
      // Running trapezoid of the approximate generator quotient at state j.
      std::vector<double> cum(static_cast<std::size_t>(n) + 1, 0.0);
      approx.evaluate(rec.states[0], needs, ea);
      double l_prev = ea.Lq_over_q;
      for (long j = 1; j < n; ++j) {
        approx.evaluate(rec.states[j], needs, ea);
        cum[j] = cum[j - 1] + 0.5 * dt * (l_prev + ea.Lq_over_q);
        l_prev = ea.Lq_over_q;
      }
      const double h = rec.tau - (n - 1) * dt;
      approx.evaluate(rec.y_tau, needs, ea);
      exact.evaluate(rec.y_tau, needs, eq);
      const double log_z_tau = base + (ea.w - eq.w) - (cum[n - 1] + 0.5 * h * (l_prev + ea.Lq_over_q));
      for (std::size_t k = 0; k < nt; ++k) {
        const double t = t_grid[k];
        double lz = log_z_tau;
        if (t < rec.tau) {
          const long j = std::min<long>(static_cast<long>(std::floor(t / dt)), n - 1);
          approx.evaluate(rec.states[j], needs, ea);
          exact.evaluate(rec.states[j], needs, eq);
          lz = base + (ea.w - eq.w) - cum[j];
        }
        sum[k * static_cast<std::size_t>(n_paths) + idx] = std::exp(lz);
      }
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<MartingalePoint> out(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < n_paths; ++i) {
      const double z = sum[k * static_cast<std::size_t>(n_paths) + static_cast<std::size_t>(i)];
      m1 += z;
      m2 += z * z;
    }
    m1 /= n_paths;
    const double var = std::max(0.0, m2 / n_paths - m1 * m1) * n_paths / (n_paths - 1.0);
    out[k] = {t_grid[k], m1, std::sqrt(var / n_paths)};
  }
  return out;
}

}  // namespace tpp
