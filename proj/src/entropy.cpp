#include "tpplab/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tpplab/error.hpp"
#include "tpplab/rng.hpp"

namespace tpp {

namespace {

// Fermi function 1 / (1 + e^x) and its variance weight f (1 - f).
inline double fermi(double x) { return 1.0 / (1.0 + std::exp(x)); }
inline double fermi_weight(double x) { return 1.0 / (2.0 + 2.0 * std::cosh(x)); }

double median(std::vector<double> xs) {
  const auto mid = xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  return *mid;
}

TailDiagnostics tail_diagnostics(const std::vector<double>& x, const std::vector<double>& tau) {
  TailDiagnostics t;
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double c = (v - mean) * (v - mean);
    m2 += c;
    m4 += c * c;
  }
  m2 /= n;
  m4 /= n;
  t.kurtosis = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;

  const double med = median(x);
  std::vector<double> dev(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) dev[i] = std::abs(x[i] - med);
  const double mad = median(dev);
  const double top = *std::max_element(dev.begin(), dev.end());
  t.max_over_median = mad > 0.0 ? top / mad : (top > 0.0 ? INFINITY : 0.0);

  const std::size_t half = tau.size() / 2;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double s = tau[i] * tau[i];
    t.tau_m2_full += s;
    if (i < half) t.tau_m2_half += s;
  }
  t.tau_m2_full /= static_cast<double>(tau.size());
  if (half > 0) t.tau_m2_half /= static_cast<double>(half);

  t.ok = std::isfinite(t.kurtosis) && t.kurtosis < 50.0 && t.max_over_median < 50.0 &&
         (half == 0 || std::abs(t.tau_m2_half / t.tau_m2_full - 1.0) < 0.5);
  return t;
}

}  // namespace

EntropyTerm entropy_term(const WeightedEnsemble& ensemble) {
  const std::size_t n = ensemble.log_weights.size();
  if (n < 2) throw ConfigError("entropy_term: need at least two paths");
  std::vector<double> x(n), tau(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = ensemble.log_weights[i].log_z_shifted;
    tau[i] = ensemble.records[i].tau;
    if (!std::isfinite(x[i])) {
      std::ostringstream os;
      os << "entropy_term: non-finite summand on path " << ensemble.records[i].path_id;
      throw NumericError(os.str());
    }
  }
  EntropyTerm out;
  out.n = static_cast<int>(n);
  for (double v : x) out.i_hat += v;
  out.i_hat /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - out.i_hat) * (v - out.i_hat);
  out.se = std::sqrt(ss / (static_cast<double>(n) - 1.0) / static_cast<double>(n));
  out.tails = tail_diagnostics(x, tau);
  return out;
}

BarResult bar_ratio(const std::vector<double>& d_tilde, const std::vector<double>& d_bar,
                    double tol, int max_iter) {
  if (d_tilde.empty() || d_bar.empty()) throw ConfigError("bar_ratio: both samples must be non-empty");
  for (const auto* v : {&d_tilde, &d_bar})
    for (double d : *v)
      if (!std::isfinite(d)) throw NumericError("bar_ratio: log density difference not finite");
  const double n0 = static_cast<double>(d_tilde.size());
  const double n1 = static_cast<double>(d_bar.size());
  const double shift = std::log(n0 / n1);

  // Increasing in the log ratio x; its root is the BAR estimate.
  const auto residual = [&](double x, double& slope) {
    double g = 0.0;
    slope = 0.0;
    for (double d : d_tilde) {
      g += fermi(shift + d - x);
      slope += fermi_weight(shift + d - x);
    }
    for (double d : d_bar) {
      g -= fermi(-shift - d + x);
      slope += fermi_weight(-shift - d + x);
    }
    return g;
  };

  BarResult out;
  out.n_tilde = static_cast<int>(d_tilde.size());
  out.n_bar = static_cast<int>(d_bar.size());
  const auto [lo_it, hi_it] = std::minmax_element(d_tilde.begin(), d_tilde.end());
  const auto [lo_b, hi_b] = std::minmax_element(d_bar.begin(), d_bar.end());
  double lo = std::min(*lo_it, *lo_b) - std::abs(shift) - 1.0;
  double hi = std::max(*hi_it, *hi_b) + std::abs(shift) + 1.0;
  double slope = 0.0;
  for (double step = 1.0; residual(lo, slope) > 0.0; step *= 2.0) lo -= step;
  for (double step = 1.0; residual(hi, slope) < 0.0; step *= 2.0) hi += step;

  double x = 0.5 * (lo + hi);
  bool solved = false;
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    const double g = residual(x, slope);
    if (g > 0.0)
      hi = x;
    else
      lo = x;
    double next = slope > 0.0 ? x - g / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double update = next - x;
    x = next;
    if (std::abs(update) < tol || hi - lo < tol) {
      solved = true;
      break;
    }
  }
  out.log_ratio = x;

  double w = 0.0;
  for (const auto* v : {&d_tilde, &d_bar})
    for (double d : *v) w += fermi_weight(shift + d - x);
  out.overlap = 4.0 * w;
  const double var = w > 0.0 ? 1.0 / w - (1.0 / n0 + 1.0 / n1) : INFINITY;
  out.se = std::sqrt(std::max(0.0, var));
  out.converged = solved && out.overlap >= 1.0 && std::isfinite(out.se);
  return out;
}

BarResult bar_ratio(const FluxSampler& tilde, const FluxSampler& bar, int n_tilde, int n_bar,
                    std::uint64_t seed) {
  const auto diff = [&](const std::vector<Vec>& pts) {
    std::vector<double> d(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      d[i] = tilde.log_density(pts[i]) - bar.log_density(pts[i]);
      if (!std::isfinite(d[i]))
        throw DomainError("bar_ratio: a boundary density vanishes at a sampled point");
    }
    return d;
  };
  return bar_ratio(diff(sample_boundary(tilde, n_tilde, seed, stream_word(Stream::Bar, 0))),
                   diff(sample_boundary(bar, n_bar, seed, stream_word(Stream::Bar, 1))));
}

SelectionReport select(const EntropyTerm& tilde, const EntropyTerm& bar, const BarResult& ratio) {
  SelectionReport r;
  r.tilde = tilde;
  r.bar = bar;
  r.ratio = ratio;
  r.log_mu_ratio = -ratio.log_ratio;
  r.i_tilde = tilde.i_hat;
  r.i_bar = bar.i_hat;
  r.delta = r.log_mu_ratio + r.i_tilde - r.i_bar;
  r.se = std::sqrt(tilde.se * tilde.se + bar.se * bar.se + ratio.se * ratio.se);
  return r;
}

SelectionReport select(const CommittorModel& tilde, const FluxSampler& flux_tilde,
                       const CommittorModel& bar, const FluxSampler& flux_bar,
                       const SelectionSettings& settings, std::uint64_t seed) {
  if (settings.n_paths < 2) throw ConfigError("select: n_paths must be at least 2");
  if (settings.bar_samples < 1) throw ConfigError("select: bar_samples must be at least 1");
  const auto side = [&](const CommittorModel& q, const FluxSampler& m, std::uint64_t tag) {
    const TppSimulator sim(q, settings.sim);
    return weight_ensemble(simulate_ensemble(sim, m, settings.n_paths, derive_seed(seed, tag)), q, m,
                           settings.form);
  };
  const WeightedEnsemble et = side(tilde, flux_tilde, 1);
  const WeightedEnsemble eb = side(bar, flux_bar, 2);
  const BarResult ratio =
      bar_ratio(flux_tilde, flux_bar, settings.bar_samples, settings.bar_samples, derive_seed(seed, 3));
  SelectionReport r = select(entropy_term(et), entropy_term(eb), ratio);
  r.ess_tilde = et.effective_sample_size;
  r.ess_bar = eb.effective_sample_size;
  return r;
}

double oracle_log_nu(const ExactCommittorOracle& oracle, const PotentialModel& potential,
                     double extent, int n_nodes) {
  const RegionGeometry& g = oracle.geometry();
  const FluxSampler f = FluxSampler::make(
      g,
      [&](const Vec& z) {
        return std::log(dot(oracle.grad_q(z), g.normal())) - potential.energy(z) / potential.epsilon();
      },
      extent, n_nodes);
  return f.log_mu();
}

KlEstimate oracle_kl(const CommittorModel& committor, const FluxSampler& flux, double log_nu,
                     const SelectionSettings& settings, std::uint64_t seed) {
  if (settings.n_paths < 2) throw ConfigError("oracle_kl: n_paths must be at least 2");
  const TppSimulator sim(committor, settings.sim);
  const auto recs = simulate_ensemble(sim, flux, settings.n_paths, seed);
  std::vector<double> x;
  x.reserve(recs.size());
  for (const PathRecord& r : recs) {
    const double integral =
        settings.form == IntegralForm::Alternative ? r.functional_alt : r.functional_direct;
    x.push_back(r.log_q_at_tau - integral);
  }
  KlEstimate k;
  k.log_nu = log_nu;
  k.log_mu = flux.log_mu();
  k.boundary_term = flux.expectation(
      [&](const Vec& z) { return flux.log_density(z) - committor.log_boundary_flux(z); });
  double ss = 0.0;
  for (double v : x) k.path_term += v;
  k.path_term /= static_cast<double>(x.size());
  for (double v : x) ss += (v - k.path_term) * (v - k.path_term);
  k.se = std::sqrt(ss / (static_cast<double>(x.size()) - 1.0) / static_cast<double>(x.size()));
  k.d_kl = k.log_nu - k.log_mu + k.boundary_term + k.path_term;
  return k;
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ConfigError("ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical_value(double alpha, std::size_t n, std::size_t m) {
  if (!(alpha > 0.0 && alpha < 1.0) || n == 0 || m == 0) throw ConfigError("ks_critical_value: bad arguments");
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return std::sqrt(-0.5 * std::log(0.5 * alpha)) * std::sqrt((nn + mm) / (nn * mm));
}

}  // namespace tpp
