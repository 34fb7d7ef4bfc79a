#include "tpplab/training.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "tpplab/error.hpp"
#include "tpplab/rng.hpp"

namespace tpp {

namespace {

constexpr std::uint64_t kTrainTag = 0x747261696eull;  // "train"
constexpr std::uint64_t kProbeTag = static_cast<std::uint64_t>(Stream::Probe);

double norm_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double scalar_factor(const PathRecord& r, IntegralForm form) {
  return r.log_q_at_tau - (form == IntegralForm::Alternative ? r.functional_alt : r.functional_direct);
}

}  // namespace

GradientEstimate gradient_estimate(const std::vector<PathRecord>& records, IntegralForm form) {
  const std::size_t n = records.size();
  if (n < 2) throw ConfigError("gradient_estimate: need at least two paths");
  const std::size_t k = records.front().theta_integral.size();
  if (k == 0) throw ConfigError("gradient_estimate: records carry no theta functionals");

  std::vector<double> a(n);
  std::vector<std::vector<double>> b(n, std::vector<double>(k));
  GradientEstimate out;
  out.n = static_cast<int>(n);
  out.k_n.assign(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const PathRecord& r = records[i];
    if (r.theta_integral.size() != k || r.theta_log_q_tau.size() != k)
      throw ConfigError("gradient_estimate: inconsistent theta functionals");
    a[i] = scalar_factor(r, form);
    for (std::size_t j = 0; j < k; ++j) b[i][j] = r.theta_log_q_tau[j] - r.theta_integral[j];
    if (!std::isfinite(a[i]) || !all_finite(b[i])) {
      std::ostringstream os;
      os << "gradient_estimate: non-finite accumulator on path " << r.path_id;
      throw NumericError(os.str());
    }
    out.j_n += a[i];
    for (std::size_t j = 0; j < k; ++j) out.k_n[j] += b[i][j];
  }
  const double nn = static_cast<double>(n);
  out.j_n /= nn;
  for (double& v : out.k_n) v /= nn;

  out.g.assign(k, 0.0);
  out.per_component_se.assign(k, 0.0);
  std::vector<double> sq(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const double p = (a[i] - out.j_n) * (b[i][j] - out.k_n[j]);
      out.g[j] += p;
      sq[j] += p * p;
    }
  for (std::size_t j = 0; j < k; ++j) {
    const double mean_p = out.g[j] / nn;
    out.g[j] /= nn - 1.0;
    const double var_p = std::max(0.0, sq[j] / nn - mean_p * mean_p) * nn / (nn - 1.0);
    out.per_component_se[j] = std::sqrt(var_p / nn);
  }
  return out;
}

FluxSampler flux_theta(const CommittorModel& committor, double extent, int n_nodes) {
  return FluxSampler::make(
      committor.geometry(), [committor](const Vec& z) { return committor.log_boundary_flux(z); },
      extent, n_nodes);
}

std::vector<double> grad_theta_log_mu(const CommittorModel& committor, const FluxSampler& flux) {
  const std::size_t k = static_cast<std::size_t>(committor.n_params());
  std::vector<double> out(k, 0.0), g;
  for (std::size_t j = 0; j < k; ++j)
    out[j] = flux.expectation([&](const Vec& z) {
      committor.grad_theta_log_boundary_flux(z, g);
      return g[j];
    });
  return out;
}

std::vector<std::vector<double>> path_scores(const std::vector<PathRecord>& records,
                                             const std::vector<double>& grad_log_mu) {
  std::vector<std::vector<double>> out;
  out.reserve(records.size());
  for (const PathRecord& r : records) {
    std::vector<double> s(grad_log_mu.size());
    for (std::size_t j = 0; j < s.size(); ++j)
      s[j] = r.theta_log_q_tau[j] - r.theta_integral[j] - grad_log_mu[j];
    out.push_back(std::move(s));
  }
  return out;
}

FiniteDifferenceGradient finite_difference_gradient(const CommittorModel& committor, double h,
                                                     int n_paths, const TppOptions& sim,
                                                     std::uint64_t seed, IntegralForm form) {
  if (n_paths < 2) throw ConfigError("finite_difference_gradient: need at least 2 paths");
  TppOptions opt = sim;
  opt.theta_functionals = false;
  const std::size_t k = static_cast<std::size_t>(committor.n_params());
  FiniteDifferenceGradient out{std::vector<double>(k), std::vector<double>(k)};
  const auto side = [&](std::vector<double> theta, double& log_mu) {
    const CommittorModel m = committor.with_theta(std::move(theta));
    const FluxSampler f = flux_theta(m);
    log_mu = f.log_mu();
    return simulate_ensemble(TppSimulator(m, opt), f, n_paths, seed);
  };
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> plus = committor.theta(), minus = committor.theta();
    plus[j] += h;
    minus[j] -= h;
    double log_mu_plus = 0.0, log_mu_minus = 0.0;
    const auto rp = side(plus, log_mu_plus);
    const auto rm = side(minus, log_mu_minus);
    // Paired by path id: same noise stream and same flux quantile.
    std::vector<double> diff(rp.size());
    for (std::size_t i = 0; i < rp.size(); ++i)
      diff[i] = (scalar_factor(rp[i], form) - scalar_factor(rm[i], form)) / (2.0 * h);
    double mean = 0.0, var = 0.0;
    for (double x : diff) mean += x;
    mean /= static_cast<double>(diff.size());
    for (double x : diff) var += (x - mean) * (x - mean);
    var /= static_cast<double>(diff.size() - 1);
    out.g[j] = (log_mu_minus - log_mu_plus) / (2.0 * h) + mean;
    out.se[j] = std::sqrt(var / static_cast<double>(diff.size()));
  }
  return out;
}

TrainState initial_state(const CommittorModel& family) {
  TrainState s;
  s.theta = family.theta();
  s.theta_init = family.theta();
  return s;
}

void sgd_train(const CommittorModel& family, TrainState& state, const TrainConfig& config,
               const TrainCallbacks& callbacks) {
  if (config.n_paths_per_step < 2) throw ConfigError("train.n_paths_per_step must be at least 2");
  if (!(config.lr0 >= 0.0)) throw ConfigError("train.lr0 must be non-negative");
  if (!(config.lr_decay > 0.0)) throw ConfigError("train.lr_decay must be positive");
  if (state.theta.size() != static_cast<std::size_t>(family.n_params()))
    throw ConfigError("train: parameter count does not match the committor family");
  if (state.theta_init.empty()) state.theta_init = state.theta;

  TppOptions opt = config.sim;
  opt.theta_functionals = true;
  const std::uint64_t step_seed = derive_seed(config.seed, kTrainTag);
  // The boundary flux must be positive and finite, and q finite and positive
  // on a few depths inward from every boundary node.
  const auto valid_update = [&](const std::vector<double>& theta) -> bool {
    try {
      const CommittorModel m = family.with_theta(theta);
      const FluxSampler f = flux_theta(m, config.flux_extent, config.flux_nodes);
      if (!std::isfinite(f.log_mu())) return false;
      const RegionGeometry& g = m.geometry();
      CommittorEvaluation e;
      for (const Vec& z : f.nodes())
        for (int d = 1; d <= 8; ++d) {
          Vec x = z;
          x[g.axis()] += g.width() * d / 9.0;
          m.evaluate(x, kNeedValue, e);
          if (!(std::isfinite(e.q) && e.q > 0.0)) return false;
        }
      return true;
    } catch (const NumericError&) {
      return false;
    }
  };
  const CommittorModel init_model = family.with_theta(state.theta_init);
  const FluxSampler init_flux = flux_theta(init_model, config.flux_extent, config.flux_nodes);

  for (int s = state.step; s < config.n_steps; ++s) {
    const CommittorModel model = family.with_theta(state.theta);
    const FluxSampler flux = flux_theta(model, config.flux_extent, config.flux_nodes);
    const auto recs = simulate_ensemble(TppSimulator(model, opt), flux, config.n_paths_per_step, step_seed,
                                        static_cast<std::uint32_t>(s));
    const GradientEstimate grad = gradient_estimate(recs, config.form);

    TrainRecord rec;
    rec.step = s;
    rec.j_n = grad.j_n;
    rec.grad = grad.g;
    rec.grad_se = grad.per_component_se;
    rec.grad_norm = norm_of(grad.g);
    rec.lr = config.lr0 * std::pow(config.lr_decay, s) * state.lr_scale;

    std::vector<double> next = state.theta;
    for (std::size_t j = 0; j < next.size(); ++j) next[j] -= rec.lr * grad.g[j];
    if (!all_finite(next)) {
      std::ostringstream os;
      os << "train: non-finite parameter update at step " << s;
      throw NumericError(os.str());
    }
    if (valid_update(next)) {
      state.theta = std::move(next);
    } else {
      rec.rejected = true;
      state.lr_scale *= 0.5;
    }
    rec.theta = state.theta;
    rec.theta_norm = norm_of(state.theta);
    state.history.push_back(rec);
    state.step = s + 1;
    if (callbacks.on_step) callbacks.on_step(rec);

    if (config.probe_every > 0 && state.step % config.probe_every == 0) {
      SelectionSettings ps;
      ps.n_paths = config.probe_paths;
      ps.bar_samples = config.probe_bar_samples;
      ps.sim = config.sim;
      ps.form = config.form;
      const CommittorModel current = family.with_theta(state.theta);
      const FluxSampler cur_flux = flux_theta(current, config.flux_extent, config.flux_nodes);
      const SelectionReport r = select(current, cur_flux, init_model, init_flux, ps,
                                       derive_seed(derive_seed(config.seed, kProbeTag),
                                                   static_cast<std::uint64_t>(s)));
      ProbeRecord p{state.step, r.delta, r.se};
      state.probes.push_back(p);
      if (callbacks.on_probe) callbacks.on_probe(p);
    }
  }
}

void save_checkpoint(const std::string& path, const TrainState& state, const std::string& config_hash) {
  static_assert(std::endian::native == std::endian::little, "checkpoint layout assumes little endian");
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("checkpoint: cannot write " + path);
    out.write(reinterpret_cast<const char*>(state.theta.data()),
              static_cast<std::streamsize>(state.theta.size() * sizeof(double)));
  }
  nlohmann::json j;
  j["step"] = state.step;
  j["config_hash"] = config_hash;
  j["lr_scale"] = state.lr_scale;
  j["theta_init"] = state.theta_init;
  j["n_params"] = state.theta.size();
  std::ofstream side(path + ".json", std::ios::trunc);
  if (!side) throw ConfigError("checkpoint: cannot write " + path + ".json");
  side << j.dump(2) << '\n';
}

TrainState load_checkpoint(const std::string& path, std::string* config_hash) {
  std::ifstream side(path + ".json");
  if (!side) throw ConfigError("checkpoint: cannot read " + path + ".json");
  nlohmann::json j;
  try {
    side >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("checkpoint: malformed sidecar " + path + ".json: " + e.what());
  }
  TrainState s;
  const std::size_t k = j.at("n_params").get<std::size_t>();
  s.step = j.at("step").get<int>();
  s.lr_scale = j.at("lr_scale").get<double>();
  s.theta_init = j.at("theta_init").get<std::vector<double>>();
  if (config_hash) *config_hash = j.at("config_hash").get<std::string>();

  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("checkpoint: cannot read " + path);
  s.theta.resize(k);
  in.read(reinterpret_cast<char*>(s.theta.data()), static_cast<std::streamsize>(k * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(k * sizeof(double)) || in.peek() != EOF)
    throw ConfigError("checkpoint: " + path + " does not hold " + std::to_string(k) + " parameters");
  return s;
}

}  // namespace tpp
