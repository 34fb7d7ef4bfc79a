#include "tpplab/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

#include "tpplab/rng.hpp"

namespace tpp {

namespace {

struct RngNoise {
  NormalStream rng;
  int substeps;

  Vec next(int dim) {
    Vec v(dim);
    if (substeps == 1) {
      rng.normal_vec(v);
      return v;
    }
    Vec part(dim);
    for (int k = 0; k < substeps; ++k) {
      rng.normal_vec(part);
      v += part;
    }
    return v * (1.0 / std::sqrt(static_cast<double>(substeps)));
  }
};

struct ReplayNoise {
  const std::vector<Vec>* noise;
  std::size_t pos = 0;

  Vec next(int) {
    if (pos >= noise->size()) throw NumericError("replay: stored noise exhausted before B");
    return (*noise)[pos++];
  }
};

std::string path_tag(std::uint32_t id, long step) {
  std::ostringstream os;
  os << "path " << id << ", step " << step;
  return os.str();
}

}  // namespace

TppSimulator::TppSimulator(CommittorModel model, TppOptions options)
    : model_(std::move(model)),
      reference_(boundary_factor_model(model_.potential(), model_.geometry())),
      opt_(options) {
  if (!(opt_.dt > 0.0)) throw ConfigError("sim.dt must be positive");
  if (opt_.max_steps < 1) throw ConfigError("sim.max_steps must be at least 1");
  if (opt_.noise_substeps < 1) throw ConfigError("sim.noise_substeps must be at least 1");
  if (!(opt_.drift_cap > 0.0)) throw ConfigError("sim.drift_cap must be positive");
}

PathRecord TppSimulator::run(const Vec& y0, std::uint64_t seed, std::uint32_t stream,
                             std::uint32_t index) const {
  RngNoise noise{NormalStream(seed, stream, index), opt_.noise_substeps};
  return integrate(y0, noise, index);
}

PathRecord TppSimulator::replay(const PathRecord& record) const {
  if (record.noise.empty()) throw ConfigError("replay: record carries no noise");
  ReplayNoise noise{&record.noise};
  return integrate(record.initial_point, noise, record.path_id);
}

template <class Noise>
PathRecord TppSimulator::integrate(const Vec& y0, Noise& noise, std::uint32_t id) const {
  const RegionGeometry& g = model_.geometry();
  const PotentialModel& pot = model_.potential();
  g.check_closure(y0);
  if (g.in_B(y0)) throw DomainError("simulate_tpp: initial point lies in B");

  const int d = g.dim();
  const int a = g.axis();
  const double eps = pot.epsilon();
  const double dt = opt_.dt;
  const double sigma = std::sqrt(2.0 * eps * dt);
  const double cap = opt_.drift_cap * sigma;
  const bool alt = opt_.alternative_integral;
  const bool th = opt_.theta_functionals;
  const std::size_t k = static_cast<std::size_t>(model_.n_params());
  const unsigned step_needs =
      kNeedValue | kNeedGradient | kNeedGenerator | (th ? kNeedThetaGenerator : 0u);
  const unsigned end_needs = step_needs | (th ? kNeedThetaLogQ : 0u);
  const unsigned ref_needs = kNeedValue | kNeedGradient | kNeedGenerator;

  PathRecord rec;
  rec.path_id = id;
  rec.initial_point = y0;
  rec.dt = dt;
  if (opt_.store_states) rec.states.push_back(y0);
  if (th) rec.theta_integral.assign(k, 0.0);

  CommittorEvaluation e, s;
  model_.evaluate(y0, step_needs, e);
  double l_prev = e.Lq_over_q;
  std::vector<double> gl_prev = e.grad_theta_Lq_over_q;

  Vec gw_prev(d);
  double f_prev = 0.0, w_rel0 = 0.0;
  if (alt) {
    reference_.evaluate(y0, ref_needs, s);
    gw_prev = e.grad_w - s.grad_w;
    f_prev = s.Lq_over_q - eps * norm2(gw_prev);
    w_rel0 = e.w - s.w;
  }

  double direct = 0.0, alt_int = 0.0, ito = 0.0;
  Vec y = y0;
  for (long step = 0;; ++step) {
    if (step >= opt_.max_steps) {
      rec.n_steps = step;
      rec.tau = step * dt;
      rec.y_tau = y;
      rec.functional_direct = direct;
      std::ostringstream os;
      os << "finite hitting time assumption violated: path " << id << " did not reach B within "
         << opt_.max_steps << " steps";
      throw HittingTimeExceeded(os.str(), std::move(rec));
    }
    const Vec xi = noise.next(d);
    if (opt_.store_noise) rec.noise.push_back(xi);

    bool capped = false;
    const Vec drift = tpp_drift_step(model_, y, e.grad_log_q, dt, cap, &capped);
    rec.capped_steps += capped;
    Vec kick = sigma * xi;
    if (g.T(y) <= 0.0) kick[a] = std::abs(kick[a]);
    Vec yn = y + drift + kick;
    if (g.in_open_A(yn)) {
      ++rec.reentries;
      yn[a] = 2.0 * g.a_A() - yn[a];
    }
    if (!all_finite(yn)) throw NumericError("simulate_tpp: non-finite state at " + path_tag(id, step));
    const Vec applied_noise = yn - y - drift;
    if (opt_.store_states) rec.states.push_back(yn);

    if (g.in_B(yn)) {
      const double lambda = std::clamp((g.a_B() - y[a]) / (yn[a] - y[a]), 0.0, 1.0);
      Vec yt = y + lambda * (yn - y);
      yt[a] = g.a_B();
      model_.evaluate(yt, end_needs, e);
      const double h = lambda * dt;
      direct += 0.5 * h * (l_prev + e.Lq_over_q);
      if (th)
        for (std::size_t j = 0; j < k; ++j)
          rec.theta_integral[j] += 0.5 * h * (gl_prev[j] + e.grad_theta_Lq_over_q[j]);
      if (alt) {
        reference_.evaluate(yt, ref_needs, s);
        const Vec gw = e.grad_w - s.grad_w;
        const double f = s.Lq_over_q - eps * norm2(gw);
        alt_int += 0.5 * h * (f_prev + f);
        ito += lambda * dot(gw_prev, applied_noise);
        rec.functional_alt = (e.w - s.w) - w_rel0 + alt_int - ito;
      }
      rec.functional_direct = direct;
      rec.n_steps = step + 1;
      rec.tau_index = step + 1;
      rec.tau = step * dt + h;
      rec.y_tau = yt;
      rec.log_q_at_tau = std::log(e.T) + e.w;
      if (th) rec.theta_log_q_tau = e.grad_theta_log_q;
      rec.complete = true;
      return rec;
    }

    model_.evaluate(yn, step_needs, e);
    if (!std::isfinite(e.Lq_over_q))
      throw NumericError("simulate_tpp: non-finite generator quotient at " + path_tag(id, step));
    direct += 0.5 * dt * (l_prev + e.Lq_over_q);
    l_prev = e.Lq_over_q;
    if (th) {
      for (std::size_t j = 0; j < k; ++j)
        rec.theta_integral[j] += 0.5 * dt * (gl_prev[j] + e.grad_theta_Lq_over_q[j]);
      gl_prev = e.grad_theta_Lq_over_q;
    }
    if (alt) {
      ito += dot(gw_prev, applied_noise);
      reference_.evaluate(yn, ref_needs, s);
      gw_prev = e.grad_w - s.grad_w;
      const double f = s.Lq_over_q - eps * norm2(gw_prev);
      alt_int += 0.5 * dt * (f_prev + f);
      f_prev = f;
    }
    y = yn;
  }
}

Vec tpp_drift_step(const CommittorModel& committor, const Vec& y, const Vec& grad_log_q,
                   double dt, double cap, bool* capped) {
  const RegionGeometry& g = committor.geometry();
  const PotentialModel& pot = committor.potential();
  Vec drift(g.dim());
  if (g.T(y) <= 0.0) {
    drift = -dt * pot.gradient(y);
    drift[g.axis()] = 0.0;
  } else {
    drift = dt * (2.0 * pot.epsilon() * grad_log_q - pot.gradient(y));
  }
  const double dn = norm(drift);
  const bool over = dn > cap;
  if (over) drift *= cap / dn;
  if (capped) *capped = over;
  return drift;
}

PathRecord simulate_tpp(const CommittorModel& committor, const Vec& y0, const TppOptions& options,
                        std::uint64_t seed, std::uint32_t index) {
  return TppSimulator(committor, options).run(y0, seed, stream_word(Stream::Path), index);
}

namespace {

std::vector<PathRecord> run_ensemble(const TppSimulator& sim, const FluxSampler& flux,
                                     int n_paths, std::uint64_t seed, std::uint32_t round,
                                     bool parallel) {
  if (n_paths < 1) throw ConfigError("sim.n_paths must be at least 1");
  const std::vector<Vec> starts = sample_reactive_flux(flux, n_paths, seed, round);
  const std::uint32_t stream = stream_word(Stream::Path, round);
  std::vector<PathRecord> out(static_cast<std::size_t>(n_paths));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_paths));
  const auto one = [&](int i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      out[u] = sim.run(starts[u], seed, stream, static_cast<std::uint32_t>(i));
    } catch (...) {
      errors[u] = std::current_exception();
    }
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (int i = 0; i < n_paths; ++i) one(i);
  } else {
    for (int i = 0; i < n_paths; ++i) one(i);
  }
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace

std::vector<PathRecord> simulate_ensemble(const TppSimulator& sim, const FluxSampler& flux,
                                          int n_paths, std::uint64_t seed, std::uint32_t round) {
  return run_ensemble(sim, flux, n_paths, seed, round, true);
}

std::vector<PathRecord> simulate_ensemble_serial(const TppSimulator& sim, const FluxSampler& flux,
                                                 int n_paths, std::uint64_t seed,
                                                 std::uint32_t round) {
  return run_ensemble(sim, flux, n_paths, seed, round, false);
}

LangevinChain::LangevinChain(const PotentialModel& potential, const Vec& x0, double dt,
                             std::uint64_t seed, std::uint32_t index, bool zero_noise)
    : potential_(&potential),
      x_(x0),
      dt_(dt),
      sigma_(std::sqrt(2.0 * potential.epsilon() * dt)),
      rng_(seed, stream_word(Stream::Langevin), index),
      zero_noise_(zero_noise) {
  if (!(dt > 0.0)) throw ConfigError("langevin: dt must be positive");
  if (x0.dim != potential.dim()) throw DomainError("langevin: initial point dimension mismatch");
}

const Vec& LangevinChain::step() {
  const Vec g = potential_->gradient(x_);
  if (!all_finite(g)) {
    std::ostringstream os;
    os << "langevin: non-finite gradient at step " << step_;
    throw NumericError(os.str());
  }
  x_ -= dt_ * g;
  if (!zero_noise_) {
    Vec xi(x_.dim);
    rng_.normal_vec(xi);
    x_ += sigma_ * xi;
  }
  ++step_;
  return x_;
}

std::vector<Vec> simulate_langevin(const PotentialModel& potential, const Vec& x0, double dt,
                                   long n_steps, std::uint64_t seed, std::uint32_t index,
                                   bool zero_noise) {
  if (n_steps < 0) throw ConfigError("langevin: negative step count");
  LangevinChain chain(potential, x0, dt, seed, index, zero_noise);
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(n_steps) + 1);
  out.push_back(x0);
  for (long i = 0; i < n_steps; ++i) out.push_back(chain.step());
  return out;
}

ReactiveHarvester::ReactiveHarvester(const RegionGeometry& geometry, double dt, bool keep_states)
    : geometry_(&geometry), dt_(dt), keep_states_(keep_states) {}

std::optional<ReactiveSegment> ReactiveHarvester::push(const Vec& x) {
  ++index_;
  const int a = geometry_->axis();
  std::optional<ReactiveSegment> out;
  if (geometry_->in_A(x)) {
    armed_ = true;
    last_a_ = index_;
    if (keep_states_) buffer_.assign(1, x);
  } else if (armed_) {
    const double step_len = x[a] - prev_[a];
    if (index_ == last_a_ + 1) {
      const double lam = std::clamp((geometry_->a_A() - prev_[a]) / step_len, 0.0, 1.0);
      exit_time_ = (static_cast<double>(last_a_) + lam) * dt_;
    }
    if (keep_states_) buffer_.push_back(x);
    if (geometry_->in_B(x)) {
      const double lam = std::clamp((geometry_->a_B() - prev_[a]) / step_len, 0.0, 1.0);
      ReactiveSegment seg;
      seg.start_index = last_a_;
      seg.end_index = index_;
      seg.duration = (static_cast<double>(index_ - 1) + lam) * dt_ - exit_time_;
      if (keep_states_) seg.states = std::move(buffer_);
      buffer_.clear();
      armed_ = false;
      out = std::move(seg);
    }
  }
  prev_ = x;
  return out;
}

std::vector<ReactiveSegment> harvest_reactive(const std::vector<Vec>& trajectory,
                                              const RegionGeometry& geometry, double dt) {
  ReactiveHarvester h(geometry, dt, true);
  std::vector<ReactiveSegment> out;
  for (const Vec& x : trajectory)
    if (auto seg = h.push(x)) out.push_back(std::move(*seg));
  return out;
}

HarvestResult harvest_durations(const PotentialModel& potential, const RegionGeometry& geometry,
                                const Vec& x0, const HarvestOptions& options,
                                std::uint64_t seed) {
  if (options.n_chains < 1 || options.segments_per_chain < 1)
    throw ConfigError("harvest: chain and segment counts must be positive");
  const int n = options.n_chains;
  std::vector<std::vector<double>> per_chain(static_cast<std::size_t>(n));
  std::vector<long> steps(static_cast<std::size_t>(n), 0);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1)
  for (int c = 0; c < n; ++c) {
    const auto u = static_cast<std::size_t>(c);
    try {
      LangevinChain chain(potential, x0, options.dt, seed, static_cast<std::uint32_t>(c));
      for (long i = 0; i < options.burn_in_steps; ++i) chain.step();
      ReactiveHarvester h(geometry, options.dt);
      h.push(chain.state());
      long i = 0;
      for (; i < options.max_steps_per_chain &&
             static_cast<int>(per_chain[u].size()) < options.segments_per_chain;
           ++i)
        if (auto seg = h.push(chain.step())) per_chain[u].push_back(seg->duration);
      steps[u] = i;
    } catch (...) {
      errors[u] = std::current_exception();
    }
  }
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
  HarvestResult res;
  for (int c = 0; c < n; ++c) {
    const auto u = static_cast<std::size_t>(c);
    res.total_steps += steps[u];
    if (static_cast<int>(per_chain[u].size()) < options.segments_per_chain)
      res.budget_exhausted = true;
    for (double dur : per_chain[u]) {
      res.durations.push_back(dur);
      res.chain.push_back(c);
    }
  }
  return res;
}

}  // namespace tpp
