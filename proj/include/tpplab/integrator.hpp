#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tpplab/committor.hpp"
#include "tpplab/error.hpp"
#include "tpplab/flux.hpp"
#include "tpplab/model.hpp"
#include "tpplab/rng.hpp"

namespace tpp {

// One discretized transition path Y_0 .. Y_tau with its path functionals.
struct PathRecord {
  std::uint32_t path_id = 0;
  Vec initial_point;
  double dt = 0.0;
  std::vector<Vec> states;  // filled when states are stored; states[tau_index] is in B
  std::vector<Vec> noise;   // standard normal increments, noise.size() == states.size() - 1
  long n_steps = 0;
  long tau_index = -1;
  double tau = 0.0;  // crossing time interpolated linearly in the last step
  Vec y_tau;         // interpolated crossing point, exactly on the boundary of B
  double functional_direct = 0.0;  // trapezoid of Lq/q up to tau
  double functional_alt = 0.0;     // same integral through the reference factor
  double log_q_at_tau = 0.0;
  std::vector<double> theta_integral;   // int grad_theta(Lq/q) ds
  std::vector<double> theta_log_q_tau;  // grad_theta log q(y_tau)
  int reentries = 0;     // proposals that landed in the open interior of A
  int capped_steps = 0;  // steps whose drift displacement hit the cap
  bool complete = false;
};

// Raised when a path does not reach B within max_steps; carries the partial
// record (finite hitting time failed numerically).
class HittingTimeExceeded : public AssumptionViolation {
 public:
  HittingTimeExceeded(const std::string& what, PathRecord partial)
      : AssumptionViolation(what), partial_(std::move(partial)) {}
  const PathRecord& partial() const { return partial_; }

 private:
  PathRecord partial_;
};

struct TppOptions {
  double dt = 1e-4;
  long max_steps = 10'000'000;
  // Each increment is the normalized sum of this many standard normals, so a
  // run at dt * k with k substeps shares its Brownian path with a run at dt.
  int noise_substeps = 1;
  bool store_states = false;
  bool store_noise = false;
  bool theta_functionals = false;
  bool alternative_integral = true;
  double drift_cap = 4.0;  // in units of sqrt(2 eps dt)
};

// Euler-Maruyama for dY = (-grad U + 2 eps grad log q) dt + sqrt(2 eps) dW,
// stopped at the first entry into B.
//
// A step that starts on the boundary of A moves the normal coordinate by the
// reflected increment sqrt(2 eps dt) |xi_n| and the tangential coordinates by
// a plain Euler-Maruyama update. Drift displacements are clamped in norm to
// drift_cap * sqrt(2 eps dt). A proposal in the open interior of A is
// reflected through the boundary and counted.
//
// functional_alt uses S = T exp(T w1(rho)) as reference factor with
// w = log(q / S): w(Y_tau) - w(Y_0) + int (LS/S - eps |grad w|^2) dt minus the
// Ito sum of grad w against the applied noise displacements.
class TppSimulator {
 public:
  TppSimulator(CommittorModel model, TppOptions options);

  const CommittorModel& model() const { return model_; }
  const TppOptions& options() const { return opt_; }

  // Noise from the Path substream (seed, stream, index).
  PathRecord run(const Vec& y0, std::uint64_t seed, std::uint32_t stream,
                 std::uint32_t index) const;
  // Re-integrate from a record's initial point with its stored noise.
  PathRecord replay(const PathRecord& record) const;

 private:
  template <class Noise>
  PathRecord integrate(const Vec& y0, Noise& noise, std::uint32_t id) const;

  CommittorModel model_;
  CommittorModel reference_;
  TppOptions opt_;
};

// Drift displacement of one step from y as applied by TppSimulator: tangential
// only on the boundary of A, clamped to cap in norm. Sets *capped if clamped.
Vec tpp_drift_step(const CommittorModel& committor, const Vec& y, const Vec& grad_log_q,
                   double dt, double cap, bool* capped = nullptr);

PathRecord simulate_tpp(const CommittorModel& committor, const Vec& y0, const TppOptions& options,
                        std::uint64_t seed, std::uint32_t index = 0);

// n_paths independent paths: path i starts at flux draw i of (seed, round) and
// is driven by Path substream (seed, round) index i. The OpenMP version uses
// dynamic scheduling; both versions return identical records. A failing path
// aborts the ensemble with the error of the lowest failing index.
std::vector<PathRecord> simulate_ensemble(const TppSimulator& sim, const FluxSampler& flux,
                                          int n_paths, std::uint64_t seed,
                                          std::uint32_t round = 0);
std::vector<PathRecord> simulate_ensemble_serial(const TppSimulator& sim, const FluxSampler& flux,
                                                 int n_paths, std::uint64_t seed,
                                                 std::uint32_t round = 0);

// Overdamped Langevin by Euler-Maruyama:
//   X_{i+1} = X_i - grad U(X_i) dt + sqrt(2 eps dt) xi_i.
class LangevinChain {
 public:
  LangevinChain(const PotentialModel& potential, const Vec& x0, double dt, std::uint64_t seed,
                std::uint32_t index, bool zero_noise = false);
  const Vec& state() const { return x_; }
  long step_index() const { return step_; }
  const Vec& step();

 private:
  const PotentialModel* potential_;
  Vec x_;
  double dt_;
  double sigma_;
  NormalStream rng_;
  bool zero_noise_;
  long step_ = 0;
};

// Trajectory of n_steps + 1 states.
std::vector<Vec> simulate_langevin(const PotentialModel& potential, const Vec& x0, double dt,
                                   long n_steps, std::uint64_t seed, std::uint32_t index = 0,
                                   bool zero_noise = false);

struct ReactiveSegment {
  long start_index = 0;  // last index in A before the entry into B
  long end_index = 0;    // first index in B
  double duration = 0.0;  // between the interpolated exit from A and entry into B
  std::vector<Vec> states;
};

// Streaming detector for the entrance/exit alternation A -> B -> A -> ...
// A completed segment runs from the last state in A to the first state in B.
class ReactiveHarvester {
 public:
  ReactiveHarvester(const RegionGeometry& geometry, double dt, bool keep_states = false);
  // Feed the next state; returns a segment when one completes.
  std::optional<ReactiveSegment> push(const Vec& x);

 private:
  const RegionGeometry* geometry_;
  double dt_;
  bool keep_states_;
  bool armed_ = false;
  long index_ = -1;
  long last_a_ = -1;
  double exit_time_ = 0.0;
  Vec prev_;
  std::vector<Vec> buffer_;
};

std::vector<ReactiveSegment> harvest_reactive(const std::vector<Vec>& trajectory,
                                              const RegionGeometry& geometry, double dt = 1.0);

struct HarvestOptions {
  double dt = 1e-4;
  int n_chains = 8;
  int segments_per_chain = 250;
  long max_steps_per_chain = 2'000'000'000;
  long burn_in_steps = 0;
};

struct HarvestResult {
  std::vector<double> durations;  // chain-major, in order of completion
  std::vector<int> chain;
  long total_steps = 0;
  bool budget_exhausted = false;
};

// Reactive durations from independent equilibrium chains started at x0. Chain
// c uses the Langevin substream of seed at index c.
HarvestResult harvest_durations(const PotentialModel& potential, const RegionGeometry& geometry,
                                const Vec& x0, const HarvestOptions& options,
                                std::uint64_t seed);

}  // namespace tpp
