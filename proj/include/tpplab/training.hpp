#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tpplab/entropy.hpp"

namespace tpp {

// Covariance estimator of grad_theta D(P_theta | Q) from paths of P_theta:
//   g = 1/(n-1) sum_k (a_k - j_n)(b_k - k_n)
// with scalar factor a = log q(Y_tau) - int Lq/q and vector factor
// b = grad_theta log q(Y_tau) - int grad_theta(Lq/q).
struct GradientEstimate {
  std::vector<double> g;
  double j_n = 0.0;
  std::vector<double> k_n;
  int n = 0;
  std::vector<double> per_component_se;
};

// Records need theta functionals.
GradientEstimate gradient_estimate(const std::vector<PathRecord>& records,
                                   IntegralForm form = IntegralForm::Direct);

// m_theta = grad q_theta . n e^{-U/eps} on the boundary of A.
FluxSampler flux_theta(const CommittorModel& committor, double extent = 4.0, int n_nodes = 1025);

// grad_theta log mu_theta = E_{m_theta / mu_theta}[grad_theta log(grad q_theta . n)].
std::vector<double> grad_theta_log_mu(const CommittorModel& committor, const FluxSampler& flux);

// Per-path score b_k - grad_theta log mu_theta; its mean under P_theta is 0.
std::vector<std::vector<double>> path_scores(const std::vector<PathRecord>& records,
                                             const std::vector<double>& grad_log_mu);

// Central differences (delta(theta + h e_i; theta - h e_i)) / (2h) with common
// random numbers: both sides reuse one seed, and log(mu_- / mu_+) is taken
// from the flux normalizers. se comes from the per-path paired differences.
struct FiniteDifferenceGradient {
  std::vector<double> g;
  std::vector<double> se;
};
FiniteDifferenceGradient finite_difference_gradient(const CommittorModel& committor, double h, int n_paths,
                                               const TppOptions& sim, std::uint64_t seed,
                                               IntegralForm form = IntegralForm::Direct);

struct TrainConfig {
  int n_paths_per_step = 512;
  double lr0 = 0.05;
  double lr_decay = 0.98;  // lr at step s is lr0 * lr_decay^s * (rejection halvings)
  int n_steps = 200;
  int probe_every = 0;  // 0 disables probes
  int probe_paths = 512;
  int probe_bar_samples = 1000;
  TppOptions sim;
  IntegralForm form = IntegralForm::Direct;
  double flux_extent = 4.0;
  int flux_nodes = 1025;
  std::uint64_t seed = 0;
};

struct TrainRecord {
  int step = 0;
  double j_n = 0.0;
  double grad_norm = 0.0;
  double theta_norm = 0.0;  // after the update
  double lr = 0.0;
  bool rejected = false;
  std::vector<double> theta;  // after the update
  std::vector<double> grad;
  std::vector<double> grad_se;
};

struct ProbeRecord {
  int step = 0;
  double delta_vs_init = 0.0;
  double se = 0.0;
};

struct TrainState {
  std::vector<double> theta;
  std::vector<double> theta_init;
  int step = 0;  // number of completed steps
  double lr_scale = 1.0;
  std::vector<TrainRecord> history;
  std::vector<ProbeRecord> probes;
};

TrainState initial_state(const CommittorModel& family);

struct TrainCallbacks {
  std::function<void(const TrainRecord&)> on_step;
  std::function<void(const ProbeRecord&)> on_probe;
};

// Runs steps state.step .. config.n_steps - 1 in place. Step s simulates on
// round s of a seed derived from config.seed; probe after step s uses a seed
// derived from the Probe tag and s. A non-finite update throws NumericError
// with the state holding every completed step. An update whose boundary flux
// is not positive and finite, or whose q is not finite and positive inward of
// the boundary, is rejected and halves the learning rate.
void sgd_train(const CommittorModel& family, TrainState& state, const TrainConfig& config,
               const TrainCallbacks& callbacks = {});

// Checkpoint: path holds theta as raw little-endian doubles, path + ".json"
// holds {step, config_hash, lr_scale, theta_init, n_params}.
void save_checkpoint(const std::string& path, const TrainState& state, const std::string& config_hash);
TrainState load_checkpoint(const std::string& path, std::string* config_hash = nullptr);

}  // namespace tpp
