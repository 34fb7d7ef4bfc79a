#include "commands.hpp"

#include <bit>
#include <cmath>
#include <iostream>
#include <omp.h>

#include "json.hpp"

#include "artifacts.hpp"
#include "config.hpp"
#include "tpplab/error.hpp"

namespace tpp::cli {

namespace {

using nlohmann::json;

// Everything a command needs: validated config, built problem, root seed,
// config hash and the output directory.
struct Run {
  Run(const GlobalOptions& opts, const std::string& command)
      : cfg(load_config(opts.config)),
        problem(build_problem(cfg)),
        seed(opts.seed.value_or(cfg.sim.seed)),
        hash(sha256_hex(cfg.source + "\nseed=" + std::to_string(seed))),
        out(output_dir(opts, cfg), command, hash) {
    if (opts.threads < 0) throw ConfigError("--threads must be non-negative");
    if (opts.threads > 0) omp_set_num_threads(opts.threads);
  }

  static std::string output_dir(const GlobalOptions& opts, const RunConfig& cfg) {
    if (!opts.out.empty()) return opts.out;
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    throw ConfigError("output.dir: no output directory; pass --out or set output.dir");
  }

  RunConfig cfg;
  Problem problem;
  std::uint64_t seed;
  std::string hash;
  RunOutput out;
};

const CommittorSpec& require_committor(const RunConfig& cfg, const char* command) {
  if (!cfg.committor) throw ConfigError(std::string("committor: required table is missing for ") + command);
  return *cfg.committor;
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

json tails_json(const TailDiagnostics& t) {
  return {{"kurtosis", t.kurtosis},
          {"max_over_median", t.max_over_median},
          {"tau_m2_half", t.tau_m2_half},
          {"tau_m2_full", t.tau_m2_full},
          {"ok", t.ok}};
}

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

double se_of(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
}

std::string trajectories_bin(const std::vector<PathRecord>& recs) {
  static_assert(std::endian::native == std::endian::little, "trajectory dump assumes little endian");
  std::string bytes;
  const auto put = [&](double v) { bytes.append(reinterpret_cast<const char*>(&v), sizeof v); };
  for (const PathRecord& r : recs) {
    const int dim = r.initial_point.dim;
    put(dim);
    put(static_cast<double>(r.states.size()) - 1.0);
    put(r.dt);
    for (const Vec& x : r.states)
      for (int i = 0; i < dim; ++i) put(x[i]);
  }
  return bytes;
}

}  // namespace

void cmd_simulate(const GlobalOptions& opts) {
  Run run(opts, "simulate");
  const RunConfig& cfg = run.cfg;
  const CommittorModel model = build_committor(require_committor(cfg, "simulate"), run.problem);
  const FluxSampler flux = flux_theta(model, cfg.sim.flux_extent, cfg.sim.flux_nodes);
  TppOptions o = tpp_options(cfg.sim);
  o.store_states = cfg.sim.write_trajectories;
  std::vector<PathRecord> recs = simulate_ensemble(TppSimulator(model, o), flux, cfg.sim.n_paths, run.seed);

  const int dim = run.problem.geometry.dim();
  std::vector<std::string> cols{"path_id", "tau", "n_steps", "functional_direct", "functional_alt", "log_q_tau"};
  for (int i = 0; i < dim; ++i) cols.push_back("y0_" + std::to_string(i));
  CsvTable ens(cols);
  std::vector<double> taus;
  long reentries = 0, capped = 0;
  for (const PathRecord& r : recs) {
    ens.cell(static_cast<long long>(r.path_id)).cell(r.tau).cell(static_cast<long long>(r.n_steps));
    ens.cell(r.functional_direct).cell(r.functional_alt).cell(r.log_q_at_tau);
    for (int i = 0; i < dim; ++i) ens.cell(r.initial_point[i]);
    ens.end_row();
    taus.push_back(r.tau);
    reentries += r.reentries;
    capped += r.capped_steps;
  }
  if (cfg.sim.write_trajectories) run.out.write("trajectories.bin", trajectories_bin(recs));
  run.out.write("ensemble.csv", ens.text());

  const WeightedEnsemble w = weight_ensemble(std::move(recs), model, flux, IntegralForm::Alternative);
  const bool low_ess = w.effective_sample_size < 10.0;
  CsvTable wt({"path_id", "log_z_shifted", "log_q_tau", "log_m_over_flux", "integral_term", "ess_flag"});
  for (std::size_t i = 0; i < w.records.size(); ++i) {
    const LogWeight& lw = w.log_weights[i];
    wt.cell(static_cast<long long>(w.records[i].path_id)).cell(lw.log_z_shifted).cell(lw.log_q_tau);
    wt.cell(lw.log_m_over_flux).cell(lw.integral_term).cell(static_cast<long long>(low_ess));
    wt.end_row();
  }
  run.out.write("weights.csv", wt.text());

  json summary{{"n_paths", taus.size()},
               {"seed", run.seed},
               {"tau_mean", mean_of(taus)},
               {"tau_se", se_of(taus)},
               {"effective_sample_size", w.effective_sample_size},
               {"low_ess", low_ess},
               {"reentries", reentries},
               {"capped_steps", capped}};
  if (taus.size() >= 2) {
    const LogEstimate r = log_nu_over_mu(w);
    summary["log_nu_over_mu_experimental"] = {{"value", r.value}, {"se", r.se}};
  }
  run.out.write("summary.json", json_text(summary));
  run.out.write_manifest();
}

void cmd_harvest(const GlobalOptions& opts) {
  Run run(opts, "harvest");
  const RunConfig& cfg = run.cfg;
  if (!cfg.harvest) throw ConfigError("harvest: required table is missing");
  const HarvestSpec& h = *cfg.harvest;
  const RegionGeometry& g = run.problem.geometry;
  Vec x0(g.dim());
  x0[g.axis()] = g.a_A();
  for (std::size_t i = 0; i < h.x0.size(); ++i) x0[static_cast<int>(i)] = h.x0[i];

  HarvestOptions ho;
  ho.dt = h.dt;
  ho.n_chains = h.n_chains;
  ho.segments_per_chain = h.segments_per_chain;
  ho.max_steps_per_chain = h.max_steps_per_chain;
  ho.burn_in_steps = h.burn_in_steps;
  const HarvestResult res = harvest_durations(run.problem.potential, g, x0, ho, run.seed);

  CsvTable dur({"segment", "chain", "duration"});
  for (std::size_t i = 0; i < res.durations.size(); ++i) {
    dur.cell(static_cast<long long>(i)).cell(static_cast<long long>(res.chain[i])).cell(res.durations[i]);
    dur.end_row();
  }
  run.out.write("durations.csv", dur.text());

  json summary{{"n_segments", res.durations.size()},
               {"seed", run.seed},
               {"total_steps", res.total_steps},
               {"budget_exhausted", res.budget_exhausted},
               {"duration_mean", mean_of(res.durations)},
               {"duration_se", se_of(res.durations)}};

  // With a committor, compare against transition-path-process hitting times.
  if (cfg.committor && !res.durations.empty()) {
    const CommittorModel model = build_committor(*cfg.committor, run.problem);
    const FluxSampler flux = flux_theta(model, cfg.sim.flux_extent, cfg.sim.flux_nodes);
    TppOptions o = tpp_options(cfg.sim);
    o.dt = h.dt;
    const auto recs = simulate_ensemble(TppSimulator(model, o), flux, static_cast<int>(res.durations.size()),
                                       derive_seed(run.seed, static_cast<std::uint64_t>(Stream::Path)));
    std::vector<double> taus;
    CsvTable tt({"path_id", "tau"});
    for (const PathRecord& r : recs) {
      taus.push_back(r.tau);
      tt.cell(static_cast<long long>(r.path_id)).cell(r.tau);
      tt.end_row();
    }
    run.out.write("tpp_tau.csv", tt.text());
    const double d = ks_statistic(res.durations, taus);
    const double crit = ks_critical_value(0.01, res.durations.size(), taus.size());
    summary["ks"] = {{"statistic", d}, {"critical_value_1pct", crit}, {"below_critical", d < crit},
                     {"tau_mean", mean_of(taus)}, {"tau_se", se_of(taus)}};
  }
  run.out.write("harvest.json", json_text(summary));
  run.out.write_manifest();
}

void cmd_select(const GlobalOptions& opts) {
  Run run(opts, "select");
  const RunConfig& cfg = run.cfg;
  if (!cfg.select) throw ConfigError("select: required table is missing");
  const SelectSpec& sel = *cfg.select;
  const CommittorModel tilde = build_committor(sel.tilde, run.problem);
  const CommittorModel bar = build_committor(sel.bar, run.problem);
  const FluxSampler ft = flux_theta(tilde, cfg.sim.flux_extent, cfg.sim.flux_nodes);
  const FluxSampler fb = flux_theta(bar, cfg.sim.flux_extent, cfg.sim.flux_nodes);
  SelectionSettings s;
  s.n_paths = cfg.sim.n_paths;
  s.bar_samples = sel.bar_samples;
  s.sim = tpp_options(cfg.sim);
  s.form = sel.form;
  const SelectionReport r = select(tilde, ft, bar, fb, s, run.seed);

  json report{
      {"delta", r.delta},
      {"se", r.se},
      {"components",
       {{"log_mu_ratio", r.log_mu_ratio},
        {"log_mu_ratio_se", r.ratio.se},
        {"i_tilde", r.i_tilde},
        {"i_tilde_se", r.tilde.se},
        {"i_bar", r.i_bar},
        {"i_bar_se", r.bar.se}}},
      {"diagnostics",
       {{"ess", {{"tilde", r.ess_tilde}, {"bar", r.ess_bar}}},
        {"tail_checks", {{"tilde", tails_json(r.tilde.tails)}, {"bar", tails_json(r.bar.tails)}}},
        {"bar_converged", r.ratio.converged},
        {"bar_overlap", r.ratio.overlap},
        {"bar_iterations", r.ratio.iterations}}},
      {"n_paths", s.n_paths},
      {"bar_samples", s.bar_samples},
      {"form", s.form == IntegralForm::Direct ? "direct" : "alternative"},
      {"seed", run.seed}};
  run.out.write("select.json", json_text(report));
  run.out.write_manifest();
}

void cmd_train(const GlobalOptions& opts) {
  Run run(opts, "train");
  const RunConfig& cfg = run.cfg;
  const CommittorModel family = build_committor(require_committor(cfg, "train"), run.problem);
  if (!cfg.train) throw ConfigError("train: required table is missing");
  const TrainSpec& t = *cfg.train;
  TrainConfig tc;
  tc.n_paths_per_step = t.n_paths_per_step;
  tc.lr0 = t.lr0;
  tc.lr_decay = t.lr_decay;
  tc.n_steps = t.n_steps;
  tc.probe_every = t.probe_every;
  tc.probe_paths = t.probe_paths;
  tc.probe_bar_samples = t.probe_bar_samples;
  tc.sim = tpp_options(cfg.sim);
  tc.form = t.form;
  tc.flux_extent = cfg.sim.flux_extent;
  tc.flux_nodes = cfg.sim.flux_nodes;
  tc.seed = run.seed;

  TrainState state = initial_state(family);
  if (!opts.resume.empty()) {
    std::string hash;
    state = load_checkpoint(opts.resume, &hash);
    if (hash != run.hash)
      std::cerr << "tpplab train: warning: checkpoint was written under config hash " << hash << "\n";
  }

  std::string steps, probes;
  TrainCallbacks cb;
  cb.on_step = [&](const TrainRecord& r) {
    steps += json{{"step", r.step},
                  {"theta_norm", r.theta_norm},
                  {"grad_norm", r.grad_norm},
                  {"j_n", r.j_n},
                  {"lr", r.lr},
                  {"rejected", r.rejected},
                  {"theta", r.theta},
                  {"grad", r.grad},
                  {"grad_se", r.grad_se}}
                 .dump() +
             "\n";
  };
  cb.on_probe = [&](const ProbeRecord& p) {
    probes += json{{"step", p.step}, {"delta_vs_init", p.delta_vs_init}, {"se", p.se}}.dump() + "\n";
  };
  // Artifacts are committed even when a step fails, so the history survives.
  const auto commit = [&](const char* status) {
    run.out.write("train.jsonl", steps);
    run.out.write("probes.jsonl", probes);
    save_checkpoint(run.out.path("checkpoint.bin"), state, run.hash);
    run.out.adopt("checkpoint.bin");
    run.out.adopt("checkpoint.bin.json");
    json summary{{"status", status},
                 {"steps_completed", state.step},
                 {"theta_init", state.theta_init},
                 {"theta_final", state.theta},
                 {"lr_scale", state.lr_scale},
                 {"seed", run.seed}};
    if (!state.history.empty()) {
      summary["grad_norm_first"] = state.history.front().grad_norm;
      summary["grad_norm_last"] = state.history.back().grad_norm;
    }
    if (!state.probes.empty())
      summary["final_probe"] = {{"step", state.probes.back().step},
                                {"delta_vs_init", state.probes.back().delta_vs_init},
                                {"se", state.probes.back().se}};
    run.out.write("train.json", json_text(summary));
    run.out.write_manifest();
  };
  try {
    sgd_train(family, state, tc, cb);
  } catch (const Error&) {
    commit("failed");
    throw;
  }
  commit("ok");
}

void cmd_oracle(const GlobalOptions& opts) {
  Run run(opts, "oracle");
  const RunConfig& cfg = run.cfg;
  const OracleSpec o = cfg.oracle.value_or(OracleSpec{});
  const auto oracle = build_axis_oracle(run.problem, o.n_quad);
  const RegionGeometry& g = run.problem.geometry;
  const double lo = g.a_A(), hi = g.a_B();

  CsvTable grid({"x", "q", "dq", "hjb_residual"});
  double max_hjb = 0.0;
  for (int i = 0; i < o.grid_points; ++i) {
    const double s = i == o.grid_points - 1 ? hi : lo + (hi - lo) * i / (o.grid_points - 1);
    const double q = oracle->q_at(s);
    grid.cell(s).cell(q).cell(oracle->dq_at(s));
    if (i > 0 && i < o.grid_points - 1 && q > 1e-12) {
      const double r = oracle->hjb_residual(s);
      max_hjb = std::max(max_hjb, std::abs(r));
      grid.cell(r);
    } else {
      grid.empty_cell();
    }
    grid.end_row();
  }
  run.out.write("committor_grid.csv", grid.text());

  const double log_nu = oracle_log_nu(*oracle, run.problem.potential, cfg.sim.flux_extent, cfg.sim.flux_nodes);
  json report{{"q_midpoint", oracle->q_at(0.5 * (lo + hi))},
              {"max_hjb_residual", max_hjb},
              {"quadrature_error", oracle->quadrature_error()},
              {"log_normalizer", oracle->log_normalizer()},
              {"log_nu", log_nu},
              {"seed", run.seed}};

  if (g.dim() == 2) {
    const auto fd = exact_committor_2d(run.problem.potential, g, o.nx, o.ny, o.y_extent);
    CsvTable g2({"x", "y", "q"});
    double diff = 0.0;
    for (int i = 0; i < fd->nx(); ++i)
      for (int j = 0; j < fd->ny(); ++j) {
        g2.cell(fd->x_node(i)).cell(fd->y_node(j)).cell(fd->node_value(i, j));
        g2.end_row();
        diff = std::max(diff, std::abs(fd->node_value(i, j) - oracle->q_at(fd->x_node(i))));
      }
    run.out.write("committor_grid_2d.csv", g2.text());
    report["fd_2d"] = {{"nx", fd->nx()}, {"ny", fd->ny()}, {"max_residual", fd->max_residual()},
                       {"max_abs_diff_vs_axis_oracle", diff}};
  }

  if (cfg.committor && o.kl_paths > 0) {
    const CommittorModel model = build_committor(*cfg.committor, run.problem, o.n_quad);
    SelectionSettings s;
    s.n_paths = o.kl_paths;
    s.sim = tpp_options(cfg.sim);
    const KlEstimate k = oracle_kl(model, flux_theta(model, cfg.sim.flux_extent, cfg.sim.flux_nodes), log_nu, s,
                                   run.seed);
    report["kl"] = {{"d_kl", k.d_kl},
                    {"se", k.se},
                    {"log_nu", k.log_nu},
                    {"log_mu", k.log_mu},
                    {"boundary_term", k.boundary_term},
                    {"path_term", k.path_term}};
  }
  run.out.write("oracle.json", json_text(report));
  run.out.write_manifest();
}

int run_subcommand(const std::string& name, const GlobalOptions& options) {
  try {
    if (name == "simulate") cmd_simulate(options);
    else if (name == "harvest") cmd_harvest(options);
    else if (name == "select") cmd_select(options);
    else if (name == "train") cmd_train(options);
    else if (name == "oracle") cmd_oracle(options);
    else throw ConfigError("unknown subcommand " + name);
    return 0;
  } catch (const Error& e) {
    std::cerr << "tpplab " << name << ": error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "tpplab " << name << ": internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tpp::cli
