#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tpplab/committor.hpp"
#include "tpplab/entropy.hpp"
#include "tpplab/oracle.hpp"
#include "tpplab/training.hpp"

namespace tpp::cli {

struct BasisSpec {
  std::string kind;  // constant | legendre | gaussian | exact_w2
  int axis = 0;
  int degree = 0;
  double lo = -1.0, hi = 1.0;
  std::vector<double> center;
  double width = 1.0;
};

struct CommittorSpec {
  std::string family;  // exact | parametric
  std::vector<BasisSpec> w0;
  std::vector<BasisSpec> w2;
  bool enforce = true;
  std::vector<double> theta_init;  // empty means zeros
};

struct SimSpec {
  double dt = 1e-4;
  long max_steps = 10'000'000;
  int n_paths = 1000;
  std::uint64_t seed = 0;
  int noise_substeps = 1;
  bool write_trajectories = false;
  double flux_extent = 4.0;
  int flux_nodes = 1025;
};

struct SelectSpec {
  CommittorSpec tilde;
  CommittorSpec bar;
  int bar_samples = 0;
  IntegralForm form = IntegralForm::Alternative;
};

struct TrainSpec {
  int n_paths_per_step = 512;
  double lr0 = 0.05;
  double lr_decay = 0.98;
  int n_steps = 200;
  int probe_every = 0;
  int probe_paths = 512;
  int probe_bar_samples = 1000;
  IntegralForm form = IntegralForm::Direct;
};

struct HarvestSpec {
  double dt = 1e-4;
  int n_chains = 8;
  int segments_per_chain = 250;
  long max_steps_per_chain = 2'000'000'000;
  long burn_in_steps = 0;
  std::vector<double> x0;  // defaults to the minimum of A's well
};

struct OracleSpec {
  int n_quad = 256;
  int grid_points = 201;
  int nx = 129, ny = 65;
  double y_extent = 4.0;
  int kl_paths = 0;  // 0 skips the divergence report
};

// Validated run configuration. Every key of the file is consumed exactly by
// this structure; anything else is a ConfigError naming the key path.
struct RunConfig {
  std::string potential_kind;
  double barrier_scale = 1.0;
  double transverse_stiffness = 1.0;
  double stiffness = 1.0;
  int dim = 1;
  double epsilon = 0.0;

  std::string geometry_kind;
  double a_A = 0.0, a_B = 0.0;
  int axis = 0;

  std::optional<CommittorSpec> committor;
  SimSpec sim;
  std::optional<SelectSpec> select;
  std::optional<TrainSpec> train;
  std::optional<HarvestSpec> harvest;
  std::optional<OracleSpec> oracle;
  std::string output_dir;

  std::string source;  // raw file text, hashed into the manifest
};

RunConfig parse_config(const std::string& text, const std::string& origin = "config");
RunConfig load_config(const std::string& path);

// Built objects for one run.
struct Problem {
  PotentialModel potential;
  RegionGeometry geometry;
};

Problem build_problem(const RunConfig& config);
CommittorModel build_committor(const CommittorSpec& spec, const Problem& problem, int n_quad = 256);
// Quadrature oracle along the reaction axis; needs a separable potential.
std::unique_ptr<QuadratureCommittor1D> build_axis_oracle(const Problem& problem, int n_quad = 256);

TppOptions tpp_options(const SimSpec& sim);

}  // namespace tpp::cli
