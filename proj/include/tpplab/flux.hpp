#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tpplab/model.hpp"

namespace tpp {

// Unnormalized initial density m on the boundary of A with its normalizer
// mu = int m dS.
//
// Interval geometry: the boundary is the single point a_A and mu = m(a_A).
// Planar 2D geometry: the boundary is the line x[axis] = a_A, truncated to a
// transverse window [-extent, extent] and tabulated on n_nodes equispaced
// nodes. Samples are drawn exactly from the piecewise-linear interpolant of
// the tabulated density, whose normalizer is the trapezoid value of mu.
class FluxSampler {
 public:
  using LogDensity = std::function<double(const Vec&)>;

  static FluxSampler point(const RegionGeometry& geometry, LogDensity log_m);
  static FluxSampler planar(const RegionGeometry& geometry, LogDensity log_m, double extent,
                            int n_nodes);
  // point() for interval geometry, planar() otherwise.
  static FluxSampler make(const RegionGeometry& geometry, LogDensity log_m, double extent = 4.0,
                          int n_nodes = 1025);

  const RegionGeometry& geometry() const { return geometry_; }
  bool is_point() const { return nodes_.size() == 1; }

  double log_density(const Vec& z) const { return log_m_(z); }
  double log_mu() const { return log_mu_; }
  double mu() const;
  // Richardson estimate |trap(h) - trap(2h)| / 3 of the quadrature error in mu.
  double mu_se() const { return mu_se_; }
  // Composite Simpson value of mu on the same nodes (odd node count).
  double mu_simpson() const;

  // Boundary point at CDF level u in (0, 1).
  Vec point_at(double u) const;

  // int f m dS / mu on the tabulated nodes.
  double expectation(const std::function<double(const Vec&)>& f) const;

  int transverse_axis() const { return transverse_; }
  const std::vector<Vec>& nodes() const { return nodes_; }

 private:
  FluxSampler(RegionGeometry geometry, LogDensity log_m);
  void tabulate(int n_nodes, double extent);

  RegionGeometry geometry_;
  LogDensity log_m_;
  int transverse_ = 0;
  double lo_ = 0.0, h_ = 0.0;
  std::vector<Vec> nodes_;
  std::vector<double> rel_density_;  // m / exp(log_scale_) at nodes
  std::vector<double> cdf_;          // cumulative trapezoid mass at nodes (unscaled)
  double log_scale_ = 0.0;
  double log_mu_ = 0.0;
  double mu_se_ = 0.0;
};

// n initial points drawn from m / mu. Draw i uses the Flux substream of
// (seed, round) at index i, independent of all path noise.
std::vector<Vec> sample_reactive_flux(const FluxSampler& flux, int n, std::uint64_t seed,
                                      std::uint32_t round = 0);
// Same, on an arbitrary stream word (e.g. the Bar stream).
std::vector<Vec> sample_boundary(const FluxSampler& flux, int n, std::uint64_t seed,
                                 std::uint32_t stream);

}  // namespace tpp
