#pragma once

#include <memory>
#include <vector>

#include "tpplab/committor.hpp"
#include "tpplab/model.hpp"
#include "tpplab/numerics.hpp"

namespace tpp {

enum class OracleKind { Quadrature1D, FiniteDifference2D };

// Reference solution of L q = 0 in the transition region, q = 0 on the
// boundary of A and q = 1 on the boundary of B.
class ExactCommittorOracle {
 public:
  virtual ~ExactCommittorOracle() = default;
  virtual OracleKind kind() const = 0;
  virtual double q(const Vec& x) const = 0;
  virtual Vec grad_q(const Vec& x) const = 0;
  virtual const RegionGeometry& geometry() const = 0;
};

// Closed form along the reaction axis:
//   q(x) = int_{a_A}^{x} e^{U/eps} ds / int_{a_A}^{a_B} e^{U/eps} ds.
// Valid in any dimension when the potential separates along the axis.
class QuadratureCommittor1D final : public ExactCommittorOracle {
 public:
  QuadratureCommittor1D(PotentialModel potential, RegionGeometry geometry, int n_quad = 256);

  OracleKind kind() const override { return OracleKind::Quadrature1D; }
  const RegionGeometry& geometry() const override { return geometry_; }
  const PotentialModel& potential() const { return potential_; }

  double q(const Vec& x) const override;
  Vec grad_q(const Vec& x) const override;
  double q_at(double s) const;   // s = x[axis]
  double dq_at(double s) const;  // dq/ds
  double d2q_at(double s) const;

  // log of int_{a_A}^{a_B} exp((U(s) - U(a_A)) / eps) ds.
  double log_normalizer() const { return log_z_; }
  // Achieved absolute quadrature error estimate for the normalizer.
  double quadrature_error() const { return quad_error_; }

  // L log q + eps |grad log q|^2 at an interior point, from the closed-form
  // derivatives.
  double hjb_residual(double s) const;

  // Committor model T exp(w) reproducing this oracle: constant w0, enforced
  // w1, and w2 tabulated as a Chebyshev series of degree n_cheb - 1.
  CommittorModel as_model(int n_cheb = 64) const;
  // The tabulated quadratic remainder w2 alone, as a basis function.
  BasisFunction w2_basis_function(int n_cheb = 64) const;

 private:
  double energy_at(double s) const;
  double integrand(double s) const;  // exp((U(s) - U(a_A)) / eps)
  double w2_exact(double t) const;

  PotentialModel potential_;
  RegionGeometry geometry_;
  int n_cells_;
  double h_;
  double u_ref_;
  std::vector<double> cumulative_;  // integral up to each cell edge
  double z_ = 1.0;
  double log_z_ = 0.0;
  double quad_error_ = 0.0;
};

// Second-order conservative finite differences for the 2D problem on
// [a_A, a_B] x [-y_extent, y_extent], Dirichlet in x and reflecting in y.
class FiniteDifferenceCommittor2D final : public ExactCommittorOracle {
 public:
  FiniteDifferenceCommittor2D(PotentialModel potential, RegionGeometry geometry, int nx, int ny,
                              double y_extent);

  OracleKind kind() const override { return OracleKind::FiniteDifference2D; }
  const RegionGeometry& geometry() const override { return geometry_; }

  double q(const Vec& x) const override;
  Vec grad_q(const Vec& x) const override;

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double x_node(int i) const { return x0_ + i * hx_; }
  double y_node(int j) const { return -y_extent_ + j * hy_; }
  double node_value(int i, int j) const { return grid_[static_cast<std::size_t>(i) * ny_ + j]; }
  // max |discrete L q| over interior nodes.
  double max_residual() const { return max_residual_; }

 private:
  void interpolate(double x, double y, double& r, double& rx, double& ry) const;

  PotentialModel potential_;
  RegionGeometry geometry_;
  int nx_, ny_;
  double y_extent_;
  double x0_, hx_, hy_;
  std::vector<double> grid_;   // q at nodes, row-major in x
  std::vector<double> ratio_;  // q / T at nodes, boundary column by one-sided slope
  double max_residual_ = 0.0;
};

std::unique_ptr<QuadratureCommittor1D> exact_committor_1d(const PotentialModel& model,
                                                          const RegionGeometry& geom, int n_quad);
std::unique_ptr<FiniteDifferenceCommittor2D> exact_committor_2d(const PotentialModel& model,
                                                                const RegionGeometry& geom,
                                                                int nx, int ny, double y_extent);

// Discrete generator residual of a grid function, serial and OpenMP versions.
// Both return max |(L_h q)_ij| over interior nodes and must agree bitwise.
double fd_residual_serial(const PotentialModel& model, const std::vector<double>& grid, int nx,
                          int ny, double x0, double hx, double y0, double hy);
double fd_residual_parallel(const PotentialModel& model, const std::vector<double>& grid, int nx,
                            int ny, double x0, double hx, double y0, double hy);

// q_model / q_exact inside the region; |grad q_model| / |grad q_exact| on the
// boundary of A.
double ratio_to_exact(const CommittorModel& model, const ExactCommittorOracle& oracle,
                      const Vec& x);

}  // namespace tpp
