#pragma once

#include <functional>
#include <vector>

#include "tpplab/basis.hpp"
#include "tpplab/model.hpp"

namespace tpp {

// Bit flags selecting which fields of CommittorEvaluation are filled.
enum Need : unsigned {
  kNeedValue = 1u,           // T, w, q
  kNeedGradient = 2u,        // grad_w, grad_q, grad_log_q
  kNeedGenerator = 4u,       // Lq_over_q
  kNeedThetaLogQ = 8u,       // grad_theta_log_q
  kNeedThetaGenerator = 16u, // grad_theta_Lq_over_q
  kNeedAll = 31u,
};

// Derivatives of one parameter direction g_k = d w / d theta_k.
struct ParamJet {
  double value = 0.0;
  Vec grad;
  double laplacian = 0.0;
  double slope_over_t = 0.0;  // (dg/dn) / T
};

struct CommittorEvaluation {
  double T = 0.0;
  double w = 0.0;  // log(q / T)
  double q = 0.0;
  Vec grad_w;
  Vec grad_q;
  Vec grad_log_q;  // normal component is +inf on the boundary of A
  double Lq_over_q = 0.0;
  std::vector<double> grad_theta_log_q;
  std::vector<double> grad_theta_Lq_over_q;

  // Per-call scratch, reused across evaluations to avoid allocation.
  std::vector<ParamJet> jets;
};

// q_theta(x) = T(x) exp(w(x)) with
//   w(x) = w0(rho(x)) + T(x) w1(rho(x)) + T(x)^2 w2(x),
//   w0 = sum_k theta_k phi_k,  w2 = sum_j theta_{n0 + j} psi_j,
// and w1 either zero or the value that makes L q_theta vanish on the boundary
// of A. The potential and geometry are held by value.
class CommittorModel {
 public:
  CommittorModel(PotentialModel potential, RegionGeometry geometry, Basis w0_basis,
                 Basis w2_basis, std::vector<double> theta, bool enforce_boundary_generator_zero);

  const PotentialModel& potential() const { return potential_; }
  const RegionGeometry& geometry() const { return geometry_; }
  const Basis& w0_basis() const { return w0_; }
  const Basis& w2_basis() const { return w2_; }
  const std::vector<double>& theta() const { return theta_; }
  bool enforces_boundary_generator_zero() const { return enforce_; }
  int n_params() const { return static_cast<int>(theta_.size()); }
  int n_w0() const { return static_cast<int>(w0_.size()); }

  // Below this distance from the boundary of A the generator quotient is
  // replaced by its boundary-limit expansion.
  double t_switch() const { return 1e-6 * geometry_.width(); }

  CommittorModel with_theta(std::vector<double> theta) const;

  void evaluate(const Vec& x, unsigned needs, CommittorEvaluation& out) const;
  CommittorEvaluation evaluate(const Vec& x, unsigned needs = kNeedAll) const;

  double w(const Vec& x) const;
  double log_q(const Vec& x) const;
  // Boundary coefficient w1(z) for z on the boundary of A.
  double w1(const Vec& z) const;
  // log(grad q . n * exp(-U / eps)) at a boundary point.
  double log_boundary_flux(const Vec& z) const;
  // d/dtheta of log(grad q . n) at a boundary point.
  void grad_theta_log_boundary_flux(const Vec& z, std::vector<double>& out) const;

 private:
  PotentialModel potential_;
  RegionGeometry geometry_;
  Basis w0_;
  Basis w2_;
  std::vector<double> theta_;
  bool enforce_;
};

CommittorEvaluation evaluate(const CommittorModel& model, const Vec& x);

// S(x) = T(x) exp(T(x) w1(rho(x))): no free parameters and zero generator on
// the boundary of A. Reference factor for the alternative path integral.
CommittorModel boundary_factor_model(const PotentialModel& potential,
                                     const RegionGeometry& geometry);

// Coefficient w1(z) that makes L(T e^w) vanish at z on the boundary of A,
// given the boundary gradient of w0. For planar geometry the retraction
// annihilates the normal direction, so the w0 contribution drops out.
double neumann_w1(const RegionGeometry& geometry, const PotentialModel& potential,
                  const Vec& w0_gradient_on_boundary, const Vec& z);

struct WJet {
  double value = 0.0;
  Vec grad;
  double d2_normal = 0.0;  // second derivative along the boundary normal
};

struct WDecomposition {
  std::vector<double> w0;
  std::vector<double> w1;
  std::vector<double> w2;
  double max_reassembly_error = 0.0;
};

// Split w into boundary value, normal slope and quadratic remainder at the
// given points. Throws NumericError if w0 + T w1 + T^2 w2 misses w by > 1e-8.
WDecomposition decompose_w(const std::function<WJet(const Vec&)>& w,
                           const std::vector<Vec>& points, const RegionGeometry& geometry);

}  // namespace tpp
