#include "tpplab/committor.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "tpplab/error.hpp"

namespace tpp {

CommittorModel::CommittorModel(PotentialModel potential, RegionGeometry geometry, Basis w0_basis,
                               Basis w2_basis, std::vector<double> theta,
                               bool enforce_boundary_generator_zero)
    : potential_(std::move(potential)),
      geometry_(std::move(geometry)),
      w0_(std::move(w0_basis)),
      w2_(std::move(w2_basis)),
      theta_(std::move(theta)),
      enforce_(enforce_boundary_generator_zero) {
  if (potential_.dim() != geometry_.dim())
    throw ConfigError("committor: potential and geometry dimensions differ");
  if (theta_.size() != w0_.size() + w2_.size()) {
    std::ostringstream os;
    os << "committor: theta has " << theta_.size() << " entries, basis has "
       << w0_.size() + w2_.size();
    throw ConfigError(os.str());
  }
  for (const auto& b : w0_)
    if (b.dim() != geometry_.dim()) throw ConfigError("committor: w0 basis dimension mismatch");
  for (const auto& b : w2_)
    if (b.dim() != geometry_.dim()) throw ConfigError("committor: w2 basis dimension mismatch");
  for (double t : theta_)
    if (!std::isfinite(t)) throw ConfigError("committor: non-finite theta");
}

CommittorModel CommittorModel::with_theta(std::vector<double> theta) const {
  CommittorModel m = *this;
  if (theta.size() != theta_.size()) throw ConfigError("committor: theta size mismatch");
  for (double t : theta)
    if (!std::isfinite(t)) throw NumericError("committor: non-finite theta");
  m.theta_ = std::move(theta);
  return m;
}

double CommittorModel::w1(const Vec& z) const {
  if (!enforce_) return 0.0;
  return potential_.gradient(z)[geometry_.axis()] / (2.0 * potential_.epsilon());
}

void CommittorModel::evaluate(const Vec& x, unsigned needs, CommittorEvaluation& out) const {
  geometry_.check_closure(x);
  const int d = geometry_.dim();
  const int a = geometry_.axis();
  const double eps = potential_.epsilon();
  const double T = geometry_.T(x);
  const Vec rho = geometry_.rho(x);
  const bool want_gen = needs & (kNeedGenerator | kNeedThetaGenerator);
  const bool want_grad = want_gen || (needs & kNeedGradient);

  double w = 0.0;
  Vec gw(d);
  double lap_w = 0.0;
  double normal_term = 0.0;  // (LT + 2 eps dw/dn) / T
  Vec grad_u(d);
  if (want_gen) grad_u = potential_.gradient(x);

  if (enforce_) {
    const Vec grad_u_rho = potential_.gradient(rho);
    const double w1v = grad_u_rho[a] / (2.0 * eps);
    w += T * w1v;
    if (want_grad) {
      gw[a] += w1v;
      if (d > 1) {
        const Mat h_rho = potential_.hessian(rho);
        for (int j = 0; j < d; ++j) {
          if (j == a) continue;
          gw[j] += T * h_rho(j, a) / (2.0 * eps);
          lap_w += T * potential_.third(rho, j, j, a) / (2.0 * eps);
        }
      }
    }
    if (want_gen) {
      if (T >= t_switch()) {
        normal_term = -(grad_u[a] - grad_u_rho[a]) / T;
      } else {
        Vec mid = rho;
        mid[a] += 0.5 * T;
        normal_term = -potential_.hessian(mid)(a, a);
      }
    }
  } else if (want_gen) {
    normal_term = -grad_u[a] / std::max(T, t_switch());
  }

  const std::size_t n0 = w0_.size();
  const std::size_t k = theta_.size();
  const bool keep_jets = needs & kNeedThetaGenerator;
  if (keep_jets) out.jets.resize(k);

  for (std::size_t i = 0; i < n0; ++i) {
    const double th = theta_[i];
    if (!want_grad && !keep_jets) {
      w += th * w0_[i].value(rho);
      continue;
    }
    Jet jet = w0_[i].eval(rho);
    // Composition with the retraction: no normal dependence.
    jet.grad[a] = 0.0;
    jet.d2[a] = 0.0;
    w += th * jet.value;
    gw += th * jet.grad;
    lap_w += th * jet.laplacian();
    if (keep_jets) out.jets[i] = {jet.value, jet.grad, jet.laplacian(), 0.0};
  }
  for (std::size_t j = 0; j < w2_.size(); ++j) {
    const double th = theta_[n0 + j];
    if (!want_grad && !keep_jets) {
      w += th * T * T * w2_[j].value(x);
      continue;
    }
    const Jet psi = w2_[j].eval(x);
    // g = T^2 psi.
    Jet g;
    g.value = T * T * psi.value;
    g.grad = T * T * psi.grad;
    g.grad[a] += 2.0 * T * psi.value;
    g.d2 = T * T * psi.d2;
    g.d2[a] += 2.0 * psi.value + 4.0 * T * psi.grad[a];
    const double slope_over_t = 2.0 * psi.value + T * psi.grad[a];  // (dg/dn) / T
    w += th * g.value;
    gw += th * g.grad;
    lap_w += th * g.laplacian();
    normal_term += 2.0 * eps * th * slope_over_t;
    if (keep_jets) out.jets[n0 + j] = {g.value, g.grad, g.laplacian(), slope_over_t};
  }

  out.T = T;
  out.w = w;
  const double ew = std::exp(w);
  out.q = T * ew;

  if (want_grad) {
    out.grad_w = gw;
    out.grad_q = ew * (geometry_.normal() + T * gw);
    out.grad_log_q = gw;
    out.grad_log_q[a] += (T > 0.0) ? 1.0 / T : std::numeric_limits<double>::infinity();
  }

  if (want_gen) {
    out.Lq_over_q = normal_term - dot(grad_u, gw) + eps * lap_w + eps * norm2(gw);
  }

  if (needs & kNeedThetaLogQ) {
    out.grad_theta_log_q.resize(k);
    for (std::size_t i = 0; i < n0; ++i) out.grad_theta_log_q[i] = w0_[i].value(rho);
    for (std::size_t j = 0; j < w2_.size(); ++j)
      out.grad_theta_log_q[n0 + j] = T * T * w2_[j].value(x);
  }

  if (needs & kNeedThetaGenerator) {
    out.grad_theta_Lq_over_q.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      const ParamJet& g = out.jets[i];
      out.grad_theta_Lq_over_q[i] = 2.0 * eps * g.slope_over_t - dot(grad_u, g.grad) +
                                    eps * g.laplacian + 2.0 * eps * dot(gw, g.grad);
    }
  }
}

CommittorEvaluation CommittorModel::evaluate(const Vec& x, unsigned needs) const {
  CommittorEvaluation out;
  evaluate(x, needs, out);
  return out;
}

double CommittorModel::w(const Vec& x) const {
  CommittorEvaluation out;
  evaluate(x, kNeedValue, out);
  return out.w;
}

double CommittorModel::log_q(const Vec& x) const {
  const double T = geometry_.T(x);
  if (T <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(T) + w(x);
}

double CommittorModel::log_boundary_flux(const Vec& z) const {
  // On the boundary grad q = exp(w0(z)) n.
  const Vec rho = geometry_.rho(z);
  double w0 = 0.0;
  for (std::size_t i = 0; i < w0_.size(); ++i) w0 += theta_[i] * w0_[i].value(rho);
  return w0 - potential_.energy(rho) / potential_.epsilon();
}

void CommittorModel::grad_theta_log_boundary_flux(const Vec& z, std::vector<double>& out) const {
  const Vec rho = geometry_.rho(z);
  out.assign(theta_.size(), 0.0);
  for (std::size_t i = 0; i < w0_.size(); ++i) out[i] = w0_[i].value(rho);
}

CommittorEvaluation evaluate(const CommittorModel& model, const Vec& x) {
  return model.evaluate(x, kNeedAll);
}

CommittorModel boundary_factor_model(const PotentialModel& potential,
                                     const RegionGeometry& geometry) {
  return CommittorModel(potential, geometry, {}, {}, {}, true);
}

double neumann_w1(const RegionGeometry& geometry, const PotentialModel& potential,
                  const Vec& w0_gradient_on_boundary, const Vec& z) {
  const BoundaryGeometry bg = boundary_geometry(geometry, z);
  if (std::abs(bg.T) > 1e-12 * std::max(1.0, geometry.width()))
    throw DomainError("neumann_w1: point is not on the boundary of A");
  if (w0_gradient_on_boundary.dim != geometry.dim())
    throw DomainError("neumann_w1: w0 gradient dimension mismatch");
  // L T = -dU/dn for planar T; D rho n = 0 removes the w0 term.
  const double grad_t_norm = norm(bg.grad_T);
  const double lt = -dot(potential.gradient(z), bg.grad_T);
  return -lt / (2.0 * potential.epsilon() * grad_t_norm * grad_t_norm);
}

WDecomposition decompose_w(const std::function<WJet(const Vec&)>& w,
                           const std::vector<Vec>& points, const RegionGeometry& geometry) {
  WDecomposition out;
  const int a = geometry.axis();
  for (const Vec& x : points) {
    const BoundaryGeometry bg = boundary_geometry(geometry, x);
    const WJet at_z = w(bg.rho);
    const WJet at_x = w(x);
    const double w0 = at_z.value;
    // Normal slope of w at z minus the (vanishing) tangential transport of w0.
    const double w1 = at_z.grad[a] / dot(bg.grad_T, bg.n);
    double w2;
    if (bg.T > 1e-4 * geometry.width()) {
      w2 = (at_x.value - w0 - bg.T * w1) / (bg.T * bg.T);
    } else {
      // Integral remainder int_0^1 (1 - u) w''(z + uT n) du, to O(T^2).
      w2 = at_z.d2_normal / 3.0 + at_x.d2_normal / 6.0;
    }
    const double err = std::abs(w0 + bg.T * w1 + bg.T * bg.T * w2 - at_x.value);
    out.max_reassembly_error = std::max(out.max_reassembly_error, err);
    out.w0.push_back(w0);
    out.w1.push_back(w1);
    out.w2.push_back(w2);
  }
  if (out.max_reassembly_error > 1e-8) {
    std::ostringstream os;
    os << "decompose_w: reassembly error " << out.max_reassembly_error << " exceeds 1e-8";
    throw NumericError(os.str());
  }
  return out;
}

}  // namespace tpp
