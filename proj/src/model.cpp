#include "tpplab/model.hpp"

#include <sstream>

#include "tpplab/error.hpp"

namespace tpp {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << what << " must be positive and finite, got " << v;
    throw ConfigError(os.str());
  }
}

void require_dim(const Vec& x, int dim) {
  if (x.dim != dim) {
    std::ostringstream os;
    os << "dimension mismatch: expected " << dim << ", got " << x.dim;
    throw DomainError(os.str());
  }
}

}  // namespace

PotentialModel make_double_well_1d(double barrier_scale, double epsilon) {
  require_positive(barrier_scale, "barrier_scale");
  require_positive(epsilon, "epsilon");
  PotentialModel m;
  m.kind_ = PotentialKind::DoubleWell1D;
  m.dim_ = 1;
  m.epsilon_ = epsilon;
  m.barrier_ = barrier_scale;
  m.name_ = "double_well_1d";
  return m;
}

PotentialModel make_double_well_2d(double barrier_scale, double transverse_stiffness,
                                   double epsilon) {
  require_positive(barrier_scale, "barrier_scale");
  require_positive(transverse_stiffness, "transverse_stiffness");
  require_positive(epsilon, "epsilon");
  PotentialModel m;
  m.kind_ = PotentialKind::DoubleWell2D;
  m.dim_ = 2;
  m.epsilon_ = epsilon;
  m.barrier_ = barrier_scale;
  m.stiffness_ = transverse_stiffness;
  m.name_ = "double_well_2d";
  return m;
}

PotentialModel make_harmonic(int dim, double stiffness, double epsilon) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("harmonic: dim out of range");
  require_positive(stiffness, "stiffness");
  require_positive(epsilon, "epsilon");
  PotentialModel m;
  m.kind_ = PotentialKind::Harmonic;
  m.dim_ = dim;
  m.epsilon_ = epsilon;
  m.stiffness_ = stiffness;
  m.name_ = "harmonic";
  return m;
}

PotentialModel make_flat(int dim, double epsilon) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("flat: dim out of range");
  require_positive(epsilon, "epsilon");
  PotentialModel m;
  m.kind_ = PotentialKind::Flat;
  m.dim_ = dim;
  m.epsilon_ = epsilon;
  m.name_ = "flat";
  return m;
}

double PotentialModel::energy(const Vec& x) const {
  switch (kind_) {
    case PotentialKind::DoubleWell1D: {
      const double s = x[0] * x[0] - 1.0;
      return barrier_ * s * s;
    }
    case PotentialKind::DoubleWell2D: {
      const double s = x[0] * x[0] - 1.0;
      return barrier_ * s * s + 0.5 * stiffness_ * x[1] * x[1];
    }
    case PotentialKind::Harmonic: return 0.5 * stiffness_ * norm2(x);
    case PotentialKind::Flat: return 0.0;
  }
  return 0.0;
}

Vec PotentialModel::gradient(const Vec& x) const {
  Vec g(dim_);
  switch (kind_) {
    case PotentialKind::DoubleWell1D:
      g[0] = 4.0 * barrier_ * x[0] * (x[0] * x[0] - 1.0);
      break;
    case PotentialKind::DoubleWell2D:
      g[0] = 4.0 * barrier_ * x[0] * (x[0] * x[0] - 1.0);
      g[1] = stiffness_ * x[1];
      break;
    case PotentialKind::Harmonic:
      for (int i = 0; i < dim_; ++i) g[i] = stiffness_ * x[i];
      break;
    case PotentialKind::Flat: break;
  }
  return g;
}

Mat PotentialModel::hessian(const Vec& x) const {
  Mat h;
  switch (kind_) {
    case PotentialKind::DoubleWell1D: h(0, 0) = barrier_ * (12.0 * x[0] * x[0] - 4.0); break;
    case PotentialKind::DoubleWell2D:
      h(0, 0) = barrier_ * (12.0 * x[0] * x[0] - 4.0);
      h(1, 1) = stiffness_;
      break;
    case PotentialKind::Harmonic:
      for (int i = 0; i < dim_; ++i) h(i, i) = stiffness_;
      break;
    case PotentialKind::Flat: break;
  }
  return h;
}

double PotentialModel::third(const Vec& x, int i, int j, int k) const {
  switch (kind_) {
    case PotentialKind::DoubleWell1D:
    case PotentialKind::DoubleWell2D:
      return (i == 0 && j == 0 && k == 0) ? 24.0 * barrier_ * x[0] : 0.0;
    case PotentialKind::Harmonic:
    case PotentialKind::Flat: return 0.0;
  }
  return 0.0;
}

bool PotentialModel::separable_along(int axis) const {
  switch (kind_) {
    case PotentialKind::DoubleWell1D: return axis == 0;
    case PotentialKind::DoubleWell2D: return axis == 0 || axis == 1;
    case PotentialKind::Harmonic:
    case PotentialKind::Flat: return axis < dim_;
  }
  return false;
}

RegionGeometry::RegionGeometry(RegionKind kind, int dim, double a_A, double a_B, int axis)
    : kind_(kind), dim_(dim), a_A_(a_A), a_B_(a_B), axis_(axis) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("geometry: dim out of range");
  if (kind == RegionKind::Interval1D && (dim != 1 || axis != 0))
    throw ConfigError("geometry: interval-1d requires dim = 1 and axis = 0");
  if (axis < 0 || axis >= dim) throw ConfigError("geometry: axis out of range");
  if (!(a_A < a_B) || !std::isfinite(a_A) || !std::isfinite(a_B)) {
    std::ostringstream os;
    os << "geometry: require a_A < a_B, got a_A = " << a_A << ", a_B = " << a_B;
    throw ConfigError(os.str());
  }
}

void RegionGeometry::check_closure(const Vec& x) const {
  require_dim(x, dim_);
  if (in_open_A(x) || in_open_B(x)) {
    std::ostringstream os;
    os << "point with x[" << axis_ << "] = " << x[axis_] << " is outside [" << a_A_ << ", " << a_B_
       << "]";
    throw DomainError(os.str());
  }
}

BoundaryGeometry boundary_geometry(const RegionGeometry& geom, const Vec& x) {
  geom.check_closure(x);
  BoundaryGeometry b;
  b.T = geom.T(x);
  b.grad_T = geom.grad_T();
  b.rho = geom.rho(x);
  b.h = b.T;
  b.n = geom.normal();
  return b;
}

GeneratorApplication apply_generator(const PotentialModel& model, const Vec& f_grad,
                                     double f_laplacian, const Vec& x) {
  require_dim(x, model.dim());
  require_dim(f_grad, model.dim());
  return {-dot(model.gradient(x), f_grad) + model.epsilon() * f_laplacian};
}

}  // namespace tpp
