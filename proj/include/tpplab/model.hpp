#pragma once

#include <string>

#include "tpplab/vec.hpp"

namespace tpp {

enum class PotentialKind { DoubleWell1D, DoubleWell2D, Harmonic, Flat };

// Potential energy U, its derivatives and the temperature epsilon = k_B T.
// Immutable value type; all derivatives are analytic.
class PotentialModel {
 public:
  PotentialKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double epsilon() const { return epsilon_; }
  const std::string& name() const { return name_; }

  double energy(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;
  // Third partial derivative d^3 U / dx_i dx_j dx_k.
  double third(const Vec& x, int i, int j, int k) const;

  double laplacian(const Vec& x) const { return hessian(x).trace(); }

  // True if dU/dx_axis depends on x_axis only, so the committor between
  // two halfspaces normal to `axis` is a function of x_axis alone.
  bool separable_along(int axis) const;

  friend PotentialModel make_double_well_1d(double barrier_scale, double epsilon);
  friend PotentialModel make_double_well_2d(double barrier_scale, double transverse_stiffness,
                                            double epsilon);
  friend PotentialModel make_harmonic(int dim, double stiffness, double epsilon);
  friend PotentialModel make_flat(int dim, double epsilon);

 private:
  PotentialModel() = default;

  PotentialKind kind_ = PotentialKind::Flat;
  int dim_ = 1;
  double epsilon_ = 1.0;
  double barrier_ = 0.0;    // double wells
  double stiffness_ = 0.0;  // transverse or harmonic stiffness
  std::string name_;
};

// U(x) = barrier_scale * (x^2 - 1)^2.
PotentialModel make_double_well_1d(double barrier_scale, double epsilon);
// U(x, y) = barrier_scale * (x^2 - 1)^2 + transverse_stiffness * y^2 / 2.
PotentialModel make_double_well_2d(double barrier_scale, double transverse_stiffness,
                                   double epsilon);
// U(x) = stiffness * |x|^2 / 2.
PotentialModel make_harmonic(int dim, double stiffness, double epsilon);
// U = 0.
PotentialModel make_flat(int dim, double epsilon);

enum class RegionKind { Interval1D, HalfspacePlanar };

// A = {x : x[axis] <= a_A}, B = {x : x[axis] >= a_B}. The boundary of A is
// planar, so the tubular-neighbourhood maps are global:
//   T(x) = h(x) = x[axis] - a_A,  rho(x) = x with x[axis] := a_A,  n = e_axis.
class RegionGeometry {
 public:
  RegionGeometry(RegionKind kind, int dim, double a_A, double a_B, int axis = 0);

  RegionKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int axis() const { return axis_; }
  double a_A() const { return a_A_; }
  double a_B() const { return a_B_; }
  double width() const { return a_B_ - a_A_; }

  double T(const Vec& x) const { return x[axis_] - a_A_; }
  Vec grad_T() const { return Vec::unit(dim_, axis_); }
  Vec normal() const { return Vec::unit(dim_, axis_); }
  Vec rho(const Vec& x) const {
    Vec z = x;
    z[axis_] = a_A_;
    return z;
  }

  bool in_A(const Vec& x) const { return x[axis_] <= a_A_; }
  bool in_B(const Vec& x) const { return x[axis_] >= a_B_; }
  bool in_open_A(const Vec& x) const { return x[axis_] < a_A_; }
  bool in_open_B(const Vec& x) const { return x[axis_] > a_B_; }

  // Throws DomainError unless x lies in the closure of the transition region.
  void check_closure(const Vec& x) const;

 private:
  RegionKind kind_;
  int dim_;
  double a_A_;
  double a_B_;
  int axis_;
};

struct BoundaryGeometry {
  double T = 0.0;
  Vec grad_T;
  Vec rho;
  double h = 0.0;
  Vec n;
};

BoundaryGeometry boundary_geometry(const RegionGeometry& geom, const Vec& x);

struct GeneratorApplication {
  double value = 0.0;
};

// (L f)(x) = -grad U(x) . grad f(x) + eps * lap f(x).
GeneratorApplication apply_generator(const PotentialModel& model, const Vec& f_grad,
                                     double f_laplacian, const Vec& x);

}  // namespace tpp
