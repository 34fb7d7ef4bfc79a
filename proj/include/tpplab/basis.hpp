#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tpplab/numerics.hpp"
#include "tpplab/vec.hpp"

namespace tpp {

// Value, gradient and diagonal second derivatives of a scalar function.
struct Jet {
  double value = 0.0;
  Vec grad;
  Vec d2;  // d^2 f / dx_i^2
  double laplacian() const { return d2[0] + d2[1] + d2[2]; }
};

enum class BasisKind { Constant, Legendre, Gaussian, Chebyshev };

// One smooth basis function with analytic derivatives. Immutable.
class BasisFunction {
 public:
  static BasisFunction constant(int dim);
  // P_degree of the affine image of x[axis] from [lo, hi] to [-1, 1].
  static BasisFunction legendre(int dim, int axis, int degree, double lo, double hi);
  // exp(-|x - center|^2 / (2 width^2)).
  static BasisFunction gaussian(const Vec& center, double width);
  // Tabulated function of x[axis].
  static BasisFunction chebyshev(int dim, int axis, ChebyshevSeries series, std::string label);

  BasisKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::string& label() const { return label_; }

  Jet eval(const Vec& x) const;
  double value(const Vec& x) const;

 private:
  BasisKind kind_ = BasisKind::Constant;
  int dim_ = 1;
  int axis_ = 0;
  int degree_ = 0;
  double lo_ = -1.0, hi_ = 1.0;
  Vec center_;
  double width_ = 1.0;
  std::shared_ptr<const ChebyshevSeries> series_;
  std::string label_;
};

using Basis = std::vector<BasisFunction>;

}  // namespace tpp
