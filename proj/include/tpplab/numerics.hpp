#pragma once

#include <functional>
#include <vector>

namespace tpp {

// Chebyshev series on [lo, hi], sum_k c_k T_k(s) with s the affine image of x
// in [-1, 1]. Derivative series are precomputed so that value, first and
// second derivatives cost one Clenshaw pass each.
class ChebyshevSeries {
 public:
  ChebyshevSeries() = default;
  ChebyshevSeries(double lo, double hi, std::vector<double> coefficients);

  // Interpolate f at n Chebyshev points of the first kind.
  static ChebyshevSeries fit(const std::function<double(double)>& f, double lo, double hi,
                             int n);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<double>& coefficients() const { return c0_; }

  double value(double x) const { return clenshaw(c0_, to_unit(x)); }
  double d1(double x) const { return clenshaw(c1_, to_unit(x)) * scale_; }
  double d2(double x) const { return clenshaw(c2_, to_unit(x)) * scale_ * scale_; }

 private:
  double to_unit(double x) const { return (2.0 * x - lo_ - hi_) / (hi_ - lo_); }
  static double clenshaw(const std::vector<double>& c, double s);
  static std::vector<double> derivative(const std::vector<double>& c);

  double lo_ = -1.0;
  double hi_ = 1.0;
  double scale_ = 1.0;  // ds/dx
  std::vector<double> c0_, c1_, c2_;
};

// Fixed-order Gauss-Legendre rule on [0, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre_unit(int order);

// Adaptive Gauss-Kronrod integral of f over [a, b]. Throws NumericError if
// the estimated error exceeds tol (relative to the L1 norm).
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol, double* error_out = nullptr);

}  // namespace tpp
