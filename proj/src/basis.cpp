#include "tpplab/basis.hpp"

#include <sstream>

#include "tpplab/error.hpp"

namespace tpp {

BasisFunction BasisFunction::constant(int dim) {
  BasisFunction b;
  b.kind_ = BasisKind::Constant;
  b.dim_ = dim;
  b.label_ = "constant";
  return b;
}

BasisFunction BasisFunction::legendre(int dim, int axis, int degree, double lo, double hi) {
  if (axis < 0 || axis >= dim) throw ConfigError("legendre basis: axis out of range");
  if (degree < 0 || degree > 32) throw ConfigError("legendre basis: degree must be in [0, 32]");
  if (!(lo < hi)) throw ConfigError("legendre basis: require lo < hi");
  BasisFunction b;
  b.kind_ = BasisKind::Legendre;
  b.dim_ = dim;
  b.axis_ = axis;
  b.degree_ = degree;
  b.lo_ = lo;
  b.hi_ = hi;
  std::ostringstream os;
  os << "legendre(axis=" << axis << ",degree=" << degree << ")";
  b.label_ = os.str();
  return b;
}

BasisFunction BasisFunction::gaussian(const Vec& center, double width) {
  if (!(width > 0.0)) throw ConfigError("gaussian basis: width must be positive");
  BasisFunction b;
  b.kind_ = BasisKind::Gaussian;
  b.dim_ = center.dim;
  b.center_ = center;
  b.width_ = width;
  b.label_ = "gaussian";
  return b;
}

BasisFunction BasisFunction::chebyshev(int dim, int axis, ChebyshevSeries series,
                                       std::string label) {
  if (axis < 0 || axis >= dim) throw ConfigError("chebyshev basis: axis out of range");
  BasisFunction b;
  b.kind_ = BasisKind::Chebyshev;
  b.dim_ = dim;
  b.axis_ = axis;
  b.series_ = std::make_shared<const ChebyshevSeries>(std::move(series));
  b.label_ = std::move(label);
  return b;
}

Jet BasisFunction::eval(const Vec& x) const {
  Jet j;
  j.grad = Vec(dim_);
  j.d2 = Vec(dim_);
  switch (kind_) {
    case BasisKind::Constant: j.value = 1.0; break;
    case BasisKind::Legendre: {
      const double scale = 2.0 / (hi_ - lo_);
      const double s = (2.0 * x[axis_] - lo_ - hi_) / (hi_ - lo_);
      double p0 = 1.0, p1 = s;    // P_{k-1}, P_k
      double d0 = 0.0, d1 = 1.0;  // P'_{k-1}, P'_k
      double e0 = 0.0, e1 = 0.0;  // P''_{k-1}, P''_k
      if (degree_ == 0) {
        p1 = 1.0;
        d1 = 0.0;
      }
      for (int k = 1; k < degree_; ++k) {
        const double p2 = ((2 * k + 1) * s * p1 - k * p0) / (k + 1);
        const double d2 = d0 + (2 * k + 1) * p1;
        const double e2 = e0 + (2 * k + 1) * d1;
        p0 = p1, p1 = p2;
        d0 = d1, d1 = d2;
        e0 = e1, e1 = e2;
      }
      j.value = p1;
      j.grad[axis_] = d1 * scale;
      j.d2[axis_] = e1 * scale * scale;
      break;
    }
    case BasisKind::Gaussian: {
      const Vec r = x - center_;
      const double inv = 1.0 / (width_ * width_);
      const double g = std::exp(-0.5 * norm2(r) * inv);
      j.value = g;
      for (int i = 0; i < dim_; ++i) {
        j.grad[i] = -r[i] * inv * g;
        j.d2[i] = (r[i] * r[i] * inv - 1.0) * inv * g;
      }
      break;
    }
    case BasisKind::Chebyshev:
      j.value = series_->value(x[axis_]);
      j.grad[axis_] = series_->d1(x[axis_]);
      j.d2[axis_] = series_->d2(x[axis_]);
      break;
  }
  return j;
}

double BasisFunction::value(const Vec& x) const {
  switch (kind_) {
    case BasisKind::Constant: return 1.0;
    case BasisKind::Chebyshev: return series_->value(x[axis_]);
    default: return eval(x).value;
  }
}

}  // namespace tpp
