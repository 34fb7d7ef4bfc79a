#include "tpplab/numerics.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tpplab/error.hpp"

namespace tpp {

ChebyshevSeries::ChebyshevSeries(double lo, double hi, std::vector<double> coefficients)
    : lo_(lo), hi_(hi), scale_(2.0 / (hi - lo)), c0_(std::move(coefficients)) {
  if (!(lo < hi)) throw ConfigError("ChebyshevSeries: require lo < hi");
  c1_ = derivative(c0_);
  c2_ = derivative(c1_);
}

ChebyshevSeries ChebyshevSeries::fit(const std::function<double(double)>& f, double lo,
                                     double hi, int n) {
  if (n < 2) throw ConfigError("ChebyshevSeries: need at least two nodes");
  std::vector<double> fx(n);
  for (int j = 0; j < n; ++j) {
    const double s = std::cos(std::numbers::pi * (j + 0.5) / n);
    fx[j] = f(0.5 * (lo + hi) + 0.5 * (hi - lo) * s);
  }
  std::vector<double> c(n, 0.0);
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += fx[j] * std::cos(std::numbers::pi * k * (j + 0.5) / n);
    c[k] = (k == 0 ? 1.0 : 2.0) * acc / n;
  }
  return ChebyshevSeries(lo, hi, std::move(c));
}

double ChebyshevSeries::clenshaw(const std::vector<double>& c, double s) {
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) {
    const double b0 = 2.0 * s * b1 - b2 + c[k];
    b2 = b1;
    b1 = b0;
  }
  return s * b1 - b2 + (c.empty() ? 0.0 : c[0]);
}

std::vector<double> ChebyshevSeries::derivative(const std::vector<double>& c) {
  const std::size_t n = c.size();
  if (n <= 1) return {0.0};
  std::vector<double> d(n, 0.0);
  // d_{k-1} = d_{k+1} + 2k c_k, then halve d_0.
  for (std::size_t k = n - 1; k >= 1; --k) {
    d[k - 1] = (k + 1 < n ? d[k + 1] : 0.0) + 2.0 * static_cast<double>(k) * c[k];
  }
  d[0] *= 0.5;
  d.pop_back();
  return d;
}

namespace {

template <int N>
GaussRule make_rule() {
  using Rule = boost::math::quadrature::gauss<double, N>;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  // Boost stores the non-negative half of the symmetric rule.
  GaussRule r;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      r.nodes.push_back(0.5);
      r.weights.push_back(0.5 * w[i]);
      continue;
    }
    r.nodes.push_back(0.5 * (1.0 - x[i]));
    r.weights.push_back(0.5 * w[i]);
    r.nodes.push_back(0.5 * (1.0 + x[i]));
    r.weights.push_back(0.5 * w[i]);
  }
  return r;
}

}  // namespace

const GaussRule& gauss_legendre_unit(int order) {
  static const GaussRule r10 = make_rule<10>();
  static const GaussRule r20 = make_rule<20>();
  static const GaussRule r30 = make_rule<30>();
  static const GaussRule r40 = make_rule<40>();
  switch (order) {
    case 10: return r10;
    case 20: return r20;
    case 30: return r30;
    case 40: return r40;
    default: break;
  }
  throw ConfigError("gauss_legendre_unit: supported orders are 10, 20, 30, 40");
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol, double* error_out) {
  double err = 0.0, l1 = 0.0;
  const double v =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, tol, &err, &l1);
  if (error_out) *error_out = err;
  if (!std::isfinite(v) || err > tol * std::max(l1, 1e-300)) {
    std::ostringstream os;
    os << "adaptive quadrature on [" << a << ", " << b << "] did not converge: achieved error "
       << err << ", requested relative tolerance " << tol;
    throw NumericError(os.str());
  }
  return v;
}

}  // namespace tpp
