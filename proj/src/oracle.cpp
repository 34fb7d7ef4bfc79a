#include "tpplab/oracle.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "tpplab/error.hpp"

namespace tpp {

namespace {

// Composite Gauss-Legendre on [0, 1] with `panels` equal panels.
template <class F>
double composite_unit(F&& f, int panels = 4) {
  const GaussRule& r = gauss_legendre_unit(20);
  double acc = 0.0;
  const double h = 1.0 / panels;
  for (int p = 0; p < panels; ++p) {
    double s = 0.0;
    for (std::size_t k = 0; k < r.nodes.size(); ++k) s += r.weights[k] * f((p + r.nodes[k]) * h);
    acc += s * h;
  }
  return acc;
}

}  // namespace

QuadratureCommittor1D::QuadratureCommittor1D(PotentialModel potential, RegionGeometry geometry,
                                             int n_quad)
    : potential_(std::move(potential)), geometry_(std::move(geometry)), n_cells_(n_quad) {
  if (n_quad < 64) throw ConfigError("exact_committor_1d: n_quad must be >= 64");
  if (potential_.dim() != geometry_.dim())
    throw ConfigError("exact_committor_1d: potential and geometry dimensions differ");
  if (!potential_.separable_along(geometry_.axis()))
    throw ConfigError("exact_committor_1d: potential does not separate along the reaction axis");
  const double a = geometry_.a_A();
  h_ = geometry_.width() / n_cells_;
  u_ref_ = energy_at(a);
  cumulative_.assign(n_cells_ + 1, 0.0);
  double err_sum = 0.0;
  for (int i = 0; i < n_cells_; ++i) {
    double err = 0.0;
    const double v = integrate_adaptive([this](double s) { return integrand(s); }, a + i * h_,
                                        a + (i + 1) * h_, 1e-12, &err);
    cumulative_[i + 1] = cumulative_[i] + v;
    err_sum += err;
  }
  z_ = cumulative_.back();
  log_z_ = std::log(z_);
  quad_error_ = err_sum / z_;
  if (!(quad_error_ < 1e-10)) {
    std::ostringstream os;
    os << "exact_committor_1d: quadrature error " << quad_error_ << " above 1e-10";
    throw NumericError(os.str());
  }
}

double QuadratureCommittor1D::energy_at(double s) const {
  Vec p(geometry_.dim());
  p[geometry_.axis()] = s;
  return potential_.energy(p);
}

double QuadratureCommittor1D::integrand(double s) const {
  return std::exp((energy_at(s) - u_ref_) / potential_.epsilon());
}

double QuadratureCommittor1D::q_at(double s) const {
  const double a = geometry_.a_A();
  if (s <= a) return 0.0;
  if (s >= geometry_.a_B()) return 1.0;
  int i = static_cast<int>((s - a) / h_);
  i = std::clamp(i, 0, n_cells_ - 1);
  const double left = a + i * h_;
  const double len = s - left;
  const GaussRule& r = gauss_legendre_unit(20);
  double part = 0.0;
  for (std::size_t k = 0; k < r.nodes.size(); ++k)
    part += r.weights[k] * integrand(left + r.nodes[k] * len);
  return (cumulative_[i] + part * len) / z_;
}

double QuadratureCommittor1D::dq_at(double s) const { return integrand(s) / z_; }

double QuadratureCommittor1D::d2q_at(double s) const {
  Vec p(geometry_.dim());
  p[geometry_.axis()] = s;
  return dq_at(s) * potential_.gradient(p)[geometry_.axis()] / potential_.epsilon();
}

double QuadratureCommittor1D::q(const Vec& x) const {
  geometry_.check_closure(x);
  return q_at(x[geometry_.axis()]);
}

Vec QuadratureCommittor1D::grad_q(const Vec& x) const {
  geometry_.check_closure(x);
  Vec g(geometry_.dim());
  g[geometry_.axis()] = dq_at(x[geometry_.axis()]);
  return g;
}

double QuadratureCommittor1D::hjb_residual(double s) const {
  Vec p(geometry_.dim());
  p[geometry_.axis()] = s;
  const double du = potential_.gradient(p)[geometry_.axis()];
  const double qv = q_at(s);
  return (-du * dq_at(s) + potential_.epsilon() * d2q_at(s)) / qv;
}

double QuadratureCommittor1D::w2_exact(double t) const {
  const double a = geometry_.a_A();
  const double eps = potential_.epsilon();
  Vec p(geometry_.dim());
  const int ax = geometry_.axis();
  // Second derivative of log G0(s), G0(s) = int_0^1 f(a + v s) dv.
  auto h2 = [&](double s) {
    double g0 = 0.0, g1 = 0.0, g2 = 0.0;
    const GaussRule& r = gauss_legendre_unit(20);
    const int panels = 4;
    for (int pnl = 0; pnl < panels; ++pnl) {
      for (std::size_t k = 0; k < r.nodes.size(); ++k) {
        const double v = (pnl + r.nodes[k]) / panels;
        const double wt = r.weights[k] / panels;
        p[ax] = a + v * s;
        const double f = std::exp((potential_.energy(p) - u_ref_) / eps);
        const double du = potential_.gradient(p)[ax] / eps;
        const double d2u = potential_.hessian(p)(ax, ax) / eps;
        g0 += wt * f;
        g1 += wt * v * f * du;
        g2 += wt * v * v * f * (d2u + du * du);
      }
    }
    const double r1 = g1 / g0;
    return g2 / g0 - r1 * r1;
  };
  return composite_unit([&](double u) { return (1.0 - u) * h2(u * t); });
}

BasisFunction QuadratureCommittor1D::w2_basis_function(int n_cheb) const {
  const double a = geometry_.a_A();
  ChebyshevSeries series = ChebyshevSeries::fit([&](double s) { return w2_exact(s - a); }, a,
                                                geometry_.a_B(), n_cheb);
  return BasisFunction::chebyshev(geometry_.dim(), geometry_.axis(), std::move(series),
                                  "oracle_w2");
}

CommittorModel QuadratureCommittor1D::as_model(int n_cheb) const {
  Basis w0{BasisFunction::constant(geometry_.dim())};
  Basis w2{w2_basis_function(n_cheb)};
  return CommittorModel(potential_, geometry_, std::move(w0), std::move(w2), {-log_z_, 1.0}, true);
}

std::unique_ptr<QuadratureCommittor1D> exact_committor_1d(const PotentialModel& model,
                                                          const RegionGeometry& geom, int n_quad) {
  return std::make_unique<QuadratureCommittor1D>(model, geom, n_quad);
}

namespace {

inline double boltzmann(const PotentialModel& m, double x, double y) {
  return std::exp(-m.energy(Vec{x, y}) / m.epsilon());
}

// Discrete generator at one interior node, in the conservative form
// eps e^{U/eps} div(e^{-U/eps} grad q).
inline double node_residual(const PotentialModel& m, const std::vector<double>& g, int nx, int ny,
                            double x0, double hx, double y0, double hy, int i, int j) {
  const double x = x0 + i * hx;
  const double y = y0 + j * hy;
  const auto at = [&](int ii, int jj) { return g[static_cast<std::size_t>(ii) * ny + jj]; };
  const double qc = at(i, j);
  double flux = 0.0;
  flux += boltzmann(m, x + 0.5 * hx, y) * (at(i + 1, j) - qc) / (hx * hx);
  flux -= boltzmann(m, x - 0.5 * hx, y) * (qc - at(i - 1, j)) / (hx * hx);
  if (j + 1 < ny) flux += boltzmann(m, x, y + 0.5 * hy) * (at(i, j + 1) - qc) / (hy * hy);
  if (j > 0) flux -= boltzmann(m, x, y - 0.5 * hy) * (qc - at(i, j - 1)) / (hy * hy);
  (void)nx;
  return m.epsilon() * flux / boltzmann(m, x, y);
}

}  // namespace

double fd_residual_serial(const PotentialModel& model, const std::vector<double>& grid, int nx,
                          int ny, double x0, double hx, double y0, double hy) {
  double worst = 0.0;
  for (int i = 1; i < nx - 1; ++i)
    for (int j = 0; j < ny; ++j)
      worst = std::max(worst,
                       std::abs(node_residual(model, grid, nx, ny, x0, hx, y0, hy, i, j)));
  return worst;
}

double fd_residual_parallel(const PotentialModel& model, const std::vector<double>& grid, int nx,
                            int ny, double x0, double hx, double y0, double hy) {
  double worst = 0.0;
#pragma omp parallel for reduction(max : worst) schedule(static)
  for (int i = 1; i < nx - 1; ++i)
    for (int j = 0; j < ny; ++j)
      worst = std::max(worst,
                       std::abs(node_residual(model, grid, nx, ny, x0, hx, y0, hy, i, j)));
  return worst;
}

FiniteDifferenceCommittor2D::FiniteDifferenceCommittor2D(PotentialModel potential,
                                                         RegionGeometry geometry, int nx, int ny,
                                                         double y_extent)
    : potential_(std::move(potential)),
      geometry_(std::move(geometry)),
      nx_(nx),
      ny_(ny),
      y_extent_(y_extent) {
  if (nx < 32 || ny < 32) throw ConfigError("exact_committor_2d: nx and ny must be >= 32");
  if (potential_.dim() != 2 || geometry_.dim() != 2 || geometry_.axis() != 0)
    throw ConfigError("exact_committor_2d: requires a 2D potential with reaction axis 0");
  if (!(y_extent > 0.0)) throw ConfigError("exact_committor_2d: y_extent must be positive");
  x0_ = geometry_.a_A();
  hx_ = geometry_.width() / (nx - 1);
  hy_ = 2.0 * y_extent / (ny - 1);
  const double y0 = -y_extent;

  const int n_int = nx - 2;
  const int n = n_int * ny;
  const auto idx = [&](int i, int j) { return (i - 1) * ny + j; };
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) * 5);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  const PotentialModel& m = potential_;
  for (int i = 1; i < nx - 1; ++i) {
    const double x = x0_ + i * hx_;
    for (int j = 0; j < ny; ++j) {
      const double y = y0 + j * hy_;
      const int r = idx(i, j);
      const double we = boltzmann(m, x + 0.5 * hx_, y) / (hx_ * hx_);
      const double ww = boltzmann(m, x - 0.5 * hx_, y) / (hx_ * hx_);
      const double wn = j + 1 < ny ? boltzmann(m, x, y + 0.5 * hy_) / (hy_ * hy_) : 0.0;
      const double ws = j > 0 ? boltzmann(m, x, y - 0.5 * hy_) / (hy_ * hy_) : 0.0;
      // Scale rows by e^{U/eps} so that entries stay O(1 / h^2).
      const double s = 1.0 / boltzmann(m, x, y);
      trips.emplace_back(r, r, -(we + ww + wn + ws) * s);
      if (i + 1 < nx - 1) trips.emplace_back(r, idx(i + 1, j), we * s);
      else rhs[r] -= we * s;  // q = 1 on the boundary of B
      if (i - 1 > 0) trips.emplace_back(r, idx(i - 1, j), ww * s);
      if (j + 1 < ny) trips.emplace_back(r, idx(i, j + 1), wn * s);
      if (j > 0) trips.emplace_back(r, idx(i, j - 1), ws * s);
    }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success)
    throw NumericError("exact_committor_2d: sparse LU factorization failed: " + lu.lastErrorMessage());
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (lu.info() != Eigen::Success) throw NumericError("exact_committor_2d: linear solve failed");

  grid_.assign(static_cast<std::size_t>(nx) * ny, 0.0);
  for (int j = 0; j < ny; ++j) grid_[static_cast<std::size_t>(nx - 1) * ny + j] = 1.0;
  for (int i = 1; i < nx - 1; ++i)
    for (int j = 0; j < ny; ++j) grid_[static_cast<std::size_t>(i) * ny + j] = sol[idx(i, j)];

  max_residual_ = fd_residual_parallel(m, grid_, nx, ny, x0_, hx_, y0, hy_);
  if (!(max_residual_ < 1e-10)) {
    std::ostringstream os;
    os << "exact_committor_2d: discrete residual " << max_residual_ << " above 1e-10";
    throw NumericError(os.str());
  }

  ratio_.assign(grid_.size(), 0.0);
  for (int j = 0; j < ny; ++j) {
    const double q1 = node_value(1, j), q2 = node_value(2, j);
    ratio_[j] = (4.0 * q1 - q2) / (2.0 * hx_);
    for (int i = 1; i < nx; ++i)
      ratio_[static_cast<std::size_t>(i) * ny + j] = node_value(i, j) / (i * hx_);
  }
}

void FiniteDifferenceCommittor2D::interpolate(double x, double y, double& r, double& rx,
                                              double& ry) const {
  const auto sample = [&](int i, int j) {
    // Linear extrapolation for ghost nodes.
    const auto raw = [&](int ii, int jj) { return ratio_[static_cast<std::size_t>(ii) * ny_ + jj]; };
    auto col = [&](int ii) {
      if (j < 0) return 2.0 * raw(ii, 0) - raw(ii, 1);
      if (j >= ny_) return 2.0 * raw(ii, ny_ - 1) - raw(ii, ny_ - 2);
      return raw(ii, j);
    };
    if (i < 0) return 2.0 * col(0) - col(1);
    if (i >= nx_) return 2.0 * col(nx_ - 1) - col(nx_ - 2);
    return col(i);
  };
  const auto weights = [](double t, double* w, double* dw) {
    const double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t + 2.0 * t2 - t3);
    w[1] = 0.5 * (2.0 - 5.0 * t2 + 3.0 * t3);
    w[2] = 0.5 * (t + 4.0 * t2 - 3.0 * t3);
    w[3] = 0.5 * (-t2 + t3);
    dw[0] = 0.5 * (-1.0 + 4.0 * t - 3.0 * t2);
    dw[1] = 0.5 * (-10.0 * t + 9.0 * t2);
    dw[2] = 0.5 * (1.0 + 8.0 * t - 9.0 * t2);
    dw[3] = 0.5 * (-2.0 * t + 3.0 * t2);
  };
  const double fx = (x - x0_) / hx_;
  const double fy = (y + y_extent_) / hy_;
  const int i0 = std::clamp(static_cast<int>(std::floor(fx)), 0, nx_ - 2);
  const int j0 = std::clamp(static_cast<int>(std::floor(fy)), 0, ny_ - 2);
  double wx[4], dwx[4], wy[4], dwy[4];
  weights(fx - i0, wx, dwx);
  weights(fy - j0, wy, dwy);
  r = rx = ry = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const double v = sample(i0 - 1 + a, j0 - 1 + b);
      r += wx[a] * wy[b] * v;
      rx += dwx[a] * wy[b] * v;
      ry += wx[a] * dwy[b] * v;
    }
  rx /= hx_;
  ry /= hy_;
}

double FiniteDifferenceCommittor2D::q(const Vec& x) const {
  geometry_.check_closure(x);
  const double y = std::clamp(x[1], -y_extent_, y_extent_);
  double r, rx, ry;
  interpolate(x[0], y, r, rx, ry);
  return (x[0] - x0_) * r;
}

Vec FiniteDifferenceCommittor2D::grad_q(const Vec& x) const {
  geometry_.check_closure(x);
  const double y = std::clamp(x[1], -y_extent_, y_extent_);
  double r, rx, ry;
  interpolate(x[0], y, r, rx, ry);
  const double t = x[0] - x0_;
  return Vec{r + t * rx, t * ry};
}

std::unique_ptr<FiniteDifferenceCommittor2D> exact_committor_2d(const PotentialModel& model,
                                                                const RegionGeometry& geom,
                                                                int nx, int ny, double y_extent) {
  return std::make_unique<FiniteDifferenceCommittor2D>(model, geom, nx, ny, y_extent);
}

double ratio_to_exact(const CommittorModel& model, const ExactCommittorOracle& oracle,
                      const Vec& x) {
  const double T = model.geometry().T(x);
  if (T <= 0.0) {
    const CommittorEvaluation e = model.evaluate(x, kNeedGradient | kNeedValue);
    return norm(e.grad_q) / norm(oracle.grad_q(x));
  }
  const CommittorEvaluation e = model.evaluate(x, kNeedValue);
  return e.q / oracle.q(x);
}

}  // namespace tpp
