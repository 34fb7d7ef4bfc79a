#include "tpplab/flux.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tpplab/error.hpp"
#include "tpplab/rng.hpp"

namespace tpp {

FluxSampler::FluxSampler(RegionGeometry geometry, LogDensity log_m)
    : geometry_(std::move(geometry)), log_m_(std::move(log_m)) {
  if (!log_m_) throw ConfigError("flux: missing density");
}

FluxSampler FluxSampler::point(const RegionGeometry& geometry, LogDensity log_m) {
  if (geometry.kind() != RegionKind::Interval1D)
    throw ConfigError("flux: point boundary requires interval geometry");
  FluxSampler f(geometry, std::move(log_m));
  Vec z(geometry.dim());
  z[geometry.axis()] = geometry.a_A();
  const double lm = f.log_m_(z);
  if (std::isnan(lm) || lm == -INFINITY || lm == INFINITY)
    throw NumericError("flux: density at the boundary point is zero or not finite");
  f.nodes_ = {z};
  f.rel_density_ = {1.0};
  f.cdf_ = {1.0};
  f.log_scale_ = lm;
  f.log_mu_ = lm;
  return f;
}

FluxSampler FluxSampler::planar(const RegionGeometry& geometry, LogDensity log_m, double extent,
                                int n_nodes) {
  if (geometry.kind() != RegionKind::HalfspacePlanar || geometry.dim() != 2)
    throw ConfigError("flux: tabulated boundary requires planar 2D geometry");
  if (n_nodes < 512) throw ConfigError("flux: boundary grid needs at least 512 nodes");
  if (!(extent > 0.0)) throw ConfigError("flux: transverse extent must be positive");
  FluxSampler f(geometry, std::move(log_m));
  f.transverse_ = 1 - geometry.axis();
  f.tabulate(n_nodes | 1, extent);
  return f;
}

FluxSampler FluxSampler::make(const RegionGeometry& geometry, LogDensity log_m, double extent,
                              int n_nodes) {
  if (geometry.kind() == RegionKind::Interval1D) return point(geometry, std::move(log_m));
  return planar(geometry, std::move(log_m), extent, n_nodes);
}

void FluxSampler::tabulate(int n, double extent) {
  lo_ = -extent;
  h_ = 2.0 * extent / (n - 1);
  nodes_.resize(n);
  std::vector<double> lm(n);
  log_scale_ = -INFINITY;
  for (int i = 0; i < n; ++i) {
    Vec z(geometry_.dim());
    z[geometry_.axis()] = geometry_.a_A();
    z[transverse_] = lo_ + i * h_;
    nodes_[i] = z;
    lm[i] = log_m_(z);
    if (std::isnan(lm[i]) || lm[i] == INFINITY) {
      std::ostringstream os;
      os << "flux: density not finite at boundary node " << i;
      throw NumericError(os.str());
    }
    log_scale_ = std::max(log_scale_, lm[i]);
  }
  if (log_scale_ == -INFINITY) throw NumericError("flux: density is identically zero");

  rel_density_.resize(n);
  for (int i = 0; i < n; ++i) rel_density_[i] = std::exp(lm[i] - log_scale_);
  cdf_.assign(n, 0.0);
  for (int i = 1; i < n; ++i) cdf_[i] = cdf_[i - 1] + 0.5 * h_ * (rel_density_[i - 1] + rel_density_[i]);
  const double trap = cdf_.back();

  double coarse = 0.0;
  for (int i = 2; i < n; i += 2) coarse += h_ * (rel_density_[i - 2] + rel_density_[i]);
  log_mu_ = log_scale_ + std::log(trap);
  mu_se_ = std::abs(trap - coarse) / 3.0 * std::exp(log_scale_);
}

double FluxSampler::mu() const { return std::exp(log_mu_); }

double FluxSampler::mu_simpson() const {
  if (is_point()) return mu();
  const std::size_t n = rel_density_.size();
  double s = rel_density_.front() + rel_density_.back();
  for (std::size_t i = 1; i + 1 < n; ++i) s += (i % 2 ? 4.0 : 2.0) * rel_density_[i];
  return s * h_ / 3.0 * std::exp(log_scale_);
}

Vec FluxSampler::point_at(double u) const {
  if (is_point()) return nodes_.front();
  const double target = u * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  std::size_t j = static_cast<std::size_t>(std::distance(cdf_.begin(), it));
  j = std::clamp<std::size_t>(j, 1, cdf_.size() - 1) - 1;
  // Invert the quadratic cell CDF a s + (b - a) s^2 / (2h) = r.
  const double a = rel_density_[j], b = rel_density_[j + 1];
  const double r = std::max(0.0, target - cdf_[j]);
  const double disc = a * a + 2.0 * (b - a) * r / h_;
  const double denom = a + std::sqrt(std::max(0.0, disc));
  double s = denom > 0.0 ? 2.0 * r / denom : 0.0;
  s = std::clamp(s, 0.0, h_);
  Vec z = nodes_[j];
  z[transverse_] = lo_ + j * h_ + s;
  return z;
}

double FluxSampler::expectation(const std::function<double(const Vec&)>& f) const {
  if (is_point()) return f(nodes_.front());
  const std::size_t n = nodes_.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wgt = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
    if (rel_density_[i] > 0.0) acc += wgt * rel_density_[i] * f(nodes_[i]);
  }
  return acc * h_ / cdf_.back();
}

std::vector<Vec> sample_reactive_flux(const FluxSampler& flux, int n, std::uint64_t seed,
                                      std::uint32_t round) {
  return sample_boundary(flux, n, seed, stream_word(Stream::Flux, round));
}

std::vector<Vec> sample_boundary(const FluxSampler& flux, int n, std::uint64_t seed,
                                 std::uint32_t stream) {
  if (n < 0) throw ConfigError("flux: negative sample count");
  std::vector<Vec> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    NormalStream rng(seed, stream, static_cast<std::uint32_t>(i));
    out[static_cast<std::size_t>(i)] = flux.point_at(rng.uniform());
  }
  return out;
}

}  // namespace tpp
