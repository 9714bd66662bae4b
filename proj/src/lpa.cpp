#include "bmtl/lpa.hpp"

#include <cmath>

namespace bmtl {

double smooth_step(double u, double scale) {
  if (u <= 0) return 0.0;
  if (u >= 1) return 1.0;
  return 1.0 / (1.0 + std::exp(scale * (1.0 / u - 1.0 / (1.0 - u))));
}

double AdmissiblePair::phi(double r) const {
  if (r <= 0.5 || r >= 2.0) return 0.0;
  if (r < 0.6) return smooth_step((r - 0.5) / 0.1, smoothness);
  if (r <= 5.0 / 3.0) return 1.0;
  return smooth_step((2.0 - r) / (1.0 / 3.0), smoothness);
}

double AdmissiblePair::energy(double r) const {
  if (r <= 0) return 0.0;
  const int base = static_cast<int>(std::floor(std::log2(r)));
  double acc = 0.0;
  for (int v = base - 2; v <= base + 2; ++v) {
    const double x = phi(std::ldexp(r, -v));
    acc += x * x;
  }
  return acc;
}

double AdmissiblePair::psi(double r) const {
  const double x = phi(r);
  return x == 0.0 ? 0.0 : x / energy(r);
}

AdmissiblePair make_admissible_pair(double smoothness_scale) {
  require(smoothness_scale > 0, "smoothness scale must be positive");
  AdmissiblePair pair{smoothness_scale};
  for (double r = 0.6; r <= 5.0 / 3.0; r += 1.0 / 64)
    require(pair.phi(r) >= kAdmissibleLowerBound, "admissible profile misses its lower bound");
  return pair;
}

double InhomPartition::phi0(double r) const {
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  return smooth_step(2.0 - r, smoothness);
}

double InhomPartition::level(int j, double r) const {
  if (j < 0) return 0.0;
  if (j == 0) return phi0(r);
  return phi0(std::ldexp(r, -j)) - phi0(std::ldexp(r, 1 - j));
}

double InhomPartition::tilde(int j, double r) const { return level(j - 1, r) + level(j, r) + level(j + 1, r); }

double band_value(const Decomposition& dec, int j, double r) {
  return std::visit(
      [&](const auto& d) {
        if constexpr (std::is_same_v<std::decay_t<decltype(d)>, AdmissiblePair>)
          return d.phi_level(j, r);
        else
          return d.level(j, r);
      },
      dec);
}

int max_partition_level(const TorusGrid& grid) {
  const double nyq = static_cast<double>(grid.points_per_axis() / 2) / grid.side();
  const double rmax = nyq * std::sqrt(static_cast<double>(grid.dim));
  int j = 0;
  while (std::ldexp(1.0, j) < rmax) ++j;
  return j;
}

SampledField radial_filter(const SpectralField& F, const RadialProfile& profile) {
  SpectralField G = F;
  const auto& grid = F.grid;
  for (Index k = 0; k < grid.size(); ++k) G.coeffs.row(k) *= profile(grid.frequency(k).norm());
  return from_spectral(G);
}

SampledField band_filter(const SpectralField& F, const RadialProfile& profile, int j) {
  return radial_filter(F, [&](double r) { return profile(std::ldexp(r, -j)); });
}

SampledField band_filter(const SampledField& f, const RadialProfile& profile, int j) {
  return band_filter(to_spectral(f), profile, j);
}

SampledField bessel_potential(const SampledField& f, double gamma) {
  return apply_multiplier(f, [gamma](const Eigen::Vector2d& xi) { return cplx(std::pow(1.0 + xi.squaredNorm(), -gamma / 2)); });
}

double h2_sobolev_norm(const SampledField& g, double s) {
  require(g.channels() == 1, "h2_sobolev_norm expects a scalar field");
  const SpectralField G = to_spectral(g);
  double acc = 0.0;
  for (Index k = 0; k < g.grid.size(); ++k)
    acc += std::pow(1.0 + g.grid.frequency(k).squaredNorm(), s) * std::norm(G.coeffs(k, 0));
  return std::sqrt(acc / g.grid.volume());
}

double holder_zygmund_norm(const SampledField& g, double ell) {
  require(g.channels() == 1, "holder_zygmund_norm expects a scalar field");
  const SpectralField G = to_spectral(g);
  const InhomPartition part;
  double best = 0.0;
  for (int j = 0; j <= max_partition_level(g.grid); ++j) {
    const SampledField b = radial_filter(G, [&](double r) { return part.level(j, r); });
    best = std::max(best, std::pow(2.0, j * ell) * b.values.col(0).cwiseAbs().maxCoeff());
  }
  return best;
}

double profile_h2_norm(const std::function<double(const Eigen::Vector2d&)>& m, int k, double s, int dim, int side_log2,
                       int res_log2) {
  const TorusGrid aux(dim, side_log2, res_log2);
  SampledField g(aux, 1);
  for (Index i = 0; i < aux.size(); ++i) {
    Eigen::Vector2d xi = aux.position(i);
    xi[0] = aux.wrap(xi[0]);
    if (dim == 2) xi[1] = aux.wrap(xi[1]);
    g.values(i, 0) = m(std::ldexp(1.0, k) * xi);
  }
  return h2_sobolev_norm(g, s);
}

}  // namespace bmtl
