#pragma once

#include <functional>
#include <variant>

#include "bmtl/fields.hpp"

namespace bmtl {

inline constexpr double kAdmissibleLowerBound = 0.1;

// C^∞ transition equal to 0 for u <= 0 and 1 for u >= 1.
double smooth_step(double u, double scale = 1.0);

// Radial pair (ℱφ, ℱψ) with ℱφ supported in [1/2, 2] and equal to 1 on [3/5, 5/3].
struct AdmissiblePair {
  double smoothness = 1.0;

  double phi(double r) const;
  double psi(double r) const;
  // Σ_v |ℱφ(2^-v r)|² over all v ∈ ℤ.
  double energy(double r) const;
  double phi_level(int j, double r) const { return phi(std::ldexp(r, -j)); }
  double psi_level(int j, double r) const { return psi(std::ldexp(r, -j)); }
};

AdmissiblePair make_admissible_pair(double smoothness_scale = 1.0);

// φ_0 = Φ with Φ = 1 on |ξ| <= 1 and 0 on |ξ| >= 2; φ_j = Φ(2^-j ξ) - Φ(2^{1-j} ξ).
struct InhomPartition {
  double smoothness = 1.0;

  double phi0(double r) const;
  double level(int j, double r) const;
  double tilde(int j, double r) const;
};

using Decomposition = std::variant<AdmissiblePair, InhomPartition>;

// φ_j(r) for either decomposition.
double band_value(const Decomposition& dec, int j, double r);

// Highest j whose partition piece is nonzero somewhere on the lattice.
int max_partition_level(const TorusGrid& grid);

using RadialProfile = std::function<double(double)>;

// profile(|ξ|) applied channelwise.
SampledField radial_filter(const SpectralField& F, const RadialProfile& profile);

// profile(2^-j |ξ|) applied channelwise.
SampledField band_filter(const SpectralField& F, const RadialProfile& profile, int j);
SampledField band_filter(const SampledField& f, const RadialProfile& profile, int j);

SampledField bessel_potential(const SampledField& f, double gamma);

double h2_sobolev_norm(const SampledField& g, double s);

double holder_zygmund_norm(const SampledField& g, double ell);

// ‖m(2^k ·)‖_{H_2^s}, with m tabulated on an auxiliary frequency-side grid of side 2^side_log2.
double profile_h2_norm(const std::function<double(const Eigen::Vector2d&)>& m, int k, double s, int dim,
                       int side_log2 = 3, int res_log2 = 6);

}  // namespace bmtl
