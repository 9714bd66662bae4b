#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bmtl/lpa.hpp"

namespace bmtl {

// Symbols are capped so that the dense table stays within desk memory.
inline constexpr Index kMaxSymbolPoints = 4096;

// σ(x, ξ) with one row per grid point x and one column per lattice frequency ξ (FFT order).
struct SymbolGrid {
  TorusGrid grid;
  Eigen::MatrixXcd values;

  SymbolGrid() = default;
  // Zero symbol; rejects grids above kMaxSymbolPoints before allocating.
  explicit SymbolGrid(const TorusGrid& g);
  SymbolGrid(const TorusGrid& g, Eigen::MatrixXcd v);

  template <class Fn>
  static SymbolGrid from_function(const TorusGrid& g, Fn&& fn) {
    SymbolGrid s(g);
    for (Index k = 0; k < g.size(); ++k) {
      const Eigen::Vector2d x = g.position(k);
      for (Index c = 0; c < g.size(); ++c) s.values(k, c) = fn(x, g.frequency(c));
    }
    return s;
  }
};


void save_symbol(const std::string& path, const SymbolGrid& s);
SymbolGrid load_symbol(const std::string& path);

struct SymbolClassParams {
  double m = 0;
  double rho = 1;
  double delta = 0;
  double ell = 1;
  int N = 2;
  int b = 2;

  void validate() const;
};

// -i sgn(ξ) in 1D, -i ξ_c/|ξ| in 2D (component 1 or 2); ξ = 0 and the Nyquist modes map to 0.
SampledField hilbert_riesz_apply(const SampledField& f, int component = 1);

struct CZKernelReport {
  // sup |x|^n |K(x)|.
  double k1 = 0;
  // sup |x|^{n+|γ|} |∂^γ K(x)| for |γ| = 1 .. L, measured on 32h <= |x| <= side/4
  // after a smooth taper that removes the origin and the periodic seam.
  std::vector<double> k2;
  // max over dyadic annuli inside |x| < side/2 of |∫ K|.
  double k3 = 0;
};

// kernel holds K sampled on the grid; the origin sample is ignored.
CZKernelReport cz_kernel_check(const SampledField& kernel, int L);

using SpectralProfile = std::function<cplx(const Eigen::Vector2d&)>;

// m_k(D) f_k for k = first_level, first_level + 1, ...; warns when ℱf_k leaves |ξ| <= 2^{k+1}.
std::vector<SampledField> multiplier_apply(const std::vector<SpectralProfile>& m, const std::vector<SampledField>& f,
                                           int first_level = 0);

// max |∂_ξ^α ∂_x^β σ| (1+|ξ|)^{-m+ρ|α|-δ|β|} over |α| <= alpha_max, |β| <= beta_max.
double hormander_seminorm(const SymbolGrid& s, const SymbolClassParams& params, int alpha_max, int beta_max);

// sup_ξ ⟨ξ⟩^{-m+|α|-ℓδ} ‖∂_ξ^α σ(·,ξ)‖_{C_*^ℓ} + sup_ξ ⟨ξ⟩^{-m+|α|} ‖∂_ξ^α σ(·,ξ)‖_∞, max over |α| <= alpha_max.
double czs_seminorm(const SymbolGrid& s, const SymbolClassParams& params, int alpha_max = 0);

// Σ_j σ_j(x) ψ_1(2^{1-j} ξ) with sigma_j[0] at j = 1.
SymbolGrid elementary_symbol(const std::vector<SampledField>& sigma_j, const RadialProfile& psi1);

// Smooth ring profile supported on [1, 4].
RadialProfile default_ring_profile();

// σ_{j,l}, stored on the ξ-columns where φ_j is nonzero.
struct ParaPiece {
  int j = 0;
  int l = 0;
  std::vector<Index> columns;
  Eigen::MatrixXcd values;
};

struct ParaPieces {
  TorusGrid grid;
  int j_cut = 0;
  int l_cut = 0;
  std::vector<ParaPiece> pieces;

  const ParaPiece* find(int j, int l) const;
  SymbolGrid to_symbol(int j, int l) const;
  SymbolGrid reconstruct() const;
};

ParaPieces paradecompose(const SymbolGrid& s, double smoothness = 1.0);

struct KernelMass {
  int j = 0;
  int l = 0;
  double mass = 0;
};

// max_x Σ_y |M_{j,l}(x, y)| (1 + 2^j |y|)^a h^n, with M_{j,l}(x, ·) the kernel of σ_{j,l}(x, D).
std::vector<KernelMass> piece_kernel_mass(const ParaPieces& pieces, double a);

// (1/L^n) Σ_ξ σ(x, ξ) ℱf(ξ) e^{2πi x·ξ} at every grid point, channelwise.
SampledField psdo_apply(const SymbolGrid& s, const SampledField& f);

}  // namespace bmtl
