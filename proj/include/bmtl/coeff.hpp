#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "bmtl/lpa.hpp"
#include "bmtl/sequence.hpp"

namespace bmtl {

// Cube level v is sampled from band v - 2, which keeps every alias of the
// sampled band outside the synthesis window.
inline constexpr int kPhiBandOffset = 2;

// s_Q = |Q|^{1/2} (φ_{v-2} ∗ f)(x_Q) for every cube with level in range (levels up to J).
CoeffSequence phi_transform(const SampledField& f, const AdmissiblePair& pair, const CubeRange& range);

// Σ_Q s_Q ψ_Q, one Dirac comb per level filtered by ψ_{v-2}.
SampledField phi_synthesis(const CoeffSequence& coeffs, const AdmissiblePair& pair);

struct ADProfile {
  double s = 0;
  double p = 2;
  double q = 2;
  double epsilon = 0.5;
  double d = 0;
  double d_tilde = 0;
  double delta_cap = 0;

  double J() const { return min_exponent(p, q); }
  void validate(int dim) const;

  // Profile with delta_cap = d/p + d_tilde/p'.
  static ADProfile with_dimensions(double s, double p, double q, double epsilon, double d, double d_tilde);
};

enum class ADVariant { Plain, Weighted };

// ω_QP with the torus distance between the corners x_Q and x_P.
double ad_weight(const TorusGrid& grid, const DyadicCube& q, const DyadicCube& p, const ADProfile& prof,
                 ADVariant variant);

using ADEntries = std::map<std::pair<DyadicCube, DyadicCube>, cplx>;

// t_Q = Σ_P b_QP s_P over an explicit entry list keyed by (Q, P).
CoeffSequence ad_apply(const ADEntries& entries, const CoeffSequence& coeffs);

using ADEntryFn = std::function<cplx(const DyadicCube& q, const DyadicCube& p)>;

struct ADTruncation {
  // Total ω mass allowed to be dropped per input cube.
  double dropped_mass = 1e-10;
};

struct ADResult {
  CoeffSequence out;
  // Largest ω mass skipped for any input cube.
  double dropped_mass = 0;
  Index evaluated = 0;
};

// t_Q for all Q with level in out_range, with b_QP generated on demand and assumed
// bounded by a multiple of ω_QP; (Q, P) pairs are skipped by ω decay.
ADResult ad_apply(const ADEntryFn& entry, const ADProfile& prof, ADVariant variant, const CoeffSequence& coeffs,
                  const CubeRange& out_range, const ADTruncation& trunc = {});

// b_QP = c ω_QP u_QP with u_QP uniform in [-1, 1], a pure function of (seed, Q, P).
ADEntryFn random_ad_entries(const TorusGrid& grid, const ADProfile& prof, ADVariant variant, double c,
                            std::uint64_t seed);

struct MoleculeParams {
  int N = 0;
  int K = 0;
  double M = 1;
  double delta = 1;

  void validate() const;
};

struct MoleculeReport {
  // Largest relative moment |∫y^γ m| / ∫|y^γ m| for |γ| <= N, y = (x - x_Q)/ℓ(Q).
  double m1 = 0;
  // Measured constants c in the decay and smoothness envelopes.
  double m2 = 0;
  double m3 = 0;
  double m4 = 0;
  bool m1_void = false;
  bool smooth_void = false;
  std::size_t cubes = 0;

  bool moments_vanish(double tol) const { return m1_void || m1 <= tol; }
};

using MoleculeFamily = std::function<SampledField(const DyadicCube&)>;

// eps is the ε of the decay envelope; pairs for (M4) use at most max_pair_points base points.
MoleculeReport molecule_check(const MoleculeFamily& family, const std::vector<DyadicCube>& cubes,
                              const MoleculeParams& params, double eps, int max_pair_points = 2048);

// Orthonormal periodic Daubechies coefficients: generators[0] holds the scaling part at
// the coarsest level, generators[i >= 1] the details at levels coarsest .. J-1.
// In 2D, i = 1 is φ(x0)ψ(x1), i = 2 is ψ(x0)φ(x1), i = 3 is ψ(x0)ψ(x1).
struct WaveletCoeffs {
  TorusGrid grid;
  int channels = 1;
  int db_order = 2;
  int coarsest = 0;
  std::vector<CoeffSequence> generators;

  int generator_count() const { return static_cast<int>(generators.size()); }
  double l2() const;
};

WaveletCoeffs wavelet_analyze(const SampledField& f, int db_order, int coarsest);
// Uses range.first() as the coarsest level.
WaveletCoeffs wavelet_analyze(const SampledField& f, int db_order, const CubeRange& range);
SampledField wavelet_synthesize(const WaveletCoeffs& coeffs);

WaveletCoeffs empty_wavelet_coeffs(const TorusGrid& grid, int channels, int db_order, int coarsest);

// Grid samples of ψ^{(i)}_Q (φ_Q for generator 0), scalar.
SampledField wavelet_basis_function(const TorusGrid& grid, int db_order, int coarsest, int generator,
                                    const DyadicCube& q);

struct AtomParams {
  double b = 1;
  int L = 0;
  int N = 0;

  void validate() const;
};

// Support factor b such that every detail atom on a child cube lies in b·Q_i.
double atom_support_factor(int db_order);

// Atom a_P = C θ_Q^{(i)} placed on P = Q_i, stored by reference.
struct AtomRef {
  int generator = 1;
  DyadicCube source;
  DyadicCube cube;
};

struct AtomicDecomposition {
  TorusGrid grid;
  int channels = 1;
  int db_order = 2;
  int coarsest = 0;
  double constant = 1;
  std::vector<AtomRef> atoms;
  // t_P keyed by the atom cube P.
  CoeffSequence coeffs;
  // Coarsest scaling part, which carries no vanishing moments and stays outside the atomic sum.
  CoeffSequence scaling;
};

AtomicDecomposition atom_rearrange(const WaveletCoeffs& w, double constant = 1.0);
SampledField atom_field(const AtomicDecomposition& dec, const AtomRef& atom);
// Σ_P t_P a_P plus the scaling part, summed atom by atom.
SampledField atom_synthesize(const AtomicDecomposition& dec);

struct AtomMeasurement {
  AtomParams params;
  // Largest measured 2 |x - c(P)|_∞ / ℓ(P) over the support.
  double support = 0;
  // max_P max_x |∂^γ a_P| ℓ(P)^{|γ| + n/2} for |γ| = 0 .. max_derivative.
  std::vector<double> derivative_constants;
  std::size_t atoms_checked = 0;
};

AtomMeasurement measure_atoms(const AtomicDecomposition& dec, int max_derivative, double moment_tol = 1e-8,
                              std::size_t max_atoms = 32);

}  // namespace bmtl
