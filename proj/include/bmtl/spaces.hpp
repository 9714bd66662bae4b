#pragma once

#include <map>
#include <variant>
#include <vector>

#include "bmtl/lpa.hpp"
#include "bmtl/sequence.hpp"
#include "bmtl/weights.hpp"

namespace bmtl {

struct SpaceParams {
  double s = 0;
  double p = 2;
  double q = 2;
  double t = 2;
  double r = kInf;
  bool homogeneous = true;

  // 0 < p < t < r < ∞ or 0 < p <= t < r = ∞.
  void validate() const;
};

void validate_morrey(double p, double t, double r);

// W^{1/p}(x) applied at each point.
struct Pointwise {
  MatrixField root;
  double p = 2;

  int order() const { return root.order(); }
};
Pointwise pointwise(const MatrixWeight& w, double p);

// A_Q applied on each cube of the matching level.
struct Cubewise {
  ReducingFamily family;

  int order() const { return family.order(); }
};

using Weighting = std::variant<Pointwise, Cubewise>;
int weighting_order(const Weighting& w);

struct NormReport {
  double value = 0;
  std::vector<std::pair<int, double>> per_level;
  double truncation = std::numeric_limits<double>::quiet_NaN();
};

struct NormOptions {
  bool per_level = false;
  bool truncation = false;
};

// Aggregates ℓ^r over all cubes with levels in range of |Q|^{1/t-1/p} ‖g χ_Q‖_p.
double bm_norm(const Eigen::VectorXd& g, const TorusGrid& grid, double p, double t, double r, const CubeRange& range);
double bm_norm(const SampledField& g, double p, double t, double r, const CubeRange& range);
double bm_seq_norm(const std::vector<Eigen::VectorXd>& gk, const TorusGrid& grid, double p, double t, double r, double q,
                   const CubeRange& range);

// Range of the outer Bourgain–Morrey sum: all levels from the torus scale down to range.last().
CubeRange outer_range(const TorusGrid& grid, const CubeRange& range);

// Pointwise ℓ^q accumulation with q = ∞ as a max.
class LqAccumulator {
 public:
  LqAccumulator(Index size, double q) : q_(q), acc_(Eigen::VectorXd::Zero(size)) {}
  void add(const Eigen::VectorXd& v, double scale = 1.0);
  Eigen::VectorXd result() const;

 private:
  double q_;
  Eigen::VectorXd acc_;
};

Eigen::VectorXd hl_maximal(const Eigen::VectorXd& g, const TorusGrid& grid, double eta = 1.0);
SampledField hl_maximal(const SampledField& g, double eta = 1.0);

// |W^{1/p}(x) b(x)| or |A_Q b(x)| with Q the level-j cube containing x.
Eigen::VectorXd weighted_magnitude(const SampledField& band, const Weighting& w, int j);

// Band outputs φ_j ∗ f for the levels covered by the decomposition and range.
std::vector<int> band_levels(const SpaceParams& sp, const CubeRange& range);
std::vector<SampledField> band_outputs(const SampledField& f, const Decomposition& dec, const std::vector<int>& levels);

NormReport tl_norm(const SampledField& f, const Weighting& w, const SpaceParams& sp, const Decomposition& dec,
                   const CubeRange& range, const NormOptions& opt = {});

// Same functional as tl_norm with |A_Q φ_j∗f(x)| replaced by its sup over Q.
NormReport tl_norm_sup(const SampledField& f, const Cubewise& w, const SpaceParams& sp, const Decomposition& dec,
                       const CubeRange& range);

// Per-cube point subsets replacing χ_Q by χ_{E_Q}.
using SparseSupport = std::map<DyadicCube, std::vector<Index>>;

NormReport seq_norm(const CoeffSequence& coeffs, const Weighting& w, const SpaceParams& sp, const CubeRange& range,
                    const SparseSupport* subsets = nullptr);

NormReport peetre_norm(const SampledField& f, const Pointwise& w, const SpaceParams& sp, double a, const Decomposition& dec,
                       const CubeRange& range);
NormReport lusin_norm(const SampledField& f, const Pointwise& w, const SpaceParams& sp, const Decomposition& dec,
                      const CubeRange& range);
NormReport glambda_norm(const SampledField& f, const Pointwise& w, const SpaceParams& sp, double lambda,
                        const Decomposition& dec, const CubeRange& range, double delta_cap = 0.0);
NormReport approx_norm(const SampledField& f, const Pointwise& w, const SpaceParams& sp, const CubeRange& range,
                       double delta_cap = 0.0);

// Pointwise maximal function sup_y |W^{1/p}(x) b(y)| / (1 + 2^j |x-y|)^a.
Eigen::VectorXd peetre_maximal(const SampledField& band, const Pointwise& w, int j, double a);

SampledField averaging(const SampledField& g, int j);

// γ_j(x) = ‖W^{1/p}(x) A_Q^{-1}‖ for the level-j cube Q containing x.
Eigen::VectorXd gamma_level(const Pointwise& w, const ReducingFamily& family, int j);

// Offsets of the torus sorted by distance from the origin.
struct SortedOffsets {
  std::vector<std::array<Index, 2>> offsets;
  std::vector<double> distance;
};
SortedOffsets sorted_offsets(const TorusGrid& grid);

}  // namespace bmtl
