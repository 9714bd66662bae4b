#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "bmtl/operators.hpp"
#include "bmtl/spaces.hpp"

namespace bmtl {

enum class WeightKind { Identity, Constant, Power, RotatedPower, Oscillating };

// Gallery weights are built as 2×2 blocks padded with the identity; m = 1 keeps the
// top-left entry of the 2×2 block.
struct WeightSpec {
  WeightKind kind = WeightKind::Identity;
  // Exponent of max(|x - c|, h) in the power weights.
  double alpha = 0.4;
  // Eigenvalue ratio of the constant and oscillating weights.
  double kappa = 4.0;
  // Fixed rotation angle of the rotated power weight.
  double theta = 0.5;
  // Number of half turns of the oscillating eigenbasis across the torus.
  double frequency = 1.0;
  // Singular point of the power weights as a fraction of the side, on every axis.
  double center = 0.5;

  std::string label() const;
};

MatrixWeight make_weight(const TorusGrid& grid, int m, const WeightSpec& spec);
// One weight of every kind with default parameters.
std::vector<WeightSpec> weight_gallery();

enum class FunctionKind { Random, Bump, Harmonic };

struct FunctionSpec {
  FunctionKind kind = FunctionKind::Random;
  std::uint64_t seed = 1;
  // Random: spectrum filled on the lattice annulus 2^band_lo <= |ξ| <= 2^band_hi.
  int band_lo = 0;
  int band_hi = 3;
  // Bump: ψ_level translated to shift; harmonic: cos(2π ξ0·x) with |ξ0| ≈ 1.25·2^level.
  int level = 1;
  double shift = 0.0;
  // g(x) = f(2^dilation x), by resampling.
  int dilation = 0;

  std::string label() const;
};

// Real-valued field whose channel directions are drawn from the seed.
SampledField make_function(const TorusGrid& grid, int channels, const FunctionSpec& spec);
// g(x) = f(2^times x) on the same grid.
SampledField dilate(const SampledField& f, int times);
// Mix of random fields, bumps and harmonics with spectra inside [2^band_lo, 2^band_hi].
std::vector<FunctionSpec> function_gallery(int count, std::uint64_t seed, int band_lo, int band_hi);

enum class ExperimentKind { Equivalence, Boundedness, Diagnostics };

// Operator of a boundedness run: hilbert, bessel, maximal or psdo.
struct OperatorSpec {
  std::string op = "hilbert";
  // Bessel smoothing order, or the symbol order m of the psdo run.
  double gamma = 1.0;
  int component = 1;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Equivalence;
  TorusGrid grid{1, 2, 10};
  CubeRange range{-2, 6, false};
  int channels = 2;
  std::vector<SpaceParams> spaces;
  std::vector<WeightSpec> weights;
  std::vector<FunctionSpec> functions;
  OperatorSpec op;
  double threshold = 50.0;
  bool truncation_check = false;
  double truncation_tol = 0.01;
  std::string csv_path;
  std::string json_path;
  bool record_timings = false;

  void validate() const;
};

// Accepts either an explicit "functions" list or "function_gallery": {"count", "seed", "band"}.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct CaseResult {
  std::string space;
  std::string weight;
  std::string function;
  // Named by Report::value_names.
  std::vector<double> values;
  std::vector<double> ratios;
  double min_ratio = kNaN;
  double max_ratio = kNaN;
  double spread = kNaN;
  double truncation = kNaN;
  bool truncation_flag = false;
  // q > p, where the weighted hypotheses cannot be checked.
  bool unverifiable = false;
  bool passed = false;
  std::string error;
  double seconds = kNaN;
};

struct Report {
  ExperimentKind kind = ExperimentKind::Equivalence;
  double threshold = 50.0;
  bool record_timings = false;
  std::vector<std::string> value_names;
  std::vector<CaseResult> cases;

  bool passed() const;
  // Largest case spread, 1 for an empty report.
  double max_spread() const;
};

std::vector<std::string> value_names(ExperimentKind kind);

// Errors inside a case are recorded on that case; the run continues.
Report run_experiment(const ExperimentConfig& cfg);

// F(W), F(A_Q), f(W) and f(A_Q) of the φ-transform for one function; the reducing family
// must cover the band levels and the cube levels shifted by two.
std::vector<double> four_norms(const SampledField& f, const MatrixWeight& w, const SpaceParams& sp,
                               const CubeRange& range, const ReducingFamily& family);
// Reducing operators on every level four_norms touches.
CubeRange equivalence_family_range(const CubeRange& range);

// σ(x, ξ) = (1 + cos(2π x0 / L) / 2) ⟨ξ⟩^order, a member of S^order_{1,0}.
SymbolGrid gallery_symbol(const TorusGrid& grid, double order);

// Real Mikhlin-type multiplier 3/2 + sin(2 log(1 + |ξ|)).
double gallery_multiplier(const Eigen::Vector2d& xi);

struct MultiplierCheck {
  double lhs = 0;
  double rhs = 0;
  // sup_k ‖m_k(2^k ·)‖_{H_2^order}.
  double h2_sup = 0;
  double constant = 0;
};

// f_k = φ_k ∗ f and m_k = m χ(2^-k ·) with χ = 1 on [1/2, 2] and supported in [1/4, 4], so
// m_k(D) f_k = m(D) f_k; constant = lhs / (rhs h2_sup) in the weighted ℓ^q-valued Morrey norm.
MultiplierCheck multiplier_check(const SampledField& f, const MatrixWeight& w, const SpaceParams& sp,
                                 const CubeRange& range, const std::function<double(const Eigen::Vector2d&)>& m,
                                 double order);

enum class ReportFormat { Csv, Json };

void write_report(std::ostream& os, const Report& r, ReportFormat fmt);
void emit_report(const Report& r, ReportFormat fmt, const std::string& path);
Report read_report(std::istream& is);
Report load_report(const std::string& path);

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind(const std::string& name);

}  // namespace bmtl
