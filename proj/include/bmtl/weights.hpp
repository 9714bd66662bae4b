#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bmtl/dyadic.hpp"

namespace bmtl {

inline constexpr double kEigenvalueFloor = 1e-10;

// Symmetric matrix function V f(Λ) Vᵀ.
template <class Derived, class Fn>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> sym_apply(const Eigen::MatrixBase<Derived>& a,
                                                                                  Fn&& fn) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(a.derived()));
  const auto lam = es.eigenvalues().unaryExpr(fn).eval();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

// A^alpha for symmetric positive definite A.
template <class Derived>
auto spd_power(const Eigen::MatrixBase<Derived>& a, double alpha) {
  return sym_apply(a, [alpha](double l) {
    if (l <= 0) throw Error("matrix power of a non positive definite matrix");
    return std::pow(l, alpha);
  });
}

template <class Derived>
auto sym_log(const Eigen::MatrixBase<Derived>& a) {
  return sym_apply(a, [](double l) {
    if (l <= 0) throw Error("matrix logarithm of a non positive definite matrix");
    return std::log(l);
  });
}

template <class Derived>
auto sym_exp(const Eigen::MatrixBase<Derived>& a) {
  return sym_apply(a, [](double l) { return std::exp(l); });
}

// Largest singular value.
template <class Derived>
double operator_norm(const Eigen::MatrixBase<Derived>& a) {
  if (a.rows() == 1 && a.cols() == 1) return std::abs(a(0, 0));
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat g = a.adjoint() * a;
  return std::sqrt(std::max(0.0, Eigen::SelfAdjointEigenSolver<Mat>(g, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff()));
}

// Contiguous storage of one m×m matrix per index.
class MatrixField {
 public:
  MatrixField() = default;
  MatrixField(Index count, int m) : m_(m), data_(static_cast<std::size_t>(count * m * m), 0.0) {}

  int order() const { return m_; }
  Index size() const { return m_ == 0 ? 0 : static_cast<Index>(data_.size()) / (m_ * m_); }
  const double* data(Index k) const { return data_.data() + k * m_ * m_; }
  double* data(Index k) { return data_.data() + k * m_ * m_; }
  Eigen::Map<const Eigen::MatrixXd> operator[](Index k) const { return {data(k), m_, m_}; }
  Eigen::Map<Eigen::MatrixXd> operator[](Index k) { return {data(k), m_, m_}; }

 private:
  int m_ = 0;
  std::vector<double> data_;
};

// |A v| for column-major m×m A and complex v.
double apply_norm(const double* a, const cplx* v, int m);
// ‖A B‖ for column-major m×m matrices.
double product_norm(const double* a, const double* b, int m);

// W(x): symmetric positive definite m×m matrix at each grid point.
class MatrixWeight {
 public:
  MatrixWeight() = default;
  MatrixWeight(const TorusGrid& grid, MatrixField values);

  template <class Fn>
  static MatrixWeight from_function(const TorusGrid& grid, int m, Fn&& fn) {
    MatrixField v(grid.size(), m);
    for (Index k = 0; k < grid.size(); ++k) v[k] = fn(grid.position(k));
    return MatrixWeight(grid, std::move(v));
  }
  static MatrixWeight identity(const TorusGrid& grid, int m);
  static MatrixWeight from_field(const SampledField& f);

  const TorusGrid& grid() const { return grid_; }
  int order() const { return values_.order(); }
  Eigen::Map<const Eigen::MatrixXd> at(Index k) const { return values_[k]; }
  const MatrixField& values() const { return values_; }
  double min_eigenvalue() const;
  double max_eigenvalue() const;

  // W(x)^alpha at every grid point; negative powers reject near-singular points.
  MatrixField power(double alpha) const;
  SampledField to_field() const;

 private:
  TorusGrid grid_;
  MatrixField values_;
  MatrixField vectors_;
  std::vector<double> eigenvalues_;
};

enum class ReducingMethod { SecondMoment, EllipsoidFit };

// {A_Q} on every cube of a level range.
struct ReducingFamily {
  TorusGrid grid;
  CubeRange range;
  ReducingMethod method = ReducingMethod::SecondMoment;
  double p = 2.0;
  std::vector<MatrixField> levels;  // levels[j - range.first()], indexed by cube id

  int order() const { return levels.empty() ? 0 : levels.front().order(); }
  bool covers(int j) const { return j >= range.first() && j <= range.last(); }
  const MatrixField& level(int j) const;
  Eigen::Map<const Eigen::MatrixXd> at(const DyadicCube& q) const;
  const double* data(const DyadicCube& q) const;

  static ReducingFamily identity(const TorusGrid& grid, int m, const CubeRange& range);
};

struct WeightDiagnostics {
  double ap_char = 0;
  double beta = 0;
  double d = 0;
  double d_tilde = 0;
  double delta_cap = 0;
  double delta_w = 0;
  std::pair<double, double> sandwich{1, 1};
};

struct ApDimensions {
  double d = 0;
  double d_tilde = 0;
  double delta = 0;
};

double ap_characteristic(const MatrixWeight& w, double p, const CubeRange& range, int max_samples_per_axis = 64);

ReducingFamily reducing_operators(const MatrixWeight& w, double p, const CubeRange& range,
                                  ReducingMethod method = ReducingMethod::SecondMoment, int fit_directions = 256);

// rho_Q(y) = (avg_Q |W^{1/p} y|^p)^{1/p}.
double reducing_norm(const MatrixField& root, const std::vector<Index>& points, const Eigen::VectorXd& y, double p);

std::pair<double, double> sandwich_constants(const MatrixWeight& w, double p, const ReducingFamily& family, int n_dirs,
                                             std::uint64_t seed = 7);

double doubling_exponent(const MatrixWeight& w, double p, int samples, std::uint64_t seed = 11);

ApDimensions ap_dimensions(const MatrixWeight& w, double p, const CubeRange& range, int i_max, int max_cubes_per_level = 32,
                           int max_samples_per_axis = 64);

double strong_doubling_constant(const ReducingFamily& family, double p, double d, double d_tilde, double delta,
                                int max_cubes_per_level = 16);

// sup_Q avg_Q ‖W^{1/p}(x) A_Q^{-1}‖^v.
double reducing_integrability(const MatrixWeight& w, double p, const ReducingFamily& family, double v);
// sup_Q max_{x in Q} ‖A_Q W^{-1/p}(x)‖.
double reducing_inverse_sup(const MatrixWeight& w, double p, const ReducingFamily& family);

struct DiagnosticsOptions {
  int i_max = 3;
  int sandwich_dirs = 1000;
  int doubling_samples = 32;
  ReducingMethod method = ReducingMethod::SecondMoment;
};

WeightDiagnostics diagnose(const MatrixWeight& w, double p, const CubeRange& range, const DiagnosticsOptions& opt = {});

// Evenly spaced subsample (at most cap per axis) of a cube-shaped point list of side `per`.
std::vector<Index> stratified(const std::vector<Index>& pts, int dim, int cap);

}  // namespace bmtl
