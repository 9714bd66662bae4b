#include "bmtl/weights.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace bmtl {

double apply_norm(const double* a, const cplx* v, int m) {
  if (m == 1) return std::abs(a[0] * v[0]);
  double acc = 0.0;
  for (int r = 0; r < m; ++r) {
    cplx s = 0.0;
    for (int c = 0; c < m; ++c) s += a[c * m + r] * v[c];
    acc += std::norm(s);
  }
  return std::sqrt(acc);
}

double product_norm(const double* a, const double* b, int m) {
  if (m == 1) return std::abs(a[0] * b[0]);
  if (m == 2) {
    const double p00 = a[0] * b[0] + a[2] * b[1], p10 = a[1] * b[0] + a[3] * b[1];
    const double p01 = a[0] * b[2] + a[2] * b[3], p11 = a[1] * b[2] + a[3] * b[3];
    const double g00 = p00 * p00 + p10 * p10, g11 = p01 * p01 + p11 * p11, g01 = p00 * p01 + p10 * p11;
    const double half = 0.5 * (g00 + g11);
    const double disc = std::sqrt(0.25 * (g00 - g11) * (g00 - g11) + g01 * g01);
    return std::sqrt(std::max(0.0, half + disc));
  }
  Eigen::Map<const Eigen::MatrixXd> A(a, m, m), B(b, m, m);
  return operator_norm(A * B);
}

MatrixWeight::MatrixWeight(const TorusGrid& grid, MatrixField values)
    : grid_(grid), values_(std::move(values)), vectors_(grid.size(), values_.order()) {
  const int m = values_.order();
  require(m >= 1 && m <= 4, "matrix weight order must lie in [1, 4]");
  require(values_.size() == grid.size(), "matrix weight size does not match grid");
  eigenvalues_.resize(static_cast<std::size_t>(grid.size() * m));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  for (Index k = 0; k < grid.size(); ++k) {
    Eigen::MatrixXd a = values_[k];
    require(a.allFinite(), "matrix weight has non-finite entries");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, "matrix weight is not symmetric");
    es.compute(a);
    require(es.eigenvalues().minCoeff() > 0, "matrix weight is not positive definite at point " + std::to_string(k));
    vectors_[k] = es.eigenvectors();
    for (int i = 0; i < m; ++i) eigenvalues_[static_cast<std::size_t>(k * m + i)] = es.eigenvalues()[i];
  }
}

MatrixWeight MatrixWeight::identity(const TorusGrid& grid, int m) {
  return from_function(grid, m, [m](const Eigen::Vector2d&) { return Eigen::MatrixXd::Identity(m, m); });
}

MatrixWeight MatrixWeight::from_field(const SampledField& f) {
  const int mm = f.channels();
  const int m = static_cast<int>(std::lround(std::sqrt(mm)));
  require(m * m == mm, "weight field channels must be a perfect square");
  MatrixField v(f.grid.size(), m);
  for (Index k = 0; k < f.grid.size(); ++k)
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) v[k](r, c) = f.values(k, r * m + c).real();
  return MatrixWeight(f.grid, std::move(v));
}

SampledField MatrixWeight::to_field() const {
  const int m = order();
  SampledField f(grid_, m * m);
  for (Index k = 0; k < grid_.size(); ++k)
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) f.values(k, r * m + c) = values_[k](r, c);
  return f;
}

double MatrixWeight::min_eigenvalue() const { return *std::min_element(eigenvalues_.begin(), eigenvalues_.end()); }
double MatrixWeight::max_eigenvalue() const { return *std::max_element(eigenvalues_.begin(), eigenvalues_.end()); }

MatrixField MatrixWeight::power(double alpha) const {
  const int m = order();
  if (alpha < 0 && min_eigenvalue() < kEigenvalueFloor)
    throw Error("matrix weight is singular: eigenvalue below " + std::to_string(kEigenvalueFloor));
  MatrixField out(grid_.size(), m);
  Eigen::VectorXd lam(m);
  for (Index k = 0; k < grid_.size(); ++k) {
    for (int i = 0; i < m; ++i) lam[i] = std::pow(eigenvalues_[static_cast<std::size_t>(k * m + i)], alpha);
    out[k] = vectors_[k] * lam.asDiagonal() * vectors_[k].transpose();
  }
  return out;
}

const MatrixField& ReducingFamily::level(int j) const {
  require(covers(j), "reducing family does not cover level " + std::to_string(j));
  return levels[static_cast<std::size_t>(j - range.first())];
}

Eigen::Map<const Eigen::MatrixXd> ReducingFamily::at(const DyadicCube& q) const { return level(q.level)[cube_id(grid, q)]; }

const double* ReducingFamily::data(const DyadicCube& q) const { return level(q.level).data(cube_id(grid, q)); }

ReducingFamily ReducingFamily::identity(const TorusGrid& grid, int m, const CubeRange& range) {
  validate(range, grid, 0);
  ReducingFamily f{grid, range, ReducingMethod::SecondMoment, 2.0, {}};
  for (int j = range.first(); j <= range.last(); ++j) {
    MatrixField lv(cube_count(grid, j), m);
    for (Index c = 0; c < lv.size(); ++c) lv[c].setIdentity();
    f.levels.push_back(std::move(lv));
  }
  return f;
}

std::vector<Index> stratified(const std::vector<Index>& pts, int dim, int cap) {
  const Index total = static_cast<Index>(pts.size());
  const Index per = dim == 1 ? total : static_cast<Index>(std::llround(std::sqrt(static_cast<double>(total))));
  if (per <= cap) return pts;
  const Index stride = per / cap;
  std::vector<Index> out;
  if (dim == 1) {
    for (Index a = 0; a < cap; ++a) out.push_back(pts[static_cast<std::size_t>(a * stride + stride / 2)]);
    return out;
  }
  for (Index a = 0; a < cap; ++a)
    for (Index b = 0; b < cap; ++b)
      out.push_back(pts[static_cast<std::size_t>((a * stride + stride / 2) * per + b * stride + stride / 2)]);
  return out;
}

namespace {

// Evenly spaced cube ids at level j, always including id 0.
std::vector<Index> sample_ids(const TorusGrid& grid, int j, int cap) {
  const Index count = cube_count(grid, j);
  std::vector<Index> ids;
  if (count <= cap) {
    for (Index c = 0; c < count; ++c) ids.push_back(c);
    return ids;
  }
  const Index stride = count / cap;
  for (Index c = 0; c < cap; ++c) ids.push_back(c * stride);
  return ids;
}

// Double average of ‖L(x)R(y)‖^e over x in xs, y in ys, in the A_p form for exponent e.
double ap_block(const MatrixField& lf, const MatrixField& rf, const std::vector<Index>& xs, const std::vector<Index>& ys,
                double e) {
  const int m = lf.order();
  if (e > 1) {
    const double ep = e / (e - 1);
    double outer = 0.0;
    for (Index x : xs) {
      double inner = 0.0;
      for (Index y : ys) inner += std::pow(product_norm(lf.data(x), rf.data(y), m), ep);
      inner /= static_cast<double>(ys.size());
      outer += std::pow(inner, e / ep);
    }
    return outer / static_cast<double>(xs.size());
  }
  double best = 0.0;
  for (Index y : ys) {
    double avg = 0.0;
    for (Index x : xs) avg += std::pow(product_norm(lf.data(x), rf.data(y), m), e);
    best = std::max(best, avg / static_cast<double>(xs.size()));
  }
  return best;
}

std::vector<Eigen::VectorXd> fit_directions(int m, int count) {
  std::vector<Eigen::VectorXd> dirs;
  if (m == 1) {
    dirs.push_back(Eigen::VectorXd::Ones(1));
    return dirs;
  }
  if (m == 2) {
    for (int i = 0; i < count; ++i) {
      const double a = M_PI * (i + 0.5) / count;
      dirs.push_back(Eigen::Vector2d(std::cos(a), std::sin(a)));
    }
    return dirs;
  }
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd;
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd y(m);
    for (int c = 0; c < m; ++c) y[c] = nd(rng);
    dirs.push_back(y.normalized());
  }
  for (int c = 0; c < m; ++c) dirs.push_back(Eigen::VectorXd::Unit(m, c));
  return dirs;
}

Eigen::MatrixXd sym_from_params(const Eigen::VectorXd& th, int m) {
  Eigen::MatrixXd s(m, m);
  int k = 0;
  for (int r = 0; r < m; ++r)
    for (int c = r; c < m; ++c) s(r, c) = s(c, r) = th[k++];
  return s;
}

Eigen::VectorXd params_from_sym(const Eigen::MatrixXd& s) {
  const int m = static_cast<int>(s.rows());
  Eigen::VectorXd th(m * (m + 1) / 2);
  int k = 0;
  for (int r = 0; r < m; ++r)
    for (int c = r; c < m; ++c) th[k++] = s(r, c);
  return th;
}

Eigen::VectorXd log_residuals(const Eigen::MatrixXd& g, const std::vector<Eigen::VectorXd>& dirs,
                              const Eigen::VectorXd& log_rho) {
  Eigen::VectorXd r(static_cast<Index>(dirs.size()));
  for (std::size_t i = 0; i < dirs.size(); ++i) r[static_cast<Index>(i)] = std::log((g * dirs[i]).norm()) - log_rho[static_cast<Index>(i)];
  return r;
}

// Rescales g so its log ratios are centred; returns the resulting max |log ratio|.
double centre(Eigen::MatrixXd& g, const std::vector<Eigen::VectorXd>& dirs, const Eigen::VectorXd& log_rho) {
  Eigen::VectorXd r = log_residuals(g, dirs, log_rho);
  const double mid = 0.5 * (r.maxCoeff() + r.minCoeff());
  g *= std::exp(-mid);
  return 0.5 * (r.maxCoeff() - r.minCoeff());
}

Eigen::MatrixXd ellipsoid_fit(const Eigen::MatrixXd& a0, const std::vector<Eigen::VectorXd>& dirs,
                              const Eigen::VectorXd& log_rho) {
  const int m = static_cast<int>(a0.rows());
  if (m == 1) return Eigen::MatrixXd::Constant(1, 1, std::exp(log_rho.mean()));
  Eigen::VectorXd th = params_from_sym(sym_log(a0));
  const Index np = th.size();
  auto residuals = [&](const Eigen::VectorXd& t) { return log_residuals(sym_exp(sym_from_params(t, m)), dirs, log_rho); };
  Eigen::VectorXd r = residuals(th);
  double cost = r.squaredNorm();
  double mu = 1e-3;
  for (int it = 0; it < 60; ++it) {
    Eigen::MatrixXd jac(r.size(), np);
    for (Index k = 0; k < np; ++k) {
      Eigen::VectorXd tp = th, tm = th;
      tp[k] += 1e-6;
      tm[k] -= 1e-6;
      jac.col(k) = (residuals(tp) - residuals(tm)) / 2e-6;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 12 && !improved; ++tries) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal() += mu * (jtj.diagonal().array() + 1e-12).matrix();
      const Eigen::VectorXd step = lhs.ldlt().solve(-jtr);
      const Eigen::VectorXd cand = th + step;
      const Eigen::VectorXd rc = residuals(cand);
      const double cc = rc.squaredNorm();
      if (std::isfinite(cc) && cc < cost) {
        const double gain = cost - cc;
        th = cand;
        r = rc;
        cost = cc;
        mu = std::max(mu / 3, 1e-12);
        improved = true;
        if (gain < 1e-15 * (1 + cost) || step.norm() < 1e-12) it = 1000;
      } else {
        mu *= 4;
      }
    }
    if (!improved) break;
  }
  return sym_exp(sym_from_params(th, m));
}

// |W^{1/p}(x) y_i|^p with one column per grid point and one row per direction.
Eigen::MatrixXd direction_powers(const MatrixField& root, const std::vector<Eigen::VectorXd>& dirs, double p) {
  const int m = root.order();
  Eigen::MatrixXd y(m, static_cast<Index>(dirs.size()));
  for (std::size_t i = 0; i < dirs.size(); ++i) y.col(static_cast<Index>(i)) = dirs[i];
  Eigen::MatrixXd out(y.cols(), root.size());
  for (Index k = 0; k < root.size(); ++k) {
    Eigen::Map<const Eigen::MatrixXd> a(root.data(k), m, m);
    out.col(k) = (a * y).colwise().norm().array().pow(p).transpose();
  }
  return out;
}

// rho_Q(y_i) for every cube of level j, one column per cube.
Eigen::MatrixXd cube_rho(const Eigen::MatrixXd& powers, const TorusGrid& grid, int j, double p) {
  const Index count = cube_count(grid, j);
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(powers.rows(), count);
  Eigen::VectorXd npts = Eigen::VectorXd::Zero(count);
  const auto ids = point_cube_ids(grid, j);
  for (Index k = 0; k < grid.size(); ++k) {
    const Index c = ids[static_cast<std::size_t>(k)];
    sums.col(c) += powers.col(k);
    npts[c] += 1;
  }
  for (Index c = 0; c < count; ++c) sums.col(c) = (sums.col(c) / npts[c]).array().pow(1.0 / p).matrix();
  return sums;
}

}  // namespace

double reducing_norm(const MatrixField& root, const std::vector<Index>& points, const Eigen::VectorXd& y, double p) {
  const int m = root.order();
  double acc = 0.0;
  for (Index x : points) {
    Eigen::Map<const Eigen::MatrixXd> a(root.data(x), m, m);
    acc += std::pow((a * y).norm(), p);
  }
  return std::pow(acc / static_cast<double>(points.size()), 1.0 / p);
}

double ap_characteristic(const MatrixWeight& w, double p, const CubeRange& range, int max_samples_per_axis) {
  require(p > 0, "p must be positive");
  const auto& grid = w.grid();
  validate(range, grid, 0);
  const MatrixField root = w.power(1.0 / p), inv = w.power(-1.0 / p);
  double best = 0.0;
  for (int j = range.first(); j <= range.last(); ++j) {
    for (Index id = 0; id < cube_count(grid, j); ++id) {
      const auto pts = stratified(cube_points(grid, cube_from_id(grid, j, id)), grid.dim, max_samples_per_axis);
      best = std::max(best, ap_block(root, inv, pts, pts, p));
    }
  }
  return best;
}

ReducingFamily reducing_operators(const MatrixWeight& w, double p, const CubeRange& range, ReducingMethod method,
                                  int fit_directions_count) {
  require(p > 0, "p must be positive");
  const auto& grid = w.grid();
  validate(range, grid, 0);
  const int m = w.order();
  ReducingFamily fam{grid, range, method, p, {}};
  const MatrixField sq = w.power(2.0 / p);
  const MatrixField root = method == ReducingMethod::EllipsoidFit ? w.power(1.0 / p) : MatrixField();
  const auto dirs = fit_directions(m, fit_directions_count);
  const Eigen::MatrixXd powers =
      method == ReducingMethod::EllipsoidFit ? direction_powers(root, dirs, p) : Eigen::MatrixXd();
  for (int j = range.first(); j <= range.last(); ++j) {
    const Eigen::MatrixXd rho = method == ReducingMethod::EllipsoidFit ? cube_rho(powers, grid, j, p) : Eigen::MatrixXd();
    const Index count = cube_count(grid, j);
    MatrixField lv(count, m);
    std::vector<Eigen::MatrixXd> sums(static_cast<std::size_t>(count), Eigen::MatrixXd::Zero(m, m));
    std::vector<Index> npts(static_cast<std::size_t>(count), 0);
    const auto ids = point_cube_ids(grid, j);
    for (Index k = 0; k < grid.size(); ++k) {
      sums[static_cast<std::size_t>(ids[static_cast<std::size_t>(k)])] += sq[k];
      ++npts[static_cast<std::size_t>(ids[static_cast<std::size_t>(k)])];
    }
    for (Index c = 0; c < count; ++c) {
      Eigen::MatrixXd avg = sums[static_cast<std::size_t>(c)] / static_cast<double>(npts[static_cast<std::size_t>(c)]);
      avg = 0.5 * (avg + avg.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(avg);
      if (es.eigenvalues().minCoeff() <= 0)
        throw Error("reducing operator is not positive definite at level " + std::to_string(j) + ", cube " +
                    std::to_string(c) + " (min eigenvalue " + std::to_string(es.eigenvalues().minCoeff()) + ")");
      Eigen::MatrixXd a = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
      if (method == ReducingMethod::EllipsoidFit) {
        const Eigen::VectorXd log_rho = rho.col(c).array().log();
        Eigen::MatrixXd fit = ellipsoid_fit(a, dirs, log_rho);
        Eigen::MatrixXd scaled = a;
        const double e_fit = centre(fit, dirs, log_rho);
        const double e_sm = centre(scaled, dirs, log_rho);
        a = e_fit <= e_sm ? fit : scaled;
        a = 0.5 * (a + a.transpose()).eval();
        if (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a, Eigen::EigenvaluesOnly).eigenvalues().minCoeff() <= 0)
          throw Error("ellipsoid fit produced a non positive definite matrix at level " + std::to_string(j));
      }
      lv[c] = a;
    }
    fam.levels.push_back(std::move(lv));
  }
  return fam;
}

std::pair<double, double> sandwich_constants(const MatrixWeight& w, double p, const ReducingFamily& family, int n_dirs,
                                             std::uint64_t seed) {
  const auto& grid = w.grid();
  const int m = w.order();
  require(family.order() == m, "reducing family order does not match weight");
  const MatrixField root = w.power(1.0 / p);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<Eigen::VectorXd> dirs;
  for (int i = 0; i < std::max(1, n_dirs); ++i) {
    Eigen::VectorXd y(m);
    for (int c = 0; c < m; ++c) y[c] = nd(rng);
    dirs.push_back(m == 1 ? Eigen::VectorXd::Ones(1) : y.normalized().eval());
  }
  if (m == 1) dirs.resize(1);
  Eigen::MatrixXd y(m, static_cast<Index>(dirs.size()));
  for (std::size_t i = 0; i < dirs.size(); ++i) y.col(static_cast<Index>(i)) = dirs[i];
  const Eigen::MatrixXd powers = direction_powers(root, dirs, p);
  double c1 = kInf, c2 = 0.0;
  for (int j = family.range.first(); j <= family.range.last(); ++j) {
    const Eigen::MatrixXd rho = cube_rho(powers, grid, j, p);
    for (Index id = 0; id < cube_count(grid, j); ++id) {
      const Eigen::MatrixXd a = family.at(cube_from_id(grid, j, id));
      const Eigen::ArrayXd ratio = rho.col(id).array() / (a * y).colwise().norm().transpose().array();
      c1 = std::min(c1, ratio.minCoeff());
      c2 = std::max(c2, ratio.maxCoeff());
    }
  }
  return {c1, c2};
}

double doubling_exponent(const MatrixWeight& w, double p, int samples, std::uint64_t seed) {
  const auto& grid = w.grid();
  const int m = w.order();
  const MatrixField root = w.power(1.0 / p);
  std::vector<Eigen::VectorXd> dirs;
  if (m == 1) {
    dirs.push_back(Eigen::VectorXd::Ones(1));
  } else {
    for (int c = 0; c < m; ++c) dirs.push_back(Eigen::VectorXd::Unit(m, c));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    for (int i = 0; i < samples; ++i) {
      Eigen::VectorXd y(m);
      for (int c = 0; c < m; ++c) y[c] = nd(rng);
      dirs.push_back(y.normalized());
    }
  }
  double best = 0.0;
  for (const auto& y : dirs) {
    Eigen::VectorXd wy(grid.size());
    for (Index k = 0; k < grid.size(); ++k) {
      Eigen::Map<const Eigen::MatrixXd> a(root.data(k), m, m);
      wy[k] = std::pow((a * y).norm(), p);
    }
    for (int j = -grid.side_log2 + 1; j <= grid.res_log2 - 1; ++j) {
      for (Index id : sample_ids(grid, j, samples)) {
        const DyadicCube q = cube_from_id(grid, j, id);
        double small = 0.0, big = 0.0;
        for (Index k : cube_points(grid, q)) small += wy[k];
        for (Index k : dilated_cube_points(grid, q, 1)) big += wy[k];
        best = std::max(best, big / small);
      }
    }
  }
  return std::log2(best);
}

namespace {

double dimension_estimate(const MatrixField& lf, const MatrixField& rf, double e, const TorusGrid& grid,
                          const CubeRange& range, int i_max, int max_cubes, int cap) {
  double d = 0.0;
  for (int j = range.first(); j <= range.last(); ++j) {
    if (j > grid.res_log2 - 1) continue;
    for (Index id : sample_ids(grid, j, max_cubes)) {
      const DyadicCube q = cube_from_id(grid, j, id);
      const auto xs = stratified(cube_points(grid, q), grid.dim, cap);
      const double d0 = ap_block(lf, rf, xs, xs, e);
      for (int i = 1; i <= i_max; ++i) {
        if (j - i < -grid.side_log2) break;
        const auto ys = stratified(dilated_cube_points(grid, q, i), grid.dim, cap);
        const double di = ap_block(lf, rf, xs, ys, e);
        d = std::max(d, std::log2(di / d0) / i);
      }
    }
  }
  return std::clamp(d, 0.0, std::nextafter(static_cast<double>(grid.dim), 0.0));
}

}  // namespace

ApDimensions ap_dimensions(const MatrixWeight& w, double p, const CubeRange& range, int i_max, int max_cubes_per_level,
                           int max_samples_per_axis) {
  require(p > 0, "p must be positive");
  require(i_max >= 1, "i_max must be at least 1");
  const auto& grid = w.grid();
  validate(range, grid, 0);
  const MatrixField root = w.power(1.0 / p), inv = w.power(-1.0 / p);
  ApDimensions out;
  out.d = dimension_estimate(root, inv, p, grid, range, i_max, max_cubes_per_level, max_samples_per_axis);
  if (p > 1)
    out.d_tilde =
        dimension_estimate(inv, root, p / (p - 1), grid, range, i_max, max_cubes_per_level, max_samples_per_axis);
  out.delta = out.d / p + out.d_tilde * dual_inverse(p);
  return out;
}

double strong_doubling_constant(const ReducingFamily& family, double p, double d, double d_tilde, double delta,
                                int max_cubes_per_level) {
  const auto& grid = family.grid;
  const int m = family.order();
  struct Entry {
    DyadicCube q;
    Eigen::MatrixXd a, a_inv;
  };
  std::vector<Entry> cubes;
  for (int j = family.range.first(); j <= family.range.last(); ++j) {
    for (Index id : sample_ids(grid, j, max_cubes_per_level)) {
      const DyadicCube q = cube_from_id(grid, j, id);
      Eigen::MatrixXd a = family.at(q);
      cubes.push_back({q, a, a.inverse()});
    }
  }
  const double dp = dual_inverse(p);
  double best = 0.0;
  for (const auto& qe : cubes) {
    for (const auto& re : cubes) {
      const double lq = qe.q.side(), lr = re.q.side();
      const double scale = std::max(std::pow(lr / lq, d / p), std::pow(lq / lr, d_tilde * dp));
      const double sep = grid.distance(qe.q.center(), re.q.center()) / std::max(lq, lr);
      const double bound = scale * std::pow(1.0 + sep, delta);
      best = std::max(best, product_norm(qe.a.data(), re.a_inv.data(), m) / bound);
    }
  }
  return best;
}

double reducing_integrability(const MatrixWeight& w, double p, const ReducingFamily& family, double v) {
  const auto& grid = w.grid();
  const int m = w.order();
  const MatrixField root = w.power(1.0 / p);
  double best = 0.0;
  for (int j = family.range.first(); j <= family.range.last(); ++j) {
    for (Index id = 0; id < cube_count(grid, j); ++id) {
      const DyadicCube q = cube_from_id(grid, j, id);
      const Eigen::MatrixXd ainv = family.at(q).inverse();
      const auto pts = cube_points(grid, q);
      double acc = 0.0;
      for (Index x : pts) acc += std::pow(product_norm(root.data(x), ainv.data(), m), v);
      best = std::max(best, acc / static_cast<double>(pts.size()));
    }
  }
  return best;
}

double reducing_inverse_sup(const MatrixWeight& w, double p, const ReducingFamily& family) {
  const auto& grid = w.grid();
  const int m = w.order();
  const MatrixField inv = w.power(-1.0 / p);
  double best = 0.0;
  for (int j = family.range.first(); j <= family.range.last(); ++j) {
    for (Index id = 0; id < cube_count(grid, j); ++id) {
      const DyadicCube q = cube_from_id(grid, j, id);
      const Eigen::MatrixXd a = family.at(q);
      for (Index x : cube_points(grid, q)) best = std::max(best, product_norm(a.data(), inv.data(x), m));
    }
  }
  return best;
}

WeightDiagnostics diagnose(const MatrixWeight& w, double p, const CubeRange& range, const DiagnosticsOptions& opt) {
  const auto& grid = w.grid();
  WeightDiagnostics out;
  out.ap_char = ap_characteristic(w, p, range);
  out.beta = doubling_exponent(w, p, opt.doubling_samples);
  const ApDimensions dims = ap_dimensions(w, p, range, opt.i_max);
  out.d = dims.d;
  out.d_tilde = dims.d_tilde;
  out.delta_cap = dims.delta;
  const ReducingFamily fam = reducing_operators(w, p, range, opt.method);
  out.sandwich = sandwich_constants(w, p, fam, opt.sandwich_dirs);
  CubeRange wide = range;
  wide.j_max = std::min(range.j_max + 1, grid.res_log2);
  const ReducingFamily fam_wide = reducing_operators(w, p, wide, opt.method);
  for (double margin : {0.25, 0.5, 1.0, 2.0}) {
    const double a = reducing_integrability(w, p, fam, p + margin);
    const double b = reducing_integrability(w, p, fam_wide, p + margin);
    if (std::isfinite(a) && std::isfinite(b) && b <= 1.25 * a && a <= 1.25 * b) out.delta_w = margin;
  }
  return out;
}

}  // namespace bmtl
