#include <doctest.h>

#include <numbers>

#include "bmtl/weights.hpp"
#include "helpers.hpp"

using namespace bmtl;

namespace {

// |x - 2|^alpha on the n = 1 torus of side 4, clipped below at h^alpha.
MatrixWeight scalar_power(const TorusGrid& g, double alpha) {
  return MatrixWeight::from_function(g, 1, [&](const Eigen::Vector2d& x) {
    return Eigen::MatrixXd::Constant(1, 1, std::pow(std::max(std::abs(x[0] - 2.0), g.spacing()), alpha));
  });
}

Eigen::Matrix2d rot(double t) {
  Eigen::Matrix2d r;
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

double avg(const Eigen::VectorXd& v, Index lo, Index len) {
  const Index n = v.size();
  double s = 0;
  for (Index k = 0; k < len; ++k) s += v[((lo + k) % n + n) % n];
  return s / static_cast<double>(len);
}

// sup over dyadic intervals of ⟨w⟩⟨w^{-1}⟩, straight from the samples.
double oracle_a2(const Eigen::VectorXd& w, const TorusGrid& g, int j_min, int j_max) {
  const Eigen::VectorXd inv = w.cwiseInverse();
  double best = 0;
  for (int j = j_min; j <= j_max; ++j) {
    const Index len = Index{1} << (g.res_log2 - j);
    for (Index lo = 0; lo < g.size(); lo += len) best = std::max(best, avg(w, lo, len) * avg(inv, lo, len));
  }
  return best;
}

// p = 2 dimension estimate: max log2(⟨u⟩_Q ⟨v⟩_{2^i Q} / (⟨u⟩_Q ⟨v⟩_Q)) / i.
double oracle_dim(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const TorusGrid& g, int j_min, int j_max,
                  int i_max) {
  double d = 0;
  for (int j = j_min; j <= j_max; ++j) {
    const Index len = Index{1} << (g.res_log2 - j);
    for (Index lo = 0; lo < g.size(); lo += len) {
      const double base = avg(u, lo, len) * avg(v, lo, len);
      for (int i = 1; i <= i_max && j - i >= -g.side_log2; ++i) {
        const Index big = len << i;
        const double di = avg(u, lo, len) * avg(v, lo + len / 2 - big / 2, big);
        d = std::max(d, std::log2(di / base) / i);
      }
    }
  }
  return std::clamp(d, 0.0, std::nextafter(1.0, 0.0));
}

}  // namespace

TEST_CASE("matrix helpers") {
  Eigen::Matrix2d a;
  a << 4, 1, 1, 3;
  const Eigen::MatrixXd r = spd_power(a, 0.5);
  CHECK((r * r - a).norm() < 1e-12);
  CHECK((sym_exp(sym_log(a)) - a).norm() < 1e-12);
  CHECK(operator_norm(a) == doctest::Approx(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(a).eigenvalues().maxCoeff()));
  Eigen::Matrix2d bad;
  bad << 1, 0, 0, -1;
  CHECK_THROWS_AS(spd_power(bad, 0.5), Error);
}

TEST_CASE("weights must be symmetric positive definite") {
  const TorusGrid g(1, 0, 3);
  MatrixField v(g.size(), 2);
  for (Index k = 0; k < g.size(); ++k) v[k].setIdentity();
  v[3](0, 1) = 0.5;
  CHECK_THROWS_AS(MatrixWeight(g, v), Error);
  v[3](0, 1) = 0;
  v[3](1, 1) = -1;
  CHECK_THROWS_AS(MatrixWeight(g, v), Error);
}

TEST_CASE("A_p characteristic") {
  const TorusGrid g(1, 2, 6);
  CHECK(ap_characteristic(MatrixWeight::identity(g, 2), 3.0, CubeRange{-2, 4}) == doctest::Approx(1.0).epsilon(1e-14));

  SUBCASE("scalar power weights against the direct A_2 sums") {
    // Frozen from the direct sums at N = 256.
    const double golden[] = {1.0643615149408281, 1.2970370766828359, 1.8565575248465502};
    double prev = 1.0;
    int i = 0;
    for (double alpha : {0.25, 0.5, 0.75}) {
      const MatrixWeight w = scalar_power(g, alpha);
      Eigen::VectorXd wv(g.size());
      for (Index k = 0; k < g.size(); ++k) wv[k] = w.at(k)(0, 0);
      const double direct = oracle_a2(wv, g, -2, 6);
      const double got = ap_characteristic(w, 2.0, CubeRange{-2, 6}, 256);
      CHECK(got == doctest::Approx(direct).epsilon(1e-12));
      CHECK(got == doctest::Approx(golden[i++]).epsilon(1e-12));
      CHECK(got > prev);
      prev = got;
    }
  }

  SUBCASE("a fixed rotation leaves the characteristic unchanged") {
    const TorusGrid g2(1, 2, 5);
    auto diag = [&](const Eigen::Vector2d& x) {
      return Eigen::Vector2d(std::pow(std::max(std::abs(x[0] - 2.0), g2.spacing()), 0.5), 2.0 + std::sin(x[0]));
    };
    const Eigen::Matrix2d r = rot(0.7);
    const MatrixWeight d = MatrixWeight::from_function(g2, 2, [&](const Eigen::Vector2d& x) {
      return Eigen::MatrixXd(diag(x).asDiagonal());
    });
    const MatrixWeight rd = MatrixWeight::from_function(g2, 2, [&](const Eigen::Vector2d& x) {
      return Eigen::MatrixXd(r * diag(x).asDiagonal() * r.transpose());
    });
    for (double p : {1.0, 2.0, 3.0})
      CHECK(ap_characteristic(rd, p, CubeRange{-2, 3}) == doctest::Approx(ap_characteristic(d, p, CubeRange{-2, 3})).epsilon(1e-10));
  }
}

TEST_CASE("reducing operators") {
  const TorusGrid g(1, 1, 5);
  const CubeRange range{-1, 3};

  SUBCASE("constant weight gives its p-th root") {
    Eigen::Matrix2d w0;
    w0 << 3, 1, 1, 2;
    const MatrixWeight w = MatrixWeight::from_function(g, 2, [&](const Eigen::Vector2d&) { return Eigen::MatrixXd(w0); });
    for (double p : {1.0, 2.0, 4.0})
      for (auto m : {ReducingMethod::SecondMoment, ReducingMethod::EllipsoidFit}) {
        const ReducingFamily fam = reducing_operators(w, p, range, m);
        const Eigen::MatrixXd root = spd_power(w0, 1.0 / p);
        for (int j = -1; j <= 3; ++j)
          for (const auto& q : cubes_at_level(g, j)) CHECK((fam.at(q) - root).norm() < 1e-10);
      }
  }

  SUBCASE("identity sandwich and p = 2 exactness") {
    const auto [a, b] = sandwich_constants(MatrixWeight::identity(g, 2), 3.0,
                                           reducing_operators(MatrixWeight::identity(g, 2), 3.0, range), 64);
    CHECK(a == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b == doctest::Approx(1.0).epsilon(1e-12));
    const MatrixWeight w = MatrixWeight::from_function(g, 2, [](const Eigen::Vector2d& x) {
      const Eigen::Matrix2d r = rot(x[0]);
      return Eigen::MatrixXd(r * Eigen::Vector2d(1.0 + x[0], 0.3).asDiagonal() * r.transpose());
    });
    const auto [c1, c2] = sandwich_constants(w, 2.0, reducing_operators(w, 2.0, range), 500);
    CHECK(c2 / c1 <= 1 + 1e-8);
    CHECK(c1 == doctest::Approx(1.0).epsilon(1e-10));
  }

  SUBCASE("two-valued scalar weight, p = 4") {
    const TorusGrid g1(1, 0, 3);
    const MatrixWeight w = MatrixWeight::from_function(g1, 1, [](const Eigen::Vector2d& x) {
      return Eigen::MatrixXd::Constant(1, 1, x[0] < 0.5 ? 1.0 : 16.0);
    });
    const DyadicCube q{0, {0, 0}, 1};
    const double rho = std::pow((1.0 + 16.0) / 2.0, 0.25);
    CHECK(rho == doctest::Approx(1.7075).epsilon(1e-4));
    const auto sm = reducing_operators(w, 4.0, CubeRange{0, 0}, ReducingMethod::SecondMoment);
    CHECK(sm.at(q)(0, 0) == doctest::Approx(std::sqrt(2.5)).epsilon(1e-12));
    const auto fit = reducing_operators(w, 4.0, CubeRange{0, 0}, ReducingMethod::EllipsoidFit);
    CHECK(std::abs(fit.at(q)(0, 0) - rho) < 1e-6);
  }

  SUBCASE("power weight at p = 1: the fit never does worse") {
    const TorusGrid g2(1, 2, 6);
    const MatrixWeight w = MatrixWeight::from_function(g2, 2, [&](const Eigen::Vector2d& x) {
      const Eigen::Matrix2d r = rot(0.4);
      const double a = std::pow(std::max(std::abs(x[0] - 2.0), g2.spacing()), 0.5);
      return Eigen::MatrixXd(r * Eigen::Vector2d(a, 1.0).asDiagonal() * r.transpose());
    });
    const CubeRange rg{-2, 4};
    const auto [s1, s2] = sandwich_constants(w, 1.0, reducing_operators(w, 1.0, rg), 1000);
    const auto [f1, f2] = sandwich_constants(w, 1.0, reducing_operators(w, 1.0, rg, ReducingMethod::EllipsoidFit), 1000);
    CHECK(std::isfinite(s2 / s1));
    CHECK(f2 / f1 <= s2 / s1 + 1e-12);
  }
}

TEST_CASE("doubling exponent") {
  CHECK(doubling_exponent(MatrixWeight::identity(TorusGrid(1, 2, 5), 2), 2.0, 16) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(doubling_exponent(MatrixWeight::identity(TorusGrid(2, 1, 3), 1), 2.0, 16) == doctest::Approx(2.0).epsilon(1e-12));
  const TorusGrid g(1, 2, 7);
  const MatrixWeight w = scalar_power(g, 1.0);
  const double beta = doubling_exponent(w, 2.0, 4096);
  CHECK(beta >= 1.0 - 0.01);
  Eigen::VectorXd wv(g.size());
  for (Index k = 0; k < g.size(); ++k) wv[k] = w.at(k)(0, 0);
  double direct = 0;
  for (int j = -1; j <= 6; ++j) {
    const Index len = Index{1} << (g.res_log2 - j);
    for (Index lo = 0; lo < g.size(); lo += len)
      direct = std::max(direct, 2.0 * avg(wv, lo - len / 2, 2 * len) / avg(wv, lo, len));
  }
  CHECK(beta == doctest::Approx(std::log2(direct)).epsilon(1e-12));

  // Frozen at N = 512.
  CHECK(beta == doctest::Approx(1.4405725913859815).epsilon(1e-12));
}

TEST_CASE("A_p dimensions") {
  const TorusGrid g(1, 2, 7);
  const ApDimensions id = ap_dimensions(MatrixWeight::identity(g, 2), 2.0, CubeRange{-1, 5}, 2);
  CHECK(id.d == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(id.d_tilde == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(id.delta == doctest::Approx(0.0).epsilon(1e-12));

  const MatrixWeight w = scalar_power(g, 0.5);
  CHECK(ap_dimensions(w, 1.0, CubeRange{-1, 5}, 2).d_tilde == 0.0);

  Eigen::VectorXd wv(g.size());
  for (Index k = 0; k < g.size(); ++k) wv[k] = w.at(k)(0, 0);
  const ApDimensions dm = ap_dimensions(w, 2.0, CubeRange{-1, 6}, 3, 1 << 20, 1 << 20);
  const double d_direct = oracle_dim(wv, wv.cwiseInverse(), g, -1, 6, 3);
  const double dt_direct = oracle_dim(wv.cwiseInverse(), wv, g, -1, 6, 3);
  CHECK(dm.d == doctest::Approx(d_direct).epsilon(1e-12));
  CHECK(dm.d_tilde == doctest::Approx(dt_direct).epsilon(1e-12));
  CHECK(dm.d > 0.0);
  CHECK(dm.d < 1.0);
  CHECK(dm.delta == doctest::Approx(dm.d / 2 + dm.d_tilde / 2).epsilon(1e-14));
  // Frozen at N = 512.
  CHECK(dm.d == doctest::Approx(0.36479198782478767).epsilon(1e-12));
  CHECK(dm.d_tilde == doctest::Approx(0.35639348056013381).epsilon(1e-12));
}

TEST_CASE("strong doubling and integrability diagnostics") {
  const TorusGrid g(1, 2, 6);
  const CubeRange range{-2, 4};
  const MatrixWeight id = MatrixWeight::identity(g, 2);
  CHECK(strong_doubling_constant(reducing_operators(id, 2.0, range), 2.0, 0, 0, 0) == doctest::Approx(1.0));
  Eigen::Matrix2d w0;
  w0 << 2, 1, 1, 2;
  const MatrixWeight c = MatrixWeight::from_function(g, 2, [&](const Eigen::Vector2d&) { return Eigen::MatrixXd(w0); });
  CHECK(strong_doubling_constant(reducing_operators(c, 2.0, range), 2.0, 0, 0, 0) == doctest::Approx(1.0));

  const MatrixWeight w = scalar_power(g, 0.5);
  const ApDimensions dm = ap_dimensions(w, 2.0, range, 3);
  const double s = strong_doubling_constant(reducing_operators(w, 2.0, range), 2.0, dm.d, dm.d_tilde, dm.delta);
  CubeRange wide = range;
  wide.j_max += 1;
  const double sw = strong_doubling_constant(reducing_operators(w, 2.0, wide), 2.0, dm.d, dm.d_tilde, dm.delta);
  CHECK(std::isfinite(s));
  CHECK(sw == doctest::Approx(s).epsilon(0.10));

  // Integrability at v = p and v = p + 1/2 on the reducing family, stable when the range widens.
  for (double v : {2.0, 2.5}) {
    const double a = reducing_integrability(w, 2.0, reducing_operators(w, 2.0, range), v);
    const double b = reducing_integrability(w, 2.0, reducing_operators(w, 2.0, wide), v);
    CHECK(std::isfinite(a));
    CHECK(b == doctest::Approx(a).epsilon(0.25));
  }
  CHECK(std::isfinite(reducing_inverse_sup(scalar_power(g, -0.5), 1.0, reducing_operators(scalar_power(g, -0.5), 1.0, range))));
}

TEST_CASE("diagnostics bundle") {
  const TorusGrid g(1, 2, 6);
  DiagnosticsOptions opt;
  opt.sandwich_dirs = 200;
  const WeightDiagnostics d = diagnose(scalar_power(g, 0.5), 2.0, CubeRange{-2, 4}, opt);
  CHECK(d.ap_char >= 1.0);
  CHECK(d.beta >= 1.0 - 0.01);
  CHECK(d.d >= 0.0);
  CHECK(d.d < 1.0);
  CHECK(d.delta_cap == doctest::Approx(d.d / 2 + d.d_tilde / 2));
  CHECK(d.sandwich.first <= 1.0 + 1e-8);
  CHECK(d.sandwich.second >= 1.0 - 1e-8);
}
