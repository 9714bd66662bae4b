#include <doctest.h>

#include <map>
#include <numbers>

#include "bmtl/harness.hpp"
#include "bmtl/spaces.hpp"
#include "helpers.hpp"

using namespace bmtl;

namespace {

const TorusGrid kLine{1, 2, 8};

Eigen::VectorXd positive_field(const TorusGrid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::VectorXd v(g.size());
  for (Index k = 0; k < g.size(); ++k) v[k] = 1.0 + testing::uniform(rng);
  return v;
}

// Direct cube loop through locate().
double oracle_bm(const Eigen::VectorXd& g, const TorusGrid& grid, double p, double t, double r, const CubeRange& range) {
  double acc = 0;
  for (int j = range.first(); j <= range.last(); ++j) {
    std::map<DyadicCube, double> sums;
    for (Index k = 0; k < grid.size(); ++k) sums[locate(grid, grid.position(k), j)] += std::pow(g[k], p) * grid.cell_volume();
    const double measure = std::pow(std::ldexp(1.0, -j), grid.dim);
    for (const auto& [q, s] : sums) {
      const double term = std::pow(measure, 1 / t - 1 / p) * std::pow(s, 1 / p);
      acc = std::isinf(r) ? std::max(acc, term) : acc + std::pow(term, r);
    }
  }
  return std::isinf(r) ? acc : std::pow(acc, 1 / r);
}

// Largest average over cyclic windows containing each point.
Eigen::VectorXd oracle_maximal(const Eigen::VectorXd& g) {
  const Index n = g.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (Index start = 0; start < n; ++start) {
    double sum = 0;
    for (Index len = 1; len <= n; ++len) {
      sum += g[(start + len - 1) % n];
      for (Index i = 0; i < len; ++i) {
        auto& o = out[(start + i) % n];
        o = std::max(o, sum / static_cast<double>(len));
      }
    }
  }
  return out;
}

SampledField band_field(const TorusGrid& g, int channels, int lo, int hi, std::uint64_t seed) {
  FunctionSpec spec;
  spec.seed = seed;
  spec.band_lo = lo;
  spec.band_hi = hi;
  return make_function(g, channels, spec);
}

Pointwise identity_weight(const TorusGrid& g, int m, double p) { return pointwise(MatrixWeight::identity(g, m), p); }

}  // namespace

TEST_CASE("bm norm with p = t is the Lp norm") {
  const Eigen::VectorXd g = positive_field(kLine, 3);
  const CubeRange outer = outer_range(kLine, {-2, 6, false});
  const double lp = std::pow(g.array().pow(3).sum() * kLine.spacing(), 1.0 / 3);
  CHECK(bm_norm(g, kLine, 3, 3, kInf, outer) == doctest::Approx(lp).epsilon(1e-12));
  CHECK(bm_norm(Eigen::VectorXd::Zero(kLine.size()).eval(), kLine, 1, 2, kInf, outer) == 0.0);
}

TEST_CASE("bm norm of the unit indicator") {
  const double h = kLine.spacing();
  Eigen::VectorXd chi = Eigen::VectorXd::Zero(kLine.size());
  for (Index k = 0; k < kLine.size(); ++k)
    if (kLine.position(k)[0] < 1) chi[k] = 1;
  CHECK(std::abs(bm_norm(chi, kLine, 1, 2, kInf, outer_range(kLine, {-2, 6, false})) - 1.0) <= 2 * h);
}

TEST_CASE("bm norm against a direct cube loop") {
  const TorusGrid g2{2, 1, 4};
  const Eigen::VectorXd g = positive_field(g2, 5);
  const CubeRange outer = outer_range(g2, {-1, 3, false});
  for (double r : {3.0, 6.0, kInf}) {
    CHECK(bm_norm(g, g2, 1.5, 2, r, outer) == doctest::Approx(oracle_bm(g, g2, 1.5, 2, r, outer)).epsilon(1e-12));
  }
  const Eigen::VectorXd g1 = positive_field(kLine, 6);
  const CubeRange outer1 = outer_range(kLine, {-2, 6, false});
  CHECK(bm_norm(g1, kLine, 2, 3, 4, outer1) == doctest::Approx(oracle_bm(g1, kLine, 2, 3, 4, outer1)).epsilon(1e-12));
}

TEST_CASE("bm sequence norm") {
  const CubeRange outer = outer_range(kLine, {-2, 6, false});
  const Eigen::VectorXd g = positive_field(kLine, 7);
  CHECK(bm_seq_norm({g}, kLine, 2, 3, kInf, 2, outer) == doctest::Approx(bm_norm(g, kLine, 2, 3, kInf, outer)));
  CHECK(bm_seq_norm({g, g, g}, kLine, 2, 3, kInf, kInf, outer) == doctest::Approx(bm_norm(g, kLine, 2, 3, kInf, outer)));
  Eigen::VectorXd a = g, b = g;
  for (Index k = 0; k < kLine.size(); ++k) (k % 2 ? a : b)[k] = 0;
  CHECK(bm_seq_norm({a, b}, kLine, 2, 3, 5, 1, outer) == doctest::Approx(bm_norm(g, kLine, 2, 3, 5, outer)));
  CHECK(bm_seq_norm({}, kLine, 2, 3, 5, 1, outer) == 0.0);
}

TEST_CASE("maximal function") {
  const double h = kLine.spacing();
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(kLine.size(), 3.0);
  CHECK((hl_maximal(c, kLine).array() - 3.0).abs().maxCoeff() <= 1e-12);

  Eigen::VectorXd chi = Eigen::VectorXd::Zero(kLine.size());
  for (Index k = 0; k < kLine.size(); ++k)
    if (kLine.position(k)[0] < 1) chi[k] = 1;
  const Eigen::VectorXd m = hl_maximal(chi, kLine);
  CHECK(std::abs(m[kLine.flat(512)] - 0.5) <= 2 * h);

  const Eigen::VectorXd g = positive_field(kLine, 8);
  CHECK((hl_maximal(g, kLine) - g).minCoeff() >= -1e-12);

  const TorusGrid small{1, 2, 4};
  const Eigen::VectorXd s = positive_field(small, 9);
  CHECK((hl_maximal(s, small) - oracle_maximal(s)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(hl_maximal((-c).eval(), kLine), Error);
}

TEST_CASE("tl norm basic properties") {
  const CubeRange range{-2, 6, false};
  const SpaceParams sp{0.5, 2, 2, 3, kInf, true};
  const Decomposition dec = make_admissible_pair();
  const auto w = identity_weight(kLine, 2, sp.p);
  const SampledField f = band_field(kLine, 2, 0, 3, 11);
  const SampledField g = band_field(kLine, 2, 1, 4, 12);
  CHECK(tl_norm(SampledField(kLine, 2), w, sp, dec, range).value == 0.0);

  const double nf = tl_norm(f, w, sp, dec, range).value;
  SampledField f2 = f;
  f2.values *= 2.0;
  CHECK(tl_norm(f2, w, sp, dec, range).value == doctest::Approx(2 * nf).epsilon(1e-12));
  SampledField fg = f;
  fg.values += g.values;
  CHECK(tl_norm(fg, w, sp, dec, range).value <= nf + tl_norm(g, w, sp, dec, range).value + 1e-12);

  const ReducingFamily fam = reducing_operators(MatrixWeight::identity(kLine, 2), sp.p, range);
  CHECK(tl_norm(f, Cubewise{fam}, sp, dec, range).value == doctest::Approx(nf).epsilon(1e-10));
  CHECK_THROWS_AS(tl_norm(f, identity_weight(kLine, 1, sp.p), sp, dec, range), Error);
}

TEST_CASE("tl norm is dilation covariant for the identity weight") {
  for (double s : {-0.5, 0.0, 1.0}) {
    const SpaceParams sp{s, 2, 2, 2, kInf, true};
    const Decomposition dec = make_admissible_pair();
    const auto w = identity_weight(kLine, 1, sp.p);
    const SampledField f = band_field(kLine, 1, 1, 3, 13);
    const double before = tl_norm(f, w, sp, dec, {-1, 5, false}).value;
    const double after = tl_norm(dilate(f, 1), w, sp, dec, {0, 6, false}).value;
    CHECK(after == doctest::Approx(std::pow(2.0, s) * before).epsilon(1e-8));
  }
}

TEST_CASE("sequence norm") {
  const CubeRange range{-2, 6, false};
  const SpaceParams sp{0, 2, 2, 2, kInf, true};
  const auto w = identity_weight(kLine, 1, 2);
  for (int j : {-1, 0, 3}) {
    CoeffSequence c(kLine, 1);
    c.set(DyadicCube{j, {0, 0}, 1}, Eigen::VectorXcd::Ones(1));
    CHECK(seq_norm(c, w, sp, range).value == doctest::Approx(1.0).epsilon(1e-12));
    c *= cplx(0, 3);
    CHECK(seq_norm(c, w, sp, range).value == doctest::Approx(3.0).epsilon(1e-12));
  }
  CHECK(seq_norm(CoeffSequence(kLine, 1), w, sp, range).value == 0.0);
  CoeffSequence out(kLine, 1);
  out.set(DyadicCube{7, {0, 0}, 1}, Eigen::VectorXcd::Ones(1));
  CHECK_THROWS_AS(seq_norm(out, w, sp, range), Error);
}

TEST_CASE("sparse subsets keep the sequence norm") {
  const CubeRange range{0, 4, false};
  std::mt19937_64 rng(17);
  for (double p : {1.0, 2.0, 4.0}) {
    const SpaceParams sp{0.5, p, 2, p + 1, kInf, true};
    const MatrixWeight mw = make_weight(kLine, 2, {WeightKind::Power});
    const auto w = pointwise(mw, p);
    CoeffSequence c(kLine, 2);
    SparseSupport subsets;
    for (int j = range.j_min; j <= range.j_max; ++j) {
      for (const auto& q : cubes_at_level(kLine, j)) {
        Eigen::VectorXcd v(2);
        v << testing::uniform(rng), testing::uniform(rng);
        c.set(q, v);
        const auto pts = cube_points(kLine, q);
        std::vector<Index> keep;
        for (std::size_t i = 0; i < pts.size(); ++i)
          if (i % 2 == 0 || testing::uniform(rng) > 0) keep.push_back(pts[i]);
        subsets[q] = keep;
      }
    }
    const double full = seq_norm(c, w, sp, range).value;
    const double sparse = seq_norm(c, w, sp, range, &subsets).value;
    CHECK(sparse <= full * (1 + 1e-12));
    CHECK(full <= 4 * sparse);
  }
}

TEST_CASE("peetre, lusin and g-lambda compare with the base norm") {
  const CubeRange range{-2, 5, false};
  const SpaceParams sp{0.5, 2, 2, 3, kInf, true};
  const Decomposition dec = make_admissible_pair();
  const auto w = pointwise(make_weight(kLine, 2, {WeightKind::RotatedPower}), sp.p);
  const SampledField f = band_field(kLine, 2, 0, 3, 21);
  const double base = tl_norm(f, w, sp, dec, range).value;
  const double p2 = peetre_norm(f, w, sp, 2, dec, range).value;
  const double p4 = peetre_norm(f, w, sp, 4, dec, range).value;
  CHECK(p4 >= base * (1 - 1e-12));
  CHECK(p2 >= p4 * (1 - 1e-12));
  CHECK(p2 <= 20 * base);

  const double lusin = lusin_norm(f, w, sp, dec, range).value;
  CHECK(lusin >= base / 10);
  CHECK(lusin <= 10 * base);
  const double g2 = glambda_norm(f, w, sp, 2, dec, range).value;
  const double g3 = glambda_norm(f, w, sp, 3, dec, range).value;
  CHECK(g2 >= g3 * (1 - 1e-12));
  CHECK(g3 >= base / 10);
  CHECK(g2 <= 10 * base);
}

TEST_CASE("approximation norm") {
  const CubeRange range{0, 5, true};
  const SpaceParams sp{2, 2, 2, 3, kInf, false};
  const auto w = identity_weight(kLine, 1, sp.p);
  CHECK(approx_norm(SampledField(kLine, 1), w, sp, range).value == 0.0);
  const SampledField f = band_field(kLine, 1, 0, 3, 23);
  const double a = approx_norm(f, w, sp, range).value;
  const double base = tl_norm(f, w, sp, InhomPartition{}, range).value;
  CHECK(a >= base / 20);
  CHECK(a <= 20 * base);
  SpaceParams hom = sp;
  hom.homogeneous = true;
  CHECK_THROWS_AS(approx_norm(f, w, hom, range), Error);
}

TEST_CASE("averaging operator") {
  const SampledField f = testing::random_field(kLine, 2, 29);
  for (int j : {-2, 0, 3}) {
    const SampledField e = averaging(f, j);
    CHECK(testing::rel_diff(averaging(e, j), e) <= 1e-12);
    for (const auto& q : cubes_at_level(kLine, j)) {
      const auto pts = cube_points(kLine, q);
      Eigen::RowVectorXcd mean = Eigen::RowVectorXcd::Zero(2);
      for (Index k : pts) mean += f.values.row(k);
      mean /= static_cast<double>(pts.size());
      for (Index k : pts) CHECK((e.values.row(k) - mean).norm() <= 1e-13);
    }
  }
  SampledField c(kLine, 1);
  c.values.setConstant(2.5);
  CHECK(testing::rel_diff(averaging(c, 1), c) <= 1e-15);
}

TEST_CASE("maximal inequality ratio stays bounded") {
  const CubeRange outer = outer_range(kLine, {-2, 6, false});
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Eigen::VectorXd g = positive_field(kLine, seed).array().pow(4).matrix();
    for (double p : {1.5, 2.0, 4.0}) {
      const double ratio = bm_norm(hl_maximal(g, kLine), kLine, p, p + 1, kInf, outer) / bm_norm(g, kLine, p, p + 1, kInf, outer);
      CHECK(ratio >= 1.0);
      CHECK(ratio <= 10.0);
    }
  }
}
