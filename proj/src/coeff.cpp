#include "bmtl/coeff.hpp"

namespace bmtl {

CoeffSequence phi_transform(const SampledField& f, const AdmissiblePair& pair, const CubeRange& range) {
  const auto& grid = f.grid;
  validate(range, grid, 0);
  const SpectralField F = to_spectral(f);
  CoeffSequence out(grid, f.channels());
  for (int v = range.first(); v <= range.last(); ++v) {
    const SampledField g = radial_filter(F, [&](double r) { return pair.phi_level(v - kPhiBandOffset, r); });
    const double scale = std::pow(2.0, -0.5 * v * grid.dim);
    for (Index id = 0; id < cube_count(grid, v); ++id) {
      const DyadicCube q = cube_from_id(grid, v, id);
      Eigen::VectorXcd s = scale * g.values.row(corner_point(grid, q)).transpose();
      if (!s.isZero(0.0)) out.entries.emplace(q, std::move(s));
    }
  }
  return out;
}

SampledField phi_synthesis(const CoeffSequence& coeffs, const AdmissiblePair& pair) {
  const auto& grid = coeffs.grid;
  SpectralField acc{grid, Eigen::MatrixXcd::Zero(grid.size(), coeffs.channels)};
  if (coeffs.empty()) return from_spectral(acc);
  const double inv_cell = 1.0 / grid.cell_volume();
  for (int v = coeffs.min_level(); v <= coeffs.max_level(); ++v) {
    check_level(grid, v);
    SampledField comb(grid, coeffs.channels);
    bool any = false;
    const double scale = std::pow(2.0, -0.5 * v * grid.dim) * inv_cell;
    for (auto it = coeffs.entries.lower_bound(DyadicCube{v, {std::numeric_limits<Index>::min(), 0}, grid.dim});
         it != coeffs.entries.end() && it->first.level == v; ++it) {
      comb.values.row(corner_point(grid, it->first)) += scale * it->second.transpose();
      any = true;
    }
    if (!any) continue;
    SpectralField C = to_spectral(comb);
    for (Index k = 0; k < grid.size(); ++k)
      acc.coeffs.row(k) += pair.psi_level(v - kPhiBandOffset, grid.frequency(k).norm()) * C.coeffs.row(k);
  }
  return from_spectral(acc);
}

void ADProfile::validate(int dim) const {
  require(epsilon > 0, "almost-diagonal epsilon must be positive");
  require(p > 0 && q > 0, "almost-diagonal exponents must be positive");
  require(d >= 0 && d < dim, "A_p dimension d must lie in [0, n)");
  require(d_tilde >= 0, "dual A_p dimension must be nonnegative");
  require(std::abs(delta_cap - (d / p + d_tilde * dual_inverse(p))) <= 1e-12 * (1 + delta_cap),
          "delta_cap must equal d/p + d_tilde/p'");
}

ADProfile ADProfile::with_dimensions(double s, double p, double q, double epsilon, double d, double d_tilde) {
  return {s, p, q, epsilon, d, d_tilde, d / p + d_tilde * dual_inverse(p)};
}

namespace {

// Level part of ω_QP as a function of log2(ℓ(Q)/ℓ(P)) = level(P) - level(Q).
double ad_level_factor(int dim, int lq, int lp, const ADProfile& prof, ADVariant variant) {
  const double n = dim;
  const double ratio = std::ldexp(1.0, lp - lq);  // ℓ(Q)/ℓ(P)
  const bool weighted = variant == ADVariant::Weighted;
  const double up = (n + prof.epsilon) / 2 + n / prof.J() - n + (weighted ? prof.d_tilde * dual_inverse(prof.p) : 0.0);
  const double down = (n + prof.epsilon) / 2 + (weighted ? prof.d / prof.p : 0.0);
  return std::pow(ratio, prof.s) * std::min(std::pow(1.0 / ratio, up), std::pow(ratio, down));
}

double ad_decay_exponent(int dim, const ADProfile& prof, ADVariant variant) {
  return dim / prof.J() + prof.epsilon + (variant == ADVariant::Weighted ? prof.delta_cap : 0.0);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_cube(std::uint64_t h, const DyadicCube& q) {
  h = splitmix64(h ^ static_cast<std::uint64_t>(q.level + 1024));
  h = splitmix64(h ^ static_cast<std::uint64_t>(q.index[0]));
  return splitmix64(h ^ static_cast<std::uint64_t>(q.index[1]));
}

}  // namespace

double ad_weight(const TorusGrid& grid, const DyadicCube& q, const DyadicCube& p, const ADProfile& prof,
                 ADVariant variant) {
  const double lmax = std::max(q.side(), p.side());
  const double dist = grid.distance(q.corner(), p.corner());
  return ad_level_factor(grid.dim, q.level, p.level, prof, variant) *
         std::pow(1.0 + dist / lmax, -ad_decay_exponent(grid.dim, prof, variant));
}

CoeffSequence ad_apply(const ADEntries& entries, const CoeffSequence& coeffs) {
  CoeffSequence out(coeffs.grid, coeffs.channels);
  for (const auto& [qp, b] : entries) {
    auto it = coeffs.entries.find(qp.second);
    if (it == coeffs.entries.end() || b == cplx(0)) continue;
    auto [slot, inserted] = out.entries.try_emplace(qp.first, Eigen::VectorXcd::Zero(coeffs.channels));
    slot->second += b * it->second;
  }
  return out;
}

ADResult ad_apply(const ADEntryFn& entry, const ADProfile& prof, ADVariant variant, const CoeffSequence& coeffs,
                  const CubeRange& out_range, const ADTruncation& trunc) {
  const auto& grid = coeffs.grid;
  prof.validate(grid.dim);
  validate(out_range, grid, 0);
  ADResult res;
  res.out = CoeffSequence(grid, coeffs.channels);
  if (coeffs.empty()) return res;
  const int m = coeffs.channels;
  const int out_lo = out_range.first(), out_hi = out_range.last();
  const int n_out = out_hi - out_lo + 1;
  const double a = ad_decay_exponent(grid.dim, prof, variant);

  // Radius per (output level, input level) from the ω profile seen by a corner cube;
  // the extra max(ℓ) absorbs the offset between residue classes.
  std::map<std::pair<int, int>, double> radius;
  std::map<int, double> dropped;
  const double budget = trunc.dropped_mass / n_out;
  for (int mu = coeffs.min_level(); mu <= coeffs.max_level(); ++mu) {
    const DyadicCube p0{mu, {0, 0}, grid.dim};
    for (int v = out_lo; v <= out_hi; ++v) {
      const double lmax = std::max(std::ldexp(1.0, -v), std::ldexp(1.0, -mu));
      const double lf = ad_level_factor(grid.dim, v, mu, prof, variant);
      std::vector<std::pair<double, double>> dw;
      dw.reserve(static_cast<std::size_t>(cube_count(grid, v)));
      double total = 0;
      for (Index id = 0; id < cube_count(grid, v); ++id) {
        const double dist = grid.distance(cube_from_id(grid, v, id).corner(), p0.corner());
        const double w = lf * std::pow(1.0 + dist / lmax, -a);
        dw.emplace_back(dist, w);
        total += w;
      }
      std::sort(dw.begin(), dw.end());
      double tail = total, r = -1;
      for (const auto& [dist, w] : dw) {
        if (tail <= budget) break;
        tail -= w;
        r = dist;
      }
      dropped[mu] += std::max(tail, 0.0);
      if (r >= 0) radius[{v, mu}] = r + lmax;
    }
  }
  for (const auto& [mu, t] : dropped) res.dropped_mass = std::max(res.dropped_mass, t);

  std::vector<Eigen::MatrixXcd> acc;
  for (int v = out_lo; v <= out_hi; ++v) acc.push_back(Eigen::MatrixXcd::Zero(cube_count(grid, v), m));
  for (const auto& [p, sp] : coeffs.entries) {
    const Eigen::Vector2d xp = p.corner();
    for (int v = out_lo; v <= out_hi; ++v) {
      auto rit = radius.find({v, p.level});
      if (rit == radius.end()) continue;
      const double r = rit->second;
      const Index c = cubes_per_axis(grid, v);
      const double l = std::ldexp(1.0, -v);
      auto axis_span = [&](double x) {
        Index lo = static_cast<Index>(std::ceil((x - r) / l)), hi = static_cast<Index>(std::floor((x + r) / l));
        if (hi - lo + 1 >= c) {
          lo = 0;
          hi = c - 1;
        }
        return std::pair{lo, hi};
      };
      const auto [lo0, hi0] = axis_span(xp[0]);
      const auto [lo1, hi1] = grid.dim == 2 ? axis_span(xp[1]) : std::pair<Index, Index>{0, 0};
      auto& out = acc[static_cast<std::size_t>(v - out_lo)];
      for (Index i0 = lo0; i0 <= hi0; ++i0) {
        for (Index i1 = lo1; i1 <= hi1; ++i1) {
          DyadicCube q{v, {((i0 % c) + c) % c, grid.dim == 2 ? ((i1 % c) + c) % c : 0}, grid.dim};
          if (grid.distance(q.corner(), xp) > r) continue;
          const cplx b = entry(q, p);
          ++res.evaluated;
          if (b != cplx(0)) out.row(cube_id(grid, q)) += b * sp.transpose();
        }
      }
    }
  }
  for (int v = out_lo; v <= out_hi; ++v) {
    const auto& out = acc[static_cast<std::size_t>(v - out_lo)];
    for (Index id = 0; id < out.rows(); ++id)
      if (!out.row(id).isZero(0.0)) res.out.entries.emplace(cube_from_id(grid, v, id), out.row(id).transpose());
  }
  return res;
}

ADEntryFn random_ad_entries(const TorusGrid& grid, const ADProfile& prof, ADVariant variant, double c,
                            std::uint64_t seed) {
  return [=](const DyadicCube& q, const DyadicCube& p) {
    const std::uint64_t h = hash_cube(hash_cube(splitmix64(seed), q), p);
    const double u = 2.0 * static_cast<double>(h >> 11) * 0x1.0p-53 - 1.0;
    return cplx(c * u * ad_weight(grid, q, p, prof, variant));
  };
}

void MoleculeParams::validate() const {
  require(M > 0, "molecule decay M must be positive");
  require(delta > 0 && delta <= 1, "molecule delta must lie in (0, 1]");
}

namespace {

std::vector<std::array<int, 2>> multi_indices(int dim, int order) {
  std::vector<std::array<int, 2>> out;
  if (dim == 1) return {{order, 0}};
  for (int a = order; a >= 0; --a) out.push_back({a, order - a});
  return out;
}

// Wrapped offset (x - x_Q) / ℓ(Q) per axis.
Eigen::Vector2d scaled_offset(const TorusGrid& grid, Index k, const DyadicCube& q) {
  const Eigen::Vector2d x = grid.position(k), c = q.corner();
  const double l = q.side();
  return {grid.wrap(x[0] - c[0]) / l, grid.dim == 2 ? grid.wrap(x[1] - c[1]) / l : 0.0};
}

double row_abs(const Eigen::MatrixXcd& v, Index k) { return v.row(k).norm(); }

// Largest relative moment |Σ y^γ m| / Σ |y^γ m| over |γ| <= order and channels.
double relative_moment(const SampledField& g, const DyadicCube& q, int order) {
  const auto& grid = g.grid;
  double worst = 0;
  for (int o = 0; o <= order; ++o) {
    for (const auto& gamma : multi_indices(grid.dim, o)) {
      for (int ch = 0; ch < g.channels(); ++ch) {
        cplx num = 0;
        double den = 0;
        for (Index k = 0; k < grid.size(); ++k) {
          const Eigen::Vector2d y = scaled_offset(grid, k, q);
          const double mono = std::pow(y[0], gamma[0]) * (grid.dim == 2 ? std::pow(y[1], gamma[1]) : 1.0);
          num += mono * g.values(k, ch);
          den += std::abs(mono * g.values(k, ch));
        }
        if (den > 0) worst = std::max(worst, std::abs(num) / den);
      }
    }
  }
  return worst;
}

}  // namespace

MoleculeReport molecule_check(const MoleculeFamily& family, const std::vector<DyadicCube>& cubes,
                              const MoleculeParams& params, double eps, int max_pair_points) {
  params.validate();
  require(eps > 0, "molecule epsilon must be positive");
  MoleculeReport rep;
  rep.m1_void = params.N < 0;
  rep.smooth_void = params.K < 0;
  for (const auto& q : cubes) {
    const SampledField m = family(q);
    const auto& grid = m.grid;
    const double n = grid.dim, l = q.side();
    ++rep.cubes;
    if (!rep.m1_void) rep.m1 = std::max(rep.m1, relative_moment(m, q, params.N));
    auto envelope = [&](Index k, double power) { return std::pow(1.0 + scaled_offset(grid, k, q).norm(), power); };
    const double m2_pow = std::max(params.M, params.N + 1 + n + eps);
    for (Index k = 0; k < grid.size(); ++k)
      rep.m2 = std::max(rep.m2, row_abs(m.values, k) * std::pow(l, n / 2) * envelope(k, m2_pow));
    if (rep.smooth_void) continue;
    for (int o = 0; o <= params.K; ++o) {
      for (const auto& gamma : multi_indices(grid.dim, o)) {
        const SampledField dm = o == 0 ? m : partial_derivative(m, gamma);
        const double norm = std::pow(l, n / 2 + o);
        for (Index k = 0; k < grid.size(); ++k)
          rep.m3 = std::max(rep.m3, row_abs(dm.values, k) * norm * envelope(k, params.M));
        if (o != params.K) continue;
        // Pairs (x, x + 2^e h e_axis), with x on an evenly strided subset.
        const Index stride = std::max<Index>(1, grid.size() / std::max(1, max_pair_points));
        const Index npa = grid.points_per_axis();
        const double h = grid.spacing();
        const double lip = std::pow(l, n / 2 + o + params.delta);
        for (Index k = 0; k < grid.size(); k += stride) {
          const auto ck = grid.coords(k);
          const double rx = scaled_offset(grid, k, q).norm() * l;
          for (int ax = 0; ax < grid.dim; ++ax) {
            for (Index step = 1; step < npa / 2; step *= 2) {
              const Index j = ax == 0 ? grid.flat(ck[0] + step, ck[1]) : grid.flat(ck[0], ck[1] + step);
              const double dist = static_cast<double>(step) * h;
              const double diff = (dm.values.row(k) - dm.values.row(j)).norm();
              const double bound = std::pow(dist, params.delta) * std::pow(1.0 + std::max(0.0, rx - dist) / l, -params.M);
              rep.m4 = std::max(rep.m4, diff * lip / bound);
            }
          }
        }
      }
    }
  }
  return rep;
}

}  // namespace bmtl
