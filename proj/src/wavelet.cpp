#include "bmtl/coeff.hpp"
#include "bmtl/wavelet_filters.hpp"

namespace bmtl {

namespace {

struct FilterPair {
  std::vector<double> lo, hi;
};

FilterPair filters(int order) {
  const auto h = daubechies_lowpass(order);
  FilterPair f{{h.begin(), h.end()}, std::vector<double>(h.size())};
  const std::size_t len = h.size();
  for (std::size_t k = 0; k < len; ++k) f.hi[k] = (k % 2 == 0 ? 1.0 : -1.0) * h[len - 1 - k];
  return f;
}

// c_k = Σ h_n a_{2k+n}, d_k = Σ g_n a_{2k+n} with periodic indexing.
void analyze_line(const FilterPair& f, const cplx* a, Index n, Index stride, cplx* c, cplx* d, Index out_stride) {
  const Index half = n / 2;
  const std::size_t len = f.lo.size();
  for (Index k = 0; k < half; ++k) {
    cplx lo = 0, hi = 0;
    for (std::size_t t = 0; t < len; ++t) {
      const cplx x = a[((2 * k + static_cast<Index>(t)) % n) * stride];
      lo += f.lo[t] * x;
      hi += f.hi[t] * x;
    }
    c[k * out_stride] = lo;
    d[k * out_stride] = hi;
  }
}

// Adjoint of analyze_line.
void synthesize_line(const FilterPair& f, const cplx* c, const cplx* d, Index half, Index in_stride, cplx* a,
                     Index stride) {
  const Index n = 2 * half;
  const std::size_t len = f.lo.size();
  for (Index i = 0; i < n; ++i) a[i * stride] = 0;
  for (Index k = 0; k < half; ++k) {
    const cplx lo = c[k * in_stride], hi = d[k * in_stride];
    for (std::size_t t = 0; t < len; ++t) a[((2 * k + static_cast<Index>(t)) % n) * stride] += f.lo[t] * lo + f.hi[t] * hi;
  }
}

void check_depth(const TorusGrid& grid, int db_order, int coarsest) {
  require(db_order >= 2 && db_order <= 10, "daubechies order must lie in [2, 10]");
  require(coarsest >= -grid.side_log2, "wavelet depth exceeds the grid");
  require(coarsest <= grid.res_log2 - 1, "coarsest wavelet level must lie below J");
}

// One channel as a dense n×n (or n×1) block, first axis along rows.
using Block = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Block to_block(const SampledField& f, int ch) {
  const Index n = f.grid.points_per_axis();
  Block b(n, f.grid.dim == 2 ? n : 1);
  for (Index k = 0; k < f.grid.size(); ++k) b.data()[k] = f.values(k, ch);
  return b;
}

void store_level(CoeffSequence& seq, int level, int ch, const Block& b) {
  const int dim = seq.grid.dim;
  for (Index i0 = 0; i0 < b.rows(); ++i0) {
    for (Index i1 = 0; i1 < b.cols(); ++i1) {
      const cplx v = b(i0, i1);
      if (v == cplx(0)) continue;
      DyadicCube q{level, {i0, dim == 2 ? i1 : 0}, dim};
      auto [it, inserted] = seq.entries.try_emplace(q, Eigen::VectorXcd::Zero(seq.channels));
      it->second[ch] = v;
    }
  }
}

Block load_level(const CoeffSequence& seq, int level, int ch, Index rows, Index cols) {
  Block b = Block::Zero(rows, cols);
  const Index c = cubes_per_axis(seq.grid, level);
  for (auto it = seq.entries.lower_bound(DyadicCube{level, {std::numeric_limits<Index>::min(), 0}, seq.grid.dim});
       it != seq.entries.end() && it->first.level == level; ++it) {
    const auto& q = it->first;
    const Index i0 = ((q.index[0] % c) + c) % c, i1 = cols == 1 ? 0 : ((q.index[1] % c) + c) % c;
    b(i0, i1) += it->second[ch];
  }
  return b;
}

}  // namespace

double WaveletCoeffs::l2() const {
  double s = 0;
  for (const auto& g : generators) s += std::pow(g.l2(), 2);
  return std::sqrt(s);
}

WaveletCoeffs empty_wavelet_coeffs(const TorusGrid& grid, int channels, int db_order, int coarsest) {
  check_depth(grid, db_order, coarsest);
  WaveletCoeffs w{grid, channels, db_order, coarsest, {}};
  w.generators.assign(grid.dim == 1 ? 2 : 4, CoeffSequence(grid, channels));
  return w;
}

WaveletCoeffs wavelet_analyze(const SampledField& f, int db_order, int coarsest) {
  const auto& grid = f.grid;
  WaveletCoeffs w = empty_wavelet_coeffs(grid, f.channels(), db_order, coarsest);
  const FilterPair fp = filters(db_order);
  const double norm = std::sqrt(grid.cell_volume());
  for (int ch = 0; ch < f.channels(); ++ch) {
    Block a = to_block(f, ch) * norm;
    for (int v = grid.res_log2 - 1; v >= coarsest; --v) {
      const Index n = a.rows(), half = n / 2;
      if (grid.dim == 1) {
        Block c(half, 1), d(half, 1);
        analyze_line(fp, a.data(), n, 1, c.data(), d.data(), 1);
        store_level(w.generators[1], v, ch, d);
        a = std::move(c);
        continue;
      }
      // Second axis first, then the first axis of each half.
      Block lo1(n, half), hi1(n, half);
      for (Index r = 0; r < n; ++r) analyze_line(fp, &a(r, 0), n, 1, &lo1(r, 0), &hi1(r, 0), 1);
      Block ll(half, half), hl(half, half), lh(half, half), hh(half, half);
      for (Index col = 0; col < half; ++col) {
        analyze_line(fp, &lo1(0, col), n, half, &ll(0, col), &hl(0, col), half);
        analyze_line(fp, &hi1(0, col), n, half, &lh(0, col), &hh(0, col), half);
      }
      store_level(w.generators[1], v, ch, lh);
      store_level(w.generators[2], v, ch, hl);
      store_level(w.generators[3], v, ch, hh);
      a = std::move(ll);
    }
    store_level(w.generators[0], coarsest, ch, a);
  }
  return w;
}

WaveletCoeffs wavelet_analyze(const SampledField& f, int db_order, const CubeRange& range) {
  return wavelet_analyze(f, db_order, range.first());
}

SampledField wavelet_synthesize(const WaveletCoeffs& w) {
  const auto& grid = w.grid;
  check_depth(grid, w.db_order, w.coarsest);
  require(w.generator_count() == (grid.dim == 1 ? 2 : 4), "wrong number of wavelet generators");
  for (int i = 0; i < w.generator_count(); ++i) {
    const auto& g = w.generators[static_cast<std::size_t>(i)];
    require(g.channels == w.channels, "wavelet generator channel mismatch");
    if (g.empty()) continue;
    const int lo = w.coarsest, hi = i == 0 ? w.coarsest : grid.res_log2 - 1;
    if (g.min_level() < lo || g.max_level() > hi)
      throw Error("wavelet coefficient level outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  const FilterPair fp = filters(w.db_order);
  SampledField out(grid, w.channels);
  const double norm = 1.0 / std::sqrt(grid.cell_volume());
  for (int ch = 0; ch < w.channels; ++ch) {
    Index n = cubes_per_axis(grid, w.coarsest);
    Block a = load_level(w.generators[0], w.coarsest, ch, n, grid.dim == 2 ? n : 1);
    for (int v = w.coarsest; v <= grid.res_log2 - 1; ++v) {
      const Index half = n;
      n = 2 * half;
      if (grid.dim == 1) {
        const Block d = load_level(w.generators[1], v, ch, half, 1);
        Block next(n, 1);
        synthesize_line(fp, a.data(), d.data(), half, 1, next.data(), 1);
        a = std::move(next);
        continue;
      }
      const Block lh = load_level(w.generators[1], v, ch, half, half);
      const Block hl = load_level(w.generators[2], v, ch, half, half);
      const Block hh = load_level(w.generators[3], v, ch, half, half);
      Block lo1(n, half), hi1(n, half);
      for (Index col = 0; col < half; ++col) {
        synthesize_line(fp, &a(0, col), &hl(0, col), half, half, &lo1(0, col), half);
        synthesize_line(fp, &lh(0, col), &hh(0, col), half, half, &hi1(0, col), half);
      }
      Block next(n, n);
      for (Index r = 0; r < n; ++r) synthesize_line(fp, &lo1(r, 0), &hi1(r, 0), half, 1, &next(r, 0), 1);
      a = std::move(next);
    }
    for (Index k = 0; k < grid.size(); ++k) out.values(k, ch) = a.data()[k] * norm;
  }
  return out;
}

SampledField wavelet_basis_function(const TorusGrid& grid, int db_order, int coarsest, int generator,
                                    const DyadicCube& q) {
  WaveletCoeffs w = empty_wavelet_coeffs(grid, 1, db_order, coarsest);
  require(generator >= 0 && generator < w.generator_count(), "wavelet generator out of range");
  require(generator > 0 || q.level == coarsest, "scaling functions live on the coarsest level");
  w.generators[static_cast<std::size_t>(generator)].set(q, Eigen::VectorXcd::Ones(1));
  return wavelet_synthesize(w);
}

void AtomParams::validate() const {
  require(b > 0, "atom support factor must be positive");
  require(L >= 0 && N >= 0, "atom orders must be nonnegative");
}

double atom_support_factor(int db_order) { return 4.0 * (2 * db_order - 1) - 1.0; }

AtomicDecomposition atom_rearrange(const WaveletCoeffs& w, double constant) {
  require(constant != 0, "atom constant must be nonzero");
  AtomicDecomposition dec{w.grid, w.channels, w.db_order, w.coarsest, constant, {}, CoeffSequence(w.grid, w.channels),
                          w.generators.empty() ? CoeffSequence(w.grid, w.channels) : w.generators[0]};
  for (int i = 1; i < w.generator_count(); ++i) {
    for (const auto& [q, t] : w.generators[static_cast<std::size_t>(i)].entries) {
      if (q.level + 1 > w.grid.res_log2) throw Error("atom child level exceeds the grid");
      const DyadicCube child = q.children()[static_cast<std::size_t>(i - 1)];
      dec.atoms.push_back({i, q, child});
      dec.coeffs.set(child, t / constant);
    }
  }
  return dec;
}

SampledField atom_field(const AtomicDecomposition& dec, const AtomRef& atom) {
  SampledField f = wavelet_basis_function(dec.grid, dec.db_order, dec.coarsest, atom.generator, atom.source);
  f.values *= dec.constant;
  return f;
}

SampledField atom_synthesize(const AtomicDecomposition& dec) {
  WaveletCoeffs rest = empty_wavelet_coeffs(dec.grid, dec.channels, dec.db_order, dec.coarsest);
  rest.generators[0] = dec.scaling;
  SampledField out = wavelet_synthesize(rest);
  for (const auto& atom : dec.atoms) {
    const SampledField a = atom_field(dec, atom);
    out.values += a.values.col(0) * dec.coeffs.get(atom.cube).transpose();
  }
  return out;
}

AtomMeasurement measure_atoms(const AtomicDecomposition& dec, int max_derivative, double moment_tol,
                              std::size_t max_atoms) {
  require(max_derivative >= 0, "derivative order must be nonnegative");
  AtomMeasurement out;
  out.derivative_constants.assign(static_cast<std::size_t>(max_derivative + 1), 0.0);
  const auto& grid = dec.grid;
  const double n = grid.dim;
  int moments = 2 * dec.db_order;
  const std::size_t stride = std::max<std::size_t>(1, dec.atoms.size() / std::max<std::size_t>(1, max_atoms));
  for (std::size_t idx = 0; idx < dec.atoms.size(); idx += stride) {
    const auto& atom = dec.atoms[idx];
    const SampledField a = atom_field(dec, atom);
    const double l = atom.cube.side();
    const Eigen::Vector2d c = atom.cube.center();
    const double peak = a.values.cwiseAbs().maxCoeff();
    for (Index k = 0; k < grid.size(); ++k) {
      if (std::abs(a.values(k, 0)) <= 1e-14 * peak) continue;
      const Eigen::Vector2d x = grid.position(k);
      double r = std::abs(grid.wrap(x[0] - c[0]));
      if (grid.dim == 2) r = std::max(r, std::abs(grid.wrap(x[1] - c[1])));
      out.support = std::max(out.support, 2 * r / l);
    }
    // Vanishing moments are measured about the source corner on atoms whose support does not wrap.
    const bool wraps = (2 * dec.db_order - 1) * atom.source.side() >= grid.side() / 2;
    int vanish = wraps ? moments - 1 : -1;
    for (int o = 0; o < moments && !wraps; ++o) {
      bool ok = true;
      for (int g0 = o; g0 >= 0 && ok; --g0) {
        const int g1 = o - g0;
        if (grid.dim == 1 && g1 != 0) continue;
        cplx num = 0;
        double den = 0;
        for (Index k = 0; k < grid.size(); ++k) {
          const Eigen::Vector2d x = grid.position(k), x0 = atom.source.corner();
          const double y0 = grid.wrap(x[0] - x0[0]) / l, y1 = grid.dim == 2 ? grid.wrap(x[1] - x0[1]) / l : 0.0;
          const double mono = std::pow(y0, g0) * std::pow(y1, g1);
          num += mono * a.values(k, 0);
          den += std::abs(mono * a.values(k, 0));
        }
        ok = den == 0 || std::abs(num) <= moment_tol * den;
      }
      if (!ok) break;
      vanish = o;
    }
    moments = std::min(moments, vanish + 1);
    for (int o = 0; o <= max_derivative; ++o) {
      for (int g0 = o; g0 >= 0; --g0) {
        const int g1 = o - g0;
        if (grid.dim == 1 && g1 != 0) continue;
        const SampledField da = o == 0 ? a : partial_derivative(a, {g0, g1});
        out.derivative_constants[static_cast<std::size_t>(o)] =
            std::max(out.derivative_constants[static_cast<std::size_t>(o)],
                     da.values.cwiseAbs().maxCoeff() * std::pow(l, o + n / 2));
      }
    }
    ++out.atoms_checked;
  }
  out.params.b = atom_support_factor(dec.db_order);
  out.params.L = std::max(0, moments - 1);
  out.params.N = max_derivative;
  return out;
}

}  // namespace bmtl
