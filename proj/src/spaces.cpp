#include "bmtl/spaces.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

namespace bmtl {

void validate_morrey(double p, double t, double r) {
  require(p > 0, "Morrey exponent p must be positive");
  if (std::isinf(r)) {
    require(p <= t, "Morrey exponents need p <= t when r = inf");
    return;
  }
  require(p < t && t < r, "Morrey exponents need p < t < r when r is finite (p = t gives a trivial space)");
}

void SpaceParams::validate() const {
  validate_morrey(p, t, r);
  require(q > 0, "q must be positive");
}

Pointwise pointwise(const MatrixWeight& w, double p) {
  require(p > 0, "p must be positive");
  return {w.power(1.0 / p), p};
}

int weighting_order(const Weighting& w) {
  return std::visit([](const auto& x) { return x.order(); }, w);
}

void LqAccumulator::add(const Eigen::VectorXd& v, double scale) {
  if (std::isinf(q_))
    acc_ = acc_.cwiseMax(scale * v);
  else
    acc_ += (scale * v).array().pow(q_).matrix();
}

Eigen::VectorXd LqAccumulator::result() const {
  if (std::isinf(q_)) return acc_;
  return acc_.array().pow(1.0 / q_).matrix();
}

CubeRange outer_range(const TorusGrid& grid, const CubeRange& range) { return {-grid.side_log2, range.last(), false}; }

double bm_norm(const Eigen::VectorXd& g, const TorusGrid& grid, double p, double t, double r, const CubeRange& range) {
  validate_morrey(p, t, r);
  validate(range, grid, 0);
  require(g.size() == grid.size(), "bm_norm input size does not match grid");
  require(g.minCoeff() >= 0, "bm_norm expects a nonnegative field");
  const Eigen::VectorXd gp = g.array().pow(p).matrix();
  const double h = grid.cell_volume();
  double acc = 0.0;
  for (int j = range.first(); j <= range.last(); ++j) {
    const auto ids = point_cube_ids(grid, j);
    std::vector<double> sums(static_cast<std::size_t>(cube_count(grid, j)), 0.0);
    for (Index k = 0; k < grid.size(); ++k) sums[static_cast<std::size_t>(ids[static_cast<std::size_t>(k)])] += gp[k];
    const double measure = std::ldexp(1.0, -j * grid.dim);
    const double scale = std::pow(measure, 1.0 / t - 1.0 / p);
    for (double s : sums) {
      const double term = scale * std::pow(s * h, 1.0 / p);
      if (std::isinf(r))
        acc = std::max(acc, term);
      else
        acc += std::pow(term, r);
    }
  }
  return std::isinf(r) ? acc : std::pow(acc, 1.0 / r);
}

double bm_norm(const SampledField& g, double p, double t, double r, const CubeRange& range) {
  require(g.channels() == 1, "bm_norm expects a scalar field");
  return bm_norm(g.values.col(0).real().eval(), g.grid, p, t, r, range);
}

double bm_seq_norm(const std::vector<Eigen::VectorXd>& gk, const TorusGrid& grid, double p, double t, double r, double q,
                   const CubeRange& range) {
  validate_morrey(p, t, r);
  if (gk.empty()) return 0.0;
  LqAccumulator acc(grid.size(), q);
  for (const auto& g : gk) acc.add(g);
  return bm_norm(acc.result(), grid, p, t, r, range);
}

namespace {

// max over windows [x - len + 1, x] of v, cyclic.
Eigen::VectorXd cyclic_window_max(const Eigen::VectorXd& v, Index len) {
  const Index n = v.size();
  Eigen::VectorXd out(n);
  if (len >= n) {
    out.setConstant(v.maxCoeff());
    return out;
  }
  std::deque<Index> dq;
  auto at = [&](Index a) { return v[((a % n) + n) % n]; };
  for (Index a = -len + 1; a < n; ++a) {
    while (!dq.empty() && at(dq.back()) <= at(a)) dq.pop_back();
    dq.push_back(a);
    while (dq.front() <= a - len) dq.pop_front();
    if (a >= 0) out[a] = at(dq.front());
  }
  return out;
}

// For each left end a, the best average over right ends b >= x is a suffix max.
Eigen::VectorXd maximal_1d(const Eigen::VectorXd& g) {
  const Index n = g.size();
  Eigen::VectorXd prefix(2 * n + 1);
  prefix[0] = 0.0;
  for (Index i = 0; i < 2 * n; ++i) prefix[i + 1] = prefix[i] + g[i % n];
  const Eigen::ArrayXd inv_len = Eigen::ArrayXd::LinSpaced(n, 1.0, static_cast<double>(n)).inverse();
  Eigen::VectorXd best = g;
  Eigen::ArrayXd run(n);
  for (Index a = 0; a < n; ++a) {
    run = (prefix.segment(a + 1, n).array() - prefix[a]) * inv_len;
    for (Index k = n - 2; k >= 0; --k) run[k] = std::max(run[k], run[k + 1]);
    const Index head = n - a;
    best.segment(a, head) = best.segment(a, head).cwiseMax(run.head(head).matrix());
    best.head(a) = best.head(a).cwiseMax(run.tail(a).matrix());
  }
  return best;
}

// Cyclic centred sliding max of half-width w along the fast axis of each row.
Eigen::VectorXd row_max(const Eigen::VectorXd& v, Index n, Index w) {
  Eigen::VectorXd out(v.size());
  Eigen::VectorXd row(n);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < n; ++c) row[c] = v[r * n + ((c + w) % n)];
    const Eigen::VectorXd m = cyclic_window_max(row, 2 * w + 1);
    for (Index c = 0; c < n; ++c) out[r * n + c] = m[c];
  }
  return out;
}

Eigen::VectorXd maximal_2d(const Eigen::VectorXd& g, const TorusGrid& grid) {
  const Index n = grid.points_per_axis();
  Eigen::MatrixXcd gs = g.cast<cplx>();
  fft_columns(grid, gs, false);
  Eigen::VectorXd best = g;
  auto wrapped = [n](Index d) { return std::min(d, n - d); };
  for (Index k = 1; k <= n / 2; ++k) {
    Eigen::MatrixXcd ker = Eigen::MatrixXcd::Zero(grid.size(), 1);
    double count = 0;
    for (Index a = 0; a < n; ++a)
      for (Index b = 0; b < n; ++b) {
        const Index da = wrapped(a), db = wrapped(b);
        if (da * da + db * db <= k * k) {
          ker(a * n + b, 0) = 1.0;
          count += 1;
        }
      }
    fft_columns(grid, ker, false);
    Eigen::MatrixXcd prod = gs.cwiseProduct(ker);
    fft_columns(grid, prod, true);
    const Eigen::VectorXd avg = prod.col(0).real() / (count * static_cast<double>(grid.size()));
    // Chords of the disk: rows d0 with half-width w(d0).
    std::map<Index, Eigen::VectorXd> rows;
    Eigen::VectorXd mk = Eigen::VectorXd::Zero(grid.size());
    for (Index d0 = -std::min(k, n / 2); d0 <= std::min(k, n / 2 - 1); ++d0) {
      Index w = static_cast<Index>(std::floor(std::sqrt(static_cast<double>(k * k - d0 * d0)) + 1e-12));
      w = std::min(w, n / 2);
      auto it = rows.find(w);
      if (it == rows.end()) it = rows.emplace(w, row_max(avg, n, w)).first;
      const Eigen::VectorXd& hm = it->second;
      for (Index a = 0; a < n; ++a) {
        const Index src = ((a + d0) % n + n) % n;
        for (Index b = 0; b < n; ++b) mk[a * n + b] = std::max(mk[a * n + b], hm[src * n + b]);
      }
    }
    best = best.cwiseMax(mk);
  }
  return best;
}

std::vector<cplx> point_major(const SampledField& f) {
  const int m = f.channels();
  std::vector<cplx> out(static_cast<std::size_t>(f.size() * m));
  for (Index k = 0; k < f.size(); ++k)
    for (int c = 0; c < m; ++c) out[static_cast<std::size_t>(k * m + c)] = f.values(k, c);
  return out;
}

void check_channels(const SampledField& f, const Weighting& w) {
  require(weighting_order(w) == f.channels(), "weighting order does not match field channels");
  if (const auto* pw = std::get_if<Pointwise>(&w)) require(pw->root.size() == f.grid.size(), "weight grid mismatch");
  if (const auto* cw = std::get_if<Cubewise>(&w)) require(cw->family.grid == f.grid, "reducing family grid mismatch");
}

void check_decomposition(const SpaceParams& sp, const Decomposition& dec) {
  const bool hom = std::holds_alternative<AdmissiblePair>(dec);
  require(hom == sp.homogeneous, "homogeneous spaces need an admissible pair, inhomogeneous ones a partition");
}

double level_scale(int j, double s) { return std::pow(2.0, j * s); }

Eigen::VectorXd operator_norms(const MatrixField& root) {
  Eigen::VectorXd out(root.size());
  for (Index k = 0; k < root.size(); ++k) out[k] = operator_norm(root[k]);
  return out;
}

// Cyclic convolution of each column of `data` with a real kernel given on the grid.
Eigen::MatrixXcd convolve(const TorusGrid& grid, Eigen::MatrixXcd data, const Eigen::VectorXd& kernel) {
  Eigen::MatrixXcd ker = kernel.cast<cplx>();
  fft_columns(grid, ker, false);
  fft_columns(grid, data, false);
  for (Index c = 0; c < data.cols(); ++c) data.col(c) = data.col(c).cwiseProduct(ker.col(0));
  fft_columns(grid, data, true);
  return data / static_cast<double>(grid.size());
}

// For q = 2: ∫ K(x-y) |M_x b(y)|² dy = Σ_{kl} (M_x²)_{kl} (K ∗ conj(b_k) b_l)(x).
Eigen::VectorXd quadratic_smoothing(const SampledField& band, const Pointwise& w, const Eigen::VectorXd& kernel) {
  const auto& grid = band.grid;
  const int m = band.channels();
  Eigen::MatrixXcd prods(grid.size(), m * m);
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l) prods.col(k * m + l) = band.values.col(k).conjugate().cwiseProduct(band.values.col(l));
  const Eigen::MatrixXcd sm = convolve(grid, prods, kernel);
  Eigen::VectorXd out(grid.size());
  for (Index x = 0; x < grid.size(); ++x) {
    Eigen::Map<const Eigen::MatrixXd> a(w.root.data(x), m, m);
    const Eigen::MatrixXd a2 = a * a;
    double acc = 0.0;
    for (int k = 0; k < m; ++k)
      for (int l = 0; l < m; ++l) acc += (a2(k, l) * sm(x, k * m + l)).real();
    out[x] = std::max(acc, 0.0) * grid.cell_volume();
  }
  return out;
}

Eigen::VectorXd offset_kernel(const TorusGrid& grid, const std::function<double(double)>& fn) {
  Eigen::VectorXd ker(grid.size());
  const Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  for (Index k = 0; k < grid.size(); ++k) ker[k] = fn(grid.distance(grid.position(k), origin));
  return ker;
}

NormReport aggregate_levels(const std::vector<Eigen::VectorXd>& mags, const std::vector<int>& levels, const TorusGrid& grid,
                            const SpaceParams& sp, const CubeRange& range, bool per_level) {
  LqAccumulator acc(grid.size(), sp.q);
  NormReport rep;
  const CubeRange outer = outer_range(grid, range);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const double sc = level_scale(levels[i], sp.s);
    acc.add(mags[i], sc);
    if (per_level) rep.per_level.emplace_back(levels[i], bm_norm(sc * mags[i], grid, sp.p, sp.t, sp.r, outer));
  }
  rep.value = bm_norm(acc.result(), grid, sp.p, sp.t, sp.r, outer);
  return rep;
}

}  // namespace

Eigen::VectorXd hl_maximal(const Eigen::VectorXd& g, const TorusGrid& grid, double eta) {
  require(eta > 0, "maximal function power must be positive");
  require(g.size() == grid.size(), "maximal function input size mismatch");
  require(g.minCoeff() >= 0, "maximal function expects a nonnegative field");
  const Eigen::VectorXd ge = g.array().pow(eta).matrix();
  const Eigen::VectorXd m = grid.dim == 1 ? maximal_1d(ge) : maximal_2d(ge, grid);
  return m.array().pow(1.0 / eta).matrix();
}

SampledField hl_maximal(const SampledField& g, double eta) {
  require(g.channels() == 1, "hl_maximal expects a scalar field");
  return SampledField::scalar(g.grid, hl_maximal(g.values.col(0).real().eval(), g.grid, eta));
}

Eigen::VectorXd weighted_magnitude(const SampledField& band, const Weighting& w, int j) {
  check_channels(band, w);
  const auto& grid = band.grid;
  const int m = band.channels();
  const auto pm = point_major(band);
  Eigen::VectorXd out(grid.size());
  if (const auto* pw = std::get_if<Pointwise>(&w)) {
    for (Index k = 0; k < grid.size(); ++k) out[k] = apply_norm(pw->root.data(k), &pm[static_cast<std::size_t>(k * m)], m);
    return out;
  }
  const auto& fam = std::get<Cubewise>(w).family;
  const MatrixField& lv = fam.level(j);
  const auto ids = point_cube_ids(grid, j);
  for (Index k = 0; k < grid.size(); ++k)
    out[k] = apply_norm(lv.data(ids[static_cast<std::size_t>(k)]), &pm[static_cast<std::size_t>(k * m)], m);
  return out;
}

std::vector<int> band_levels(const SpaceParams& sp, const CubeRange& range) {
  std::vector<int> out;
  const int lo = sp.homogeneous ? range.j_min : std::max(range.j_min, 0);
  for (int j = lo; j <= range.j_max; ++j) out.push_back(j);
  return out;
}

std::vector<SampledField> band_outputs(const SampledField& f, const Decomposition& dec, const std::vector<int>& levels) {
  const SpectralField F = to_spectral(f);
  std::vector<SampledField> out;
  out.reserve(levels.size());
  for (int j : levels) out.push_back(radial_filter(F, [&](double r) { return band_value(dec, j, r); }));
  return out;
}

NormReport tl_norm(const SampledField& f, const Weighting& w, const SpaceParams& sp, const Decomposition& dec,
                   const CubeRange& range, const NormOptions& opt) {
  sp.validate();
  validate(range, f.grid, 2);
  check_channels(f, w);
  check_decomposition(sp, dec);
  const auto levels = band_levels(sp, range);
  const auto bands = band_outputs(f, dec, levels);
  std::vector<Eigen::VectorXd> mags;
  for (std::size_t i = 0; i < levels.size(); ++i) mags.push_back(weighted_magnitude(bands[i], w, levels[i]));
  NormReport rep = aggregate_levels(mags, levels, f.grid, sp, range, opt.per_level);
  if (opt.truncation && rep.value > 0) {
    const CubeRange wide = range.widened(f.grid);
    bool covered = true;
    if (const auto* cw = std::get_if<Cubewise>(&w))
      covered = cw->family.covers(sp.homogeneous ? wide.j_min : 0) && cw->family.covers(wide.j_max);
    if (covered) rep.truncation = tl_norm(f, w, sp, dec, wide).value / rep.value;
  }
  return rep;
}

NormReport tl_norm_sup(const SampledField& f, const Cubewise& w, const SpaceParams& sp, const Decomposition& dec,
                       const CubeRange& range) {
  sp.validate();
  validate(range, f.grid, 2);
  check_decomposition(sp, dec);
  const auto levels = band_levels(sp, range);
  const auto bands = band_outputs(f, dec, levels);
  std::vector<Eigen::VectorXd> mags;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    Eigen::VectorXd mag = weighted_magnitude(bands[i], Weighting(w), levels[i]);
    const auto ids = point_cube_ids(f.grid, levels[i]);
    std::vector<double> sup(static_cast<std::size_t>(cube_count(f.grid, levels[i])), 0.0);
    for (Index k = 0; k < f.grid.size(); ++k) {
      auto& s = sup[static_cast<std::size_t>(ids[static_cast<std::size_t>(k)])];
      s = std::max(s, mag[k]);
    }
    for (Index k = 0; k < f.grid.size(); ++k) mag[k] = sup[static_cast<std::size_t>(ids[static_cast<std::size_t>(k)])];
    mags.push_back(std::move(mag));
  }
  return aggregate_levels(mags, levels, f.grid, sp, range, false);
}

NormReport seq_norm(const CoeffSequence& coeffs, const Weighting& w, const SpaceParams& sp, const CubeRange& range,
                    const SparseSupport* subsets) {
  sp.validate();
  const auto& grid = coeffs.grid;
  validate(range, grid, 0);
  const int m = coeffs.channels;
  require(weighting_order(w) == m, "weighting order does not match coefficient channels");
  const auto* pw = std::get_if<Pointwise>(&w);
  const auto* cw = std::get_if<Cubewise>(&w);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(grid.size());
  const bool sup = std::isinf(sp.q);
  auto deposit = [&](Index x, double v) {
    if (sup)
      acc[x] = std::max(acc[x], v);
    else
      acc[x] += std::pow(v, sp.q);
  };
  for (const auto& [q, v] : coeffs.entries) {
    if (q.level < range.first() || q.level > range.last())
      throw Error("coefficient at level " + std::to_string(q.level) + " outside the sequence range");
    const double scale = std::pow(2.0, q.level * (sp.s + 0.5 * grid.dim));
    std::vector<Index> own;
    const std::vector<Index>* pts = nullptr;
    if (subsets) {
      auto it = subsets->find(q);
      if (it == subsets->end()) continue;
      pts = &it->second;
    } else {
      own = cube_points(grid, q);
      pts = &own;
    }
    if (cw) {
      const double val = scale * apply_norm(cw->family.data(q), v.data(), m);
      for (Index x : *pts) deposit(x, val);
    } else {
      for (Index x : *pts) deposit(x, scale * apply_norm(pw->root.data(x), v.data(), m));
    }
  }
  if (!sup) acc = acc.array().pow(1.0 / sp.q).matrix();
  NormReport rep;
  rep.value = bm_norm(acc, grid, sp.p, sp.t, sp.r, outer_range(grid, range));
  return rep;
}

SortedOffsets sorted_offsets(const TorusGrid& grid) {
  const Index n = grid.points_per_axis();
  const double h = grid.spacing();
  std::vector<std::pair<double, std::array<Index, 2>>> all;
  if (grid.dim == 1) {
    for (Index d = -n / 2; d < n / 2; ++d) all.push_back({h * static_cast<double>(std::abs(d)), {d, 0}});
  } else {
    for (Index a = -n / 2; a < n / 2; ++a)
      for (Index b = -n / 2; b < n / 2; ++b)
        all.push_back({h * std::hypot(static_cast<double>(a), static_cast<double>(b)), {a, b}});
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  SortedOffsets out;
  for (const auto& [d, o] : all) {
    out.offsets.push_back(o);
    out.distance.push_back(d);
  }
  return out;
}

Eigen::VectorXd peetre_maximal(const SampledField& band, const Pointwise& w, int j, double a) {
  require(a > 0, "Peetre exponent must be positive");
  const auto& grid = band.grid;
  const int m = band.channels();
  require(w.order() == m && w.root.size() == grid.size(), "weight does not match band");
  const auto pm = point_major(band);
  const SortedOffsets so = sorted_offsets(grid);
  const std::size_t no = so.offsets.size();
  std::vector<double> decay(no);
  for (std::size_t i = 0; i < no; ++i) decay[i] = std::pow(1.0 + std::ldexp(so.distance[i], j), -a);
  Eigen::VectorXd bn(grid.size());
  for (Index k = 0; k < grid.size(); ++k) {
    double s = 0.0;
    for (int c = 0; c < m; ++c) s += std::norm(pm[static_cast<std::size_t>(k * m + c)]);
    bn[k] = std::sqrt(s);
  }
  const double bmax = bn.maxCoeff();
  const Eigen::VectorXd wn = operator_norms(w.root);
  Eigen::VectorXd out(grid.size());
  for (Index x = 0; x < grid.size(); ++x) {
    const double* wx = w.root.data(x);
    const auto cx = grid.coords(x);
    double best = apply_norm(wx, &pm[static_cast<std::size_t>(x * m)], m);
    for (std::size_t i = 1; i < no; ++i) {
      if (wn[x] * bmax * decay[i] <= best) break;
      const Index y = grid.flat(cx[0] + so.offsets[i][0], cx[1] + so.offsets[i][1]);
      if (wn[x] * bn[y] * decay[i] <= best) continue;
      best = std::max(best, apply_norm(wx, &pm[static_cast<std::size_t>(y * m)], m) * decay[i]);
    }
    out[x] = best;
  }
  return out;
}

NormReport peetre_norm(const SampledField& f, const Pointwise& w, const SpaceParams& sp, double a, const Decomposition& dec,
                       const CubeRange& range) {
  sp.validate();
  validate(range, f.grid, 2);
  check_channels(f, w);
  check_decomposition(sp, dec);
  const auto levels = band_levels(sp, range);
  const auto bands = band_outputs(f, dec, levels);
  std::vector<Eigen::VectorXd> mags;
  for (std::size_t i = 0; i < levels.size(); ++i) mags.push_back(peetre_maximal(bands[i], w, levels[i], a));
  return aggregate_levels(mags, levels, f.grid, sp, range, false);
}

namespace {

// 2^{jn} ∫ K_j(x-y) |W^{1/p}(x) b(y)|^q dy for a radial kernel K_j, with optional
// early exit once the remaining kernel mass cannot change the sum by more than tol.
Eigen::VectorXd smoothed_power(const SampledField& band, const Pointwise& w, int j, double q,
                               const std::function<double(double)>& kernel, double tol) {
  const auto& grid = band.grid;
  const double scale = std::ldexp(1.0, j * grid.dim);
  if (q == 2.0) return scale * quadratic_smoothing(band, w, offset_kernel(grid, kernel));
  const int m = band.channels();
  const auto pm = point_major(band);
  const SortedOffsets so = sorted_offsets(grid);
  const std::size_t no = so.offsets.size();
  std::vector<double> kv(no), tail(no + 1, 0.0);
  for (std::size_t i = 0; i < no; ++i) kv[i] = kernel(so.distance[i]) * grid.cell_volume();
  for (std::size_t i = no; i-- > 0;) tail[i] = tail[i + 1] + kv[i];
  double bmax = 0.0;
  for (Index k = 0; k < grid.size(); ++k) {
    double s = 0.0;
    for (int c = 0; c < m; ++c) s += std::norm(pm[static_cast<std::size_t>(k * m + c)]);
    bmax = std::max(bmax, std::sqrt(s));
  }
  const Eigen::VectorXd wn = operator_norms(w.root);
  Eigen::VectorXd out(grid.size());
  for (Index x = 0; x < grid.size(); ++x) {
    const double* wx = w.root.data(x);
    const auto cx = grid.coords(x);
    const double cap = std::pow(wn[x] * bmax, q);
    double acc = 0.0;
    for (std::size_t i = 0; i < no; ++i) {
      if (kv[i] == 0.0) break;
      if (tol > 0 && (i & 63) == 0 && cap * tail[i] <= tol * acc) break;
      const Index y = grid.flat(cx[0] + so.offsets[i][0], cx[1] + so.offsets[i][1]);
      acc += std::pow(apply_norm(wx, &pm[static_cast<std::size_t>(y * m)], m), q) * kv[i];
    }
    out[x] = scale * acc;
  }
  return out;
}

NormReport integral_norm(const SampledField& f, const Pointwise& w, const SpaceParams& sp, const Decomposition& dec,
                         const CubeRange& range, const std::function<double(int, double)>& kernel, double tol,
                         bool ball) {
  sp.validate();
  require(std::isfinite(sp.q), "area-integral norms need q < inf");
  validate(range, f.grid, 2);
  check_channels(f, w);
  check_decomposition(sp, dec);
  const auto levels = band_levels(sp, range);
  const auto bands = band_outputs(f, dec, levels);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(f.grid.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const int j = levels[i];
    if (ball && std::ldexp(1.0, -j) < f.grid.spacing())
      throw Error("ball radius 2^-" + std::to_string(j) + " is below the grid spacing");
    acc += std::pow(2.0, j * sp.s * sp.q) *
           smoothed_power(bands[i], w, j, sp.q, [&](double d) { return kernel(j, d); }, tol);
  }
  NormReport rep;
  rep.value = bm_norm(acc.array().pow(1.0 / sp.q).matrix(), f.grid, sp.p, sp.t, sp.r, outer_range(f.grid, range));
  return rep;
}

}  // namespace

NormReport lusin_norm(const SampledField& f, const Pointwise& w, const SpaceParams& sp, const Decomposition& dec,
                      const CubeRange& range) {
  auto ball = [](int j, double d) { return d <= std::ldexp(1.0, -j) * (1 + 1e-12) ? 1.0 : 0.0; };
  return integral_norm(f, w, sp, dec, range, ball, 0.0, true);
}

NormReport glambda_norm(const SampledField& f, const Pointwise& w, const SpaceParams& sp, double lambda,
                        const Decomposition& dec, const CubeRange& range, double delta_cap) {
  const int n = f.grid.dim;
  if (lambda <= 1.0 / min_exponent(sp.p, sp.q) + delta_cap / n)
    warn("g_lambda: lambda = " + std::to_string(lambda) + " is below the characterization threshold");
  const double e = lambda * n * sp.q;
  auto kernel = [e](int j, double d) { return std::pow(1.0 + std::ldexp(d, j), -e); };
  return integral_norm(f, w, sp, dec, range, kernel, 1e-12, false);
}

NormReport approx_norm(const SampledField& f, const Pointwise& w, const SpaceParams& sp, const CubeRange& range,
                       double delta_cap) {
  sp.validate();
  require(!sp.homogeneous, "approximation norm is defined for inhomogeneous spaces");
  validate(range, f.grid, 2);
  check_channels(f, w);
  const int n = f.grid.dim;
  if (sp.s <= n / min_exponent(sp.p, sp.q) + delta_cap)
    warn("approx_norm: s = " + std::to_string(sp.s) + " is below the characterization threshold");
  const InhomPartition part;
  const SpectralField F = to_spectral(f);
  const CubeRange outer = outer_range(f.grid, range);
  const Weighting wt = w;
  const SampledField u0 = radial_filter(F, [&](double r) { return part.phi0(r); });
  const double first = bm_norm(weighted_magnitude(u0, wt, 0), f.grid, sp.p, sp.t, sp.r, outer);
  LqAccumulator acc(f.grid.size(), sp.q);
  for (int k = 0; k <= range.j_max; ++k) {
    const SampledField rest = radial_filter(F, [&](double r) { return 1.0 - part.phi0(std::ldexp(r, -k)); });
    acc.add(weighted_magnitude(rest, wt, k), level_scale(k, sp.s));
  }
  NormReport rep;
  rep.value = first + bm_norm(acc.result(), f.grid, sp.p, sp.t, sp.r, outer);
  return rep;
}

SampledField averaging(const SampledField& g, int j) {
  const auto& grid = g.grid;
  check_level(grid, j);
  const auto ids = point_cube_ids(grid, j);
  const Index count = cube_count(grid, j);
  Eigen::MatrixXcd sums = Eigen::MatrixXcd::Zero(count, g.channels());
  Eigen::VectorXd npts = Eigen::VectorXd::Zero(count);
  for (Index k = 0; k < grid.size(); ++k) {
    sums.row(ids[static_cast<std::size_t>(k)]) += g.values.row(k);
    npts[ids[static_cast<std::size_t>(k)]] += 1;
  }
  SampledField out(grid, g.channels());
  for (Index k = 0; k < grid.size(); ++k)
    out.values.row(k) = sums.row(ids[static_cast<std::size_t>(k)]) / npts[ids[static_cast<std::size_t>(k)]];
  return out;
}

Eigen::VectorXd gamma_level(const Pointwise& w, const ReducingFamily& family, int j) {
  const auto& grid = family.grid;
  const int m = w.order();
  const MatrixField& lv = family.level(j);
  std::vector<Eigen::MatrixXd> inv;
  inv.reserve(static_cast<std::size_t>(lv.size()));
  for (Index c = 0; c < lv.size(); ++c) inv.push_back(Eigen::MatrixXd(lv[c]).inverse());
  const auto ids = point_cube_ids(grid, j);
  Eigen::VectorXd out(grid.size());
  for (Index k = 0; k < grid.size(); ++k)
    out[k] = product_norm(w.root.data(k), inv[static_cast<std::size_t>(ids[static_cast<std::size_t>(k)])].data(), m);
  return out;
}

}  // namespace bmtl
