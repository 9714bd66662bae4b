#include "bmtl/operators.hpp"

#include <fstream>
#include <numbers>

namespace bmtl {

SymbolGrid::SymbolGrid(const TorusGrid& g) : grid(g) {
  require(grid.size() <= kMaxSymbolPoints, "symbol grid too large for a dense table");
  values = Eigen::MatrixXcd::Zero(g.size(), g.size());
}

SymbolGrid::SymbolGrid(const TorusGrid& g, Eigen::MatrixXcd v) : grid(g), values(std::move(v)) {
  require(values.rows() == grid.size() && values.cols() == grid.size(), "symbol table must be N_x by N_xi");
  require(grid.size() <= kMaxSymbolPoints, "symbol grid too large for a dense table");
  check_finite(values, "symbol");
}

void save_symbol(const std::string& path, const SymbolGrid& s) {
  SampledField flat;
  flat.grid = s.grid;
  flat.values = Eigen::MatrixXcd(s.grid.size() * s.grid.size(), 1);
  for (Index x = 0; x < s.grid.size(); ++x)
    for (Index c = 0; c < s.grid.size(); ++c) flat.values(x * s.grid.size() + c, 0) = s.values(x, c);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_field(os, flat, true, "symbol");
}

SymbolGrid load_symbol(const std::string& path) {
  FieldHeader h;
  const SampledField flat = load_field(path, &h);
  require(h.kind == "symbol", path + " is not a symbol file");
  require(flat.channels() == 1, "symbol files hold one channel");
  const Index n = h.grid.size();
  Eigen::MatrixXcd v(n, n);
  for (Index x = 0; x < n; ++x)
    for (Index c = 0; c < n; ++c) v(x, c) = flat.values(x * n + c, 0);
  return SymbolGrid(h.grid, std::move(v));
}

void SymbolClassParams::validate() const {
  require(rho == 1, "only rho = 1 symbol classes are implemented");
  require(delta >= 0 && delta <= 1, "symbol delta must lie in [0, 1]");
  require(ell > 0, "Hölder-Zygmund smoothness must be positive");
  require(N >= 0 && N % 2 == 0 && b >= 0 && b % 2 == 0, "seminorm depths N and b must be even and nonnegative");
}

SampledField hilbert_riesz_apply(const SampledField& f, int component) {
  const auto& grid = f.grid;
  require(component >= 1 && component <= grid.dim, "Riesz component must be 1 or 2 (1 in 1D)");
  const int ax = component - 1;
  const Index nyq = grid.points_per_axis() / 2;
  SpectralField F = to_spectral(f);
  for (Index k = 0; k < grid.size(); ++k) {
    const Eigen::Vector2d xi = grid.frequency(k);
    const double r = xi.norm();
    if (r == 0 || grid.coords(k)[static_cast<std::size_t>(ax)] == nyq) {
      F.coeffs.row(k).setZero();
      continue;
    }
    F.coeffs.row(k) *= cplx(0, -xi[ax] / r);
  }
  return from_spectral(F);
}

namespace {

Eigen::Vector2d wrapped(const TorusGrid& grid, Index k) {
  const Eigen::Vector2d x = grid.position(k);
  return {grid.wrap(x[0]), grid.dim == 2 ? grid.wrap(x[1]) : 0.0};
}

std::vector<std::array<int, 2>> orders_of(int dim, int total) {
  if (dim == 1) return {{total, 0}};
  std::vector<std::array<int, 2>> out;
  for (int a = total; a >= 0; --a) out.push_back({a, total - a});
  return out;
}

}  // namespace

CZKernelReport cz_kernel_check(const SampledField& kernel, int L) {
  require(L >= 0, "kernel smoothness order must be nonnegative");
  const auto& grid = kernel.grid;
  const double n = grid.dim, h = grid.spacing(), side = grid.side();
  SampledField k0 = kernel;
  k0.values.row(0).setZero();
  CZKernelReport rep;
  rep.k2.assign(static_cast<std::size_t>(L), 0.0);
  for (Index k = 1; k < grid.size(); ++k) rep.k1 = std::max(rep.k1, std::pow(wrapped(grid, k).norm(), n) * k0.values.row(k).norm());
  // Derivatives of the kernel tapered smoothly to 8h <= |x| <= 3 side / 8, read on 32h <= |x| <= side / 4,
  // far enough from the inner taper for the spectral derivative to settle.
  SampledField tapered = k0;
  for (Index k = 1; k < grid.size(); ++k) {
    const double r = wrapped(grid, k).norm();
    tapered.values.row(k) *= smooth_step((r - 8 * h) / (8 * h)) * smooth_step((3 * side / 8 - r) / (side / 8));
  }
  for (int o = 1; o <= L; ++o) {
    for (const auto& gamma : orders_of(grid.dim, o)) {
      const SampledField d = partial_derivative(tapered, gamma);
      for (Index k = 1; k < grid.size(); ++k) {
        const double r = wrapped(grid, k).norm();
        if (r < 32 * h || r > side / 4) continue;
        auto& slot = rep.k2[static_cast<std::size_t>(o - 1)];
        slot = std::max(slot, std::pow(r, n + o) * d.values.row(k).norm());
      }
    }
  }
  for (double r1 = h; 2 * r1 < side / 2; r1 *= 2) {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(kernel.channels());
    for (Index k = 1; k < grid.size(); ++k) {
      const double r = wrapped(grid, k).norm();
      if (r >= r1 && r < 2 * r1) acc += k0.values.row(k).transpose();
    }
    rep.k3 = std::max(rep.k3, acc.norm() * grid.cell_volume());
  }
  return rep;
}

std::vector<SampledField> multiplier_apply(const std::vector<SpectralProfile>& m, const std::vector<SampledField>& f,
                                           int first_level) {
  require(m.size() == f.size(), "multiplier and field lists differ in length");
  std::vector<SampledField> out;
  out.reserve(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const int k = first_level + static_cast<int>(i);
    const SpectralField F = to_spectral(f[i]);
    const double cut = std::ldexp(1.0, k + 1);
    double outside = 0, total = 0;
    for (Index j = 0; j < F.grid.size(); ++j) {
      const double e = F.coeffs.row(j).squaredNorm();
      total += e;
      if (F.grid.frequency(j).norm() > cut) outside += e;
    }
    if (outside > 1e-20 * total)
      warn("multiplier input " + std::to_string(i) + " has spectrum beyond 2^" + std::to_string(k + 1));
    out.push_back(apply_multiplier(F, m[i]));
  }
  return out;
}

namespace {

// Signed lattice index per axis of an FFT-ordered coordinate.
Index signed_index(Index c, Index n) { return c < n / 2 ? c : c - n; }

// Centered difference along a ξ-axis; columns whose stencil crosses the lattice edge become invalid.
void xi_difference(const TorusGrid& grid, Eigen::MatrixXcd& v, std::vector<char>& valid, int ax) {
  const Index n = grid.points_per_axis();
  const double inv = grid.side() / 2;
  Eigen::MatrixXcd out(v.rows(), v.cols());
  std::vector<char> ok(valid.size(), 0);
  for (Index c = 0; c < grid.size(); ++c) {
    auto co = grid.coords(c);
    const Index s = signed_index(co[static_cast<std::size_t>(ax)], n);
    if (s + 1 > n / 2 - 1 || s - 1 < -n / 2) {
      out.col(c).setZero();
      continue;
    }
    auto up = co, down = co;
    up[static_cast<std::size_t>(ax)] = (co[static_cast<std::size_t>(ax)] + 1) % n;
    down[static_cast<std::size_t>(ax)] = (co[static_cast<std::size_t>(ax)] + n - 1) % n;
    const Index cu = grid.flat(up[0], up[1]), cd = grid.flat(down[0], down[1]);
    out.col(c) = (v.col(cu) - v.col(cd)) * inv;
    ok[static_cast<std::size_t>(c)] = valid[static_cast<std::size_t>(cu)] && valid[static_cast<std::size_t>(cd)];
  }
  v = std::move(out);
  valid = std::move(ok);
}

// ∂_x^β of every ξ-column, spectrally in x.
Eigen::MatrixXcd x_derivative(const TorusGrid& grid, Eigen::MatrixXcd v, std::array<int, 2> beta) {
  if (beta[0] == 0 && beta[1] == 0) return v;
  fft_columns(grid, v, false);
  const Index n = grid.points_per_axis();
  const double two_pi = 2 * std::numbers::pi;
  for (Index k = 0; k < grid.size(); ++k) {
    const auto c = grid.coords(k);
    const Eigen::Vector2d zeta = grid.frequency(k);
    cplx factor = 1.0;
    for (int ax = 0; ax < grid.dim; ++ax) {
      if (beta[ax] == 0) continue;
      if (beta[ax] % 2 == 1 && c[ax] == n / 2) factor = 0.0;
      factor *= std::pow(cplx(0, two_pi * zeta[ax]), beta[ax]);
    }
    v.row(k) *= factor;
  }
  fft_columns(grid, v, true);
  return v / static_cast<double>(grid.size());
}

struct XiDerivative {
  std::array<int, 2> alpha;
  Eigen::MatrixXcd values;
  std::vector<char> valid;
};

std::vector<XiDerivative> xi_derivatives(const SymbolGrid& s, int alpha_max) {
  std::vector<XiDerivative> out;
  for (int o = 0; o <= alpha_max; ++o) {
    for (const auto& alpha : orders_of(s.grid.dim, o)) {
      XiDerivative d{alpha, s.values, std::vector<char>(static_cast<std::size_t>(s.grid.size()), 1)};
      for (int ax = 0; ax < s.grid.dim; ++ax)
        for (int t = 0; t < alpha[ax]; ++t) xi_difference(s.grid, d.values, d.valid, ax);
      out.push_back(std::move(d));
    }
  }
  return out;
}

}  // namespace

double hormander_seminorm(const SymbolGrid& s, const SymbolClassParams& params, int alpha_max, int beta_max) {
  params.validate();
  require(alpha_max >= 0 && beta_max >= 0, "derivative depths must be nonnegative");
  const auto& grid = s.grid;
  double best = 0;
  for (const auto& d : xi_derivatives(s, alpha_max)) {
    const int a = d.alpha[0] + d.alpha[1];
    for (int o = 0; o <= beta_max; ++o) {
      for (const auto& beta : orders_of(grid.dim, o)) {
        const Eigen::MatrixXcd v = x_derivative(grid, d.values, beta);
        for (Index c = 0; c < grid.size(); ++c) {
          if (!d.valid[static_cast<std::size_t>(c)]) continue;
          const double w = std::pow(1.0 + grid.frequency(c).norm(), -params.m + params.rho * a - params.delta * o);
          best = std::max(best, v.col(c).cwiseAbs().maxCoeff() * w);
        }
      }
    }
  }
  return best;
}

double czs_seminorm(const SymbolGrid& s, const SymbolClassParams& params, int alpha_max) {
  params.validate();
  require(alpha_max >= 0, "derivative depth must be nonnegative");
  const auto& grid = s.grid;
  double best = 0;
  for (const auto& d : xi_derivatives(s, alpha_max)) {
    const int a = d.alpha[0] + d.alpha[1];
    double hz = 0, sup = 0;
    for (Index c = 0; c < grid.size(); ++c) {
      if (!d.valid[static_cast<std::size_t>(c)]) continue;
      const double br = std::sqrt(1.0 + grid.frequency(c).squaredNorm());
      const SampledField col(grid, Eigen::MatrixXcd(d.values.col(c)));
      hz = std::max(hz, std::pow(br, -params.m + a - params.ell * params.delta) * holder_zygmund_norm(col, params.ell));
      sup = std::max(sup, std::pow(br, -params.m + a) * d.values.col(c).cwiseAbs().maxCoeff());
    }
    best = std::max(best, hz + sup);
  }
  return best;
}

RadialProfile default_ring_profile() {
  return [](double r) { return smooth_step(r - 1.0) * smooth_step(4.0 - r); };
}

SymbolGrid elementary_symbol(const std::vector<SampledField>& sigma_j, const RadialProfile& psi1) {
  require(!sigma_j.empty(), "elementary symbol needs at least one coefficient field");
  const TorusGrid grid = sigma_j.front().grid;
  SymbolGrid s(grid);
  for (std::size_t i = 0; i < sigma_j.size(); ++i) {
    const auto& sj = sigma_j[i];
    require(sj.grid == grid && sj.channels() == 1, "elementary symbol coefficients must be scalar fields on one grid");
    const int j = static_cast<int>(i) + 1;
    Eigen::VectorXcd col(grid.size());
    for (Index c = 0; c < grid.size(); ++c) col[c] = psi1(std::ldexp(grid.frequency(c).norm(), 1 - j));
    s.values.noalias() += sj.values.col(0) * col.transpose();
  }
  return s;
}

const ParaPiece* ParaPieces::find(int j, int l) const {
  for (const auto& p : pieces)
    if (p.j == j && p.l == l) return &p;
  return nullptr;
}

SymbolGrid ParaPieces::to_symbol(int j, int l) const {
  SymbolGrid s(grid);
  if (const ParaPiece* p = find(j, l))
    for (std::size_t i = 0; i < p->columns.size(); ++i) s.values.col(p->columns[i]) = p->values.col(static_cast<Index>(i));
  return s;
}

SymbolGrid ParaPieces::reconstruct() const {
  SymbolGrid s(grid);
  for (const auto& p : pieces)
    for (std::size_t i = 0; i < p.columns.size(); ++i) s.values.col(p.columns[i]) += p.values.col(static_cast<Index>(i));
  return s;
}

ParaPieces paradecompose(const SymbolGrid& s, double smoothness) {
  const auto& grid = s.grid;
  const InhomPartition part{smoothness};
  const int top = max_partition_level(grid);
  ParaPieces out{grid, top, top, {}};
  Eigen::MatrixXcd spec = s.values;
  fft_columns(grid, spec, false);
  spec /= static_cast<double>(grid.size());
  std::vector<double> radius(static_cast<std::size_t>(grid.size()));
  for (Index k = 0; k < grid.size(); ++k) radius[static_cast<std::size_t>(k)] = grid.frequency(k).norm();
  for (int j = 0; j <= top; ++j) {
    std::vector<Index> cols;
    std::vector<double> phij;
    for (Index c = 0; c < grid.size(); ++c) {
      const double v = part.level(j, radius[static_cast<std::size_t>(c)]);
      if (v == 0) continue;
      cols.push_back(c);
      phij.push_back(v);
    }
    if (cols.empty()) continue;
    Eigen::MatrixXcd sub(grid.size(), static_cast<Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) sub.col(static_cast<Index>(i)) = spec.col(cols[i]);
    for (int l = 0; j + l <= top; ++l) {
      Eigen::VectorXd w(grid.size());
      for (Index k = 0; k < grid.size(); ++k) {
        const double r = radius[static_cast<std::size_t>(k)];
        w[k] = l == 0 ? part.phi0(std::ldexp(r, -j)) : part.level(j + l, r);
      }
      if (w.isZero(0.0)) continue;
      Eigen::MatrixXcd piece = w.asDiagonal() * sub;
      fft_columns(grid, piece, true);
      for (std::size_t i = 0; i < cols.size(); ++i) piece.col(static_cast<Index>(i)) *= phij[i];
      out.pieces.push_back({j, l, cols, std::move(piece)});
    }
  }
  return out;
}

std::vector<KernelMass> piece_kernel_mass(const ParaPieces& pieces, double a) {
  const auto& grid = pieces.grid;
  std::vector<double> weight(static_cast<std::size_t>(grid.size()));
  std::vector<KernelMass> out;
  for (const auto& p : pieces.pieces) {
    for (Index y = 0; y < grid.size(); ++y)
      weight[static_cast<std::size_t>(y)] =
          std::pow(1.0 + std::ldexp(wrapped(grid, y).norm(), p.j), a) * grid.cell_volume();
    // Rows of the piece become columns indexed by ξ, transformed to y.
    Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(grid.size(), grid.size());
    for (std::size_t i = 0; i < p.columns.size(); ++i) k.row(p.columns[i]) = p.values.col(static_cast<Index>(i)).transpose();
    fft_columns(grid, k, true);
    k /= grid.volume();
    double best = 0;
    for (Index x = 0; x < grid.size(); ++x) {
      double mass = 0;
      for (Index y = 0; y < grid.size(); ++y) mass += std::abs(k(y, x)) * weight[static_cast<std::size_t>(y)];
      best = std::max(best, mass);
    }
    out.push_back({p.j, p.l, best});
  }
  return out;
}

SampledField psdo_apply(const SymbolGrid& s, const SampledField& f) {
  const auto& grid = s.grid;
  require(f.grid == grid, "symbol and field grids differ");
  const SpectralField F = to_spectral(f);
  const Index n = grid.points_per_axis();
  std::vector<cplx> twiddle(static_cast<std::size_t>(n));
  for (Index t = 0; t < n; ++t)
    twiddle[static_cast<std::size_t>(t)] = std::polar(1.0, 2 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n));
  std::vector<std::array<Index, 2>> xi(static_cast<std::size_t>(grid.size()));
  for (Index c = 0; c < grid.size(); ++c) xi[static_cast<std::size_t>(c)] = grid.coords(c);
  SampledField out(grid, f.channels());
  Eigen::RowVectorXcd row(grid.size());
  for (Index x = 0; x < grid.size(); ++x) {
    const auto k = grid.coords(x);
    for (Index c = 0; c < grid.size(); ++c) {
      const auto& z = xi[static_cast<std::size_t>(c)];
      row[c] = s.values(x, c) * twiddle[static_cast<std::size_t>((k[0] * z[0] + k[1] * z[1]) % n)];
    }
    out.values.row(x) = row * F.coeffs;
  }
  out.values /= grid.volume();
  return out;
}

}  // namespace bmtl
