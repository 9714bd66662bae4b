#include "bmtl/fields.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>

#include <json.hpp>
#include <unsupported/Eigen/FFT>


namespace bmtl {

TorusGrid::TorusGrid(int dim_, int side_log2_, int res_log2_)
    : dim(dim_), side_log2(side_log2_), res_log2(res_log2_) {
  require(dim == 1 || dim == 2, "grid dimension must be 1 or 2");
  require(res_log2 >= 1, "res_log2 must be at least 1");
  require(side_log2 + res_log2 >= 1, "grid must have at least two points per axis");
  require(side_log2 + res_log2 <= (dim == 1 ? 20 : 11), "grid too large");
}

std::array<Index, 2> TorusGrid::coords(Index flat) const {
  if (dim == 1) return {flat, 0};
  const Index n = points_per_axis();
  return {flat / n, flat % n};
}

Index TorusGrid::flat(Index i0, Index i1) const {
  const Index n = points_per_axis();
  i0 = ((i0 % n) + n) % n;
  if (dim == 1) return i0;
  i1 = ((i1 % n) + n) % n;
  return i0 * n + i1;
}

Eigen::Vector2d TorusGrid::position(Index flat) const {
  auto c = coords(flat);
  const double h = spacing();
  return {h * static_cast<double>(c[0]), dim == 2 ? h * static_cast<double>(c[1]) : 0.0};
}

double TorusGrid::axis_frequency(Index k) const {
  const Index n = points_per_axis();
  const Index s = k < n / 2 ? k : k - n;
  return static_cast<double>(s) / side();
}

Eigen::Vector2d TorusGrid::frequency(Index flat) const {
  auto c = coords(flat);
  return {axis_frequency(c[0]), dim == 2 ? axis_frequency(c[1]) : 0.0};
}

std::vector<double> TorusGrid::frequency_norms() const {
  std::vector<double> r(static_cast<std::size_t>(size()));
  for (Index k = 0; k < size(); ++k) r[static_cast<std::size_t>(k)] = frequency(k).norm();
  return r;
}

double TorusGrid::wrap(double d) const {
  const double l = side();
  d = std::fmod(d, l);
  if (d < -l / 2) d += l;
  if (d >= l / 2) d -= l;
  return d;
}

double TorusGrid::distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const {
  const double d0 = wrap(a[0] - b[0]);
  const double d1 = dim == 2 ? wrap(a[1] - b[1]) : 0.0;
  return std::hypot(d0, d1);
}

SampledField::SampledField(const TorusGrid& g, int channels)
    : grid(g), values(Eigen::MatrixXcd::Zero(g.size(), channels)) {
  require(channels >= 1 && channels <= 16, "channel count out of range");
}

SampledField::SampledField(const TorusGrid& g, Eigen::MatrixXcd v) : grid(g), values(std::move(v)) {
  require(values.rows() == grid.size(), "field size does not match grid");
  require(values.cols() >= 1, "field needs at least one channel");
  check_finite(values, "field");
}

SampledField SampledField::scalar(const TorusGrid& g, const Eigen::VectorXd& v) {
  require(v.size() == g.size(), "scalar field size does not match grid");
  return SampledField(g, v.cast<cplx>().eval());
}

void check_finite(const Eigen::MatrixXcd& v, const char* what) {
  if (!v.allFinite()) throw Error(std::string("non-finite values in ") + what);
}

namespace {

Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine = [] {
    Eigen::FFT<double> e;
    e.SetFlag(Eigen::FFT<double>::Unscaled);
    return e;
  }();
  return engine;
}

void fft_lines(std::vector<cplx>& buf, std::vector<cplx>& out, bool inverse) {
  auto& fft = fft_engine();
  if (inverse)
    fft.inv(out, buf);
  else
    fft.fwd(out, buf);
}

}  // namespace

void fft_columns(const TorusGrid& grid, Eigen::MatrixXcd& data, bool inverse) {
  const Index n = grid.points_per_axis();
  std::vector<cplx> buf(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
  for (Index c = 0; c < data.cols(); ++c) {
    cplx* col = data.col(c).data();
    if (grid.dim == 1) {
      std::copy(col, col + n, buf.begin());
      fft_lines(buf, out, inverse);
      std::copy(out.begin(), out.end(), col);
      continue;
    }
    for (Index r = 0; r < n; ++r) {
      std::copy(col + r * n, col + (r + 1) * n, buf.begin());
      fft_lines(buf, out, inverse);
      std::copy(out.begin(), out.end(), col + r * n);
    }
    for (Index k = 0; k < n; ++k) {
      for (Index r = 0; r < n; ++r) buf[static_cast<std::size_t>(r)] = col[r * n + k];
      fft_lines(buf, out, inverse);
      for (Index r = 0; r < n; ++r) col[r * n + k] = out[static_cast<std::size_t>(r)];
    }
  }
}

SpectralField to_spectral(const SampledField& f) {
  check_finite(f.values, "to_spectral input");
  SpectralField F{f.grid, f.values};
  fft_columns(f.grid, F.coeffs, false);
  F.coeffs *= f.grid.cell_volume();
  return F;
}

SampledField from_spectral(const SpectralField& F) {
  Eigen::MatrixXcd v = F.coeffs;
  fft_columns(F.grid, v, true);
  v /= F.grid.volume();
  return SampledField(F.grid, std::move(v));
}

SampledField apply_multiplier(const SpectralField& F, const std::function<cplx(const Eigen::Vector2d&)>& mult) {
  SpectralField G = F;
  for (Index k = 0; k < G.grid.size(); ++k) G.coeffs.row(k) *= mult(G.grid.frequency(k));
  return from_spectral(G);
}

SampledField apply_multiplier(const SampledField& f, const std::function<cplx(const Eigen::Vector2d&)>& mult) {
  return apply_multiplier(to_spectral(f), mult);
}

SampledField partial_derivative(const SampledField& f, std::array<int, 2> order) {
  const auto& grid = f.grid;
  require(order[0] >= 0 && order[1] >= 0, "derivative order must be nonnegative");
  require(grid.dim == 2 || order[1] == 0, "second-axis derivative of a 1D field");
  SpectralField F = to_spectral(f);
  const Index n = grid.points_per_axis();
  const double two_pi = 2 * std::numbers::pi;
  for (Index k = 0; k < grid.size(); ++k) {
    const auto c = grid.coords(k);
    const Eigen::Vector2d xi = grid.frequency(k);
    cplx factor = 1.0;
    for (int ax = 0; ax < grid.dim; ++ax) {
      if (order[ax] == 0) continue;
      if (order[ax] % 2 == 1 && c[ax] == n / 2) factor = 0.0;
      factor *= std::pow(cplx(0, two_pi * xi[ax]), order[ax]);
    }
    F.coeffs.row(k) *= factor;
  }
  return from_spectral(F);
}

double quad_integral(const SampledField& g) { return g.values.col(0).real().sum() * g.grid.cell_volume(); }

double l2_norm(const SampledField& f) { return std::sqrt(f.values.squaredNorm() * f.grid.cell_volume()); }

namespace {

static_assert(std::endian::native == std::endian::little, "field I/O assumes a little-endian host");

}  // namespace

void write_field(std::ostream& os, const SampledField& f, bool complex, const std::string& kind) {
  nlohmann::json h = {{"dim", f.grid.dim},
                      {"side_log2", f.grid.side_log2},
                      {"res_log2", f.grid.res_log2},
                      {"channels", f.channels()},
                      {"complex", complex}};
  if (!kind.empty()) h["kind"] = kind;
  os << h.dump() << '\n';
  for (Index k = 0; k < f.size(); ++k) {
    for (int c = 0; c < f.channels(); ++c) {
      const double re = f.values(k, c).real(), im = f.values(k, c).imag();
      os.write(reinterpret_cast<const char*>(&re), sizeof re);
      if (complex) os.write(reinterpret_cast<const char*>(&im), sizeof im);
    }
  }
  if (!os) throw Error("failed to write field");
}

SampledField read_field(std::istream& is, FieldHeader* header) {
  std::string line;
  if (!std::getline(is, line)) throw Error("missing field header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad field header: ") + e.what());
  }
  FieldHeader fh;
  try {
    fh.grid = TorusGrid(h.at("dim").get<int>(), h.at("side_log2").get<int>(), h.at("res_log2").get<int>());
    fh.channels = h.at("channels").get<int>();
    fh.complex = h.value("complex", true);
    fh.kind = h.value("kind", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad field header: ") + e.what());
  }
  require(fh.channels >= 1, "field header needs channels >= 1");
  const Index rows = fh.kind == "symbol" ? fh.grid.size() * fh.grid.size() : fh.grid.size();
  Eigen::MatrixXcd v(rows, fh.channels);
  for (Index k = 0; k < rows; ++k) {
    for (int c = 0; c < fh.channels; ++c) {
      double re = 0.0, im = 0.0;
      is.read(reinterpret_cast<char*>(&re), sizeof re);
      if (fh.complex) is.read(reinterpret_cast<char*>(&im), sizeof im);
      if (!is) throw Error("truncated field payload");
      v(k, c) = {re, im};
    }
  }
  if (header) *header = fh;
  if (fh.kind == "symbol") {
    // Symbols are returned flattened; callers reshape.
    SampledField out;
    out.grid = fh.grid;
    out.values = std::move(v);
    check_finite(out.values, "symbol file");
    return out;
  }
  return SampledField(fh.grid, std::move(v));
}

void save_field(const std::string& path, const SampledField& f, bool complex) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_field(os, f, complex);
}

SampledField load_field(const std::string& path, FieldHeader* header) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  return read_field(is, header);
}

}  // namespace bmtl
