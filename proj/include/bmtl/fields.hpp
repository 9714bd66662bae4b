#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bmtl/common.hpp"

namespace bmtl {

// Periodic grid of side L = 2^K in n <= 2 dimensions with spacing h = 2^-J.
// Samples sit at x = h*k; flat index is row-major with the first axis slowest.
struct TorusGrid {
  int dim = 1;
  int side_log2 = 0;
  int res_log2 = 1;

  TorusGrid() = default;
  TorusGrid(int dim, int side_log2, int res_log2);

  Index points_per_axis() const { return Index{1} << (side_log2 + res_log2); }
  Index size() const { return dim == 1 ? points_per_axis() : points_per_axis() * points_per_axis(); }
  double spacing() const { return std::ldexp(1.0, -res_log2); }
  double side() const { return std::ldexp(1.0, side_log2); }
  double cell_volume() const { return std::pow(spacing(), dim); }
  double volume() const { return std::pow(side(), dim); }

  std::array<Index, 2> coords(Index flat) const;
  Index flat(Index i0, Index i1 = 0) const;
  Eigen::Vector2d position(Index flat) const;

  // Frequency of FFT-ordered index k along one axis, in units of 1/L.
  double axis_frequency(Index k) const;
  Eigen::Vector2d frequency(Index flat) const;
  std::vector<double> frequency_norms() const;

  // Periodic distance between two points of the torus.
  double distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const;
  // Signed periodic offset of a coordinate into [-L/2, L/2).
  double wrap(double d) const;

  bool operator==(const TorusGrid&) const = default;
};

// Vector-valued samples: one row per grid point, one column per channel.
struct SampledField {
  TorusGrid grid;
  Eigen::MatrixXcd values;

  SampledField() = default;
  SampledField(const TorusGrid& g, int channels);
  SampledField(const TorusGrid& g, Eigen::MatrixXcd v);

  int channels() const { return static_cast<int>(values.cols()); }
  Index size() const { return values.rows(); }

  template <class Fn>
  static SampledField from_function(const TorusGrid& g, int channels, Fn&& fn) {
    SampledField f(g, channels);
    for (Index k = 0; k < g.size(); ++k) f.values.row(k) = fn(g.position(k)).transpose();
    return f;
  }
  static SampledField scalar(const TorusGrid& g, const Eigen::VectorXd& v);

  // Real part of channel c as a dense vector.
  Eigen::VectorXd real_channel(int c = 0) const { return values.col(c).real(); }
};

// Coefficients on the frequency lattice stored in FFT order.
struct SpectralField {
  TorusGrid grid;
  Eigen::MatrixXcd coeffs;

  int channels() const { return static_cast<int>(coeffs.cols()); }
};

void check_finite(const Eigen::MatrixXcd& v, const char* what);

// In-place unnormalised DFT (sign -1 forward, +1 inverse) of every column.
void fft_columns(const TorusGrid& grid, Eigen::MatrixXcd& data, bool inverse);

SpectralField to_spectral(const SampledField& f);
SampledField from_spectral(const SpectralField& F);

// Spectral multiplication by mult(xi) at every lattice point.
SampledField apply_multiplier(const SampledField& f, const std::function<cplx(const Eigen::Vector2d&)>& mult);
SampledField apply_multiplier(const SpectralField& F, const std::function<cplx(const Eigen::Vector2d&)>& mult);

// ∂^γ of every channel, computed spectrally (Nyquist dropped for odd orders).
SampledField partial_derivative(const SampledField& f, std::array<int, 2> order);

// Midpoint quadrature of channel 0 over the torus.
double quad_integral(const SampledField& g);

double l2_norm(const SampledField& f);

// Field files: a JSON header line followed by little-endian binary64 payload.
struct FieldHeader {
  TorusGrid grid;
  int channels = 1;
  bool complex = true;
  std::string kind;
};

void write_field(std::ostream& os, const SampledField& f, bool complex = true, const std::string& kind = "");
SampledField read_field(std::istream& is, FieldHeader* header = nullptr);
void save_field(const std::string& path, const SampledField& f, bool complex = true);
SampledField load_field(const std::string& path, FieldHeader* header = nullptr);

}  // namespace bmtl
