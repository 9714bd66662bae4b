#pragma once

#include <array>
#include <compare>
#include <vector>

#include "bmtl/fields.hpp"

namespace bmtl {

// Q_{j,m} = prod [2^-j m_i, 2^-j (m_i + 1)), indices reduced modulo 2^{j+K}.
struct DyadicCube {
  int level = 0;
  std::array<Index, 2> index{0, 0};
  int dim = 1;

  double side() const { return std::ldexp(1.0, -level); }
  double measure() const { return std::pow(side(), dim); }
  Eigen::Vector2d corner() const;
  Eigen::Vector2d center() const;

  DyadicCube parent() const;
  std::vector<DyadicCube> children() const;

  auto operator<=>(const DyadicCube&) const = default;
};

struct CubeRange {
  int j_min = 0;
  int j_max = 0;
  bool inhomogeneous = false;

  int first() const { return inhomogeneous ? std::max(j_min, 0) : j_min; }
  int last() const { return j_max; }
  CubeRange widened(const TorusGrid& grid, int margin = 2) const;
};

// Checks -K <= j_min <= j_max <= J - margin.
void validate(const CubeRange& range, const TorusGrid& grid, int margin = 2);
void check_level(const TorusGrid& grid, int j, int margin = 0);

Index cubes_per_axis(const TorusGrid& grid, int j);
Index cube_count(const TorusGrid& grid, int j);

std::vector<DyadicCube> cubes_at_level(const TorusGrid& grid, int j);
DyadicCube locate(const TorusGrid& grid, const Eigen::Vector2d& x, int j);

// Dense enumeration of a level: linear id = m0 * C + m1.
Index cube_id(const TorusGrid& grid, const DyadicCube& q);
DyadicCube cube_from_id(const TorusGrid& grid, int j, Index id);

// Cube id of every grid point at level j (j <= J).
std::vector<Index> point_cube_ids(const TorusGrid& grid, int j);

// Flat indices of the grid points inside q (empty when q is finer than the grid).
std::vector<Index> cube_points(const TorusGrid& grid, const DyadicCube& q);

// Flat indices of the cube of side 2^i * side(q) sharing q's center, wrapped.
// Requires the enlarged cube to fit inside the torus and to be grid aligned.
std::vector<Index> dilated_cube_points(const TorusGrid& grid, const DyadicCube& q, int i);

// Grid index of the cube corner x_Q.
Index corner_point(const TorusGrid& grid, const DyadicCube& q);

// Midpoint quadrature of channel 0 over a grid-aligned cube.
double quad_integral(const SampledField& g, const DyadicCube& region);

double torus_distance(const TorusGrid& grid, const DyadicCube& a, const DyadicCube& b);

}  // namespace bmtl
