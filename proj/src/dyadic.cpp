#include "bmtl/dyadic.hpp"

namespace bmtl {

Eigen::Vector2d DyadicCube::corner() const {
  const double l = side();
  return {l * static_cast<double>(index[0]), dim == 2 ? l * static_cast<double>(index[1]) : 0.0};
}

Eigen::Vector2d DyadicCube::center() const {
  Eigen::Vector2d c = corner();
  c[0] += side() / 2;
  if (dim == 2) c[1] += side() / 2;
  return c;
}

DyadicCube DyadicCube::parent() const {
  return {level - 1, {index[0] >> 1, dim == 2 ? index[1] >> 1 : 0}, dim};
}

std::vector<DyadicCube> DyadicCube::children() const {
  std::vector<DyadicCube> out;
  if (dim == 1) {
    for (Index b = 0; b < 2; ++b) out.push_back({level + 1, {2 * index[0] + b, 0}, 1});
    return out;
  }
  for (Index b0 = 0; b0 < 2; ++b0)
    for (Index b1 = 0; b1 < 2; ++b1) out.push_back({level + 1, {2 * index[0] + b0, 2 * index[1] + b1}, 2});
  return out;
}

CubeRange CubeRange::widened(const TorusGrid& grid, int margin) const {
  CubeRange w = *this;
  w.j_min = std::max(j_min - 1, -grid.side_log2);
  w.j_max = std::min(j_max + 1, grid.res_log2 - margin);
  return w;
}

void check_level(const TorusGrid& grid, int j, int margin) {
  if (j < -grid.side_log2 || j > grid.res_log2 - margin)
    throw Error("cube level " + std::to_string(j) + " outside grid limits [" + std::to_string(-grid.side_log2) + ", " +
                std::to_string(grid.res_log2 - margin) + "]");
}

void validate(const CubeRange& range, const TorusGrid& grid, int margin) {
  require(range.j_min <= range.j_max, "cube range needs j_min <= j_max");
  check_level(grid, range.first(), margin);
  check_level(grid, range.j_max, margin);
}

Index cubes_per_axis(const TorusGrid& grid, int j) { return Index{1} << (j + grid.side_log2); }

Index cube_count(const TorusGrid& grid, int j) {
  const Index c = cubes_per_axis(grid, j);
  return grid.dim == 1 ? c : c * c;
}

std::vector<DyadicCube> cubes_at_level(const TorusGrid& grid, int j) {
  check_level(grid, j);
  std::vector<DyadicCube> out;
  out.reserve(static_cast<std::size_t>(cube_count(grid, j)));
  for (Index id = 0; id < cube_count(grid, j); ++id) out.push_back(cube_from_id(grid, j, id));
  return out;
}

DyadicCube locate(const TorusGrid& grid, const Eigen::Vector2d& x, int j) {
  if (j < -grid.side_log2) throw Error("locate level below the torus scale");
  const Index c = cubes_per_axis(grid, j);
  auto axis = [&](double v) {
    const double l = grid.side();
    v = std::fmod(v, l);
    if (v < 0) v += l;
    Index m = static_cast<Index>(std::floor(std::ldexp(v, j)));
    return std::clamp<Index>(m, 0, c - 1);
  };
  return {j, {axis(x[0]), grid.dim == 2 ? axis(x[1]) : 0}, grid.dim};
}

Index cube_id(const TorusGrid& grid, const DyadicCube& q) {
  const Index c = cubes_per_axis(grid, q.level);
  const Index m0 = ((q.index[0] % c) + c) % c;
  if (grid.dim == 1) return m0;
  const Index m1 = ((q.index[1] % c) + c) % c;
  return m0 * c + m1;
}

DyadicCube cube_from_id(const TorusGrid& grid, int j, Index id) {
  const Index c = cubes_per_axis(grid, j);
  if (grid.dim == 1) return {j, {id, 0}, 1};
  return {j, {id / c, id % c}, 2};
}

std::vector<Index> point_cube_ids(const TorusGrid& grid, int j) {
  check_level(grid, j);
  const int shift = grid.res_log2 - j;
  const Index c = cubes_per_axis(grid, j);
  std::vector<Index> ids(static_cast<std::size_t>(grid.size()));
  for (Index k = 0; k < grid.size(); ++k) {
    auto p = grid.coords(k);
    ids[static_cast<std::size_t>(k)] = grid.dim == 1 ? (p[0] >> shift) : (p[0] >> shift) * c + (p[1] >> shift);
  }
  return ids;
}

std::vector<Index> cube_points(const TorusGrid& grid, const DyadicCube& q) {
  if (q.level > grid.res_log2) return {};
  const Index per = Index{1} << (grid.res_log2 - q.level);
  const Index c = cubes_per_axis(grid, q.level);
  const Index m0 = ((q.index[0] % c) + c) % c, m1 = ((q.index[1] % c) + c) % c;
  std::vector<Index> out;
  if (grid.dim == 1) {
    out.reserve(static_cast<std::size_t>(per));
    for (Index a = 0; a < per; ++a) out.push_back(m0 * per + a);
    return out;
  }
  out.reserve(static_cast<std::size_t>(per * per));
  for (Index a = 0; a < per; ++a)
    for (Index b = 0; b < per; ++b) out.push_back(grid.flat(m0 * per + a, m1 * per + b));
  return out;
}

std::vector<Index> dilated_cube_points(const TorusGrid& grid, const DyadicCube& q, int i) {
  require(i >= 0, "dilation exponent must be nonnegative");
  require(q.level - i >= -grid.side_log2, "dilated cube exceeds the torus");
  const Index per = Index{1} << (grid.res_log2 - q.level);
  require(i == 0 || per >= 2, "dilated cube is not grid aligned");
  const Index big = per << i;
  const Index offset = (big - per) / 2;
  const Index c = cubes_per_axis(grid, q.level);
  const Index m0 = ((q.index[0] % c) + c) % c, m1 = ((q.index[1] % c) + c) % c;
  std::vector<Index> out;
  if (grid.dim == 1) {
    out.reserve(static_cast<std::size_t>(big));
    for (Index a = 0; a < big; ++a) out.push_back(grid.flat(m0 * per - offset + a));
    return out;
  }
  out.reserve(static_cast<std::size_t>(big * big));
  for (Index a = 0; a < big; ++a)
    for (Index b = 0; b < big; ++b) out.push_back(grid.flat(m0 * per - offset + a, m1 * per - offset + b));
  return out;
}

Index corner_point(const TorusGrid& grid, const DyadicCube& q) {
  require(q.level <= grid.res_log2, "cube corner is not a grid point");
  const Index per = Index{1} << (grid.res_log2 - q.level);
  return grid.flat(q.index[0] * per, q.dim == 2 ? q.index[1] * per : 0);
}

double quad_integral(const SampledField& g, const DyadicCube& region) {
  const auto& grid = g.grid;
  require(region.dim == grid.dim, "region dimension mismatch");
  check_level(grid, region.level);
  double acc = 0.0;
  for (Index k : cube_points(grid, region)) acc += g.values(k, 0).real();
  return acc * grid.cell_volume();
}

double torus_distance(const TorusGrid& grid, const DyadicCube& a, const DyadicCube& b) {
  return grid.distance(a.corner(), b.corner());
}

}  // namespace bmtl
