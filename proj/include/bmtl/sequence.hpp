#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "bmtl/dyadic.hpp"

namespace bmtl {

// Sparse cube-indexed vectors; absent cubes are zero.
struct CoeffSequence {
  TorusGrid grid;
  int channels = 1;
  std::map<DyadicCube, Eigen::VectorXcd> entries;

  CoeffSequence() = default;
  CoeffSequence(const TorusGrid& g, int m) : grid(g), channels(m) {}

  void set(const DyadicCube& q, Eigen::VectorXcd v);
  Eigen::VectorXcd get(const DyadicCube& q) const;
  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
  int min_level() const;
  int max_level() const;
  double max_abs() const;
  // ℓ² norm over all cubes and channels.
  double l2() const;

  CoeffSequence& operator*=(cplx a);
  CoeffSequence& operator+=(const CoeffSequence& o);
};

CoeffSequence operator+(CoeffSequence a, const CoeffSequence& b);
CoeffSequence operator*(cplx a, CoeffSequence b);

// JSON lines: a header {"kind":"coeffs",...} then one {"j","m","i","v"} object per cube.
struct SequenceFileInfo {
  std::string mode = "phi";
  int db_order = 0;
  int generator = 0;
  int coarsest = 0;
};
void write_sequence(std::ostream& os, const CoeffSequence& s, const SequenceFileInfo& info = {});
CoeffSequence read_sequence(std::istream& is, SequenceFileInfo* info = nullptr);
// Several sequences in one file, told apart by the row field "i".
void write_sequences(std::ostream& os, const std::vector<CoeffSequence>& seqs, const SequenceFileInfo& info = {});
std::vector<CoeffSequence> read_sequences(std::istream& is, SequenceFileInfo* info = nullptr);

}  // namespace bmtl
