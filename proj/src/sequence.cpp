#include "bmtl/sequence.hpp"

#include <istream>
#include <ostream>

#include <json.hpp>

namespace bmtl {

void CoeffSequence::set(const DyadicCube& q, Eigen::VectorXcd v) {
  require(v.size() == channels, "coefficient channel count mismatch");
  require(q.dim == grid.dim, "coefficient cube dimension mismatch");
  check_level(grid, q.level);
  check_finite(v, "coefficient");
  DyadicCube key = q;
  const Index c = cubes_per_axis(grid, q.level);
  key.index[0] = ((q.index[0] % c) + c) % c;
  key.index[1] = q.dim == 2 ? ((q.index[1] % c) + c) % c : 0;
  entries[key] = std::move(v);
}

Eigen::VectorXcd CoeffSequence::get(const DyadicCube& q) const {
  auto it = entries.find(q);
  return it == entries.end() ? Eigen::VectorXcd::Zero(channels) : it->second;
}

int CoeffSequence::min_level() const {
  int lo = std::numeric_limits<int>::max();
  for (const auto& [q, v] : entries) lo = std::min(lo, q.level);
  return lo;
}

int CoeffSequence::max_level() const {
  int hi = std::numeric_limits<int>::min();
  for (const auto& [q, v] : entries) hi = std::max(hi, q.level);
  return hi;
}

double CoeffSequence::max_abs() const {
  double m = 0.0;
  for (const auto& [q, v] : entries) m = std::max(m, v.cwiseAbs().maxCoeff());
  return m;
}

double CoeffSequence::l2() const {
  double acc = 0.0;
  for (const auto& [q, v] : entries) acc += v.squaredNorm();
  return std::sqrt(acc);
}

CoeffSequence& CoeffSequence::operator*=(cplx a) {
  for (auto& [q, v] : entries) v *= a;
  return *this;
}

CoeffSequence& CoeffSequence::operator+=(const CoeffSequence& o) {
  require(o.channels == channels && o.grid == grid, "sequence shape mismatch");
  for (const auto& [q, v] : o.entries) {
    auto [it, inserted] = entries.try_emplace(q, v);
    if (!inserted) it->second += v;
  }
  return *this;
}

CoeffSequence operator+(CoeffSequence a, const CoeffSequence& b) { return a += b; }
CoeffSequence operator*(cplx a, CoeffSequence b) { return b *= a; }

namespace {

nlohmann::json header(const CoeffSequence& s, const SequenceFileInfo& info) {
  return {{"kind", "coeffs"},
          {"dim", s.grid.dim},
          {"side_log2", s.grid.side_log2},
          {"res_log2", s.grid.res_log2},
          {"channels", s.channels},
          {"mode", info.mode},
          {"db_order", info.db_order},
          {"coarsest", info.coarsest}};
}

void write_rows(std::ostream& os, const CoeffSequence& s, int generator) {
  for (const auto& [q, v] : s.entries) {
    nlohmann::json row;
    row["j"] = q.level;
    row["m"] = q.dim == 2 ? nlohmann::json::array({q.index[0], q.index[1]}) : nlohmann::json::array({q.index[0]});
    row["i"] = generator;
    auto vals = nlohmann::json::array();
    for (Index c = 0; c < v.size(); ++c) vals.push_back({v[c].real(), v[c].imag()});
    row["v"] = vals;
    os << row.dump() << '\n';
  }
}

std::vector<CoeffSequence> read_all(std::istream& is, SequenceFileInfo* info, bool split) {
  std::string line;
  if (!std::getline(is, line)) throw Error("missing sequence header");
  try {
    auto h = nlohmann::json::parse(line);
    require(h.value("kind", std::string()) == "coeffs", "sequence file header must have kind \"coeffs\"");
    const CoeffSequence empty(TorusGrid(h.at("dim").get<int>(), h.at("side_log2").get<int>(), h.at("res_log2").get<int>()),
                              h.at("channels").get<int>());
    require(empty.channels >= 1, "sequence channels must be positive");
    std::vector<CoeffSequence> out{empty};
    SequenceFileInfo fi{h.value("mode", std::string("phi")), h.value("db_order", 0), 0, h.value("coarsest", 0)};
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      auto row = nlohmann::json::parse(line);
      DyadicCube q;
      q.dim = empty.grid.dim;
      q.level = row.at("j").get<int>();
      const auto& m = row.at("m");
      require(static_cast<int>(m.size()) == q.dim, "cube index length does not match dimension");
      for (int d = 0; d < q.dim; ++d) q.index[static_cast<std::size_t>(d)] = m[static_cast<std::size_t>(d)].get<Index>();
      fi.generator = row.value("i", 0);
      require(fi.generator >= 0 && fi.generator < 64, "generator index out of range");
      const auto& vals = row.at("v");
      require(static_cast<int>(vals.size()) == empty.channels, "coefficient length does not match channels");
      Eigen::VectorXcd v(static_cast<Index>(vals.size()));
      for (std::size_t c = 0; c < vals.size(); ++c) v[static_cast<Index>(c)] = {vals[c][0].get<double>(), vals[c][1].get<double>()};
      const std::size_t slot = split ? static_cast<std::size_t>(fi.generator) : 0;
      if (out.size() <= slot) out.resize(slot + 1, empty);
      out[slot].set(q, std::move(v));
    }
    if (info) *info = fi;
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad sequence file: ") + e.what());
  }
}

}  // namespace

void write_sequence(std::ostream& os, const CoeffSequence& s, const SequenceFileInfo& info) {
  os << header(s, info).dump() << '\n';
  write_rows(os, s, info.generator);
  if (!os) throw Error("failed to write coefficient sequence");
}

CoeffSequence read_sequence(std::istream& is, SequenceFileInfo* info) { return read_all(is, info, false).front(); }

void write_sequences(std::ostream& os, const std::vector<CoeffSequence>& seqs, const SequenceFileInfo& info) {
  require(!seqs.empty(), "no sequences to write");
  os << header(seqs.front(), info).dump() << '\n';
  for (std::size_t i = 0; i < seqs.size(); ++i) write_rows(os, seqs[i], static_cast<int>(i));
  if (!os) throw Error("failed to write coefficient sequences");
}

std::vector<CoeffSequence> read_sequences(std::istream& is, SequenceFileInfo* info) { return read_all(is, info, true); }

}  // namespace bmtl
