#include "bmtl/harness.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bmtl/coeff.hpp"
#include "bmtl/operators.hpp"

namespace bmtl {

namespace {

using nlohmann::json;

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; }

Eigen::Matrix2d rotation(double t) {
  Eigen::Matrix2d r;
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  return r;
}

Eigen::Matrix2d weight_block(const TorusGrid& grid, const WeightSpec& spec, const Eigen::Vector2d& x) {
  const Eigen::Vector2d c = Eigen::Vector2d::Constant(spec.center * grid.side());
  auto radial = [&] {
    double d2 = 0;
    for (int a = 0; a < grid.dim; ++a) d2 += std::pow(grid.wrap(x[a] - c[a]), 2);
    return std::pow(std::max(std::sqrt(d2), grid.spacing()), spec.alpha);
  };
  switch (spec.kind) {
    case WeightKind::Identity:
      return Eigen::Matrix2d::Identity();
    case WeightKind::Constant: {
      Eigen::Matrix2d a;
      a << 1.0, 0.5, 0.5, 1.0;
      return spec.kappa * a;
    }
    case WeightKind::Power:
      return Eigen::Vector2d(radial(), 1.0).asDiagonal();
    case WeightKind::RotatedPower: {
      const Eigen::Matrix2d r = rotation(spec.theta);
      return r * Eigen::Vector2d(radial(), 1.0).asDiagonal() * r.transpose();
    }
    case WeightKind::Oscillating: {
      double u = x[0];
      if (grid.dim == 2) u += x[1];
      const Eigen::Matrix2d r = rotation(std::numbers::pi * spec.frequency * u / grid.side());
      return r * Eigen::Vector2d(1.0, spec.kappa).asDiagonal() * r.transpose();
    }
  }
  throw Error("unknown weight kind");
}

const char* kind_name(WeightKind k) {
  switch (k) {
    case WeightKind::Identity: return "identity";
    case WeightKind::Constant: return "constant";
    case WeightKind::Power: return "power";
    case WeightKind::RotatedPower: return "rotated";
    case WeightKind::Oscillating: return "oscillating";
  }
  return "?";
}

WeightKind weight_kind(const std::string& s) {
  for (auto k : {WeightKind::Identity, WeightKind::Constant, WeightKind::Power, WeightKind::RotatedPower,
                 WeightKind::Oscillating})
    if (s == kind_name(k)) return k;
  throw Error("unknown weight kind \"" + s + "\"");
}

const char* kind_name(FunctionKind k) {
  switch (k) {
    case FunctionKind::Random: return "random";
    case FunctionKind::Bump: return "bump";
    case FunctionKind::Harmonic: return "harmonic";
  }
  return "?";
}

FunctionKind function_kind(const std::string& s) {
  for (auto k : {FunctionKind::Random, FunctionKind::Bump, FunctionKind::Harmonic})
    if (s == kind_name(k)) return k;
  throw Error("unknown function kind \"" + s + "\"");
}

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string space_label(const SpaceParams& sp) {
  std::ostringstream os;
  os << "s=" << sp.s << " p=" << sp.p << " q=" << sp.q << " t=" << sp.t << " r=" << sp.r
     << (sp.homogeneous ? "" : " inhom");
  return os.str();
}

double json_number(const json& j) {
  if (j.is_null()) return kNaN;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return kNaN;
    throw Error("bad number \"" + s + "\"");
  }
  return j.get<double>();
}

json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

SpaceParams space_from_json(const json& j) {
  SpaceParams sp;
  sp.s = j.value("s", 0.0);
  sp.p = j.value("p", 2.0);
  sp.q = j.contains("q") ? json_number(j["q"]) : 2.0;
  sp.t = j.contains("t") ? json_number(j["t"]) : sp.p;
  sp.r = j.contains("r") ? json_number(j["r"]) : kInf;
  sp.homogeneous = j.value("homogeneous", true);
  return sp;
}

WeightSpec weight_from_json(const json& j) {
  WeightSpec w;
  w.kind = weight_kind(j.at("kind").get<std::string>());
  w.alpha = j.value("alpha", w.alpha);
  w.kappa = j.value("kappa", w.kappa);
  w.theta = j.value("theta", w.theta);
  w.frequency = j.value("frequency", w.frequency);
  w.center = j.value("center", w.center);
  return w;
}

FunctionSpec function_from_json(const json& j) {
  FunctionSpec f;
  f.kind = function_kind(j.at("kind").get<std::string>());
  f.seed = j.value("seed", f.seed);
  if (j.contains("band")) {
    f.band_lo = j["band"].at(0).get<int>();
    f.band_hi = j["band"].at(1).get<int>();
  }
  f.level = j.value("level", f.level);
  f.shift = j.value("shift", f.shift);
  f.dilation = j.value("dilation", f.dilation);
  return f;
}

Weighting cubewise(const ReducingFamily& fam) { return Cubewise{fam}; }

// Per-point channel norm |f(x)| as a scalar field.
SampledField magnitude(const SampledField& f) {
  Eigen::VectorXd v(f.size());
  for (Index k = 0; k < f.size(); ++k) v[k] = f.values.row(k).norm();
  return SampledField::scalar(f.grid, v);
}

void finish_ratios(CaseResult& c) {
  if (c.ratios.empty()) return;
  c.min_ratio = *std::min_element(c.ratios.begin(), c.ratios.end());
  c.max_ratio = *std::max_element(c.ratios.begin(), c.ratios.end());
}

void run_equivalence(const ExperimentConfig& cfg, const SpaceParams& sp, const MatrixWeight& w,
                     const ReducingFamily& fam, const SampledField& f, CaseResult& c) {
  require(sp.homogeneous, "equivalence runs use homogeneous spaces");
  c.values = four_norms(f, w, sp, cfg.range, fam);
  for (std::size_t i = 1; i < c.values.size(); ++i) c.ratios.push_back(c.values[i] / c.values[0]);
  finish_ratios(c);
  const auto [lo, hi] = std::minmax_element(c.values.begin(), c.values.end());
  c.spread = *hi / *lo;
  c.passed = std::isfinite(c.spread) && c.spread <= cfg.threshold;
  if (cfg.truncation_check) {
    NormOptions opt;
    opt.truncation = true;
    c.truncation = tl_norm(f, pointwise(w, sp.p), sp, AdmissiblePair{}, cfg.range, opt).truncation;
    c.truncation_flag = std::isfinite(c.truncation) && std::abs(c.truncation - 1.0) > cfg.truncation_tol;
  }
}

void run_boundedness(const ExperimentConfig& cfg, const SpaceParams& sp, const MatrixWeight& w,
                     const SampledField& f, const SymbolGrid* symbol, CaseResult& c) {
  const auto& op = cfg.op;
  const Decomposition dec = sp.homogeneous ? Decomposition(AdmissiblePair{}) : Decomposition(InhomPartition{});
  bool two_sided = false;
  double before = 0, after = 0;
  if (op.op == "maximal") {
    const SampledField g = magnitude(f);
    before = bm_norm(g, sp.p, sp.t, sp.r, cfg.range);
    after = bm_norm(hl_maximal(g), sp.p, sp.t, sp.r, cfg.range);
  } else {
    const Weighting pw = pointwise(w, sp.p);
    SpaceParams in = sp;
    SampledField tf;
    if (op.op == "hilbert") {
      tf = hilbert_riesz_apply(f, op.component);
    } else if (op.op == "bessel") {
      two_sided = true;
      tf = bessel_potential(f, op.gamma);
      in.s = sp.s - op.gamma;
    } else if (op.op == "psdo") {
      require(symbol != nullptr, "psdo run needs a symbol");
      tf = psdo_apply(*symbol, f);
      in.s = sp.s + op.gamma;
    } else {
      throw Error("unknown operator \"" + op.op + "\"");
    }
    before = tl_norm(f, pw, in, dec, cfg.range).value;
    after = tl_norm(tf, pw, sp, dec, cfg.range).value;
  }
  c.values = {before, after};
  c.ratios = {after / before};
  finish_ratios(c);
  c.spread = std::max(after / before, before / after);
  const double r = c.ratios[0];
  c.passed = std::isfinite(r) && r <= cfg.threshold && (!two_sided || r >= 1.0 / cfg.threshold);
}

void run_diagnostics(const ExperimentConfig& cfg, const SpaceParams& sp, const MatrixWeight& w, CaseResult& c) {
  DiagnosticsOptions opt;
  const WeightDiagnostics d = diagnose(w, sp.p, cfg.range, opt);
  c.values = {d.ap_char, d.d, d.d_tilde, d.delta_cap, d.delta_w, d.sandwich.first, d.sandwich.second};
  c.ratios = {d.sandwich.second / d.sandwich.first};
  finish_ratios(c);
  c.spread = c.ratios[0];
  c.passed = std::isfinite(c.spread) && c.spread <= cfg.threshold;
}

json case_json(const CaseResult& c, bool timings) {
  json j;
  j["space"] = c.space;
  j["weight"] = c.weight;
  j["function"] = c.function;
  auto arr = [](const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(number_json(x));
    return a;
  };
  j["values"] = arr(c.values);
  j["ratios"] = arr(c.ratios);
  j["min_ratio"] = number_json(c.min_ratio);
  j["max_ratio"] = number_json(c.max_ratio);
  j["spread"] = number_json(c.spread);
  j["truncation"] = number_json(c.truncation);
  j["truncation_flag"] = c.truncation_flag;
  j["unverifiable"] = c.unverifiable;
  j["pass"] = c.passed;
  j["error"] = c.error;
  if (timings) j["seconds"] = number_json(c.seconds);
  return j;
}

CaseResult case_from_json(const json& j) {
  CaseResult c;
  c.space = j.at("space").get<std::string>();
  c.weight = j.at("weight").get<std::string>();
  c.function = j.at("function").get<std::string>();
  for (const auto& x : j.at("values")) c.values.push_back(json_number(x));
  for (const auto& x : j.at("ratios")) c.ratios.push_back(json_number(x));
  c.min_ratio = json_number(j.at("min_ratio"));
  c.max_ratio = json_number(j.at("max_ratio"));
  c.spread = json_number(j.at("spread"));
  c.truncation = json_number(j.at("truncation"));
  c.truncation_flag = j.at("truncation_flag").get<bool>();
  c.unverifiable = j.at("unverifiable").get<bool>();
  c.passed = j.at("pass").get<bool>();
  c.error = j.at("error").get<std::string>();
  if (j.contains("seconds")) c.seconds = json_number(j["seconds"]);
  return c;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

}  // namespace

std::string WeightSpec::label() const {
  std::ostringstream os;
  os << kind_name(kind);
  switch (kind) {
    case WeightKind::Identity: break;
    case WeightKind::Constant: os << " kappa=" << kappa; break;
    case WeightKind::Power: os << " alpha=" << alpha; break;
    case WeightKind::RotatedPower: os << " alpha=" << alpha << " theta=" << theta; break;
    case WeightKind::Oscillating: os << " kappa=" << kappa << " freq=" << frequency; break;
  }
  return os.str();
}

MatrixWeight make_weight(const TorusGrid& grid, int m, const WeightSpec& spec) {
  require(m >= 1, "weight order must be positive");
  require(spec.kappa > 0, "kappa must be positive");
  return MatrixWeight::from_function(grid, m, [&](const Eigen::Vector2d& x) -> Eigen::MatrixXd {
    const Eigen::Matrix2d b = weight_block(grid, spec, x);
    if (m == 1) return Eigen::MatrixXd::Constant(1, 1, b(0, 0));
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
    a.topLeftCorner(2, 2) = b;
    return a;
  });
}

std::vector<WeightSpec> weight_gallery() {
  std::vector<WeightSpec> out;
  for (auto k : {WeightKind::Identity, WeightKind::Constant, WeightKind::Power, WeightKind::RotatedPower,
                 WeightKind::Oscillating}) {
    WeightSpec w;
    w.kind = k;
    out.push_back(w);
  }
  return out;
}

std::string FunctionSpec::label() const {
  std::ostringstream os;
  os << kind_name(kind) << " seed=" << seed;
  switch (kind) {
    case FunctionKind::Random: os << " band=" << band_lo << ".." << band_hi; break;
    case FunctionKind::Bump: os << " level=" << level << " shift=" << shift; break;
    case FunctionKind::Harmonic: os << " level=" << level; break;
  }
  if (dilation != 0) os << " dilation=" << dilation;
  return os.str();
}

SampledField make_function(const TorusGrid& grid, int channels, const FunctionSpec& spec) {
  require(channels >= 1, "channels must be positive");
  std::mt19937_64 rng(spec.seed);
  Eigen::VectorXcd dir(channels);
  for (int c = 0; c < channels; ++c) dir[c] = uniform(rng);
  if (dir.norm() == 0) dir[0] = 1;
  dir /= dir.norm();
  SpectralField F{grid, Eigen::MatrixXcd::Zero(grid.size(), channels)};
  const double L = grid.side();
  switch (spec.kind) {
    case FunctionKind::Random: {
      require(spec.band_lo <= spec.band_hi, "random field band is empty");
      const double lo = std::ldexp(1.0, spec.band_lo), hi = std::ldexp(1.0, spec.band_hi);
      for (Index k = 0; k < grid.size(); ++k) {
        const double r = grid.frequency(k).norm();
        for (int c = 0; c < channels; ++c) {
          // Draw for every lattice point so the field does not depend on the band edges' rounding.
          const cplx z(uniform(rng), uniform(rng));
          if (r >= lo && r <= hi) F.coeffs(k, c) = z;
        }
      }
      break;
    }
    case FunctionKind::Bump: {
      const AdmissiblePair pair = make_admissible_pair();
      for (Index k = 0; k < grid.size(); ++k) {
        const Eigen::Vector2d xi = grid.frequency(k);
        double phase = xi[0] * spec.shift;
        if (grid.dim == 2) phase += xi[1] * spec.shift;
        const cplx e = pair.psi_level(spec.level, xi.norm()) * std::polar(1.0, -2.0 * std::numbers::pi * phase);
        F.coeffs.row(k) = e * dir.transpose();
      }
      break;
    }
    case FunctionKind::Harmonic: {
      const double xi0 = std::round(1.25 * std::ldexp(1.0, spec.level) * L) / L;
      require(xi0 > 0, "harmonic frequency rounds to zero");
      return SampledField::from_function(grid, channels, [&](const Eigen::Vector2d& x) {
        return Eigen::VectorXcd(dir * std::cos(2.0 * std::numbers::pi * xi0 * x[0]));
      });
    }
  }
  SampledField f = from_spectral(F);
  f.values = f.values.real().cast<cplx>();
  check_finite(f.values, "gallery function");
  return spec.dilation == 0 ? f : dilate(f, spec.dilation);
}

SampledField dilate(const SampledField& f, int times) {
  require(times >= 0, "dilation count must be non-negative");
  const auto& g = f.grid;
  const Index n = g.points_per_axis();
  const Index step = Index{1} << times;
  SampledField out(g, f.channels());
  for (Index k = 0; k < g.size(); ++k) {
    const auto c = g.coords(k);
    const Index src = g.dim == 1 ? (c[0] * step) % n : g.flat((c[0] * step) % n, (c[1] * step) % n);
    out.values.row(k) = f.values.row(src);
  }
  return out;
}

std::vector<FunctionSpec> function_gallery(int count, std::uint64_t seed, int band_lo, int band_hi) {
  require(count >= 0, "gallery count must be non-negative");
  require(band_lo <= band_hi, "gallery band is empty");
  std::vector<FunctionSpec> out;
  const int span = band_hi - band_lo;
  for (int i = 0; i < count; ++i) {
    FunctionSpec f;
    f.seed = seed + static_cast<std::uint64_t>(i);
    f.band_lo = band_lo;
    f.band_hi = band_hi;
    switch (i % 4) {
      case 0:
      case 1:
        f.kind = FunctionKind::Random;
        break;
      case 2:
        f.kind = FunctionKind::Bump;
        // ψ_level has spectrum in [2^{level-1}, 2^{level+1}].
        f.level = span >= 2 ? band_lo + 1 + (i / 4) % (span - 1) : band_lo;
        f.shift = 0.37 * (i / 4 + 1);
        break;
      default:
        f.kind = FunctionKind::Harmonic;
        f.level = band_lo + (i / 4) % (span + 1);
        break;
    }
    out.push_back(f);
  }
  return out;
}

void ExperimentConfig::validate() const {
  bmtl::validate(range, grid, 2);
  require(channels >= 1, "channels must be positive");
  require(threshold >= 1, "threshold must be at least 1");
  for (const auto& sp : spaces) sp.validate();
  if (kind == ExperimentKind::Equivalence) {
    require(range.j_max + kPhiBandOffset <= grid.res_log2, "cube levels of the φ-transform exceed the grid");
    for (const auto& sp : spaces) require(sp.homogeneous, "equivalence runs use homogeneous spaces");
  }
  if (kind == ExperimentKind::Boundedness) {
    const auto& o = op.op;
    require(o == "hilbert" || o == "bessel" || o == "maximal" || o == "psdo", "unknown operator \"" + o + "\"");
    if (o == "psdo") require(grid.size() <= kMaxSymbolPoints, "psdo runs need a grid of at most 4096 points");
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  ExperimentConfig cfg;
  try {
    const json j = json::parse(json_text);
    cfg.kind = experiment_kind(j.value("kind", std::string("equivalence")));
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      cfg.grid = TorusGrid(g.value("dim", 1), g.value("side_log2", 2), g.value("res_log2", 10));
    }
    if (j.contains("range")) {
      const auto& r = j["range"];
      cfg.range = CubeRange{r.at("j_min").get<int>(), r.at("j_max").get<int>(), r.value("inhomogeneous", false)};
    }
    cfg.channels = j.value("channels", cfg.channels);
    if (j.contains("spaces"))
      for (const auto& s : j["spaces"]) cfg.spaces.push_back(space_from_json(s));
    else
      cfg.spaces.push_back(SpaceParams{});
    if (j.contains("weights")) {
      for (const auto& w : j["weights"]) cfg.weights.push_back(weight_from_json(w));
    } else {
      cfg.weights = weight_gallery();
    }
    if (j.contains("functions"))
      for (const auto& f : j["functions"]) cfg.functions.push_back(function_from_json(f));
    if (j.contains("function_gallery")) {
      const auto& g = j["function_gallery"];
      int lo = cfg.range.j_min, hi = cfg.range.j_max;
      if (g.contains("band")) {
        lo = g["band"].at(0).get<int>();
        hi = g["band"].at(1).get<int>();
      }
      auto more = function_gallery(g.value("count", 20), g.value("seed", std::uint64_t{1}), lo, hi);
      const int dil = g.value("dilation", 0);
      for (auto& f : more) f.dilation = dil;
      cfg.functions.insert(cfg.functions.end(), more.begin(), more.end());
    }
    if (j.contains("operator")) {
      const auto& o = j["operator"];
      cfg.op.op = o.value("op", cfg.op.op);
      cfg.op.gamma = o.value("gamma", cfg.op.gamma);
      cfg.op.component = o.value("component", cfg.op.component);
    }
    cfg.threshold = j.value("threshold", cfg.threshold);
    cfg.truncation_check = j.value("truncation_check", cfg.truncation_check);
    cfg.truncation_tol = j.value("truncation_tol", cfg.truncation_tol);
    if (j.contains("outputs")) {
      cfg.csv_path = j["outputs"].value("csv", std::string());
      cfg.json_path = j["outputs"].value("json", std::string());
    }
    cfg.record_timings = j.value("record_timings", false);
  } catch (const json::exception& e) {
    throw Error(std::string("bad experiment config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Equivalence: return "equivalence";
    case ExperimentKind::Boundedness: return "boundedness";
    case ExperimentKind::Diagnostics: return "diagnostics";
  }
  return "?";
}

ExperimentKind experiment_kind(const std::string& name) {
  for (auto k : {ExperimentKind::Equivalence, ExperimentKind::Boundedness, ExperimentKind::Diagnostics})
    if (name == to_string(k)) return k;
  throw Error("unknown experiment kind \"" + name + "\"");
}

std::vector<std::string> value_names(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Equivalence: return {"F_W", "F_A", "f_W", "f_A"};
    case ExperimentKind::Boundedness: return {"before", "after"};
    case ExperimentKind::Diagnostics: return {"ap_char", "d", "d_tilde", "delta_cap", "delta_w", "c1", "c2"};
  }
  return {};
}

CubeRange equivalence_family_range(const CubeRange& range) {
  return CubeRange{range.j_min, range.j_max + kPhiBandOffset, false};
}

std::vector<double> four_norms(const SampledField& f, const MatrixWeight& w, const SpaceParams& sp,
                               const CubeRange& range, const ReducingFamily& family) {
  const AdmissiblePair pair = make_admissible_pair();
  const Weighting pw = pointwise(w, sp.p);
  const Weighting cw = cubewise(family);
  const CubeRange cubes{range.j_min + kPhiBandOffset, range.j_max + kPhiBandOffset, false};
  const CoeffSequence s = phi_transform(f, pair, cubes);
  return {tl_norm(f, pw, sp, pair, range).value, tl_norm(f, cw, sp, pair, range).value,
          seq_norm(s, pw, sp, cubes).value, seq_norm(s, cw, sp, cubes).value};
}

SymbolGrid gallery_symbol(const TorusGrid& grid, double order) {
  return SymbolGrid::from_function(grid, [&](const Eigen::Vector2d& x, const Eigen::Vector2d& xi) {
    const double a = 1.0 + 0.5 * std::cos(2.0 * std::numbers::pi * x[0] / grid.side());
    return cplx(a * std::pow(1.0 + xi.squaredNorm(), order / 2));
  });
}

double gallery_multiplier(const Eigen::Vector2d& xi) { return 1.5 + std::sin(2.0 * std::log1p(xi.norm())); }

MultiplierCheck multiplier_check(const SampledField& f, const MatrixWeight& w, const SpaceParams& sp,
                                 const CubeRange& range, const std::function<double(const Eigen::Vector2d&)>& m,
                                 double order) {
  sp.validate();
  validate(range, f.grid, 2);
  const AdmissiblePair pair = make_admissible_pair();
  std::vector<int> levels;
  for (int k = range.j_min; k <= range.j_max; ++k) levels.push_back(k);
  const auto fk = band_outputs(f, pair, levels);
  auto chi = [](double r) { return smooth_step(4.0 * r - 1.0) * smooth_step((4.0 - r) / 2.0); };
  std::vector<SpectralProfile> mk;
  MultiplierCheck out;
  for (int k : levels) {
    mk.push_back([&m, chi, k](const Eigen::Vector2d& xi) { return cplx(m(xi) * chi(std::ldexp(xi.norm(), -k))); });
    const double h2 = profile_h2_norm([&m, chi, k](const Eigen::Vector2d& xi) { return m(std::ldexp(1.0, k) * xi) * chi(xi.norm()); },
                                      0, order, f.grid.dim, 4, f.grid.dim == 1 ? 7 : 4);
    out.h2_sup = std::max(out.h2_sup, h2);
  }
  const auto gk = multiplier_apply(mk, fk, range.j_min);
  const Weighting pw = pointwise(w, sp.p);
  std::vector<Eigen::VectorXd> a, b;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    a.push_back(weighted_magnitude(gk[i], pw, levels[i]));
    b.push_back(weighted_magnitude(fk[i], pw, levels[i]));
  }
  const CubeRange outer = outer_range(f.grid, range);
  out.lhs = bm_seq_norm(a, f.grid, sp.p, sp.t, sp.r, sp.q, outer);
  out.rhs = bm_seq_norm(b, f.grid, sp.p, sp.t, sp.r, sp.q, outer);
  out.constant = out.lhs / (out.rhs * out.h2_sup);
  return out;
}

bool Report::passed() const {
  return std::all_of(cases.begin(), cases.end(), [](const CaseResult& c) { return c.passed; });
}

double Report::max_spread() const {
  double m = 1.0;
  for (const auto& c : cases)
    if (std::isfinite(c.spread)) m = std::max(m, c.spread);
  return m;
}

Report run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  Report rep;
  rep.kind = cfg.kind;
  rep.threshold = cfg.threshold;
  rep.record_timings = cfg.record_timings;
  rep.value_names = value_names(cfg.kind);
  const bool needs_functions = cfg.kind != ExperimentKind::Diagnostics;
  if (needs_functions && cfg.functions.empty()) return rep;

  // A function that cannot be built fails its own cases only.
  std::vector<SampledField> fields;
  std::vector<std::string> field_errors;
  if (needs_functions)
    for (const auto& fs : cfg.functions) {
      try {
        fields.push_back(make_function(cfg.grid, cfg.channels, fs));
        field_errors.emplace_back();
      } catch (const Error& e) {
        fields.emplace_back(cfg.grid, cfg.channels);
        field_errors.emplace_back(e.what());
      }
    }
  std::unique_ptr<SymbolGrid> symbol;
  if (cfg.kind == ExperimentKind::Boundedness && cfg.op.op == "psdo")
    symbol = std::make_unique<SymbolGrid>(gallery_symbol(cfg.grid, cfg.op.gamma));

  for (const auto& sp : cfg.spaces) {
    for (const auto& ws : cfg.weights) {
      // Building the weight or its reducing family can fail; every case of the pair then records it.
      MatrixWeight w;
      ReducingFamily fam;
      std::string setup_error;
      try {
        w = make_weight(cfg.grid, cfg.channels, ws);
        if (cfg.kind == ExperimentKind::Equivalence)
          fam = reducing_operators(w, sp.p, equivalence_family_range(cfg.range));
      } catch (const Error& e) {
        setup_error = e.what();
      }
      const std::size_t n_cases = needs_functions ? cfg.functions.size() : 1;
      for (std::size_t i = 0; i < n_cases; ++i) {
        CaseResult c;
        c.space = space_label(sp);
        c.weight = ws.label();
        c.function = needs_functions ? cfg.functions[i].label() : "";
        c.unverifiable = sp.q > sp.p;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          if (!setup_error.empty()) throw Error(setup_error);
          if (needs_functions && !field_errors[i].empty()) throw Error(field_errors[i]);
          switch (cfg.kind) {
            case ExperimentKind::Equivalence: run_equivalence(cfg, sp, w, fam, fields[i], c); break;
            case ExperimentKind::Boundedness: run_boundedness(cfg, sp, w, fields[i], symbol.get(), c); break;
            case ExperimentKind::Diagnostics: run_diagnostics(cfg, sp, w, c); break;
          }
        } catch (const Error& e) {
          c.values.clear();
          c.ratios.clear();
          c.min_ratio = c.max_ratio = c.spread = kNaN;
          c.passed = false;
          c.error = e.what();
        }
        if (cfg.record_timings)
          c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.cases.push_back(std::move(c));
      }
    }
  }
  return rep;
}

void write_report(std::ostream& os, const Report& r, ReportFormat fmt) {
  if (fmt == ReportFormat::Json) {
    json j;
    j["kind"] = to_string(r.kind);
    j["threshold"] = r.threshold;
    j["record_timings"] = r.record_timings;
    j["value_names"] = r.value_names;
    j["pass"] = r.passed();
    j["max_spread"] = r.max_spread();
    j["cases"] = json::array();
    for (const auto& c : r.cases) j["cases"].push_back(case_json(c, r.record_timings));
    os << j.dump(2) << '\n';
  } else {
    os << "space,weight,function";
    for (const auto& n : r.value_names) os << ',' << n;
    os << ",min_ratio,max_ratio,spread,truncation,truncation_flag,unverifiable,pass,error";
    if (r.record_timings) os << ",seconds";
    os << '\n';
    for (const auto& c : r.cases) {
      os << csv_field(c.space) << ',' << csv_field(c.weight) << ',' << csv_field(c.function);
      for (std::size_t i = 0; i < r.value_names.size(); ++i)
        os << ',' << (i < c.values.size() ? fmt17(c.values[i]) : std::string("nan"));
      os << ',' << fmt17(c.min_ratio) << ',' << fmt17(c.max_ratio) << ',' << fmt17(c.spread) << ','
         << fmt17(c.truncation) << ',' << c.truncation_flag << ',' << c.unverifiable << ',' << c.passed << ','
         << csv_field(c.error);
      if (r.record_timings) os << ',' << fmt17(c.seconds);
      os << '\n';
    }
  }
  if (!os) throw Error("failed to write report");
}

void emit_report(const Report& r, ReportFormat fmt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write report to " + path);
  write_report(out, r, fmt);
}

Report read_report(std::istream& is) {
  try {
    json j;
    is >> j;
    Report r;
    r.kind = experiment_kind(j.at("kind").get<std::string>());
    r.threshold = j.at("threshold").get<double>();
    r.record_timings = j.value("record_timings", false);
    r.value_names = j.at("value_names").get<std::vector<std::string>>();
    for (const auto& c : j.at("cases")) r.cases.push_back(case_from_json(c));
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("bad report: ") + e.what());
  }
}

Report load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open report " + path);
  return read_report(in);
}

}  // namespace bmtl
