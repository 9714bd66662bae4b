// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "bmtl/coeff.hpp"
#include "bmtl/harness.hpp"
#include "bmtl/operators.hpp"
#include "bmtl/spaces.hpp"

using namespace bmtl;

namespace {

constexpr double kPi = std::numbers::pi;

// Desk scale: n = 1, K = 2, J = 10.
const TorusGrid kDesk{1, 2, 10};
// Dense symbol tables need at most 4096 points; 1024 keeps ψDO runs short.
const TorusGrid kSymbolGrid{1, 2, 8};

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; }

SampledField random_field(const TorusGrid& g, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SampledField f(g, channels);
  for (Index k = 0; k < g.size(); ++k)
    for (int c = 0; c < channels; ++c) f.values(k, c) = uniform(rng);
  return f;
}

double rel_diff(const SampledField& a, const SampledField& b) {
  return (a.values - b.values).norm() / std::max(b.values.norm(), 1e-300);
}

std::vector<SampledField> gallery_fields(const TorusGrid& g, int count, std::uint64_t seed, int lo, int hi, int m = 2) {
  std::vector<SampledField> out;
  for (const auto& spec : function_gallery(count, seed, lo, hi)) out.push_back(make_function(g, m, spec));
  return out;
}

const std::vector<WeightSpec> kWeights{{WeightKind::Power}, {WeightKind::RotatedPower}, {WeightKind::Oscillating}};

struct Extremes {
  double lo = kInf, hi = 0;
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool within(double a, double b) const { return lo >= a && hi <= b; }
  std::string str() const { return "[" + num(lo) + ", " + num(hi) + "]"; }
};

// Δ = d/p + d̃/p' measured on the weight.
double measured_delta(const MatrixWeight& w, double p, const CubeRange& range) {
  const ApDimensions dims = ap_dimensions(w, p, range, 3);
  return dims.delta;
}

Outcome sanity_collapse() {
  Outcome o;
  const CubeRange outer = outer_range(kDesk, {-2, 8, false});
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const SampledField f = random_field(kDesk, 1, seed);
    const Eigen::VectorXd g = f.values.col(0).cwiseAbs();
    const double p = 1 + static_cast<double>(seed % 4);
    const double lp = std::pow(g.array().pow(p).sum() * kDesk.cell_volume(), 1 / p);
    worst = std::max(worst, std::abs(bm_norm(g, kDesk, p, p, kInf, outer) - lp) / lp);
  }
  o.require(worst <= 1e-10, "max relative error " + num(worst) + " over 50 fields (tol 1e-10)");
  return o;
}

Outcome calderon() {
  Outcome o;
  const AdmissiblePair pair = make_admissible_pair();
  const CubeRange range{-2, 8, false};
  double worst = 0;
  for (Index k = 0; k < kDesk.size(); ++k) {
    const double r = kDesk.frequency(k).norm();
    if (r < std::ldexp(1.0, range.j_min) || r > std::ldexp(1.0, range.j_max)) continue;
    double sum = 0;
    for (int v = range.j_min - 1; v <= range.j_max + 1; ++v) sum += pair.phi_level(v, r) * pair.psi_level(v, r);
    worst = std::max(worst, std::abs(sum - 1));
  }
  o.require(worst <= 1e-10, "homogeneous identity error " + num(worst) + " (tol 1e-10)");
  const InhomPartition part;
  const int top = max_partition_level(kDesk);
  double worst_inh = 0;
  for (Index k = 0; k < kDesk.size(); ++k) {
    const double r = kDesk.frequency(k).norm();
    if (r > std::ldexp(1.0, top - 1)) continue;
    double sum = 0;
    for (int j = 0; j <= top; ++j) sum += part.level(j, r);
    worst_inh = std::max(worst_inh, std::abs(sum - 1));
  }
  o.require(worst_inh <= 1e-12, "partition of unity error " + num(worst_inh) + " (tol 1e-12)");
  return o;
}

Outcome sandwich() {
  Outcome o;
  const CubeRange range{-2, 6, false};
  double worst2 = 0;
  for (const auto& spec : weight_gallery()) {
    const MatrixWeight w = make_weight(kDesk, 2, spec);
    const auto [c1, c2] = sandwich_constants(w, 2, reducing_operators(w, 2, range), 1000);
    worst2 = std::max(worst2, c2 / c1);
  }
  o.require(worst2 <= 1 + 1e-8, "p=2 ratio " + num(worst2) + " (tol 1 + 1e-8)");
  for (double p : {1.0, 4.0}) {
    double worst = 0;
    bool fit_better = true;
    for (const auto& spec : weight_gallery()) {
      const MatrixWeight w = make_weight(kDesk, 2, spec);
      const auto [a1, a2] = sandwich_constants(w, p, reducing_operators(w, p, range), 1000);
      const auto [b1, b2] =
          sandwich_constants(w, p, reducing_operators(w, p, range, ReducingMethod::EllipsoidFit, 1000), 1000);
      worst = std::max(worst, a2 / a1);
      if (b2 / b1 > a2 / a1 * (1 + 1e-9)) fit_better = false;
    }
    o.require(worst <= 8, "p=" + num(p) + " second-moment ratio " + num(worst) + " (limit 8)");
    o.require(fit_better, "p=" + num(p) + " ellipsoid fit no worse than second moment");
  }
  return o;
}

ExperimentConfig equivalence_config(int dilation) {
  ExperimentConfig cfg;
  cfg.grid = kDesk;
  cfg.range = CubeRange{-2 + dilation, 6 + dilation, false};
  cfg.channels = 2;
  cfg.spaces = {SpaceParams{0, 2, 2, 3, kInf, true}, SpaceParams{0.5, 4, 2, 6, kInf, true}};
  cfg.weights = kWeights;
  cfg.functions = function_gallery(20, 1, -2, 6);
  for (auto& f : cfg.functions) f.dilation = dilation;
  cfg.threshold = 50;
  return cfg;
}

Outcome equivalence() {
  Outcome o;
  const Report base = run_experiment(equivalence_config(0));
  const Report dil = run_experiment(equivalence_config(1));
  std::size_t errors = 0;
  for (const auto& c : base.cases) errors += !c.error.empty();
  o.require(base.passed() && errors == 0,
            num(static_cast<double>(base.cases.size())) + " cases, max spread " + num(base.max_spread()) + " (limit 50)");
  double change = 0;
  bool aligned = base.cases.size() == dil.cases.size();
  for (std::size_t i = 0; aligned && i < base.cases.size(); ++i)
    change = std::max(change, std::abs(dil.cases[i].spread / base.cases[i].spread - 1));
  o.require(aligned && dil.passed() && change <= 0.10, "spread change under dilation " + num(100 * change) + "% (limit 10%)");
  return o;
}

Outcome almost_diagonal() {
  Outcome o;
  const TorusGrid g{1, 2, 8};
  const CubeRange range{0, 4, false};
  const SpaceParams sp{0.5, 2, 2, 3, kInf, true};
  Extremes ratio;
  for (const auto& spec : kWeights) {
    const MatrixWeight w = make_weight(g, 2, spec);
    const ApDimensions dims = ap_dimensions(w, sp.p, range, 3);
    const ADProfile prof = ADProfile::with_dimensions(sp.s, sp.p, sp.q, 0.5, std::min(dims.d, 0.99), dims.d_tilde);
    const Weighting wt = Cubewise{reducing_operators(w, sp.p, range)};
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      std::mt19937_64 rng(seed);
      CoeffSequence s(g, 2);
      for (int j = range.first(); j <= range.last(); ++j)
        for (const auto& q : cubes_at_level(g, j)) {
          Eigen::VectorXcd v(2);
          v << cplx(uniform(rng), uniform(rng)), cplx(uniform(rng), uniform(rng));
          s.set(q, v);
        }
      const ADResult res = ad_apply(random_ad_entries(g, prof, ADVariant::Weighted, 1.0, 100 + seed), prof,
                                    ADVariant::Weighted, s, range);
      ratio.add(seq_norm(res.out, wt, sp, range).value / seq_norm(s, wt, sp, range).value);
    }
  }
  o.require(ratio.hi <= 50, "ratio range " + ratio.str() + " over 30 pairs (limit 50)");
  return o;
}

Outcome maximal() {
  Outcome o;
  const CubeRange outer = outer_range(kDesk, {-2, 8, false});
  const auto fields = gallery_fields(kDesk, 20, 4, -1, 5, 1);
  Extremes scalar, vector;
  const std::vector<double> exps{1.5, 2, 4};
  const AdmissiblePair pair = make_admissible_pair();
  for (const auto& f : fields) {
    const Eigen::VectorXd g = f.values.col(0).cwiseAbs();
    const Eigen::VectorXd mg = hl_maximal(g, kDesk);
    std::vector<Eigen::VectorXd> gk, mgk;
    for (const auto& b : band_outputs(f, pair, {0, 1, 2, 3})) {
      gk.push_back(b.values.col(0).cwiseAbs());
      mgk.push_back(hl_maximal(gk.back(), kDesk));
    }
    for (double p : exps) {
      scalar.add(bm_norm(mg, kDesk, p, p + 1, kInf, outer) / bm_norm(g, kDesk, p, p + 1, kInf, outer));
      for (double q : exps)
        vector.add(bm_seq_norm(mgk, kDesk, p, p + 1, kInf, q, outer) / bm_seq_norm(gk, kDesk, p, p + 1, kInf, q, outer));
    }
  }
  o.require(scalar.hi <= 50, "scalar ratio " + scalar.str() + " (limit 50)");
  o.require(vector.hi <= 50, "l^q-valued ratio " + vector.str() + " (limit 50)");
  Eigen::VectorXd chi = Eigen::VectorXd::Zero(kDesk.size());
  for (Index k = 0; k < kDesk.size(); ++k)
    if (kDesk.position(k)[0] < 1) chi[k] = 1;
  const double at2 = hl_maximal(chi, kDesk)[kDesk.flat(2 * kDesk.points_per_axis() / kDesk.side())];
  o.require(std::abs(at2 - 0.5) <= 2 * kDesk.spacing(), "M chi(2) = " + num(at2) + " (1/2 within 2h)");
  return o;
}

Outcome characterizations() {
  Outcome o;
  const TorusGrid g{1, 2, 9};
  const CubeRange range{-2, 6, false};
  const CubeRange inh{0, 6, true};
  const AdmissiblePair pair = make_admissible_pair();
  const auto fields = gallery_fields(g, 8, 7, -1, 5);
  Extremes peetre, lusin, glambda, approx;
  for (double p : {2.0, 4.0}) {
    for (const auto& spec : kWeights) {
      const MatrixWeight mw = make_weight(g, 2, spec);
      const double delta = measured_delta(mw, p, range);
      const SpaceParams sp{0.5, p, 2, 1.5 * p, kInf, true};
      const double mpq = std::min(p, sp.q);
      const double a = 1 / mpq + delta + 0.5;
      const double lambda = 1 / mpq + delta + 0.5;
      const SpaceParams sp_inh{1 / std::min(1.0, mpq) + delta + 0.5, p, 2, 1.5 * p, kInf, false};
      const Pointwise w = pointwise(mw, p);
      for (const auto& f : fields) {
        const double base = tl_norm(f, w, sp, pair, range).value;
        peetre.add(peetre_norm(f, w, sp, a, pair, range).value / base);
        lusin.add(lusin_norm(f, w, sp, pair, range).value / base);
        glambda.add(glambda_norm(f, w, sp, lambda, pair, range, delta).value / base);
        const double base_inh = tl_norm(f, w, sp_inh, InhomPartition{}, inh).value;
        approx.add(approx_norm(f, w, sp_inh, inh, delta).value / base_inh);
      }
    }
  }
  o.require(peetre.within(1 - 1e-10, 50), "Peetre/tl " + peetre.str() + " (within [1-1e-10, 50])");
  o.require(lusin.within(1.0 / 50, 50), "Lusin/tl " + lusin.str());
  o.require(glambda.within(1.0 / 50, 50), "g_lambda/tl " + glambda.str());
  o.require(approx.within(1.0 / 50, 50), "approx/tl " + approx.str());
  return o;
}

Outcome wavelets() {
  Outcome o;
  const TorusGrid g{1, 2, 9};
  const int coarsest = -2;
  const CubeRange range{-2, 6, false};
  const CubeRange seq_range{coarsest, g.res_log2 - 1, false};
  const CubeRange fam_range{coarsest, g.res_log2, false};
  const AdmissiblePair pair = make_admissible_pair();
  const SpaceParams sp{0.5, 2, 2, 3, kInf, true};
  Extremes ratio;
  for (const auto& spec : kWeights) {
    const MatrixWeight mw = make_weight(g, 2, spec);
    const Cubewise w{reducing_operators(mw, sp.p, fam_range)};
    for (const auto& f : gallery_fields(g, 8, 9, -1, 5)) {
      const WaveletCoeffs wc = wavelet_analyze(f, 6, coarsest);
      double sum = 0;
      for (int i = 1; i < wc.generator_count(); ++i) sum += seq_norm(wc.generators[static_cast<std::size_t>(i)], w, sp, seq_range).value;
      ratio.add(sum / tl_norm(f, w, sp, pair, range).value);
    }
  }
  o.require(ratio.within(1.0 / 50, 50), "wavelet/tl " + ratio.str());
  double parseval = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SampledField f = random_field(g, 2, seed);
    const double l2 = std::sqrt(f.values.squaredNorm() * g.cell_volume());
    parseval = std::max(parseval, std::abs(wavelet_analyze(f, 6, coarsest).l2() - l2) / l2);
  }
  o.require(parseval <= 1e-10, "Parseval error " + num(parseval) + " (tol 1e-10)");
  const SampledField poly = SampledField::from_function(g, 1, [](const Eigen::Vector2d& x) {
    const double y = x[0] - 1.3;
    return Eigen::VectorXcd::Constant(1, 1 + y - 0.5 * y * y + 0.25 * std::pow(y, 5));
  });
  const WaveletCoeffs pc = wavelet_analyze(poly, 6, 0);
  double worst = 0;
  for (const auto& [q, v] : pc.generators[1].entries) {
    const double margin = 24 * q.side();
    if (q.corner()[0] < margin || q.corner()[0] > g.side() - margin) continue;
    worst = std::max(worst, std::abs(v[0]));
  }
  o.require(worst <= 1e-8, "interior coefficients of a degree-5 polynomial " + num(worst) + " (tol 1e-8)");
  return o;
}

Outcome operators() {
  Outcome o;
  const double L = kDesk.side();
  const SampledField c = SampledField::from_function(
      kDesk, 1, [&](const Eigen::Vector2d& x) { return Eigen::VectorXcd::Constant(1, std::cos(2 * kPi * x[0] / L)); });
  const SampledField s = SampledField::from_function(
      kDesk, 1, [&](const Eigen::Vector2d& x) { return Eigen::VectorXcd::Constant(1, std::sin(2 * kPi * x[0] / L)); });
  const double herr = (hilbert_riesz_apply(c).values - s.values).cwiseAbs().maxCoeff();
  o.require(herr <= 1e-12, "H cos - sin = " + num(herr) + " (tol 1e-12)");

  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::Boundedness;
  cfg.grid = kDesk;
  cfg.range = CubeRange{-2, 6, false};
  cfg.spaces = {SpaceParams{0, 2, 2, 3, kInf, true}, SpaceParams{0.5, 4, 2, 6, kInf, true}};
  cfg.weights = kWeights;
  cfg.functions = function_gallery(8, 11, -1, 5);
  cfg.op.op = "hilbert";
  const Report hr = run_experiment(cfg);
  Extremes hilbert;
  for (const auto& cs : hr.cases) hilbert.add(cs.max_ratio);
  o.require(hr.passed(), "Hilbert tl ratio " + hilbert.str() + " (limit 50)");

  Extremes mult;
  const SpaceParams msp{0.5, 2, 2, 3, kInf, true};
  const double order = 1.0 / std::min({1.0, msp.p, msp.q}) + 0.1 + 0.5 + 0.1;
  for (const auto& spec : kWeights) {
    const MatrixWeight w = make_weight(kDesk, 2, spec);
    for (const auto& f : gallery_fields(kDesk, 4, 13, -1, 5))
      mult.add(multiplier_check(f, w, msp, {-2, 6, false}, gallery_multiplier, order).constant);
  }
  o.require(mult.hi <= 50, "multiplier constant " + mult.str() + " (limit 50)");

  ExperimentConfig bc = cfg;
  bc.op.op = "bessel";
  bc.range = CubeRange{0, 6, true};
  bc.spaces = {SpaceParams{0.5, 2, 2, 3, kInf, false}, SpaceParams{1, 4, 2, 6, kInf, false}};
  Extremes bessel;
  bool bessel_ok = true;
  for (double gamma : {-1.0, 1.0, 2.0}) {
    bc.op.gamma = gamma;
    const Report br = run_experiment(bc);
    bessel_ok = bessel_ok && br.passed();
    for (const auto& cs : br.cases) bessel.add(cs.max_ratio);
  }
  o.require(bessel_ok, "Bessel ratio " + bessel.str() + " (within [1/50, 50])");

  ExperimentConfig pc = bc;
  pc.op.op = "psdo";
  pc.grid = kSymbolGrid;
  pc.range = CubeRange{0, 5, true};
  pc.spaces = {SpaceParams{1.5, 2, 2, 3, kInf, false}};
  pc.functions = function_gallery(6, 17, 0, 5);
  Extremes psdo;
  bool psdo_ok = true;
  for (double m : {-1.0, 0.5, 1.0}) {
    pc.op.gamma = m;
    const Report pr = run_experiment(pc);
    psdo_ok = psdo_ok && pr.passed();
    for (const auto& cs : pr.cases) psdo.add(cs.max_ratio);
  }
  o.require(psdo_ok, "S^m_{1,0} psdo ratio " + psdo.str() + " (limit 50)");

  // Elementary symbol with σ_j = 2^{jm} (1 + cos(2π k_j x / L) / 2), k_j ≈ 2^{jδ} L, δ = 1/2.
  const double m = 0.5, delta = 0.5;
  std::vector<SampledField> sigma;
  for (int j = 1; j <= max_partition_level(kSymbolGrid) - 1; ++j) {
    const double kj = std::round(std::pow(2.0, j * delta) * kSymbolGrid.side());
    sigma.push_back(SampledField::from_function(kSymbolGrid, 1, [&](const Eigen::Vector2d& x) {
      return Eigen::VectorXcd::Constant(1, std::pow(2.0, j * m) *
                                               (1 + 0.5 * std::cos(2 * kPi * kj * x[0] / kSymbolGrid.side())));
    }));
  }
  const SymbolGrid el = elementary_symbol(sigma, default_ring_profile());
  const SpaceParams esp{1.5, 2, 2, 3, kInf, false};
  SpaceParams in = esp;
  in.s += m;
  Extremes elem;
  for (const auto& spec : kWeights) {
    const Pointwise w = pointwise(make_weight(kSymbolGrid, 2, spec), esp.p);
    for (const auto& f : gallery_fields(kSymbolGrid, 6, 19, 0, 5))
      elem.add(tl_norm(psdo_apply(el, f), w, esp, InhomPartition{}, pc.range).value /
               tl_norm(f, w, in, InhomPartition{}, pc.range).value);
  }
  o.require(elem.hi <= 50, "elementary symbol ratio " + elem.str() + " (limit 50)");
  return o;
}

Outcome oracles() {
  Outcome o;
  const TorusGrid& g = kSymbolGrid;
  const SampledField f = random_field(g, 2, 23);
  const SpectralProfile mult = [](const Eigen::Vector2d& xi) { return cplx(gallery_multiplier(xi)); };
  const SymbolGrid ms = SymbolGrid::from_function(g, [&](const Eigen::Vector2d&, const Eigen::Vector2d& xi) { return mult(xi); });
  const double e1 = rel_diff(psdo_apply(ms, f), multiplier_apply({mult}, {f})[0]);
  o.require(e1 <= 1e-10, "multiplier symbol " + num(e1) + " (tol 1e-10)");

  auto a = [&](const Eigen::Vector2d& x) { return 2 + std::sin(2 * kPi * x[0] / g.side()); };
  const SymbolGrid as = SymbolGrid::from_function(g, [&](const Eigen::Vector2d& x, const Eigen::Vector2d&) { return cplx(a(x)); });
  SampledField af = f;
  for (Index k = 0; k < g.size(); ++k) af.values.row(k) *= a(g.position(k));
  const double e2 = rel_diff(psdo_apply(as, f), af);
  o.require(e2 <= 1e-10, "multiplication symbol " + num(e2) + " (tol 1e-10)");

  const SymbolGrid gs = gallery_symbol(g, 1.0);
  const double e3 = (paradecompose(gs).reconstruct().values - gs.values).cwiseAbs().maxCoeff() / gs.values.cwiseAbs().maxCoeff();
  o.require(e3 <= 1e-8, "paradecomposition " + num(e3) + " (tol 1e-8)");

  const AdmissiblePair pair = make_admissible_pair();
  double e4 = 0;
  for (const auto& h : gallery_fields(kDesk, 8, 29, -1, 5))
    e4 = std::max(e4, rel_diff(phi_synthesis(phi_transform(h, pair, {0, 8, false}), pair), h));
  o.require(e4 <= 1e-8, "phi-transform round trip " + num(e4) + " (tol 1e-8)");

  double e5 = 0;
  for (int db : {2, 6, 10}) {
    const SampledField h = random_field(kDesk, 2, 31 + static_cast<std::uint64_t>(db));
    e5 = std::max(e5, rel_diff(wavelet_synthesize(wavelet_analyze(h, db, -2)), h));
  }
  o.require(e5 <= 1e-10, "wavelet round trip " + num(e5) + " (tol 1e-10)");
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "sanity collapse", 10, sanity_collapse},
      {2, "Calderon identity", 1, calderon},
      {3, "reducing-operator sandwich", 60, sandwich},
      {4, "four-norm equivalence", 300, equivalence},
      {5, "almost-diagonal boundedness", 120, almost_diagonal},
      {6, "maximal boundedness", 60, maximal},
      {7, "characterization equivalences", 600, characterizations},
      {8, "wavelet characterization", 180, wavelets},
      {9, "operator boundedness", 600, operators},
      {10, "oracle equivalences", 120, oracles},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s %2d %s: %s; %.2f s (limit %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                c.limit_seconds);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
