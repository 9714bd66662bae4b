#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bmtl/coeff.hpp"
#include "bmtl/harness.hpp"

using namespace bmtl;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kConfigError = 2;

json num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j[key];
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return kInf;
    throw Error(std::string("bad value for ") + key);
  }
  return v.get<double>();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Inline JSON or the path of a JSON file.
json json_arg(const std::string& s) {
  if (s.empty()) return json::object();
  try {
    return json::parse(s.front() == '{' ? s : slurp(s));
  } catch (const json::exception& e) {
    throw Error(std::string("bad JSON parameters: ") + e.what());
  }
}

// Fills options absent from the command line from the keys of a JSON config file.
void apply_config(CLI::App* cmd, const std::string& path) {
  if (path.empty()) return;
  const json cfg = json_arg(path);
  for (CLI::Option* opt : cmd->get_options()) {
    if (opt->count() > 0 || opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    std::string alt = name;
    std::replace(alt.begin(), alt.end(), '-', '_');
    const json* v = cfg.contains(name) ? &cfg[name] : cfg.contains(alt) ? &cfg[alt] : nullptr;
    if (!v) continue;
    opt->add_result(v->is_string() ? v->get<std::string>() : v->dump());
    opt->run_callback();
  }
}

SpaceParams space_params(const json& j) {
  SpaceParams sp;
  sp.s = number(j, "s", 0.0);
  sp.p = number(j, "p", 2.0);
  sp.q = number(j, "q", 2.0);
  sp.t = number(j, "t", sp.p);
  sp.r = number(j, "r", kInf);
  sp.homogeneous = j.value("homogeneous", true);
  sp.validate();
  return sp;
}

CubeRange level_range(const TorusGrid& grid, const json& j, bool inhomogeneous) {
  CubeRange r{j.value("j_min", -grid.side_log2), j.value("j_max", grid.res_log2 - 2), inhomogeneous};
  validate(r, grid, 2);
  return r;
}

MatrixWeight weight_or_identity(const std::string& path, const TorusGrid& grid, int m) {
  if (path.empty()) return MatrixWeight::identity(grid, m);
  MatrixWeight w = MatrixWeight::from_field(load_field(path));
  require(w.grid() == grid, "weight grid does not match the field grid");
  require(w.order() == m, "weight order does not match the field channels");
  return w;
}

json norm_json(const NormReport& r) {
  json j;
  j["value"] = num(r.value);
  j["per_level"] = json::array();
  for (const auto& [lv, v] : r.per_level) j["per_level"].push_back({lv, num(v)});
  j["truncation"] = std::isnan(r.truncation) ? json(nullptr) : num(r.truncation);
  return j;
}

json diagnostics_json(const WeightDiagnostics& d, double p) {
  return {{"p", p},
          {"ap_char", num(d.ap_char)},
          {"beta", num(d.beta)},
          {"d", d.d},
          {"d_tilde", d.d_tilde},
          {"delta_cap", d.delta_cap},
          {"delta_w", d.delta_w},
          {"sandwich", {num(d.sandwich.first), num(d.sandwich.second)}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matrix-weighted Bourgain-Morrey Triebel-Lizorkin toolkit"};
  app.require_subcommand(1);
  std::string config;
  int code = kOk;

  // check-ap
  auto* check = app.add_subcommand("check-ap", "A_p diagnostics of a weight field");
  std::string weight_path, field_path, out_path, params_arg, in_path;
  double p = 2.0;
  int j_min = 0, j_max = 0, dirs = 1000;
  check->add_option("--weight", weight_path, "weight field file (m*m channels)");
  check->add_option("--p", p, "exponent p");
  check->add_option("--j-min", j_min);
  check->add_option("--j-max", j_max);
  check->add_option("--dirs", dirs, "sandwich test directions");
  check->add_option("--config", config);

  // reduce
  auto* reduce = app.add_subcommand("reduce", "reducing operators A_Q of a weight");
  std::string method = "second";
  reduce->add_option("--weight", weight_path);
  reduce->add_option("--p", p);
  reduce->add_option("--j-min", j_min);
  reduce->add_option("--j-max", j_max);
  reduce->add_option("--method", method)->check(CLI::IsMember({"second", "fit"}));
  reduce->add_option("--out", out_path, "JSON output (stdout when omitted)");
  reduce->add_option("--config", config);

  // norm
  auto* norm = app.add_subcommand("norm", "one of the space norms of a field");
  std::string space = "F";
  norm->add_option("--space", space)->check(CLI::IsMember({"F", "f", "peetre", "lusin", "glambda", "approx", "bm"}));
  norm->add_option("--params", params_arg, "inline JSON or JSON file");
  norm->add_option("--field", field_path);
  norm->add_option("--weight", weight_path);
  norm->add_option("--config", config);

  // transform
  auto* transform = app.add_subcommand("transform", "φ-transform or wavelet analysis / synthesis");
  std::string mode = "phi", direction = "analyze";
  int db = 6;
  transform->add_option("--mode", mode)->check(CLI::IsMember({"phi", "wavelet"}));
  transform->add_option("--direction", direction)->check(CLI::IsMember({"analyze", "synthesize"}));
  transform->add_option("--in", in_path);
  transform->add_option("--out", out_path);
  transform->add_option("--db", db);
  transform->add_option("--j-min", j_min);
  transform->add_option("--j-max", j_max);
  transform->add_option("--config", config);

  // bound
  auto* bound = app.add_subcommand("bound", "operator norm ratio on one field");
  std::string op = "hilbert", symbol_path;
  double gamma = 1.0, threshold = 50.0;
  bound->add_option("--op", op)->check(CLI::IsMember({"hilbert", "psdo", "multiplier", "bessel"}));
  bound->add_option("--field", field_path);
  bound->add_option("--weight", weight_path);
  bound->add_option("--params", params_arg);
  bound->add_option("--symbol", symbol_path, "symbol file for psdo (gallery symbol when omitted)");
  bound->add_option("--gamma", gamma, "Bessel order or gallery symbol order");
  bound->add_option("--threshold", threshold);
  bound->add_option("--config", config);

  // equiv / report
  auto* equiv = app.add_subcommand("equiv", "four-norm equivalence sweep");
  equiv->add_option("--config", config);
  auto* report = app.add_subcommand("report", "run any experiment, or convert a JSON report");
  std::string format = "csv";
  report->add_option("--config", config);
  report->add_option("--in", in_path, "existing JSON report");
  report->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  report->add_option("--out", out_path);

  // filter
  auto* filter = app.add_subcommand("filter", "band output φ_j ∗ f");
  int level = 0;
  bool inhom = false;
  filter->add_option("--field", field_path);
  filter->add_option("--level", level);
  filter->add_flag("--inhomogeneous", inhom);
  filter->add_option("--out", out_path);
  filter->add_option("--config", config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    for (auto* cmd : {check, reduce, norm, transform, bound, filter})
      if (cmd->parsed()) apply_config(cmd, config);
    auto need = [](const std::string& v, const char* what) { require(!v.empty(), std::string("missing ") + what); };
    if (check->parsed() || reduce->parsed()) need(weight_path, "--weight");
    if (norm->parsed() || bound->parsed() || filter->parsed()) need(field_path, "--field");
    if (transform->parsed()) need(in_path, "--in");
    if (transform->parsed() || filter->parsed()) need(out_path, "--out");
    if (filter->parsed()) require(filter->count("--level") > 0, "missing --level");

    if (check->parsed() || reduce->parsed()) {
      const MatrixWeight w = MatrixWeight::from_field(load_field(weight_path));
      const auto& grid = w.grid();
      CLI::App* cmd = check->parsed() ? check : reduce;
      const CubeRange range{cmd->count("--j-min") ? j_min : -grid.side_log2,
                            cmd->count("--j-max") ? j_max : grid.res_log2 - 2, false};
      if (check->parsed()) {
        DiagnosticsOptions opt;
        opt.sandwich_dirs = dirs;
        std::cout << diagnostics_json(diagnose(w, p, range, opt), p).dump(2) << '\n';
      } else {
        const auto m = method == "fit" ? ReducingMethod::EllipsoidFit : ReducingMethod::SecondMoment;
        const ReducingFamily fam = reducing_operators(w, p, range, m);
        const auto [c1, c2] = sandwich_constants(w, p, fam, 256);
        json j = {{"p", p}, {"method", method}, {"sandwich", {num(c1), num(c2)}}, {"levels", json::array()}};
        for (int lv = range.first(); lv <= range.last(); ++lv) {
          json cubes = json::array();
          for (const auto& q : cubes_at_level(grid, lv)) {
            const auto a = fam.at(q);
            std::vector<double> flat(a.data(), a.data() + a.size());
            json idx = grid.dim == 2 ? json::array({q.index[0], q.index[1]}) : json::array({q.index[0]});
            cubes.push_back({{"m", idx}, {"A", flat}});
          }
          j["levels"].push_back({{"j", lv}, {"cubes", cubes}});
        }
        if (out_path.empty()) {
          std::cout << j.dump(2) << '\n';
        } else {
          std::ofstream(out_path) << j.dump(2) << '\n';
        }
      }
    } else if (norm->parsed()) {
      const json prm = json_arg(params_arg);
      const SampledField f = load_field(field_path);
      SpaceParams sp = space_params(prm);
      const CubeRange range = level_range(f.grid, prm, !sp.homogeneous);
      const MatrixWeight w = weight_or_identity(weight_path, f.grid, f.channels());
      const Decomposition dec = sp.homogeneous ? Decomposition(make_admissible_pair()) : Decomposition(InhomPartition{});
      const Pointwise pw = pointwise(w, sp.p);
      const bool cube = prm.value("weighting", std::string("pointwise")) == "cubewise";
      NormReport r;
      if (space == "F" || space == "f") {
        CubeRange fam_range = space == "F" ? range : equivalence_family_range(range);
        if (space == "f") require(sp.homogeneous, "the f space uses homogeneous φ-transforms");
        Weighting wt = pw;
        if (cube) wt = Cubewise{reducing_operators(w, sp.p, CubeRange{fam_range.first(), fam_range.j_max, false})};
        if (space == "F") {
          NormOptions opt;
          opt.per_level = true;
          opt.truncation = true;
          r = tl_norm(f, wt, sp, dec, range, opt);
        } else {
          const CubeRange cubes{range.j_min + kPhiBandOffset, range.j_max + kPhiBandOffset, false};
          r = seq_norm(phi_transform(f, make_admissible_pair(), cubes), wt, sp, cubes);
        }
      } else if (space == "peetre") {
        r = peetre_norm(f, pw, sp, number(prm, "a", 2.0), dec, range);
      } else if (space == "lusin") {
        r = lusin_norm(f, pw, sp, dec, range);
      } else if (space == "glambda") {
        r = glambda_norm(f, pw, sp, number(prm, "lambda", 4.0), dec, range, number(prm, "delta_cap", 0.0));
      } else if (space == "approx") {
        r = approx_norm(f, pw, sp, range, number(prm, "delta_cap", 0.0));
      } else {
        Eigen::VectorXd g(f.size());
        for (Index k = 0; k < f.size(); ++k) g[k] = f.values.row(k).norm();
        r.value = bm_norm(g, f.grid, sp.p, sp.t, sp.r, range);
      }
      json j = norm_json(r);
      j["space"] = space;
      j["unverifiable"] = sp.q > sp.p;
      std::cout << j.dump(2) << '\n';
    } else if (transform->parsed()) {
      const bool range_given = transform->count("--j-min") > 0;
      if (direction == "analyze") {
        const SampledField f = load_field(in_path);
        const auto& grid = f.grid;
        CubeRange range{range_given ? j_min : -grid.side_log2 + kPhiBandOffset,
                        transform->count("--j-max") ? j_max : grid.res_log2, false};
        std::ofstream out(out_path);
        if (!out) throw Error("cannot write " + out_path);
        if (mode == "phi") {
          write_sequence(out, phi_transform(f, make_admissible_pair(), range), {"phi", 0, 0, 0});
        } else {
          const int coarsest = range_given ? j_min : 0;
          const WaveletCoeffs w = wavelet_analyze(f, db, coarsest);
          write_sequences(out, w.generators, {"wavelet", db, 0, coarsest});
        }
      } else {
        std::ifstream in(in_path);
        if (!in) throw Error("cannot open " + in_path);
        SequenceFileInfo info;
        auto seqs = read_sequences(in, &info);
        SampledField f;
        if (mode == "phi") {
          require(seqs.size() == 1, "φ coefficient files hold one sequence");
          f = phi_synthesis(seqs.front(), make_admissible_pair());
        } else {
          require(info.mode == "wavelet", "not a wavelet coefficient file");
          WaveletCoeffs w = empty_wavelet_coeffs(seqs.front().grid, seqs.front().channels, info.db_order, info.coarsest);
          require(seqs.size() <= w.generators.size(), "too many generators for the grid dimension");
          for (std::size_t i = 0; i < seqs.size(); ++i) w.generators[i] = std::move(seqs[i]);
          f = wavelet_synthesize(w);
        }
        save_field(out_path, f);
      }
    } else if (bound->parsed()) {
      const json prm = json_arg(params_arg);
      const SampledField f = load_field(field_path);
      const SpaceParams sp = space_params(prm);
      const CubeRange range = level_range(f.grid, prm, !sp.homogeneous);
      const MatrixWeight w = weight_or_identity(weight_path, f.grid, f.channels());
      json j = {{"op", op}, {"threshold", threshold}};
      double ratio = 0;
      bool two_sided = false;
      if (op == "multiplier") {
        const double a = number(prm, "a", f.grid.dim / min_exponent(sp.p, sp.q) + 0.1);
        const double order = a + f.grid.dim / 2.0 + number(prm, "epsilon", 0.1);
        const MultiplierCheck mc = multiplier_check(f, w, sp, range, gallery_multiplier, order);
        j["lhs"] = num(mc.lhs);
        j["rhs"] = num(mc.rhs);
        j["h2_sup"] = num(mc.h2_sup);
        ratio = mc.constant;
      } else {
        const Decomposition dec = sp.homogeneous ? Decomposition(make_admissible_pair()) : Decomposition(InhomPartition{});
        const Pointwise pw = pointwise(w, sp.p);
        SpaceParams in = sp;
        SampledField tf;
        if (op == "hilbert") {
          tf = hilbert_riesz_apply(f, static_cast<int>(number(prm, "component", 1)));
        } else if (op == "bessel") {
          two_sided = true;
          tf = bessel_potential(f, gamma);
          in.s = sp.s - gamma;
        } else {
          const SymbolGrid s = symbol_path.empty() ? gallery_symbol(f.grid, gamma) : load_symbol(symbol_path);
          require(s.grid == f.grid, "symbol grid does not match the field grid");
          tf = psdo_apply(s, f);
          in.s = sp.s + (symbol_path.empty() ? gamma : number(prm, "m", 0.0));
        }
        const double before = tl_norm(f, pw, in, dec, range).value;
        const double after = tl_norm(tf, pw, sp, dec, range).value;
        j["before"] = num(before);
        j["after"] = num(after);
        ratio = after / before;
      }
      const bool pass = std::isfinite(ratio) && ratio <= threshold && (!two_sided || ratio >= 1.0 / threshold);
      j["ratio"] = num(ratio);
      j["pass"] = pass;
      std::cout << j.dump(2) << '\n';
      code = pass ? kOk : kViolation;
    } else if (equiv->parsed() || report->parsed()) {
      Report rep;
      if (report->parsed() && !in_path.empty()) {
        rep = load_report(in_path);
      } else {
        require(!config.empty(), "an experiment config is required");
        ExperimentConfig cfg = load_config(config);
        if (equiv->parsed()) cfg.kind = ExperimentKind::Equivalence;
        rep = run_experiment(cfg);
        if (!cfg.csv_path.empty()) emit_report(rep, ReportFormat::Csv, cfg.csv_path);
        if (!cfg.json_path.empty()) emit_report(rep, ReportFormat::Json, cfg.json_path);
      }
      const ReportFormat fmt = format == "json" ? ReportFormat::Json : ReportFormat::Csv;
      if (!out_path.empty())
        emit_report(rep, fmt, out_path);
      else
        write_report(std::cout, rep, fmt);
      code = rep.passed() ? kOk : kViolation;
    } else if (filter->parsed()) {
      const SampledField f = load_field(field_path);
      const Decomposition dec = inhom ? Decomposition(InhomPartition{}) : Decomposition(make_admissible_pair());
      check_level(f.grid, level, 0);
      save_field(out_path, band_outputs(f, dec, {level}).front());
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return code;
}
