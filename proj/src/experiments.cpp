#include "lod2s/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace lod2s {

namespace fs = std::filesystem;

const char* version() { return "lod2s 1.0.0"; }

StudyKind parse_study(const std::string& name) {
  if (name == "decay") return StudyKind::decay;
  if (name == "quasiopt") return StudyKind::quasiopt;
  if (name == "sweep") return StudyKind::sweep;
  if (name == "single") return StudyKind::single;
  throw ConfigurationError("unknown study '" + name + "' (decay, quasiopt, sweep, single)");
}

std::string study_name(StudyKind s) {
  switch (s) {
    case StudyKind::decay: return "decay";
    case StudyKind::quasiopt: return "quasiopt";
    case StudyKind::sweep: return "sweep";
    default: return "single";
  }
}

namespace {

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  std::vector<T> out;
  std::string tok;
  while (is >> tok) {
    std::istringstream ts(tok);
    T v{};
    if (!(ts >> v) || !ts.eof()) throw ConfigurationError("config: bad value '" + tok + "' for " + key);
    out.push_back(v);
  }
  if (out.empty()) throw ConfigurationError("config: empty value for " + key);
  return out;
}

template <typename T>
T parse_one(const std::string& key, const std::string& value) {
  const auto v = parse_list<T>(key, value);
  if (v.size() != 1) throw ConfigurationError("config: expected a single value for " + key);
  return v[0];
}

Complex parse_complex(const std::string& key, const std::string& value) {
  const auto v = parse_list<double>(key, value);
  if (v.size() > 2) throw ConfigurationError("config: expected 're [im]' for " + key);
  return {v[0], v.size() == 2 ? v[1] : 0.0};
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigurationError("config: expected a boolean for " + key);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::string fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

BoundaryDatum datum(const ExperimentConfig& cfg, double k) {
  return cfg.zero_datum ? BoundaryDatum::constant(0.0) : BoundaryDatum::plane_wave(k);
}

int resolve_m(const ExperimentConfig& cfg, double k, double beta) {
  return cfg.m >= 0 ? cfg.m : auto_oversampling(k, beta);
}

const char* kind_name(Component c) {
  switch (c) {
    case Component::macro: return "macro";
    case Component::star: return "star";
    default: return "incl";
  }
}

// first local vertex of T that carries a coarse dof
int first_local(const CorrectorContext& ctx, Component c, int T) {
  for (int j = 0; j < 3; ++j)
    if (ctx.coarse_dofmap(c).dof(ctx.coarse_mesh(c).triangle(T)[j]) >= 0) return j;
  return -1;
}

StudyResult make_result(const ExperimentConfig& cfg, const std::string& name, std::vector<std::string> columns) {
  StudyResult r;
  r.name = name;
  r.columns = std::move(columns);
  r.provenance = "config_hash=" + cfg.hash() + " version=" + version();
  return r;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(g_side > 0.0) || !(omega_side > 0.0) || !(d_side > 0.0)) throw ConfigurationError("config: lengths must be positive");
  if (!(omega_side < g_side)) throw ConfigurationError("config: Omega must lie strictly inside G");
  if (!(d_side < 1.0)) throw ConfigurationError("config: D must lie strictly inside Y");
  if (k_list.empty()) throw ConfigurationError("config: k list is empty");
  for (double k : k_list)
    if (!(k > 0.0)) throw ConfigurationError("config: wave numbers must be positive");
  if (macro_n < 1 || cell_n < 1) throw ConfigurationError("config: mesh subdivisions must be positive");
  if (macro_levels < 1 || cell_levels < 1)
    throw ConfigurationError("config: the fine meshes need at least one refinement of the coarse meshes");
  for (int n : coarse_sweep)
    if (n < 1) throw ConfigurationError("config: coarse sweep entries must be positive");
  if (!(kh > 0.0)) throw ConfigurationError("config: kh must be positive");
  if (m < -1) throw ConfigurationError("config: m must be 'auto' or nonnegative");
  if (decay_mmax < 1 || decay_seeds < 1) throw ConfigurationError("config: decay settings must be positive");
  if (threads < 1) throw ConfigurationError("config: threads must be positive");
  if (dump_grid < 1) throw ConfigurationError("config: dump grid must be positive");
  params(k_list.front()).validate();
}

ProblemParams ExperimentConfig::params(double k) const {
  ProblemParams p;
  p.eps_e = eps_e;
  p.eps_i = eps_i;
  p.k = k;
  return p;
}

HierarchySpec ExperimentConfig::hierarchy(int mn, int cn) const {
  HierarchySpec s;
  s.macro = SquareDomain::macro(g_side, omega_side);
  s.cell = SquareDomain::cell(d_side);
  s.macro_n = mn;
  s.cell_n = cn;
  s.macro_levels = macro_levels;
  s.cell_levels = cell_levels;
  return s;
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "geometry.g_side=" << g_side << "\ngeometry.omega_side=" << omega_side << "\ngeometry.d_side=" << d_side;
  os << "\nparams.eps_e=" << eps_e.real() << ' ' << eps_e.imag() << "\nparams.eps_i=" << eps_i.real() << ' '
     << eps_i.imag() << "\nparams.k=";
  for (double k : k_list) os << k << ' ';
  os << "\nparams.datum=" << (zero_datum ? "zero" : "plane_wave");
  os << "\nmesh.macro_n=" << macro_n << "\nmesh.cell_n=" << cell_n << "\nmesh.macro_levels=" << macro_levels
     << "\nmesh.cell_levels=" << cell_levels << "\nmesh.coarse_sweep=";
  for (int n : coarse_sweep) os << n << ' ';
  os << "\nmesh.sweep_cell=" << sweep_cell << "\nmesh.kh=" << kh;
  os << "\nmethod.m=" << m << "\nmethod.decay_mmax=" << decay_mmax << "\nmethod.decay_seeds=" << decay_seeds;
  os << "\nrun.study=" << study_name(study) << "\nrun.seed=" << seed << "\nrun.dump_grid=" << dump_grid
     << "\nrun.single_reference=" << single_reference << "\nrun.infsup_max_dim=" << infsup_max_dim << '\n';
  return os.str();
}

std::string ExperimentConfig::hash() const { return fnv1a(canonical()); }

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "geometry.g_side") c.g_side = parse_one<double>(key, value);
  else if (key == "geometry.omega_side") c.omega_side = parse_one<double>(key, value);
  else if (key == "geometry.d_side") c.d_side = parse_one<double>(key, value);
  else if (key == "params.eps_e") c.eps_e = parse_complex(key, value);
  else if (key == "params.eps_i") c.eps_i = parse_complex(key, value);
  else if (key == "params.inv_eps_i") c.eps_i = 1.0 / parse_complex(key, value);
  else if (key == "params.k") c.k_list = parse_list<double>(key, value);
  else if (key == "params.datum") {
    if (value != "zero" && value != "plane_wave") throw ConfigurationError("config: datum must be plane_wave or zero");
    c.zero_datum = value == "zero";
  } else if (key == "mesh.macro_n") c.macro_n = parse_one<int>(key, value);
  else if (key == "mesh.cell_n") c.cell_n = parse_one<int>(key, value);
  else if (key == "mesh.macro_levels") c.macro_levels = parse_one<int>(key, value);
  else if (key == "mesh.cell_levels") c.cell_levels = parse_one<int>(key, value);
  else if (key == "mesh.coarse_sweep") c.coarse_sweep = parse_list<int>(key, value);
  else if (key == "mesh.sweep_cell") c.sweep_cell = parse_bool(key, value);
  else if (key == "mesh.kh") c.kh = parse_one<double>(key, value);
  else if (key == "method.m") c.m = value == "auto" ? -1 : parse_one<int>(key, value);
  else if (key == "method.decay_mmax") c.decay_mmax = parse_one<int>(key, value);
  else if (key == "method.decay_seeds") c.decay_seeds = parse_one<int>(key, value);
  else if (key == "run.study") c.study = parse_study(value);
  else if (key == "run.out") c.out = value;
  else if (key == "run.seed") c.seed = parse_one<std::uint64_t>(key, value);
  else if (key == "run.threads") c.threads = parse_one<int>(key, value);
  else if (key == "run.dump_grid") c.dump_grid = parse_one<int>(key, value);
  else if (key == "run.single_reference") c.single_reference = parse_bool(key, value);
  else if (key == "run.infsup_max_dim") c.infsup_max_dim = parse_one<int>(key, value);
  else throw ConfigurationError("config: unknown key '" + key + "'");
}

ExperimentConfig load_config(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigurationError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigurationError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) apply_setting(cfg, section + "." + key, value.get_value<std::string>());
  }
  cfg.validate();
  return cfg;
}

double StudyResult::fitted_value(const std::string& key) const {
  for (const auto& [k, v] : fitted)
    if (k == key) return v;
  throw ArgumentError("study result has no fitted value '" + key + "'");
}

void write_result(const StudyResult& r, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const fs::path base = fs::path(out_dir) / r.name;
  {
    std::ofstream os(base.string() + ".csv");
    for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << r.columns[i];
    os << '\n';
    for (const auto& row : r.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << fmt(row[i]);
      os << '\n';
    }
  }
  {
    std::ofstream os(base.string() + ".dat");
    os << '#';
    for (const auto& c : r.columns) os << ' ' << c;
    os << '\n';
    for (const auto& row : r.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? " " : "") << fmt(row[i]);
      os << '\n';
    }
  }
  {
    std::ofstream os(base.string() + ".meta");
    for (const auto& [k, v] : r.fitted) os << k << " = " << fmt(v) << '\n';
    os << "provenance = " << r.provenance << '\n';
  }
  if (!fs::exists(base.string() + ".csv")) throw ConfigurationError("could not write results to " + out_dir);
}

double calibrate_beta(const Hierarchy& h, const ProblemParams& p, int m_max) {
  const CorrectorContext ctx(h.fine, h.coarse, h.interp, p);
  double beta = 0.0;
  for (Component c : {Component::macro, Component::star, Component::incl}) {
    const auto seeds = ctx.seeds(c);
    if (seeds.empty()) continue;
    // middle seed, stepping forward until a triangle with a dof is found
    for (std::size_t s = seeds.size() / 2; s < seeds.size(); ++s) {
      const int j = first_local(ctx, c, seeds[s]);
      if (j < 0) continue;
      const DecayProfile d = corrector_decay_profile(ctx, c, seeds[s], j, m_max);
      const DecayFit f = fit_decay(d.tail, d.saturated);
      if (f.points >= 2) beta = std::max(beta, f.beta);
      break;
    }
  }
  if (!(beta > 0.0) || beta >= 1.0)
    throw CorrectorError("calibration: no decay observed; use finer meshes or set m explicitly");
  return beta;
}

StudyResult run_decay_study(const ExperimentConfig& cfg) {
  cfg.validate();
  StudyResult r = make_result(cfg, "decay", {"level", "kind", "triangle", "local", "m", "tail", "localization_error"});
  const double k = cfg.k_list.front();
  const ProblemParams p = cfg.params(k);
  for (int level = 0; level < 2; ++level) {
    HierarchySpec spec = cfg.hierarchy(cfg.macro_n, cfg.cell_n);
    spec.macro_levels += level;
    spec.cell_levels += level;
    const auto h = make_hierarchy(spec);
    const CorrectorContext ctx(h->fine, h->coarse, h->interp, p);
    for (Component c : {Component::macro, Component::star, Component::incl}) {
      auto seeds = ctx.seeds(c);
      std::erase_if(seeds, [&](int T) { return first_local(ctx, c, T) < 0; });
      if (seeds.empty()) continue;
      // the same seeds on both levels: drawn once per kind on level 0
      std::vector<int> chosen;
      std::vector<int> pool = seeds;
      std::mt19937_64 local_rng(cfg.seed * 1000003ULL + static_cast<std::uint64_t>(c));
      for (int i = 0; i < cfg.decay_seeds && !pool.empty(); ++i) {
        const std::size_t pick = local_rng() % pool.size();
        chosen.push_back(pool[pick]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
      }
      std::sort(chosen.begin(), chosen.end());
      double beta = 0.0, r2 = 1.0;
      for (int T : chosen) {
        const int j = first_local(ctx, c, T);
        const DecayProfile d = corrector_decay_profile(ctx, c, T, j, cfg.decay_mmax);
        for (std::size_t m = 0; m < d.tail.size(); ++m)
          r.rows.push_back({double(level), double(static_cast<int>(c)), double(T), double(j), double(m), d.tail[m],
                            d.localization_error[m]});
        const DecayFit f = fit_decay(d.tail, d.saturated);
        beta = std::max(beta, f.beta);
        r2 = std::min(r2, f.r2);
      }
      const std::string suffix = level == 0 ? "" : "_refined";
      r.fitted.emplace_back(std::string("beta_") + kind_name(c) + suffix, beta);
      r.fitted.emplace_back(std::string("r2_min_") + kind_name(c) + suffix, r2);
    }
  }
  return r;
}

StudyResult run_quasiopt_study(const ExperimentConfig& cfg) {
  cfg.validate();
  StudyResult r = make_result(cfg, "quasiopt", {"n", "H_c", "h_c", "m", "error", "best", "ratio", "dimension"});
  const double k = cfg.k_list.front();
  const ProblemParams p = cfg.params(k);
  const BoundaryDatum g = datum(cfg, k);
  std::vector<int> sweep = cfg.coarse_sweep;
  std::sort(sweep.begin(), sweep.end());
  double beta = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> hs, errs, ratios;
  for (int n : sweep) {
    const auto h = make_hierarchy(cfg.hierarchy(n, cfg.sweep_cell ? n : cfg.cell_n));
    if (cfg.m < 0 && std::isnan(beta)) beta = calibrate_beta(*h, p);
    const int m = resolve_m(cfg, k, beta);
    const SolveReport ref = solve_reference(h->fine, p, g);
    const LodRun run = solve_lod(*h, p, g, m, cfg.threads);
    const ErrorReport e = error_energy(*h, k, ref, run.report);
    const double Hc = h->coarse.macro_mesh->mesh_size(), hc = h->coarse.cell_mesh->mesh_size();
    r.rows.push_back({double(n), Hc, hc, double(m), e.error, e.best, e.ratio, double(run.report.dimension)});
    hs.push_back(Hc + hc);
    errs.push_back(e.error);
    ratios.push_back(e.ratio);
  }
  const double rmax = *std::max_element(ratios.begin(), ratios.end());
  const double rmin = *std::min_element(ratios.begin(), ratios.end());
  r.fitted.emplace_back("beta", beta);
  r.fitted.emplace_back("ratio_max", rmax);
  r.fitted.emplace_back("ratio_spread", rmax / rmin);
  if (hs.size() >= 2) {
    double mx = 0, my = 0, sxx = 0, sxy = 0;
    const double n = double(hs.size());
    for (std::size_t i = 0; i < hs.size(); ++i) {
      mx += std::log(hs[i]) / n;
      my += std::log(errs[i]) / n;
    }
    for (std::size_t i = 0; i < hs.size(); ++i) {
      sxx += (std::log(hs[i]) - mx) * (std::log(hs[i]) - mx);
      sxy += (std::log(hs[i]) - mx) * (std::log(errs[i]) - my);
    }
    r.fitted.emplace_back("error_rate", sxy / sxx);
  }
  return r;
}

StudyResult run_pollution_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  StudyResult r = make_result(cfg, "sweep",
                              {"k", "n", "m", "lod_error", "coarse_error", "best", "lod_ratio", "coarse_ratio",
                               "infsup_reference", "infsup_lod", "infsup_coarse"});
  std::vector<double> ks = cfg.k_list;
  std::sort(ks.begin(), ks.end());
  double beta = std::numeric_limits<double>::quiet_NaN();
  for (double k : ks) {
    const ProblemParams p = cfg.params(k);
    const BoundaryDatum g = datum(cfg, k);
    const int n = std::max(1, static_cast<int>(std::lround(k / cfg.kh)));
    const auto h = make_hierarchy(cfg.hierarchy(n, cfg.cell_n));
    if (cfg.m < 0 && std::isnan(beta)) beta = calibrate_beta(*h, p);
    const int m = resolve_m(cfg, k, beta);
    const SolveReport ref = solve_reference(h->fine, p, g);
    const LodRun run = solve_lod(*h, p, g, m, cfg.threads);
    const SolveReport cg = solve_coarse_galerkin(*h, p, g);
    const ErrorReport el = error_energy(*h, k, ref, run.report);
    const ErrorReport ec = error_energy(*h, k, ref, cg);
    const double inf_ref = infsup_estimate(h->fine, p, OperatorBases::identity(h->fine), cfg.infsup_max_dim);
    const double inf_lod = infsup_estimate(h->fine, p, lod_bases(h->interp, run.correctors), cfg.infsup_max_dim);
    const double inf_cg = infsup_estimate(h->fine, p, coarse_bases(h->interp), cfg.infsup_max_dim);
    r.rows.push_back({k, double(n), double(m), el.error, ec.error, el.best, el.ratio, ec.ratio, inf_ref, inf_lod, inf_cg});
  }
  r.fitted.emplace_back("beta", beta);
  r.fitted.emplace_back("lod_ratio_growth", r.rows.back()[6] / r.rows.front()[6]);
  r.fitted.emplace_back("coarse_ratio_growth", r.rows.back()[7] / r.rows.front()[7]);
  return r;
}

StudyResult run_single(const ExperimentConfig& cfg) {
  cfg.validate();
  StudyResult r = make_result(cfg, "single", {"k", "m", "dimension", "residual", "error", "best", "ratio"});
  const double k = cfg.k_list.front();
  const ProblemParams p = cfg.params(k);
  const BoundaryDatum g = datum(cfg, k);
  const auto h = make_hierarchy(cfg.hierarchy(cfg.macro_n, cfg.cell_n));
  const int m = cfg.m >= 0 ? cfg.m : auto_oversampling(k, calibrate_beta(*h, p));

  // correctors depend on the geometry, parameters, meshes and m only
  ExperimentConfig key = cfg;
  key.k_list = {k};
  key.study = StudyKind::single;
  key.m = m;
  key.zero_datum = false;
  key.seed = 0;
  key.dump_grid = 1;
  key.single_reference = false;
  key.coarse_sweep = {1};
  const fs::path cache = fs::path(cfg.out) / "cache" / ("correctors_" + key.hash() + ".txt");

  const auto t0 = std::chrono::steady_clock::now();
  CorrectorSet Q;
  bool cached = false;
  if (fs::exists(cache)) {
    std::ifstream is(cache);
    Q = read_correctors(is);
    cached = true;
  } else {
    const CorrectorContext ctx(h->fine, h->coarse, h->interp, p);
    Q = build_corrected_test_basis(ctx, m, cfg.threads);
    fs::create_directories(cache.parent_path());
    std::ofstream os(cache);
    write_correctors(os, Q);
  }
  const double tc = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  SolveReport lod = solve_lod(*h, p, g, Q);
  lod.timing.correctors = tc;

  ErrorReport e;
  e.error = e.best = e.ratio = std::numeric_limits<double>::quiet_NaN();
  if (cfg.single_reference) {
    const SolveReport ref = solve_reference(h->fine, p, g);
    e = error_energy(*h, k, ref, lod);
  }
  r.rows.push_back({k, double(m), double(lod.dimension), lod.residual, e.error, e.best, e.ratio});
  r.fitted.emplace_back("m", m);

  fs::create_directories(cfg.out);
  {
    std::ofstream os(fs::path(cfg.out) / "single_solution.txt");
    write_solution(os, lod.solution);
  }
  {
    std::ofstream os(fs::path(cfg.out) / "single_field.dat");
    write_field_dump(os, *h->coarse.macro_mesh, h->coarse.macro, lod.solution.macro, cfg.dump_grid);
  }
  {
    std::ofstream os(fs::path(cfg.out) / "single.timing");
    os << "correctors = " << tc << (cached ? " (cached)" : "") << "\nassembly = " << lod.timing.assembly
       << "\nsolve = " << lod.timing.solve << '\n';
  }
  return r;
}

StudyResult run_study(const ExperimentConfig& cfg) {
  switch (cfg.study) {
    case StudyKind::decay: return run_decay_study(cfg);
    case StudyKind::quasiopt: return run_quasiopt_study(cfg);
    case StudyKind::sweep: return run_pollution_sweep(cfg);
    default: return run_single(cfg);
  }
}

}  // namespace lod2s
