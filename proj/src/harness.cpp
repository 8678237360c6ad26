#include "magheat/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "magheat/decay.hpp"
#include "magheat/discretize.hpp"
#include "magheat/error.hpp"
#include "magheat/evolve.hpp"
#include "magheat/exact.hpp"
#include "magheat/krylov.hpp"
#include "magheat/quadrature.hpp"
#include "magheat/spectral.hpp"

namespace magheat {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* const kVersion = "magheat 0.1.0";

const std::pair<ExperimentKind, const char*> kKindNames[] = {
    {ExperimentKind::Flux, "flux"},
    {ExperimentKind::GaugeCheck, "gauge-check"},
    {ExperimentKind::SpectrumExact, "spectrum-exact"},
    {ExperimentKind::SpectrumNumeric, "spectrum-numeric"},
    {ExperimentKind::LambdaCurve, "lambda-curve"},
    {ExperimentKind::Hardy, "hardy"},
    {ExperimentKind::Evolve, "evolve"},
    {ExperimentKind::DecayReport, "decay-report"},
};

} // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "flux";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (const auto& [k, n] : kKindNames)
    if (name == n) return k;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// Config serialization

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"kind", to_string(c.kind)},
           {"name", c.name},
           {"field", c.field},
           {"R_dom", c.R_dom},
           {"N", c.N},
           {"s_values", c.s_values},
           {"harmonic", c.harmonic},
           {"count", c.count},
           {"k", c.k},
           {"radial_R_max", c.radial_R_max},
           {"radial_M", c.radial_M},
           {"hardy_R", c.hardy_R},
           {"hardy_h", c.hardy_h},
           {"frame", c.frame},
           {"datum", c.datum},
           {"T", c.T},
           {"dt", c.dt},
           {"h_physical", c.h_physical},
           {"S", c.S},
           {"ds", c.ds},
           {"eig_tol", c.eig_tol},
           {"cg_rtol", c.cg_rtol},
           {"output_dir", c.output_dir},
           {"seed", c.seed}};
  j["flux"] = c.flux ? json(*c.flux) : json(nullptr);
  j["s"] = c.s ? json(*c.s) : json(nullptr);
  j["window_start"] = c.window_start ? json(*c.window_start) : json(nullptr);
  j["window_end"] = c.window_end ? json(*c.window_end) : json(nullptr);
}

namespace {

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config field '" + key + "': " + e.what());
  }
}

std::optional<double> get_optional(const json& j, const std::string& key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get_as<double>(j, key);
}

} // namespace

void from_json(const json& j, ExperimentConfig& c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{
      "kind", "name", "field", "flux", "R_dom", "N", "s_values", "s", "harmonic",
      "count", "k", "radial_R_max", "radial_M", "hardy_R", "hardy_h", "frame", "datum",
      "T", "dt", "h_physical", "S", "ds", "window_start", "window_end", "eig_tol",
      "cg_rtol", "output_dir", "seed"};
  for (const auto& item : j.items())
    if (!known.count(item.key())) throw ConfigError("unknown config field '" + item.key() + "'");
  ExperimentConfig out;
  if (j.contains("kind")) out.kind = parse_experiment_kind(get_as<std::string>(j, "kind"));
  if (j.contains("name")) out.name = get_as<std::string>(j, "name");
  if (j.contains("field")) {
    try {
      out.field = j.at("field").get<FieldSpec>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config field 'field': ") + e.what());
    }
  }
  out.flux = get_optional(j, "flux");
  out.s = get_optional(j, "s");
  out.window_start = get_optional(j, "window_start");
  out.window_end = get_optional(j, "window_end");
#define MAGHEAT_READ(key, type) \
  if (j.contains(#key)) out.key = get_as<type>(j, #key)
  MAGHEAT_READ(R_dom, double);
  MAGHEAT_READ(N, int);
  MAGHEAT_READ(s_values, std::vector<double>);
  MAGHEAT_READ(harmonic, bool);
  MAGHEAT_READ(count, int);
  MAGHEAT_READ(k, int);
  MAGHEAT_READ(radial_R_max, double);
  MAGHEAT_READ(radial_M, int);
  MAGHEAT_READ(hardy_R, std::vector<double>);
  MAGHEAT_READ(hardy_h, double);
  MAGHEAT_READ(frame, std::string);
  MAGHEAT_READ(datum, std::string);
  MAGHEAT_READ(T, double);
  MAGHEAT_READ(dt, double);
  MAGHEAT_READ(h_physical, double);
  MAGHEAT_READ(S, double);
  MAGHEAT_READ(ds, double);
  MAGHEAT_READ(eig_tol, double);
  MAGHEAT_READ(cg_rtol, double);
  MAGHEAT_READ(output_dir, std::string);
  MAGHEAT_READ(seed, std::uint64_t);
#undef MAGHEAT_READ
  validate(out);
  c = std::move(out);
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("config: " + msg);
  };
  make_field(c.field);  // validates the preset
  require(c.R_dom > 0.0 && std::isfinite(c.R_dom), "R_dom must be > 0");
  require(c.N >= 16, "N must be >= 16");
  for (double s : c.s_values) require(s >= 0.0 && std::isfinite(s), "s_values must be >= 0");
  require(!c.s || *c.s >= 0.0, "s must be >= 0");
  require(c.count >= 1, "count must be >= 1");
  require(c.k >= 1, "k must be >= 1");
  require(c.radial_R_max > 0.0, "radial_R_max must be > 0");
  require(c.radial_M >= 8, "radial_M must be >= 8");
  for (double r : c.hardy_R) require(r > 0.0, "hardy_R entries must be > 0");
  require(c.hardy_h > 0.0, "hardy_h must be > 0");
  parse_frame(c.frame);
  parse_initial_datum(c.datum);
  require(c.T > 0.0 && c.dt > 0.0 && c.dt <= c.T, "need 0 < dt <= T");
  require(c.h_physical > 0.0, "h_physical must be > 0");
  require(c.S > 0.0 && c.ds > 0.0 && c.ds <= 0.05 + 1e-12, "need S > 0 and 0 < ds <= 0.05");
  require(c.eig_tol > 0.0, "eig_tol must be > 0");
  require(c.cg_rtol > 0.0 && c.cg_rtol < 1.0, "cg_rtol must lie in (0, 1)");
  if (c.window_start && c.window_end) require(*c.window_end > *c.window_start, "empty fit window");
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return j.get<ExperimentConfig>();
}

void to_json(json& j, const RunRecord& r) {
  j = json{{"config", r.config},       {"outputs", r.outputs}, {"wall_seconds", r.wall_seconds},
           {"version", r.version},     {"summary", r.summary}, {"pass", r.pass}};
}

RunRecord load_record(const fs::path& path) {
  fs::path file = fs::is_directory(path) ? path / "record.json" : path;
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open record " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("record " + file.string() + " is not valid JSON: " + e.what());
  }
  RunRecord r;
  r.config = get_as<ExperimentConfig>(j, "config");
  r.outputs = get_as<std::map<std::string, std::string>>(j, "outputs");
  r.wall_seconds = get_as<double>(j, "wall_seconds");
  r.version = get_as<std::string>(j, "version");
  r.summary = j.at("summary");
  r.pass = get_as<bool>(j, "pass");
  return r;
}

fs::path default_output_dir() {
  if (const char* env = std::getenv("MAGHEAT_OUT"); env && *env) return env;
  return "magheat-out";
}

void write_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw NumericError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw NumericError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

struct Context {
  const ExperimentConfig& cfg;
  fs::path dir;
  int workers;
  RunRecord& record;

  void emit(const std::string& role, const std::string& file, const std::string& text) {
    const fs::path p = dir / file;
    write_atomic(p, text);
    record.outputs[role] = p.string();
  }
};

SpectralOptions spectral_options(const ExperimentConfig& cfg, int workers) {
  SpectralOptions o;
  o.eig_tol = cfg.eig_tol;
  o.eigen.seed = cfg.seed;
  o.workers = workers;
  return o;
}

LinkPhases phases_for(const MagneticField& field, const Grid2D& grid, std::optional<double> s) {
  if (field.is_zero()) return trivial_phases(grid);
  return peierls_phases(grid, GaugeField(field), s);
}

json grid_json(const Grid2D& g) { return json{{"R_dom", g.R_dom}, {"N", g.N}, {"h", g.h}}; }

bool run_flux(Context& ctx, json& summary) {
  const MagneticField field = make_field(ctx.cfg.field);
  const double flux = total_flux(field);
  constexpr int kAngles = 16;
  std::vector<double> alpha_inf;
  for (int k = 0; k < kAngles; ++k)
    alpha_inf.push_back(alpha_infinity(field, 2.0 * std::numbers::pi * k / kAngles));
  // Mean of alpha_inf over the circle, by the periodic trapezoid rule on a
  // finer set of angles.
  constexpr int kMean = 512;
  double mean = 0.0;
  for (int k = 0; k < kMean; ++k) mean += alpha_infinity(field, 2.0 * std::numbers::pi * k / kMean);
  mean /= kMean;

  std::ostringstream csv;
  csv << "r,flux_at\n";
  char buf[96];
  for (int k = 0; k <= 12; ++k) {
    const double r = 1.5 * field.support_radius() * k / 12.0;
    std::snprintf(buf, sizeof buf, "%.6f,%.12e\n", r, flux_at(field, r));
    csv << buf;
  }
  ctx.emit("flux_profile", "flux_profile.csv", csv.str());

  summary["total_flux"] = flux;
  summary["beta"] = beta_of_flux(flux);
  summary["support_radius"] = field.support_radius();
  summary["radial"] = field.is_radial();
  summary["alpha_inf"] = alpha_inf;
  summary["alpha_inf_mean"] = mean;

  // Transversality x.A = 0 and the curl of A against B on a ring of points
  // kept away from the ray breakpoints.
  const double rho = field.support_radius();
  double transverse = 0.0;
  double curl_err[2] = {0.0, 0.0};
  const double steps[2] = {2e-2, 1e-2};
  for (int a = 0; a < 24; ++a) {
    const double theta = 2.0 * std::numbers::pi * (a + 0.5) / 24;
    for (double frac : {0.17, 0.43, 0.71, 1.3}) {
      const double r = frac * rho;
      const Vec2 x{r * std::cos(theta), r * std::sin(theta)};
      const Vec2 A = vector_potential(field, x);
      transverse = std::max(transverse, std::abs(x[0] * A[0] + x[1] * A[1]));
      bool near_break = false;
      for (double b : field.ray_breakpoints(theta)) near_break |= std::abs(b - r) < 0.1;
      if (near_break) continue;
      for (int k = 0; k < 2; ++k) {
        const double d = steps[k];
        const double dAy = (vector_potential(field, {x[0] + d, x[1]})[1] -
                            vector_potential(field, {x[0] - d, x[1]})[1]) / (2 * d);
        const double dAx = (vector_potential(field, {x[0], x[1] + d})[0] -
                            vector_potential(field, {x[0], x[1] - d})[0]) / (2 * d);
        curl_err[k] = std::max(curl_err[k], std::abs(dAy - dAx - field(x)));
      }
    }
  }
  const bool curl_ok = curl_err[1] <= std::max(curl_err[0] / 4.0 * 1.3, 1e-8);
  summary["transversality"] = transverse;
  summary["curl_error"] = {curl_err[0], curl_err[1]};
  // The trapezoid mean is spectrally accurate only for smooth alpha_inf.
  const bool mean_ok = std::abs(mean - flux) <= 1e-6;
  summary["checks"] = {{"alpha_inf_mean_matches_flux", mean_ok},
                       {"transversality", transverse < 1e-12},
                       {"curl_second_order", curl_ok}};
  return mean_ok && transverse < 1e-12 && curl_ok;
}

double hermiticity_residual(const MagneticOperator& op, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  CVector u(op.dimension()), v(op.dimension());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    u[i] = cplx(d(rng), d(rng));
    v[i] = cplx(d(rng), d(rng));
  }
  u.normalize();
  v.normalize();
  const cplx a = u.dot(op(v));
  const cplx b = v.dot(op(u));
  const double h = op.grid().h;
  const double scale = 8.0 / (h * h) + op.diag().maxCoeff();
  return std::abs(a - std::conj(b)) / scale;
}

bool run_gauge_check(Context& ctx, json& summary) {
  const auto& cfg = ctx.cfg;
  const MagneticField field = make_field(cfg.field);
  const Grid2D grid = build_grid(cfg.R_dom, cfg.N);
  const LinkPhases phases = phases_for(field, grid, cfg.s);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::vector<double> chi(std::size_t(grid.size()));
  for (auto& c : chi) c = angle(rng);
  const LinkPhases transformed = gauge_transform(phases, chi);
  const bool harmonic = cfg.harmonic || cfg.s.has_value();
  const MagneticOperator a(phases, harmonic), b(transformed, harmonic);
  EigenOptions eo;
  eo.seed = cfg.seed;
  const auto ea = smallest_eigs(a.as_map(), cfg.k, cfg.eig_tol, eo);
  const auto eb = smallest_eigs(b.as_map(), cfg.k, cfg.eig_tol, eo);
  double diff = 0.0;
  std::vector<double> va, vb;
  std::ostringstream csv;
  csv << "index,original,transformed\n";
  char buf[128];
  for (int i = 0; i < cfg.k; ++i) {
    va.push_back(ea.pairs[i].value);
    vb.push_back(eb.pairs[i].value);
    diff = std::max(diff, std::abs(va.back() - vb.back()));
    std::snprintf(buf, sizeof buf, "%d,%.15e,%.15e\n", i, va.back(), vb.back());
    csv << buf;
  }
  ctx.emit("spectra", "gauge_spectra.csv", csv.str());
  const double herm = std::max(hermiticity_residual(a, rng), hermiticity_residual(b, rng));
  summary["grid"] = grid_json(grid);
  summary["eigenvalues"] = va;
  summary["eigenvalues_transformed"] = vb;
  summary["max_eigenvalue_diff"] = diff;
  summary["hermiticity_residual"] = herm;
  const bool ok = diff < 1e-10 && herm < 1e-12;
  summary["checks"] = {{"gauge_invariance", diff < 1e-10}, {"hermiticity", herm < 1e-12}};
  return ok;
}

bool run_spectrum_exact(Context& ctx, json& summary) {
  const auto& cfg = ctx.cfg;
  const double flux = cfg.flux ? *cfg.flux : total_flux(make_field(cfg.field));
  const ABSpectrum sp = ab_spectrum(flux, cfg.count);
  std::ostringstream csv;
  write_spectrum_csv(csv, sp);
  ctx.emit("spectrum", "spectrum.csv", csv.str());

  std::ostringstream radial;
  radial << "n,m,exact,numeric,rel_error\n";
  double worst = 0.0;
  json levels = json::array();
  char buf[160];
  for (const auto& l : sp.levels) {
    const RadialOperator op(l.m, flux, cfg.radial_R_max, cfg.radial_M);
    const double numeric = op.lowest(l.n + 1).values[l.n];
    const double rel = std::abs(numeric - l.value) / l.value;
    worst = std::max(worst, rel);
    levels.push_back({{"value", l.value}, {"n", l.n}, {"m", l.m},
                      {"multiplicity", l.multiplicity}, {"radial", numeric}});
    std::snprintf(buf, sizeof buf, "%d,%d,%.15e,%.15e,%.3e\n", l.n, l.m, l.value, numeric, rel);
    radial << buf;
  }
  ctx.emit("radial_check", "radial_check.csv", radial.str());
  const double beta = beta_of_flux(flux);
  const double expected = (1.0 + beta) / 2.0;
  summary["flux"] = flux;
  summary["beta"] = beta;
  summary["lowest"] = sp.lowest();
  summary["expected_lowest"] = expected;
  summary["levels"] = levels;
  summary["radial_max_rel_error"] = worst;
  const bool lowest_ok = std::abs(sp.lowest() - expected) <= 1e-14;
  const bool radial_ok = worst < 1e-4;

  const ABSpectrum shifted = ab_spectrum(flux + 1.0, cfg.count);
  bool periodic = shifted.levels.size() == sp.levels.size();
  for (std::size_t i = 0; periodic && i < sp.levels.size(); ++i)
    periodic = std::abs(shifted.levels[i].value - sp.levels[i].value) <= 1e-14 * sp.levels[i].value &&
               shifted.levels[i].multiplicity == sp.levels[i].multiplicity;

  // Radial factors of one angular channel are orthogonal in r dr.
  const int m0 = sp.levels.front().m;
  constexpr int kOrth = 4;
  static const double kOverlapBreaks[] = {0.25, 1.0, 4.0, 8.0, 16.0};
  double overlap = 0.0;
  double gram[kOrth][kOrth];
  for (int a = 0; a < kOrth; ++a)
    for (int b = a; b < kOrth; ++b)
      gram[a][b] = quad::integrate_split(
          [&](double r) { return ab_radial(a, m0, flux, r) * ab_radial(b, m0, flux, r) * r; },
          0.0, 60.0, kOverlapBreaks, 1e-10, "laguerre overlap");
  for (int a = 0; a < kOrth; ++a)
    for (int b = a + 1; b < kOrth; ++b)
      overlap = std::max(overlap, std::abs(gram[a][b]) / std::sqrt(gram[a][a] * gram[b][b]));
  summary["periodic_in_flux"] = periodic;
  summary["laguerre_max_overlap"] = overlap;
  summary["checks"] = {{"lowest_level", lowest_ok},
                       {"radial_solver", radial_ok},
                       {"flux_periodicity", periodic},
                       {"laguerre_orthogonality", overlap < 1e-8}};
  return lowest_ok && radial_ok && periodic && overlap < 1e-8;
}

bool run_spectrum_numeric(Context& ctx, json& summary) {
  const auto& cfg = ctx.cfg;
  const MagneticField field = make_field(cfg.field);
  const Grid2D grid = build_grid(cfg.R_dom, cfg.N);
  const MagneticOperator op(phases_for(field, grid, cfg.s), cfg.harmonic || cfg.s.has_value());
  EigenOptions eo;
  eo.seed = cfg.seed;
  const auto r = smallest_eigs(op.as_map(), cfg.k, cfg.eig_tol, eo);
  std::ostringstream csv;
  csv << "index,value,residual\n";
  char buf[128];
  std::vector<double> values, residuals;
  bool ok = true;
  for (int i = 0; i < cfg.k; ++i) {
    values.push_back(r.pairs[i].value);
    residuals.push_back(r.pairs[i].residual);
    ok = ok && r.pairs[i].residual <= cfg.eig_tol;
    std::snprintf(buf, sizeof buf, "%d,%.15e,%.3e\n", i, values.back(), residuals.back());
    csv << buf;
  }
  ctx.emit("eigenvalues", "eigenvalues.csv", csv.str());
  summary["grid"] = grid_json(grid);
  summary["s"] = cfg.s ? json(*cfg.s) : json(nullptr);
  summary["harmonic"] = op.harmonic();
  summary["eigenvalues"] = values;
  summary["residuals"] = residuals;
  summary["matvecs"] = r.matvecs;
  json checks{{"residuals", ok}};
  if (field.is_zero() && op.harmonic()) {
    const ABSpectrum exact = ab_spectrum(0.0, cfg.k);
    double err = 0.0;
    for (int i = 0; i < cfg.k; ++i) err = std::max(err, std::abs(values[i] - exact.levels[i].value));
    const double ground = std::abs(values[0] - 0.5);
    summary["max_error_vs_oscillator"] = err;
    summary["ground_error"] = ground;
    checks["oscillator_ground"] = ground <= 1e-3;
    ok = ok && ground <= 1e-3;
  }
  summary["checks"] = checks;
  return ok;
}

json samples_json(const std::vector<SpectralSample>& samples) {
  json arr = json::array();
  for (const auto& sm : samples)
    arr.push_back({{"s", sm.s},
                   {"lambda", sm.lambda},
                   {"residual", sm.residual},
                   {"iterations", sm.iterations},
                   {"resolved", sm.resolved},
                   {"outer_mass", sm.outer_mass}});
  return arr;
}

bool run_lambda_curve(Context& ctx, json& summary) {
  const auto& cfg = ctx.cfg;
  const MagneticField field = make_field(cfg.field);
  const Grid2D grid = build_grid(cfg.R_dom, cfg.N);
  std::vector<double> s_values = cfg.s_values;
  if (s_values.empty()) s_values = {0.0, 2.0, 4.0, 6.0};
  const auto samples = lambda_curve(field, s_values, grid, spectral_options(cfg, ctx.workers));
  std::ostringstream csv;
  write_lambda_csv(csv, samples);
  ctx.emit("lambda_curve", "lambda.csv", csv.str());
  const double flux = total_flux(field);
  summary["grid"] = grid_json(grid);
  summary["flux"] = flux;
  summary["beta"] = beta_of_flux(flux);
  summary["resolution_limit"] = resolution_limit(grid, field);
  summary["ho_floor"] = samples.front().ho_floor;
  summary["samples"] = samples_json(samples);
  summary["c_B"] = c_B_from_samples(samples);
  bool increasing = true;
  for (std::size_t i = 1; i < s_values.size(); ++i)
    increasing = increasing && s_values[i] > s_values[i - 1];
  if (samples.size() >= 3 && increasing) {
    const auto lim = lambda_limit_estimate(samples);
    summary["lambda_limit"] = {{"extrapolated", lim.extrapolated},
                               {"last_sample", lim.last_sample}};
  }
  bool floor_ok = true;
  for (const auto& sm : samples) floor_ok = floor_ok && sm.lambda >= 0.5 - 1e-3;
  json checks{{"floor", floor_ok}};
  bool ok = floor_ok;
  if (field.is_zero()) {
    bool flat = true;
    for (const auto& sm : samples) flat = flat && std::abs(sm.lambda - 0.5) <= 1e-3;
    checks["zero_field_flat"] = flat;
    ok = ok && flat;
  }
  summary["checks"] = checks;
  return ok;
}

bool run_hardy(Context& ctx, json& summary) {
  const auto& cfg = ctx.cfg;
  const MagneticField field = make_field(cfg.field);
  std::ostringstream csv;
  csv << "R_dom,N,h,c_est\n";
  char buf[128];
  json table = json::array();
  std::vector<double> values;
  for (double R : cfg.hardy_R) {
    const int N = std::max(16, int(std::lround(2.0 * R / cfg.hardy_h)) - 1);
    const HardyEstimate est = hardy_constant(field, R, N, spectral_options(cfg, 1));
    values.push_back(est.c_est);
    table.push_back({{"R_dom", est.R_dom}, {"N", est.N}, {"h", est.h}, {"c_est", est.c_est}});
    std::snprintf(buf, sizeof buf, "%.6f,%d,%.6f,%.12e\n", est.R_dom, est.N, est.h, est.c_est);
    csv << buf;
  }
  ctx.emit("hardy_table", "hardy.csv", csv.str());
  bool decreasing = true;
  for (std::size_t i = 1; i < values.size(); ++i)
    decreasing = decreasing && values[i] < values[i - 1];
  const double lowest = *std::min_element(values.begin(), values.end());
  const double beta = beta_of(field);
  summary["beta"] = beta;
  summary["table"] = table;
  summary["monotone_decreasing"] = decreasing;
  summary["min_c_est"] = lowest;
  json checks = json::object();
  bool ok = true;
  if (beta > 1e-6) {
    checks["positive"] = lowest > 0.01;
    ok = lowest > 0.01;
  } else if (field.is_zero()) {
    checks["decreasing"] = decreasing;
    ok = decreasing;
  }
  summary["checks"] = checks;
  return ok;
}

bool run_evolve(Context& ctx, json& summary) {
  const auto& cfg = ctx.cfg;
  const MagneticField field = make_field(cfg.field);
  const Frame frame = parse_frame(cfg.frame);
  const InitialDatum datum = parse_initial_datum(cfg.datum);
  EvolveOptions eo;
  eo.cg_rtol = cfg.cg_rtol;
  NormTrajectory traj;
  Grid2D grid;
  if (frame == Frame::Physical) {
    grid = physical_grid_for(field, cfg.T, cfg.h_physical);
    traj = evolve_physical(field, initial_state(datum, grid, frame), cfg.T, cfg.dt, eo);
  } else {
    grid = build_grid(cfg.R_dom, cfg.N);
    traj = evolve_selfsimilar(field, initial_state(datum, grid, frame), cfg.S, cfg.ds, eo);
  }
  std::ostringstream csv;
  write_trajectory_csv(csv, traj);
  ctx.emit("trajectory", "trajectory.csv", csv.str());

  bool contraction = true;
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    const double prev = frame == Frame::Physical ? traj.samples[i - 1].l2_norm
                                                 : traj.samples[i - 1].k_norm;
    const double cur = frame == Frame::Physical ? traj.samples[i].l2_norm : traj.samples[i].k_norm;
    contraction = contraction && cur <= prev * (1.0 + 1e-12);
  }
  summary["frame"] = to_string(frame);
  summary["datum"] = to_string(datum);
  summary["grid"] = grid_json(grid);
  summary["initial_k_norm"] = traj.initial_k_norm;
  summary["final_l2_norm"] = traj.samples.back().l2_norm;
  summary["max_boundary_mass"] = std::max_element(traj.samples.begin(), traj.samples.end(),
                                                  [](const auto& a, const auto& b) {
                                                    return a.boundary_mass < b.boundary_mass;
                                                  })->boundary_mass;
  json checks{{"contraction", contraction}};
  bool ok = contraction;
  const double end = frame == Frame::Physical ? cfg.T : cfg.S;
  const double w0 = cfg.window_start.value_or(frame == Frame::Physical ? cfg.T / 5.0 : 2.0 * cfg.S / 3.0);
  const double w1 = cfg.window_end.value_or(end);
  // Short default windows are reported without a fit; explicit ones must hold enough samples.
  std::size_t in_window = 0;
  for (const auto& sm : traj.samples)
    if (sm.time >= w0 - 1e-12 && sm.time <= w1 + 1e-12) ++in_window;
  const bool fit_possible = cfg.window_start || cfg.window_end || in_window >= 10;
  if (!fit_possible) {
    summary["fit"] = nullptr;
  } else if (frame == Frame::Physical && w0 >= 1.0) {
    summary["fit"] = to_json(fit_polynomial_rate(traj, w0, w1));
  } else if (frame == Frame::SelfSimilar) {
    summary["fit"] = to_json(fit_exponential_rate(traj, w0, w1));
  }
  if (frame == Frame::Physical && field.is_zero() && datum == InitialDatum::Gaussian) {
    double worst = 0.0;
    for (const auto& s : traj.samples)
      worst = std::max(worst, std::abs(s.l2_norm / free_gaussian_norm(s.time, 1.0) - 1.0));
    summary["oracle_max_rel_error"] = worst;
    checks["gaussian_oracle"] = worst <= 1e-3;
    ok = ok && worst <= 1e-3;
  }
  summary["checks"] = checks;
  return ok;
}

bool run_decay_report(Context& ctx, json& summary) {
  const auto& cfg = ctx.cfg;
  const MagneticField field = make_field(cfg.field);
  TheoremConfig tc;
  tc.ss_grid = build_grid(cfg.R_dom, cfg.N);
  tc.s_values = cfg.s_values;
  tc.spectral = spectral_options(cfg, ctx.workers);
  tc.T = cfg.T;
  tc.dt = cfg.dt;
  tc.h_physical = cfg.h_physical;
  tc.S = cfg.S;
  tc.ds = cfg.ds;
  if (cfg.window_start) tc.phys_window_start = *cfg.window_start;
  if (cfg.window_end) tc.phys_window_end = *cfg.window_end;
  const TheoremReport rep = theorem_report(field, tc);
  summary = to_json(rep, tc);
  std::ostringstream lambda_csv, residual_csv;
  write_lambda_csv(lambda_csv, rep.lambda);
  write_fit_residuals_csv(residual_csv, rep);
  ctx.emit("lambda_curve", "lambda.csv", lambda_csv.str());
  ctx.emit("fit_residuals", "fit_residuals.csv", residual_csv.str());
  for (const auto& r : rep.runs) {
    std::ostringstream p, s;
    write_trajectory_csv(p, r.physical);
    write_trajectory_csv(s, r.selfsimilar);
    ctx.emit("physical_" + to_string(r.datum), "physical_" + to_string(r.datum) + ".csv", p.str());
    ctx.emit("selfsimilar_" + to_string(r.datum), "selfsimilar_" + to_string(r.datum) + ".csv",
             s.str());
  }
  ctx.emit("report", "report.json", summary.dump(2) + "\n");
  return rep.all_pass();
}

std::string run_label(const ExperimentConfig& cfg) {
  return cfg.name.empty() ? to_string(cfg.kind) : cfg.name;
}

} // namespace

RunRecord run(const ExperimentConfig& config, const RunOptions& options) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  RunRecord record;
  record.config = config;
  record.version = kVersion;
  fs::path dir = !options.out_dir.empty()      ? options.out_dir
                 : !config.output_dir.empty() ? fs::path(config.output_dir)
                                              : default_output_dir() / run_label(config);
  Context ctx{config, dir, std::max(1, options.workers), record};
  json summary;
  bool pass = false;
  try {
    switch (config.kind) {
      case ExperimentKind::Flux: pass = run_flux(ctx, summary); break;
      case ExperimentKind::GaugeCheck: pass = run_gauge_check(ctx, summary); break;
      case ExperimentKind::SpectrumExact: pass = run_spectrum_exact(ctx, summary); break;
      case ExperimentKind::SpectrumNumeric: pass = run_spectrum_numeric(ctx, summary); break;
      case ExperimentKind::LambdaCurve: pass = run_lambda_curve(ctx, summary); break;
      case ExperimentKind::Hardy: pass = run_hardy(ctx, summary); break;
      case ExperimentKind::Evolve: pass = run_evolve(ctx, summary); break;
      case ExperimentKind::DecayReport: pass = run_decay_report(ctx, summary); break;
    }
  } catch (const ConfigError& e) {
    throw ConfigError(to_string(config.kind) + " '" + run_label(config) + "': " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(to_string(config.kind) + " '" + run_label(config) + "': " + e.what());
  }
  summary["kind"] = to_string(config.kind);
  summary["pass"] = pass;
  summary["version"] = kVersion;
  summary["config"] = config;
  record.summary = summary;
  record.pass = pass;
  ctx.emit("summary", "summary.json", summary.dump(2) + "\n");
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const fs::path record_path = dir / "record.json";
  record.outputs["record"] = record_path.string();
  write_atomic(record_path, json(record).dump(2) + "\n");
  return record;
}

// ---------------------------------------------------------------------------
// Suites

namespace {

FieldSpec spec_of(FieldKind kind, std::map<std::string, double> params) {
  return FieldSpec{kind, std::move(params)};
}

ExperimentConfig make_config(ExperimentKind kind, std::string name, FieldSpec field) {
  ExperimentConfig c;
  c.kind = kind;
  c.name = std::move(name);
  c.field = std::move(field);
  return c;
}

const FieldSpec kZero = spec_of(FieldKind::RadialStep, {{"B0", 0.0}, {"R", 1.0}});
const FieldSpec kHalf = spec_of(FieldKind::RadialStep, {{"B0", 1.0}, {"R", 1.0}});
const FieldSpec kOne = spec_of(FieldKind::ScaledToFlux, {{"target", 1.0}, {"R", 1.0}});
const FieldSpec kOnePointThree = spec_of(FieldKind::ScaledToFlux, {{"target", 1.3}, {"R", 1.0}});
const FieldSpec kDipole =
    spec_of(FieldKind::DipolePair, {{"B0", 1.0}, {"R", 0.5}, {"c", 1.5}});
const FieldSpec kOffset =
    spec_of(FieldKind::OffsetBump, {{"B0", 1.0}, {"R", 1.0}, {"cx", 0.5}, {"cy", 0.25}});
const FieldSpec kBump = spec_of(FieldKind::RadialBump, {{"B0", 1.0}, {"R", 1.0}});

std::vector<ExperimentConfig> oracle_configs() {
  std::vector<ExperimentConfig> out;
  for (double flux : {0.0, 0.3, 0.5, 1.0, 1.3}) {
    char name[48];
    std::snprintf(name, sizeof name, "spectrum-exact-%.1f", flux);
    auto c = make_config(ExperimentKind::SpectrumExact, name, kZero);
    c.flux = flux;
    c.count = 5;
    out.push_back(c);
  }
  const std::pair<const char*, FieldSpec> fields[] = {
      {"flux-zero", kZero},     {"flux-step-half", kHalf}, {"flux-bump", kBump},
      {"flux-offset", kOffset}, {"flux-dipole", kDipole},  {"flux-scaled-1.3", kOnePointThree}};
  for (const auto& [name, spec] : fields) out.push_back(make_config(ExperimentKind::Flux, name, spec));
  return out;
}

} // namespace

std::vector<ExperimentConfig> preset_suite(const std::string& name) {
  if (name == "oracle-only") return oracle_configs();
  if (name == "quick") {
    std::vector<ExperimentConfig> out = oracle_configs();
    auto gauge = make_config(ExperimentKind::GaugeCheck, "gauge-check", kOffset);
    gauge.R_dom = 8.0;
    gauge.N = 32;
    gauge.s = 1.0;
    gauge.k = 4;
    out.push_back(gauge);
    auto ho = make_config(ExperimentKind::SpectrumNumeric, "oscillator-64", kZero);
    ho.R_dom = 8.0;
    ho.N = 64;
    ho.k = 3;
    out.push_back(ho);
    auto curve = make_config(ExperimentKind::LambdaCurve, "lambda-step-half-64", kHalf);
    curve.N = 64;
    curve.s_values = {0.0, 1.0, 2.0};
    out.push_back(curve);
    auto phys = make_config(ExperimentKind::Evolve, "evolve-physical-zero", kZero);
    phys.T = 5.0;
    phys.dt = 0.1;
    phys.h_physical = 0.25;
    out.push_back(phys);
    auto ss = make_config(ExperimentKind::Evolve, "evolve-selfsimilar-half", kHalf);
    ss.frame = "self-similar";
    ss.N = 64;
    ss.S = 2.0;
    out.push_back(ss);
    return out;
  }
  if (name == "paper-headline") {
    std::vector<ExperimentConfig> out = oracle_configs();
    auto ho = make_config(ExperimentKind::SpectrumNumeric, "oscillator-256", kZero);
    ho.k = 3;
    out.push_back(ho);
    const std::pair<const char*, FieldSpec> fields[] = {{"zero", kZero},
                                                        {"step-half", kHalf},
                                                        {"scaled-one", kOne},
                                                        {"scaled-1.3", kOnePointThree},
                                                        {"dipole", kDipole}};
    for (const auto& [label, spec] : fields) {
      auto rep = make_config(ExperimentKind::DecayReport, std::string("decay-") + label, spec);
      rep.window_start = 10.0;
      rep.window_end = 50.0;
      out.push_back(rep);
    }
    for (const auto& [label, spec] : {std::pair{"zero", kZero}, std::pair{"step-half", kHalf}}) {
      auto h = make_config(ExperimentKind::Hardy, std::string("hardy-") + label, spec);
      out.push_back(h);
    }
    auto gauge = make_config(ExperimentKind::GaugeCheck, "gauge-check-offset", kOffset);
    gauge.R_dom = 16.0;
    gauge.N = 128;
    gauge.s = 2.0;
    gauge.k = 3;
    out.push_back(gauge);
    return out;
  }
  throw ConfigError("unknown suite '" + name + "' (expected paper-headline, oracle-only or quick)");
}

std::vector<RunRecord> run_suite(const std::vector<ExperimentConfig>& configs,
                                 const RunOptions& options) {
  std::vector<RunRecord> records(configs.size());
  const fs::path root = options.out_dir.empty() ? default_output_dir() : options.out_dir;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        RunOptions ro;
        ro.out_dir = root / run_label(configs[i]);
        ro.workers = 1;
        records[i] = run(configs[i], ro);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(options.workers, int(configs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return records;
}

// ---------------------------------------------------------------------------
// Compare

namespace {

void diff_json(const json& a, const json& b, const std::string& path, double rtol, double atol,
               DiffSummary& out) {
  if (a.is_number() && b.is_number()) {
    const double x = a.get<double>(), y = b.get<double>();
    const double d = std::abs(x - y);
    if (d > atol + rtol * std::abs(x) || std::isnan(x) != std::isnan(y))
      out.entries.push_back({path, a.dump(), b.dump(), d});
    return;
  }
  if (a.is_object() && b.is_object()) {
    std::set<std::string> keys;
    for (const auto& it : a.items()) keys.insert(it.key());
    for (const auto& it : b.items()) keys.insert(it.key());
    for (const auto& k : keys) {
      const std::string p = path + "/" + k;
      if (!a.contains(k) || !b.contains(k)) {
        out.entries.push_back({p, a.contains(k) ? a.at(k).dump() : "<missing>",
                               b.contains(k) ? b.at(k).dump() : "<missing>", 0.0});
        continue;
      }
      diff_json(a.at(k), b.at(k), p, rtol, atol, out);
    }
    return;
  }
  if (a.is_array() && b.is_array()) {
    if (a.size() != b.size()) {
      out.entries.push_back({path + "/length", std::to_string(a.size()), std::to_string(b.size()),
                             std::abs(double(a.size()) - double(b.size()))});
    }
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
      diff_json(a[i], b[i], path + "/" + std::to_string(i), rtol, atol, out);
    return;
  }
  if (a != b) out.entries.push_back({path, a.dump(), b.dump(), 0.0});
}

} // namespace

DiffSummary compare(const RunRecord& a, const RunRecord& b, double rtol, double atol) {
  if (a.config.kind != b.config.kind)
    throw ConfigError("compare: kind mismatch (" + to_string(a.config.kind) + " vs " +
                      to_string(b.config.kind) + ")");
  DiffSummary out;
  diff_json(a.summary, b.summary, "", rtol, atol, out);
  return out;
}

} // namespace magheat
