#include "magheat/decay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "magheat/error.hpp"

namespace magheat {

namespace {

DecayFit linear_fit(const std::vector<double>& x, const std::vector<double>& y, Frame frame,
                    double lo, double hi) {
  const std::size_t n = x.size();
  if (n < 10) throw ConfigError("decay fit: fewer than 10 samples in the window");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ConfigError("decay fit: degenerate window");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  DecayFit fit;
  fit.frame = frame;
  fit.window_start = lo;
  fit.window_end = hi;
  fit.samples = int(n);
  fit.intercept = intercept;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (intercept + slope * x[i]);
    fit.misfits.emplace_back(x[i], r);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / double(n));
  fit.exponent_stderr = std::sqrt(ss / double(n - 2) / sxx);
  fit.exponent = -slope;
  return fit;
}

template <class Pick>
void collect(const NormTrajectory& traj, double lo, double hi, Pick pick, std::vector<double>& t,
             std::vector<double>& value) {
  if (traj.samples.empty()) throw ConfigError("decay fit: empty trajectory");
  const double eps = 1e-9 * std::max(1.0, std::abs(hi));
  if (!(hi > lo)) throw ConfigError("decay fit: window end must exceed start");
  if (lo < traj.samples.front().time - eps || hi > traj.samples.back().time + eps)
    throw ConfigError("decay fit: window outside the trajectory range");
  for (const auto& s : traj.samples) {
    if (s.time < lo - eps || s.time > hi + eps) continue;
    const double v = pick(s);
    if (!(v > 0.0) || !std::isfinite(v)) throw NumericError("decay fit: non-positive norm");
    t.push_back(s.time);
    value.push_back(v);
  }
}

} // namespace

DecayFit fit_polynomial_rate(const NormTrajectory& traj, double t0, double t1) {
  if (traj.frame != Frame::Physical) throw ConfigError("fit_polynomial_rate: physical frame only");
  if (t0 < 1.0 - 1e-12) throw ConfigError("fit_polynomial_rate: window must start at t >= 1");
  std::vector<double> t, v;
  collect(traj, t0, t1, [](const NormSample& s) { return s.l2_norm; }, t, v);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = std::log1p(t[i]);
    v[i] = std::log(v[i]);
  }
  return linear_fit(t, v, Frame::Physical, t0, t1);
}

DecayFit fit_exponential_rate(const NormTrajectory& traj, double s0, double s1) {
  if (traj.frame != Frame::SelfSimilar)
    throw ConfigError("fit_exponential_rate: self-similar frame only");
  std::vector<double> s, v;
  collect(traj, s0, s1, [](const NormSample& x) { return x.k_norm; }, s, v);
  for (auto& x : v) x = std::log(x);
  return linear_fit(s, v, Frame::SelfSimilar, s0, s1);
}

std::string to_string(InitialDatum datum) {
  switch (datum) {
    case InitialDatum::Gaussian: return "gaussian";
    case InitialDatum::ShiftedGaussian: return "shifted-gaussian";
    case InitialDatum::Odd: return "odd";
  }
  return "gaussian";
}

InitialDatum parse_initial_datum(const std::string& name) {
  if (name == "gaussian") return InitialDatum::Gaussian;
  if (name == "shifted-gaussian") return InitialDatum::ShiftedGaussian;
  if (name == "odd") return InitialDatum::Odd;
  throw ConfigError("unknown initial datum '" + name + "'");
}

StateVector initial_state(InitialDatum datum, const Grid2D& grid, Frame frame) {
  switch (datum) {
    case InitialDatum::Gaussian: return gaussian_state(grid, 1.0, {0.0, 0.0}, frame);
    case InitialDatum::ShiftedGaussian: return gaussian_state(grid, 1.0, {1.0, 0.5}, frame);
    case InitialDatum::Odd: return odd_state(grid, 1.0, frame);
  }
  throw ConfigError("unknown initial datum");
}

double lambda_integral(std::span<const SpectralSample> samples, double s) {
  if (samples.empty()) throw ConfigError("lambda_integral: no samples");
  double total = 0.0;
  double prev_s = 0.0;
  double prev_l = samples.front().lambda;
  for (const auto& sm : samples) {
    if (sm.s <= prev_s) {
      prev_l = sm.lambda;
      continue;
    }
    if (s <= sm.s) {
      const double frac = (s - prev_s) / (sm.s - prev_s);
      const double l_at = prev_l + frac * (sm.lambda - prev_l);
      return total + 0.5 * (prev_l + l_at) * (s - prev_s);
    }
    total += 0.5 * (prev_l + sm.lambda) * (sm.s - prev_s);
    prev_s = sm.s;
    prev_l = sm.lambda;
  }
  return total + prev_l * (s - prev_s);
}

bool TheoremReport::all_pass() const {
  return std::all_of(flags.begin(), flags.end(), [](const auto& kv) { return kv.second; });
}

TheoremReport theorem_report(const MagneticField& field, const TheoremConfig& cfg) {
  TheoremReport rep;
  rep.field = field.spec();
  rep.flux = total_flux(field);
  rep.beta = beta_of_flux(rep.flux);
  const double target = (1.0 + rep.beta) / 2.0;

  std::vector<double> s_values = cfg.s_values;
  if (s_values.empty())
    for (int k = 0; k * 0.5 <= cfg.S + 1e-12; ++k) s_values.push_back(k * 0.5);
  rep.lambda = lambda_curve(field, s_values, cfg.ss_grid, cfg.spectral);
  rep.limit = lambda_limit_estimate(rep.lambda);
  rep.c_B = c_B_from_samples(rep.lambda);

  const double pw0 = cfg.phys_window_start > 0.0 ? cfg.phys_window_start : cfg.T / 5.0;
  const double pw1 = cfg.phys_window_end > 0.0 ? cfg.phys_window_end : cfg.T;
  const double sw0 = cfg.ss_window_start > 0.0 ? cfg.ss_window_start : 2.0 * cfg.S / 3.0;
  const double sw1 = cfg.ss_window_end > 0.0 ? cfg.ss_window_end : cfg.S;
  const Grid2D phys_grid = physical_grid_for(field, cfg.T, cfg.h_physical);

  rep.gamma = std::numeric_limits<double>::infinity();
  double slowest_slope = std::numeric_limits<double>::infinity();
  for (InitialDatum datum : cfg.data) {
    DatumRuns run;
    run.datum = datum;
    if (cfg.run_physical) {
      const StateVector u0 = initial_state(datum, phys_grid, Frame::Physical);
      run.physical = evolve_physical(field, u0, cfg.T, cfg.dt);
      run.physical_fit = fit_polynomial_rate(run.physical, pw0, pw1);
      rep.gamma = std::min(rep.gamma, run.physical_fit.exponent);
      const double rate = rep.c_B + 0.5 - cfg.bound_tol;
      for (const auto& s : run.physical.samples) {
        const double bound = run.physical.initial_k_norm * std::pow(1.0 + s.time, -rate);
        run.global_bound_ratio = std::max(run.global_bound_ratio, s.l2_norm / bound);
      }
    }
    if (cfg.run_selfsimilar) {
      const StateVector v0 = initial_state(datum, cfg.ss_grid, Frame::SelfSimilar);
      run.selfsimilar = evolve_selfsimilar(field, v0, cfg.S, cfg.ds);
      run.selfsimilar_fit = fit_exponential_rate(run.selfsimilar, sw0, sw1);
      slowest_slope = std::min(slowest_slope, run.selfsimilar_fit.exponent);
      const double v_init = run.selfsimilar.samples.front().k_norm;
      for (const auto& s : run.selfsimilar.samples) {
        const double decay = lambda_integral(rep.lambda, s.time) - cfg.bound_tol * s.time;
        run.energy_bound_ratio =
            std::max(run.energy_bound_ratio, s.k_norm / (v_init * std::exp(-decay)));
      }
    }
    rep.runs.push_back(std::move(run));
  }

  bool floor_ok = true;
  for (const auto& sm : rep.lambda) floor_ok = floor_ok && sm.lambda >= 0.5 - cfg.bound_tol;
  rep.flags["lambda_floor"] = floor_ok;
  rep.flags["lambda_limit"] = std::abs(rep.limit.last_sample - target) < cfg.rate_tol;
  rep.flags["c_B"] = rep.beta > 1e-6 ? rep.c_B > 0.0 : rep.c_B <= cfg.rate_tol;
  if (cfg.run_physical && !cfg.data.empty()) {
    bool ok = rep.gamma >= target - cfg.rate_tol;
    if (field.is_zero()) ok = ok && std::abs(rep.gamma - 0.5) <= cfg.rate_tol;
    rep.flags["gamma"] = ok;
    bool global_ok = true;
    for (const auto& r : rep.runs) global_ok = global_ok && r.global_bound_ratio <= 1.0 + 1e-9;
    rep.flags["global_bound"] = global_ok;
  }
  if (cfg.run_selfsimilar && !cfg.data.empty()) {
    rep.flags["selfsimilar_slope"] = std::abs(slowest_slope - target) <= cfg.slope_tol;
    bool energy_ok = true;
    for (const auto& r : rep.runs) energy_ok = energy_ok && r.energy_bound_ratio <= 1.0 + 1e-9;
    rep.flags["energy_bound"] = energy_ok;
  }
  if (!std::isfinite(rep.gamma)) rep.gamma = std::numeric_limits<double>::quiet_NaN();
  return rep;
}

nlohmann::json to_json(const DecayFit& fit) {
  return nlohmann::json{{"frame", to_string(fit.frame)},
                        {"exponent", fit.exponent},
                        {"exponent_stderr", fit.exponent_stderr},
                        {"window", {fit.window_start, fit.window_end}},
                        {"residual", fit.residual},
                        {"samples", fit.samples}};
}

nlohmann::json to_json(const TheoremReport& rep, const TheoremConfig& cfg) {
  nlohmann::json j;
  j["field"] = rep.field;
  j["flux"] = rep.flux;
  j["beta"] = rep.beta;
  j["target_rate"] = (1.0 + rep.beta) / 2.0;
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& sm : rep.lambda)
    curve.push_back({{"s", sm.s}, {"lambda", sm.lambda}, {"residual", sm.residual},
                     {"resolved", sm.resolved}});
  j["lambda_curve"] = curve;
  j["lambda_limit"] = {{"extrapolated", rep.limit.extrapolated},
                       {"last_sample", rep.limit.last_sample}};
  j["c_B"] = rep.c_B;
  j["gamma"] = rep.gamma;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : rep.runs) {
    nlohmann::json rj{{"datum", to_string(r.datum)}};
    if (cfg.run_physical) {
      rj["physical_fit"] = to_json(r.physical_fit);
      rj["global_bound_ratio"] = r.global_bound_ratio;
      rj["initial_k_norm"] = r.physical.initial_k_norm;
    }
    if (cfg.run_selfsimilar) {
      rj["selfsimilar_fit"] = to_json(r.selfsimilar_fit);
      rj["energy_bound_ratio"] = r.energy_bound_ratio;
    }
    runs.push_back(rj);
  }
  j["runs"] = runs;
  j["tolerances"] = {{"bound_tol", cfg.bound_tol}, {"rate_tol", cfg.rate_tol}, {"slope_tol", cfg.slope_tol}};
  j["flags"] = rep.flags;
  j["pass"] = rep.all_pass();
  return j;
}

void write_fit_residuals_csv(std::ostream& os, const TheoremReport& report) {
  os << "run,frame,abscissa,misfit\n";
  char buf[160];
  for (const auto& r : report.runs)
    for (const DecayFit* fit : {&r.physical_fit, &r.selfsimilar_fit})
      for (const auto& [x, m] : fit->misfits) {
        std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.6e\n", to_string(r.datum).c_str(),
                      to_string(fit->frame).c_str(), x, m);
        os << buf;
      }
}

} // namespace magheat
