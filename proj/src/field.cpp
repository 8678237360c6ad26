#include "magheat/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "json.hpp"

#include "magheat/error.hpp"
#include "magheat/quadrature.hpp"

namespace magheat {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAlphaTol = 1e-10;
constexpr double kFluxTol = 1e-9;

struct PresetInfo {
  FieldKind kind;
  const char* name;
  std::vector<const char*> params;
};

const std::vector<PresetInfo>& presets() {
  static const std::vector<PresetInfo> table = {
      {FieldKind::RadialStep, "radial-step", {"B0", "R"}},
      {FieldKind::RadialBump, "radial-bump", {"B0", "R"}},
      {FieldKind::OffsetBump, "offset-bump", {"B0", "R", "cx", "cy"}},
      {FieldKind::DipolePair, "dipole-pair", {"B0", "R", "c", "ratio"}},
      {FieldKind::ScaledToFlux, "scaled-to-flux", {"target", "R"}},
  };
  return table;
}

const PresetInfo& info(FieldKind kind) {
  for (const auto& p : presets())
    if (p.kind == kind) return p;
  throw ConfigError("unknown field kind");
}

double param(const FieldSpec& spec, const char* name, double fallback = NAN) {
  auto it = spec.params.find(name);
  if (it != spec.params.end()) return it->second;
  if (std::isnan(fallback))
    throw ConfigError(std::string("field preset '") + to_string(spec.kind) +
                      "' is missing parameter '" + name + "'");
  return fallback;
}

double bump_profile(double q) {
  // q = (rho / R)^2 in [0, 1)
  if (q >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - q));
}

double component_value(const MagneticField::Component& c, Vec2 x) {
  double dx = x[0] - c.center[0];
  double dy = x[1] - c.center[1];
  double q = (dx * dx + dy * dy) / (c.radius * c.radius);
  if (q >= 1.0) return 0.0;
  return c.smooth ? c.amplitude * bump_profile(q) : c.amplitude;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ConfigError(std::string(what) + " must be finite");
}

void require_positive(double v, const char* what) {
  require_finite(v, what);
  if (v <= 0.0) throw ConfigError(std::string(what) + " must be > 0");
}

/// Parameters t in (0, 1) where |p + t d| = rho.
void segment_circle_hits(Vec2 p, Vec2 d, double rho, std::vector<double>& out) {
  double a = d[0] * d[0] + d[1] * d[1];
  double b = 2.0 * (p[0] * d[0] + p[1] * d[1]);
  double c = p[0] * p[0] + p[1] * p[1] - rho * rho;
  double disc = b * b - 4.0 * a * c;
  if (disc <= 0.0 || a == 0.0) return;
  double sq = std::sqrt(disc);
  for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)})
    if (t > 0.0 && t < 1.0) out.push_back(t);
}

} // namespace

std::string to_string(FieldKind kind) { return info(kind).name; }

FieldKind parse_field_kind(std::string_view name) {
  for (const auto& p : presets())
    if (name == p.name) return p.kind;
  throw ConfigError("invalid field preset '" + std::string(name) + "'");
}

void to_json(nlohmann::json& j, const FieldSpec& spec) {
  j = nlohmann::json{{"kind", to_string(spec.kind)}, {"params", spec.params}};
}

void from_json(const nlohmann::json& j, FieldSpec& spec) {
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("field descriptor must be an object with a 'kind'");
  spec.kind = parse_field_kind(j.at("kind").get<std::string>());
  spec.params.clear();
  if (j.contains("params")) {
    for (auto& [key, value] : j.at("params").items()) {
      if (!value.is_number())
        throw ConfigError("field parameter '" + key + "' must be a number");
      spec.params[key] = value.get<double>();
    }
  }
}

double bump_profile_moment() {
  static const double moment = quad::integrate(
      [](double u) { return bump_profile(u * u) * u; }, 0.0, 1.0, 1e-13, 20,
      "bump moment", 1e-12);
  return moment;
}

MagneticField::MagneticField(FieldSpec spec) : spec_(std::move(spec)) {
  const auto& names = info(spec_.kind).params;
  for (const auto& [key, value] : spec_.params) {
    if (std::find_if(names.begin(), names.end(), [&](const char* n) {
          return key == n;
        }) == names.end())
      throw ConfigError("unknown parameter '" + key + "' for preset '" +
                        to_string(spec_.kind) + "'");
  }

  switch (spec_.kind) {
  case FieldKind::RadialStep:
  case FieldKind::RadialBump: {
    double b0 = param(spec_, "B0");
    double r = param(spec_, "R");
    require_finite(b0, "B0");
    require_positive(r, "R");
    components_.push_back({spec_.kind == FieldKind::RadialBump, b0, r, {0.0, 0.0}});
    break;
  }
  case FieldKind::OffsetBump: {
    double b0 = param(spec_, "B0");
    double r = param(spec_, "R");
    double cx = param(spec_, "cx");
    double cy = param(spec_, "cy");
    require_finite(b0, "B0");
    require_positive(r, "R");
    require_finite(cx, "cx");
    require_finite(cy, "cy");
    components_.push_back({true, b0, r, {cx, cy}});
    break;
  }
  case FieldKind::DipolePair: {
    double b0 = param(spec_, "B0");
    double r = param(spec_, "R");
    double c = param(spec_, "c");
    double ratio = param(spec_, "ratio", -1.0);
    require_finite(b0, "B0");
    require_positive(r, "R");
    require_positive(c, "c");
    require_finite(ratio, "ratio");
    if (c < r) throw ConfigError("dipole-pair supports overlap (need c >= R)");
    components_.push_back({true, b0, r, {c, 0.0}});
    components_.push_back({true, ratio * b0, r, {-c, 0.0}});
    break;
  }
  case FieldKind::ScaledToFlux: {
    double target = param(spec_, "target");
    double r = param(spec_, "R");
    require_finite(target, "target");
    require_positive(r, "R");
    // Flux of a radial bump is B0 R^2 int_0^1 profile(u^2) u du.
    double b0 = target / (r * r * bump_profile_moment());
    components_.push_back({true, b0, r, {0.0, 0.0}});
    break;
  }
  }

  radial_ = components_.size() == 1 && components_[0].center == Vec2{0.0, 0.0};
  for (const auto& c : components_)
    support_radius_ = std::max(support_radius_,
                               std::hypot(c.center[0], c.center[1]) + c.radius);
}

double MagneticField::operator()(Vec2 x) const {
  if (x[0] * x[0] + x[1] * x[1] >= support_radius_ * support_radius_) return 0.0;
  double b = 0.0;
  for (const auto& c : components_) b += component_value(c, x);
  return b;
}

bool MagneticField::is_zero() const {
  return std::all_of(components_.begin(), components_.end(),
                     [](const Component& c) { return c.amplitude == 0.0; });
}

std::vector<double> MagneticField::ray_breakpoints(double theta) const {
  std::vector<double> out;
  Vec2 e{std::cos(theta), std::sin(theta)};
  for (const auto& c : components_) {
    // |r e - c|^2 = R^2
    double ec = e[0] * c.center[0] + e[1] * c.center[1];
    double cc = c.center[0] * c.center[0] + c.center[1] * c.center[1];
    double disc = ec * ec - (cc - c.radius * c.radius);
    if (disc <= 0.0) continue;
    double sq = std::sqrt(disc);
    for (double r : {ec - sq, ec + sq})
      if (r > 0.0) out.push_back(r);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> MagneticField::angular_breakpoints() const {
  std::vector<double> out;
  for (const auto& c : components_) {
    double dist = std::hypot(c.center[0], c.center[1]);
    if (dist <= c.radius) continue;
    double mid = std::atan2(c.center[1], c.center[0]);
    double half = std::asin(c.radius / dist);
    for (double a : {mid - half, mid + half}) {
      a = std::fmod(a, kTwoPi);
      if (a < 0.0) a += kTwoPi;
      out.push_back(a);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

MagneticField make_field(FieldKind kind, std::span<const double> params) {
  const auto& names = info(kind).params;
  std::size_t required = kind == FieldKind::DipolePair ? names.size() - 1 : names.size();
  if (params.size() < required || params.size() > names.size())
    throw ConfigError("preset '" + to_string(kind) + "' expects " +
                      std::to_string(required) + " parameters");
  FieldSpec spec{kind, {}};
  for (std::size_t i = 0; i < params.size(); ++i) spec.params[names[i]] = params[i];
  return MagneticField(std::move(spec));
}

MagneticField make_field(const FieldSpec& spec) { return MagneticField(spec); }

MagneticField zero_field() {
  return MagneticField(FieldSpec{FieldKind::RadialStep, {{"B0", 0.0}, {"R", 1.0}}});
}

double compute_alpha(const MagneticField& field, double r, double theta) {
  if (r < 0.0) throw ConfigError("compute_alpha: r must be >= 0");
  double upper = std::min(r, field.support_radius());
  if (upper == 0.0 || field.is_zero()) return 0.0;
  double c = std::cos(theta);
  double s = std::sin(theta);
  auto integrand = [&](double tau) { return field({tau * c, tau * s}) * tau; };
  auto breaks = field.ray_breakpoints(theta);
  return quad::integrate_split(integrand, 0.0, upper, breaks, kAlphaTol, "alpha");
}

double alpha_infinity(const MagneticField& field, double theta) {
  return compute_alpha(field, field.support_radius(), theta);
}

Vec2 vector_potential(const MagneticField& field, Vec2 x) {
  double r = std::hypot(x[0], x[1]);
  if (r == 0.0 || field.is_zero()) return {0.0, 0.0};
  double upper = std::min(1.0, field.support_radius() / r);
  auto integrand = [&](double tau) { return field({tau * x[0], tau * x[1]}) * tau; };
  auto breaks = field.ray_breakpoints(std::atan2(x[1], x[0]));
  for (double& b : breaks) b /= r;
  double w = quad::integrate_split(integrand, 0.0, upper, breaks, kAlphaTol / (r * r),
                                   "vector potential");
  return {-x[1] * w, x[0] * w};
}

double flux_at(const MagneticField& field, double r) {
  if (field.is_zero() || r == 0.0) return 0.0;
  if (field.is_radial()) return compute_alpha(field, r, 0.0);
  auto integrand = [&](double theta) { return compute_alpha(field, r, theta); };
  auto breaks = field.angular_breakpoints();
  return quad::integrate_split(integrand, 0.0, kTwoPi, breaks, kTwoPi * kFluxTol, "flux") /
         kTwoPi;
}

double total_flux(const MagneticField& field) {
  return flux_at(field, field.support_radius());
}

double beta_of_flux(double flux) { return std::abs(flux - std::nearbyint(flux)); }

double beta_of(const MagneticField& field) { return beta_of_flux(total_flux(field)); }

GaugeField::GaugeField(MagneticField field) : field_(std::move(field)) {
  if (field_.is_radial() && !field_.is_zero()) radial_alpha_inf_ = alpha_infinity(field_, 0.0);
}

Vec2 GaugeField::eval_scaled(double s, Vec2 y) const {
  double scale = std::exp(0.5 * s);
  Vec2 a = vector_potential(field_, {scale * y[0], scale * y[1]});
  return {scale * a[0], scale * a[1]};
}

double GaugeField::line_integral(Vec2 p, Vec2 q, double s) const {
  if (field_.is_zero()) return 0.0;
  Vec2 d{q[0] - p[0], q[1] - p[1]};
  double pxd = p[0] * d[1] - p[1] * d[0];
  double len = std::hypot(d[0], d[1]);
  if (len == 0.0) return 0.0;
  // A is purely azimuthal, so it has no component along segments on a line
  // through the origin.
  double dist = std::abs(pxd) / len;
  if (dist <= 1e-14 * (len + std::hypot(p[0], p[1]))) return 0.0;

  double scale = std::exp(0.5 * s);
  double theta0 = std::atan2(p[1], p[0]);
  double dtheta = std::atan2(p[0] * q[1] - p[1] * q[0], p[0] * q[0] + p[1] * q[1]);

  if (field_.is_radial()) {
    // Closest approach of the segment (not its line) to the origin.
    double t = std::clamp(-(p[0] * d[0] + p[1] * d[1]) / (len * len), 0.0, 1.0);
    if (scale * std::hypot(p[0] + t * d[0], p[1] + t * d[1]) >= field_.support_radius())
      return radial_alpha_inf_ * dtheta;
  }

  auto radius_at = [&](double theta) {
    double exd = std::cos(theta) * d[1] - std::sin(theta) * d[0];
    return std::abs(pxd / exd);
  };
  auto integrand = [&](double u) {
    double theta = theta0 + u * dtheta;
    return compute_alpha(field_, scale * radius_at(theta), theta);
  };

  // Kinks where the segment crosses a flat-disc boundary or leaves a support.
  std::vector<double> breaks;
  for (const auto& c : field_.components()) {
    if (c.center != Vec2{0.0, 0.0}) continue;
    std::vector<double> ts;
    segment_circle_hits(p, d, c.radius / scale, ts);
    for (double t : ts) {
      Vec2 x{p[0] + t * d[0], p[1] + t * d[1]};
      double dth = std::atan2(p[0] * x[1] - p[1] * x[0], p[0] * x[0] + p[1] * x[1]);
      breaks.push_back(dth / dtheta);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  // alpha is itself a quadrature, so only the absolute target is meaningful.
  return dtheta * quad::integrate_split(integrand, 0.0, 1.0, breaks, 1e-11,
                                        "edge line integral", 1e-3);
}

} // namespace magheat
