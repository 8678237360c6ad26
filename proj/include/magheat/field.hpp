#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace magheat {

using Vec2 = std::array<double, 2>;

/// Catalog of compactly supported planar fields.
enum class FieldKind { RadialStep, RadialBump, OffsetBump, DipolePair, ScaledToFlux };

std::string to_string(FieldKind kind);
FieldKind parse_field_kind(std::string_view name);

/// Serializable preset descriptor: {"kind": "...", "params": {"B0": 1, ...}}.
struct FieldSpec {
  FieldKind kind = FieldKind::RadialStep;
  std::map<std::string, double> params;

  bool operator==(const FieldSpec&) const = default;
};

void to_json(nlohmann::json& j, const FieldSpec& spec);
void from_json(const nlohmann::json& j, FieldSpec& spec);

/// A magnetic field B built from discs and smooth bumps.
///
/// Every preset vanishes identically for |x| >= support_radius(). The bump
/// profile is B0 exp(1 - 1/(1 - (rho/R)^2)) for rho < R; the step preset is the
/// indicator of the disc |x| < R scaled by B0 (discontinuous at |x| = R).
class MagneticField {
public:
  /// One disc or bump component.
  struct Component {
    bool smooth = true;  // bump if true, flat disc if false
    double amplitude = 0.0;
    double radius = 1.0;
    Vec2 center{0.0, 0.0};
  };

  explicit MagneticField(FieldSpec spec);

  double operator()(Vec2 x) const;

  const FieldSpec& spec() const { return spec_; }
  FieldKind kind() const { return spec_.kind; }
  double support_radius() const { return support_radius_; }
  /// True if B depends on |x| only.
  bool is_radial() const { return radial_; }
  bool is_zero() const;
  std::span<const Component> components() const { return components_; }

  /// Radii along the ray at angle theta where B is not smooth (or enters and
  /// leaves a component support), sorted ascending.
  std::vector<double> ray_breakpoints(double theta) const;
  /// Angles in [0, 2pi) bounding the shadows of components that avoid the origin.
  std::vector<double> angular_breakpoints() const;

private:
  FieldSpec spec_;
  std::vector<Component> components_;
  double support_radius_ = 0.0;
  bool radial_ = false;
};

/// make_field with positional parameters:
///   radial-step   [B0, R]
///   radial-bump   [B0, R]
///   offset-bump   [B0, R, cx, cy]
///   dipole-pair   [B0, R, c, ratio = -1]  bumps at (+c, 0) and (-c, 0), the
///                                          second with amplitude ratio * B0
///   scaled-to-flux [target, R]             radial bump rescaled to total flux
MagneticField make_field(FieldKind kind, std::span<const double> params);
MagneticField make_field(const FieldSpec& spec);
/// B = 0, represented as a radial step of zero amplitude.
MagneticField zero_field();

/// Integral of the unit bump profile: int_0^1 exp(1 - 1/(1 - u^2)) u du.
double bump_profile_moment();

/// alpha(r, theta) = int_0^r B(tau cos theta, tau sin theta) tau dtau.
double compute_alpha(const MagneticField& field, double r, double theta);
/// alpha evaluated at r = support_radius, where it has reached its limit.
double alpha_infinity(const MagneticField& field, double theta);
/// Transverse-gauge potential A(x) = (-x2, x1) int_0^1 B(tau x) tau dtau.
Vec2 vector_potential(const MagneticField& field, Vec2 x);
/// Flux Phi(r) through the disc of radius r, in units of 2 pi.
double flux_at(const MagneticField& field, double r);
/// Phi_B = (1 / 2pi) int B.
double total_flux(const MagneticField& field);
/// Distance of the flux to the nearest integer.
double beta_of_flux(double flux);
double beta_of(const MagneticField& field);

/// Transverse gauge together with its self-similar rescaling
/// A_s(y) = e^{s/2} A(e^{s/2} y).
class GaugeField {
public:
  explicit GaugeField(MagneticField field);

  const MagneticField& source() const { return field_; }
  Vec2 eval(Vec2 x) const { return vector_potential(field_, x); }
  Vec2 eval_scaled(double s, Vec2 y) const;

  /// Line integral of A_s along the straight segment p -> q (s = 0 gives A).
  ///
  /// Uses A . dl = alpha(r, theta) dtheta, which holds for the transverse
  /// gauge, so the integrand stays bounded even when the scaled field is
  /// concentrated far below the segment length.
  double line_integral(Vec2 p, Vec2 q, double s = 0.0) const;

private:
  MagneticField field_;
  // alpha_inf of a radial field (a constant).
  double radial_alpha_inf_ = 0.0;
};

} // namespace magheat
