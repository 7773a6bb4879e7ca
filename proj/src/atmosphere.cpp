#include "duallink/atmosphere.hpp"

#include <cmath>
#include <numbers>

#include <fmt/core.h>

#include "duallink/errors.hpp"
#include "duallink/quadrature.hpp"

namespace duallink {

double Degrees::radians() const { return value * std::numbers::pi / 180.0; }

void LinkGeometry::validate() const {
  if (!(ground_altitude >= 0.0 && ground_altitude < satellite_altitude)) {
    throw DomainError(fmt::format("need 0 <= h0 < H, got h0={} H={}", ground_altitude,
                                  satellite_altitude));
  }
  if (!(zenith.value >= 0.0 && zenith.value < 90.0)) {
    throw DomainError(fmt::format("zenith angle must be in [0, 90) deg, got {}", zenith.value));
  }
  if (!(wavelength > 0.0) || !(beam_waist > 0.0) || !(aperture_radius > 0.0)) {
    throw DomainError("wavelength, beam waist and aperture radius must be positive");
  }
}

double LinkGeometry::wavenumber() const { return 2.0 * std::numbers::pi / wavelength; }

double LinkGeometry::secant() const { return 1.0 / std::cos(zenith.radians()); }

double LinkGeometry::path_length() const {
  return (satellite_altitude - ground_altitude) * secant();
}

double LinkGeometry::rayleigh_range() const {
  return std::numbers::pi * beam_waist * beam_waist / wavelength;
}

double LinkGeometry::beam_radius(double z) const {
  const double ratio = z / rayleigh_range();
  return beam_waist * std::sqrt(1.0 + ratio * ratio);
}

LinkGeometry LinkGeometry::reference_link(double zenith_deg, double aperture) {
  LinkGeometry g;
  g.zenith = Degrees{zenith_deg};
  g.aperture_radius = aperture;
  return g;
}

double bufton_wind(double altitude, double ground_wind, double amplitude) {
  if (altitude < 0.0) throw DomainError(fmt::format("negative altitude {}", altitude));
  const double u = (altitude - 9400.0) / 4800.0;
  return ground_wind + amplitude * std::exp(-u * u);
}

double rms_wind(double ground_wind, double amplitude) {
  if (ground_wind < 0.0) throw DomainError("ground wind speed must be non-negative");
  const auto v2 = [&](double h) {
    const double v = bufton_wind(h, ground_wind, amplitude);
    return v * v;
  };
  const double integral = quadrature::adaptive_simpson(v2, 5e3, 20e3);
  return std::sqrt(integral / 15e3);
}

AtmosphereProfile::AtmosphereProfile(double ground_turbulence, double ground_wind,
                                     double outer_scale, double inner_scale,
                                     double cn2_multiplier)
    : ground_turbulence_(ground_turbulence),
      ground_wind_(ground_wind),
      rms_wind_(duallink::rms_wind(ground_wind)),
      outer_scale_(outer_scale),
      inner_scale_(inner_scale),
      cn2_multiplier_(cn2_multiplier) {
  if (!(ground_turbulence > 0.0)) throw DomainError("ground turbulence A must be positive");
  if (!(inner_scale > 0.0 && inner_scale < outer_scale)) {
    throw DomainError(fmt::format("need 0 < l_inner < L_outer, got {} and {}", inner_scale,
                                  outer_scale));
  }
  if (!(cn2_multiplier >= 0.0)) throw DomainError("Cn2 multiplier must be non-negative");
}

AtmosphereProfile AtmosphereProfile::reference_link() {
  return AtmosphereProfile(9.6e-14, 3.0, 5.0, 0.01);
}

AtmosphereProfile AtmosphereProfile::vacuum() { return reference_link().scaled(0.0); }

AtmosphereProfile AtmosphereProfile::scaled(double multiplier) const {
  AtmosphereProfile copy = *this;
  if (!(multiplier >= 0.0)) throw DomainError("Cn2 multiplier must be non-negative");
  copy.cn2_multiplier_ = cn2_multiplier_ * multiplier;
  return copy;
}

double cn2(double h, const AtmosphereProfile& profile) {
  if (h < 0.0) throw DomainError(fmt::format("negative altitude {}", h));
  if (!profile.turbulent()) return 0.0;
  const double wind = profile.rms_wind() / 27.0;
  const double scaled_h = h * 1e-5;
  const double h10 = std::pow(scaled_h, 10);
  const double value = 0.00594 * wind * wind * h10 * std::exp(-h / 1000.0) +
                       2.7e-16 * std::exp(-h / 1500.0) +
                       profile.ground_turbulence() * std::exp(-h / 100.0);
  return profile.cn2_multiplier() * value;
}

double cn2_integral(const AtmosphereProfile& profile, double h_lo, double h_hi) {
  if (!profile.turbulent()) return 0.0;
  return quadrature::integrate_altitude([&](double h) { return cn2(h, profile); }, h_lo, h_hi);
}

double rytov_variance(const LinkGeometry& geom, const AtmosphereProfile& profile) {
  return rytov_variance(geom, profile, geom.ground_altitude, geom.satellite_altitude);
}

double rytov_variance(const LinkGeometry& geom, const AtmosphereProfile& profile, double h_lo,
                      double h_hi) {
  geom.validate();
  if (!(geom.ground_altitude <= h_lo && h_lo <= h_hi && h_hi <= geom.satellite_altitude)) {
    throw DomainError(fmt::format("altitude window [{}, {}] outside [h0, H]", h_lo, h_hi));
  }
  if (!profile.turbulent()) return 0.0;
  const double h0 = geom.ground_altitude;
  const double integral = quadrature::integrate_altitude(
      [&](double h) { return cn2(h, profile) * std::pow(h - h0, 5.0 / 6.0); }, h_lo, h_hi);
  return 2.25 * std::pow(geom.wavenumber(), 7.0 / 6.0) * std::pow(geom.secant(), 11.0 / 6.0) *
         integral;
}

double scintillation_index(double rytov) {
  if (rytov < 0.0) throw DomainError("Rytov variance must be non-negative");
  const double s125 = std::pow(rytov, 6.0 / 5.0);  // sigma_R^(12/5)
  const double weak = 0.49 * rytov / std::pow(1.0 + 1.11 * s125, 7.0 / 6.0);
  const double strong = 0.51 * rytov / std::pow(1.0 + 0.69 * s125, 5.0 / 6.0);
  return std::expm1(weak + strong);
}

FriedParameter fried_parameter(const LinkGeometry& geom, const AtmosphereProfile& profile) {
  return fried_parameter(geom, profile, geom.ground_altitude, geom.satellite_altitude);
}

FriedParameter fried_parameter(const LinkGeometry& geom, const AtmosphereProfile& profile,
                               double h_lo, double h_hi) {
  geom.validate();
  if (!(geom.ground_altitude <= h_lo && h_lo < h_hi && h_hi <= geom.satellite_altitude)) {
    throw DomainError(fmt::format("altitude window [{}, {}] outside [h0, H]", h_lo, h_hi));
  }
  const double integral = cn2_integral(profile, h_lo, h_hi);
  if (!(integral > 0.0)) return NoTurbulence{};
  const double k = geom.wavenumber();
  return std::pow(0.423 * k * k * geom.secant() * integral, -3.0 / 5.0);
}

Diagnostics greenwood_and_coherence(const LinkGeometry& geom, const AtmosphereProfile& profile) {
  geom.validate();
  const FriedParameter r0 = fried_parameter(geom, profile);
  if (!is_turbulent(r0)) return NoTurbulence{};

  const double wind_integral = quadrature::integrate_altitude(
      [&](double h) {
        return cn2(h, profile) * std::pow(bufton_wind(h, profile.ground_wind()), 5.0 / 3.0);
      },
      geom.ground_altitude, geom.satellite_altitude);
  const double greenwood = 2.31 * std::pow(geom.wavelength, -6.0 / 5.0) *
                           std::pow(geom.secant() * wind_integral, 3.0 / 5.0);

  TurbulenceDiagnostics d{};
  d.rytov_variance = rytov_variance(geom, profile);
  d.scintillation_index = scintillation_index(d.rytov_variance);
  d.fried_parameter = std::get<double>(r0);
  d.greenwood_frequency = greenwood;
  d.coherence_time = kCoherenceTimeConstant / greenwood;
  return d;
}

}  // namespace duallink
