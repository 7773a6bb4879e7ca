#pragma once

#include <variant>

namespace duallink {

/// Angle in degrees. Zenith angles cross the API boundary in degrees and are
/// converted once via radians().
struct Degrees {
  double value = 0.0;
  [[nodiscard]] double radians() const;

  friend bool operator==(const Degrees&, const Degrees&) = default;
};

/// Scene geometry of a satellite-to-ground downlink. Lengths in meters.
struct LinkGeometry {
  double ground_altitude = 0.0;      // h0
  double satellite_altitude = 5e5;   // H (altitude at zenith)
  Degrees zenith{0.0};               // theta_z
  double wavelength = 1064e-9;
  double beam_waist = 0.15;          // w0 at the transmitter
  double aperture_radius = 0.5;      // ra at the receiver

  /// Throws DomainError when an invariant is violated.
  void validate() const;

  [[nodiscard]] double wavenumber() const;
  [[nodiscard]] double secant() const;
  /// L = (H - h0) / cos(theta_z).
  [[nodiscard]] double path_length() const;
  [[nodiscard]] double rayleigh_range() const;
  /// Vacuum 1/e^2 intensity radius of the fundamental Gaussian after z meters.
  [[nodiscard]] double beam_radius(double z) const;

  static LinkGeometry reference_link(double zenith_deg = 0.0, double aperture = 0.5);

  friend bool operator==(const LinkGeometry&, const LinkGeometry&) = default;
};

constexpr double kBuftonAmplitude = 30.0;

/// Bufton wind profile V(h) in m/s.
double bufton_wind(double altitude, double ground_wind, double amplitude = kBuftonAmplitude);

/// RMS wind over 5-20 km of the Bufton profile.
double rms_wind(double ground_wind, double amplitude = kBuftonAmplitude);

/// Hufnagel-Valley turbulence profile parameters. rms_wind is derived from the
/// ground wind at construction and cannot drift out of sync.
class AtmosphereProfile {
 public:
  AtmosphereProfile(double ground_turbulence, double ground_wind, double outer_scale,
                    double inner_scale, double cn2_multiplier = 1.0);

  static AtmosphereProfile reference_link();
  /// Same scales and wind, Cn2 identically zero.
  static AtmosphereProfile vacuum();

  [[nodiscard]] double ground_turbulence() const { return ground_turbulence_; }
  [[nodiscard]] double ground_wind() const { return ground_wind_; }
  [[nodiscard]] double rms_wind() const { return rms_wind_; }
  [[nodiscard]] double outer_scale() const { return outer_scale_; }
  [[nodiscard]] double inner_scale() const { return inner_scale_; }
  /// Global multiplier applied to the whole Cn2 profile (1 for the plain HV model).
  [[nodiscard]] double cn2_multiplier() const { return cn2_multiplier_; }
  [[nodiscard]] bool turbulent() const { return cn2_multiplier_ > 0.0; }

  [[nodiscard]] AtmosphereProfile scaled(double multiplier) const;

  friend bool operator==(const AtmosphereProfile&, const AtmosphereProfile&) = default;

 private:
  double ground_turbulence_;
  double ground_wind_;
  double rms_wind_;
  double outer_scale_;
  double inner_scale_;
  double cn2_multiplier_;
};

/// Marker for a path without turbulence (zero Cn2 integral).
struct NoTurbulence {
  friend bool operator==(NoTurbulence, NoTurbulence) { return true; }
};

/// Fried parameter in meters, or NoTurbulence when the Cn2 integral vanishes.
using FriedParameter = std::variant<double, NoTurbulence>;

[[nodiscard]] inline bool is_turbulent(const FriedParameter& r0) {
  return std::holds_alternative<double>(r0);
}

struct TurbulenceDiagnostics {
  double rytov_variance;
  double scintillation_index;
  double fried_parameter;     // meters
  double greenwood_frequency; // Hz
  double coherence_time;      // seconds, 0.134 / greenwood_frequency
};

using Diagnostics = std::variant<TurbulenceDiagnostics, NoTurbulence>;

constexpr double kCoherenceTimeConstant = 0.134;

/// Hufnagel-Valley Cn2(h) in m^(-2/3). Throws DomainError for h < 0.
double cn2(double altitude, const AtmosphereProfile& profile);

/// Rytov variance of the downlink; the optional altitude window restricts the
/// integral to one slab of the path.
double rytov_variance(const LinkGeometry& geom, const AtmosphereProfile& profile);
double rytov_variance(const LinkGeometry& geom, const AtmosphereProfile& profile, double h_lo,
                      double h_hi);

double scintillation_index(double rytov);

FriedParameter fried_parameter(const LinkGeometry& geom, const AtmosphereProfile& profile);
FriedParameter fried_parameter(const LinkGeometry& geom, const AtmosphereProfile& profile,
                               double h_lo, double h_hi);

/// Integral of Cn2 over [h_lo, h_hi] along the vertical (no secant factor).
double cn2_integral(const AtmosphereProfile& profile, double h_lo, double h_hi);

Diagnostics greenwood_and_coherence(const LinkGeometry& geom, const AtmosphereProfile& profile);

}  // namespace duallink
