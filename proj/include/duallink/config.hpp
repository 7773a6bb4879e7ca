#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "duallink/atmosphere.hpp"
#include "duallink/keyrate.hpp"
#include "duallink/optics.hpp"
#include "duallink/protocol.hpp"

namespace duallink {

struct LinkConfig {
  double ground_altitude = 0.0;
  double satellite_altitude = 5e5;
  double wavelength = 1064e-9;
  double beam_waist = 0.15;
  std::vector<double> zenith_angles_deg{0.0, 30.0, 60.0};
  std::vector<double> aperture_radii{0.15, 0.30, 0.50};

  /// Geometry for one (zenith, aperture) pair.
  [[nodiscard]] LinkGeometry geometry(double zenith_deg, double aperture_radius) const;

  friend bool operator==(const LinkConfig&, const LinkConfig&) = default;
};

struct EnsembleConfig {
  std::size_t realizations = 10000;
  std::uint64_t seed = 1;
  double histogram_bin_db = 0.05;
  double step_duration = 0.5;  // seconds of coherence-step trace

  friend bool operator==(const EnsembleConfig&, const EnsembleConfig&) = default;
};

struct SqueezingConfig {
  std::vector<double> levels_db{6.0, 10.0};
  std::optional<double> anti_squeezed_variance;  // default: 1/Vs

  [[nodiscard]] SqueezingParams params(double level_db) const;

  friend bool operator==(const SqueezingConfig&, const SqueezingConfig&) = default;
};

struct VerificationConfig {
  std::size_t synthetic_etas = 100;
  double eta_min = 0.35;
  double eta_max = 0.65;
  std::size_t shots_per_eta = 10000;
  std::uint64_t seed = 7;
  double squeezing_db = 10.0;
  double sabotage_tap = 0.5;  // used only when sabotage is requested
  double z_threshold = 5.0;

  /// Evenly spaced transmissivities eta_min..eta_max.
  [[nodiscard]] std::vector<double> etas() const;

  friend bool operator==(const VerificationConfig&, const VerificationConfig&) = default;
};

struct RunConfig {
  std::string scenario = "reference";
  LinkConfig link;
  AtmosphereProfile atmosphere = AtmosphereProfile::reference_link();
  GridSettings grid;  // grid.max_aperture follows link.aperture_radii
  EnsembleConfig ensemble;
  SqueezingConfig squeezing;
  ClassicalLayer classical{3.5, 1e4};
  DetectorModel detector;
  FiniteSizeParams finite_size;
  VerificationConfig verification;
  std::filesystem::path output_dir = "out";

  /// Throws ConfigError (or DomainError from a sub-invariant).
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig default_config();

/// Strict JSON: unknown keys, wrong types and invariant violations throw ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical rendering; parse_config(render_config(c)) == c.
std::string render_config(const RunConfig& config);
/// CRC-32 of the canonical rendering with output_dir blanked, as 8 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace duallink
