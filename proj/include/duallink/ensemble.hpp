#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "duallink/atmosphere.hpp"
#include "duallink/optics.hpp"

namespace duallink {

constexpr int kEnsembleSchemaVersion = 1;

/// Everything needed to regenerate an ensemble bit-identically.
struct EnsembleMetadata {
  LinkGeometry geometry;
  AtmosphereProfile profile = AtmosphereProfile::reference_link();
  GridSettings grid;
  std::uint64_t seed = 0;
  std::size_t realizations = 0;
  std::string tool_version;
  std::string config_hash;  // empty when not produced from a run config
  std::vector<std::string> warnings;

  friend bool operator==(const EnsembleMetadata&, const EnsembleMetadata&) = default;
};

struct ChannelEnsemble {
  std::vector<double> etas;  // ordered by realization index
  EnsembleMetadata metadata;
  std::optional<double> coherence_time;  // seconds; absent without turbulence

  friend bool operator==(const ChannelEnsemble&, const ChannelEnsemble&) = default;
};

/// threads == 0 uses the machine's hardware concurrency.
struct RunOptions {
  unsigned threads = 0;
};

/// n split-step realizations of the downlink, one receiver aperture.
ChannelEnsemble run_ensemble(const LinkGeometry& geom, const AtmosphereProfile& profile,
                             const GridSettings& grid, std::size_t n, std::uint64_t master_seed,
                             const RunOptions& opts = {});

/// Same realizations evaluated for several apertures; element i equals
/// run_ensemble with geometry.aperture_radius = radii[i].
std::vector<ChannelEnsemble> run_ensemble_apertures(const LinkGeometry& geom,
                                                    const AtmosphereProfile& profile,
                                                    const GridSettings& grid, std::size_t n,
                                                    std::uint64_t master_seed,
                                                    std::span<const double> radii,
                                                    const RunOptions& opts = {});

struct FadingStats {
  double mean_eta;
  double eta_f;     // <sqrt(eta)>^2
  double var_sqrt;  // <eta> - eta_f
  double mean_loss_db;
  double std_loss_db;
};

/// Constant-transmissivity statistics (no fading).
FadingStats constant_stats(double eta);

/// Throws DataIntegrityError when any eta lies outside [0, 1].
FadingStats fading_stats(std::span<const double> etas);
FadingStats fading_stats(const ChannelEnsemble& ens);

double loss_db(double eta);

struct HistogramBin {
  double center_db;
  double density;
};

/// Loss histogram on bins aligned to multiples of bin_width_db, from the first
/// to the last occupied bin. Densities integrate to 1.
std::vector<HistogramBin> loss_histogram(const ChannelEnsemble& ens, double bin_width_db);

struct StepSample {
  double t_start;  // seconds
  double eta;
};

/// Piecewise-constant transmissivity trace: one ensemble member per coherence time.
std::vector<StepSample> coherence_step_series(const ChannelEnsemble& ens, double duration);

void save_ensemble(const ChannelEnsemble& ens, const std::filesystem::path& path);
/// Throws DataIntegrityError on a checksum, schema or format failure.
ChannelEnsemble load_ensemble(const std::filesystem::path& path);

std::string render_ensemble(const ChannelEnsemble& ens);
ChannelEnsemble parse_ensemble(const std::string& text);

/// CSV bodies with a single header row; callers may prepend '#' comment lines.
void write_histogram_csv(std::ostream& out, std::span<const HistogramBin> bins);
void write_step_series_csv(std::ostream& out, std::span<const StepSample> steps);

}  // namespace duallink
