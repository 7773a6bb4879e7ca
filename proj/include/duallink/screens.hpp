#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "duallink/atmosphere.hpp"
#include "duallink/rng.hpp"

namespace duallink {

constexpr double kSlabScintillationLimit = 0.1;
constexpr double kEffectiveTopFraction = 0.999;
constexpr std::size_t kMaxSlabs = 64;
constexpr int kDefaultSubharmonicLevels = 3;

/// One layer of the path between two altitudes. Turbulent slabs carry a phase
/// screen at their midpoint; the vacuum slab above the effective top does not.
struct Slab {
  double altitude_low;
  double altitude_high;
  double path_length;   // slant distance through the slab, meters
  FriedParameter fried;
  double scintillation; // locally evaluated scintillation index
  bool has_screen;
};

struct TurbulenceScales {
  double outer;  // L_outer, meters
  double inner;  // l_inner, meters
};

/// Discretization of the path, ordered by ascending altitude.
struct SlabPlan {
  std::vector<Slab> slabs;
  TurbulenceScales scales{5.0, 0.01};
  double whole_channel_scintillation = 0.0;
  double effective_top = 0.0;  // altitude above which the path is treated as vacuum

  [[nodiscard]] std::size_t screen_count() const;
  [[nodiscard]] double total_path_length() const;
  [[nodiscard]] double turbulent_path_length() const;
};

/// Greedy partition from h0 upward: each slab is grown as far as the local
/// scintillation index stays below both 0.1 and 0.1x the whole-channel value.
/// Throws ConfigError when more than kMaxSlabs slabs would be needed.
SlabPlan plan_slabs(const LinkGeometry& geom, const AtmosphereProfile& profile,
                    const Diagnostics& diagnostics);

/// Modified von Karman phase PSD, f in cycles/m.
double mvk_psd(double f, double fried, double outer_scale, double inner_scale);

struct PhaseScreen {
  std::size_t n = 0;
  double spacing = 0.0;
  std::size_t slab_index = 0;
  StreamId stream;
  std::vector<double> phase;  // radians, row-major n*n
  bool low_frequency_unresolved = false;  // n*spacing < L_outer/2

  [[nodiscard]] double at(std::size_t row, std::size_t col) const { return phase[row * n + col]; }
};

/// FFT synthesis of one screen from the slab's mvK spectrum, plus
/// `subharmonic_levels` levels of low-frequency compensation.
PhaseScreen generate_screen(const Slab& slab, std::size_t slab_index,
                            const TurbulenceScales& scales, std::size_t n, double spacing,
                            const StreamId& stream,
                            int subharmonic_levels = kDefaultSubharmonicLevels);

/// Empirical phase structure function, averaged over both grid axes, every
/// pixel pair and every screen. Separations are rounded to the nearest lag.
std::vector<double> screen_structure_function(std::span<const PhaseScreen> screens,
                                              std::span<const double> separations);

/// Writes `<stem>.bin` (native-endian float64, row-major) and `<stem>.txt`.
void dump_screen(const PhaseScreen& screen, const std::filesystem::path& stem);

}  // namespace duallink
