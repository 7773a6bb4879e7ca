#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "duallink/atmosphere.hpp"
#include "duallink/fft.hpp"
#include "duallink/screens.hpp"

namespace duallink {

/// Sampled transverse field on a centered N x N grid: sample (row, col) sits at
/// ((col - N/2) * spacing, (row - N/2) * spacing). Power is sum |psi|^2 spacing^2.
struct ComplexField {
  AlignedGrid samples;
  double spacing = 0.0;
  double wavelength = 0.0;
  double z = 0.0;

  [[nodiscard]] std::size_t n() const { return samples.n(); }
  [[nodiscard]] double coordinate(std::size_t index) const {
    return (static_cast<double>(index) - static_cast<double>(n() / 2)) * spacing;
  }
  [[nodiscard]] double window() const { return static_cast<double>(n()) * spacing; }
  [[nodiscard]] double power() const;
};

/// Grid and window policy for end-to-end propagation.
struct GridSettings {
  std::size_t n = 1024;
  double tx_window_factor = 8.0;    // transmitter window = factor * w0
  double rx_window_factor = 8.0;    // receiver window >= factor * w(L)
  double rx_aperture_factor = 4.0;  // receiver window >= factor * largest aperture
  double max_aperture = 0.5;        // meters
  bool apodization = true;
  int subharmonic_levels = kDefaultSubharmonicLevels;

  [[nodiscard]] double transmitter_spacing(const LinkGeometry& geom) const;
  [[nodiscard]] double receiver_spacing(const LinkGeometry& geom) const;

  friend bool operator==(const GridSettings&, const GridSettings&) = default;
};

/// Unit-power fundamental Gaussian at its waist. Throws ConfigError when the
/// waist spans fewer than 8 samples.
ComplexField gaussian_source(const LinkGeometry& geom, std::size_t n, double spacing);
ComplexField gaussian_source(const LinkGeometry& geom, const GridSettings& grid);

enum class PropagationKernel { AngularSpectrum, FresnelTwoStep };

/// (D/2)^2 / (lambda dz) for the field's current window D.
double grid_fresnel_number(const ComplexField& field, double dz);

/// Angular spectrum when the window Fresnel number exceeds 1 and no rescaling
/// is requested; two-step Fresnel otherwise.
PropagationKernel select_kernel(const ComplexField& field, double dz,
                                std::optional<double> output_spacing);

struct VacuumOptions {
  std::optional<double> output_spacing;  // rescale the window (two-step Fresnel)
  double guard_fraction = 1e-4;          // max power fraction within 2 edge cells
  bool check_guard = true;
};

/// Paraxial free-space propagation by dz >= 0. Throws NumericalError when the
/// result puts more than guard_fraction of its power next to the grid edge.
ComplexField propagate_vacuum(const ComplexField& field, double dz, const VacuumOptions& opts = {});

/// Fraction of the field's power within `cells` cells of the grid boundary.
double edge_power_fraction(const ComplexField& field, std::size_t cells = 2);

/// Super-Gaussian absorber over the outer 5% of the window on every side.
void apodize(ComplexField& field);

/// Multiplies by exp(i phi). Throws DomainError on a geometry mismatch.
ComplexField apply_screen(const ComplexField& field, const PhaseScreen& screen);
void apply_screen_inplace(ComplexField& field, const PhaseScreen& screen);

struct PropagationSetup {
  double receiver_spacing;
  bool apodization = true;
  int subharmonic_levels = kDefaultSubharmonicLevels;
};

/// Downlink split-step solver for one slab plan. Everything up to the first
/// phase screen is deterministic and computed once at construction; each
/// realize() call then draws the screens from substreams (seed, realization, slab).
class ChannelPropagator {
 public:
  ChannelPropagator(const ComplexField& source, SlabPlan plan, PropagationSetup setup);

  [[nodiscard]] ComplexField realize(std::uint64_t seed, std::uint32_t realization) const;
  [[nodiscard]] const SlabPlan& plan() const { return plan_; }
  [[nodiscard]] std::size_t screen_count() const { return steps_.size(); }

 private:
  struct Step {
    std::size_t slab_index;
    double distance_after;  // vacuum hop following this slab's screen
  };

  ComplexField hop(const ComplexField& field, double dz) const;

  SlabPlan plan_;
  PropagationSetup setup_;
  ComplexField entry_;  // field at the first screen plane (or the receiver)
  std::vector<Step> steps_;
};

/// Convenience wrapper: one realization through the plan from the source.
ComplexField split_step(const ComplexField& source, const SlabPlan& plan,
                        const PropagationSetup& setup, std::uint64_t seed,
                        std::uint32_t realization);

/// Exact area of the intersection of the cell [x0,x1]x[y0,y1] with the disc of
/// the given radius centred at the origin.
double circle_cell_overlap(double x0, double x1, double y0, double y1, double radius);

/// Power inside the circular aperture, rim cells weighted by their overlap area.
/// Throws ConfigError when the radius is below two grid cells.
double aperture_transmissivity(const ComplexField& field, double aperture_radius);

/// Beam radius from the intensity second moment about the optical axis,
/// w = sqrt(2 <r^2>), which equals the 1/e^2 radius for a Gaussian.
double second_moment_radius(const ComplexField& field);

/// Writes `<stem>.bin` (native-endian float64 intensity, row-major) and `<stem>.txt`.
void dump_intensity(const ComplexField& field, const std::filesystem::path& stem);

}  // namespace duallink
