#include "duallink/optics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/core.h>
#include <fmt/os.h>

#include "duallink/errors.hpp"

namespace duallink {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kApodizationBand = 0.05;
// exp(-ln(1e6) u^4): the absorber reaches 1e-6 in amplitude at the window edge.
constexpr double kApodizationStrength = 13.815510557964274;

bool same_spacing(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); }

void angular_spectrum_inplace(ComplexField& field, double dz) {
  const std::size_t n = field.n();
  const double df = 1.0 / field.window();
  std::vector<cdouble> h(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double idx = k < n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
    const double f = idx * df;
    h[k] = std::polar(1.0, -kPi * field.wavelength * dz * f * f);
  }
  fft2d_inplace(field.samples, FftDirection::Forward);
  const double norm = 1.0 / static_cast<double>(n * n);
  for (std::size_t row = 0; row < n; ++row) {
    const cdouble hy = h[row] * norm;
    cdouble* data = field.samples.data() + row * n;
    for (std::size_t col = 0; col < n; ++col) data[col] *= hy * h[col];
  }
  fft2d_inplace(field.samples, FftDirection::Backward);
  field.z += dz;
}

// Single-FFT Fresnel transform; output spacing is lambda |dz| / (N spacing).
void fresnel_one_step_inplace(ComplexField& field, double dz) {
  const std::size_t n = field.n();
  const double k = 2.0 * kPi / field.wavelength;
  const double d1 = field.spacing;
  const double d2 = field.wavelength * std::abs(dz) / (static_cast<double>(n) * d1);

  std::vector<cdouble> chirp_in(n), chirp_out(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double idx = static_cast<double>(j) - static_cast<double>(n / 2);
    const double x1 = idx * d1;
    const double x2 = idx * d2;
    chirp_in[j] = std::polar(1.0, k * x1 * x1 / (2.0 * dz));
    chirp_out[j] = std::polar(1.0, k * x2 * x2 / (2.0 * dz));
  }
  for (std::size_t row = 0; row < n; ++row) {
    cdouble* data = field.samples.data() + row * n;
    for (std::size_t col = 0; col < n; ++col) data[col] *= chirp_in[row] * chirp_in[col];
  }
  centered_fft2d_inplace(field.samples, dz > 0.0 ? FftDirection::Forward : FftDirection::Backward);
  const cdouble prefactor = d1 * d1 / (cdouble(0.0, 1.0) * field.wavelength * dz);
  for (std::size_t row = 0; row < n; ++row) {
    cdouble* data = field.samples.data() + row * n;
    const cdouble py = prefactor * chirp_out[row];
    for (std::size_t col = 0; col < n; ++col) data[col] *= py * chirp_out[col];
  }
  field.spacing = d2;
  field.z += dz;
}

void fresnel_two_step_inplace(ComplexField& field, double dz, double output_spacing) {
  const double m = output_spacing / field.spacing;
  // m == 1 degenerates to two equal hops, which also returns to the input spacing.
  const double first = same_spacing(m, 1.0) ? 0.5 * dz : dz / (1.0 - m);
  const double z_start = field.z;
  fresnel_one_step_inplace(field, first);
  fresnel_one_step_inplace(field, dz - first);
  field.spacing = output_spacing;
  field.z = z_start + dz;
}

std::vector<double> apodization_profile(std::size_t n) {
  std::vector<double> mask(n, 1.0);
  const double half = 0.5 * static_cast<double>(n);
  const double inner = (0.5 - kApodizationBand) * static_cast<double>(n);
  const double band = kApodizationBand * static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double dist = std::abs(static_cast<double>(j) - half);
    if (dist > inner) {
      const double u = (dist - inner) / band;
      mask[j] = std::exp(-kApodizationStrength * u * u * u * u);
    }
  }
  return mask;
}

// Area of the disc (radius r, centred at the origin) within {X <= x, Y <= y}.
double disc_quadrant_area(double x, double y, double r) {
  if (x <= -r || y <= -r) return 0.0;
  const auto g = [r](double t) {
    t = std::clamp(t, -r, r);
    return 0.5 * (t * std::sqrt(std::max(0.0, r * r - t * t)) + r * r * std::asin(t / r));
  };
  const double xe = std::min(x, r);
  if (y >= r) return 2.0 * (g(xe) - g(-r));
  const double xb = std::sqrt(r * r - y * y);
  double area = 0.0;
  if (y >= 0.0) {
    area += 2.0 * (g(std::min(xe, -xb)) - g(-r));
    if (xe > xb) area += 2.0 * (g(xe) - g(xb));
  }
  if (xe > -xb) {
    const double b = std::min(xe, xb);
    area += y * (b + xb) + g(b) - g(-xb);
  }
  return area;
}

}  // namespace

double ComplexField::power() const {
  double sum = 0.0;
  for (const cdouble& v : samples.span()) sum += std::norm(v);
  return sum * spacing * spacing;
}

double GridSettings::transmitter_spacing(const LinkGeometry& geom) const {
  return tx_window_factor * geom.beam_waist / static_cast<double>(n);
}

double GridSettings::receiver_spacing(const LinkGeometry& geom) const {
  const double window = std::max(rx_window_factor * geom.beam_radius(geom.path_length()),
                                 rx_aperture_factor * max_aperture);
  return window / static_cast<double>(n);
}

ComplexField gaussian_source(const LinkGeometry& geom, std::size_t n, double spacing) {
  geom.validate();
  if (n < 4 || (n & (n - 1)) != 0) throw ConfigError(fmt::format("grid size {} is not a power of two", n));
  if (geom.beam_waist / spacing < 8.0) {
    throw ConfigError(fmt::format("beam waist {} m spans only {:.2f} samples (need >= 8)",
                                  geom.beam_waist, geom.beam_waist / spacing));
  }
  ComplexField field;
  field.samples = AlignedGrid(n);
  field.spacing = spacing;
  field.wavelength = geom.wavelength;
  field.z = 0.0;
  const double w = geom.beam_waist;
  const double amplitude = std::sqrt(2.0 / kPi) / w;
  for (std::size_t row = 0; row < n; ++row) {
    const double y = field.coordinate(row);
    for (std::size_t col = 0; col < n; ++col) {
      const double x = field.coordinate(col);
      field.samples(row, col) = amplitude * std::exp(-(x * x + y * y) / (w * w));
    }
  }
  return field;
}

ComplexField gaussian_source(const LinkGeometry& geom, const GridSettings& grid) {
  return gaussian_source(geom, grid.n, grid.transmitter_spacing(geom));
}

double grid_fresnel_number(const ComplexField& field, double dz) {
  const double half = 0.5 * field.window();
  return half * half / (field.wavelength * dz);
}

PropagationKernel select_kernel(const ComplexField& field, double dz,
                                std::optional<double> output_spacing) {
  if (output_spacing && !same_spacing(*output_spacing, field.spacing)) {
    return PropagationKernel::FresnelTwoStep;
  }
  if (dz == 0.0 || grid_fresnel_number(field, dz) > 1.0) return PropagationKernel::AngularSpectrum;
  return PropagationKernel::FresnelTwoStep;
}

double edge_power_fraction(const ComplexField& field, std::size_t cells) {
  const std::size_t n = field.n();
  double edge = 0.0;
  double total = 0.0;
  for (std::size_t row = 0; row < n; ++row) {
    const bool row_edge = row < cells || row + cells >= n;
    for (std::size_t col = 0; col < n; ++col) {
      const double p = std::norm(field.samples(row, col));
      total += p;
      if (row_edge || col < cells || col + cells >= n) edge += p;
    }
  }
  return total > 0.0 ? edge / total : 0.0;
}

ComplexField propagate_vacuum(const ComplexField& field, double dz, const VacuumOptions& opts) {
  if (!(dz >= 0.0)) throw DomainError(fmt::format("propagation distance must be >= 0, got {}", dz));
  const PropagationKernel kernel = select_kernel(field, dz, opts.output_spacing);
  if (dz == 0.0 && kernel != PropagationKernel::AngularSpectrum) {
    throw DomainError("cannot rescale the window over a zero propagation distance");
  }
  ComplexField out = field;
  if (kernel == PropagationKernel::AngularSpectrum) {
    angular_spectrum_inplace(out, dz);
  } else {
    fresnel_two_step_inplace(out, dz, opts.output_spacing.value_or(field.spacing));
  }
  if (opts.check_guard) {
    const double edge = edge_power_fraction(out);
    if (edge > opts.guard_fraction) {
      throw NumericalError(fmt::format(
          "aliasing guard: {:.3e} of the power lies within 2 cells of the edge after a {:.6g} m "
          "{} hop (window {:.4g} m, N={})",
          edge, dz,
          kernel == PropagationKernel::AngularSpectrum ? "angular-spectrum" : "two-step Fresnel",
          out.window(), out.n()));
    }
  }
  return out;
}

void apodize(ComplexField& field) {
  const std::size_t n = field.n();
  const std::vector<double> mask = apodization_profile(n);
  for (std::size_t row = 0; row < n; ++row) {
    cdouble* data = field.samples.data() + row * n;
    for (std::size_t col = 0; col < n; ++col) data[col] *= mask[row] * mask[col];
  }
}

void apply_screen_inplace(ComplexField& field, const PhaseScreen& screen) {
  if (screen.n != field.n() || !same_spacing(screen.spacing, field.spacing)) {
    throw DomainError(fmt::format("screen grid ({} x {:.6g} m) does not match field ({} x {:.6g} m)",
                                  screen.n, screen.spacing, field.n(), field.spacing));
  }
  cdouble* data = field.samples.data();
  for (std::size_t i = 0; i < screen.phase.size(); ++i) {
    data[i] *= std::polar(1.0, screen.phase[i]);
  }
}

ComplexField apply_screen(const ComplexField& field, const PhaseScreen& screen) {
  ComplexField out = field;
  apply_screen_inplace(out, screen);
  return out;
}

ChannelPropagator::ChannelPropagator(const ComplexField& source, SlabPlan plan,
                                     PropagationSetup setup)
    : plan_(std::move(plan)), setup_(setup) {
  // Walk the path from the satellite down: vacuum slabs accumulate distance,
  // turbulent slabs contribute half a slab before and after their screen.
  double pending = 0.0;
  bool entered = false;
  for (std::size_t i = plan_.slabs.size(); i-- > 0;) {
    const Slab& slab = plan_.slabs[i];
    if (!slab.has_screen) {
      pending += slab.path_length;
      continue;
    }
    pending += 0.5 * slab.path_length;
    if (!entered) {
      entry_ = hop(source, pending);
      entered = true;
    } else {
      steps_.back().distance_after = pending;
    }
    steps_.push_back({i, 0.0});
    pending = 0.5 * slab.path_length;
  }
  if (!entered) {
    entry_ = hop(source, pending);
  } else {
    steps_.back().distance_after = pending;
  }
}

ComplexField ChannelPropagator::hop(const ComplexField& field, double dz) const {
  VacuumOptions opts;
  opts.output_spacing = setup_.receiver_spacing;
  ComplexField out = propagate_vacuum(field, dz, opts);
  if (setup_.apodization) apodize(out);
  return out;
}

ComplexField ChannelPropagator::realize(std::uint64_t seed, std::uint32_t realization) const {
  ComplexField field = entry_;
  for (const Step& step : steps_) {
    const StreamId stream{seed, StreamDomain::PhaseScreen, realization,
                          static_cast<std::uint32_t>(step.slab_index)};
    const PhaseScreen screen =
        generate_screen(plan_.slabs[step.slab_index], step.slab_index, plan_.scales, field.n(),
                        field.spacing, stream, setup_.subharmonic_levels);
    apply_screen_inplace(field, screen);
    field = hop(field, step.distance_after);
  }
  return field;
}

ComplexField split_step(const ComplexField& source, const SlabPlan& plan,
                        const PropagationSetup& setup, std::uint64_t seed,
                        std::uint32_t realization) {
  return ChannelPropagator(source, plan, setup).realize(seed, realization);
}

double circle_cell_overlap(double x0, double x1, double y0, double y1, double radius) {
  return disc_quadrant_area(x1, y1, radius) - disc_quadrant_area(x0, y1, radius) -
         disc_quadrant_area(x1, y0, radius) + disc_quadrant_area(x0, y0, radius);
}

double aperture_transmissivity(const ComplexField& field, double aperture_radius) {
  const double d = field.spacing;
  if (!(aperture_radius >= 2.0 * d)) {
    throw ConfigError(fmt::format("aperture radius {} m is below two grid cells ({} m)",
                                  aperture_radius, 2.0 * d));
  }
  const std::size_t n = field.n();
  const double half_cell = 0.5 * d;
  const double cell_area = d * d;
  const auto center = static_cast<double>(n / 2);
  const auto reach = static_cast<std::ptrdiff_t>(std::ceil(aperture_radius / d)) + 1;
  const auto lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(n / 2) - reach));
  const auto hi = static_cast<std::size_t>(std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1,
                                                                   static_cast<std::ptrdiff_t>(n / 2) + reach));
  double eta = 0.0;
  for (std::size_t row = lo; row <= hi; ++row) {
    const double y = (static_cast<double>(row) - center) * d;
    for (std::size_t col = lo; col <= hi; ++col) {
      const double x = (static_cast<double>(col) - center) * d;
      const double near_x = std::max(0.0, std::abs(x) - half_cell);
      const double near_y = std::max(0.0, std::abs(y) - half_cell);
      if (near_x * near_x + near_y * near_y >= aperture_radius * aperture_radius) continue;
      const double far_x = std::abs(x) + half_cell;
      const double far_y = std::abs(y) + half_cell;
      double weight = 1.0;
      if (far_x * far_x + far_y * far_y > aperture_radius * aperture_radius) {
        weight = circle_cell_overlap(x - half_cell, x + half_cell, y - half_cell, y + half_cell,
                                     aperture_radius) /
                 cell_area;
      }
      eta += weight * std::norm(field.samples(row, col));
    }
  }
  return std::clamp(eta * cell_area, 0.0, 1.0);
}

double second_moment_radius(const ComplexField& field) {
  const std::size_t n = field.n();
  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t row = 0; row < n; ++row) {
    const double y = field.coordinate(row);
    for (std::size_t col = 0; col < n; ++col) {
      const double x = field.coordinate(col);
      const double p = std::norm(field.samples(row, col));
      weighted += p * (x * x + y * y);
      total += p;
    }
  }
  return std::sqrt(2.0 * weighted / total);
}

void dump_intensity(const ComplexField& field, const std::filesystem::path& stem) {
  std::vector<double> intensity(field.samples.size());
  for (std::size_t i = 0; i < intensity.size(); ++i) intensity[i] = std::norm(field.samples.data()[i]);
  auto bin_path = stem;
  bin_path += ".bin";
  auto txt_path = stem;
  txt_path += ".txt";
  std::ofstream bin(bin_path, std::ios::binary);
  bin.write(reinterpret_cast<const char*>(intensity.data()),
            static_cast<std::streamsize>(intensity.size() * sizeof(double)));
  if (!bin) throw std::runtime_error(fmt::format("cannot write {}", bin_path.string()));
  auto txt = fmt::output_file(txt_path.string());
  txt.print("n={}\nspacing_m={:.17g}\nz_m={:.17g}\nwavelength_m={:.17g}\n", field.n(),
            field.spacing, field.z, field.wavelength);
}

}  // namespace duallink
