#include "duallink/screens.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include <fmt/core.h>
#include <fmt/os.h>

#include "duallink/errors.hpp"
#include "duallink/fft.hpp"

namespace duallink {

std::size_t SlabPlan::screen_count() const {
  std::size_t count = 0;
  for (const auto& s : slabs) count += s.has_screen ? 1 : 0;
  return count;
}

double SlabPlan::total_path_length() const {
  double total = 0.0;
  for (const auto& s : slabs) total += s.path_length;
  return total;
}

double SlabPlan::turbulent_path_length() const {
  double total = 0.0;
  for (const auto& s : slabs) total += s.has_screen ? s.path_length : 0.0;
  return total;
}

namespace {

double local_scintillation(const LinkGeometry& geom, const AtmosphereProfile& profile, double lo,
                           double hi) {
  return scintillation_index(rytov_variance(geom, profile, lo, hi));
}

double effective_top(const LinkGeometry& geom, const AtmosphereProfile& profile) {
  const double h0 = geom.ground_altitude;
  const double total = cn2_integral(profile, h0, geom.satellite_altitude);
  const double target = kEffectiveTopFraction * total;
  double lo = h0;
  double hi = geom.satellite_altitude;
  for (int i = 0; i < 60 && hi - lo > 1e-6; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (cn2_integral(profile, h0, mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

// sqrt(PSD(f; r0 = 1)) * df on the centered frequency grid, DC zeroed.
const std::vector<double>& unit_amplitudes(std::size_t n, double spacing,
                                           const TurbulenceScales& scales) {
  struct Cache {
    std::size_t n = 0;
    double spacing = 0.0;
    double outer = 0.0;
    double inner = 0.0;
    std::vector<double> values;
  };
  thread_local Cache cache;
  if (cache.n == n && cache.spacing == spacing && cache.outer == scales.outer &&
      cache.inner == scales.inner) {
    return cache.values;
  }
  const double df = 1.0 / (static_cast<double>(n) * spacing);
  const auto half = static_cast<std::ptrdiff_t>(n / 2);
  cache.values.assign(n * n, 0.0);
  for (std::size_t row = 0; row < n; ++row) {
    const double fy = static_cast<double>(static_cast<std::ptrdiff_t>(row) - half) * df;
    for (std::size_t col = 0; col < n; ++col) {
      const double fx = static_cast<double>(static_cast<std::ptrdiff_t>(col) - half) * df;
      const bool dc = row == n / 2 && col == n / 2;
      cache.values[row * n + col] =
          dc ? 0.0 : std::sqrt(mvk_psd(std::hypot(fx, fy), 1.0, scales.outer, scales.inner)) * df;
    }
  }
  cache.n = n;
  cache.spacing = spacing;
  cache.outer = scales.outer;
  cache.inner = scales.inner;
  return cache.values;
}

}  // namespace

SlabPlan plan_slabs(const LinkGeometry& geom, const AtmosphereProfile& profile,
                    const Diagnostics& diagnostics) {
  geom.validate();
  SlabPlan plan;
  plan.scales = {profile.outer_scale(), profile.inner_scale()};
  const double h0 = geom.ground_altitude;
  const double top_of_path = geom.satellite_altitude;
  const double sec = geom.secant();

  if (std::holds_alternative<NoTurbulence>(diagnostics) || !profile.turbulent()) {
    plan.effective_top = h0;
    plan.slabs.push_back({h0, top_of_path, (top_of_path - h0) * sec, NoTurbulence{}, 0.0, false});
    return plan;
  }

  const auto& diag = std::get<TurbulenceDiagnostics>(diagnostics);
  plan.whole_channel_scintillation = diag.scintillation_index;
  const double limit =
      std::min(kSlabScintillationLimit, kSlabScintillationLimit * diag.scintillation_index);
  const double top = effective_top(geom, profile);
  plan.effective_top = top;

  double low = h0;
  while (low < top) {
    if (plan.slabs.size() >= kMaxSlabs) {
      throw ConfigError(fmt::format(
          "slab plan needs more than {} slabs below {:.1f} m; check turbulence settings",
          kMaxSlabs, top));
    }
    double high = top;
    if (!(local_scintillation(geom, profile, low, top) < limit)) {
      // Largest upper boundary with local scintillation still below the limit.
      double ok = low;
      double bad = top;
      for (int i = 0; i < 50 && bad - ok > 1e-9 * top; ++i) {
        const double mid = 0.5 * (ok + bad);
        if (local_scintillation(geom, profile, low, mid) < limit) {
          ok = mid;
        } else {
          bad = mid;
        }
      }
      if (!(ok > low)) {
        throw ConfigError(fmt::format("cannot satisfy slab scintillation limit above {:.3f} m", low));
      }
      high = ok;
    }
    plan.slabs.push_back({low, high, (high - low) * sec, fried_parameter(geom, profile, low, high),
                          local_scintillation(geom, profile, low, high), true});
    low = high;
  }
  if (top < top_of_path) {
    plan.slabs.push_back({top, top_of_path, (top_of_path - top) * sec, NoTurbulence{}, 0.0, false});
  }
  return plan;
}

double mvk_psd(double f, double fried, double outer_scale, double inner_scale) {
  if (f < 0.0) throw DomainError("spatial frequency must be non-negative");
  const double f0 = 1.0 / outer_scale;
  const double fm = 0.9422 / inner_scale;
  return 0.023 * std::pow(fried, -5.0 / 3.0) * std::exp(-(f * f) / (fm * fm)) /
         std::pow(f * f + f0 * f0, 11.0 / 6.0);
}

PhaseScreen generate_screen(const Slab& slab, std::size_t slab_index,
                            const TurbulenceScales& scales, std::size_t n, double spacing,
                            const StreamId& stream, int subharmonic_levels) {
  if (n < 4 || (n & (n - 1)) != 0) throw DomainError(fmt::format("grid size {} is not a power of two", n));
  if (!(spacing > 0.0)) throw DomainError("grid spacing must be positive");

  PhaseScreen screen;
  screen.n = n;
  screen.spacing = spacing;
  screen.slab_index = slab_index;
  screen.stream = stream;
  screen.phase.assign(n * n, 0.0);
  screen.low_frequency_unresolved = static_cast<double>(n) * spacing < 0.5 * scales.outer;
  if (!is_turbulent(slab.fried)) return screen;

  const double r0 = std::get<double>(slab.fried);
  const double width = static_cast<double>(n) * spacing;
  const auto half = static_cast<std::ptrdiff_t>(n / 2);
  CounterStream rng(stream);

  // sqrt(PSD) scales as r0^(-5/6), so the amplitude table is shared by all slabs.
  const std::vector<double>& unit = unit_amplitudes(n, spacing, scales);
  const double r0_factor = std::pow(r0, -5.0 / 6.0);
  AlignedGrid spectrum(n);
  cdouble* spec = spectrum.data();
  for (std::size_t i = 0; i < n * n; ++i) {
    const double re = rng.next_normal();
    const double im = rng.next_normal();
    spec[i] = cdouble(re, im) * (unit[i] * r0_factor);
  }
  centered_fft2d_inplace(spectrum, FftDirection::Backward);
  for (std::size_t i = 0; i < n * n; ++i) screen.phase[i] = spectrum.data()[i].real();

  if (subharmonic_levels > 0) {
    std::vector<double> low(n * n, 0.0);
    std::vector<cdouble> ex(n), ey(n);
    for (int level = 1; level <= subharmonic_levels; ++level) {
      const double dfp = 1.0 / (std::pow(3.0, level) * width);
      for (int iy = -1; iy <= 1; ++iy) {
        for (int ix = -1; ix <= 1; ++ix) {
          const double re = rng.next_normal();
          const double im = rng.next_normal();
          if (ix == 0 && iy == 0) continue;
          const double fx = ix * dfp;
          const double fy = iy * dfp;
          const cdouble c = cdouble(re, im) *
                            (std::sqrt(mvk_psd(std::hypot(fx, fy), r0, scales.outer, scales.inner)) * dfp);
          for (std::size_t j = 0; j < n; ++j) {
            const double x = static_cast<double>(static_cast<std::ptrdiff_t>(j) - half) * spacing;
            ex[j] = std::polar(1.0, 2.0 * std::numbers::pi * fx * x);
            ey[j] = std::polar(1.0, 2.0 * std::numbers::pi * fy * x);
          }
          for (std::size_t row = 0; row < n; ++row) {
            const cdouble a = c * ey[row];
            double* out = low.data() + row * n;
            for (std::size_t col = 0; col < n; ++col) {
              out[col] += a.real() * ex[col].real() - a.imag() * ex[col].imag();
            }
          }
        }
      }
    }
    double mean = 0.0;
    for (double v : low) mean += v;
    mean /= static_cast<double>(low.size());
    for (std::size_t i = 0; i < n * n; ++i) screen.phase[i] += low[i] - mean;
  }
  return screen;
}

std::vector<double> screen_structure_function(std::span<const PhaseScreen> screens,
                                              std::span<const double> separations) {
  if (screens.size() < 50) {
    throw DomainError(fmt::format("structure function needs >= 50 screens, got {}", screens.size()));
  }
  const std::size_t n = screens.front().n;
  const double spacing = screens.front().spacing;
  for (const auto& s : screens) {
    if (s.n != n || std::abs(s.spacing - spacing) > 1e-12 * spacing) {
      throw DomainError("screens do not share a common geometry");
    }
  }

  std::vector<double> result;
  result.reserve(separations.size());
  for (double r : separations) {
    const long lag_l = std::lround(r / spacing);
    if (r < 0.0 || lag_l < 0 || static_cast<std::size_t>(lag_l) >= n) {
      throw DomainError(fmt::format("separation {} m is outside the {}-cell grid", r, n));
    }
    const auto lag = static_cast<std::size_t>(lag_l);
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : screens) {
      for (std::size_t row = 0; row < n; ++row) {
        for (std::size_t col = 0; col + lag < n; ++col) {
          const double dx = s.at(row, col + lag) - s.at(row, col);
          const double dy = s.at(col + lag, row) - s.at(col, row);
          sum += dx * dx + dy * dy;
          count += 2;
        }
      }
    }
    result.push_back(sum / static_cast<double>(count));
  }
  return result;
}

void dump_screen(const PhaseScreen& screen, const std::filesystem::path& stem) {
  auto bin_path = stem;
  bin_path += ".bin";
  auto txt_path = stem;
  txt_path += ".txt";
  std::ofstream bin(bin_path, std::ios::binary);
  bin.write(reinterpret_cast<const char*>(screen.phase.data()),
            static_cast<std::streamsize>(screen.phase.size() * sizeof(double)));
  if (!bin) throw std::runtime_error(fmt::format("cannot write {}", bin_path.string()));
  auto txt = fmt::output_file(txt_path.string());
  txt.print("n={}\nspacing_m={:.17g}\nslab_index={}\nseed={}\nstream_major={}\nstream_minor={}\n",
            screen.n, screen.spacing, screen.slab_index, screen.stream.seed, screen.stream.major,
            screen.stream.minor);
}

}  // namespace duallink
