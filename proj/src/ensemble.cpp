#include "duallink/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <boost/crc.hpp>
#include <fmt/core.h>

#include "duallink/errors.hpp"

namespace duallink {
namespace {

constexpr std::string_view kMagic = "# duallink transmissivity ensemble";
constexpr std::string_view kSeparator = "---";
constexpr std::string_view kChecksumKey = "checksum_crc32";

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

[[noreturn]] void rethrow_with_index(std::exception_ptr error, std::size_t index) {
  const auto prefix = fmt::format("realization {}: ", index);
  try {
    std::rethrow_exception(error);
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(prefix + e.what());
  }
}

std::vector<std::string> collect_warnings(const LinkGeometry& geom, const AtmosphereProfile& profile,
                                          const GridSettings& grid, std::span<const double> radii) {
  std::vector<std::string> warnings;
  const double window = grid.receiver_spacing(geom) * static_cast<double>(grid.n);
  if (profile.turbulent() && window < 0.5 * profile.outer_scale()) {
    warnings.push_back(fmt::format("receiver window {:.3g} m is below half the outer scale; "
                                   "low-order turbulence is only partly represented",
                                   window));
  }
  for (double ra : radii) {
    if (ra > grid.max_aperture) {
      warnings.push_back(fmt::format("aperture {:.3g} m exceeds the grid's max_aperture {:.3g} m",
                                     ra, grid.max_aperture));
    }
  }
  return warnings;
}

std::string format_double(double x) { return fmt::format("{:.16e}", x); }

double parse_double(std::string_view text, std::string_view what) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataIntegrityError(fmt::format("malformed {} '{}'", what, text));
  }
  return value;
}

std::uint64_t parse_unsigned(std::string_view text, std::string_view what) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataIntegrityError(fmt::format("malformed {} '{}'", what, text));
  }
  return value;
}

std::uint32_t crc32(std::string_view text) {
  boost::crc_32_type crc;
  crc.process_bytes(text.data(), text.size());
  return crc.checksum();
}

std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

}  // namespace

std::vector<ChannelEnsemble> run_ensemble_apertures(const LinkGeometry& geom,
                                                    const AtmosphereProfile& profile,
                                                    const GridSettings& grid, std::size_t n,
                                                    std::uint64_t master_seed,
                                                    std::span<const double> radii,
                                                    const RunOptions& opts) {
  if (n == 0) throw DomainError("ensemble size must be at least 1");
  if (radii.empty()) throw DomainError("at least one aperture radius is required");
  if (n > std::numeric_limits<std::uint32_t>::max()) throw DomainError("ensemble size exceeds 2^32");
  geom.validate();

  const Diagnostics diagnostics = greenwood_and_coherence(geom, profile);
  const SlabPlan plan = plan_slabs(geom, profile, diagnostics);
  const ComplexField source = gaussian_source(geom, grid);
  const double spacing = grid.receiver_spacing(geom);
  for (double ra : radii) {
    if (!(ra >= 2.0 * spacing)) {
      throw ConfigError(fmt::format("aperture radius {} m is below two receiver cells ({} m)", ra,
                                    2.0 * spacing));
    }
  }
  const ChannelPropagator propagator(source, plan,
                                     {spacing, grid.apodization, grid.subharmonic_levels});

  // Index-addressed storage: etas[i * radii + j] is realization i, aperture j.
  std::vector<double> etas(n * radii.size(), 0.0);
  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::size_t failed_index = n;
  std::exception_ptr failure;

  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure && failed_index < i) return;
      }
      try {
        const ComplexField field = propagator.realize(master_seed, static_cast<std::uint32_t>(i));
        for (std::size_t j = 0; j < radii.size(); ++j) {
          etas[i * radii.size() + j] = aperture_transmissivity(field, radii[j]);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };

  const unsigned threads = std::min<std::size_t>(resolve_threads(opts.threads), n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) rethrow_with_index(failure, failed_index);

  std::optional<double> tau;
  if (const auto* d = std::get_if<TurbulenceDiagnostics>(&diagnostics)) tau = d->coherence_time;

  std::vector<ChannelEnsemble> out;
  out.reserve(radii.size());
  for (std::size_t j = 0; j < radii.size(); ++j) {
    ChannelEnsemble ens;
    ens.metadata.geometry = geom;
    ens.metadata.geometry.aperture_radius = radii[j];
    ens.metadata.profile = profile;
    ens.metadata.grid = grid;
    ens.metadata.seed = master_seed;
    ens.metadata.realizations = n;
    ens.metadata.tool_version = DUALLINK_VERSION;
    ens.metadata.warnings = collect_warnings(geom, profile, grid, radii.subspan(j, 1));
    ens.coherence_time = tau;
    ens.etas.resize(n);
    for (std::size_t i = 0; i < n; ++i) ens.etas[i] = etas[i * radii.size() + j];
    out.push_back(std::move(ens));
  }
  return out;
}

ChannelEnsemble run_ensemble(const LinkGeometry& geom, const AtmosphereProfile& profile,
                             const GridSettings& grid, std::size_t n, std::uint64_t master_seed,
                             const RunOptions& opts) {
  const double radius = geom.aperture_radius;
  return std::move(run_ensemble_apertures(geom, profile, grid, n, master_seed, {&radius, 1}, opts).front());
}

double loss_db(double eta) { return -10.0 * std::log10(eta); }

FadingStats constant_stats(double eta) {
  const double values[] = {eta};
  return fading_stats(values);
}

FadingStats fading_stats(std::span<const double> etas) {
  if (etas.empty()) throw DomainError("fading statistics need a non-empty ensemble");
  double sum = 0.0;
  double sum_sqrt = 0.0;
  double sum_loss = 0.0;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    const double eta = etas[i];
    if (!(eta >= 0.0 && eta <= 1.0)) {
      throw DataIntegrityError(fmt::format("transmissivity {} at index {} is outside [0, 1]", eta, i));
    }
    sum += eta;
    sum_sqrt += std::sqrt(eta);
    sum_loss += loss_db(eta);
  }
  const auto count = static_cast<double>(etas.size());
  FadingStats s{};
  s.mean_eta = sum / count;
  const double mean_sqrt = sum_sqrt / count;
  // Rounding can push <sqrt(eta)>^2 a few ulps past <eta>; Jensen is exact.
  s.eta_f = std::min(mean_sqrt * mean_sqrt, s.mean_eta);
  s.var_sqrt = s.mean_eta - s.eta_f;
  s.mean_loss_db = sum_loss / count;
  double ss = 0.0;
  for (double eta : etas) {
    const double d = loss_db(eta) - s.mean_loss_db;
    ss += d * d;
  }
  s.std_loss_db = etas.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  if (!std::isfinite(s.mean_loss_db)) s.std_loss_db = std::numeric_limits<double>::quiet_NaN();
  return s;
}

FadingStats fading_stats(const ChannelEnsemble& ens) { return fading_stats(ens.etas); }

std::vector<HistogramBin> loss_histogram(const ChannelEnsemble& ens, double bin_width_db) {
  if (!(bin_width_db > 0.0)) throw DomainError("histogram bin width must be positive");
  if (ens.etas.empty()) throw DomainError("histogram needs a non-empty ensemble");
  std::map<long long, std::size_t> counts;
  for (double eta : ens.etas) {
    if (!(eta > 0.0 && eta <= 1.0)) {
      throw DataIntegrityError(fmt::format("transmissivity {} has no finite loss", eta));
    }
    ++counts[static_cast<long long>(std::floor(loss_db(eta) / bin_width_db))];
  }
  const long long first = counts.begin()->first;
  const long long last = counts.rbegin()->first;
  const double norm = 1.0 / (static_cast<double>(ens.etas.size()) * bin_width_db);
  std::vector<HistogramBin> bins;
  bins.reserve(static_cast<std::size_t>(last - first + 1));
  for (long long k = first; k <= last; ++k) {
    const auto it = counts.find(k);
    const double count = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    bins.push_back({(static_cast<double>(k) + 0.5) * bin_width_db, count * norm});
  }
  return bins;
}

std::vector<StepSample> coherence_step_series(const ChannelEnsemble& ens, double duration) {
  if (!ens.coherence_time) throw DomainError("ensemble has no coherence time (no turbulence)");
  if (!(duration > 0.0)) throw DomainError("duration must be positive");
  const double tau = *ens.coherence_time;
  const auto steps = static_cast<std::size_t>(std::floor(duration / tau));
  if (steps == 0) throw DomainError(fmt::format("duration {} s is shorter than one coherence time", duration));
  if (steps > ens.etas.size()) {
    throw DomainError(fmt::format("{} coherence steps requested but the ensemble holds {} realizations",
                                  steps, ens.etas.size()));
  }
  std::vector<StepSample> out(steps);
  for (std::size_t k = 0; k < steps; ++k) out[k] = {static_cast<double>(k) * tau, ens.etas[k]};
  return out;
}

std::string render_ensemble(const ChannelEnsemble& ens) {
  const auto& m = ens.metadata;
  const auto& g = m.geometry;
  const auto& p = m.profile;
  std::string head;
  const auto kv = [&head](std::string_view key, const std::string& value) {
    head += fmt::format("{}={}\n", key, value);
  };
  head += std::string(kMagic) + "\n";
  kv("schema_version", std::to_string(kEnsembleSchemaVersion));
  kv("tool_version", sanitize(m.tool_version));
  kv("config_hash", sanitize(m.config_hash));
  kv("seed", std::to_string(m.seed));
  kv("realizations", std::to_string(m.realizations));
  kv("ground_altitude_m", format_double(g.ground_altitude));
  kv("satellite_altitude_m", format_double(g.satellite_altitude));
  kv("zenith_deg", format_double(g.zenith.value));
  kv("wavelength_m", format_double(g.wavelength));
  kv("beam_waist_m", format_double(g.beam_waist));
  kv("aperture_radius_m", format_double(g.aperture_radius));
  kv("ground_turbulence", format_double(p.ground_turbulence()));
  kv("ground_wind_mps", format_double(p.ground_wind()));
  kv("outer_scale_m", format_double(p.outer_scale()));
  kv("inner_scale_m", format_double(p.inner_scale()));
  kv("cn2_multiplier", format_double(p.cn2_multiplier()));
  kv("grid_n", std::to_string(m.grid.n));
  kv("tx_window_factor", format_double(m.grid.tx_window_factor));
  kv("rx_window_factor", format_double(m.grid.rx_window_factor));
  kv("rx_aperture_factor", format_double(m.grid.rx_aperture_factor));
  kv("max_aperture_m", format_double(m.grid.max_aperture));
  kv("apodization", m.grid.apodization ? "true" : "false");
  kv("subharmonic_levels", std::to_string(m.grid.subharmonic_levels));
  kv("coherence_time_s", ens.coherence_time ? format_double(*ens.coherence_time) : "none");
  for (const auto& w : m.warnings) kv("warning", sanitize(w));

  std::string body = std::string(kSeparator) + "\n";
  for (double eta : ens.etas) body += format_double(eta) + "\n";
  const std::uint32_t crc = crc32(head + body);
  return head + fmt::format("{}={:08x}\n", kChecksumKey, crc) + body;
}

ChannelEnsemble parse_ensemble(const std::string& text) {
  const std::string checksum_prefix = std::string(kChecksumKey) + "=";
  const auto sep = text.find("\n" + std::string(kSeparator) + "\n");
  if (sep == std::string::npos) throw DataIntegrityError("ensemble file has no data separator");
  const auto ck = text.rfind("\n" + checksum_prefix, sep);
  if (ck == std::string::npos) throw DataIntegrityError("ensemble file has no checksum");
  const auto ck_end = text.find('\n', ck + 1);
  const std::string stored = text.substr(ck + 1 + checksum_prefix.size(), ck_end - ck - 1 - checksum_prefix.size());
  const std::string covered = text.substr(0, ck + 1) + text.substr(ck_end + 1);
  if (fmt::format("{:08x}", crc32(covered)) != stored) {
    throw DataIntegrityError("ensemble checksum mismatch (file truncated or modified)");
  }

  std::istringstream in(covered);
  std::string line;
  std::getline(in, line);
  if (line != kMagic) throw DataIntegrityError("not a duallink ensemble file");
  std::map<std::string, std::string> kv;
  std::vector<std::string> warnings;
  while (std::getline(in, line) && line != kSeparator) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataIntegrityError(fmt::format("malformed header line '{}'", line));
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (key == "warning") {
      warnings.push_back(std::move(value));
    } else if (!kv.emplace(std::move(key), std::move(value)).second) {
      throw DataIntegrityError(fmt::format("duplicate header key in '{}'", line));
    }
  }
  const auto take = [&kv](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw DataIntegrityError(fmt::format("ensemble header lacks '{}'", key));
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  const auto num = [&](const std::string& key) { return parse_double(take(key), key); };
  const auto uint = [&](const std::string& key) { return parse_unsigned(take(key), key); };

  if (const auto version = uint("schema_version"); version != kEnsembleSchemaVersion) {
    throw DataIntegrityError(fmt::format("unsupported ensemble schema version {} (expected {})",
                                         version, kEnsembleSchemaVersion));
  }
  ChannelEnsemble ens;
  auto& m = ens.metadata;
  m.tool_version = take("tool_version");
  m.config_hash = take("config_hash");
  m.seed = uint("seed");
  m.realizations = uint("realizations");
  m.geometry.ground_altitude = num("ground_altitude_m");
  m.geometry.satellite_altitude = num("satellite_altitude_m");
  m.geometry.zenith = Degrees{num("zenith_deg")};
  m.geometry.wavelength = num("wavelength_m");
  m.geometry.beam_waist = num("beam_waist_m");
  m.geometry.aperture_radius = num("aperture_radius_m");
  const double a = num("ground_turbulence");
  const double vg = num("ground_wind_mps");
  const double outer = num("outer_scale_m");
  const double inner = num("inner_scale_m");
  const double mult = num("cn2_multiplier");
  try {
    m.profile = AtmosphereProfile(a, vg, outer, inner, mult);
  } catch (const std::exception& e) {
    throw DataIntegrityError(fmt::format("invalid atmosphere in ensemble header: {}", e.what()));
  }
  m.grid.n = uint("grid_n");
  m.grid.tx_window_factor = num("tx_window_factor");
  m.grid.rx_window_factor = num("rx_window_factor");
  m.grid.rx_aperture_factor = num("rx_aperture_factor");
  m.grid.max_aperture = num("max_aperture_m");
  const std::string apod = take("apodization");
  if (apod != "true" && apod != "false") throw DataIntegrityError("apodization must be true or false");
  m.grid.apodization = apod == "true";
  m.grid.subharmonic_levels = static_cast<int>(uint("subharmonic_levels"));
  const std::string tau = take("coherence_time_s");
  if (tau != "none") ens.coherence_time = parse_double(tau, "coherence_time_s");
  m.warnings = std::move(warnings);
  if (!kv.empty()) throw DataIntegrityError(fmt::format("unknown ensemble header key '{}'", kv.begin()->first));

  while (std::getline(in, line)) {
    const double eta = parse_double(line, "transmissivity");
    if (!(eta >= 0.0 && eta <= 1.0)) {
      throw DataIntegrityError(fmt::format("transmissivity {} is outside [0, 1]", eta));
    }
    ens.etas.push_back(eta);
  }
  if (ens.etas.size() != m.realizations || ens.etas.empty()) {
    throw DataIntegrityError(fmt::format("ensemble lists {} values but declares {}", ens.etas.size(),
                                         m.realizations));
  }
  return ens;
}

void save_ensemble(const ChannelEnsemble& ens, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot open {} for writing", path.string()));
  out << render_ensemble(ens);
  if (!out) throw ConfigError(fmt::format("failed writing {}", path.string()));
}

ChannelEnsemble load_ensemble(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open ensemble file {}", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_ensemble(buffer.str());
}

void write_histogram_csv(std::ostream& out, std::span<const HistogramBin> bins) {
  out << "bin_center_db,density\n";
  for (const auto& b : bins) out << fmt::format("{:.10g},{:.10g}\n", b.center_db, b.density);
}

void write_step_series_csv(std::ostream& out, std::span<const StepSample> steps) {
  out << "t_start_s,eta\n";
  for (const auto& s : steps) out << fmt::format("{:.10g},{:.16e}\n", s.t_start, s.eta);
}

}  // namespace duallink
