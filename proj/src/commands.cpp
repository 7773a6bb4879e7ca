#include "duallink/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "duallink/ensemble.hpp"
#include "duallink/errors.hpp"
#include "duallink/keyrate.hpp"
#include "duallink/protocol.hpp"

namespace duallink {
namespace {

std::string tag(double zenith_deg, double aperture_radius) {
  return fmt::format("z{:g}_ra{:g}", zenith_deg, aperture_radius);
}

std::string provenance(const RunConfig& config) {
  return fmt::format("# duallink {}\n# config_hash={}\n# scenario={}\n", DUALLINK_VERSION,
                     config_hash(config), config.scenario);
}

void prepare_output_dir(const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec || !std::filesystem::is_directory(config.output_dir)) {
    throw ConfigError(fmt::format("cannot create output directory {}: {}", config.output_dir.string(),
                                  ec ? ec.message() : "not a directory"));
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw ConfigError(fmt::format("failed writing {}", path.string()));
}

bool contains(const std::vector<double>& values, double x) {
  return std::any_of(values.begin(), values.end(),
                     [x](double v) { return std::abs(v - x) <= 1e-12 * std::max(1.0, std::abs(v)); });
}

void check_compatible(const RunConfig& config, const ChannelEnsemble& ens,
                      const std::filesystem::path& path) {
  const auto& g = ens.metadata.geometry;
  const auto& l = config.link;
  std::vector<std::string> problems;
  if (!(ens.metadata.profile == config.atmosphere)) problems.emplace_back("atmosphere differs");
  if (g.ground_altitude != l.ground_altitude || g.satellite_altitude != l.satellite_altitude ||
      g.wavelength != l.wavelength || g.beam_waist != l.beam_waist) {
    problems.emplace_back("link geometry differs");
  }
  if (!contains(l.zenith_angles_deg, g.zenith.value)) {
    problems.push_back(fmt::format("zenith {} deg is not configured", g.zenith.value));
  }
  if (!contains(l.aperture_radii, g.aperture_radius)) {
    problems.push_back(fmt::format("aperture {} m is not configured", g.aperture_radius));
  }
  if (!problems.empty()) {
    std::string joined;
    for (const auto& p : problems) joined += (joined.empty() ? "" : "; ") + p;
    throw ConfigError(fmt::format("ensemble {} is incompatible with the config: {}", path.string(), joined));
  }
}

std::vector<std::filesystem::path> resolve_ensembles(const RunConfig& config,
                                                     const std::vector<std::filesystem::path>& given) {
  if (!given.empty()) return given;
  std::vector<std::filesystem::path> out;
  for (double z : config.link.zenith_angles_deg) {
    for (double ra : config.link.aperture_radii) out.push_back(ensemble_path(config, z, ra));
  }
  return out;
}

std::string format_rate(double x) {
  if (std::isinf(x)) return "inf";
  return fmt::format("{:.10e}", x);
}

}  // namespace

std::filesystem::path ensemble_path(const RunConfig& config, double zenith_deg, double aperture_radius) {
  return config.output_dir / fmt::format("ensemble_{}.dat", tag(zenith_deg, aperture_radius));
}

int cmd_simulate_channel(const RunConfig& config, unsigned threads, std::ostream& log) {
  config.validate();
  prepare_output_dir(config);
  const std::string header = provenance(config);
  std::ostringstream stats;
  stats << header;
  stats << "zenith_deg,aperture_radius_m,realizations,mean_eta,eta_f,var_sqrt_eta,mean_loss_db,"
           "std_loss_db,coherence_time_s,step_series\n";

  for (double zenith : config.link.zenith_angles_deg) {
    const LinkGeometry geom = config.link.geometry(zenith, config.link.aperture_radii.front());
    fmt::print(log, "simulating zenith {:g} deg: {} realizations, N={}\n", zenith,
               config.ensemble.realizations, config.grid.n);
    auto ensembles = run_ensemble_apertures(geom, config.atmosphere, config.grid,
                                            config.ensemble.realizations, config.ensemble.seed,
                                            config.link.aperture_radii, RunOptions{threads});
    for (auto& ens : ensembles) {
      ens.metadata.config_hash = config_hash(config);
      const double ra = ens.metadata.geometry.aperture_radius;
      const std::string t = tag(zenith, ra);
      save_ensemble(ens, ensemble_path(config, zenith, ra));
      for (const auto& w : ens.metadata.warnings) fmt::print(log, "warning ({}): {}\n", t, w);

      const FadingStats s = fading_stats(ens);
      {
        std::ostringstream csv;
        csv << header;
        write_histogram_csv(csv, loss_histogram(ens, config.ensemble.histogram_bin_db));
        write_file(config.output_dir / fmt::format("histogram_{}.csv", t), csv.str());
      }
      std::string step_file = "none";
      if (ens.coherence_time) {
        const double steps = std::floor(config.ensemble.step_duration / *ens.coherence_time);
        if (steps >= 1.0 && steps <= static_cast<double>(ens.etas.size())) {
          std::ostringstream csv;
          csv << header;
          const auto series = coherence_step_series(ens, config.ensemble.step_duration);
          write_step_series_csv(csv, series);
          step_file = fmt::format("steps_{}.csv", t);
          write_file(config.output_dir / step_file, csv.str());
        } else {
          fmt::print(log, "note ({}): step series needs {:g} realizations, skipped\n", t, steps);
        }
      }
      stats << fmt::format("{:g},{:g},{},{:.10e},{:.10e},{:.10e},{:.6f},{:.6f},{},{}\n", zenith, ra,
                           ens.etas.size(), s.mean_eta, s.eta_f, s.var_sqrt, s.mean_loss_db,
                           s.std_loss_db,
                           ens.coherence_time ? fmt::format("{:.6e}", *ens.coherence_time) : "none",
                           step_file);
      fmt::print(log, "  ra={:g} m: mean loss {:.3f} dB, std {:.3f} dB, eta_f {:.5f}\n", ra,
                 s.mean_loss_db, s.std_loss_db, s.eta_f);
    }
  }
  write_file(config.output_dir / "stats.csv", stats.str());
  return 0;
}

int cmd_key_rate(const RunConfig& config, const std::vector<std::filesystem::path>& ensembles,
                 std::ostream& log) {
  config.validate();
  prepare_output_dir(config);
  const auto files = resolve_ensembles(config, ensembles);

  std::vector<KeyRateRow> rows;
  for (const auto& path : files) {
    const ChannelEnsemble ens = load_ensemble(path);
    check_compatible(config, ens, path);
    const FadingStats stats = fading_stats(ens);
    for (double db : config.squeezing.levels_db) {
      const RateSummary rates =
          evaluate_rates(stats, config.squeezing.params(db), config.detector, config.finite_size);
      if (!rates.ordered()) {
        throw NumericalError(fmt::format("rate ordering violated for {} at {:g} dB", path.string(), db));
      }
      rows.push_back({ens.metadata.geometry.zenith.value, ens.metadata.geometry.aperture_radius, db,
                      stats, rates});
    }
  }

  const std::string header = provenance(config);
  std::ostringstream csv;
  csv << header;
  write_key_rate_csv(csv, rows);
  write_file(config.output_dir / "key_rate.csv", csv.str());

  const auto& d = config.detector;
  const auto& f = config.finite_size;
  std::ostringstream report;
  report << header;
  report << fmt::format("detector.efficiency={:g}\ndetector.electronic_noise={:g}\n", d.efficiency,
                        d.electronic_noise);
  report << fmt::format(
      "finite_size.block_size={:g}\nfinite_size.kept_length={:g}\nfinite_size.recon_efficiency={:g}\n"
      "finite_size.discretisation={:g}\nfinite_size.epsilon={:g}\nfinite_size.aep_delta={:.10g}\n",
      f.block_size, f.kept_length, f.recon_efficiency, f.discretisation, f.composed_epsilon(),
      aep_delta(f));
  for (double db : config.squeezing.levels_db) {
    std::string loss;
    try {
      loss = fmt::format("{:.2f}", max_tolerable_loss(f, d, db));
    } catch (const NumericalError&) {
      loss = "none";
    }
    report << fmt::format("max_tolerable_loss_db[{:g} dB]={}\n", db, loss);
  }
  for (const auto& r : rows) {
    report << fmt::format("\n[zenith_deg={:g} aperture_radius_m={:g} squeezing_db={:g}]\n",
                          r.zenith_deg, r.aperture_radius, r.squeezing_db);
    report << fmt::format("mean_eta={:.10e}\neta_f={:.10e}\nvar_sqrt_eta={:.10e}\nmean_loss_db={:.6f}\n",
                          r.stats.mean_eta, r.stats.eta_f, r.stats.var_sqrt, r.stats.mean_loss_db);
    report << fmt::format("I_AB={}\nK_asym={}\nK_finite={}\nK_finite_raw={}\nK_ideal={}\nPLOB={}\n",
                          format_rate(r.rates.mutual_info), format_rate(r.rates.k_asym),
                          format_rate(r.rates.k_finite()), format_rate(r.rates.k_finite_raw),
                          format_rate(r.rates.k_ideal), format_rate(r.rates.plob));
    fmt::print(log, "z={:g} ra={:g} {:g} dB: I_AB={:.4f} K_finite={:.4e} (raw {:.4e})\n", r.zenith_deg,
               r.aperture_radius, r.squeezing_db, r.rates.mutual_info, r.rates.k_finite(),
               r.rates.k_finite_raw);
  }
  write_file(config.output_dir / "key_rate_report.txt", report.str());
  return 0;
}

int cmd_protocol_verify(const RunConfig& config, bool sabotage, unsigned threads, std::ostream& log) {
  config.validate();
  prepare_output_dir(config);
  const auto& v = config.verification;
  SqueezingParams params = config.squeezing.params(v.squeezing_db);
  if (sabotage) params.tap = v.sabotage_tap;
  const std::vector<double> etas = v.etas();

  const EmpiricalMoments emp =
      mc_quadrature_sim(params, config.classical, etas, v.shots_per_eta, v.seed, threads);
  const auto comparisons = compare_moments(emp, params, etas);
  for (const auto& w : emp.warnings) fmt::print(log, "warning: {}\n", w);

  double max_z = 0.0;
  std::string worst;
  for (const auto& c : comparisons) {
    if (std::abs(c.z()) > max_z) {
      max_z = std::abs(c.z());
      worst = std::string(moment_name(c.moment));
    }
  }
  // The zero-leakage claim itself: Eve's amplitude quadrature is uncorrelated with Bob's.
  const double eve_bob_z = emp.mean(Moment::XE_XB) / emp.standard_error(Moment::XE_XB);
  const double ber_z = emp.bit_error_z();
  const bool pass = max_z <= v.z_threshold && std::abs(eve_bob_z) <= v.z_threshold &&
                    std::abs(ber_z) <= v.z_threshold;

  const std::string header = provenance(config);
  std::ostringstream csv;
  csv << header;
  write_moments_csv(csv, emp, comparisons);
  write_file(config.output_dir / "protocol_moments.csv", csv.str());

  std::ostringstream report;
  report << header;
  report << fmt::format("sabotage={}\nVs={:.10g}\nVa={:.10g}\ntap={:.10g}\ntransmitted_variance={:.12g}\n",
                        sabotage ? "true" : "false", params.vs, params.va, params.tap,
                        params.transmitted_variance());
  report << fmt::format("alpha={:g}\ncarrier_amplitude={:g}\nshots={}\n", config.classical.alpha,
                        config.classical.carrier, emp.shots);
  report << fmt::format("max_moment_deviation_sigma={:.4f}\nworst_moment={}\n", max_z, worst);
  report << fmt::format("eve_bob_correlation={:.6e}\neve_bob_z={:.4f}\n", emp.mean(Moment::XE_XB), eve_bob_z);
  report << fmt::format("ber_empirical={:.6e}\nber_predicted={:.6e}\nbit_errors={}\nber_z={:.4f}\n",
                        emp.bit_error_rate(), emp.predicted_bit_error_rate(), emp.bit_errors, ber_z);
  report << fmt::format("z_threshold={:g}\nresult={}\n", v.z_threshold, pass ? "PASS" : "FAIL");
  write_file(config.output_dir / "protocol_verify.txt", report.str());

  fmt::print(log,
             "max moment deviation {:.2f} sigma ({}), Eve-Bob z {:.2f}, BER {:.3e} vs {:.3e} (z {:.2f}): {}\n",
             max_z, worst, eve_bob_z, emp.bit_error_rate(), emp.predicted_bit_error_rate(), ber_z,
             pass ? "PASS" : "FAIL");
  return pass ? 0 : 3;
}

int cmd_link_budget(const RunConfig& config, const std::vector<std::filesystem::path>& ensembles,
                    std::ostream& log) {
  config.validate();
  prepare_output_dir(config);
  const auto files = resolve_ensembles(config, ensembles);
  const std::string header = provenance(config);
  const double alpha = config.classical.alpha;

  std::ostringstream summary;
  summary << header;
  summary << "zenith_deg,aperture_radius_m,alpha,realizations,mean_snr,ensemble_ber\n";
  for (const auto& path : files) {
    const ChannelEnsemble ens = load_ensemble(path);
    check_compatible(config, ens, path);
    const double zenith = ens.metadata.geometry.zenith.value;
    const double ra = ens.metadata.geometry.aperture_radius;
    std::ostringstream csv;
    csv << header;
    csv << "realization,eta,snr,ber\n";
    double snr_sum = 0.0;
    double ber_sum = 0.0;
    for (std::size_t i = 0; i < ens.etas.size(); ++i) {
      const double snr = classical_snr(alpha, ens.etas[i]);
      const double ber = classical_ber(snr);
      snr_sum += snr;
      ber_sum += ber;
      csv << fmt::format("{},{:.16e},{:.10e},{:.10e}\n", i, ens.etas[i], snr, ber);
    }
    const auto n = static_cast<double>(ens.etas.size());
    write_file(config.output_dir / fmt::format("link_budget_{}.csv", tag(zenith, ra)), csv.str());
    summary << fmt::format("{:g},{:g},{:g},{},{:.10e},{:.10e}\n", zenith, ra, alpha, ens.etas.size(),
                           snr_sum / n, ber_sum / n);
    fmt::print(log, "z={:g} ra={:g}: mean SNR {:.4g}, ensemble BER {:.4e}\n", zenith, ra, snr_sum / n,
               ber_sum / n);
  }
  write_file(config.output_dir / "link_budget_summary.csv", summary.str());
  return 0;
}

int exit_status_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return 1;
  if (dynamic_cast<const VerificationError*>(&e) != nullptr) return 3;
  return 2;
}

}  // namespace duallink
