#include "duallink/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/crc.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include "duallink/errors.hpp"

namespace duallink {

using nlohmann::json;

LinkGeometry LinkConfig::geometry(double zenith_deg, double aperture_radius) const {
  LinkGeometry g;
  g.ground_altitude = ground_altitude;
  g.satellite_altitude = satellite_altitude;
  g.zenith = Degrees{zenith_deg};
  g.wavelength = wavelength;
  g.beam_waist = beam_waist;
  g.aperture_radius = aperture_radius;
  return g;
}

SqueezingParams SqueezingConfig::params(double level_db) const {
  return anti_squeezed_variance ? SqueezingParams::from_squeezing_db(level_db, *anti_squeezed_variance)
                                : SqueezingParams::from_squeezing_db(level_db);
}

std::vector<double> VerificationConfig::etas() const {
  std::vector<double> out(synthetic_etas);
  for (std::size_t i = 0; i < synthetic_etas; ++i) {
    const double t = synthetic_etas == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(synthetic_etas - 1);
    out[i] = eta_min + t * (eta_max - eta_min);
  }
  return out;
}

void RunConfig::validate() const {
  if (scenario.empty()) throw ConfigError("scenario name must not be empty");
  if (link.zenith_angles_deg.empty()) throw ConfigError("link.zenith_angles_deg must not be empty");
  if (link.aperture_radii.empty()) throw ConfigError("link.aperture_radii_m must not be empty");
  for (double z : link.zenith_angles_deg) link.geometry(z, link.aperture_radii.front()).validate();
  for (double ra : link.aperture_radii) link.geometry(link.zenith_angles_deg.front(), ra).validate();
  if (grid.max_aperture != *std::max_element(link.aperture_radii.begin(), link.aperture_radii.end())) {
    throw ConfigError("grid.max_aperture must equal the largest configured aperture");
  }
  if (grid.n < 64 || (grid.n & (grid.n - 1)) != 0) throw ConfigError("grid.n must be a power of two >= 64");
  if (!(grid.tx_window_factor > 0.0 && grid.rx_window_factor > 0.0 && grid.rx_aperture_factor > 0.0)) {
    throw ConfigError("grid window factors must be positive");
  }
  if (grid.subharmonic_levels < 0 || grid.subharmonic_levels > 8) {
    throw ConfigError("grid.subharmonic_levels must lie in [0, 8]");
  }
  if (ensemble.realizations == 0) throw ConfigError("ensemble.realizations must be >= 1");
  if (!(ensemble.histogram_bin_db > 0.0)) throw ConfigError("ensemble.histogram_bin_db must be positive");
  if (!(ensemble.step_duration > 0.0)) throw ConfigError("ensemble.step_duration_s must be positive");
  if (squeezing.levels_db.empty()) throw ConfigError("squeezing.levels_db must not be empty");
  for (double db : squeezing.levels_db) (void)squeezing.params(db);
  (void)squeezing.params(verification.squeezing_db);
  classical.validate();
  detector.validate();
  finite_size.validate();
  const auto& v = verification;
  if (v.synthetic_etas == 0 || v.shots_per_eta == 0) throw ConfigError("verification counts must be >= 1");
  if (!(v.eta_min >= 0.0 && v.eta_min <= v.eta_max && v.eta_max <= 1.0)) {
    throw ConfigError("verification eta range must satisfy 0 <= eta_min <= eta_max <= 1");
  }
  if (!(v.sabotage_tap > 0.0 && v.sabotage_tap < 1.0)) throw ConfigError("verification.sabotage_tap must lie in (0, 1)");
  if (!(v.z_threshold > 0.0)) throw ConfigError("verification.z_threshold must be positive");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

RunConfig default_config() {
  RunConfig c;
  c.grid.max_aperture = *std::max_element(c.link.aperture_radii.begin(), c.link.aperture_radii.end());
  return c;
}

namespace {

/// Reads one JSON object, remembering which keys were consumed so that
/// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("{} must be an object", label()));
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_unsigned()) throw ConfigError("expected a non-negative integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("expected a string");
      }
      out = v.get<T>();
    } catch (const std::exception& e) {
      throw ConfigError(fmt::format("{}.{}: {}", path_, key, e.what()));
    }
  }

  void read(const std::string& key, std::vector<double>& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const json& v = j_.at(key);
    if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); })) {
      throw ConfigError(fmt::format("{}.{}: expected an array of numbers", path_, key));
    }
    out = v.get<std::vector<double>>();
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, path_.empty() ? key : path_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError(fmt::format("unknown key '{}' in {}", key, label()));
    }
  }

 private:
  [[nodiscard]] std::string label() const { return path_.empty() ? "top level" : "'" + path_ + "'"; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string aep_policy_name(AepEpsilonPolicy p) {
  return p == AepEpsilonPolicy::Composed ? "composed" : "eps_bar";
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  RunConfig c = default_config();
  Section top(root, "");
  top.read("scenario", c.scenario);
  std::string out_dir = c.output_dir.string();
  top.read("output_dir", out_dir);
  c.output_dir = out_dir;

  {
    Section s = top.child("link");
    s.read("ground_altitude_m", c.link.ground_altitude);
    s.read("satellite_altitude_m", c.link.satellite_altitude);
    s.read("wavelength_m", c.link.wavelength);
    s.read("beam_waist_m", c.link.beam_waist);
    s.read("zenith_angles_deg", c.link.zenith_angles_deg);
    s.read("aperture_radii_m", c.link.aperture_radii);
    s.finish();
  }
  {
    Section s = top.child("atmosphere");
    double a = c.atmosphere.ground_turbulence();
    double vg = c.atmosphere.ground_wind();
    double outer = c.atmosphere.outer_scale();
    double inner = c.atmosphere.inner_scale();
    double mult = c.atmosphere.cn2_multiplier();
    s.read("ground_turbulence", a);
    s.read("ground_wind_mps", vg);
    s.read("outer_scale_m", outer);
    s.read("inner_scale_m", inner);
    s.read("cn2_multiplier", mult);
    s.finish();
    try {
      c.atmosphere = AtmosphereProfile(a, vg, outer, inner, mult);
    } catch (const std::exception& e) {
      throw ConfigError(fmt::format("atmosphere: {}", e.what()));
    }
  }
  {
    Section s = top.child("grid");
    s.read("n", c.grid.n);
    s.read("tx_window_factor", c.grid.tx_window_factor);
    s.read("rx_window_factor", c.grid.rx_window_factor);
    s.read("rx_aperture_factor", c.grid.rx_aperture_factor);
    s.read("apodization", c.grid.apodization);
    s.read("subharmonic_levels", c.grid.subharmonic_levels);
    s.finish();
  }
  {
    Section s = top.child("ensemble");
    s.read("realizations", c.ensemble.realizations);
    s.read("seed", c.ensemble.seed);
    s.read("histogram_bin_db", c.ensemble.histogram_bin_db);
    s.read("step_duration_s", c.ensemble.step_duration);
    s.finish();
  }
  {
    Section s = top.child("squeezing");
    s.read("levels_db", c.squeezing.levels_db);
    if (s.has("anti_squeezed_variance")) {
      double va = 0.0;
      s.read("anti_squeezed_variance", va);
      c.squeezing.anti_squeezed_variance = va;
    }
    s.finish();
  }
  {
    Section s = top.child("classical");
    s.read("alpha", c.classical.alpha);
    s.read("carrier_amplitude", c.classical.carrier);
    s.finish();
  }
  {
    Section s = top.child("detector");
    s.read("efficiency", c.detector.efficiency);
    s.read("electronic_noise", c.detector.electronic_noise);
    s.finish();
  }
  {
    Section s = top.child("finite_size");
    auto& f = c.finite_size;
    s.read("block_size", f.block_size);
    f.kept_length = f.block_size / 2.0;
    s.read("kept_length", f.kept_length);
    s.read("recon_efficiency", f.recon_efficiency);
    s.read("discretisation", f.discretisation);
    const bool explicit_split = s.has("eps_sm") || s.has("eps_bar") || s.has("eps_pe") || s.has("eps_cor");
    if (s.has("epsilon")) {
      if (explicit_split) throw ConfigError("finite_size: give either epsilon or the eps_* components, not both");
      double eps = 0.0;
      s.read("epsilon", eps);
      f.eps_sm = f.eps_bar = f.eps_cor = eps / 4.0;
      f.eps_pe = 0.0;
    } else if (explicit_split) {
      for (const char* key : {"eps_sm", "eps_bar", "eps_pe", "eps_cor"}) {
        if (!s.has(key)) throw ConfigError(fmt::format("finite_size: explicit split needs all four eps_* keys (missing {})", key));
      }
      s.read("eps_sm", f.eps_sm);
      s.read("eps_bar", f.eps_bar);
      s.read("eps_pe", f.eps_pe);
      s.read("eps_cor", f.eps_cor);
    }
    std::string policy = aep_policy_name(f.aep_policy);
    s.read("aep_epsilon", policy);
    if (policy == "composed") {
      f.aep_policy = AepEpsilonPolicy::Composed;
    } else if (policy == "eps_bar") {
      f.aep_policy = AepEpsilonPolicy::SmoothingBar;
    } else {
      throw ConfigError(fmt::format("finite_size.aep_epsilon must be 'composed' or 'eps_bar', got '{}'", policy));
    }
    s.finish();
  }
  {
    Section s = top.child("verification");
    auto& v = c.verification;
    s.read("synthetic_etas", v.synthetic_etas);
    s.read("eta_min", v.eta_min);
    s.read("eta_max", v.eta_max);
    s.read("shots_per_eta", v.shots_per_eta);
    s.read("seed", v.seed);
    s.read("squeezing_db", v.squeezing_db);
    s.read("sabotage_tap", v.sabotage_tap);
    s.read("z_threshold", v.z_threshold);
    s.finish();
  }
  top.finish();

  if (!c.link.aperture_radii.empty()) {
    c.grid.max_aperture = *std::max_element(c.link.aperture_radii.begin(), c.link.aperture_radii.end());
  }
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string render_config(const RunConfig& c) {
  json j;
  j["scenario"] = c.scenario;
  j["output_dir"] = c.output_dir.string();
  j["link"] = {
      {"ground_altitude_m", c.link.ground_altitude},
      {"satellite_altitude_m", c.link.satellite_altitude},
      {"wavelength_m", c.link.wavelength},
      {"beam_waist_m", c.link.beam_waist},
      {"zenith_angles_deg", c.link.zenith_angles_deg},
      {"aperture_radii_m", c.link.aperture_radii},
  };
  j["atmosphere"] = {
      {"ground_turbulence", c.atmosphere.ground_turbulence()},
      {"ground_wind_mps", c.atmosphere.ground_wind()},
      {"outer_scale_m", c.atmosphere.outer_scale()},
      {"inner_scale_m", c.atmosphere.inner_scale()},
      {"cn2_multiplier", c.atmosphere.cn2_multiplier()},
  };
  j["grid"] = {
      {"n", c.grid.n},
      {"tx_window_factor", c.grid.tx_window_factor},
      {"rx_window_factor", c.grid.rx_window_factor},
      {"rx_aperture_factor", c.grid.rx_aperture_factor},
      {"apodization", c.grid.apodization},
      {"subharmonic_levels", c.grid.subharmonic_levels},
  };
  j["ensemble"] = {
      {"realizations", c.ensemble.realizations},
      {"seed", c.ensemble.seed},
      {"histogram_bin_db", c.ensemble.histogram_bin_db},
      {"step_duration_s", c.ensemble.step_duration},
  };
  j["squeezing"] = {{"levels_db", c.squeezing.levels_db}};
  if (c.squeezing.anti_squeezed_variance) {
    j["squeezing"]["anti_squeezed_variance"] = *c.squeezing.anti_squeezed_variance;
  }
  j["classical"] = {{"alpha", c.classical.alpha}, {"carrier_amplitude", c.classical.carrier}};
  j["detector"] = {{"efficiency", c.detector.efficiency},
                   {"electronic_noise", c.detector.electronic_noise}};
  const auto& f = c.finite_size;
  j["finite_size"] = {
      {"block_size", f.block_size},
      {"kept_length", f.kept_length},
      {"recon_efficiency", f.recon_efficiency},
      {"discretisation", f.discretisation},
      {"eps_sm", f.eps_sm},
      {"eps_bar", f.eps_bar},
      {"eps_pe", f.eps_pe},
      {"eps_cor", f.eps_cor},
      {"aep_epsilon", aep_policy_name(f.aep_policy)},
  };
  const auto& v = c.verification;
  j["verification"] = {
      {"synthetic_etas", v.synthetic_etas},
      {"eta_min", v.eta_min},
      {"eta_max", v.eta_max},
      {"shots_per_eta", v.shots_per_eta},
      {"seed", v.seed},
      {"squeezing_db", v.squeezing_db},
      {"sabotage_tap", v.sabotage_tap},
      {"z_threshold", v.z_threshold},
  };
  return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& config) {
  // The output location does not affect any result, so it is left out.
  RunConfig hashed = config;
  hashed.output_dir = ".";
  const std::string text = render_config(hashed);
  boost::crc_32_type crc;
  crc.process_bytes(text.data(), text.size());
  return fmt::format("{:08x}", crc.checksum());
}

}  // namespace duallink
