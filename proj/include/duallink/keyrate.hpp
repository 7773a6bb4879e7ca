#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "duallink/ensemble.hpp"
#include "duallink/protocol.hpp"

namespace duallink {

struct DetectorModel {
  double efficiency = 0.61;        // eta_B in (0, 1]
  double electronic_noise = 0.12;  // v_B in SNU, >= 0

  void validate() const;
  /// (1 - eta_B) v with v = 1 + v_B/(1 - eta_B); equals v_B at eta_B = 1.
  [[nodiscard]] double added_noise() const;

  friend bool operator==(const DetectorModel&, const DetectorModel&) = default;
};

/// Which epsilon appears inside the AEP penalty.
enum class AepEpsilonPolicy { Composed, SmoothingBar };

struct FiniteSizeParams {
  double block_size = 1e10;          // N
  double kept_length = 5e9;          // N'
  double recon_efficiency = 0.98;    // beta_r
  double discretisation = 5.0;       // d, bits
  double eps_sm = 2.5e-10;
  double eps_bar = 2.5e-10;
  double eps_pe = 0.0;
  double eps_cor = 2.5e-10;
  AepEpsilonPolicy aep_policy = AepEpsilonPolicy::Composed;

  /// eps_sm = eps_bar = eps_cor = eps/4, eps_pe = 0, N' = N/2.
  static FiniteSizeParams split_epsilon(double epsilon, double block_size, double recon_efficiency,
                                        double discretisation);

  /// 2 eps_sm + eps_bar + eps_pe + eps_cor.
  [[nodiscard]] double composed_epsilon() const;
  void validate() const;

  friend bool operator==(const FiniteSizeParams&, const FiniteSizeParams&) = default;
};

double mutual_information(const CovarianceMatrix& cm, const DetectorModel& det);
double asymptotic_rate(double recon_efficiency, double mutual_info);
/// -1/2 log2(1 - eta_f); +infinity at eta_f = 1.
double ideal_rate(double eta_f);
/// -log2(1 - eta); +infinity at eta = 1.
double plob_bound(double eta);
double aep_delta(const FiniteSizeParams& p);
/// Raw (possibly negative) finite-size rate.
double finite_size_rate(const FiniteSizeParams& p, double mutual_info);

/// Loss in dB at which the finite-size rate for a constant channel crosses 0,
/// bracketed in [0, 100] dB and bisected to 0.01 dB.
double max_tolerable_loss(const FiniteSizeParams& p, const DetectorModel& det, double squeezing_db);

struct RateSummary {
  double mutual_info;
  double k_asym;
  double k_finite_raw;
  double k_ideal;
  double plob;
  [[nodiscard]] double k_finite() const { return k_finite_raw > 0.0 ? k_finite_raw : 0.0; }
  /// clamp(K_finite) <= K_asym <= K_ideal <= PLOB.
  [[nodiscard]] bool ordered() const;
};

/// Fading statistics -> covariance matrix -> every rate. The ideal rate and
/// PLOB bound are evaluated at eta_f.
RateSummary evaluate_rates(const FadingStats& stats, const SqueezingParams& params,
                           const DetectorModel& det, const FiniteSizeParams& fs);

struct KeyRateRow {
  double zenith_deg;
  double aperture_radius;
  double squeezing_db;
  FadingStats stats;
  RateSummary rates;
};

void write_key_rate_csv(std::ostream& out, const std::vector<KeyRateRow>& rows);

}  // namespace duallink
