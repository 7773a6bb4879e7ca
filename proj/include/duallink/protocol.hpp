#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "duallink/ensemble.hpp"

namespace duallink {

// All quadrature variances are in shot-noise units: the vacuum has variance 1.

/// Two Gaussian source beams mixed on Alice's tap beamsplitter. Alice keeps the
/// reflected port, X_A = sqrt(1-tap) X_a - sqrt(tap) X_s; the channel receives
/// X_Abar = sqrt(tap) X_a + sqrt(1-tap) X_s.
struct SqueezingParams {
  double vs;   // squeezed amplitude variance, < 1
  double va;   // anti-squeezed amplitude variance, > 1
  double tap;  // beamsplitter transmissivity into the channel

  /// Tap chosen so the transmitted variance is exactly the vacuum level.
  static SqueezingParams zero_leakage(double vs, double va);
  /// vs = 10^(-db/10); va defaults to 1/vs (pure squeezing).
  static SqueezingParams from_squeezing_db(double squeezing_db);
  static SqueezingParams from_squeezing_db(double squeezing_db, double va);

  /// Throws DomainError unless 0 < vs < 1 < va and 0 < tap < 1.
  void validate() const;
  /// Variance of the transmitted amplitude quadrature, tap*va + (1-tap)*vs.
  [[nodiscard]] double transmitted_variance() const;
  [[nodiscard]] double transmitted_p_variance() const;
  [[nodiscard]] bool is_zero_leakage(double tolerance = 1e-12) const;

  friend bool operator==(const SqueezingParams&, const SqueezingParams&) = default;
};

double squeezing_db_to_variance(double squeezing_db);

/// (1 - vs) / (va - vs). Throws DomainError unless vs < 1 < va.
double zero_leakage_epsilon(double vs, double va);

/// Alice-Bob two-mode covariance matrix with diagonal blocks:
/// [[a_q, 0, c_q, 0], [0, a_p, 0, c_p], [c_q, 0, b_q, 0], [0, c_p, 0, b_p]].
struct CovarianceMatrix {
  double a_q, a_p, b_q, b_p, c_q, c_p;

  /// (nu_minus, nu_plus).
  [[nodiscard]] std::pair<double, double> symplectic_eigenvalues() const;
  [[nodiscard]] bool physical(double tolerance = 1e-9) const;
};

CovarianceMatrix covariance_matrix(const SqueezingParams& params, const FadingStats& stats);

/// sqrt(eta) sqrt(va-1) sqrt(1-vs); requires zero-leakage params.
double alice_bob_correlation(const SqueezingParams& params, double eta);

/// Zero for zero-leakage params. Otherwise the general pure-loss value
/// sqrt(eta(1-eta)) (tap*va + (1-tap)*vs - 1).
double eve_bob_correlation(const SqueezingParams& params, double eta);

/// Binary amplitude displacement X_C = +-2 alpha riding on a carrier of
/// amplitude beta_c. alpha = 0 is allowed as a degenerate control case.
struct ClassicalLayer {
  double alpha = 3.0;
  double carrier = 1e4;

  void validate() const;
  friend bool operator==(const ClassicalLayer&, const ClassicalLayer&) = default;
};

constexpr double kLinearCarrierThreshold = 10.0;

/// eta_hat = P / beta_c^2. Throws DomainError when eta_hat exceeds 1 + 1e-9.
double estimate_eta_from_carrier(double received_carrier_power, double carrier);

/// beta^2 + beta dX (second-order term dropped).
double linearized_direct_detection(double beta, double delta_x);

double classical_snr(double alpha, double eta);
/// Q(sqrt(snr)) for antipodal signalling in unit-variance noise.
double classical_ber(double snr);

enum class Moment : std::size_t {
  XA_XA, XB_XB, XE_XE, XA_XB, XE_XB, XA_XE, PA_PA, PB_PB, PE_PE, PA_PB, PE_PB,
};
constexpr std::size_t kMomentCount = 11;
std::string_view moment_name(Moment m);

struct EmpiricalMoments {
  std::size_t shots = 0;
  std::size_t bit_errors = 0;
  double expected_bit_errors = 0.0;  // sum over shots of Q(sqrt(snr))
  double bit_error_variance = 0.0;   // sum over shots of p(1-p)
  std::array<double, kMomentCount> sum{};
  std::array<double, kMomentCount> sum_sq{};
  std::vector<std::string> warnings;

  [[nodiscard]] double mean(Moment m) const;
  /// Standard error of mean(m) from the per-shot product variance.
  [[nodiscard]] double standard_error(Moment m) const;
  [[nodiscard]] double bit_error_rate() const;
  [[nodiscard]] double predicted_bit_error_rate() const;
  /// (observed - expected) errors in binomial standard deviations.
  [[nodiscard]] double bit_error_z() const;
};

/// Shot-level simulation of both quadratures: sources, tap, classical bit,
/// lossy channel with Eve holding the lost mode, Bob's bit decision on the sign
/// of X'_B and subtraction of sqrt(eta_hat) X_C. Shots for etas[i] use their own
/// substream (seed, QuadratureShots, i), so results do not depend on `threads`.
EmpiricalMoments mc_quadrature_sim(const SqueezingParams& params, const ClassicalLayer& classical,
                                   std::span<const double> etas, std::size_t shots_per_eta,
                                   std::uint64_t seed, unsigned threads = 1);

struct MomentComparison {
  Moment moment;
  double empirical;
  double standard_error;
  double predicted;
  [[nodiscard]] double z() const;
};

/// Closed-form second moments of the fading mixture over `etas`. The Alice-Bob
/// entries are the covariance matrix; Eve's entries follow from the pure-loss
/// beamsplitter X_E = sqrt(1-eta) X_Abar - sqrt(eta) X_v.
std::array<double, kMomentCount> predicted_moments(const SqueezingParams& params,
                                                   std::span<const double> etas);

std::vector<MomentComparison> compare_moments(const EmpiricalMoments& emp,
                                              const SqueezingParams& params,
                                              std::span<const double> etas);

/// moment,empirical,standard_error,predicted,z then a bit-error summary row.
void write_moments_csv(std::ostream& out, const EmpiricalMoments& emp,
                       std::span<const MomentComparison> comparisons);

}  // namespace duallink
