#include "duallink/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

#include <fmt/core.h>

#include "duallink/errors.hpp"
#include "duallink/rng.hpp"

namespace duallink {

double squeezing_db_to_variance(double squeezing_db) {
  if (!(squeezing_db > 0.0)) throw DomainError("squeezing must be positive in dB");
  return std::pow(10.0, -squeezing_db / 10.0);
}

double zero_leakage_epsilon(double vs, double va) {
  if (!(vs > 0.0 && vs < 1.0 && va > 1.0)) {
    throw DomainError(fmt::format("zero-leakage tap needs 0 < Vs < 1 < Va (Vs={}, Va={})", vs, va));
  }
  return (1.0 - vs) / (va - vs);
}

SqueezingParams SqueezingParams::zero_leakage(double vs, double va) {
  SqueezingParams p{vs, va, zero_leakage_epsilon(vs, va)};
  p.validate();
  return p;
}

SqueezingParams SqueezingParams::from_squeezing_db(double squeezing_db) {
  const double vs = squeezing_db_to_variance(squeezing_db);
  return zero_leakage(vs, 1.0 / vs);
}

SqueezingParams SqueezingParams::from_squeezing_db(double squeezing_db, double va) {
  return zero_leakage(squeezing_db_to_variance(squeezing_db), va);
}

void SqueezingParams::validate() const {
  if (!(vs > 0.0 && vs < 1.0 && va > 1.0)) {
    throw DomainError(fmt::format("squeezing needs 0 < Vs < 1 < Va (Vs={}, Va={})", vs, va));
  }
  if (!(tap > 0.0 && tap < 1.0)) throw DomainError(fmt::format("tap transmissivity {} not in (0, 1)", tap));
}

double SqueezingParams::transmitted_variance() const { return tap * va + (1.0 - tap) * vs; }

double SqueezingParams::transmitted_p_variance() const { return tap / va + (1.0 - tap) / vs; }

bool SqueezingParams::is_zero_leakage(double tolerance) const {
  return std::abs(transmitted_variance() - 1.0) <= tolerance;
}

std::pair<double, double> CovarianceMatrix::symplectic_eigenvalues() const {
  // With q and p decoupled, nu^2 are the eigenvalues of V_q V_p. Its trace is
  // det A + det B + 2 det C; the discriminant is formed from the matrix entries
  // so that near-degenerate (pure) states do not lose half their digits.
  const double m11 = a_q * a_p + c_q * c_p;
  const double m22 = c_q * c_p + b_q * b_p;
  const double m12 = a_q * c_p + c_q * b_p;
  const double m21 = c_q * a_p + b_q * c_p;
  const double delta = m11 + m22;
  const double disc = std::sqrt(std::max(0.0, (m11 - m22) * (m11 - m22) + 4.0 * m12 * m21));
  const double nu_plus_sq = 0.5 * (delta + disc);
  const double det = (a_q * b_q - c_q * c_q) * (a_p * b_p - c_p * c_p);
  return {std::sqrt(std::max(0.0, det / nu_plus_sq)), std::sqrt(nu_plus_sq)};
}

bool CovarianceMatrix::physical(double tolerance) const {
  if (!(a_q > 0.0 && a_p > 0.0 && b_q > 0.0 && b_p > 0.0)) return false;
  if (a_q * a_p < 1.0 - tolerance || b_q * b_p < 1.0 - tolerance) return false;
  return symplectic_eigenvalues().first >= 1.0 - tolerance;
}

CovarianceMatrix covariance_matrix(const SqueezingParams& p, const FadingStats& s) {
  p.validate();
  const double e = p.tap;
  const double sqrt_eta_f = std::sqrt(s.eta_f);
  const double mix = std::sqrt(e * (1.0 - e));
  const double vq = p.va * e + p.vs * (1.0 - e);
  const double vp = e / p.va + (1.0 - e) / p.vs;
  CovarianceMatrix cm{};
  cm.a_q = p.vs * e + p.va * (1.0 - e);
  cm.a_p = e / p.vs + (1.0 - e) / p.va;
  cm.b_q = s.eta_f * vq - s.eta_f + 1.0 + s.var_sqrt * (vq - 1.0);
  cm.b_p = s.eta_f * vp - s.eta_f + 1.0 + s.var_sqrt * (vp - 1.0);
  cm.c_q = sqrt_eta_f * mix * (p.va - p.vs);
  cm.c_p = sqrt_eta_f * mix * (1.0 / p.va - 1.0 / p.vs);
  return cm;
}

double alice_bob_correlation(const SqueezingParams& p, double eta) {
  if (!p.is_zero_leakage()) throw DomainError("Alice-Bob correlation formula assumes zero-leakage params");
  return std::sqrt(eta) * std::sqrt(p.va - 1.0) * std::sqrt(1.0 - p.vs);
}

double eve_bob_correlation(const SqueezingParams& p, double eta) {
  if (p.is_zero_leakage()) return 0.0;
  return std::sqrt(eta * (1.0 - eta)) * (p.transmitted_variance() - 1.0);
}

void ClassicalLayer::validate() const {
  if (!(alpha >= 0.0)) throw DomainError(fmt::format("displacement alpha {} must be >= 0", alpha));
  if (!(carrier > 0.0)) throw DomainError(fmt::format("carrier amplitude {} must be positive", carrier));
}

double estimate_eta_from_carrier(double received_carrier_power, double carrier) {
  if (!(carrier > 0.0)) throw DomainError("carrier amplitude must be positive");
  const double eta = received_carrier_power / (carrier * carrier);
  if (!(eta >= 0.0) || eta > 1.0 + 1e-9) {
    throw DomainError(fmt::format("carrier power implies transmissivity {} outside [0, 1]", eta));
  }
  return std::min(eta, 1.0);
}

double linearized_direct_detection(double beta, double delta_x) { return beta * beta + beta * delta_x; }

double classical_snr(double alpha, double eta) {
  if (!(alpha >= 0.0)) throw DomainError("alpha must be >= 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("eta must lie in [0, 1]");
  return 4.0 * eta * alpha * alpha;
}

double classical_ber(double snr) {
  if (!(snr >= 0.0)) throw DomainError("SNR must be >= 0");
  return 0.5 * std::erfc(std::sqrt(snr) / std::sqrt(2.0));
}

std::string_view moment_name(Moment m) {
  static constexpr std::array<std::string_view, kMomentCount> names = {
      "XA_XA", "XB_XB", "XE_XE", "XA_XB", "XE_XB", "XA_XE",
      "PA_PA", "PB_PB", "PE_PE", "PA_PB", "PE_PB"};
  return names[static_cast<std::size_t>(m)];
}

double EmpiricalMoments::mean(Moment m) const {
  return sum[static_cast<std::size_t>(m)] / static_cast<double>(shots);
}

double EmpiricalMoments::standard_error(Moment m) const {
  const auto n = static_cast<double>(shots);
  const double mu = mean(m);
  const double var = sum_sq[static_cast<std::size_t>(m)] / n - mu * mu;
  return std::sqrt(std::max(var, 0.0) / n);
}

double EmpiricalMoments::bit_error_rate() const {
  return static_cast<double>(bit_errors) / static_cast<double>(shots);
}

double EmpiricalMoments::predicted_bit_error_rate() const {
  return expected_bit_errors / static_cast<double>(shots);
}

double EmpiricalMoments::bit_error_z() const {
  const double diff = static_cast<double>(bit_errors) - expected_bit_errors;
  if (bit_error_variance <= 0.0) return diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
  return diff / std::sqrt(bit_error_variance);
}

namespace {

struct ShotSums {
  std::size_t bit_errors = 0;
  std::array<double, kMomentCount> sum{};
  std::array<double, kMomentCount> sum_sq{};
};

ShotSums simulate_eta(const SqueezingParams& p, const ClassicalLayer& c, double eta,
                      std::size_t shots, const StreamId& id) {
  CounterStream rng(id);
  const double sa = std::sqrt(p.va);
  const double ss = std::sqrt(p.vs);
  const double spa = 1.0 / sa;
  const double sps = 1.0 / ss;
  const double t = std::sqrt(p.tap);
  const double r = std::sqrt(1.0 - p.tap);
  const double g = std::sqrt(eta);
  const double l = std::sqrt(1.0 - eta);
  const double beta = c.carrier * g;
  // Bob normalizes his photocurrent with the transmissivity read off the carrier.
  const double eta_hat = estimate_eta_from_carrier(c.carrier * c.carrier * eta, c.carrier);
  const double beta_hat = c.carrier * std::sqrt(eta_hat);

  ShotSums out;
  const auto add = [&out](Moment m, double v) {
    const auto i = static_cast<std::size_t>(m);
    out.sum[i] += v;
    out.sum_sq[i] += v * v;
  };
  for (std::size_t k = 0; k < shots; ++k) {
    const double xa = sa * rng.next_normal();
    const double xs = ss * rng.next_normal();
    const double xv = rng.next_normal();
    const double pa = spa * rng.next_normal();
    const double ps = sps * rng.next_normal();
    const double pv = rng.next_normal();
    const double bit = (rng.next_u32() & 1u) != 0u ? 1.0 : -1.0;

    const double x_alice = r * xa - t * xs;
    const double x_sent = t * xa + r * xs;
    const double p_alice = r * pa - t * ps;
    const double p_sent = t * pa + r * ps;
    const double x_c = 2.0 * c.alpha * bit;

    const double x_bob_raw = g * (x_c + x_sent) + l * xv;
    const double x_eve = l * x_sent - g * xv;
    const double p_bob = g * p_sent + l * pv;
    const double p_eve = l * p_sent - g * pv;

    // Direct detection of the bright beam returns beta^2 + beta dX; the
    // amplitude quadrature is recovered relative to the estimated carrier.
    double x_measured = x_bob_raw;
    if (beta_hat > 0.0) {
      const double photons = linearized_direct_detection(beta, x_bob_raw);
      x_measured = (photons - beta_hat * beta_hat) / beta_hat;
    }
    const double decided = x_measured >= 0.0 ? 1.0 : -1.0;
    if (decided != bit) ++out.bit_errors;
    const double x_bob = x_measured - std::sqrt(eta_hat) * 2.0 * c.alpha * decided;

    add(Moment::XA_XA, x_alice * x_alice);
    add(Moment::XB_XB, x_bob * x_bob);
    add(Moment::XE_XE, x_eve * x_eve);
    add(Moment::XA_XB, x_alice * x_bob);
    add(Moment::XE_XB, x_eve * x_bob);
    add(Moment::XA_XE, x_alice * x_eve);
    add(Moment::PA_PA, p_alice * p_alice);
    add(Moment::PB_PB, p_bob * p_bob);
    add(Moment::PE_PE, p_eve * p_eve);
    add(Moment::PA_PB, p_alice * p_bob);
    add(Moment::PE_PB, p_eve * p_bob);
  }
  return out;
}

}  // namespace

EmpiricalMoments mc_quadrature_sim(const SqueezingParams& params, const ClassicalLayer& classical,
                                   std::span<const double> etas, std::size_t shots_per_eta,
                                   std::uint64_t seed, unsigned threads) {
  params.validate();
  classical.validate();
  if (shots_per_eta == 0) throw DomainError("shots_per_eta must be at least 1");
  if (etas.empty()) throw DomainError("quadrature simulation needs at least one transmissivity");
  for (double eta : etas) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw DataIntegrityError(fmt::format("transmissivity {} outside [0, 1]", eta));
  }

  std::vector<ShotSums> partial(etas.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < etas.size();) {
      const StreamId id{seed, StreamDomain::QuadratureShots, static_cast<std::uint32_t>(i), 0};
      partial[i] = simulate_eta(params, classical, etas[i], shots_per_eta, id);
    }
  };
  const unsigned workers = std::clamp<unsigned>(threads == 0 ? std::thread::hardware_concurrency() : threads,
                                                1u, static_cast<unsigned>(etas.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  EmpiricalMoments m;
  m.shots = shots_per_eta * etas.size();
  if (classical.carrier < kLinearCarrierThreshold) {
    m.warnings.push_back(fmt::format("carrier amplitude {} is below {}; the linearized detection "
                                     "model is inaccurate",
                                     classical.carrier, kLinearCarrierThreshold));
  }
  const auto shots = static_cast<double>(shots_per_eta);
  for (std::size_t i = 0; i < etas.size(); ++i) {
    m.bit_errors += partial[i].bit_errors;
    for (std::size_t k = 0; k < kMomentCount; ++k) {
      m.sum[k] += partial[i].sum[k];
      m.sum_sq[k] += partial[i].sum_sq[k];
    }
    const double p = classical_ber(classical_snr(classical.alpha, etas[i]));
    m.expected_bit_errors += shots * p;
    m.bit_error_variance += shots * p * (1.0 - p);
  }
  return m;
}

double MomentComparison::z() const {
  const double diff = empirical - predicted;
  if (standard_error <= 0.0) return diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
  return diff / standard_error;
}

std::array<double, kMomentCount> predicted_moments(const SqueezingParams& p,
                                                   std::span<const double> etas) {
  const FadingStats stats = fading_stats(etas);
  const CovarianceMatrix cm = covariance_matrix(p, stats);
  double mean_loss = 0.0;
  double mean_cross = 0.0;
  double mean_sqrt_loss = 0.0;
  for (double eta : etas) {
    mean_loss += 1.0 - eta;
    mean_cross += std::sqrt(eta * (1.0 - eta));
    mean_sqrt_loss += std::sqrt(1.0 - eta);
  }
  const auto n = static_cast<double>(etas.size());
  mean_loss /= n;
  mean_cross /= n;
  mean_sqrt_loss /= n;
  const double vq = p.transmitted_variance();
  const double vp = p.transmitted_p_variance();
  const double mix = std::sqrt(p.tap * (1.0 - p.tap));

  std::array<double, kMomentCount> out{};
  const auto set = [&out](Moment m, double v) { out[static_cast<std::size_t>(m)] = v; };
  set(Moment::XA_XA, cm.a_q);
  set(Moment::XB_XB, cm.b_q);
  set(Moment::XA_XB, cm.c_q);
  set(Moment::PA_PA, cm.a_p);
  set(Moment::PB_PB, cm.b_p);
  set(Moment::PA_PB, cm.c_p);
  set(Moment::XE_XE, mean_loss * vq + (1.0 - mean_loss));
  set(Moment::PE_PE, mean_loss * vp + (1.0 - mean_loss));
  set(Moment::XE_XB, mean_cross * (vq - 1.0));
  set(Moment::PE_PB, mean_cross * (vp - 1.0));
  set(Moment::XA_XE, mean_sqrt_loss * mix * (p.va - p.vs));
  return out;
}

std::vector<MomentComparison> compare_moments(const EmpiricalMoments& emp, const SqueezingParams& params,
                                              std::span<const double> etas) {
  const auto predicted = predicted_moments(params, etas);
  std::vector<MomentComparison> out;
  out.reserve(kMomentCount);
  for (std::size_t k = 0; k < kMomentCount; ++k) {
    const auto m = static_cast<Moment>(k);
    out.push_back({m, emp.mean(m), emp.standard_error(m), predicted[k]});
  }
  return out;
}

void write_moments_csv(std::ostream& out, const EmpiricalMoments& emp,
                       std::span<const MomentComparison> comparisons) {
  out << "moment,empirical,standard_error,predicted,z\n";
  for (const auto& c : comparisons) {
    out << fmt::format("{},{:.10g},{:.6g},{:.10g},{:.4f}\n", moment_name(c.moment), c.empirical,
                       c.standard_error, c.predicted, c.z());
  }
  out << fmt::format("bit_errors,{},{:.6g},{:.6g},{:.4f}\n", emp.bit_errors,
                     std::sqrt(emp.bit_error_variance), emp.expected_bit_errors, emp.bit_error_z());
}

}  // namespace duallink
