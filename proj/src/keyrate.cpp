#include "duallink/keyrate.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/core.h>

#include "duallink/errors.hpp"

namespace duallink {

void DetectorModel::validate() const {
  if (!(efficiency > 0.0 && efficiency <= 1.0)) {
    throw DomainError(fmt::format("detector efficiency {} not in (0, 1]", efficiency));
  }
  if (!(electronic_noise >= 0.0)) throw DomainError("electronic noise must be >= 0");
}

double DetectorModel::added_noise() const {
  if (efficiency == 1.0) return electronic_noise;
  const double v = 1.0 + electronic_noise / (1.0 - efficiency);
  return (1.0 - efficiency) * v;
}

FiniteSizeParams FiniteSizeParams::split_epsilon(double epsilon, double block_size,
                                                 double recon_efficiency, double discretisation) {
  FiniteSizeParams p;
  p.block_size = block_size;
  p.kept_length = block_size / 2.0;
  p.recon_efficiency = recon_efficiency;
  p.discretisation = discretisation;
  p.eps_sm = p.eps_bar = p.eps_cor = epsilon / 4.0;
  p.eps_pe = 0.0;
  p.validate();
  return p;
}

double FiniteSizeParams::composed_epsilon() const { return 2.0 * eps_sm + eps_bar + eps_pe + eps_cor; }

void FiniteSizeParams::validate() const {
  if (!(block_size >= 1.0)) throw DomainError("block size must be >= 1");
  if (!(kept_length >= 1.0 && kept_length <= block_size)) {
    throw DomainError(fmt::format("kept length {} must lie in [1, N={}]", kept_length, block_size));
  }
  if (!(recon_efficiency >= 0.0 && recon_efficiency <= 1.0)) {
    throw DomainError("reconciliation efficiency must lie in [0, 1]");
  }
  if (!(discretisation >= 0.0)) throw DomainError("discretisation must be >= 0");
  for (double e : {eps_sm, eps_bar, eps_pe, eps_cor}) {
    if (!(e >= 0.0 && e < 1.0)) throw DomainError(fmt::format("epsilon component {} not in [0, 1)", e));
  }
  if (!(composed_epsilon() < 1.0)) throw DomainError("composed epsilon must be < 1");
}

double mutual_information(const CovarianceMatrix& cm, const DetectorModel& det) {
  det.validate();
  const double denom = cm.a_q - cm.c_q * cm.c_q / (cm.b_q + det.added_noise());
  if (!(denom > 0.0)) {
    throw NumericalError(fmt::format("unphysical covariance matrix: conditional variance {}", denom));
  }
  return 0.5 * std::log2(cm.a_q / denom);
}

double asymptotic_rate(double recon_efficiency, double mutual_info) { return recon_efficiency * mutual_info; }

double ideal_rate(double eta_f) {
  if (!(eta_f >= 0.0 && eta_f <= 1.0)) throw DomainError("eta_f must lie in [0, 1]");
  if (eta_f == 1.0) return std::numeric_limits<double>::infinity();
  return -0.5 * std::log2(1.0 - eta_f);
}

double plob_bound(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("eta must lie in [0, 1]");
  if (eta == 1.0) return std::numeric_limits<double>::infinity();
  return -std::log2(1.0 - eta);
}

double aep_delta(const FiniteSizeParams& p) {
  p.validate();
  const double eps = p.aep_policy == AepEpsilonPolicy::Composed ? p.composed_epsilon() : p.eps_bar;
  if (p.eps_sm == 0.0 || eps == 0.0) throw DomainError("AEP penalty needs nonzero eps_sm and epsilon");
  const double d = p.discretisation;
  return (d + 1.0) * (d + 1.0) +
         4.0 * (d + 1.0) * std::sqrt(std::log2(2.0 / (2.0 * p.eps_sm * p.eps_sm))) +
         2.0 * std::log2(2.0 / (2.0 * eps * eps * p.eps_sm)) +
         4.0 * p.eps_sm * d / (eps * std::sqrt(p.kept_length));
}

double finite_size_rate(const FiniteSizeParams& p, double mutual_info) {
  const double delta = aep_delta(p);
  if (!(p.eps_bar > 0.0)) throw DomainError("finite-size rate needs eps_bar > 0");
  return (p.kept_length * p.recon_efficiency * mutual_info - std::sqrt(p.kept_length) * delta -
          2.0 * std::log2(1.0 / (2.0 * p.eps_bar))) /
         p.block_size;
}

double max_tolerable_loss(const FiniteSizeParams& p, const DetectorModel& det, double squeezing_db) {
  const SqueezingParams sq = SqueezingParams::from_squeezing_db(squeezing_db);
  const auto rate_at = [&](double loss) {
    const double eta = std::pow(10.0, -loss / 10.0);
    return finite_size_rate(p, mutual_information(covariance_matrix(sq, constant_stats(eta)), det));
  };
  double lo = 0.0;
  double hi = 100.0;
  const double r_lo = rate_at(lo);
  const double r_hi = rate_at(hi);
  if (!(r_lo > 0.0 && r_hi < 0.0)) {
    throw NumericalError(fmt::format(
        "finite-size rate has no sign change between {} dB ({:.3e}) and {} dB ({:.3e})", lo, r_lo,
        hi, r_hi));
  }
  while (hi - lo > 0.01) {
    const double mid = 0.5 * (lo + hi);
    if (rate_at(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

bool RateSummary::ordered() const {
  return k_finite() <= k_asym && k_asym <= k_ideal && k_ideal <= plob;
}

RateSummary evaluate_rates(const FadingStats& stats, const SqueezingParams& params,
                           const DetectorModel& det, const FiniteSizeParams& fs) {
  RateSummary r{};
  r.mutual_info = mutual_information(covariance_matrix(params, stats), det);
  r.k_asym = asymptotic_rate(fs.recon_efficiency, r.mutual_info);
  r.k_finite_raw = finite_size_rate(fs, r.mutual_info);
  r.k_ideal = ideal_rate(stats.eta_f);
  r.plob = plob_bound(stats.eta_f);
  return r;
}

void write_key_rate_csv(std::ostream& out, const std::vector<KeyRateRow>& rows) {
  out << "zenith_deg,aperture_radius_m,squeezing_db,mean_eta,eta_f,var_sqrt_eta,mean_loss_db,"
         "std_loss_db,mutual_info,k_asym,k_finite,k_finite_raw,k_ideal,plob\n";
  for (const auto& r : rows) {
    out << fmt::format("{:.6g},{:.6g},{:.6g},{:.10e},{:.10e},{:.10e},{:.6f},{:.6f},{:.10e},{:.10e},"
                       "{:.10e},{:.10e},{:.10e},{:.10e}\n",
                       r.zenith_deg, r.aperture_radius, r.squeezing_db, r.stats.mean_eta,
                       r.stats.eta_f, r.stats.var_sqrt, r.stats.mean_loss_db, r.stats.std_loss_db,
                       r.rates.mutual_info, r.rates.k_asym, r.rates.k_finite(),
                       r.rates.k_finite_raw, r.rates.k_ideal, r.rates.plob);
  }
}

}  // namespace duallink
