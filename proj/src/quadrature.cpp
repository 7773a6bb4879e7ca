#include "duallink/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/core.h>

#include "duallink/errors.hpp"

namespace duallink::quadrature {
namespace {

struct Panel {
  double a, b, fa, fm, fb, whole;
};

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double refine(const std::function<double(double)>& f, const Panel& p, double tol, int depth,
              const Options& opts) {
  const double m = 0.5 * (p.a + p.b);
  const double lm = 0.5 * (p.a + m);
  const double rm = 0.5 * (m + p.b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(p.a, m, p.fa, flm, p.fm);
  const double right = simpson(m, p.b, p.fm, frm, p.fb);
  const double delta = left + right - p.whole;
  if (std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  if (depth >= opts.max_depth) {
    throw NumericalError(fmt::format(
        "adaptive Simpson did not converge on [{:.6g}, {:.6g}] m: |delta|={:.3e}, tol={:.3e}",
        p.a, p.b, std::abs(delta), tol));
  }
  const double half_tol = std::max(0.5 * tol, opts.absolute_floor);
  return refine(f, {p.a, m, p.fa, flm, p.fm, left}, half_tol, depth + 1, opts) +
         refine(f, {m, p.b, p.fm, frm, p.fb, right}, half_tol, depth + 1, opts);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        const Options& opts) {
  if (b == a) return 0.0;
  if (b < a) return -adaptive_simpson(f, b, a, opts);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = simpson(a, b, fa, fm, fb);
  // Pilot estimate sets the absolute target so the relative tolerance is
  // meaningful for integrands that are ~1e-16 in magnitude.
  const double scale = std::abs(whole) + (b - a) * (std::abs(fa) + std::abs(fb) + std::abs(fm)) / 3.0;
  const double tol = std::max(opts.relative_tolerance * scale, opts.absolute_floor);
  return refine(f, {a, b, fa, fm, fb, whole}, tol, 0, opts);
}

double integrate_altitude(const std::function<double(double)>& f, double lo, double hi,
                          const Options& opts) {
  if (hi <= lo) return 0.0;
  std::vector<double> nodes{lo};
  const double start = std::max(lo, 1.0);
  if (start > lo && start < hi) nodes.push_back(start);
  if (start < hi) {
    const double decades = std::log10(hi / start);
    const int count = std::max(1, static_cast<int>(std::ceil(decades * opts.nodes_per_decade)));
    for (int i = 1; i < count; ++i) {
      nodes.push_back(start * std::pow(10.0, decades * i / count));
    }
  }
  nodes.push_back(hi);

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    total += adaptive_simpson(f, nodes[i], nodes[i + 1], opts);
  }
  return total;
}

}  // namespace duallink::quadrature
