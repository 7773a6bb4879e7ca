#pragma once

#include <functional>

namespace duallink::quadrature {

struct Options {
  double relative_tolerance = 1e-10;
  double absolute_floor = 1e-30;
  int max_depth = 48;
  int nodes_per_decade = 24;
};

/// Adaptive Simpson integration of a scalar function over [a, b].
/// Throws NumericalError when a panel fails to converge within max_depth.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        const Options& opts = {});

/// Integrates an altitude profile over [lo, hi] (meters). The range is cut at
/// log-spaced nodes from max(lo, 1 m) upward and each panel is integrated with
/// adaptive Simpson; the sub-metre piece below 1 m gets its own panel.
double integrate_altitude(const std::function<double(double)>& f, double lo, double hi,
                          const Options& opts = {});

}  // namespace duallink::quadrature
