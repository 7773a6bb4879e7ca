#include <doctest.h>

#include <cmath>
#include <vector>

#include "duallink/atmosphere.hpp"
#include "duallink/errors.hpp"
#include "duallink/screens.hpp"

using namespace duallink;

namespace {

// Phase structure function of the mvK spectrum,
// D(r) = 4 pi int_0^inf PSD(f) (1 - J0(2 pi f r)) f df,
// by composite Simpson in u = ln f. Written independently of the generator.
double mvk_structure_oracle(double r, double r0, double L0, double l0) {
  const double fm = 5.92 / (2.0 * M_PI * l0);
  const double f0 = 1.0 / L0;
  const auto psd = [&](double f) {
    return 0.023 * std::pow(r0, -5.0 / 3.0) * std::exp(-f * f / (fm * fm)) / std::pow(f * f + f0 * f0, 11.0 / 6.0);
  };
  const double ua = std::log(1e-6 * f0), ub = std::log(8.0 * fm);
  const int m = 40000;
  const double h = (ub - ua) / m;
  double s = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double f = std::exp(ua + i * h);
    const double g = psd(f) * (1.0 - std::cyl_bessel_j(0.0, 2.0 * M_PI * f * r)) * f * f;
    s += g * (i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  return 4.0 * M_PI * s * h / 3.0;
}

double kolmogorov(double r, double r0) { return 6.88 * std::pow(r / r0, 5.0 / 3.0); }

Slab test_slab(double r0) { return {0.0, 1000.0, 1000.0, r0, 0.01, true}; }

}  // namespace

TEST_SUITE("screens") {
  TEST_CASE("slab plans for the reference link") {
    const auto p = AtmosphereProfile::reference_link();
    const std::pair<double, std::size_t> expected[] = {{0.0, 10}, {30.0, 10}, {60.0, 12}};
    for (const auto& [z, count] : expected) {
      CAPTURE(z);
      const auto g = LinkGeometry::reference_link(z);
      const auto plan = plan_slabs(g, p, greenwood_and_coherence(g, p));
      CHECK(plan.screen_count() == count);
      CHECK(plan.total_path_length() == doctest::Approx(g.path_length()).epsilon(1e-12));
      const double limit = std::min(0.1, 0.1 * plan.whole_channel_scintillation);
      double recombined = 0.0;
      for (std::size_t i = 0; i < plan.slabs.size(); ++i) {
        const auto& s = plan.slabs[i];
        if (i > 0) CHECK(s.altitude_low == plan.slabs[i - 1].altitude_high);
        if (!s.has_screen) continue;
        CHECK(s.scintillation < limit);
        recombined += std::pow(std::get<double>(s.fried), -5.0 / 3.0);
      }
      CHECK(std::pow(recombined, -3.0 / 5.0) ==
            doctest::Approx(std::get<double>(fried_parameter(g, p))).epsilon(2e-3));
    }
  }

  TEST_CASE("vacuum gives a single screenless slab") {
    const auto g = LinkGeometry::reference_link();
    const auto v = AtmosphereProfile::vacuum();
    const auto plan = plan_slabs(g, v, greenwood_and_coherence(g, v));
    REQUIRE(plan.slabs.size() == 1);
    CHECK_FALSE(plan.slabs[0].has_screen);
    CHECK(plan.screen_count() == 0);
  }

  TEST_CASE("too many slabs is a configuration error") {
    const auto g = LinkGeometry::reference_link(60.0);
    const auto p = AtmosphereProfile::reference_link().scaled(200.0);
    CHECK_THROWS_AS(plan_slabs(g, p, greenwood_and_coherence(g, p)), ConfigError);
  }

  TEST_CASE("mvK spectrum values") {
    CHECK(mvk_psd(0.0, 0.1, 5.0, 0.01) == doctest::Approx(390.1975323855177).epsilon(1e-12));
    CHECK(mvk_psd(1.0, 0.1, 5.0, 0.01) == doctest::Approx(0.9933854447992592).epsilon(1e-7));
    CHECK(mvk_psd(1e4, 0.1, 5.0, 0.01) < 1e-300);
  }

  TEST_CASE("oracle reduces to kolmogorov inside the inertial range") {
    // Ratios frozen from an independent scipy evaluation for L0 = 5 m, l0 = 1 cm.
    const std::pair<double, double> ratios[] = {{0.1, 0.599}, {0.4, 0.379}, {1.25, 0.168}};
    for (const auto& [r, ratio] : ratios)
      CHECK(mvk_structure_oracle(r, 0.1, 5.0, 0.01) / kolmogorov(r, 0.1) == doctest::Approx(ratio).epsilon(5e-3));
    CHECK(mvk_structure_oracle(0.5, 0.1, 1e6, 1e-5) / kolmogorov(0.5, 0.1) == doctest::Approx(1.0).epsilon(0.01));
  }

  TEST_CASE("screen statistics follow the mvK structure function") {
    const TurbulenceScales scales{5.0, 0.01};
    constexpr std::size_t n = 256;
    constexpr double spacing = 0.01;
    std::vector<PhaseScreen> screens;
    for (std::uint32_t i = 0; i < 60; ++i)
      screens.push_back(generate_screen(test_slab(0.1), 0, scales, n, spacing,
                                        StreamId{11, StreamDomain::PhaseScreen, i, 0}));
    CHECK(screens.front().low_frequency_unresolved == false);
    const std::vector<double> r{0.02, 0.05, 0.1, 0.2, 0.4, 0.64};
    const auto d = screen_structure_function(screens, r);
    for (std::size_t k = 0; k < r.size(); ++k) {
      CAPTURE(r[k]);
      CHECK(d[k] == doctest::Approx(mvk_structure_oracle(r[k], 0.1, 5.0, 0.01)).epsilon(0.10));
    }
  }

  TEST_CASE("screens are deterministic and scale as r0^(-5/6)") {
    const TurbulenceScales scales{5.0, 0.01};
    const StreamId id{5, StreamDomain::PhaseScreen, 2, 3};
    const auto a = generate_screen(test_slab(0.1), 3, scales, 64, 0.02, id);
    const auto b = generate_screen(test_slab(0.1), 3, scales, 64, 0.02, id);
    CHECK(a.phase == b.phase);
    const auto c = generate_screen(test_slab(0.2), 3, scales, 64, 0.02, id);
    const double factor = std::pow(2.0, -5.0 / 6.0);
    for (std::size_t i = 0; i < a.phase.size(); i += 97) CHECK(c.phase[i] == doctest::Approx(a.phase[i] * factor));
    CHECK(a.low_frequency_unresolved);
    const auto other = generate_screen(test_slab(0.1), 3, scales, 64, 0.02, StreamId{5, StreamDomain::PhaseScreen, 2, 4});
    CHECK(other.phase != a.phase);
  }

  TEST_CASE("screenless slab gives zero phase") {
    Slab s = test_slab(0.1);
    s.fried = NoTurbulence{};
    const auto screen = generate_screen(s, 0, {5.0, 0.01}, 32, 0.01, StreamId{});
    for (double v : screen.phase) CHECK(v == 0.0);
  }

  TEST_CASE("argument checks") {
    CHECK_THROWS_AS(generate_screen(test_slab(0.1), 0, {5.0, 0.01}, 100, 0.01, StreamId{}), DomainError);
    CHECK_THROWS_AS((void)mvk_psd(-1.0, 0.1, 5.0, 0.01), DomainError);
    std::vector<PhaseScreen> few(10, generate_screen(test_slab(0.1), 0, {5.0, 0.01}, 32, 0.01, StreamId{}));
    const double r[] = {0.05};
    CHECK_THROWS_AS(screen_structure_function(few, r), DomainError);
  }
}
