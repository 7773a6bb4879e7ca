#include <doctest.h>

#include <cmath>

#include "duallink/atmosphere.hpp"
#include "duallink/errors.hpp"

using namespace duallink;

// Reference values: independent double-precision quadrature (scipy.integrate.quad,
// rel. tol. 1e-12) of the same profile definitions, frozen here.
namespace ref {
constexpr double rms_wind_vg3 = 21.212278572061745;
constexpr double rms_wind_vg0 = 18.67900593936365;
constexpr double cn2_1000 = 1.4298102888373507e-16;
constexpr double cn2_10000 = 1.6988800534262448e-17;
constexpr double cn2_column = 1.013804439817284e-11;
struct Zenith {
  double deg, rytov, scint, r0, fg, tau;
};
constexpr Zenith table[] = {
    {0.0, 0.16013436047714286, 0.1564029588371405, 0.049560693841953135, 38.57324974371934, 0.0034739100514033943},
    {30.0, 0.20845470641805924, 0.20074134818655387, 0.04546275571153843, 42.050179121730594, 0.003186668946452877},
    {60.0, 0.5706539859172381, 0.47998856524792677, 0.032697863793925315, 58.46611366069836, 0.0022919258970701254},
};
}  // namespace ref

TEST_SUITE("atmosphere") {
  TEST_CASE("geometry helpers") {
    const auto g = LinkGeometry::reference_link(60.0, 0.15);
    CHECK(g.secant() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(g.path_length() == doctest::Approx(1e6).epsilon(1e-12));
    CHECK(g.rayleigh_range() == doctest::Approx(M_PI * 0.15 * 0.15 / 1064e-9).epsilon(1e-12));
    CHECK(g.beam_radius(0.0) == doctest::Approx(0.15));
    LinkGeometry bad = g;
    bad.zenith = Degrees{90.0};
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = g;
    bad.beam_waist = -1.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
  }

  TEST_CASE("bufton wind and rms wind") {
    CHECK(bufton_wind(9400.0, 3.0) == doctest::Approx(33.0));
    CHECK(bufton_wind(0.0, 3.0) == doctest::Approx(3.0 + 30.0 * std::exp(-std::pow(9400.0 / 4800.0, 2))));
    CHECK(bufton_wind(4600.0, 3.0) == doctest::Approx(3.0 + 30.0 / M_E).epsilon(1e-12));
    CHECK(bufton_wind(1e6, 3.0) == doctest::Approx(3.0));
    CHECK(rms_wind(3.0, 0.0) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(rms_wind(3.0) == doctest::Approx(ref::rms_wind_vg3).epsilon(1e-9));
    CHECK(rms_wind(0.0) == doctest::Approx(ref::rms_wind_vg0).epsilon(1e-9));
    CHECK(AtmosphereProfile::reference_link().rms_wind() == doctest::Approx(ref::rms_wind_vg3).epsilon(1e-9));
  }

  TEST_CASE("hufnagel-valley profile values") {
    const auto p = AtmosphereProfile::reference_link();
    CHECK(cn2(0.0, p) == doctest::Approx(9.6e-14 + 2.7e-16).epsilon(1e-14));
    CHECK(cn2(1000.0, p) == doctest::Approx(ref::cn2_1000).epsilon(1e-12));
    CHECK(cn2(1e4, p) == doctest::Approx(ref::cn2_10000).epsilon(1e-12));
    CHECK_THROWS_AS((void)cn2(-1.0, p), DomainError);
    CHECK(cn2(1000.0, AtmosphereProfile::vacuum()) == 0.0);
    CHECK(cn2_integral(p, 0.0, 5e5) == doctest::Approx(ref::cn2_column).epsilon(1e-8));
  }

  TEST_CASE("profile invariants") {
    CHECK_THROWS_AS(AtmosphereProfile(-1.0, 3.0, 5.0, 0.01), DomainError);
    CHECK_THROWS_AS(AtmosphereProfile(9.6e-14, 3.0, 0.01, 5.0), DomainError);
    CHECK_THROWS_AS(AtmosphereProfile(9.6e-14, 3.0, 5.0, 0.01, -1.0), DomainError);
    CHECK(AtmosphereProfile::reference_link().scaled(2.0).cn2_multiplier() == 2.0);
  }

  TEST_CASE("turbulence diagnostics match the reference quadrature") {
    const auto p = AtmosphereProfile::reference_link();
    for (const auto& z : ref::table) {
      CAPTURE(z.deg);
      const auto g = LinkGeometry::reference_link(z.deg);
      CHECK(rytov_variance(g, p) == doctest::Approx(z.rytov).epsilon(1e-7));
      CHECK(scintillation_index(rytov_variance(g, p)) == doctest::Approx(z.scint).epsilon(1e-7));
      CHECK(std::get<double>(fried_parameter(g, p)) == doctest::Approx(z.r0).epsilon(1e-7));
      const auto d = std::get<TurbulenceDiagnostics>(greenwood_and_coherence(g, p));
      CHECK(d.greenwood_frequency == doctest::Approx(z.fg).epsilon(1e-7));
      CHECK(d.coherence_time == doctest::Approx(z.tau).epsilon(1e-7));
      CHECK(d.coherence_time * d.greenwood_frequency == doctest::Approx(kCoherenceTimeConstant));
    }
  }

  TEST_CASE("scintillation index limits") {
    CHECK(scintillation_index(0.0) == 0.0);
    CHECK(scintillation_index(1.0) == doctest::Approx(0.7064384959192418).epsilon(1e-12));
    // Weak turbulence: sigma_I^2 -> sigma_R^2.
    CHECK(scintillation_index(1e-6) == doctest::Approx(1e-6).epsilon(1e-5));
    // Saturation: exp(0.51 / 0.69^(5/6)) - 1.
    CHECK(scintillation_index(1e8) == doctest::Approx(std::exp(0.51 / std::pow(0.69, 5.0 / 6.0)) - 1.0).epsilon(1e-3));
  }

  TEST_CASE("rytov variance scales with sec^(11/6)") {
    const auto p = AtmosphereProfile::reference_link();
    const double ratio = rytov_variance(LinkGeometry::reference_link(60.0), p) /
                         rytov_variance(LinkGeometry::reference_link(0.0), p);
    CHECK(ratio == doctest::Approx(std::pow(2.0, 11.0 / 6.0)).epsilon(1e-9));
  }

  TEST_CASE("slab restrictions add up") {
    const auto p = AtmosphereProfile::reference_link();
    const auto g = LinkGeometry::reference_link(30.0);
    const double whole = rytov_variance(g, p);
    const double split = rytov_variance(g, p, 0.0, 2000.0) + rytov_variance(g, p, 2000.0, 5e5);
    CHECK(split == doctest::Approx(whole).epsilon(1e-9));
    CHECK_THROWS_AS((void)rytov_variance(g, p, 100.0, 50.0), DomainError);
    // r0^(-5/3) is additive over slabs.
    const double r_all = std::get<double>(fried_parameter(g, p));
    const double r_a = std::get<double>(fried_parameter(g, p, 0.0, 2000.0));
    const double r_b = std::get<double>(fried_parameter(g, p, 2000.0, 5e5));
    CHECK(std::pow(r_a, -5.0 / 3.0) + std::pow(r_b, -5.0 / 3.0) == doctest::Approx(std::pow(r_all, -5.0 / 3.0)).epsilon(1e-9));
  }

  TEST_CASE("zero turbulence is a distinguished value") {
    const auto g = LinkGeometry::reference_link();
    const auto v = AtmosphereProfile::vacuum();
    CHECK(std::holds_alternative<NoTurbulence>(fried_parameter(g, v)));
    CHECK(std::holds_alternative<NoTurbulence>(greenwood_and_coherence(g, v)));
    CHECK(rytov_variance(g, v) == 0.0);
  }

  TEST_CASE("coherence time decreases with zenith angle") {
    const auto p = AtmosphereProfile::reference_link();
    double last = 1.0;
    for (double z : {0.0, 15.0, 30.0, 45.0, 60.0}) {
      const double tau = std::get<TurbulenceDiagnostics>(greenwood_and_coherence(LinkGeometry::reference_link(z), p)).coherence_time;
      CHECK(tau < last);
      last = tau;
    }
  }
}
