#include <doctest.h>

#include <cmath>

#include "duallink/atmosphere.hpp"
#include "duallink/errors.hpp"
#include "duallink/optics.hpp"
#include "duallink/screens.hpp"

using namespace duallink;

namespace {

double gaussian_capture(double ra, double w) { return 1.0 - std::exp(-2.0 * ra * ra / (w * w)); }

ComplexField vacuum_receive(const LinkGeometry& g, const GridSettings& grid) {
  const auto v = AtmosphereProfile::vacuum();
  const auto plan = plan_slabs(g, v, greenwood_and_coherence(g, v));
  return split_step(gaussian_source(g, grid), plan, {grid.receiver_spacing(g), grid.apodization}, 1, 0);
}

}  // namespace

TEST_SUITE("optics") {
  TEST_CASE("gaussian source has unit power") {
    const auto g = LinkGeometry::reference_link();
    GridSettings grid;
    grid.n = 256;
    const auto f = gaussian_source(g, grid);
    CHECK(f.power() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(second_moment_radius(f) == doctest::Approx(g.beam_waist).epsilon(1e-6));
    CHECK_THROWS_AS(gaussian_source(g, 64, 0.05), ConfigError);
  }

  TEST_CASE("vacuum downlink matches gaussian beam optics") {
    for (double z : {0.0, 60.0}) {
      CAPTURE(z);
      const auto g = LinkGeometry::reference_link(z);
      GridSettings grid;
      grid.n = 512;
      const auto rx = vacuum_receive(g, grid);
      const double wl = g.beam_radius(g.path_length());
      CHECK(rx.power() == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(second_moment_radius(rx) == doctest::Approx(wl).epsilon(1e-3));
      for (double ra : {0.15, 0.3, 0.5}) CHECK(std::abs(aperture_transmissivity(rx, ra) - gaussian_capture(ra, wl)) < 2e-4);
      CHECK(edge_power_fraction(rx) < 1e-10);
    }
  }

  TEST_CASE("short-range hop in both kernels preserves a gaussian") {
    const double lambda = 1e-6, w0 = 0.01;
    LinkGeometry g = LinkGeometry::reference_link();
    g.wavelength = lambda;
    g.beam_waist = w0;
    const auto src = gaussian_source(g, 256, w0 / 8.0);
    for (double dz : {10.0, 300.0}) {
      CAPTURE(dz);
      const auto out = propagate_vacuum(src, dz);
      const double zr = M_PI * w0 * w0 / lambda;
      CHECK(second_moment_radius(out) == doctest::Approx(w0 * std::sqrt(1.0 + dz * dz / (zr * zr))).epsilon(1e-3));
      CHECK(out.power() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(out.z == doctest::Approx(src.z + dz));
    }
    VacuumOptions rescale;
    rescale.output_spacing = 2.0 * src.spacing;
    const auto wide = propagate_vacuum(src, 300.0, rescale);
    CHECK(wide.spacing == doctest::Approx(2.0 * src.spacing));
    CHECK(second_moment_radius(wide) == doctest::Approx(second_moment_radius(propagate_vacuum(src, 300.0))).epsilon(1e-3));
  }

  TEST_CASE("kernel selection follows the window fresnel number") {
    LinkGeometry g = LinkGeometry::reference_link();
    const auto src = gaussian_source(g, 256, g.beam_waist / 8.0);
    const double window = src.window();
    const double dz_edge = (window / 2) * (window / 2) / g.wavelength;
    CHECK(grid_fresnel_number(src, dz_edge) == doctest::Approx(1.0));
    CHECK(select_kernel(src, 0.5 * dz_edge, std::nullopt) == PropagationKernel::AngularSpectrum);
    CHECK(select_kernel(src, 2.0 * dz_edge, std::nullopt) == PropagationKernel::FresnelTwoStep);
    CHECK(select_kernel(src, 0.5 * dz_edge, 2.0 * src.spacing) == PropagationKernel::FresnelTwoStep);
    CHECK(select_kernel(src, 0.0, std::nullopt) == PropagationKernel::AngularSpectrum);
  }

  TEST_CASE("invalid propagation requests") {
    LinkGeometry g = LinkGeometry::reference_link();
    const auto src = gaussian_source(g, 128, g.beam_waist / 8.0);
    CHECK_THROWS_AS(propagate_vacuum(src, -1.0), DomainError);
    VacuumOptions rescale;
    rescale.output_spacing = 2.0 * src.spacing;
    CHECK_THROWS_AS(propagate_vacuum(src, 0.0, rescale), DomainError);
    // Diffracting far past the window trips the edge-power guard.
    CHECK_THROWS_AS(propagate_vacuum(src, 2e6), NumericalError);
    VacuumOptions unchecked;
    unchecked.check_guard = false;
    CHECK_NOTHROW(propagate_vacuum(src, 2e6, unchecked));
  }

  TEST_CASE("apodization damps only the border band") {
    LinkGeometry g = LinkGeometry::reference_link();
    auto f = gaussian_source(g, 128, g.beam_waist / 8.0);
    for (auto& v : f.samples.span()) v = {1.0, 0.0};
    apodize(f);
    CHECK(std::abs(f.samples(64, 64)) == doctest::Approx(1.0));
    CHECK(std::abs(f.samples(64, 20)) == doctest::Approx(1.0));
    CHECK(std::abs(f.samples(64, 0)) < 1e-5);
    CHECK(std::abs(f.samples(0, 64)) < 1e-5);
  }

  TEST_CASE("phase screens multiply the field") {
    LinkGeometry g = LinkGeometry::reference_link();
    const auto f = gaussian_source(g, 64, g.beam_waist / 8.0);
    PhaseScreen s;
    s.n = 64;
    s.spacing = f.spacing;
    s.phase.assign(64 * 64, M_PI / 2);
    const auto out = apply_screen(f, s);
    CHECK(out.samples(32, 32).imag() == doctest::Approx(std::abs(f.samples(32, 32))));
    CHECK(out.power() == doctest::Approx(f.power()));
    s.spacing *= 1.5;
    CHECK_THROWS_AS(apply_screen(f, s), DomainError);
    s.spacing = f.spacing;
    s.n = 32;
    s.phase.resize(32 * 32);
    CHECK_THROWS_AS(apply_screen(f, s), DomainError);
  }

  TEST_CASE("circle-cell overlap against supersampling") {
    CHECK(circle_cell_overlap(-2, 2, -2, 2, 1.0) == doctest::Approx(M_PI));
    CHECK(circle_cell_overlap(2, 3, 2, 3, 1.0) == 0.0);
    CHECK(circle_cell_overlap(-0.1, 0.1, -0.1, 0.1, 1.0) == doctest::Approx(0.04));
    const double cells[][4] = {{0.6, 0.9, 0.1, 0.4}, {-0.95, -0.6, -0.5, 0.2}, {0.5, 0.8, 0.5, 0.8}, {-0.2, 0.3, 0.85, 1.2}};
    for (const auto& c : cells) {
      const int m = 2000;
      int inside = 0;
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          const double x = c[0] + (c[1] - c[0]) * (i + 0.5) / m;
          const double y = c[2] + (c[3] - c[2]) * (j + 0.5) / m;
          inside += x * x + y * y <= 1.0;
        }
      const double sampled = (c[1] - c[0]) * (c[3] - c[2]) * inside / (double(m) * m);
      CHECK(circle_cell_overlap(c[0], c[1], c[2], c[3], 1.0) == doctest::Approx(sampled).epsilon(1e-4));
    }
  }

  TEST_CASE("aperture transmissivity of a flat field is the disc area") {
    LinkGeometry g = LinkGeometry::reference_link();
    auto f = gaussian_source(g, 128, 0.01);
    for (auto& v : f.samples.span()) v = {1.0, 0.0};
    // Unit intensity, so the captured power is the disc area; an off-grid radius
    // exercises the rim weighting.
    CHECK(aperture_transmissivity(f, 0.3137) == doctest::Approx(M_PI * 0.3137 * 0.3137).epsilon(1e-12));
    CHECK_THROWS_AS(aperture_transmissivity(f, 0.015), ConfigError);
  }

  TEST_CASE("turbulent realizations are reproducible and lose power to the aperture") {
    const auto g = LinkGeometry::reference_link(30.0, 0.3);
    const auto p = AtmosphereProfile::reference_link();
    GridSettings grid;
    grid.n = 256;
    const auto plan = plan_slabs(g, p, greenwood_and_coherence(g, p));
    ChannelPropagator prop(gaussian_source(g, grid), plan, {grid.receiver_spacing(g)});
    CHECK(prop.screen_count() == plan.screen_count());
    const auto a = prop.realize(3, 4);
    const auto b = prop.realize(3, 4);
    const auto c = prop.realize(3, 5);
    CHECK(aperture_transmissivity(a, 0.3) == aperture_transmissivity(b, 0.3));
    CHECK(aperture_transmissivity(a, 0.3) != aperture_transmissivity(c, 0.3));
    const auto vac = vacuum_receive(g, grid);
    CHECK(second_moment_radius(a) > second_moment_radius(vac));
  }
}
