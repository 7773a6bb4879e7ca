#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "duallink/atmosphere.hpp"
#include "duallink/ensemble.hpp"
#include "duallink/errors.hpp"

using namespace duallink;

namespace {

GridSettings small_grid() {
  GridSettings g;
  g.n = 128;
  return g;
}

ChannelEnsemble synthetic(std::vector<double> etas, std::optional<double> tau = std::nullopt) {
  ChannelEnsemble e;
  e.metadata.geometry = LinkGeometry::reference_link(60.0, 0.15);
  e.metadata.realizations = etas.size();
  e.metadata.seed = 17;
  e.metadata.tool_version = "test";
  e.metadata.warnings = {"first note", "second note"};
  e.etas = std::move(etas);
  e.coherence_time = tau;
  return e;
}

}  // namespace

TEST_SUITE("ensemble") {
  TEST_CASE("vacuum ensemble equals the encircled-power oracle") {
    const auto g = LinkGeometry::reference_link(0.0, 0.5);
    GridSettings grid;
    grid.n = 256;
    const auto e = run_ensemble(g, AtmosphereProfile::vacuum(), grid, 1, 1);
    REQUIRE(e.etas.size() == 1);
    const double w = g.beam_radius(g.path_length());
    CHECK(e.etas[0] == doctest::Approx(1.0 - std::exp(-2.0 * 0.25 / (w * w))).epsilon(1e-3));
    CHECK_FALSE(e.coherence_time.has_value());
    const auto s = fading_stats(e);
    CHECK(s.var_sqrt == doctest::Approx(0.0).scale(1.0));
  }

  TEST_CASE("ensembles do not depend on the thread count") {
    const auto g = LinkGeometry::reference_link(30.0, 0.3);
    const auto p = AtmosphereProfile::reference_link();
    const auto one = run_ensemble(g, p, small_grid(), 6, 42, {1});
    const auto three = run_ensemble(g, p, small_grid(), 6, 42, {3});
    CHECK(one == three);
    CHECK(render_ensemble(one) == render_ensemble(three));
    const auto other = run_ensemble(g, p, small_grid(), 6, 43, {3});
    CHECK(other.etas != one.etas);
    REQUIRE(one.coherence_time.has_value());
    CHECK(*one.coherence_time == doctest::Approx(0.003186668946452877).epsilon(1e-7));
    CHECK(one.metadata.realizations == 6);
    CHECK(one.metadata.seed == 42);
  }

  TEST_CASE("multi-aperture runs share realizations") {
    const auto g = LinkGeometry::reference_link(0.0, 0.5);
    const auto p = AtmosphereProfile::reference_link();
    const double radii[] = {0.15, 0.5};
    const auto both = run_ensemble_apertures(g, p, small_grid(), 4, 5, radii, {2});
    REQUIRE(both.size() == 2);
    const auto single = run_ensemble(LinkGeometry::reference_link(0.0, 0.15), p, small_grid(), 4, 5, {1});
    CHECK(both[0] == single);
    for (std::size_t i = 0; i < 4; ++i) CHECK(both[0].etas[i] < both[1].etas[i]);
  }

  TEST_CASE("small windows are recorded as warnings") {
    const auto g = LinkGeometry::reference_link(0.0, 0.5);
    GridSettings grid = small_grid();
    grid.max_aperture = 0.3;
    const auto e = run_ensemble(g, AtmosphereProfile::vacuum(), grid, 1, 1);
    CHECK_FALSE(e.metadata.warnings.empty());
  }

  TEST_CASE("fading statistics") {
    const std::vector<double> flat(10, 0.25);
    const auto s = fading_stats(flat);
    CHECK(s.mean_eta == doctest::Approx(0.25));
    CHECK(s.eta_f == doctest::Approx(0.25));
    CHECK(s.var_sqrt == doctest::Approx(0.0).scale(1.0));
    CHECK(s.std_loss_db == doctest::Approx(0.0).scale(1.0));
    const std::vector<double> two{0.0, 1.0};
    const auto t = fading_stats(two);
    CHECK(t.mean_eta == doctest::Approx(0.5));
    CHECK(t.eta_f == doctest::Approx(0.25));
    CHECK(t.var_sqrt == doctest::Approx(0.25));
    const std::vector<double> spread{0.1, 0.01};
    CHECK(fading_stats(spread).mean_loss_db == doctest::Approx(15.0));
    CHECK(fading_stats(spread).std_loss_db == doctest::Approx(std::sqrt(2.0) * 5.0));
    const std::vector<double> bad{0.5, 1.2};
    CHECK_THROWS_AS(fading_stats(bad), DataIntegrityError);
    CHECK(constant_stats(0.3).eta_f == doctest::Approx(0.3));
    CHECK(loss_db(0.1) == doctest::Approx(10.0));
  }

  TEST_CASE("loss histogram") {
    const auto flat = loss_histogram(synthetic(std::vector<double>(8, 0.5)), 0.05);
    REQUIRE(flat.size() == 1);
    CHECK(flat[0].density == doctest::Approx(1.0 / 0.05));
    const auto spread = loss_histogram(synthetic({0.1, 0.1, 0.01, 0.05}), 1.0);
    double integral = 0.0;
    for (const auto& b : spread) integral += b.density * 1.0;
    CHECK(integral == doctest::Approx(1.0));
    CHECK(spread.front().center_db == doctest::Approx(10.5));
    CHECK(spread.back().center_db == doctest::Approx(20.5));
    CHECK(spread.size() == 11);
    std::ostringstream out;
    write_histogram_csv(out, spread);
    CHECK(out.str().rfind("bin_center_db,density\n", 0) == 0);
  }

  TEST_CASE("coherence step series") {
    constexpr double tau = 0.0022919258970701254;
    const auto e = synthetic(std::vector<double>(300, 0.2), tau);
    CHECK(coherence_step_series(e, 0.5).size() == 218);
    const auto one = coherence_step_series(e, tau);
    REQUIRE(one.size() == 1);
    CHECK(one[0].t_start == 0.0);
    const auto steps = coherence_step_series(e, 10 * tau);
    CHECK(steps[3].t_start == doctest::Approx(3 * tau));
    CHECK_THROWS_AS(coherence_step_series(e, 1.0), DomainError);
    CHECK_THROWS_AS(coherence_step_series(synthetic({0.2, 0.3}), 0.1), DomainError);
    std::ostringstream out;
    write_step_series_csv(out, steps);
    CHECK(out.str().rfind("t_start_s,eta\n", 0) == 0);
  }

  TEST_CASE("file round trip is exact") {
    const auto e = synthetic({0.1234567890123456789, 1.0 / 3.0, 0.0, 1.0}, 0.0031);
    CHECK(parse_ensemble(render_ensemble(e)) == e);
    const auto path = std::filesystem::temp_directory_path() / "duallink_roundtrip.dat";
    save_ensemble(e, path);
    CHECK(load_ensemble(path) == e);
    std::filesystem::remove(path);
    CHECK(parse_ensemble(render_ensemble(synthetic({0.5}))).coherence_time == std::nullopt);
  }

  TEST_CASE("damaged files are rejected") {
    const std::string text = render_ensemble(synthetic({0.1, 0.2, 0.3}, 0.002));
    CHECK_THROWS_AS(parse_ensemble(text.substr(0, text.size() - 10)), DataIntegrityError);
    CHECK_THROWS_AS(parse_ensemble(text.substr(0, text.size() / 2)), DataIntegrityError);
    std::string flipped = text;
    flipped[flipped.size() - 5] = flipped[flipped.size() - 5] == '1' ? '2' : '1';
    CHECK_THROWS_AS(parse_ensemble(flipped), DataIntegrityError);
    CHECK_THROWS_AS(parse_ensemble("hello"), DataIntegrityError);
    CHECK_THROWS_AS(load_ensemble("/nonexistent/duallink.dat"), ConfigError);
  }
}
