#include <doctest.h>

#include <filesystem>
#include <string>

#include "duallink/config.hpp"
#include "duallink/errors.hpp"

using namespace duallink;

TEST_SUITE("config") {
  TEST_CASE("defaults reproduce the reference link") {
    const auto c = default_config();
    CHECK_NOTHROW(c.validate());
    CHECK(c.atmosphere == AtmosphereProfile::reference_link());
    CHECK(c.link.geometry(60.0, 0.15) == LinkGeometry::reference_link(60.0, 0.15));
    CHECK(c.grid.max_aperture == doctest::Approx(0.5));
    CHECK(c.finite_size == FiniteSizeParams{});
    CHECK(c.squeezing.params(10.0) == SqueezingParams::from_squeezing_db(10.0));
    CHECK(parse_config("{}") == c);
  }

  TEST_CASE("render and parse round trip") {
    auto c = default_config();
    c.scenario = "custom";
    c.link.aperture_radii = {0.2, 0.4};
    c.grid.max_aperture = 0.4;
    c.grid.n = 256;
    c.squeezing.anti_squeezed_variance = 12.0;
    c.finite_size.aep_policy = AepEpsilonPolicy::SmoothingBar;
    c.atmosphere = AtmosphereProfile::reference_link().scaled(0.5);
    c.output_dir = "elsewhere";
    CHECK(parse_config(render_config(c)) == c);
  }

  TEST_CASE("shorthand epsilon split and derived fields") {
    const auto c = parse_config(R"({"finite_size": {"epsilon": 4e-9, "block_size": 1e12},
                                    "link": {"aperture_radii_m": [0.1, 0.25]}})");
    CHECK(c.finite_size.eps_sm == doctest::Approx(1e-9));
    CHECK(c.finite_size.eps_pe == 0.0);
    CHECK(c.finite_size.kept_length == doctest::Approx(5e11));
    CHECK(c.grid.max_aperture == doctest::Approx(0.25));
    CHECK(parse_config(R"({"atmosphere": {"cn2_multiplier": 0}})").atmosphere.turbulent() == false);
  }

  TEST_CASE("strictness") {
    CHECK_THROWS_AS(parse_config(R"({"grid": {"n": 512, "size": 3}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"unknown": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"grid": {"n": "512"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"grid": {"n": 500}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"grid": {"n": 32}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"link": {"zenith_angles_deg": []}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"atmosphere": {"inner_scale_m": 10}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"finite_size": {"epsilon": 1e-9, "eps_sm": 1e-10}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"finite_size": {"eps_sm": 1e-10}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"finite_size": {"aep_epsilon": "other"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/duallink.json"), ConfigError);
  }

  TEST_CASE("hash ignores the output directory only") {
    auto a = default_config();
    auto b = a;
    b.output_dir = "somewhere/else";
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 8);
    b.ensemble.seed = 99;
    CHECK(config_hash(a) != config_hash(b));
  }

  TEST_CASE("shipped configs parse") {
    for (const char* name : {"reference.json", "smoke.json", "desk.json"}) {
      CAPTURE(name);
      CHECK_NOTHROW(load_config(std::filesystem::path(DUALLINK_SOURCE_DIR) / "configs" / name));
    }
  }
}
