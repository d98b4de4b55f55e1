#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <string>

#include "cavqed/errors.hpp"
#include "cavqed/io.hpp"
#include "cavqed/scenario.hpp"

using namespace cavqed;

namespace {

const std::filesystem::path kScenarios{CAVQED_SCENARIO_DIR};

const char* kMinimal = R"({
  "name": "t",
  "cavity": {"kappa_wg_mhz": 860, "kappa_sc_mhz": 2770, "delta_c_mhz": -7260},
  "atoms": [{"lines": [{"delta_mhz": 0, "gamma_mhz": 6, "c0": 56}], "light_shift_mhz": 3}],
  "geometry": {"a_nm": 290, "z0_nm": 120, "envelope_um": null},
  "probe": {"start_mhz": -10, "stop_mhz": 10, "points": 5},
  "monte_carlo": {"samples": 10, "seed": 4}
})";

int error_line(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

} // namespace

TEST_CASE("bundled scenarios parse") {
    int count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(kScenarios)) {
        if (entry.path().extension() != ".json") continue;
        CAPTURE(entry.path().string());
        CHECK_NOTHROW(load_scenario(entry.path()));
        ++count;
    }
    CHECK(count >= 9);
    const auto fig1e = load_scenario(kScenarios / "fig1e.json");
    REQUIRE(fig1e.fit);
    CHECK(fig1e.fit->bootstrap_mode == BootstrapMode::FullProcedure);
    CHECK(fig1e.fit->parameters.size() == 5);
    CHECK(fig1e.atoms[0].lines.size() == 3);
    const auto fig4 = load_scenario(kScenarios / "fig4.json");
    REQUIRE(fig4.map);
    CHECK(fig4.map->delta_ab.points == 21);
    CHECK(load_scenario(kScenarios / "detect.json").detect->trials == 100000);
}

TEST_CASE("scenario fields") {
    const auto s = parse_scenario(kMinimal);
    CHECK(s.name == "t");
    CHECK(s.cavity.delta_c() == -7260.0);
    CHECK(s.cavity.kappa() == 3630.0);
    REQUIRE(s.atoms.size() == 1);
    CHECK(s.atoms[0].light_shift == 3.0);
    CHECK(s.atoms[0].lines[0].cooperativity() == 56.0);
    CHECK(s.probe.values() == std::vector<double>{-10.0, -5.0, 0.0, 5.0, 10.0});
    CHECK(s.monte_carlo.samples == 10);
    CHECK_FALSE(s.map);
    CHECK_FALSE(s.fit);
    CHECK(s.motionless_emitters().line_count() == 1);
}

TEST_CASE("configuration errors carry a position") {
    std::string unknown = kMinimal;
    unknown.replace(unknown.find("\"seed\""), 6, "\"sead\"");
    CHECK(error_line(unknown) == 7);

    std::string syntax = kMinimal;
    syntax.replace(syntax.find("\"points\": 5"), 11, "\"points\": 5,,");
    CHECK(error_line(syntax) == 6);

    std::string bad_value = kMinimal;
    bad_value.replace(bad_value.find("\"gamma_mhz\": 6"), 14, "\"gamma_mhz\": -6");
    CHECK(error_line(bad_value) == 4);

    std::string wrong_type = kMinimal;
    wrong_type.replace(wrong_type.find("\"samples\": 10"), 13, "\"samples\": \"x\"");
    CHECK(error_line(wrong_type) == 7);

    std::string missing = kMinimal;
    missing.replace(missing.find("\"geometry\""), 10, "\"geometryx\"");
    CHECK_THROWS_AS(parse_scenario(missing), ConfigError);

    CHECK_THROWS_AS(load_scenario(kScenarios / "missing.json"), ConfigError);
}

TEST_CASE("number formatting") {
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(-0.1) == "-0.1");
    CHECK(format_number(1e-20) == "1e-20");
    CHECK(format_number(128.0) == "128");
    const double x = 0.1 + 0.2;
    CHECK(std::stod(format_number(x)) == x);
}

TEST_CASE("spectrum CSV round trip") {
    const Spectrum s({-1.5, 0.0, 2.25}, {0.25, 0.5, 1.0 / 3.0}, std::vector<double>{0.01, 0.0, 0.02});
    std::ostringstream out;
    write_spectrum_csv(out, s);
    CHECK(out.str().rfind("probe_mhz,reflectivity,stderr\n", 0) == 0);
    CHECK(out.str().find('\r') == std::string::npos);
    std::istringstream in(out.str());
    const auto back = read_spectrum_csv(in);
    CHECK(back.probe() == s.probe());
    CHECK(back.values() == s.values());
    REQUIRE(back.standard_error());
    CHECK(*back.standard_error() == *s.standard_error());

    std::istringstream two("probe_mhz,reflectivity\n1,0.5\n2,0.25\n");
    const auto plain = read_spectrum_csv(two);
    CHECK(plain.values() == std::vector<double>{0.5, 0.25});
    std::istringstream broken("probe_mhz,reflectivity\n1,abc\n");
    CHECK_THROWS(read_spectrum_csv(broken));
}
