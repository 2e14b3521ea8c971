#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "windgbm/series.hpp"

using namespace windgbm;

namespace {

std::string rows(std::size_t n, double speed = 8.0, double power = 40.0) {
    std::ostringstream out;
    out << "timestamp,wind_speed,power\n";
    for (std::size_t i = 0; i < n; ++i) out << 600 * i << ',' << speed << ',' << power << '\n';
    return out.str();
}

SeriesFrame ramp(std::size_t n) {
    SeriesFrame f;
    for (std::size_t i = 0; i < n; ++i) {
        f.timestamps.push_back(static_cast<std::int64_t>(i));
        f.speed.push_back(1.0 + static_cast<double>(i));
        f.power.push_back(static_cast<double>(i % 100));
    }
    return f;
}

}  // namespace

TEST_CASE("csv ingestion") {
    const RunConfig config;

    SUBCASE("a 1000-row file keeps every row") {
        CHECK(parse_csv(rows(1000), config).size() == 1000);
    }

    SUBCASE("power is scaled by rated capacity") {
        RunConfig c;
        c.rated_capacity = 100.0;
        CHECK(parse_csv(rows(3, 8.0, 50.0), c).power[0] == doctest::Approx(50.0));
        c.rated_capacity = 200.0;
        CHECK(parse_csv(rows(3, 8.0, 50.0), c).power[0] == doctest::Approx(25.0));
    }

    SUBCASE("calm speeds are clamped to the floor") {
        CHECK(parse_csv(rows(3, 0.0), config).speed[1] == 0.1);
        CHECK(parse_csv(rows(3, -2.0), config).speed[2] == 0.1);
    }

    SUBCASE("ISO-8601 and epoch timestamps agree") {
        const std::string iso =
            "timestamp,wind_speed,power\n"
            "2020-01-01T00:00:00Z,5,10\n2020-01-01T00:10:00Z,6,12\n2020-01-01 00:20,7,14\n";
        const SeriesFrame f = parse_csv(iso, config);
        REQUIRE(f.size() == 3);
        CHECK(f.timestamps[0] == 1577836800);
        CHECK(f.timestamps[2] - f.timestamps[1] == 600);
        CHECK(parse_timestamp("1577836800") == 1577836800);
    }

    SUBCASE("malformed rows report their line") {
        const std::string bad = "timestamp,wind_speed,power\n0,5,10\n600,abc,11\n";
        try {
            parse_csv(bad, config);
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
        CHECK_THROWS_AS(parse_csv("timestamp,wind_speed,power\n0,5\n", config), ParseError);
        CHECK_THROWS_AS(parse_csv("time,speed,power\n0,5,1\n", config), ParseError);
    }

    SUBCASE("uneven spacing and empty input are rejected") {
        CHECK_THROWS_AS(parse_csv("timestamp,wind_speed,power\n0,5,1\n600,5,1\n1300,5,1\n", config),
                        SpacingError);
        CHECK_THROWS_AS(parse_csv("", config), EmptyInputError);
        CHECK_THROWS_AS(parse_csv("timestamp,wind_speed,power\n", config), EmptyInputError);
    }

    SUBCASE("write then load is lossless") {
        const auto path = std::filesystem::temp_directory_path() / "windgbm_series_roundtrip.csv";
        SeriesFrame f = parse_csv(rows(20, 7.123456789012345, 33.3333333333333), config);
        write_csv(path, f);
        const SeriesFrame g = load_csv(path, config);
        CHECK(g.speed == f.speed);
        CHECK(g.power == f.power);
        CHECK(g.timestamps == f.timestamps);
        std::filesystem::remove(path);
    }
}

TEST_CASE("chronological split") {
    const RunConfig config;
    const auto sizes = [&](std::size_t n) {
        const auto [train, test] = split_train_test(ramp(n), config);
        return std::pair{train.size(), test.size()};
    };
    CHECK(sizes(1000) == std::pair<std::size_t, std::size_t>{700, 300});
    CHECK(sizes(650) == std::pair<std::size_t, std::size_t>{455, 195});
    CHECK(sizes(10) == std::pair<std::size_t, std::size_t>{7, 3});
    CHECK_THROWS_AS(split_train_test(ramp(9), config), std::invalid_argument);

    const SeriesFrame f = ramp(137);
    auto [train, test] = split_train_test(f, config);
    train.append(test);
    CHECK(train.speed == f.speed);
    CHECK(train.power == f.power);
    CHECK(train.timestamps == f.timestamps);
}

TEST_CASE("power scaling round trip") {
    RunConfig c;
    c.rated_capacity = 37.5;
    const SeriesFrame f = parse_csv("timestamp,wind_speed,power\n0,8,12.345678\n600,8,12.345678\n", c);
    CHECK(std::abs(f.unscale_power(f.power[0]) - 12.345678) <= 1e-12 * 12.345678);
}

TEST_CASE("run configuration") {
    SUBCASE("defaults") {
        const RunConfig c;
        CHECK(c.n0_fraction == 0.70);
        CHECK(c.interval_levels == std::vector<double>{0.50, 0.90});
        CHECK(c.power_floor == 0.1);
        CHECK(c.max_order == 3);
        CHECK_NOTHROW(c.validate());
    }

    SUBCASE("json round trip") {
        RunConfig c;
        c.alpha_loss = 0.27;
        c.hyper_grid.delta = {2.0, 3.0};
        c.refit_every = 7;
        c.time_derivative = false;
        const RunConfig d = config_from_json_text(config_to_json_text(c));
        CHECK(d.alpha_loss == 0.27);
        CHECK(d.hyper_grid.delta == std::vector<double>{2.0, 3.0});
        CHECK(d.refit_every == 7);
        CHECK_FALSE(d.time_derivative);
        CHECK(config_to_json_text(d) == config_to_json_text(c));
    }

    SUBCASE("invalid values and keys") {
        CHECK_THROWS_AS(config_from_json_text(R"({"n0_fraction": 1.0})"), std::invalid_argument);
        CHECK_THROWS_AS(config_from_json_text(R"({"alpha_loss": -0.1})"), std::invalid_argument);
        CHECK_THROWS_AS(config_from_json_text(R"({"interval_levels": [0.5, 1.0]})"),
                        std::invalid_argument);
        CHECK_THROWS_AS(config_from_json_text(R"({"windw": 3})"), std::invalid_argument);
        CHECK_THROWS_AS(config_from_json_text(R"({"window": "big"})"), std::invalid_argument);
        CHECK_THROWS_AS(config_from_json_text("n0_fraction = 0.7"), std::invalid_argument);
        CHECK_THROWS_AS(config_from_json_text(R"({"hyper_grid": {"delta": [0.0]}})"),
                        std::invalid_argument);
    }
}
