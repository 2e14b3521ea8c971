#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "windgbm/evaluation.hpp"
#include "windgbm/log.hpp"
#include "windgbm/synth.hpp"

using namespace windgbm;

namespace {

BaselineRecord baseline(double realized, double forecast, double alpha = 0.5) {
    BaselineRecord r;
    r.realized_power = realized;
    r.forecasts = {{alpha, forecast}};
    return r;
}

ForecastRecord exact(double power) {
    ForecastRecord r;
    r.density = {std::log(power), 0.0};
    r.point = power;
    r.realized_power = power;
    r.intervals = {{0.5, power, power}, {0.9, power, power}};
    return r;
}

}  // namespace

TEST_CASE("power curve error") {
    CHECK(pce(10.0, 8.0, 0.73) == doctest::Approx(1.46));
    CHECK(pce(5.0, 9.0, 0.27) == doctest::Approx(2.92));
    CHECK(pce(5.0, 5.0, 0.3) == 0.0);

    // Piecewise linear in the forecast with its minimum at the realized value.
    for (double alpha : {0.1, 0.5, 0.9}) {
        for (double f = 0.0; f <= 20.0; f += 0.5) CHECK(pce(10.0, f, alpha) >= pce(10.0, 10.0, alpha));
        CHECK(pce(10.0, 6.0, alpha) - pce(10.0, 7.0, alpha) == doctest::Approx(alpha));
        CHECK(pce(10.0, 14.0, alpha) - pce(10.0, 13.0, alpha) == doctest::Approx(1.0 - alpha));
    }
}

TEST_CASE("summaries") {
    SUBCASE("single error") {
        const std::vector<BaselineRecord> r{baseline(10.0, 7.0)};
        const auto rep = summarize_baseline(r, "persistent", 0.5);
        CHECK(rep.rmse == doctest::Approx(3.0));
        CHECK(rep.mae == doctest::Approx(3.0));
        CHECK(rep.n_test == 1);
    }

    SUBCASE("two errors") {
        const std::vector<BaselineRecord> r{baseline(10.0, 7.0), baseline(6.0, 10.0)};
        const auto rep = summarize_baseline(r, "arma", 0.5);
        CHECK(rep.rmse == doctest::Approx(std::sqrt(12.5)));
        CHECK(rep.mae == doctest::Approx(3.5));
        CHECK(rep.pce_avg == doctest::Approx((0.5 * 3.0 + 0.5 * 4.0) / 2.0));
    }

    SUBCASE("perfect forecasts") {
        const std::vector<ForecastRecord> r{exact(20.0), exact(35.0), exact(50.0)};
        const auto rep = summarize_proposed(r, 0.4);
        CHECK(rep.pce_avg == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(rep.rmse == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(rep.mae == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(rep.coverage.at(0.5) == 1.0);
        CHECK(rep.coverage.at(0.9) == 1.0);
    }

    SUBCASE("point is re-derived from the density") {
        ForecastRecord r;
        r.density = {std::log(30.0), 0.2};
        r.point = 1e6;  // stale value, must be ignored
        r.realized_power = 30.0;
        const std::vector<ForecastRecord> rs{r};
        const auto rep = summarize_proposed(rs, 0.73);
        const double q = quantile(r.density, 0.73);
        CHECK(rep.mae == doctest::Approx(q - 30.0));
        CHECK(rep.pce_avg == doctest::Approx(0.27 * (q - 30.0)));
    }

    SUBCASE("empty input") {
        CHECK_THROWS(summarize_proposed(std::vector<ForecastRecord>{}, 0.5));
        CHECK_THROWS(summarize_baseline(std::vector<BaselineRecord>{}, "x", 0.5));
    }

    SUBCASE("csv has one row per report") {
        const std::vector<ForecastRecord> r{exact(20.0)};
        const std::string csv = reports_to_csv({summarize_proposed(r, 0.5)});
        CHECK(csv.rfind("method,alpha,pce_avg,rmse,mae,n_test,coverage50,coverage90\n", 0) == 0);
    }
}

TEST_CASE("alpha sweep") {
    set_warning_sink([](const std::string&) {});
    synth::SimSpec spec;
    spec.n_steps = 300;
    spec.sigma_profile = {0.04, 0.0, 1.0};
    spec.s0 = 9.0;
    spec.true_curve = {90.0, 0.35, 8.0};
    spec.seed = 17;
    const auto sim = synth::simulate(spec);
    RunConfig config;
    config.hyper_grid.q_mu = {1e-6};
    config.hyper_grid.q_sigma = {1e-8};
    config.hyper_grid.sigma_z2 = {1e-4};
    config.hyper_grid.delta = {4.0};
    config.hyper_grid.gamma = {1.0};
    const auto [train, test] = split_train_test(sim.frame, config);
    const std::vector<double> alphas{0.27, 0.5, 0.73};
    const std::vector<BaselineMethod> methods{BaselineMethod::persistent, BaselineMethod::arma};
    const auto run = run_comparison(train, test, config, alphas, methods);

    SUBCASE("singleton grid equals the summary") {
        const std::vector<double> half{0.5};
        const auto rows = pce_alpha_sweep(run, half);
        const auto reports = summarize(run, 0.5);
        REQUIRE(rows.size() == reports.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            CHECK(rows[i].method == reports[i].method);
            CHECK(rows[i].avg_pce == reports[i].pce_avg);
        }
        CHECK(reports.front().method == "proposed");
    }

    SUBCASE("persistent forecasts are fixed while the loss moves") {
        const auto rows = pce_alpha_sweep(run, alphas);
        std::vector<double> persistent;
        for (const auto& r : rows)
            if (r.method == "persistent") persistent.push_back(r.avg_pce);
        REQUIRE(persistent.size() == 3);
        CHECK(persistent[0] != persistent[2]);
        for (const auto& r : run.baselines.at(BaselineMethod::persistent)) {
            CHECK(r.at(0.27) == r.at(0.73));
        }
    }

    SUBCASE("grid must lie strictly inside the unit interval") {
        CHECK_THROWS(pce_alpha_sweep(run, std::vector<double>{0.0, 0.5}));
        CHECK_THROWS(pce_alpha_sweep(run, std::vector<double>{1.0}));
        CHECK_THROWS(pce_alpha_sweep(run, std::vector<double>{}));
    }
}

TEST_CASE("the alpha-quantile beats neighbouring levels on model-consistent data") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> loc(2.0, 4.0), scale(0.05, 0.5);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<ForecastRecord> records(10000);
    for (auto& r : records) {
        r.density = {loc(rng), scale(rng)};
        r.realized_power = std::exp(r.density.mu_prime + r.density.sigma_prime * z(rng));
    }
    const auto average = [&](double alpha, double level) {
        double total = 0.0;
        for (const auto& r : records) total += pce(r.realized_power, quantile(r.density, level), alpha);
        return total / static_cast<double>(records.size());
    };
    for (double alpha : {0.2, 0.5, 0.8}) {
        const double best = summarize_proposed(records, alpha).pce_avg;
        CHECK(best == doctest::Approx(average(alpha, alpha)));
        CHECK(best <= average(alpha, alpha - 0.1));
        CHECK(best <= average(alpha, alpha + 0.1));
    }
}
