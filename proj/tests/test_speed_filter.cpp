#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "windgbm/log.hpp"
#include "windgbm/normal.hpp"
#include "windgbm/speed_filter.hpp"
#include "windgbm/synth.hpp"

using namespace windgbm;

namespace {

SpeedFilterState posterior(double x, double px, double mu, double s2, const Eigen::Matrix2d& q,
                           double sz2 = 0.01) {
    SpeedFilterState s;
    s.x_hat = x;
    s.p_x = px;
    s.sigma_z2 = sz2;
    s.theta.theta_hat << mu, s2;
    s.theta.q = q;
    s.theta.p_theta = Eigen::Matrix2d::Zero();
    return s;
}

struct QuietWarnings {
    int count = 0;
    WarningSink previous;
    QuietWarnings() {
        previous = set_warning_sink([this](const std::string&) { ++count; });
    }
    ~QuietWarnings() { set_warning_sink(previous); }
};

}  // namespace

TEST_CASE("initialization from a training window") {
    const RunConfig config;
    const FilterHyperparameters hyper{1e-6, 1e-8, 1e-3};

    SUBCASE("constant speeds fall back to the volatility floor") {
        QuietWarnings quiet;
        const std::vector<double> speeds(20, 8.0);
        const auto s = initialize(speeds, config, hyper);
        CHECK(s.theta.theta_hat(1) == doctest::Approx(1e-8));
        CHECK(s.theta.theta_hat(0) == doctest::Approx(1e-8 / 2.0));
        CHECK(s.x_hat == doctest::Approx(std::log(8.0)));
        CHECK(quiet.count == 1);
    }

    SUBCASE("exponential speeds give unit returns") {
        QuietWarnings quiet;
        const std::vector<double> speeds{std::exp(1.0), std::exp(2.0), std::exp(3.0)};
        const auto s = initialize(speeds, config, hyper);
        CHECK(s.theta.theta_hat(0) == doctest::Approx(1.0 + 1e-8 / 2.0));
        CHECK(s.x_hat == doctest::Approx(3.0));
    }

    SUBCASE("state and covariances") {
        const std::vector<double> speeds{5.0, 6.0, 5.5, 7.0};
        const auto s = initialize(speeds, config, hyper);
        CHECK(s.p_x == hyper.sigma_z2);
        CHECK(s.theta.p_theta(0, 0) == doctest::Approx(10.0 * hyper.q_mu));
        CHECK(s.theta.p_theta(1, 1) == doctest::Approx(10.0 * hyper.q_sigma));
        CHECK(s.a_row(0) == 1.0);
        CHECK(s.a_row(1) == -0.5);
    }

    SUBCASE("bad inputs") {
        CHECK_THROWS_AS(initialize(std::vector<double>{5.0, 6.0}, config, hyper),
                        std::invalid_argument);
        CHECK_THROWS_AS(initialize(std::vector<double>{5.0, 0.0, 6.0}, config, hyper),
                        std::invalid_argument);
    }
}

TEST_CASE("initial estimates match the generating GBM") {
    // 200 paths of 700 steps; the sample moments of the returns must land within
    // three of their standard errors of the truth in nearly every path.
    const RunConfig config;
    const FilterHyperparameters hyper{1e-6, 1e-8, 1e-6};
    int mu_ok = 0, sigma_ok = 0;
    for (int path = 0; path < 200; ++path) {
        synth::SimSpec spec;
        spec.n_steps = 700;
        spec.mu_profile = {0.01, 0.0, 1.0};
        spec.sigma_profile = {0.1, 0.0, 1.0};
        spec.obs_noise_var = 0.0;
        spec.seed = 500 + path;
        const auto s = initialize(synth::simulate(spec).frame.speed, config, hyper);
        const double n = 699.0;
        mu_ok += std::abs(s.theta.theta_hat(0) - 0.01) <= 3.0 * 0.1 / std::sqrt(n);
        sigma_ok += std::abs(std::sqrt(s.theta.theta_hat(1)) - 0.1) <=
                    3.0 * 0.1 / std::sqrt(2.0 * (n - 1.0));
    }
    CHECK(mu_ok >= 194);
    CHECK(sigma_ok >= 194);
}

TEST_CASE("time update") {
    SUBCASE("drift and variance substitution") {
        const auto st = posterior(2.0, 0.1, 0.0, 0.01, Eigen::Matrix2d::Zero());
        const auto step = predict(st);
        CHECK(step.prediction.x_prior == doctest::Approx(1.995));
        CHECK(step.prior.p_x == doctest::Approx(0.11));
        CHECK(step.prediction.s_point == doctest::Approx(std::exp(1.995)));
    }

    SUBCASE("zero parameters are a random walk") {
        const auto step = predict(posterior(1.234, 0.1, 0.0, 0.0, Eigen::Matrix2d::Zero()));
        CHECK(step.prediction.x_prior == 1.234);
    }

    SUBCASE("full numeric step") {
        Eigen::Matrix2d q = Eigen::Matrix2d::Zero();
        q(0, 0) = 1e-4;
        q(1, 1) = 1e-5;
        auto st = posterior(1.5, 0.05, 0.02, 0.04, q);
        st.theta.p_theta << 2e-4, 1e-5, 1e-5, 3e-5;
        const auto step = predict(st);
        CHECK(step.prediction.x_prior == doctest::Approx(1.5));
        CHECK(step.prior.p_x == doctest::Approx(0.09));
        CHECK(step.prior.theta.p_theta(0, 0) == doctest::Approx(3e-4));
        CHECK(step.prior.theta.p_theta(1, 1) == doctest::Approx(4e-5));
        CHECK(step.prior.theta.p_theta(0, 1) == doctest::Approx(1e-5));
    }

    SUBCASE("predict requires a posterior") {
        const auto step = predict(posterior(1.0, 0.1, 0.0, 0.01, Eigen::Matrix2d::Zero()));
        CHECK_THROWS_AS(predict(step.prior), std::logic_error);
    }
}

TEST_CASE("measurement update") {
    SUBCASE("hand-computed gain") {
        const auto step = predict(posterior(2.0, 0.1, 0.0, 0.01, Eigen::Matrix2d::Zero()));
        const auto post = filter(step.prior, std::exp(2.1));
        CHECK(post.x_hat == doctest::Approx(1.995 + 0.11 / 0.12 * 0.105));
        CHECK(post.x_hat == doctest::Approx(2.09125).epsilon(1e-5));
        CHECK(post.p_x == doctest::Approx(0.0091667).epsilon(1e-4));
    }

    SUBCASE("tiny observation noise trusts the observation") {
        const auto step = predict(posterior(2.0, 0.1, 0.0, 0.01, Eigen::Matrix2d::Zero(), 1e-14));
        CHECK(filter(step.prior, std::exp(2.3)).x_hat == doctest::Approx(2.3).epsilon(1e-10));
    }

    SUBCASE("zero prior variance ignores the observation") {
        auto step = predict(posterior(2.0, 0.0, 0.0, 0.0, Eigen::Matrix2d::Zero()));
        CHECK(filter(step.prior, std::exp(3.0)).x_hat == step.prior.x_hat);
    }

    SUBCASE("zero innovation leaves the state alone") {
        Eigen::Matrix2d q = Eigen::Matrix2d::Identity() * 1e-5;
        auto st = posterior(2.0, 0.1, 0.01, 0.02, q);
        st.theta.p_theta = q;
        const auto step = predict(st);
        const auto post = filter(step.prior, std::exp(step.prior.x_hat));
        CHECK(post.x_hat == doctest::Approx(step.prior.x_hat));
        CHECK(post.theta.theta_hat(0) == doctest::Approx(0.01));
        CHECK(post.theta.theta_hat(1) == doctest::Approx(0.02));
    }

    SUBCASE("rejects bad input") {
        const auto st = posterior(2.0, 0.1, 0.0, 0.01, Eigen::Matrix2d::Zero());
        CHECK_THROWS_AS(filter(st, 5.0), std::logic_error);
        CHECK_THROWS_AS(filter(predict(st).prior, 0.0), std::invalid_argument);
    }
}

TEST_CASE("recursion invariants over a simulated path") {
    synth::SimSpec spec;
    spec.n_steps = 2000;
    spec.sigma_profile = {0.06, 0.03, 300.0};
    spec.seed = 21;
    const auto sim = synth::simulate(spec);
    const RunConfig config;

    SUBCASE("covariances stay nonnegative, sigma^2 respects its floor") {
        const FilterHyperparameters hyper{1e-5, 1e-6, 1e-4};
        auto st = initialize(std::span(sim.frame.speed).first(100), config, hyper);
        for (std::size_t t = 100; t < sim.frame.size(); ++t) {
            st = filter(predict(st).prior, sim.frame.speed[t]);
            REQUIRE(st.p_x >= 0.0);
            REQUIRE(st.theta.p_theta(0, 0) >= 0.0);
            REQUIRE(st.theta.p_theta(1, 1) >= 0.0);
            REQUIRE(st.theta.theta_hat(1) >= config.sigma2_min);
        }
    }

    SUBCASE("frozen parameters without process noise") {
        const FilterHyperparameters hyper{0.0, 0.0, 1e-4};
        auto st = initialize(std::span(sim.frame.speed).first(100), config, hyper);
        const Eigen::Vector2d start = st.theta.theta_hat;
        for (std::size_t t = 100; t < sim.frame.size(); ++t)
            st = filter(predict(st).prior, sim.frame.speed[t]);
        CHECK(st.theta.theta_hat == start);
    }
}

TEST_CASE("speed prediction density") {
    auto st = posterior(2.0, 0.05, 0.01, 0.04, Eigen::Matrix2d::Zero());
    st.delta_t = 2.0;
    st.a_row << 2.0, -1.0;
    const auto pred = predict(st).prediction;
    CHECK(pred.x_prior == doctest::Approx(2.0 + (0.01 - 0.02) * 2.0));
    CHECK(pred.density.mu_prime == doctest::Approx(pred.x_prior));
    CHECK(pred.density.sigma_prime == doctest::Approx(std::sqrt(0.04 * 2.0)));
}

TEST_CASE("hyperparameter tuning") {
    synth::SimSpec spec;
    spec.n_steps = 300;
    spec.seed = 4;

    SUBCASE("singleton grid") {
        spec.obs_noise_var = 1e-3;
        const auto sim = synth::simulate(spec);
        RunConfig c;
        c.hyper_grid.q_mu = {3e-6};
        c.hyper_grid.q_sigma = {2e-8};
        c.hyper_grid.sigma_z2 = {5e-4};
        const auto best = tune_hyperparameters(sim.frame, c).best;
        CHECK(best.q_mu == 3e-6);
        CHECK(best.q_sigma == 2e-8);
        CHECK(best.sigma_z2 == 5e-4);
    }

    SUBCASE("exact ties prefer small sigma_z2, then small trace Q") {
        // A constant series is forecast perfectly by every grid point.
        SeriesFrame flat;
        flat.speed.assign(120, 6.0);
        flat.power.assign(120, 30.0);
        RunConfig c;
        c.hyper_grid.q_mu = {1e-5, 1e-7};
        c.hyper_grid.q_sigma = {1e-7, 1e-9};
        c.hyper_grid.sigma_z2 = {1e-2, 1e-4};
        QuietWarnings quiet;
        const auto best = tune_hyperparameters(flat, c).best;
        CHECK(best.sigma_z2 == 1e-4);
        CHECK(best.q_mu == 1e-7);
        CHECK(best.q_sigma == 1e-9);
    }

    SUBCASE("empty grid") {
        const auto sim = synth::simulate(spec);
        RunConfig c;
        c.hyper_grid.sigma_z2.clear();
        CHECK_THROWS(tune_hyperparameters(sim.frame, c));
    }
}

// Expected to pick the smallest sigma_z2 when speeds are measured exactly. The
// parameter gain is driven by sigma_z2 alone, so a tiny sigma_z2 also makes the
// drift/volatility estimates jump at every step and the minimum lands higher.
TEST_CASE("noise-free speeds select the smallest observation noise") {
    synth::SimSpec spec;
    spec.n_steps = 300;
    spec.seed = 4;
    spec.obs_noise_var = 0.0;
    const auto sim = synth::simulate(spec);
    RunConfig c;
    c.hyper_grid.sigma_z2 = {1e-2, 1e-3, 1e-6, 1e-4};
    CHECK(tune_hyperparameters(sim.frame, c).best.sigma_z2 == 1e-6);
}
