#include "windgbm/speed_filter.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

#include "windgbm/log.hpp"
#include "windgbm/normal.hpp"

namespace windgbm {

void SpeedFilterState::check() const {
    if (!(p_x >= 0.0)) throw std::invalid_argument("p_x must be nonnegative");
    if (!(sigma_z2 > 0.0)) throw std::invalid_argument("sigma_z2 must be positive");
    if (!(delta_t > 0.0)) throw std::invalid_argument("delta_t must be positive");
    if (!std::isfinite(x_hat)) throw std::invalid_argument("x_hat must be finite");
    for (const Eigen::Matrix2d* m : {&theta.p_theta, &theta.q}) {
        if (std::abs((*m)(0, 1) - (*m)(1, 0)) > 1e-12 * (1.0 + m->cwiseAbs().maxCoeff()))
            throw std::invalid_argument("covariance must be symmetric");
        if ((*m)(0, 0) < 0.0 || (*m)(1, 1) < 0.0)
            throw std::invalid_argument("covariance diagonal must be nonnegative");
    }
}

std::vector<double> log_returns(std::span<const double> speeds, bool literal_ratio) {
    std::vector<double> r;
    if (speeds.size() < 2) return r;
    r.reserve(speeds.size() - 1);
    for (std::size_t k = 1; k < speeds.size(); ++k) {
        const double now = std::log(speeds[k]);
        const double before = std::log(speeds[k - 1]);
        r.push_back(literal_ratio ? now / before : now - before);
    }
    return r;
}

SpeedFilterState initialize(std::span<const double> train_speeds, const RunConfig& config,
                            const FilterHyperparameters& hyper) {
    if (train_speeds.size() < 3)
        throw std::invalid_argument("speed filter needs at least 3 training speeds");
    for (double s : train_speeds)
        if (!(s > 0.0)) throw std::invalid_argument("training speeds must be strictly positive");
    if (!(hyper.sigma_z2 > 0.0)) throw std::invalid_argument("sigma_z2 must be positive");

    const auto r = log_returns(train_speeds, config.literal_ratio_returns);
    double sigma = sample_std(r);
    if (!(sigma >= config.sigma_floor)) {
        warn("log-return standard deviation " + std::to_string(sigma) +
             " below floor; using sigma_floor " + std::to_string(config.sigma_floor));
        sigma = config.sigma_floor;
    }
    const double sigma2 = sigma * sigma;

    SpeedFilterState state;
    state.delta_t = config.delta_t;
    state.a_row << config.delta_t, -0.5 * config.delta_t;
    state.sigma2_min = config.sigma2_min;
    state.theta.theta_hat << mean(r) + sigma2 / 2.0, sigma2;
    state.theta.q = hyper.q();
    state.theta.p_theta = 10.0 * state.theta.q;
    state.x_hat = std::log(train_speeds.back());
    state.sigma_z2 = hyper.sigma_z2;
    state.p_x = hyper.sigma_z2;
    state.phase = SpeedFilterState::Phase::posterior;
    return state;
}

PredictStep predict(const SpeedFilterState& state) {
    if (state.phase != SpeedFilterState::Phase::posterior)
        throw std::logic_error("predict() needs a posterior state");

    PredictStep out{state, {}};
    SpeedFilterState& prior = out.prior;
    prior.theta.p_theta = state.theta.p_theta + state.theta.q;
    const Eigen::Vector2d& theta = prior.theta.theta_hat;
    prior.x_hat = state.x_hat + state.a_row.dot(theta);
    prior.p_x = state.p_x + state.delta_t * theta(1);
    prior.phase = SpeedFilterState::Phase::prior;

    SpeedPrediction& pred = out.prediction;
    pred.x_prior = prior.x_hat;
    pred.mu_s = theta(0);
    pred.sigma_s2 = theta(1);
    pred.s_point = std::exp(prior.x_hat);
    pred.density = {prior.x_hat, std::sqrt(std::max(theta(1), 0.0) * state.delta_t)};
    return out;
}

SpeedFilterState filter(const SpeedFilterState& prior, double observed_speed) {
    if (prior.phase != SpeedFilterState::Phase::prior)
        throw std::logic_error("filter() needs the prior state returned by predict()");
    if (!(observed_speed > 0.0)) throw std::invalid_argument("observed speed must be positive");

    SpeedFilterState post = prior;
    const double innovation = std::log(observed_speed) - prior.x_hat;

    const double k_x = prior.p_x / (prior.p_x + prior.sigma_z2);
    post.x_hat = prior.x_hat + k_x * innovation;
    post.p_x = (1.0 - k_x) * prior.p_x;

    const Eigen::Matrix2d& p = prior.theta.p_theta;
    const Eigen::RowVector2d& a = prior.a_row;
    const double s = a * p * a.transpose() + prior.sigma_z2;
    const Eigen::Vector2d k_theta = p * a.transpose() / s;
    post.theta.theta_hat = prior.theta.theta_hat + k_theta * innovation;
    // Joseph form of (I - K A) P; identical for the optimal gain, keeps P symmetric PSD.
    const Eigen::Matrix2d i_ka = Eigen::Matrix2d::Identity() - k_theta * a;
    Eigen::Matrix2d p_post =
        i_ka * p * i_ka.transpose() + prior.sigma_z2 * k_theta * k_theta.transpose();
    post.theta.p_theta = 0.5 * (p_post + p_post.transpose());

    post.theta.theta_hat(1) = std::max(post.theta.theta_hat(1), prior.sigma2_min);
    post.phase = SpeedFilterState::Phase::posterior;
    return post;
}

double one_step_speed_rmse(std::span<const double> speeds, std::size_t seed_len,
                           const RunConfig& config, const FilterHyperparameters& hyper) {
    if (seed_len < 3 || seed_len >= speeds.size())
        throw std::invalid_argument("seed window must leave at least one scored step");
    SpeedFilterState state = initialize(speeds.first(seed_len), config, hyper);
    double sse = 0.0;
    for (std::size_t t = seed_len; t < speeds.size(); ++t) {
        const PredictStep step = predict(state);
        const double err = step.prediction.s_point - speeds[t];
        sse += err * err;
        state = filter(step.prior, speeds[t]);
    }
    return std::sqrt(sse / static_cast<double>(speeds.size() - seed_len));
}

TuningResult tune_hyperparameters(const SeriesFrame& train, const RunConfig& config) {
    const auto& g = config.hyper_grid;
    if (g.q_mu.empty() || g.q_sigma.empty() || g.sigma_z2.empty())
        throw std::invalid_argument("speed filter hyper grid is empty");
    if (train.size() < 50)
        throw std::invalid_argument("hyperparameter tuning needs at least 50 training rows");

    std::vector<FilterHyperparameters> candidates;
    for (double sz : g.sigma_z2)
        for (double qm : g.q_mu)
            for (double qs : g.q_sigma) candidates.push_back({qm, qs, sz});

    const std::size_t seed_len = std::max<std::size_t>(3, train.size() / 3);
    const std::span<const double> speeds(train.speed);

    // Grid points are independent; each future owns its filter instance.
    std::vector<std::future<double>> jobs;
    jobs.reserve(candidates.size());
    for (const auto& c : candidates)
        jobs.push_back(std::async(std::launch::async, [&, c] {
            const double rmse = one_step_speed_rmse(speeds, seed_len, config, c);
            return std::isfinite(rmse) ? rmse : std::numeric_limits<double>::infinity();
        }));

    TuningResult best{candidates.front(), std::numeric_limits<double>::infinity()};
    bool have = false;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double rmse = jobs[i].get();
        const auto& c = candidates[i];
        const auto key = [](const FilterHyperparameters& h) {
            return std::pair{h.sigma_z2, h.q_mu + h.q_sigma};
        };
        if (!have || rmse < best.rmse || (rmse == best.rmse && key(c) < key(best.best))) {
            best = {c, rmse};
            have = true;
        }
    }
    return best;
}

}  // namespace windgbm
