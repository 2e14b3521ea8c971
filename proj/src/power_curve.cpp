#include "windgbm/power_curve.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <vector>

#include "windgbm/log.hpp"

namespace windgbm {

double kernel(double s1, double s2, double delta) {
    const double d = s1 - s2;
    return std::exp(-d * d / (2.0 * delta));
}

double PowerCurveModel::value(double s) const {
    double f = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) f += lambdas[i] * kernel(s, centers[i], delta);
    return f;
}

CurveEvaluation evaluate(const PowerCurveModel& model, double s) {
    if (model.empty()) throw std::invalid_argument("cannot evaluate an empty power curve");
    const double delta = model.delta;
    CurveEvaluation out;
    for (std::size_t i = 0; i < model.size(); ++i) {
        const double d = s - model.centers[i];
        const double wk = model.lambdas[i] * kernel(s, model.centers[i], delta);
        out.f += wk;
        out.f_s += wk * (-d / delta);
        out.f_ss += wk * (d * d / (delta * delta) - 1.0 / delta);
    }
    out.f_t = model.lambda_last * kernel(s, model.centers.back(), delta) / model.delta_t;
    return out;
}

double update_multiplier(const PowerCurveModel& model, double s, double p) {
    const double residual = p - model.value(s);
    return residual / (kernel(s, s, model.delta) + 1.0 / model.gamma);
}

void update_in_place(PowerCurveModel& model, double s, double p) {
    const double lambda = update_multiplier(model, s, p);
    model.centers.push_back(s);
    model.lambdas.push_back(lambda);
    model.lambda_last = lambda;
    while (model.window != 0 && model.centers.size() > model.window) {
        model.centers.pop_front();
        model.lambdas.pop_front();
    }
}

PowerCurveModel update(PowerCurveModel model, double s, double p) {
    update_in_place(model, s, p);
    return model;
}

SigmaFEstimate sigma_f_from_increments(std::span<const double> d_power,
                                       std::span<const double> d_curve,
                                       std::span<const double> f_s, std::size_t n0,
                                       double delta_t, double f_s_floor) {
    if (d_power.size() != d_curve.size() || d_power.size() != f_s.size())
        throw std::invalid_argument("increment series differ in length");
    if (n0 < 3) throw std::invalid_argument("sigma_F estimation needs at least 3 rows");
    SigmaFEstimate est;
    double ss = 0.0;
    for (std::size_t i = 0; i < d_power.size(); ++i) {
        if (!(f_s[i] > f_s_floor)) {
            ++est.skipped;
            continue;
        }
        const double z = (d_power[i] - d_curve[i]) / std::sqrt(f_s[i] * delta_t);
        ss += z * z;
        ++est.used;
    }
    if (est.used < 2)
        throw std::runtime_error("fewer than 2 usable increments for sigma_F (" +
                                 std::to_string(est.skipped) + " skipped)");
    est.sigma_f = std::sqrt(ss / static_cast<double>(n0 - 2 - est.skipped));
    return est;
}

SigmaFEstimate estimate_sigma_f(const PowerCurveModel& prototype, const SeriesFrame& train,
                                double f_s_floor, std::size_t burn_in) {
    const std::size_t n0 = train.size();
    if (n0 < 3) throw std::invalid_argument("sigma_F estimation needs at least 3 rows");

    PowerCurveModel curve = prototype;
    curve.centers.clear();
    curve.lambdas.clear();
    curve.lambda_last = 0.0;

    // Replays the sequential fit; F(i, .) is the curve once sample i is in.
    std::vector<double> d_power, d_curve, f_s;
    double prev_level = 0.0;
    for (std::size_t i = 0; i < n0; ++i) {
        update_in_place(curve, train.speed[i], train.power[i]);
        const CurveEvaluation ev = evaluate(curve, train.speed[i]);
        if (i > burn_in && i >= 2) {
            d_power.push_back(train.power[i] - train.power[i - 1]);
            d_curve.push_back(ev.f - prev_level);
            f_s.push_back(ev.f_s);
        }
        prev_level = ev.f;
    }
    // Burn-in increments are left out entirely, so the row count shrinks with them.
    const std::size_t rows = std::max<std::size_t>(3, d_power.size() + 1);
    return sigma_f_from_increments(d_power, d_curve, f_s, rows, train.delta_t, f_s_floor);
}

PowerCurveModel fit_sequential(const SeriesFrame& train, double delta, double gamma,
                               std::size_t window) {
    if (!(delta > 0.0) || !(gamma > 0.0))
        throw std::invalid_argument("kernel bandwidth and regularizer must be positive");
    PowerCurveModel model;
    model.delta = delta;
    model.gamma = gamma;
    model.window = window;
    model.delta_t = train.delta_t;
    for (std::size_t i = 0; i < train.size(); ++i)
        update_in_place(model, train.speed[i], train.power[i]);
    return model;
}

double one_step_power_rmse(const SeriesFrame& train, double delta, double gamma,
                           std::size_t window, std::size_t burn_in) {
    PowerCurveModel model;
    model.delta = delta;
    model.gamma = gamma;
    model.window = window;
    model.delta_t = train.delta_t;
    double sse = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (i >= burn_in) {
            const double err = model.value(train.speed[i]) - train.power[i];
            sse += err * err;
            ++n;
        }
        update_in_place(model, train.speed[i], train.power[i]);
    }
    return n == 0 ? std::numeric_limits<double>::infinity() : std::sqrt(sse / n);
}

PowerCurveModel fit_initial(const SeriesFrame& train, const RunConfig& config) {
    const auto& g = config.hyper_grid;
    if (g.delta.empty() || g.gamma.empty())
        throw std::invalid_argument("power curve hyper grid is empty");
    if (train.size() < 10) throw std::invalid_argument("power curve needs at least 10 training rows");

    const std::size_t window = config.window;
    const std::size_t burn_in = std::max<std::size_t>(1, std::min<std::size_t>(train.size() / 10, 50));

    std::vector<std::pair<double, double>> grid;
    for (double d : g.delta)
        for (double gm : g.gamma) grid.emplace_back(d, gm);

    std::vector<std::future<double>> jobs;
    for (const auto& [d, gm] : grid)
        jobs.push_back(std::async(std::launch::async, [&, d, gm] {
            return one_step_power_rmse(train, d, gm, window, burn_in);
        }));

    std::size_t best = 0;
    double best_rmse = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double rmse = jobs[i].get();
        if (rmse < best_rmse) {
            best_rmse = rmse;
            best = i;
        }
    }

    PowerCurveModel model = fit_sequential(train, grid[best].first, grid[best].second, window);
    try {
        model.sigma_f = estimate_sigma_f(model, train, config.f_s_floor, burn_in).sigma_f;
    } catch (const std::runtime_error& e) {
        warn(std::string("sigma_F set to 0: ") + e.what());
        model.sigma_f = 0.0;
    }
    return model;
}

}  // namespace windgbm
