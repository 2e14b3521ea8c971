#include "windgbm/forecaster.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "windgbm/log.hpp"
#include "windgbm/normal.hpp"

namespace windgbm {

double quantile(const LogNormalDensity& density, double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw std::domain_error("quantile level must lie in (0,1)");
    return std::exp(density.mu_prime + density.sigma_prime * normal_quantile(beta));
}

std::pair<double, double> shortest_interval_offsets(double sigma_prime, double level) {
    if (!(level > 0.0 && level < 1.0)) throw std::domain_error("interval level must lie in (0,1)");
    if (!(sigma_prime >= 0.0)) throw std::domain_error("sigma' must be nonnegative");

    // g is strictly decreasing in A; g(-inf) = 1 - level > 0 and g(-sigma') = -level < 0.
    const auto g = [&](double a) {
        return normal_cdf(-2.0 * sigma_prime - a) - normal_cdf(a) - level;
    };
    double lo = -sigma_prime - 40.0;
    double hi = -sigma_prime;
    double a = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        a = 0.5 * (lo + hi);
        const double value = g(a);
        if (std::abs(value) <= 1e-12 || a == lo || a == hi) break;
        (value > 0.0 ? lo : hi) = a;
    }
    return {a, -2.0 * sigma_prime - a};
}

Interval prediction_interval(const LogNormalDensity& density, double level) {
    if (!(level > 0.0 && level < 1.0)) throw std::domain_error("interval level must lie in (0,1)");
    if (density.sigma_prime <= 0.0) {
        warn("degenerate predictive density; interval collapses to exp(mu')");
        const double m = std::exp(density.mu_prime);
        return {level, m, m};
    }
    const auto [a, b] = shortest_interval_offsets(density.sigma_prime, level);
    return {level, std::exp(density.mu_prime + density.sigma_prime * a),
            std::exp(density.mu_prime + density.sigma_prime * b)};
}

double optimal_point(const LogNormalDensity& density, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("alpha must lie strictly inside (0,1) for a bounded optimum");
    return quantile(density, alpha);
}

std::string ForecastFlags::to_string() const {
    std::string out;
    auto add = [&](const char* name) {
        if (!out.empty()) out += '|';
        out += name;
    };
    if (power_floored) add("floored");
    if (sigma_capped) add("capped");
    if (degenerate) add("degenerate");
    return out;
}

PipelineState fit_pipeline(const SeriesFrame& train, const RunConfig& config) {
    config.validate();
    PipelineState state;
    state.hyper = tune_hyperparameters(train, config).best;
    state.filter = initialize(train.speed, config, state.hyper);
    state.curve = fit_initial(train, config);
    state.last_power = train.power.back();
    state.last_speed = train.speed.back();
    return state;
}

ForecastRecord forecast_next(const PipelineState& state, const RunConfig& config, double alpha) {
    const SpeedPrediction pred = predict(state.filter).prediction;

    ForecastRecord rec;
    rec.step = state.steps_done;
    rec.speed_point = config.curve_at_mean
                          ? std::exp(pred.x_prior + 0.5 * pred.density.sigma_prime *
                                                        pred.density.sigma_prime)
                          : pred.s_point;
    CurveEvaluation ev = evaluate(state.curve, rec.speed_point);
    if (!config.time_derivative) ev.f_t = 0.0;

    double p_now = state.last_power;
    if (p_now < config.power_floor) {
        p_now = config.power_floor;
        rec.flags.power_floored = true;
    }
    const PowerDynamics dyn = power_dynamics(rec.speed_point, p_now, pred.mu_s, pred.sigma_s2, ev,
                                             state.curve.sigma_f, config.power_floor);
    rec.density = predictive_power_density(p_now, dyn, config.delta_t);
    if (!std::isfinite(rec.density.sigma_prime) || rec.density.sigma_prime > config.sigma_prime_max) {
        rec.density.sigma_prime = config.sigma_prime_max;
        rec.flags.sigma_capped = true;
    }
    if (!std::isfinite(rec.density.mu_prime))
        throw std::runtime_error("non-finite predictive location at step " +
                                 std::to_string(rec.step));
    rec.flags.degenerate = rec.density.sigma_prime <= 0.0;

    rec.point = optimal_point(rec.density, alpha);
    for (double beta : config.quantile_levels)
        rec.quantiles.emplace_back(beta, quantile(rec.density, beta));
    for (double level : config.interval_levels) {
        if (rec.flags.degenerate) {
            const double m = std::exp(rec.density.mu_prime);
            rec.intervals.push_back({level, m, m});
        } else {
            rec.intervals.push_back(prediction_interval(rec.density, level));
        }
    }
    return rec;
}

void observe(PipelineState& state, double speed, double power) {
    const PredictStep step = predict(state.filter);
    state.filter = filter(step.prior, speed);
    update_in_place(state.curve, speed, power);
    state.last_power = power;
    state.last_speed = speed;
    ++state.steps_done;
}

std::vector<ForecastRecord> continue_backtest(PipelineState& state, const SeriesFrame& test,
                                              const RunConfig& config, double alpha) {
    std::vector<ForecastRecord> records;
    records.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        ForecastRecord rec = forecast_next(state, config, alpha);
        rec.realized_power = test.power[i];
        rec.realized_speed = test.speed[i];
        records.push_back(std::move(rec));
        observe(state, test.speed[i], test.power[i]);
    }
    return records;
}

std::vector<ForecastRecord> run_backtest(const SeriesFrame& train, const SeriesFrame& test,
                                         const RunConfig& config) {
    PipelineState state = fit_pipeline(train, config);
    return continue_backtest(state, test, config, config.alpha_loss);
}

std::string level_label(double level) {
    const long pct = std::lround(level * 100.0);
    if (std::abs(level * 100.0 - static_cast<double>(pct)) < 1e-9) {
        std::ostringstream os;
        os << std::setw(2) << std::setfill('0') << pct;
        return os.str();
    }
    std::ostringstream os;
    os << level * 100.0;
    std::string s = os.str();
    for (char& c : s)
        if (c == '.') c = 'p';
    return s;
}

std::string records_to_csv(const std::vector<ForecastRecord>& records) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "step,point";
    if (!records.empty()) {
        for (const auto& [beta, q] : records.front().quantiles) out << ",q" << level_label(beta);
        for (const auto& iv : records.front().intervals)
            out << ",lo" << level_label(iv.level) << ",hi" << level_label(iv.level);
    }
    out << ",mu_prime,sigma_prime,realized_power,flags\n";
    for (const auto& r : records) {
        out << r.step << ',' << r.point;
        for (const auto& [beta, q] : r.quantiles) out << ',' << q;
        for (const auto& iv : r.intervals) out << ',' << iv.lo << ',' << iv.hi;
        out << ',' << r.density.mu_prime << ',' << r.density.sigma_prime << ','
            << r.realized_power << ',' << r.flags.to_string() << '\n';
    }
    return out.str();
}

void write_records_csv(const std::filesystem::path& path,
                       const std::vector<ForecastRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << records_to_csv(records);
}

void write_records_jsonl(const std::filesystem::path& path,
                         const std::vector<ForecastRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& r : records) {
        nlohmann::json j;
        j["step"] = r.step;
        j["point"] = r.point;
        for (const auto& [beta, q] : r.quantiles) j["q" + level_label(beta)] = q;
        for (const auto& iv : r.intervals) {
            j["lo" + level_label(iv.level)] = iv.lo;
            j["hi" + level_label(iv.level)] = iv.hi;
        }
        j["mu_prime"] = r.density.mu_prime;
        j["sigma_prime"] = r.density.sigma_prime;
        j["realized_power"] = r.realized_power;
        j["flags"] = r.flags.to_string();
        out << j.dump() << '\n';
    }
}

}  // namespace windgbm
