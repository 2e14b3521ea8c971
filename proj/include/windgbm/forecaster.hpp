#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "windgbm/density.hpp"
#include "windgbm/power_curve.hpp"
#include "windgbm/series.hpp"
#include "windgbm/speed_filter.hpp"

namespace windgbm {

/// exp(mu' + sigma' Phi^{-1}(beta)); beta must lie in (0,1).
double quantile(const LogNormalDensity& density, double beta);

struct Interval {
    double level = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Standard-normal offsets (A, B) of the shortest log-normal interval:
/// Phi(B) - Phi(A) = level and A + B = -2 sigma'. Bisection on A to |g| <= 1e-10.
std::pair<double, double> shortest_interval_offsets(double sigma_prime, double level);

/// Shortest interval (exp(mu' + sigma' A), exp(mu' + sigma' B)) covering `level`.
/// A degenerate density (sigma' = 0) yields (exp mu', exp mu') with a warning.
Interval prediction_interval(const LogNormalDensity& density, double level);

/// Minimizer of alpha E[max(0, X - p)] + (1 - alpha) E[max(0, p - X)], which
/// is the alpha-quantile. alpha must lie strictly inside (0,1).
double optimal_point(const LogNormalDensity& density, double alpha);

struct ForecastFlags {
    bool power_floored = false;
    bool sigma_capped = false;
    bool degenerate = false;

    [[nodiscard]] std::string to_string() const;
};

struct ForecastRecord {
    std::size_t step = 0;
    double point = 0.0;
    std::vector<std::pair<double, double>> quantiles;  // (beta, Q_beta), ascending beta
    std::vector<Interval> intervals;
    LogNormalDensity density{};
    double speed_point = 0.0;
    double realized_power = 0.0;
    double realized_speed = 0.0;
    ForecastFlags flags{};
};

/// Everything the one-step loop carries between observations.
struct PipelineState {
    SpeedFilterState filter;
    PowerCurveModel curve;
    FilterHyperparameters hyper;
    double last_power = 0.0;
    double last_speed = 0.0;
    std::size_t steps_done = 0;
};

/// Tunes (Q, sigma_z2), seeds the dual filter, and fits the initial curve
/// on the training window.
PipelineState fit_pipeline(const SeriesFrame& train, const RunConfig& config);

/// Forecast for the next step from data through the current step.
ForecastRecord forecast_next(const PipelineState& state, const RunConfig& config, double alpha);

/// Filters the speed state with WS(t+1) and updates the curve with the
/// measured pair (WS(t+1), P(t+1)).
void observe(PipelineState& state, double speed, double power);

/// Forecast/observe loop over `test`, continuing from `state`.
std::vector<ForecastRecord> continue_backtest(PipelineState& state, const SeriesFrame& test,
                                              const RunConfig& config, double alpha);

/// fit_pipeline on `train` followed by continue_backtest on `test` at config.alpha_loss.
std::vector<ForecastRecord> run_backtest(const SeriesFrame& train, const SeriesFrame& test,
                                         const RunConfig& config);

/// Column label for a quantile or interval level, e.g. 0.05 -> "05".
std::string level_label(double level);

void write_records_csv(const std::filesystem::path& path,
                       const std::vector<ForecastRecord>& records);
void write_records_jsonl(const std::filesystem::path& path,
                         const std::vector<ForecastRecord>& records);
std::string records_to_csv(const std::vector<ForecastRecord>& records);

}  // namespace windgbm
