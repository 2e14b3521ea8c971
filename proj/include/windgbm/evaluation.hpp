#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "windgbm/baselines.hpp"
#include "windgbm/forecaster.hpp"

namespace windgbm {

/// Power curve error: alpha (P - P_hat) when under-forecasting, else
/// (1 - alpha) (P_hat - P).
double pce(double realized, double forecast, double alpha);

struct MetricReport {
    std::string method;
    double alpha = 0.5;
    double pce_avg = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    std::map<double, double> coverage;  // level -> empirical fraction (proposed only)
    std::size_t n_test = 0;
};

/// Metrics of the proposed method with the point forecast re-derived as Q_alpha
/// from each stored density. Coverage uses closed intervals.
MetricReport summarize_proposed(std::span<const ForecastRecord> records, double alpha);

MetricReport summarize_baseline(std::span<const BaselineRecord> records, std::string method,
                                double alpha);

struct ComparisonRun {
    std::vector<ForecastRecord> proposed;
    std::map<BaselineMethod, std::vector<BaselineRecord>> baselines;
};

/// Fits the proposed pipeline and each baseline on `train` and runs all of
/// them over `test`. Baseline power forecasts are stored for every alpha.
ComparisonRun run_comparison(const SeriesFrame& train, const SeriesFrame& test,
                             const RunConfig& config, std::span<const double> alphas,
                             std::span<const BaselineMethod> methods);

/// One report per method (proposed first) at the given alpha.
std::vector<MetricReport> summarize(const ComparisonRun& run, double alpha);

struct SweepRow {
    double alpha = 0.0;
    std::string method;
    double avg_pce = 0.0;
};

/// Average PCE per (alpha, method), re-deriving alpha-quantiles from stored
/// densities and stored baseline forecasts without refitting anything.
std::vector<SweepRow> pce_alpha_sweep(const ComparisonRun& run, std::span<const double> alphas);

std::string reports_to_csv(const std::vector<MetricReport>& reports);
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace windgbm
