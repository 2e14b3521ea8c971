#include "windgbm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace windgbm {

double pce(double realized, double forecast, double alpha) {
    if (forecast < realized) return alpha * (realized - forecast);
    return (1.0 - alpha) * (forecast - realized);
}

namespace {

struct ErrorAccumulator {
    double pce_sum = 0.0;
    double se_sum = 0.0;
    double ae_sum = 0.0;
    std::size_t n = 0;

    void add(double realized, double forecast, double alpha) {
        const double e = forecast - realized;
        pce_sum += pce(realized, forecast, alpha);
        se_sum += e * e;
        ae_sum += std::abs(e);
        ++n;
    }

    void fill(MetricReport& r) const {
        const double nn = static_cast<double>(n);
        r.pce_avg = pce_sum / nn;
        r.rmse = std::sqrt(se_sum / nn);
        r.mae = ae_sum / nn;
        r.n_test = n;
    }
};

}  // namespace

MetricReport summarize_proposed(std::span<const ForecastRecord> records, double alpha) {
    if (records.empty()) throw std::invalid_argument("cannot summarize an empty record set");
    MetricReport report;
    report.method = "proposed";
    report.alpha = alpha;
    ErrorAccumulator acc;
    std::map<double, std::size_t> inside;
    for (const auto& r : records) {
        acc.add(r.realized_power, optimal_point(r.density, alpha), alpha);
        for (const auto& iv : r.intervals) {
            auto& count = inside[iv.level];
            if (iv.lo <= r.realized_power && r.realized_power <= iv.hi) ++count;
        }
    }
    acc.fill(report);
    for (const auto& [level, count] : inside)
        report.coverage[level] = static_cast<double>(count) / static_cast<double>(records.size());
    return report;
}

MetricReport summarize_baseline(std::span<const BaselineRecord> records, std::string method,
                                double alpha) {
    if (records.empty()) throw std::invalid_argument("cannot summarize an empty record set");
    MetricReport report;
    report.method = std::move(method);
    report.alpha = alpha;
    ErrorAccumulator acc;
    for (const auto& r : records) acc.add(r.realized_power, r.at(alpha), alpha);
    acc.fill(report);
    return report;
}

ComparisonRun run_comparison(const SeriesFrame& train, const SeriesFrame& test,
                             const RunConfig& config, std::span<const double> alphas,
                             std::span<const BaselineMethod> methods) {
    ComparisonRun run;
    PipelineState state = fit_pipeline(train, config);
    const PowerCurveModel initial_curve = state.curve;

    // Baselines share nothing mutable with the proposed loop.
    std::vector<std::future<std::vector<BaselineRecord>>> jobs;
    for (BaselineMethod m : methods)
        jobs.push_back(std::async(std::launch::async, [&, m] {
            return run_baseline_backtest(train, test, config, m, initial_curve, alphas);
        }));
    run.proposed = continue_backtest(state, test, config, config.alpha_loss);
    for (std::size_t i = 0; i < methods.size(); ++i) run.baselines[methods[i]] = jobs[i].get();
    return run;
}

std::vector<MetricReport> summarize(const ComparisonRun& run, double alpha) {
    std::vector<MetricReport> out;
    out.push_back(summarize_proposed(run.proposed, alpha));
    for (const auto& [method, records] : run.baselines)
        out.push_back(summarize_baseline(records, std::string(method_name(method)), alpha));
    return out;
}

std::vector<SweepRow> pce_alpha_sweep(const ComparisonRun& run, std::span<const double> alphas) {
    if (alphas.empty()) throw std::invalid_argument("alpha grid is empty");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw std::domain_error("alpha grid must lie strictly inside (0,1)");
    std::vector<SweepRow> rows;
    for (double a : alphas) {
        for (const auto& report : summarize(run, a)) rows.push_back({a, report.method, report.pce_avg});
    }
    return rows;
}

std::string reports_to_csv(const std::vector<MetricReport>& reports) {
    std::ostringstream out;
    out << std::setprecision(10);
    std::vector<double> levels;
    for (const auto& r : reports)
        for (const auto& [level, frac] : r.coverage)
            if (std::find(levels.begin(), levels.end(), level) == levels.end()) levels.push_back(level);
    out << "method,alpha,pce_avg,rmse,mae,n_test";
    for (double level : levels) out << ",coverage" << level_label(level);
    out << '\n';
    for (const auto& r : reports) {
        out << r.method << ',' << r.alpha << ',' << r.pce_avg << ',' << r.rmse << ',' << r.mae << ','
            << r.n_test;
        for (double level : levels) {
            out << ',';
            if (auto it = r.coverage.find(level); it != r.coverage.end()) out << it->second;
        }
        out << '\n';
    }
    return out.str();
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << std::setprecision(10) << "alpha,method,avg_pce\n";
    for (const auto& r : rows) out << r.alpha << ',' << r.method << ',' << r.avg_pce << '\n';
    return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

}  // namespace windgbm
