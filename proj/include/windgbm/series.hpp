#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace windgbm {

/// Hyperparameter search grids. Q is restricted to diag(q_mu, q_sigma).
struct HyperGrid {
    std::vector<double> q_mu{1e-7, 1e-6, 1e-5};
    std::vector<double> q_sigma{1e-9, 1e-8, 1e-7};
    std::vector<double> sigma_z2{1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
    std::vector<double> delta{0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
    std::vector<double> gamma{0.5, 1.0, 2.0, 5.0};
};

struct RunConfig {
    double n0_fraction = 0.70;
    double alpha_loss = 0.5;
    std::vector<double> interval_levels{0.50, 0.90};
    std::vector<double> quantile_levels{0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35,
                                        0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70,
                                        0.75, 0.80, 0.85, 0.90, 0.95};
    HyperGrid hyper_grid{};
    double rated_capacity = 100.0;
    double speed_floor = 0.1;
    double power_floor = 0.1;

    // speed filter
    double sigma_floor = 1e-4;
    double sigma2_min = 1e-8;
    bool literal_ratio_returns = false;

    // power curve; window 0 keeps every center
    std::size_t window = 0;
    double f_s_floor = 1e-3;

    // density / forecaster
    double sigma_prime_max = 5.0;
    bool curve_at_mean = false;
    bool time_derivative = true;  // false drops F_t from the power drift

    // baselines
    int max_order = 3;
    int refit_every = 1;

    double delta_t = 1.0;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

/// Uniformly spaced (wind speed, power) observations. Power is in percent of
/// rated capacity.
struct SeriesFrame {
    std::vector<std::int64_t> timestamps;  // epoch seconds
    std::vector<double> speed;
    std::vector<double> power;
    double delta_t = 1.0;
    double rated_capacity = 100.0;

    [[nodiscard]] std::size_t size() const noexcept { return speed.size(); }
    [[nodiscard]] bool empty() const noexcept { return speed.empty(); }

    /// Rows [first, last).
    [[nodiscard]] SeriesFrame slice(std::size_t first, std::size_t last) const;
    void append(const SeriesFrame& other);

    [[nodiscard]] double unscale_power(double scaled) const noexcept {
        return scaled * rated_capacity / 100.0;
    }
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SpacingError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class EmptyInputError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parses an ISO-8601 date-time (YYYY-MM-DD[T ]HH:MM[:SS][Z]) or an integer
/// epoch into epoch seconds.
std::int64_t parse_timestamp(const std::string& text);

/// Reads `timestamp,wind_speed,power`. Power is divided by rated_capacity and
/// multiplied by 100; speeds at or below speed_floor are clamped to it.
SeriesFrame load_csv(const std::filesystem::path& path, const RunConfig& config);
SeriesFrame parse_csv(const std::string& text, const RunConfig& config);

/// Writes the frame back in the ingestion schema (power in percent).
void write_csv(const std::filesystem::path& path, const SeriesFrame& frame);

/// First floor(n0_fraction * N) rows train, the remainder test.
std::pair<SeriesFrame, SeriesFrame> split_train_test(const SeriesFrame& frame,
                                                     const RunConfig& config);

RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const RunConfig& config);

}  // namespace windgbm
