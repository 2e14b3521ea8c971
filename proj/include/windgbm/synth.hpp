#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "windgbm/series.hpp"

namespace windgbm::synth {

/// value(t) = base + amplitude * sin(2 pi t / period); amplitude 0 is constant.
struct Profile {
    double base = 0.0;
    double amplitude = 0.0;
    double period = 1.0;

    [[nodiscard]] double at(double t) const;
};

/// F(s) = L / (1 + exp(-k (s - m))).
struct LogisticCurve {
    double level = 90.0;
    double steepness = 0.6;
    double midpoint = 8.0;

    [[nodiscard]] double f(double s) const;
    [[nodiscard]] double f_s(double s) const;
    [[nodiscard]] double f_ss(double s) const;
};

struct SimSpec {
    std::size_t n_steps = 1000;
    double delta_t = 1.0;
    Profile mu_profile{0.0, 0.0, 1.0};
    Profile sigma_profile{0.05, 0.0, 1.0};
    double s0 = 8.0;
    LogisticCurve true_curve{};
    double sigma_f_true = 0.2;
    double obs_noise_var = 1e-4;
    std::uint64_t seed = 1;
    std::int64_t start_epoch = 1'600'000'000;
    std::int64_t spacing_seconds = 600;

    void validate() const;
};

/// Per-step ground truth.
struct TruthRow {
    double true_speed = 0.0;
    double mu_s = 0.0;
    double sigma_s = 0.0;
    double curve_f = 0.0;
    double curve_f_s = 0.0;
    double curve_f_ss = 0.0;
    double conversion_noise = 0.0;
    bool clamped = false;
};

struct Simulation {
    SeriesFrame frame;
    std::vector<TruthRow> truth;
    std::size_t clamp_events = 0;
};

/// Euler path of X = ln S, measured WS = exp(X + z), and P = F(S) + e with
/// e accumulated from increments N(0, sigma_f^2 F_S(S) dt), clamped to [0, 100].
Simulation simulate(const SimSpec& spec);

/// n_draws one-step transitions from (s, p): speed by one Euler step, power
/// by the true curve plus the carried and new conversion noise.
std::vector<double> one_step_transition_sample(double s, double p, double mu_s, double sigma_s,
                                               const LogisticCurve& curve, double sigma_f,
                                               std::size_t n_draws, double delta_t = 1.0,
                                               std::uint64_t seed = 1);

void write_truth_csv(const std::filesystem::path& path, const Simulation& sim);

}  // namespace windgbm::synth
