#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <stdexcept>

#include "windgbm/series.hpp"

namespace windgbm {

/// Gaussian kernel exp(-(s1 - s2)^2 / (2 delta)).
double kernel(double s1, double s2, double delta);

struct CurveEvaluation {
    double f = 0.0;
    double f_t = 0.0;
    double f_s = 0.0;
    double f_ss = 0.0;
};

/// Online kernel power curve F(t, s) = sum_i lambda_i k(s, c_i). Each
/// observation adds one center; the oldest center is evicted once the
/// dictionary holds more than `window` entries (0 disables eviction).
struct PowerCurveModel {
    std::deque<double> centers;
    std::deque<double> lambdas;
    double delta = 1.0;
    double gamma = 1.0;
    std::size_t window = 0;
    double sigma_f = 0.0;
    double lambda_last = 0.0;
    double delta_t = 1.0;

    [[nodiscard]] std::size_t size() const noexcept { return centers.size(); }
    [[nodiscard]] bool empty() const noexcept { return centers.empty(); }

    /// Curve value only; zero for the empty model.
    [[nodiscard]] double value(double s) const;
};

/// Value and analytic derivatives at speed s. F_t is lambda_last k(s, c_last) / dt.
CurveEvaluation evaluate(const PowerCurveModel& model, double s);

/// Multiplier solving min 1/2 |w - w_prev|^2 + gamma/2 e^2 s.t. p = w.phi(s) + e:
/// lambda = (p - F_prev(s)) / (k(s, s) + 1/gamma).
double update_multiplier(const PowerCurveModel& model, double s, double p);

/// Appends (s, lambda_new) in place, evicting the oldest center past the window.
void update_in_place(PowerCurveModel& model, double s, double p);
PowerCurveModel update(PowerCurveModel model, double s, double p);

struct SigmaFEstimate {
    double sigma_f = 0.0;
    std::size_t used = 0;
    std::size_t skipped = 0;
};

/// Sample standard deviation of (dP - dF) / sqrt(F_S dt) over increments with
/// F_S above the floor. The divisor is (n0 - 2) less every increment skipped
/// for a flat curve; n0 is the row count the increments were taken from.
/// Throws when fewer than two increments are usable.
SigmaFEstimate sigma_f_from_increments(std::span<const double> d_power,
                                       std::span<const double> d_curve,
                                       std::span<const double> f_s, std::size_t n0,
                                       double delta_t = 1.0, double f_s_floor = 1e-3);

/// Conversion-noise scale from the sequential fit of `prototype`'s (delta,
/// gamma, window) over `train`. Each increment compares the power change with
/// the change of the curve as it stood when that step would have been
/// forecast, i.e. the difference of consecutive one-step curve residuals.
/// Increments up to `burn_in` are excluded while the curve is still forming.
SigmaFEstimate estimate_sigma_f(const PowerCurveModel& prototype, const SeriesFrame& train,
                                double f_s_floor = 1e-3, std::size_t burn_in = 0);

/// Sequential fit from the empty curve with fixed (delta, gamma).
PowerCurveModel fit_sequential(const SeriesFrame& train, double delta, double gamma,
                               std::size_t window);

/// RMSE of F_prev(s_i) against p_i over the sequential fit, skipping the
/// first `burn_in` samples.
double one_step_power_rmse(const SeriesFrame& train, double delta, double gamma,
                           std::size_t window, std::size_t burn_in);

/// Grid-searches (delta, gamma) by one-step power RMSE, then refits on the
/// whole window and estimates sigma_F.
PowerCurveModel fit_initial(const SeriesFrame& train, const RunConfig& config);

}  // namespace windgbm
