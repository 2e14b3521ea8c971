#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "windgbm/power_curve.hpp"
#include "windgbm/series.hpp"

namespace windgbm {

/// y_t = c + sum ar_j y_{t-j} + e_t + sum ma_j e_{t-j}, e ~ N(0, noise_var).
struct ArmaModel {
    int p = 0;
    int q = 0;
    std::vector<double> ar;
    std::vector<double> ma;
    double intercept = 0.0;
    double noise_var = 1.0;
    double bic = 0.0;
};

/// AR mean equation with GARCH(1,1) conditional variance.
struct ArGarchModel {
    std::vector<double> ar;
    double intercept = 0.0;
    double omega = 1.0;
    double a1 = 0.0;
    double b1 = 0.0;
    double last_resid = 0.0;
    double last_condvar = 1.0;
    std::size_t n_seen = 0;
};

struct GaussianForecast {
    double mean = 0.0;
    double sd = 0.0;
};

inline double persistent_forecast(double s_now) { return s_now; }

/// Conditional least squares fit of one ARMA(p, q) on the sample t >= t0.
/// The AR part is a single regression; MA terms are estimated by iterating the
/// regression on recomputed residuals (at most 50 rounds). Returns false when
/// the MA iteration fails to converge.
bool fit_arma_order(std::span<const double> y, int p, int q, std::size_t t0, ArmaModel& out);

/// BIC order selection over (p, q) in {0..max_order}^2 without (0, 0).
ArmaModel fit_arma(std::span<const double> history, int max_order = 3);

/// One-step Gaussian predictive for y_{n} given history y_0..y_{n-1}.
GaussianForecast arma_predictive(const ArmaModel& model, std::span<const double> history);

/// max(m + s Phi^{-1}(alpha), speed_floor).
double arma_quantile_forecast(const ArmaModel& model, std::span<const double> history,
                              double alpha, double speed_floor = 0.1);

/// Gaussian negative log-likelihood (constants dropped) of GARCH(1,1) over
/// residuals, with h_0 set to the residual sample variance.
double garch_nll(std::span<const double> resid, double omega, double a1, double b1);

/// AR order by BIC, then GARCH(1,1) by simplex MLE under a logistic
/// reparameterization that keeps omega > 0, a1, b1 >= 0 and a1 + b1 < 1.
ArGarchModel fit_ar_garch(std::span<const double> history, int max_ar = 3);

/// One-step predictive given the history the model was fit on plus any
/// observations appended since.
GaussianForecast ar_garch_predictive(const ArGarchModel& model, std::span<const double> history);

/// Curve value at the forecast speed, clamped to [0, 100].
double baseline_power_forecast(double speed_forecast, const PowerCurveModel& curve);

enum class BaselineMethod { persistent, arma, ar_garch };

std::string_view method_name(BaselineMethod method);

struct BaselineRecord {
    std::size_t step = 0;
    GaussianForecast speed{};
    /// (alpha, power forecast) for every requested alpha.
    std::vector<std::pair<double, double>> forecasts;
    double realized_power = 0.0;
    double realized_speed = 0.0;

    [[nodiscard]] double at(double alpha) const;
};

/// One-step baseline loop. The speed model is refit every config.refit_every
/// steps on all observations so far; the power curve starts from
/// `initial_curve` and is updated with each measured (WS, P) pair.
std::vector<BaselineRecord> run_baseline_backtest(const SeriesFrame& train,
                                                  const SeriesFrame& test,
                                                  const RunConfig& config, BaselineMethod method,
                                                  const PowerCurveModel& initial_curve,
                                                  std::span<const double> alphas);

}  // namespace windgbm
