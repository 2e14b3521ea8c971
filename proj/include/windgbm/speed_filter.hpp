#pragma once

#include <span>
#include <string>

#include <Eigen/Dense>

#include "windgbm/density.hpp"
#include "windgbm/series.hpp"

namespace windgbm {

/// Parameter half of the dual filter: theta = (mu_S, sigma_S^2) per step,
/// modelled as a Gaussian random walk with covariance q.
struct ThetaState {
    Eigen::Vector2d theta_hat = Eigen::Vector2d::Zero();
    Eigen::Matrix2d p_theta = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d q = Eigen::Matrix2d::Zero();
};

/// Dual Kalman filter over X = ln S with Y = X + z, z ~ N(0, sigma_z2), and
/// X(t+dt) = X(t) + A theta + w, A = (dt, -dt/2).
struct SpeedFilterState {
    enum class Phase { posterior, prior };

    double x_hat = 0.0;
    double p_x = 0.0;
    double sigma_z2 = 1e-3;
    ThetaState theta{};
    Eigen::RowVector2d a_row{1.0, -0.5};
    double delta_t = 1.0;
    double sigma2_min = 1e-8;
    Phase phase = Phase::posterior;

    /// Throws std::invalid_argument if an invariant is violated.
    void check() const;
};

struct SpeedPrediction {
    double x_prior = 0.0;
    double mu_s = 0.0;
    double sigma_s2 = 0.0;
    double s_point = 0.0;
    LogNormalDensity density{};
};

struct PredictStep {
    SpeedFilterState prior;
    SpeedPrediction prediction;
};

struct FilterHyperparameters {
    double q_mu = 0.0;
    double q_sigma = 0.0;
    double sigma_z2 = 1e-3;

    [[nodiscard]] Eigen::Matrix2d q() const {
        Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
        m(0, 0) = q_mu;
        m(1, 1) = q_sigma;
        return m;
    }
};

/// Log returns r(k) = ln WS(k) - ln WS(k-1), or the ratio ln WS(k) / ln WS(k-1)
/// when `literal_ratio` is set.
std::vector<double> log_returns(std::span<const double> speeds, bool literal_ratio = false);

/// Seeds the filter from a training window: sigma_S = std(r),
/// mu_S = mean(r) + sigma_S^2 / 2, x_hat = ln WS(N0), p_x = sigma_z2,
/// P_theta = 10 Q. A constant-return window falls back to config.sigma_floor
/// with a warning.
SpeedFilterState initialize(std::span<const double> train_speeds, const RunConfig& config,
                            const FilterHyperparameters& hyper);

/// Parameter and state time update. Requires a posterior state.
PredictStep predict(const SpeedFilterState& state);

/// Measurement update of both filters from an observed speed (m/s, > 0).
/// Requires a prior state produced by predict().
SpeedFilterState filter(const SpeedFilterState& prior, double observed_speed);

struct TuningResult {
    FilterHyperparameters best;
    double rmse = 0.0;
};

/// Rolling-origin one-step evaluation of every (Q, sigma_z2) in the grid:
/// the first third of the training window seeds the filter, the rest is
/// scored by RMSE of exp(x_prior) against the observed speed. Ties go to the
/// smallest sigma_z2, then the smallest trace(Q).
TuningResult tune_hyperparameters(const SeriesFrame& train, const RunConfig& config);

/// One-step RMSE of exp(x_prior) over speeds[seed_len..] after seeding on
/// the first seed_len speeds.
double one_step_speed_rmse(std::span<const double> speeds, std::size_t seed_len,
                           const RunConfig& config, const FilterHyperparameters& hyper);

}  // namespace windgbm
