#pragma once

#include "windgbm/power_curve.hpp"

namespace windgbm {

/// ln X ~ N(mu_prime, sigma_prime^2).
struct LogNormalDensity {
    double mu_prime = 0.0;
    double sigma_prime = 0.0;

    [[nodiscard]] double pdf(double x) const;
    [[nodiscard]] double cdf(double x) const;
};

/// Drift and volatility of the power process implied by the speed dynamics
/// and the power curve.
struct PowerDynamics {
    double mu_p = 0.0;
    double sigma_p = 0.0;
};

class PowerFloorError : public std::domain_error {
    using std::domain_error::domain_error;
};

/// mu_P = (F_t + mu_S s F_S + sigma_S^2 s^2 F_SS / 2) / P
/// sigma_P = sqrt(sigma_S^2 s^2 F_S^2 + sigma_F^2 max(F_S, 0)) / P
///
/// Throws PowerFloorError when p_now is below power_floor; callers are
/// expected to floor the last observation first.
PowerDynamics power_dynamics(double s, double p_now, double mu_s, double sigma_s2,
                             const CurveEvaluation& curve, double sigma_f,
                             double power_floor = 0.1);

/// ln P(t+dt) ~ N(ln P + (mu_P - sigma_P^2/2) dt, sigma_P^2 dt).
LogNormalDensity predictive_power_density(double p_now, const PowerDynamics& dyn,
                                          double delta_t);

}  // namespace windgbm
