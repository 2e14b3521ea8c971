#include "windgbm/density.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "windgbm/normal.hpp"

namespace windgbm {

double LogNormalDensity::pdf(double x) const {
    if (!(x > 0.0) || sigma_prime <= 0.0) return 0.0;
    const double z = (std::log(x) - mu_prime) / sigma_prime;
    return std::exp(-0.5 * z * z) / (x * sigma_prime * std::sqrt(2.0 * std::numbers::pi));
}

double LogNormalDensity::cdf(double x) const {
    if (!(x > 0.0)) return 0.0;
    const double lx = std::log(x);
    if (sigma_prime <= 0.0) return lx >= mu_prime ? 1.0 : 0.0;
    return normal_cdf((lx - mu_prime) / sigma_prime);
}

PowerDynamics power_dynamics(double s, double p_now, double mu_s, double sigma_s2,
                             const CurveEvaluation& curve, double sigma_f, double power_floor) {
    if (!(p_now >= power_floor))
        throw PowerFloorError("current power " + std::to_string(p_now) +
                              " is below the power floor; floor it before computing dynamics");
    const double drift = curve.f_t + mu_s * s * curve.f_s + 0.5 * sigma_s2 * s * s * curve.f_ss;
    // F_S only enters the conversion-noise term clamped at zero; it is a variance.
    const double variance =
        sigma_s2 * s * s * curve.f_s * curve.f_s + sigma_f * sigma_f * std::max(curve.f_s, 0.0);
    return {drift / p_now, std::sqrt(std::max(variance, 0.0)) / p_now};
}

LogNormalDensity predictive_power_density(double p_now, const PowerDynamics& dyn, double delta_t) {
    if (!(p_now > 0.0)) throw PowerFloorError("current power must be positive");
    return {std::log(p_now) + (dyn.mu_p - 0.5 * dyn.sigma_p * dyn.sigma_p) * delta_t,
            dyn.sigma_p * std::sqrt(delta_t)};
}

}  // namespace windgbm
