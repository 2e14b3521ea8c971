#include "windgbm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <stdexcept>

namespace windgbm::synth {

double Profile::at(double t) const {
    if (amplitude == 0.0) return base;
    return base + amplitude * std::sin(2.0 * std::numbers::pi * t / period);
}

double LogisticCurve::f(double s) const {
    return level / (1.0 + std::exp(-steepness * (s - midpoint)));
}

double LogisticCurve::f_s(double s) const {
    const double v = f(s);
    return steepness * v * (1.0 - v / level);
}

double LogisticCurve::f_ss(double s) const {
    return steepness * f_s(s) * (1.0 - 2.0 * f(s) / level);
}

void SimSpec::validate() const {
    if (!(s0 > 0.0)) throw std::invalid_argument("s0 must be positive");
    if (!(delta_t > 0.0)) throw std::invalid_argument("delta_t must be positive");
    if (sigma_profile.base - std::abs(sigma_profile.amplitude) < 0.0)
        throw std::invalid_argument("sigma profile must stay nonnegative");
    if (!(true_curve.level > 0.0 && true_curve.level <= 100.0))
        throw std::invalid_argument("curve level must lie in (0, 100]");
    if (sigma_f_true < 0.0 || obs_noise_var < 0.0)
        throw std::invalid_argument("noise scales must be nonnegative");
    if (mu_profile.amplitude != 0.0 && !(mu_profile.period > 0.0))
        throw std::invalid_argument("mu profile period must be positive");
    if (sigma_profile.amplitude != 0.0 && !(sigma_profile.period > 0.0))
        throw std::invalid_argument("sigma profile period must be positive");
}

Simulation simulate(const SimSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    Simulation sim;
    sim.frame.delta_t = spec.delta_t;
    sim.frame.rated_capacity = 100.0;
    sim.truth.reserve(spec.n_steps);

    const double sqrt_dt = std::sqrt(spec.delta_t);
    const double obs_sd = std::sqrt(spec.obs_noise_var);
    double x = std::log(spec.s0);
    double e = 0.0;
    for (std::size_t t = 0; t < spec.n_steps; ++t) {
        const double time = static_cast<double>(t) * spec.delta_t;
        const double mu = spec.mu_profile.at(time);
        const double sigma = spec.sigma_profile.at(time);
        const double s = std::exp(x);

        TruthRow row;
        row.true_speed = s;
        row.mu_s = mu;
        row.sigma_s = sigma;
        row.curve_f = spec.true_curve.f(s);
        row.curve_f_s = spec.true_curve.f_s(s);
        row.curve_f_ss = spec.true_curve.f_ss(s);
        row.conversion_noise = e;

        const double xi = normal(rng);
        const double z = normal(rng);
        const double eta = normal(rng);

        double p = row.curve_f + e;
        if (p < 0.0 || p > 100.0) {
            p = std::clamp(p, 0.0, 100.0);
            row.clamped = true;
            ++sim.clamp_events;
        }
        sim.frame.timestamps.push_back(spec.start_epoch +
                                       static_cast<std::int64_t>(t) * spec.spacing_seconds);
        sim.frame.speed.push_back(std::exp(x + obs_sd * z));
        sim.frame.power.push_back(p);
        sim.truth.push_back(row);

        e += spec.sigma_f_true * std::sqrt(std::max(row.curve_f_s, 0.0) * spec.delta_t) * eta;
        x += (mu - 0.5 * sigma * sigma) * spec.delta_t + sigma * sqrt_dt * xi;
    }
    return sim;
}

std::vector<double> one_step_transition_sample(double s, double p, double mu_s, double sigma_s,
                                               const LogisticCurve& curve, double sigma_f,
                                               std::size_t n_draws, double delta_t,
                                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double carried = p - curve.f(s);
    const double noise_sd = sigma_f * std::sqrt(std::max(curve.f_s(s), 0.0) * delta_t);
    const double drift = (mu_s - 0.5 * sigma_s * sigma_s) * delta_t;
    const double vol = sigma_s * std::sqrt(delta_t);

    std::vector<double> out(n_draws);
    for (auto& draw : out) {
        const double s_next = s * std::exp(drift + vol * normal(rng));
        draw = curve.f(s_next) + carried + noise_sd * normal(rng);
    }
    return out;
}

void write_truth_csv(const std::filesystem::path& path, const Simulation& sim) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "step,true_speed,mu_s,sigma_s,curve_f,curve_f_s,curve_f_ss,conversion_noise,clamped\n"
        << std::setprecision(17);
    for (std::size_t t = 0; t < sim.truth.size(); ++t) {
        const auto& r = sim.truth[t];
        out << t << ',' << r.true_speed << ',' << r.mu_s << ',' << r.sigma_s << ',' << r.curve_f
            << ',' << r.curve_f_s << ',' << r.curve_f_ss << ',' << r.conversion_noise << ','
            << (r.clamped ? 1 : 0) << '\n';
    }
}

}  // namespace windgbm::synth
