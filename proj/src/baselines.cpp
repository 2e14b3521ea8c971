#include "windgbm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "windgbm/log.hpp"
#include "windgbm/nelder_mead.hpp"
#include "windgbm/normal.hpp"

namespace windgbm {

namespace {

constexpr int kMaxMaIterations = 50;

// Residuals of y under the given coefficients; e_t = 0 for t < t0.
std::vector<double> arma_residuals(std::span<const double> y, double c,
                                   const std::vector<double>& ar, const std::vector<double>& ma,
                                   std::size_t t0) {
    std::vector<double> e(y.size(), 0.0);
    for (std::size_t t = t0; t < y.size(); ++t) {
        double fitted = c;
        for (std::size_t j = 1; j <= ar.size(); ++j) fitted += ar[j - 1] * y[t - j];
        for (std::size_t j = 1; j <= ma.size(); ++j) fitted += ma[j - 1] * e[t - j];
        e[t] = y[t] - fitted;
    }
    return e;
}

struct OlsFit {
    Eigen::VectorXd beta;
    double rss = 0.0;
};

// Regresses y_t (t >= t0) on [1, y_{t-1..t-p}, e_{t-1..t-q}].
OlsFit regress(std::span<const double> y, const std::vector<double>& e, int p, int q,
               std::size_t t0) {
    const auto rows = static_cast<Eigen::Index>(y.size() - t0);
    const Eigen::Index cols = 1 + p + q;
    Eigen::MatrixXd x(rows, cols);
    Eigen::VectorXd target(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t t = t0 + static_cast<std::size_t>(r);
        x(r, 0) = 1.0;
        for (int j = 1; j <= p; ++j) x(r, j) = y[t - j];
        for (int j = 1; j <= q; ++j) x(r, p + j) = e[t - j];
        target(r) = y[t];
    }
    OlsFit fit;
    fit.beta = x.colPivHouseholderQr().solve(target);
    fit.rss = (target - x * fit.beta).squaredNorm();
    return fit;
}

double bic(double rss, std::size_t n, int k) {
    const double nn = static_cast<double>(n);
    return nn * std::log(std::max(rss, 1e-300) / nn) + k * std::log(nn);
}

}  // namespace

bool fit_arma_order(std::span<const double> y, int p, int q, std::size_t t0, ArmaModel& out) {
    if (t0 < static_cast<std::size_t>(std::max(p, q)) || y.size() <= t0 + 1 + p + q)
        throw std::invalid_argument("sample too short for ARMA order");

    std::vector<double> e(y.size(), 0.0);
    if (q > 0) {
        // Long-AR residuals seed the MA regressors.
        const int m = std::min<int>(std::max(p, q) + 3, static_cast<int>(t0 + 3));
        const auto seed = regress(y, e, m, 0, static_cast<std::size_t>(m));
        std::vector<double> ar_seed(seed.beta.data() + 1, seed.beta.data() + 1 + m);
        e = arma_residuals(y, seed.beta(0), ar_seed, {}, static_cast<std::size_t>(m));
    }

    const double scale = std::max(sample_std(y), 1e-12);
    Eigen::VectorXd beta_prev;
    bool converged = q == 0;
    OlsFit fit;
    for (int iter = 0; iter < (q == 0 ? 1 : kMaxMaIterations); ++iter) {
        fit = regress(y, e, p, q, t0);
        if (!fit.beta.allFinite()) return false;
        if (q == 0) break;
        std::vector<double> ar(fit.beta.data() + 1, fit.beta.data() + 1 + p);
        std::vector<double> ma(fit.beta.data() + 1 + p, fit.beta.data() + 1 + p + q);
        e = arma_residuals(y, fit.beta(0), ar, ma, t0);
        const double worst = std::accumulate(e.begin(), e.end(), 0.0, [](double acc, double v) {
            return std::isfinite(v) ? std::max(acc, std::abs(v)) : INFINITY;
        });
        if (!(worst < 1e6 * scale)) return false;
        if (beta_prev.size() == fit.beta.size() &&
            (fit.beta - beta_prev).cwiseAbs().maxCoeff() <=
                1e-6 * (1.0 + fit.beta.cwiseAbs().maxCoeff())) {
            converged = true;
            break;
        }
        beta_prev = fit.beta;
    }
    if (!converged) return false;

    out.p = p;
    out.q = q;
    out.intercept = fit.beta(0);
    out.ar.assign(fit.beta.data() + 1, fit.beta.data() + 1 + p);
    out.ma.assign(fit.beta.data() + 1 + p, fit.beta.data() + 1 + p + q);
    const auto resid = arma_residuals(y, out.intercept, out.ar, out.ma, t0);
    double rss = 0.0;
    for (std::size_t t = t0; t < y.size(); ++t) rss += resid[t] * resid[t];
    const std::size_t n_eff = y.size() - t0;
    const int k = 1 + p + q;
    out.noise_var = std::max(rss / static_cast<double>(n_eff - static_cast<std::size_t>(k)), 1e-12);
    out.bic = bic(rss, n_eff, k);
    return true;
}

ArmaModel fit_arma(std::span<const double> history, int max_order) {
    if (history.size() < 30) throw std::invalid_argument("ARMA fit needs at least 30 observations");
    if (max_order < 1) throw std::invalid_argument("max_order must be at least 1");
    const auto t0 = static_cast<std::size_t>(max_order);

    ArmaModel best;
    bool have = false;
    int failures = 0;
    // Ascending parameter count so that BIC ties keep the smaller model.
    for (int k = 1; k <= 2 * max_order; ++k) {
        for (int p = std::max(0, k - max_order); p <= std::min(k, max_order); ++p) {
            const int q = k - p;
            ArmaModel candidate;
            if (!fit_arma_order(history, p, q, t0, candidate)) {
                ++failures;
                continue;
            }
            if (!have || candidate.bic < best.bic) {
                best = candidate;
                have = true;
            }
        }
    }
    if (failures > 0)
        warn(std::to_string(failures) +
             " ARMA candidates failed to converge; selection used the remaining fits");
    if (!have) throw std::runtime_error("no ARMA candidate could be fitted");
    return best;
}

GaussianForecast arma_predictive(const ArmaModel& model, std::span<const double> history) {
    const auto lag = static_cast<std::size_t>(std::max(model.p, model.q));
    if (history.size() <= lag) throw std::invalid_argument("history shorter than the ARMA order");
    const auto e = arma_residuals(history, model.intercept, model.ar, model.ma, lag);
    const std::size_t n = history.size();
    double m = model.intercept;
    for (std::size_t j = 1; j <= model.ar.size(); ++j) m += model.ar[j - 1] * history[n - j];
    for (std::size_t j = 1; j <= model.ma.size(); ++j) m += model.ma[j - 1] * e[n - j];
    return {m, std::sqrt(model.noise_var)};
}

double arma_quantile_forecast(const ArmaModel& model, std::span<const double> history,
                              double alpha, double speed_floor) {
    const GaussianForecast f = arma_predictive(model, history);
    return std::max(f.mean + f.sd * normal_quantile(alpha), speed_floor);
}

double garch_nll(std::span<const double> resid, double omega, double a1, double b1) {
    if (resid.empty()) return INFINITY;
    double h = 0.0;
    for (double e : resid) h += e * e;
    h /= static_cast<double>(resid.size());
    double nll = 0.0;
    for (std::size_t t = 0; t < resid.size(); ++t) {
        if (t > 0) h = omega + a1 * resid[t - 1] * resid[t - 1] + b1 * h;
        if (!(h > 0.0) || !std::isfinite(h)) return INFINITY;
        nll += 0.5 * (std::log(h) + resid[t] * resid[t] / h);
    }
    return nll;
}

namespace {

struct GarchParams {
    double omega, a1, b1;
};

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double logit(double v) { return std::log(v / (1.0 - v)); }

constexpr double kPersistenceCap = 1.0 - 1e-6;

GarchParams from_unconstrained(const std::vector<double>& u) {
    const double persistence = kPersistenceCap * logistic(u[1]);
    const double share = logistic(u[2]);
    return {std::exp(u[0]), persistence * share, persistence * (1.0 - share)};
}

std::vector<double> to_unconstrained(const GarchParams& g) {
    const double persistence = g.a1 + g.b1;
    return {std::log(g.omega), logit(persistence / kPersistenceCap), logit(g.a1 / persistence)};
}

}  // namespace

ArGarchModel fit_ar_garch(std::span<const double> history, int max_ar) {
    if (history.size() < 100)
        throw std::invalid_argument("AR-GARCH fit needs at least 100 observations");
    if (max_ar < 0) throw std::invalid_argument("max_ar must be nonnegative");
    const auto t0 = static_cast<std::size_t>(max_ar);

    int best_p = 0;
    double best_bic = INFINITY;
    OlsFit best_fit;
    const std::vector<double> no_resid(history.size(), 0.0);
    for (int p = 0; p <= max_ar; ++p) {
        const OlsFit fit = regress(history, no_resid, p, 0, t0);
        const double b = bic(fit.rss, history.size() - t0, p + 1);
        if (b < best_bic) {
            best_bic = b;
            best_p = p;
            best_fit = fit;
        }
    }

    ArGarchModel model;
    model.intercept = best_fit.beta(0);
    model.ar.assign(best_fit.beta.data() + 1, best_fit.beta.data() + 1 + best_p);
    const auto e_full = arma_residuals(history, model.intercept, model.ar, {}, t0);
    const std::span<const double> resid(e_full.data() + t0, e_full.size() - t0);

    double var = 0.0;
    for (double e : resid) var += e * e;
    var /= static_cast<double>(resid.size());
    var = std::max(var, 1e-12);

    const std::vector<std::pair<double, double>> starts{
        {0.05, 0.90}, {0.10, 0.80}, {0.20, 0.50}, {0.02, 0.05}};
    std::vector<SimplexResult> fits;
    for (const auto& [a, b] : starts) {
        const GarchParams g{var * (1.0 - a - b), a, b};
        const auto objective = [&](const std::vector<double>& u) {
            const GarchParams p = from_unconstrained(u);
            return garch_nll(resid, p.omega, p.a1, p.b1);
        };
        fits.push_back(nelder_mead(objective, to_unconstrained(g), 0.5, 1500, 1e-10));
    }
    // With a1 near zero the likelihood is flat along b1 (omega compensates), so
    // fits within half a log-likelihood unit of the best are treated as tied
    // and the least persistent one is kept.
    SimplexResult best;
    for (const auto& r : fits)
        if (r.value < best.value) best = r;
    const auto persistence = [](const SimplexResult& r) {
        const GarchParams p = from_unconstrained(r.x);
        return p.a1 + p.b1;
    };
    if (std::isfinite(best.value)) {
        const double cutoff = best.value + 0.5;
        for (const auto& r : fits)
            if (r.value <= cutoff && persistence(r) < persistence(best)) best = r;
    }
    if (!std::isfinite(best.value)) {
        std::ostringstream msg;
        msg << "GARCH likelihood non-finite at every start:";
        for (const auto& [a, b] : starts) msg << " (a1=" << a << ", b1=" << b << ")";
        throw std::runtime_error(msg.str());
    }
    const GarchParams g = from_unconstrained(best.x);
    model.omega = g.omega;
    model.a1 = g.a1;
    model.b1 = g.b1;

    double h = var;
    for (std::size_t t = 1; t < resid.size(); ++t)
        h = model.omega + model.a1 * resid[t - 1] * resid[t - 1] + model.b1 * h;
    model.last_resid = resid.back();
    model.last_condvar = h;
    model.n_seen = history.size();
    return model;
}

GaussianForecast ar_garch_predictive(const ArGarchModel& model, std::span<const double> history) {
    if (history.size() < model.n_seen || history.size() < model.ar.size())
        throw std::invalid_argument("history does not extend the AR-GARCH fit sample");
    const auto mean_at = [&](std::size_t t) {
        double m = model.intercept;
        for (std::size_t j = 1; j <= model.ar.size(); ++j) m += model.ar[j - 1] * history[t - j];
        return m;
    };
    double resid = model.last_resid;
    double h = model.last_condvar;
    for (std::size_t t = model.n_seen; t < history.size(); ++t) {
        h = model.omega + model.a1 * resid * resid + model.b1 * h;
        resid = history[t] - mean_at(t);
    }
    const double h_next = model.omega + model.a1 * resid * resid + model.b1 * h;
    return {mean_at(history.size()), std::sqrt(h_next)};
}

double baseline_power_forecast(double speed_forecast, const PowerCurveModel& curve) {
    return std::clamp(curve.value(speed_forecast), 0.0, 100.0);
}

std::string_view method_name(BaselineMethod method) {
    switch (method) {
        case BaselineMethod::persistent: return "persistent";
        case BaselineMethod::arma: return "arma";
        case BaselineMethod::ar_garch: return "ar-garch";
    }
    return "unknown";
}

double BaselineRecord::at(double alpha) const {
    for (const auto& [a, p] : forecasts)
        if (std::abs(a - alpha) < 1e-12) return p;
    throw std::out_of_range("no baseline forecast stored for alpha " + std::to_string(alpha));
}

std::vector<BaselineRecord> run_baseline_backtest(const SeriesFrame& train,
                                                  const SeriesFrame& test,
                                                  const RunConfig& config, BaselineMethod method,
                                                  const PowerCurveModel& initial_curve,
                                                  std::span<const double> alphas) {
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw std::domain_error("baseline alphas must lie in (0,1)");
    if (train.empty()) throw std::invalid_argument("baseline needs a training window");

    std::vector<double> history(train.speed.begin(), train.speed.end());
    history.reserve(train.size() + test.size());
    PowerCurveModel curve = initial_curve;
    ArmaModel arma;
    ArGarchModel garch;

    std::vector<BaselineRecord> records;
    records.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        const bool refit = i % static_cast<std::size_t>(config.refit_every) == 0;
        BaselineRecord rec;
        rec.step = i;
        switch (method) {
            case BaselineMethod::persistent:
                rec.speed = {persistent_forecast(history.back()), 0.0};
                break;
            case BaselineMethod::arma:
                if (refit) arma = fit_arma(history, config.max_order);
                rec.speed = arma_predictive(arma, history);
                break;
            case BaselineMethod::ar_garch:
                if (refit) garch = fit_ar_garch(history, config.max_order);
                rec.speed = ar_garch_predictive(garch, history);
                break;
        }
        for (double a : alphas) {
            const double speed =
                method == BaselineMethod::persistent
                    ? rec.speed.mean
                    : std::max(rec.speed.mean + rec.speed.sd * normal_quantile(a), config.speed_floor);
            rec.forecasts.emplace_back(a, baseline_power_forecast(speed, curve));
        }
        rec.realized_power = test.power[i];
        rec.realized_speed = test.speed[i];
        records.push_back(std::move(rec));

        history.push_back(test.speed[i]);
        update_in_place(curve, test.speed[i], test.power[i]);
    }
    return records;
}

}  // namespace windgbm
