#include "windgbm/normal.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace windgbm {

namespace {
const boost::math::normal_distribution<double> kStandardNormal{0.0, 1.0};
}

double normal_cdf(double x) {
    if (x == -INFINITY) return 0.0;
    if (x == INFINITY) return 1.0;
    return boost::math::cdf(kStandardNormal, x);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal quantile needs p in (0,1)");
    return boost::math::quantile(kStandardNormal, p);
}

double normal_pdf(double x) { return boost::math::pdf(kStandardNormal, x); }

double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace windgbm
