#include "swflow/ot1d.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace swflow::ot1d {

namespace {

void require_nonempty(const Empirical1D& s) {
    if (s.values.empty()) throw std::invalid_argument("empty sample");
}

}  // namespace

Empirical1D Empirical1D::from_sorted(std::vector<double> v, int num_quantiles) {
    Empirical1D e;
    e.values = std::move(v);
    e.num_quantiles = num_quantiles;
    return e;
}

Empirical1D Empirical1D::from_unsorted(std::vector<double> v, int num_quantiles) {
    std::sort(v.begin(), v.end());
    return from_sorted(std::move(v), num_quantiles);
}

double empirical_cdf(const Empirical1D& sample, double z) {
    require_nonempty(sample);
    const auto& v = sample.values;
    const double n = static_cast<double>(v.size());
    if (z <= v.front()) {
        if (z < v.front()) return 0.5 / n;
        // fall through only when z ties the minimum: handled by the tie scan
    }
    if (z > v.back()) return (n - 0.5) / n;

    auto [lo, hi] = std::equal_range(v.begin(), v.end(), z);
    if (lo != hi) {
        // z is a sample value: midpoint of the tied block's plotting positions,
        // the center of the flat QF segment it induces.
        double a = static_cast<double>(lo - v.begin());
        double b = static_cast<double>(hi - v.begin() - 1);
        return ((a + 0.5) + (b + 0.5)) / (2.0 * n);
    }
    // strictly between two distinct neighbors; lo == hi points at the upper one
    std::size_t iu = static_cast<std::size_t>(lo - v.begin());
    std::size_t il = iu - 1;
    double pl = (static_cast<double>(il) + 0.5) / n;
    double pu = (static_cast<double>(iu) + 0.5) / n;
    double t = (z - v[il]) / (v[iu] - v[il]);
    return pl + t * (pu - pl);
}

double quantile_function(const Empirical1D& sample, double tau) {
    require_nonempty(sample);
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("quantile out of range");
    const auto& v = sample.values;
    const double n = static_cast<double>(v.size());
    double t = tau * n - 0.5;
    if (t <= 0.0) return v.front();
    if (t >= n - 1.0) return v.back();
    double fi = std::floor(t);
    std::size_t i = static_cast<std::size_t>(fi);
    double frac = t - fi;
    return v[i] + frac * (v[i + 1] - v[i]);
}

double w2_squared_1d(const Empirical1D& mu, const Empirical1D& nu, int num_quantiles) {
    require_nonempty(mu);
    require_nonempty(nu);
    if (num_quantiles < 2) throw std::invalid_argument("num_quantiles must be >= 2");
    const double m = static_cast<double>(num_quantiles);
    double acc = 0.0;
    for (int j = 1; j <= num_quantiles; ++j) {
        double tau = (j - 0.5) / m;
        double d = quantile_function(mu, tau) - quantile_function(nu, tau);
        acc += d * d;
    }
    return acc / m;
}

double potential_derivative(double z, const Empirical1D& source, const Empirical1D& target) {
    return z - quantile_function(target, empirical_cdf(source, z));
}

}  // namespace swflow::ot1d
