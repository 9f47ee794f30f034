#pragma once

#include <vector>

namespace swflow::ot1d {

// Sorted 1D sample with interpolated CDF / quantile evaluation. Both use the
// plotting positions (i - 0.5)/n with linear interpolation between order
// statistics, which makes them mutual inverses and makes the quantile-grid W2
// agree with sorted matching when the grid resolution equals the sample size.
struct Empirical1D {
    std::vector<double> values;   // ascending
    int num_quantiles = 100;      // grid resolution carried with the sample

    static Empirical1D from_sorted(std::vector<double> v, int num_quantiles = 100);
    static Empirical1D from_unsorted(std::vector<double> v, int num_quantiles = 100);
};

// Interpolated empirical CDF. Saturates at the boundary plotting positions
// 1/(2n) and 1 - 1/(2n) outside the sample range; ties produce a value at the
// midpoint of the tied block's positions so QF(CDF(v)) = v still holds there.
double empirical_cdf(const Empirical1D& sample, double z);

// Piecewise-linear inverse of empirical_cdf; clamps to the extreme order
// statistics at the ends. tau outside [0,1] is an error.
double quantile_function(const Empirical1D& sample, double tau);

// Midpoint-rule approximation of the squared quantile-function distance
// integral(|F_mu^-1 - F_nu^-1|^2) on tau_j = (j - 0.5)/num_quantiles.
double w2_squared_1d(const Empirical1D& mu, const Empirical1D& nu, int num_quantiles);

// 1D Kantorovich potential derivative psi'(z) = z - QF_target(CDF_source(z));
// z - psi'(z) is the monotone optimal map.
double potential_derivative(double z, const Empirical1D& source, const Empirical1D& target);

}  // namespace swflow::ot1d
