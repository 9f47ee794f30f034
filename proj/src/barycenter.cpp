#include "swflow/barycenter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace swflow::bary {

namespace {

void validate_weights(const std::vector<double>& w) {
    if (w.empty()) throw std::invalid_argument("empty sample");
    double sum = 0.0;
    for (double p : w) {
        if (!(p > 0.0)) throw std::invalid_argument("group weight must be positive");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("group weights must sum to 1");
}

}  // namespace

flow::RunRecord run_barycenter_flow(const BarycenterProblem& problem) {
    std::vector<double> weights;
    std::vector<std::pair<const Mat*, double>> groups;
    weights.reserve(problem.groups.size());
    groups.reserve(problem.groups.size());
    for (const auto& [sample, p] : problem.groups) {
        weights.push_back(p);
        groups.emplace_back(&sample, p);
    }
    validate_weights(weights);
    for (const auto& [sample, p] : problem.groups)
        if (sample.cols != problem.config.dim)
            throw std::invalid_argument("group dimension mismatch");
    return flow::run_flow_groups(groups, problem.config);
}

ot1d::Empirical1D exact_barycenter_1d(
    const std::vector<std::pair<ot1d::Empirical1D, double>>& groups, int num_quantiles) {
    if (groups.empty()) throw std::invalid_argument("empty sample");
    if (num_quantiles < 2) throw std::invalid_argument("num_quantiles must be >= 2");
    std::vector<double> weights;
    for (const auto& [_, p] : groups) weights.push_back(p);
    validate_weights(weights);
    std::vector<double> values(static_cast<std::size_t>(num_quantiles), 0.0);
    std::vector<double> terms(groups.size());
    for (int j = 1; j <= num_quantiles; ++j) {
        double tau = (j - 0.5) / num_quantiles;
        for (std::size_t s = 0; s < groups.size(); ++s)
            terms[s] = groups[s].second * ot1d::quantile_function(groups[s].first, tau);
        // sorted fold keeps the result independent of group order
        std::sort(terms.begin(), terms.end());
        double acc = 0.0;
        for (double t : terms) acc += t;
        values[static_cast<std::size_t>(j - 1)] = acc;
    }
    // weighted averages of non-decreasing functions are non-decreasing
    return ot1d::Empirical1D::from_sorted(std::move(values), num_quantiles);
}

ot1d::Empirical1D exact_barycenter_1d(const std::vector<std::pair<Mat, double>>& groups,
                                      int num_quantiles) {
    std::vector<std::pair<ot1d::Empirical1D, double>> tables;
    tables.reserve(groups.size());
    for (const auto& [sample, p] : groups) {
        if (sample.cols != 1) throw std::invalid_argument("exact barycenter is 1D-only");
        if (sample.empty()) throw std::invalid_argument("empty sample");
        tables.emplace_back(ot1d::Empirical1D::from_unsorted(sample.a, num_quantiles), p);
    }
    return exact_barycenter_1d(tables, num_quantiles);
}

}  // namespace swflow::bary
