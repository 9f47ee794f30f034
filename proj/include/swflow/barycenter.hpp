#pragma once

#include <utility>
#include <vector>

#include "swflow/flow.hpp"

namespace swflow::bary {

// Weighted family of group samples plus the flow settings used to find their
// sliced-Wasserstein barycenter.
struct BarycenterProblem {
    std::vector<std::pair<Mat, double>> groups;  // (sample, weight p_s)
    flow::FlowConfig config;
};

// Runs the configured integrator with the multi-group drift; the recorded
// per-step loss is the weighted objective sum_s p_s SW2^2(cloud, nu_s).
flow::RunRecord run_barycenter_flow(const BarycenterProblem& problem);

// Exact 1D barycenter by quantile averaging: Q*(tau_j) = sum_s p_s QF_s(tau_j)
// on the standard grid.
ot1d::Empirical1D exact_barycenter_1d(
    const std::vector<std::pair<ot1d::Empirical1D, double>>& groups, int num_quantiles);

// Same from raw columns; rejects d != 1 inputs.
ot1d::Empirical1D exact_barycenter_1d(const std::vector<std::pair<Mat, double>>& groups,
                                      int num_quantiles);

}  // namespace swflow::bary
