#pragma once

#include <cstdint>
#include <vector>

#include "swflow/barycenter.hpp"
#include "swflow/core.hpp"
#include "swflow/ot1d.hpp"

namespace swflow::fair {

// Tabular rows with a dense sensitive label in {0..S-1}.
struct GroupedDataset {
    Mat features;                       // n x p
    std::vector<int> sensitive;         // n labels
    std::vector<double> target;         // n responses
    std::vector<double> group_weights;  // S empirical frequencies

    std::size_t n() const { return features.rows; }
    int n_groups() const { return static_cast<int>(group_weights.size()); }
    void recompute_weights();
};

// Ridge linear model on (features ⊕ group one-hots); the one-hot block doubles
// as per-group intercepts and is left unpenalized, so the design stays full
// rank at ridge = 0 whenever the features are.
struct LinearModel {
    std::vector<double> beta;        // p slopes
    std::vector<double> intercepts;  // S per-group intercepts
    double predict(const double* x, std::size_t p, int s) const;
};

enum class FairMethod { exact_1d, swf_barycenter };

// Base model plus the per-group prediction CDFs and the barycenter quantile
// table driving the remap y1 = Q*(F_s(y0)); alpha interpolates
// (1-alpha) y0 + alpha y1.
struct FairPredictor {
    LinearModel base;
    std::vector<ot1d::Empirical1D> group_cdf;  // F_{f*|s} per group
    ot1d::Empirical1D qstar;                   // barycenter quantile table
    std::vector<double> group_weights;
    double alpha = 1.0;
};

LinearModel fit_base_regressor(const GroupedDataset& train, double ridge);

// flow_config is consulted only for the swf_barycenter method (the barycenter
// flow runs on the scalar per-group prediction samples; its final cloud's
// quantile table becomes Q*).
FairPredictor build_fair_predictor(const LinearModel& base, const GroupedDataset& train,
                                   FairMethod method, double alpha,
                                   const flow::FlowConfig& flow_config);

double predict(const FairPredictor& fp, const double* x, std::size_t p, int s);

std::vector<double> predict_all(const FairPredictor& fp, const GroupedDataset& data);

double mse(const std::vector<double>& predictions, const std::vector<double>& targets);

// Max over group pairs of the exact sup distance between the groups' empirical
// prediction CDFs (merge scan over right-continuous step functions).
double ks_distance(const std::vector<double>& predictions, const std::vector<int>& groups);

struct SweepRow {
    double alpha = 0.0;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    double mse = 0.0;
    double ks = 0.0;
};

struct SweepAggregate {
    double alpha = 0.0;
    double lambda = 0.0;
    double mse_mean = 0.0, mse_std = 0.0;
    double ks_mean = 0.0, ks_std = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<SweepAggregate> aggregates;  // one per (alpha, lambda)
};

// Grid sweep: one predictor fit per (lambda, seed) — exact_1d ignores both and
// fits once — then MSE/KS of every alpha on the held-out split.
SweepResult pareto_sweep(const GroupedDataset& train, const GroupedDataset& test,
                         const LinearModel& base, FairMethod method,
                         const std::vector<double>& alphas, const std::vector<double>& lambdas,
                         const std::vector<std::uint64_t>& seeds,
                         const flow::FlowConfig& flow_config);

}  // namespace swflow::fair
