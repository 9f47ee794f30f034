#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swflow/core.hpp"
#include "swflow/fair.hpp"

namespace swflow::data {

struct GmmComponent {
    double weight = 1.0;
    std::vector<double> mean;
    std::vector<double> var;  // diagonal covariance entries
};

struct GmmSpec {
    std::vector<GmmComponent> components;
    std::uint64_t seed = 0;

    std::size_t dim() const { return components.empty() ? 0 : components.front().mean.size(); }
};

// Random spec with n_components centroids rejection-placed in [-10,10]^d at
// pairwise distance >= 4 x the largest std ("sufficiently distant"), stds
// U[0.5,1], weights U[0.5,1.5] normalized.
GmmSpec random_gmm_spec(std::size_t d, std::size_t n_components, std::uint64_t seed);

Mat sample_gmm(const GmmSpec& spec, std::size_t n);

std::string gmm_spec_to_json(const GmmSpec& spec);
GmmSpec gmm_spec_from_json(const std::string& text);

// How the sensitive column becomes a dense group label.
struct SensitiveCoding {
    enum class Mode { raw, threshold, deciles };
    Mode mode = Mode::raw;
    double threshold = 0.0;  // used by Mode::threshold: label = (value > threshold)
};

struct CsvSchema {
    std::vector<std::string> feature_cols;  // empty: every column except sensitive/target
    std::string sensitive_col;
    std::string target_col;
    SensitiveCoding coding;
};

fair::GroupedDataset load_csv(const std::string& path, const CsvSchema& schema);
void save_csv(const std::string& path, const fair::GroupedDataset& data,
              const CsvSchema& schema);

// Seeded permutation split keeping >= 2 rows of every group on both sides
// (re-derives the permutation up to 100 times, then errors).
std::pair<fair::GroupedDataset, fair::GroupedDataset> split(const fair::GroupedDataset& data,
                                                            std::size_t n_train,
                                                            std::uint64_t seed);

// Synthetic health-claims stand-in: binary condition indicators with
// heterogeneous prevalences (every condition >= 30 positives), a sensitive
// attribute correlated with a subset of conditions, and a sparse-linear
// spending-like target normalized to [0,1]. noise = 0 makes the target exactly
// linear in (conditions, group).
fair::GroupedDataset synth_health_surrogate(std::size_t n, std::size_t n_conditions,
                                            std::uint64_t seed, double noise = 0.05);

// Two-group regression benchmark with group-shifted targets; drives the
// fairness acceptance properties.
fair::GroupedDataset synth_grouped_gaussian(std::size_t n, std::size_t n_features,
                                            double shift, double noise, std::uint64_t seed);

}  // namespace swflow::data
