#include "swflow/sliced.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace swflow::sliced {

namespace {

ot1d::Empirical1D compress(const std::vector<double>& projected, int num_quantiles) {
    auto full = ot1d::Empirical1D::from_unsorted(projected, num_quantiles);
    if (static_cast<int>(full.values.size()) <= num_quantiles) return full;
    std::vector<double> table(static_cast<std::size_t>(num_quantiles));
    for (int j = 1; j <= num_quantiles; ++j)
        table[static_cast<std::size_t>(j - 1)] =
            ot1d::quantile_function(full, (j - 0.5) / num_quantiles);
    return ot1d::Empirical1D::from_sorted(std::move(table), num_quantiles);
}

// Sorting the addends before folding makes the per-group sums bit-identical
// under any permutation of the groups.
double ordered_sum(std::vector<double>& buf) {
    std::sort(buf.begin(), buf.end());
    double acc = 0.0;
    for (double v : buf) acc += v;
    return acc;
}

}  // namespace

ProjectionSet sample_directions(std::size_t d, std::size_t n_theta, std::uint64_t seed) {
    if (d == 0 || n_theta == 0) throw std::invalid_argument("empty projection set");
    ProjectionSet ps;
    ps.dim = d;
    ps.seed = seed;
    ps.dirs = Mat(n_theta, d);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t n = 0; n < n_theta; ++n) {
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                double g = gauss(rng);
                ps.dirs(n, j) = g;
                norm2 += g * g;
            }
        } while (norm2 == 0.0);
        if (d == 1) {
            ps.dirs(n, 0) = ps.dirs(n, 0) < 0.0 ? -1.0 : 1.0;  // S^0 exactly
            continue;
        }
        double inv = 1.0 / std::sqrt(norm2);
        for (std::size_t j = 0; j < d; ++j) ps.dirs(n, j) *= inv;
    }
    return ps;
}

std::vector<double> project(const Mat& positions, const double* dir, std::size_t dim) {
    if (positions.cols != dim) throw std::invalid_argument("projection dimension mismatch");
    std::vector<double> out(positions.rows);
    for (std::size_t i = 0; i < positions.rows; ++i) {
        const double* x = positions.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < dim; ++j) s += dir[j] * x[j];
        out[i] = s;
    }
    return out;
}

SlicedTarget SlicedTarget::build(const Mat& sample, const ProjectionSet& ps, int num_quantiles) {
    return build({{&sample, 1.0}}, ps, num_quantiles);
}

SlicedTarget SlicedTarget::build(const std::vector<std::pair<const Mat*, double>>& weighted,
                                 const ProjectionSet& ps, int num_quantiles) {
    if (weighted.empty()) throw std::invalid_argument("empty sample");
    SlicedTarget t;
    t.groups.reserve(weighted.size());
    for (const auto& [sample, weight] : weighted) {
        if (sample == nullptr || sample->empty()) throw std::invalid_argument("empty sample");
        Group g;
        g.weight = weight;
        g.tables.reserve(ps.n_theta());
        for (std::size_t n = 0; n < ps.n_theta(); ++n)
            g.tables.push_back(compress(project(*sample, ps.dir(n), ps.dim), num_quantiles));
        t.groups.push_back(std::move(g));
    }
    return t;
}

double sw2_distance(const Mat& a, const Mat& b, const ProjectionSet& ps, int num_quantiles) {
    if (a.empty() || b.empty()) throw std::invalid_argument("empty sample");
    const std::size_t nt = ps.n_theta();
    std::vector<double> per_dir(nt);
    parallel_for(nt, [&](std::size_t n) {
        auto pa = ot1d::Empirical1D::from_unsorted(project(a, ps.dir(n), ps.dim), num_quantiles);
        auto pb = ot1d::Empirical1D::from_unsorted(project(b, ps.dir(n), ps.dim), num_quantiles);
        per_dir[n] = ot1d::w2_squared_1d(pa, pb, num_quantiles);
    });
    double acc = 0.0;
    for (double v : per_dir) acc += v;
    return acc / static_cast<double>(nt);
}

double sw2_to_target(const Mat& positions, const SlicedTarget& target, const ProjectionSet& ps,
                     int num_quantiles) {
    if (positions.empty()) throw std::invalid_argument("empty sample");
    const std::size_t nt = ps.n_theta();
    std::vector<double> per_dir(nt);
    parallel_for(nt, [&](std::size_t n) {
        auto pc =
            ot1d::Empirical1D::from_unsorted(project(positions, ps.dir(n), ps.dim), num_quantiles);
        thread_local std::vector<double> buf;
        buf.clear();
        for (const auto& g : target.groups)
            buf.push_back(g.weight * ot1d::w2_squared_1d(pc, g.tables[n], num_quantiles));
        per_dir[n] = ordered_sum(buf);
    });
    double acc = 0.0;
    for (double v : per_dir) acc += v;
    return acc / static_cast<double>(nt);
}

std::vector<ot1d::Empirical1D> project_tables(const Mat& positions, const ProjectionSet& ps) {
    std::vector<ot1d::Empirical1D> tables(ps.n_theta());
    parallel_for(ps.n_theta(), [&](std::size_t n) {
        tables[n] =
            ot1d::Empirical1D::from_unsorted(project(positions, ps.dir(n), ps.dim));
    });
    return tables;
}

void drift_at(const double* x, const std::vector<ot1d::Empirical1D>& source,
              const SlicedTarget& target, const ProjectionSet& ps, double* out) {
    const std::size_t d = ps.dim;
    const std::size_t nt = ps.n_theta();
    for (std::size_t j = 0; j < d; ++j) out[j] = 0.0;
    for (std::size_t n = 0; n < nt; ++n) {
        const double* th = ps.dir(n);
        double z = 0.0;
        for (std::size_t j = 0; j < d; ++j) z += th[j] * x[j];
        double cdf = ot1d::empirical_cdf(source[n], z);
        double psi;
        if (target.groups.size() == 1) {
            const auto& g = target.groups[0];
            psi = g.weight * (z - ot1d::quantile_function(g.tables[n], cdf));
        } else {
            thread_local std::vector<double> buf;
            buf.clear();
            for (const auto& g : target.groups)
                buf.push_back(g.weight * (z - ot1d::quantile_function(g.tables[n], cdf)));
            psi = ordered_sum(buf);
        }
        for (std::size_t j = 0; j < d; ++j) out[j] -= psi * th[j];
    }
    const double inv = 1.0 / static_cast<double>(nt);
    for (std::size_t j = 0; j < d; ++j) out[j] *= inv;
}

Mat sliced_drift(const Mat& positions, const SlicedTarget& target, const ProjectionSet& ps) {
    if (positions.empty()) throw std::invalid_argument("empty sample");
    auto source = project_tables(positions, ps);
    Mat drift(positions.rows, positions.cols);
    parallel_for(positions.rows, [&](std::size_t i) {
        drift_at(positions.row(i), source, target, ps, drift.row(i));
    });
    return drift;
}

}  // namespace swflow::sliced
