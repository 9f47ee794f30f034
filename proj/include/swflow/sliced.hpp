#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "swflow/core.hpp"
#include "swflow/ot1d.hpp"

namespace swflow::sliced {

// Frozen set of unit projection directions (rows of dirs).
struct ProjectionSet {
    std::size_t dim = 0;
    Mat dirs;            // n_theta x dim, unit rows
    std::uint64_t seed = 0;

    std::size_t n_theta() const { return dirs.rows; }
    const double* dir(std::size_t n) const { return dirs.row(n); }
};

// Per-direction quantile tables of the target measure(s); one group with
// weight 1 for plain flows, several weighted groups for barycenters. Tables
// are compressed to num_quantiles values via the quantile function, so drift
// evaluation cost is independent of the raw target size.
struct SlicedTarget {
    struct Group {
        double weight = 1.0;
        std::vector<ot1d::Empirical1D> tables;  // one per direction
    };
    std::vector<Group> groups;

    static SlicedTarget build(const Mat& sample, const ProjectionSet& ps, int num_quantiles);
    static SlicedTarget build(const std::vector<std::pair<const Mat*, double>>& weighted,
                              const ProjectionSet& ps, int num_quantiles);
};

// n_theta i.i.d. uniform directions on S^{d-1} (normalized standard normals).
ProjectionSet sample_directions(std::size_t d, std::size_t n_theta, std::uint64_t seed);

// Inner products <dir, x_i> per row of positions.
std::vector<double> project(const Mat& positions, const double* dir, std::size_t dim);

// Monte Carlo sliced distance: mean over directions of the 1D squared W2
// between the projected samples.
double sw2_distance(const Mat& a, const Mat& b, const ProjectionSet& ps, int num_quantiles);

// Weighted objective against prebuilt tables: sum_s p_s * mean_n w2(proj
// cloud, table_{n,s}). This is the loss recorded per flow step.
double sw2_to_target(const Mat& positions, const SlicedTarget& target, const ProjectionSet& ps,
                     int num_quantiles);

// Drift field of the (barycenter) sliced flow at each particle:
//   v(x) = -(1/n_theta) sum_n sum_s p_s psi'_{s,n}(<theta_n, x>) theta_n
// where psi' uses the current projected cloud as source. The projected-cloud
// tables are rebuilt from the full cloud on every call.
Mat sliced_drift(const Mat& positions, const SlicedTarget& target, const ProjectionSet& ps);

// Per-direction sorted projections of the cloud — the "source" tables the
// drift uses internally. Exposed for drift evaluation at off-cloud points
// (finite-difference divergence) and for replay snapshots.
std::vector<ot1d::Empirical1D> project_tables(const Mat& positions, const ProjectionSet& ps);

// Drift at an arbitrary point given frozen source tables (one per direction).
void drift_at(const double* x, const std::vector<ot1d::Empirical1D>& source,
              const SlicedTarget& target, const ProjectionSet& ps, double* out);

}  // namespace swflow::sliced
