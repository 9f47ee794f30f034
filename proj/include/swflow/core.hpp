#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace swflow {

// Dense row-major matrix of doubles; the particle/sample container used
// throughout (rows = points, cols = coordinates).
struct Mat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
    double* row(std::size_t i) { return a.data() + i * cols; }
    const double* row(std::size_t i) const { return a.data() + i * cols; }
    bool empty() const { return rows == 0; }
};

// SplitMix64 — used only to derive independent sub-stream seeds from a master
// seed so that, e.g., direction sampling and diffusion noise never share a
// stream.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream);

// Fisher-Yates permutation of 0..n-1 driven by a seeded mt19937_64. Hand-rolled
// (rather than std::shuffle) so the byte layout of outputs is pinned by this
// code alone.
std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed);

// Number of worker threads: min(hardware, SWFLOW_THREADS if set). Always >= 1.
unsigned thread_budget();

// Runs fn(i) for i in [0, n), split across the thread budget. Deterministic
// output requires fn(i) to write only to slot i. Falls back to a plain loop
// when the budget is 1 or n is small.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Shortest round-trip decimal form (%.17g) — every numeric CSV cell goes
// through this so reruns are byte-identical.
std::string fmt_g17(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace swflow
