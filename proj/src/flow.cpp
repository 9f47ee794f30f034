#include "swflow/flow.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace swflow::flow {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Streams {
    std::uint64_t dir, init, noise;
};

Streams derive_streams(const FlowConfig& c) {
    return {c.dir_seed ? c.dir_seed : mix_seed(c.seed, 0),
            c.init_seed ? c.init_seed : mix_seed(c.seed, 1),
            c.noise_seed ? c.noise_seed : mix_seed(c.seed, 2)};
}

void validate(const FlowConfig& c) {
    if (c.n_particles == 0) throw std::invalid_argument("n_particles must be >= 1");
    if (c.dim == 0) throw std::invalid_argument("dim must be >= 1");
    if (!(c.h > 0.0)) throw std::invalid_argument("h must be positive");
    if (c.lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
    if (c.K < 0) throw std::invalid_argument("K must be nonnegative");
    if (c.n_theta < 1) throw std::invalid_argument("n_theta must be >= 1");
    if (c.num_quantiles < 2) throw std::invalid_argument("num_quantiles must be >= 2");
    if (c.init.param <= 0.0) throw std::invalid_argument("init scale must be positive");
}

double bbox_diagonal(const Mat& x) {
    double acc = 0.0;
    for (std::size_t j = 0; j < x.cols; ++j) {
        double lo = x(0, j), hi = x(0, j);
        for (std::size_t i = 1; i < x.rows; ++i) {
            lo = std::min(lo, x(i, j));
            hi = std::max(hi, x(i, j));
        }
        acc += (hi - lo) * (hi - lo);
    }
    return std::sqrt(acc);
}

double auto_epsilon(const FlowConfig& c, const Mat& positions) {
    if (c.fd_epsilon > 0.0) return c.fd_epsilon;
    return 1e-4 * std::max(bbox_diagonal(positions), 1e-8);
}

std::vector<double> resolve_bandwidth(const FlowConfig& c, const Mat& positions) {
    if (c.kde_bandwidth > 0.0)
        return std::vector<double>(positions.cols, c.kde_bandwidth);
    return scott_bandwidth(positions);
}

bool all_finite(const Mat& m) {
    for (double v : m.a)
        if (!std::isfinite(v)) return false;
    return true;
}

double log_ball_volume(std::size_t d, double r) {
    double dd = static_cast<double>(d);
    return 0.5 * dd * std::log(kPi) - std::lgamma(0.5 * dd + 1.0) + dd * std::log(r);
}

// One stochastic step; reports the mean drift norm when asked.
ParticleCloud step_stochastic_impl(const ParticleCloud& cloud, const sliced::SlicedTarget& targets,
                                   const sliced::ProjectionSet& ps, const FlowConfig& config,
                                   std::mt19937_64& rng, double* mean_drift_out) {
    Mat drift = sliced::sliced_drift(cloud.positions, targets, ps);
    const std::size_t n = cloud.positions.rows, d = cloud.positions.cols;
    if (mean_drift_out) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += drift(i, j) * drift(i, j);
            acc += std::sqrt(s);
        }
        *mean_drift_out = acc / static_cast<double>(n);
    }
    ParticleCloud next;
    next.positions = cloud.positions;
    next.step = cloud.step + 1;
    const double h = config.h;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) next.positions(i, j) += h * drift(i, j);
    if (config.lambda > 0.0) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double amp = std::sqrt(2.0 * config.lambda * h);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) next.positions(i, j) += amp * gauss(rng);
    }
    return next;
}

ParticleCloud step_liouville_impl(const ParticleCloud& cloud, const sliced::SlicedTarget& targets,
                                  const sliced::ProjectionSet& ps, const FlowConfig& config,
                                  double* mean_drift_out) {
    const std::size_t n = cloud.positions.rows, d = cloud.positions.cols;
    const double lambda = config.lambda;
    if (lambda > 0.0 && n < 2) throw std::invalid_argument("score needs >= 2 particles");

    auto source = sliced::project_tables(cloud.positions, ps);
    std::vector<double> bw;
    Mat particle_score;
    if (lambda > 0.0) {
        bw = resolve_bandwidth(config, cloud.positions);
        particle_score = kde_score_at(cloud.positions, cloud.positions, bw);
        if (!all_finite(particle_score)) throw std::runtime_error("score overflow");
    }

    // Full drift v~ = v - lambda grad log rho at the particles.
    Mat field(n, d);
    parallel_for(n, [&](std::size_t i) {
        sliced::drift_at(cloud.positions.row(i), source, targets, ps, field.row(i));
        if (lambda > 0.0)
            for (std::size_t j = 0; j < d; ++j) field(i, j) -= lambda * particle_score(i, j);
    });

    // Divergence of the same field by central differences on the frozen cloud.
    const double eps = auto_epsilon(config, cloud.positions);
    Mat perturbed(2 * d * n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = cloud.positions.row(i);
        for (std::size_t m = 0; m < d; ++m) {
            double* plus = perturbed.row(i * 2 * d + 2 * m);
            double* minus = perturbed.row(i * 2 * d + 2 * m + 1);
            for (std::size_t j = 0; j < d; ++j) plus[j] = minus[j] = x[j];
            plus[m] += eps;
            minus[m] -= eps;
        }
    }
    Mat perturbed_score;
    if (lambda > 0.0) {
        perturbed_score = kde_score_at(cloud.positions, perturbed, bw);
        if (!all_finite(perturbed_score)) throw std::runtime_error("score overflow");
    }
    std::vector<double> divergence(n);
    parallel_for(n, [&](std::size_t i) {
        double div = 0.0;
        std::vector<double> fp(d), fm(d);
        for (std::size_t m = 0; m < d; ++m) {
            std::size_t rp = i * 2 * d + 2 * m, rm = rp + 1;
            sliced::drift_at(perturbed.row(rp), source, targets, ps, fp.data());
            sliced::drift_at(perturbed.row(rm), source, targets, ps, fm.data());
            double vp = fp[m], vm = fm[m];
            if (lambda > 0.0) {
                vp -= lambda * perturbed_score(rp, m);
                vm -= lambda * perturbed_score(rm, m);
            }
            div += (vp - vm) / (2.0 * eps);
        }
        divergence[i] = div;
    });

    if (mean_drift_out) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += field(i, j) * field(i, j);
            acc += std::sqrt(s);
        }
        *mean_drift_out = acc / static_cast<double>(n);
    }

    ParticleCloud next;
    next.positions = cloud.positions;
    next.log_density = cloud.log_density;
    next.step = cloud.step + 1;
    const double h = config.h;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) next.positions(i, j) += h * field(i, j);
        next.log_density[i] -= h * divergence[i];
    }
    for (double v : next.log_density)
        if (!std::isfinite(v)) throw std::runtime_error("non-finite log density");
    if (!all_finite(next.positions)) throw std::runtime_error("non-finite positions");
    return next;
}

std::vector<ot1d::Empirical1D> snapshot_tables(const std::vector<ot1d::Empirical1D>& full,
                                               int table_quantiles) {
    std::vector<ot1d::Empirical1D> out;
    out.reserve(full.size());
    for (const auto& t : full) {
        if (static_cast<int>(t.values.size()) <= table_quantiles) {
            out.push_back(t);
            continue;
        }
        std::vector<double> v(static_cast<std::size_t>(table_quantiles));
        for (int j = 1; j <= table_quantiles; ++j)
            v[static_cast<std::size_t>(j - 1)] =
                ot1d::quantile_function(t, (j - 0.5) / table_quantiles);
        out.push_back(ot1d::Empirical1D::from_sorted(std::move(v), table_quantiles));
    }
    return out;
}

}  // namespace

void validate_config(const FlowConfig& config) { validate(config); }

ParticleCloud init_cloud(const FlowConfig& config) {
    validate(config);
    const std::size_t n = config.n_particles, d = config.dim;
    ParticleCloud cloud;
    cloud.positions = Mat(n, d);
    const bool track = config.mode == Mode::liouville;
    if (track) cloud.log_density.assign(n, 0.0);
    std::mt19937_64 rng(derive_streams(config).init);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double p = config.init.param;
    if (config.init.kind == InitSpec::Kind::gaussian) {
        const double log_norm =
            -0.5 * static_cast<double>(d) * std::log(2.0 * kPi * p * p);
        for (std::size_t i = 0; i < n; ++i) {
            double sq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                double x = p * gauss(rng);
                cloud.positions(i, j) = x;
                sq += x * x;
            }
            if (track) cloud.log_density[i] = log_norm - sq / (2.0 * p * p);
        }
    } else {
        const double log_density = -log_ball_volume(d, p);
        for (std::size_t i = 0; i < n; ++i) {
            double norm2 = 0.0;
            std::vector<double> g(d);
            do {
                norm2 = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    g[j] = gauss(rng);
                    norm2 += g[j] * g[j];
                }
            } while (norm2 == 0.0);
            double radius = p * std::pow(unif(rng), 1.0 / static_cast<double>(d));
            double scale = radius / std::sqrt(norm2);
            for (std::size_t j = 0; j < d; ++j) cloud.positions(i, j) = scale * g[j];
            if (track) cloud.log_density[i] = log_density;
        }
    }
    return cloud;
}

std::vector<double> scott_bandwidth(const Mat& cloud) {
    const std::size_t n = cloud.rows, d = cloud.cols;
    const double factor =
        std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
    std::vector<double> bw(d);
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += cloud(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double c = cloud(i, j) - mean;
            var += c * c;
        }
        var /= static_cast<double>(n);
        bw[j] = std::sqrt(var) * factor;
    }
    return bw;
}

Mat kde_score_at(const Mat& cloud, const Mat& pts, const std::vector<double>& bandwidth) {
    const std::size_t n = cloud.rows, d = cloud.cols;
    Mat score(pts.rows, d);
    std::vector<double> inv_bw2(d);
    for (std::size_t j = 0; j < d; ++j) inv_bw2[j] = 1.0 / (bandwidth[j] * bandwidth[j]);
    parallel_for(pts.rows, [&](std::size_t r) {
        thread_local std::vector<double> energy;
        energy.resize(n);
        const double* y = pts.row(r);
        double emin = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const double* x = cloud.row(i);
            double e = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                double c = y[j] - x[j];
                e += c * c * inv_bw2[j];
            }
            energy[i] = 0.5 * e;
            emin = std::min(emin, energy[i]);
        }
        double wsum = 0.0;
        double* out = score.row(r);
        for (std::size_t j = 0; j < d; ++j) out[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double w = std::exp(emin - energy[i]);
            wsum += w;
            const double* x = cloud.row(i);
            for (std::size_t j = 0; j < d; ++j) out[j] += w * (x[j] - y[j]);
        }
        for (std::size_t j = 0; j < d; ++j) out[j] *= inv_bw2[j] / wsum;
    });
    return score;
}

Mat estimate_score(const ParticleCloud& cloud, double bandwidth) {
    if (cloud.positions.rows < 2) throw std::invalid_argument("score needs >= 2 particles");
    Mat s = kde_score_at(cloud.positions, cloud.positions,
                         std::vector<double>(cloud.positions.cols, bandwidth));
    if (!all_finite(s)) throw std::runtime_error("score overflow");
    return s;
}

double divergence_of_drift(const std::function<void(const double*, double*)>& field,
                           const double* x, std::size_t dim, double fd_epsilon) {
    if (!(fd_epsilon > 0.0)) throw std::invalid_argument("fd_epsilon must be positive");
    std::vector<double> xp(x, x + dim), f(dim);
    double div = 0.0;
    for (std::size_t m = 0; m < dim; ++m) {
        xp[m] = x[m] + fd_epsilon;
        field(xp.data(), f.data());
        double forward = f[m];
        xp[m] = x[m] - fd_epsilon;
        field(xp.data(), f.data());
        div += (forward - f[m]) / (2.0 * fd_epsilon);
        xp[m] = x[m];
    }
    if (!std::isfinite(div)) throw std::runtime_error("non-finite divergence");
    return div;
}

ParticleCloud stochastic_step(const ParticleCloud& cloud, const sliced::SlicedTarget& targets,
                              const sliced::ProjectionSet& ps, const FlowConfig& config,
                              std::mt19937_64& rng) {
    if (config.mode != Mode::stochastic)
        throw std::invalid_argument("stochastic_step requires stochastic mode");
    return step_stochastic_impl(cloud, targets, ps, config, rng, nullptr);
}

ParticleCloud liouville_step(const ParticleCloud& cloud, const sliced::SlicedTarget& targets,
                             const sliced::ProjectionSet& ps, const FlowConfig& config) {
    if (config.mode != Mode::liouville)
        throw std::invalid_argument("liouville_step requires liouville mode");
    if (!cloud.has_log_density()) throw std::invalid_argument("log density missing");
    return step_liouville_impl(cloud, targets, ps, config, nullptr);
}

ParticleCloud advect_with_field(const ParticleCloud& cloud,
                                const std::function<void(const double*, double*)>& field,
                                double h, int steps, double fd_epsilon) {
    ParticleCloud cur = cloud;
    const std::size_t n = cur.positions.rows, d = cur.positions.cols;
    const bool track = cur.has_log_density();
    for (int k = 0; k < steps; ++k) {
        Mat next(n, d);
        std::vector<double> div(n, 0.0);
        parallel_for(n, [&](std::size_t i) {
            std::vector<double> f(d);
            field(cur.positions.row(i), f.data());
            for (std::size_t j = 0; j < d; ++j) next(i, j) = cur.positions(i, j) + h * f[j];
            if (track) div[i] = divergence_of_drift(field, cur.positions.row(i), d, fd_epsilon);
        });
        cur.positions = std::move(next);
        if (track)
            for (std::size_t i = 0; i < n; ++i) cur.log_density[i] -= h * div[i];
        cur.step += 1;
    }
    return cur;
}

RunRecord run_flow_groups(const std::vector<std::pair<const Mat*, double>>& groups,
                          const FlowConfig& config) {
    validate(config);
    if (groups.empty()) throw std::invalid_argument("empty sample");
    for (const auto& [g, w] : groups) {
        if (g == nullptr || g->empty()) throw std::invalid_argument("empty sample");
        if (g->cols != config.dim) throw std::invalid_argument("target dimension mismatch");
        if (!(w > 0.0)) throw std::invalid_argument("group weight must be positive");
    }

    const Streams streams = derive_streams(config);
    auto ps = sliced::sample_directions(config.dim, static_cast<std::size_t>(config.n_theta),
                                        streams.dir);
    auto target = sliced::SlicedTarget::build(groups, ps, config.num_quantiles);

    RunRecord rec;
    rec.config = config;
    rec.seed = config.seed;

    ParticleCloud cloud = init_cloud(config);
    rec.initial_cloud = cloud;
    std::mt19937_64 rng(streams.noise);

    auto wants_snapshot = [&](int step) {
        return std::find(config.snapshot_steps.begin(), config.snapshot_steps.end(), step) !=
               config.snapshot_steps.end();
    };
    if (wants_snapshot(0)) rec.snapshots.emplace_back(0, cloud);

    for (int k = 0; k < config.K; ++k) {
        auto t0 = std::chrono::steady_clock::now();
        if (config.redraw_directions && k > 0) {
            ps = sliced::sample_directions(config.dim, static_cast<std::size_t>(config.n_theta),
                                           mix_seed(streams.dir, static_cast<std::uint64_t>(k)));
            target = sliced::SlicedTarget::build(groups, ps, config.num_quantiles);
        }
        if (config.record_tables)
            rec.step_tables.push_back(snapshot_tables(
                sliced::project_tables(cloud.positions, ps), config.table_quantiles));
        double mean_drift = 0.0;
        try {
            if (config.mode == Mode::stochastic)
                cloud = step_stochastic_impl(cloud, target, ps, config, rng, &mean_drift);
            else
                cloud = step_liouville_impl(cloud, target, ps, config, &mean_drift);
        } catch (const std::exception& e) {
            rec.error = std::string(e.what()) + " at step " + std::to_string(k);
            if (config.record_tables) rec.step_tables.pop_back();
            break;
        }
        double loss = sliced::sw2_to_target(cloud.positions, target, ps, config.num_quantiles);
        rec.sw_cost.push_back(loss);
        rec.sw_cost_db.push_back(10.0 * std::log10(loss));
        rec.mean_drift.push_back(mean_drift);
        rec.step_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        if (wants_snapshot(k + 1)) rec.snapshots.emplace_back(k + 1, cloud);
    }
    rec.final_cloud = std::move(cloud);
    return rec;
}

RunRecord run_flow(const Mat& target, const FlowConfig& config) {
    return run_flow_groups({{&target, 1.0}}, config);
}

ReplayResult replay_flow(const RunRecord& record,
                         const std::vector<std::pair<const Mat*, double>>& groups,
                         std::size_t n_fresh, std::uint64_t seed) {
    if (record.step_tables.empty())
        throw std::invalid_argument("record has no replay tables");
    if (record.config.redraw_directions)
        throw std::invalid_argument("replay needs frozen directions");
    FlowConfig cfg = record.config;
    const Streams streams = derive_streams(cfg);
    auto ps = sliced::sample_directions(cfg.dim, static_cast<std::size_t>(cfg.n_theta),
                                        streams.dir);
    auto target = sliced::SlicedTarget::build(groups, ps, cfg.num_quantiles);

    FlowConfig fresh_cfg = cfg;
    fresh_cfg.n_particles = n_fresh;
    fresh_cfg.seed = seed;
    fresh_cfg.dir_seed = fresh_cfg.init_seed = fresh_cfg.noise_seed = 0;
    ParticleCloud cloud = init_cloud(fresh_cfg);
    std::mt19937_64 rng(derive_streams(fresh_cfg).noise);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const std::size_t n = cloud.positions.rows, d = cloud.positions.cols;
    ReplayResult res;
    res.sw_cost.reserve(record.step_tables.size());
    for (std::size_t k = 0; k < record.step_tables.size(); ++k) {
        const auto& source = record.step_tables[k];
        Mat drift(n, d);
        parallel_for(n, [&](std::size_t i) {
            sliced::drift_at(cloud.positions.row(i), source, target, ps, drift.row(i));
        });
        if (cfg.mode == Mode::liouville && cfg.lambda > 0.0) {
            auto bw = cfg.kde_bandwidth > 0.0
                          ? std::vector<double>(d, cfg.kde_bandwidth)
                          : scott_bandwidth(cloud.positions);
            Mat sc = kde_score_at(cloud.positions, cloud.positions, bw);
            if (!all_finite(sc)) throw std::runtime_error("score overflow");
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j) drift(i, j) -= cfg.lambda * sc(i, j);
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) cloud.positions(i, j) += cfg.h * drift(i, j);
        if (cfg.mode == Mode::stochastic && cfg.lambda > 0.0) {
            const double amp = std::sqrt(2.0 * cfg.lambda * cfg.h);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j) cloud.positions(i, j) += amp * gauss(rng);
        }
        res.sw_cost.push_back(
            sliced::sw2_to_target(cloud.positions, target, ps, cfg.num_quantiles));
    }
    double peak = 1e-12;
    for (double v : record.sw_cost) peak = std::max(peak, std::abs(v));
    double gap = 0.0;
    for (std::size_t k = 0; k < res.sw_cost.size() && k < record.sw_cost.size(); ++k)
        gap = std::max(gap, std::abs(res.sw_cost[k] - record.sw_cost[k]) / peak);
    res.max_rel_gap = gap;
    res.final_positions = std::move(cloud.positions);
    return res;
}

}  // namespace swflow::flow
