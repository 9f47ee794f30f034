#include "swflow/fair.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace swflow::fair {

namespace {

std::vector<std::vector<double>> group_predictions(const LinearModel& base,
                                                   const GroupedDataset& data) {
    std::vector<std::vector<double>> per_group(static_cast<std::size_t>(data.n_groups()));
    const std::size_t p = data.features.cols;
    for (std::size_t i = 0; i < data.n(); ++i) {
        int s = data.sensitive[i];
        per_group[static_cast<std::size_t>(s)].push_back(
            base.predict(data.features.row(i), p, s));
    }
    return per_group;
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

void GroupedDataset::recompute_weights() {
    int n_groups = 0;
    for (int s : sensitive) n_groups = std::max(n_groups, s + 1);
    std::vector<double> counts(static_cast<std::size_t>(n_groups), 0.0);
    for (int s : sensitive) counts[static_cast<std::size_t>(s)] += 1.0;
    group_weights.resize(counts.size());
    for (std::size_t s = 0; s < counts.size(); ++s)
        group_weights[s] = counts[s] / static_cast<double>(sensitive.size());
}

double LinearModel::predict(const double* x, std::size_t p, int s) const {
    double acc = intercepts[static_cast<std::size_t>(s)];
    for (std::size_t j = 0; j < p; ++j) acc += beta[j] * x[j];
    return acc;
}

LinearModel fit_base_regressor(const GroupedDataset& train, double ridge) {
    if (ridge < 0.0) throw std::invalid_argument("ridge must be nonnegative");
    const std::size_t n = train.n(), p = train.features.cols;
    const std::size_t s_count = static_cast<std::size_t>(train.n_groups());
    const std::size_t q = p + s_count;

    Eigen::MatrixXd a(n, q);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) a(i, j) = train.features(i, j);
        for (std::size_t s = 0; s < s_count; ++s)
            a(i, p + s) = (train.sensitive[i] == static_cast<int>(s)) ? 1.0 : 0.0;
        y(i) = train.target[i];
    }
    Eigen::MatrixXd m = a.transpose() * a;
    // penalize slopes only; the one-hot intercept block stays free
    for (std::size_t j = 0; j < p; ++j) m(j, j) += ridge;
    Eigen::VectorXd b = a.transpose() * y;

    Eigen::VectorXd coef;
    if (ridge == 0.0) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
        if (!lu.isInvertible()) throw std::invalid_argument("singular design; set ridge > 0");
        coef = lu.solve(b);
    } else {
        coef = m.ldlt().solve(b);
    }

    LinearModel model;
    model.beta.assign(coef.data(), coef.data() + p);
    model.intercepts.assign(coef.data() + p, coef.data() + q);
    return model;
}

FairPredictor build_fair_predictor(const LinearModel& base, const GroupedDataset& train,
                                   FairMethod method, double alpha,
                                   const flow::FlowConfig& flow_config) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in [0,1]");
    auto per_group = group_predictions(base, train);
    for (const auto& g : per_group)
        if (g.size() < 2) throw std::invalid_argument("every group needs >= 2 rows");

    FairPredictor fp;
    fp.base = base;
    fp.alpha = alpha;
    fp.group_weights = train.group_weights;
    fp.group_cdf.reserve(per_group.size());
    for (auto& g : per_group)
        fp.group_cdf.push_back(ot1d::Empirical1D::from_unsorted(g, flow_config.num_quantiles));

    if (method == FairMethod::exact_1d) {
        std::vector<std::pair<ot1d::Empirical1D, double>> groups;
        for (std::size_t s = 0; s < fp.group_cdf.size(); ++s)
            groups.emplace_back(fp.group_cdf[s], fp.group_weights[s]);
        fp.qstar = bary::exact_barycenter_1d(groups, flow_config.num_quantiles);
    } else {
        bary::BarycenterProblem problem;
        for (std::size_t s = 0; s < per_group.size(); ++s) {
            Mat col(per_group[s].size(), 1);
            col.a = per_group[s];
            problem.groups.emplace_back(std::move(col), fp.group_weights[s]);
        }
        problem.config = flow_config;
        problem.config.dim = 1;
        if (problem.config.n_particles == 0) problem.config.n_particles = train.n();
        auto rec = bary::run_barycenter_flow(problem);
        if (!rec.ok()) throw std::runtime_error("barycenter flow failed: " + rec.error);
        auto cloud = ot1d::Empirical1D::from_unsorted(rec.final_cloud.positions.a,
                                                      flow_config.num_quantiles);
        std::vector<double> table(static_cast<std::size_t>(flow_config.num_quantiles));
        for (int j = 1; j <= flow_config.num_quantiles; ++j)
            table[static_cast<std::size_t>(j - 1)] =
                ot1d::quantile_function(cloud, (j - 0.5) / flow_config.num_quantiles);
        fp.qstar = ot1d::Empirical1D::from_sorted(std::move(table), flow_config.num_quantiles);
    }
    return fp;
}

double predict(const FairPredictor& fp, const double* x, std::size_t p, int s) {
    if (s < 0 || static_cast<std::size_t>(s) >= fp.group_cdf.size())
        throw std::invalid_argument("unknown sensitive value");
    double y0 = fp.base.predict(x, p, s);
    double y1 = ot1d::quantile_function(
        fp.qstar, ot1d::empirical_cdf(fp.group_cdf[static_cast<std::size_t>(s)], y0));
    return (1.0 - fp.alpha) * y0 + fp.alpha * y1;
}

std::vector<double> predict_all(const FairPredictor& fp, const GroupedDataset& data) {
    std::vector<double> out(data.n());
    for (std::size_t i = 0; i < data.n(); ++i)
        out[i] = predict(fp, data.features.row(i), data.features.cols, data.sensitive[i]);
    return out;
}

double mse(const std::vector<double>& predictions, const std::vector<double>& targets) {
    if (predictions.size() != targets.size())
        throw std::invalid_argument("length mismatch");
    if (predictions.empty()) throw std::invalid_argument("empty sample");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        double d = predictions[i] - targets[i];
        acc += d * d;
    }
    return acc / static_cast<double>(predictions.size());
}

double ks_distance(const std::vector<double>& predictions, const std::vector<int>& groups) {
    if (predictions.size() != groups.size()) throw std::invalid_argument("length mismatch");
    int s_count = 0;
    for (int s : groups) s_count = std::max(s_count, s + 1);
    if (s_count < 2) throw std::invalid_argument("empty group in KS");
    std::vector<std::vector<double>> per_group(static_cast<std::size_t>(s_count));
    for (std::size_t i = 0; i < predictions.size(); ++i)
        per_group[static_cast<std::size_t>(groups[i])].push_back(predictions[i]);
    for (auto& g : per_group) {
        if (g.empty()) throw std::invalid_argument("empty group in KS");
        std::sort(g.begin(), g.end());
    }

    double worst = 0.0;
    for (std::size_t s = 0; s < per_group.size(); ++s) {
        for (std::size_t t = s + 1; t < per_group.size(); ++t) {
            const auto& a = per_group[s];
            const auto& b = per_group[t];
            const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
            std::size_t ia = 0, ib = 0;
            double sup = 0.0;
            while (ia < a.size() || ib < b.size()) {
                double v = (ib == b.size() || (ia < a.size() && a[ia] <= b[ib])) ? a[ia] : b[ib];
                while (ia < a.size() && a[ia] == v) ++ia;
                while (ib < b.size() && b[ib] == v) ++ib;
                sup = std::max(sup, std::abs(static_cast<double>(ia) / na -
                                             static_cast<double>(ib) / nb));
            }
            worst = std::max(worst, sup);
        }
    }
    return worst;
}

SweepResult pareto_sweep(const GroupedDataset& train, const GroupedDataset& test,
                         const LinearModel& base, FairMethod method,
                         const std::vector<double>& alphas, const std::vector<double>& lambdas,
                         const std::vector<std::uint64_t>& seeds,
                         const flow::FlowConfig& flow_config) {
    if (alphas.empty() || lambdas.empty() || seeds.empty())
        throw std::invalid_argument("empty sweep grid");

    SweepResult result;
    const std::size_t p = test.features.cols;
    // per (lambda, seed): base and remapped predictions on the test split;
    // alphas are pure blends of the two
    for (double lambda : lambdas) {
        std::vector<std::vector<double>> mse_by_alpha(alphas.size());
        std::vector<std::vector<double>> ks_by_alpha(alphas.size());
        for (std::uint64_t seed : seeds) {
            flow::FlowConfig cfg = flow_config;
            cfg.lambda = lambda;
            cfg.seed = seed;
            FairPredictor fp = build_fair_predictor(base, train, method, 1.0, cfg);
            std::vector<double> y0(test.n()), y1(test.n());
            for (std::size_t i = 0; i < test.n(); ++i) {
                int s = test.sensitive[i];
                if (s < 0 || static_cast<std::size_t>(s) >= fp.group_cdf.size())
                    throw std::invalid_argument("unknown sensitive value");
                y0[i] = base.predict(test.features.row(i), p, s);
                y1[i] = ot1d::quantile_function(
                    fp.qstar,
                    ot1d::empirical_cdf(fp.group_cdf[static_cast<std::size_t>(s)], y0[i]));
            }
            for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
                double alpha = alphas[ai];
                std::vector<double> blend(test.n());
                for (std::size_t i = 0; i < test.n(); ++i)
                    blend[i] = (1.0 - alpha) * y0[i] + alpha * y1[i];
                SweepRow row;
                row.alpha = alpha;
                row.lambda = lambda;
                row.seed = seed;
                row.mse = mse(blend, test.target);
                row.ks = ks_distance(blend, test.sensitive);
                result.rows.push_back(row);
                mse_by_alpha[ai].push_back(row.mse);
                ks_by_alpha[ai].push_back(row.ks);
            }
        }
        for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
            SweepAggregate agg;
            agg.alpha = alphas[ai];
            agg.lambda = lambda;
            double m = 0.0, k = 0.0;
            for (double v : mse_by_alpha[ai]) m += v;
            for (double v : ks_by_alpha[ai]) k += v;
            agg.mse_mean = m / static_cast<double>(seeds.size());
            agg.ks_mean = k / static_cast<double>(seeds.size());
            agg.mse_std = sample_std(mse_by_alpha[ai]);
            agg.ks_std = sample_std(ks_by_alpha[ai]);
            result.aggregates.push_back(agg);
        }
    }
    return result;
}

}  // namespace swflow::fair
