#include "swflow/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "swflow/ot1d.hpp"

namespace swflow::data {

namespace {

void validate_spec(const GmmSpec& spec) {
    if (spec.components.empty()) throw std::invalid_argument("invalid gmm spec: no components");
    const std::size_t d = spec.dim();
    double wsum = 0.0;
    for (const auto& c : spec.components) {
        if (!(c.weight > 0.0)) throw std::invalid_argument("invalid gmm spec: weight <= 0");
        if (c.mean.size() != d || c.var.size() != d)
            throw std::invalid_argument("invalid gmm spec: dimension mismatch");
        for (double v : c.var)
            if (!(v > 0.0)) throw std::invalid_argument("invalid gmm spec: variance <= 0");
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-12)
        throw std::invalid_argument("invalid gmm spec: weights must sum to 1");
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    cells.push_back(cur);
    for (auto& c : cells) {
        std::size_t b = c.find_first_not_of(" \t");
        std::size_t e = c.find_last_not_of(" \t");
        c = (b == std::string::npos) ? std::string() : c.substr(b, e - b + 1);
    }
    return cells;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
    if (cell.empty())
        throw std::invalid_argument("row " + std::to_string(row) + " column '" + col +
                                    "': missing value");
    const char* s = cell.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0')
        throw std::invalid_argument("row " + std::to_string(row) + " column '" + col +
                                    "': cannot parse '" + cell + "'");
    return v;
}

std::vector<int> encode_sensitive(const std::vector<double>& raw, const SensitiveCoding& coding) {
    std::vector<int> labels(raw.size());
    if (coding.mode == SensitiveCoding::Mode::threshold) {
        for (std::size_t i = 0; i < raw.size(); ++i)
            labels[i] = raw[i] > coding.threshold ? 1 : 0;
    } else if (coding.mode == SensitiveCoding::Mode::deciles) {
        auto cdf = ot1d::Empirical1D::from_unsorted(raw);
        for (std::size_t i = 0; i < raw.size(); ++i) {
            int dec = static_cast<int>(10.0 * ot1d::empirical_cdf(cdf, raw[i]));
            labels[i] = std::clamp(dec, 0, 9);
        }
    } else {
        std::map<double, int> seen;
        for (double v : raw) seen.emplace(v, 0);
        int next = 0;
        for (auto& [_, idx] : seen) idx = next++;
        for (std::size_t i = 0; i < raw.size(); ++i) labels[i] = seen.at(raw[i]);
    }
    // re-index densely in sorted label order
    std::map<int, int> dense;
    for (int s : labels) dense.emplace(s, 0);
    int next = 0;
    for (auto& [_, idx] : dense) idx = next++;
    for (auto& s : labels) s = dense.at(s);
    return labels;
}

}  // namespace

GmmSpec random_gmm_spec(std::size_t d, std::size_t n_components, std::uint64_t seed) {
    if (d == 0 || n_components == 0) throw std::invalid_argument("invalid gmm spec: empty");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> std_draw(0.5, 1.0);
    std::uniform_real_distribution<double> weight_draw(0.5, 1.5);

    GmmSpec spec;
    spec.seed = seed;
    spec.components.resize(n_components);
    double max_std = 0.0;
    for (auto& c : spec.components) {
        c.mean.resize(d);
        c.var.resize(d);
        for (std::size_t j = 0; j < d; ++j) {
            double s = std_draw(rng);
            c.var[j] = s * s;
            max_std = std::max(max_std, s);
        }
    }
    const double min_dist = 4.0 * max_std;
    double box = 10.0;
    std::vector<std::vector<double>> placed;
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    int stale = 0;
    while (placed.size() < n_components) {
        std::vector<double> cand(d);
        for (std::size_t j = 0; j < d; ++j) cand[j] = box * unit(rng);
        bool ok = true;
        for (const auto& q : placed) {
            double dist2 = 0.0;
            for (std::size_t j = 0; j < d; ++j) dist2 += (cand[j] - q[j]) * (cand[j] - q[j]);
            if (dist2 < min_dist * min_dist) {
                ok = false;
                break;
            }
        }
        if (ok) {
            placed.push_back(std::move(cand));
            stale = 0;
        } else if (++stale >= 1000) {
            box *= 1.5;  // box too crowded for the separation constraint
            stale = 0;
        }
    }
    double wsum = 0.0;
    for (auto& c : spec.components) {
        c.weight = weight_draw(rng);
        wsum += c.weight;
    }
    for (std::size_t i = 0; i < n_components; ++i) {
        spec.components[i].weight /= wsum;
        spec.components[i].mean = placed[i];
    }
    return spec;
}

Mat sample_gmm(const GmmSpec& spec, std::size_t n) {
    validate_spec(spec);
    if (n == 0) throw std::invalid_argument("n must be >= 1");
    const std::size_t d = spec.dim();
    std::vector<double> cum;
    cum.reserve(spec.components.size());
    double acc = 0.0;
    for (const auto& c : spec.components) {
        acc += c.weight;
        cum.push_back(acc);
    }
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        double u = unif(rng) * acc;
        std::size_t idx = static_cast<std::size_t>(
            std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
        if (idx >= spec.components.size()) idx = spec.components.size() - 1;
        const auto& c = spec.components[idx];
        for (std::size_t j = 0; j < d; ++j)
            out(i, j) = c.mean[j] + std::sqrt(c.var[j]) * gauss(rng);
    }
    return out;
}

std::string gmm_spec_to_json(const GmmSpec& spec) {
    nlohmann::json j;
    j["seed"] = spec.seed;
    j["components"] = nlohmann::json::array();
    for (const auto& c : spec.components)
        j["components"].push_back({{"weight", c.weight}, {"mean", c.mean}, {"var", c.var}});
    return j.dump(2);
}

GmmSpec gmm_spec_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    GmmSpec spec;
    spec.seed = j.value("seed", 0ULL);
    for (const auto& c : j.at("components")) {
        GmmComponent comp;
        comp.weight = c.at("weight").get<double>();
        comp.mean = c.at("mean").get<std::vector<double>>();
        comp.var = c.at("var").get<std::vector<double>>();
        spec.components.push_back(std::move(comp));
    }
    validate_spec(spec);
    return spec;
}

fair::GroupedDataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty file: " + path);
    auto header = split_line(line);

    auto find_col = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw std::invalid_argument("missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t sens_idx = find_col(schema.sensitive_col);
    const std::size_t target_idx = find_col(schema.target_col);
    std::vector<std::size_t> feat_idx;
    if (schema.feature_cols.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (j != sens_idx && j != target_idx) feat_idx.push_back(j);
    } else {
        for (const auto& name : schema.feature_cols) feat_idx.push_back(find_col(name));
    }

    std::vector<std::vector<double>> feat_rows;
    std::vector<double> sens_raw, target;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto cells = split_line(line);
        if (cells.size() != header.size())
            throw std::invalid_argument("row " + std::to_string(row) + ": expected " +
                                        std::to_string(header.size()) + " cells, got " +
                                        std::to_string(cells.size()));
        std::vector<double> f(feat_idx.size());
        for (std::size_t j = 0; j < feat_idx.size(); ++j)
            f[j] = parse_cell(cells[feat_idx[j]], row, header[feat_idx[j]]);
        feat_rows.push_back(std::move(f));
        sens_raw.push_back(parse_cell(cells[sens_idx], row, schema.sensitive_col));
        target.push_back(parse_cell(cells[target_idx], row, schema.target_col));
    }
    if (feat_rows.empty()) throw std::invalid_argument("empty dataset: " + path);

    fair::GroupedDataset ds;
    ds.features = Mat(feat_rows.size(), feat_idx.size());
    for (std::size_t i = 0; i < feat_rows.size(); ++i)
        for (std::size_t j = 0; j < feat_idx.size(); ++j) ds.features(i, j) = feat_rows[i][j];
    ds.sensitive = encode_sensitive(sens_raw, schema.coding);
    ds.target = std::move(target);
    ds.recompute_weights();
    for (std::size_t s = 0; s < ds.group_weights.size(); ++s)
        if (ds.group_weights[s] == 0.0)
            throw std::invalid_argument("empty group " + std::to_string(s));
    return ds;
}

void save_csv(const std::string& path, const fair::GroupedDataset& ds, const CsvSchema& schema) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    std::vector<std::string> feats = schema.feature_cols;
    if (feats.empty())
        for (std::size_t j = 0; j < ds.features.cols; ++j)
            feats.push_back("x" + std::to_string(j + 1));
    for (const auto& name : feats) out << name << ",";
    out << schema.sensitive_col << "," << schema.target_col << "\n";
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.features.cols; ++j)
            out << fmt_g17(ds.features(i, j)) << ",";
        out << ds.sensitive[i] << "," << fmt_g17(ds.target[i]) << "\n";
    }
}

std::pair<fair::GroupedDataset, fair::GroupedDataset> split(const fair::GroupedDataset& data,
                                                            std::size_t n_train,
                                                            std::uint64_t seed) {
    const std::size_t n = data.n();
    if (n_train == 0 || n_train >= n)
        throw std::invalid_argument("n_train must be in [1, n-1]");
    const int s_count = data.n_groups();

    auto take = [&](const std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi) {
        fair::GroupedDataset out;
        out.features = Mat(hi - lo, data.features.cols);
        out.sensitive.resize(hi - lo);
        out.target.resize(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
            std::size_t src = idx[i];
            for (std::size_t j = 0; j < data.features.cols; ++j)
                out.features(i - lo, j) = data.features(src, j);
            out.sensitive[i - lo] = data.sensitive[src];
            out.target[i - lo] = data.target[src];
        }
        out.recompute_weights();
        return out;
    };

    for (int attempt = 0; attempt < 100; ++attempt) {
        auto perm = random_permutation(n, mix_seed(seed, static_cast<std::uint64_t>(attempt)));
        std::vector<int> train_count(static_cast<std::size_t>(s_count), 0);
        std::vector<int> test_count(static_cast<std::size_t>(s_count), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto& c = (i < n_train) ? train_count : test_count;
            c[static_cast<std::size_t>(data.sensitive[perm[i]])] += 1;
        }
        bool ok = true;
        for (int s = 0; s < s_count; ++s)
            if (train_count[static_cast<std::size_t>(s)] < 2 ||
                test_count[static_cast<std::size_t>(s)] < 2) {
                ok = false;
                break;
            }
        if (!ok) continue;
        return {take(perm, 0, n_train), take(perm, n_train, n)};
    }
    throw std::runtime_error("split cannot keep every group on both sides");
}

fair::GroupedDataset synth_health_surrogate(std::size_t n, std::size_t n_conditions,
                                            std::uint64_t seed, double noise) {
    if (n < 100) throw std::invalid_argument("n must be >= 100");
    if (n_conditions == 0) throw std::invalid_argument("n_conditions must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const double floor_prev = std::max(0.05, 45.0 / static_cast<double>(n));
    Mat cond(n, n_conditions);
    for (std::size_t c = 0; c < n_conditions; ++c) {
        double prev = floor_prev + (0.5 - floor_prev) * unif(rng);
        for (int attempt = 0;; ++attempt) {
            int count = 0;
            for (std::size_t i = 0; i < n; ++i) {
                double v = unif(rng) < prev ? 1.0 : 0.0;
                cond(i, c) = v;
                count += v > 0.5;
            }
            if (count >= 30) break;  // prevalence floor: >= 30 positives per condition
            if (attempt >= 1000) throw std::runtime_error("condition prevalence unreachable");
        }
    }

    // sensitive label: median split of a score driven by the first few conditions
    const std::size_t n_corr = std::max<std::size_t>(3, n_conditions / 8);
    std::vector<double> score(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < std::min(n_corr, n_conditions); ++c) s += cond(i, c);
        score[i] = s + 0.5 * gauss(rng);
    }
    std::vector<double> sorted_score = score;
    std::nth_element(sorted_score.begin(), sorted_score.begin() + n / 2, sorted_score.end());
    const double median = sorted_score[n / 2];
    std::vector<int> sens(n);
    for (std::size_t i = 0; i < n; ++i) sens[i] = score[i] > median ? 1 : 0;

    // sparse positive coefficients give the spending-like right skew
    std::vector<double> beta(n_conditions, 0.0);
    for (std::size_t c = 0; c < n_conditions; ++c)
        if (unif(rng) < 0.2) beta[c] = -std::log(std::max(unif(rng), 1e-300));
    const double group_coef = 0.5;
    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) {
        double t = group_coef * sens[i];
        for (std::size_t c = 0; c < n_conditions; ++c) t += beta[c] * cond(i, c);
        target[i] = t + noise * gauss(rng);
    }
    double lo = *std::min_element(target.begin(), target.end());
    double hi = *std::max_element(target.begin(), target.end());
    if (hi - lo > 1e-12)
        for (auto& t : target) t = (t - lo) / (hi - lo);

    fair::GroupedDataset ds;
    ds.features = std::move(cond);
    ds.sensitive = std::move(sens);
    ds.target = std::move(target);
    ds.recompute_weights();
    return ds;
}

fair::GroupedDataset synth_grouped_gaussian(std::size_t n, std::size_t n_features,
                                            double shift, double noise, std::uint64_t seed) {
    if (n < 8) throw std::invalid_argument("n must be >= 8");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> w(n_features);
    const double scale = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(n_features, 1)));
    for (auto& v : w) v = scale * gauss(rng);

    fair::GroupedDataset ds;
    ds.features = Mat(n, n_features);
    ds.sensitive.resize(n);
    ds.target.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds.sensitive[i] = unif(rng) < 0.5 ? 0 : 1;
        double t = shift * ds.sensitive[i];
        for (std::size_t j = 0; j < n_features; ++j) {
            double x = gauss(rng);
            ds.features(i, j) = x;
            t += w[j] * x;
        }
        ds.target[i] = t + noise * gauss(rng);
    }
    ds.recompute_weights();
    return ds;
}

}  // namespace swflow::data
