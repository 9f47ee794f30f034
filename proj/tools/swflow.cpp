// swflow: sliced-Wasserstein flows, barycenters, and fair-regression sweeps.
//
// Subcommands: gmm-flow, barycenter, fair, validate. Config-file-first (JSON)
// with flag overrides; every numeric CSV cell goes through fmt_g17 so a rerun
// with the same config is byte-identical (wall-clock timings live only in the
// JSON records).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "swflow/barycenter.hpp"
#include "swflow/core.hpp"
#include "swflow/data.hpp"
#include "swflow/fair.hpp"
#include "swflow/flow.hpp"
#include "swflow/ot1d.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using swflow::Mat;
namespace fl = swflow::flow;
namespace ot = swflow::ot1d;

namespace {

struct CliOverrides {
    std::string config_path;
    std::string mode;    // stochastic | liouville | both
    std::string out;
    std::string alphas;  // comma-separated
    std::int64_t seed = -1;
    int seeds = 0;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    int test_particles = -1;
    bool quiet = false;
    bool validate_only = false;
};

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("bad config JSON in " + path + ": " + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    return j;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (cell.empty()) continue;
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw std::invalid_argument("cannot parse number '" + cell + "'");
        }
    }
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

void apply_overrides(json& cfg, const CliOverrides& cli) {
    if (!cli.mode.empty()) cfg["flow"]["mode"] = cli.mode;
    if (!cli.out.empty()) cfg["out"] = cli.out;
    if (cli.seed >= 0) cfg["seed"] = cli.seed;
    if (cli.seeds > 0) cfg["seeds"] = cli.seeds;
    if (!std::isnan(cli.lambda)) cfg["flow"]["lambda"] = cli.lambda;
    if (!cli.alphas.empty()) cfg["alphas"] = parse_double_list(cli.alphas);
    if (cli.test_particles >= 0) cfg["test_particles"] = cli.test_particles;
    if (cli.quiet) cfg["quiet"] = true;
}

fl::Mode mode_from_name(const std::string& name) {
    if (name == "stochastic") return fl::Mode::stochastic;
    if (name == "liouville") return fl::Mode::liouville;
    throw std::invalid_argument("unknown mode '" + name + "'");
}

std::string mode_name(fl::Mode mode) {
    return mode == fl::Mode::stochastic ? "stochastic" : "liouville";
}

std::vector<fl::Mode> modes_from_config(const json& cfg, const std::string& fallback) {
    std::string m = cfg.value("flow", json::object()).value("mode", fallback);
    if (m == "both") return {fl::Mode::stochastic, fl::Mode::liouville};
    return {mode_from_name(m)};
}

fl::FlowConfig flow_from_json(const json& cfg, const json& defaults) {
    json f = defaults;
    const json section = cfg.value("flow", json::object());
    for (const auto& [key, value] : section.items()) f[key] = value;
    fl::FlowConfig c;
    std::string m = f.value("mode", "stochastic");
    c.mode = m == "both" ? fl::Mode::stochastic : mode_from_name(m);
    c.h = f.value("h", 0.5);
    c.lambda = f.value("lambda", 0.0);
    c.K = f.value("K", 100);
    c.n_theta = f.value("n_theta", 30);
    c.num_quantiles = f.value("num_quantiles", 100);
    c.n_particles = f.value("n_particles", 0ULL);
    c.dim = f.value("dim", 0ULL);
    c.kde_bandwidth = f.value("kde_bandwidth", 0.0);
    c.fd_epsilon = f.value("fd_epsilon", 0.0);
    c.seed = cfg.value("seed", 1ULL);
    c.dir_seed = f.value("dir_seed", 0ULL);
    c.init_seed = f.value("init_seed", 0ULL);
    c.noise_seed = f.value("noise_seed", 0ULL);
    if (f.contains("init")) {
        std::string kind = f["init"].value("kind", "gaussian");
        if (kind == "gaussian")
            c.init.kind = fl::InitSpec::Kind::gaussian;
        else if (kind == "uniform_ball")
            c.init.kind = fl::InitSpec::Kind::uniform_ball;
        else
            throw std::invalid_argument("unknown init kind '" + kind + "'");
        c.init.param = f["init"].value("param", 1.0);
    }
    c.redraw_directions = f.value("redraw_directions", false);
    c.record_tables = f.value("record_tables", false);
    c.table_quantiles = f.value("table_quantiles", 64);
    return c;
}

json flow_to_json(const fl::FlowConfig& c) {
    json f;
    f["mode"] = mode_name(c.mode);
    f["h"] = c.h;
    f["lambda"] = c.lambda;
    f["K"] = c.K;
    f["n_theta"] = c.n_theta;
    f["num_quantiles"] = c.num_quantiles;
    f["n_particles"] = c.n_particles;
    f["dim"] = c.dim;
    f["kde_bandwidth"] = c.kde_bandwidth;
    f["fd_epsilon"] = c.fd_epsilon;
    f["seed"] = c.seed;
    f["init"] = {{"kind", c.init.kind == fl::InitSpec::Kind::gaussian ? "gaussian"
                                                                      : "uniform_ball"},
                 {"param", c.init.param}};
    f["redraw_directions"] = c.redraw_directions;
    f["record_tables"] = c.record_tables;
    f["table_quantiles"] = c.table_quantiles;
    f["snapshot_steps"] = c.snapshot_steps;
    return f;
}

// --- artifact writers ------------------------------------------------------

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << text;
}

void write_loss_csv(const fs::path& path, const fl::RunRecord& rec) {
    std::ostringstream out;
    out << "step,sw_cost,sw_cost_db,mean_drift\n";
    for (std::size_t k = 0; k < rec.sw_cost.size(); ++k)
        out << (k + 1) << ',' << swflow::fmt_g17(rec.sw_cost[k]) << ','
            << swflow::fmt_g17(rec.sw_cost_db[k]) << ','
            << swflow::fmt_g17(rec.mean_drift[k]) << '\n';
    write_text(path, out.str());
}

void write_particles_csv(const fs::path& path, const fl::ParticleCloud& cloud) {
    std::ostringstream out;
    for (std::size_t j = 0; j < cloud.positions.cols; ++j)
        out << (j ? "," : "") << "x" << (j + 1);
    if (cloud.has_log_density()) out << ",logrho";
    out << '\n';
    for (std::size_t i = 0; i < cloud.positions.rows; ++i) {
        for (std::size_t j = 0; j < cloud.positions.cols; ++j)
            out << (j ? "," : "") << swflow::fmt_g17(cloud.positions(i, j));
        if (cloud.has_log_density()) out << ',' << swflow::fmt_g17(cloud.log_density[i]);
        out << '\n';
    }
    write_text(path, out.str());
}

json record_to_json(const fl::RunRecord& rec, const std::string& command) {
    json j;
    j["command"] = command;
    j["seed"] = rec.seed;
    j["config"] = flow_to_json(rec.config);
    double total = 0.0;
    for (double s : rec.step_seconds) total += s;
    json summary;
    summary["steps_completed"] = rec.sw_cost.size();
    summary["error"] = rec.error;
    if (!rec.sw_cost.empty()) {
        summary["final_sw_cost"] = rec.sw_cost.back();
        summary["final_sw_cost_db"] = rec.sw_cost_db.back();
        summary["final_mean_drift"] = rec.mean_drift.back();
    }
    summary["total_seconds"] = total;
    summary["mean_step_seconds"] =
        rec.step_seconds.empty() ? 0.0 : total / static_cast<double>(rec.step_seconds.size());
    j["summary"] = summary;
    return j;
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

double sample_mean(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    return v.empty() ? 0.0 : mean / static_cast<double>(v.size());
}

Mat load_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty file: " + path);
    std::size_t cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    std::vector<double> vals;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t got = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::invalid_argument(path + " row " + std::to_string(row) +
                                            ": cannot parse '" + cell + "'");
            }
            ++got;
        }
        if (got != cols)
            throw std::invalid_argument(path + " row " + std::to_string(row) +
                                        ": expected " + std::to_string(cols) + " cells");
    }
    if (row == 0) throw std::invalid_argument("no data rows: " + path);
    Mat m(vals.size() / cols, cols);
    m.a = std::move(vals);
    return m;
}

void log_line(const json& cfg, const std::string& text) {
    if (!cfg.value("quiet", false)) std::cout << text << '\n';
}

fs::path ensure_out(const json& cfg, const std::string& fallback) {
    fs::path out = cfg.value("out", fallback);
    fs::create_directories(out);
    return out;
}

// --- gmm-flow ----------------------------------------------------------------

json gmm_defaults() {
    return {{"h", 1.0},          {"lambda", 1e-4},       {"K", 100},
            {"n_theta", 30},     {"num_quantiles", 100}, {"n_particles", 2000},
            {"mode", "both"},    {"dim", 2}};
}

swflow::data::GmmSpec gmm_spec_from_config(const json& cfg) {
    json g = cfg.value("gmm", json::object());
    if (g.contains("spec_file")) {
        std::ifstream in(g["spec_file"].get<std::string>());
        if (!in)
            throw std::invalid_argument("cannot open: " + g["spec_file"].get<std::string>());
        std::stringstream ss;
        ss << in.rdbuf();
        return swflow::data::gmm_spec_from_json(ss.str());
    }
    std::size_t dim = g.value("dim", cfg.value("flow", json::object()).value("dim", 2ULL));
    std::size_t components = g.value("components", 10ULL);
    std::uint64_t spec_seed = g.value("spec_seed", 7ULL);
    auto spec = swflow::data::random_gmm_spec(dim, components, spec_seed);
    spec.seed = g.value("sample_seed", swflow::mix_seed(spec_seed, 100));
    return spec;
}

int cmd_gmm_flow(json cfg, bool validate_only) {
    auto base_cfg = flow_from_json(cfg, gmm_defaults());
    auto spec = gmm_spec_from_config(cfg);
    base_cfg.dim = spec.dim();
    const std::size_t n_target = cfg.value("gmm", json::object()).value("n_target", 2000ULL);
    const int n_seeds = cfg.value("seeds", 1);
    const int test_particles = cfg.value("test_particles", 0);
    if (n_seeds < 1) throw std::invalid_argument("seeds must be >= 1");
    fl::validate_config(base_cfg);
    if (validate_only) {
        std::cout << "config ok: gmm-flow\n";
        return 0;
    }

    auto out = ensure_out(cfg, "runs/gmm-flow");
    write_text(out / "gmm_spec.json", swflow::data::gmm_spec_to_json(spec));
    auto target = swflow::data::sample_gmm(spec, n_target);

    auto modes = modes_from_config(cfg, "both");
    std::vector<std::string> summary_lines{
        "mode,seed,final_sw_cost,final_sw_cost_db"};
    std::vector<std::pair<std::string, std::vector<double>>> finals;

    for (auto mode : modes) {
        std::vector<double> mode_finals;
        for (int i = 0; i < n_seeds; ++i) {
            fl::FlowConfig run_cfg = base_cfg;
            run_cfg.mode = mode;
            run_cfg.seed = cfg.value("seed", 1ULL) + static_cast<std::uint64_t>(i);
            run_cfg.snapshot_steps = {0, run_cfg.K / 2, run_cfg.K};
            if (test_particles > 0 && i == 0) run_cfg.record_tables = true;

            auto rec = fl::run_flow(target, run_cfg);
            std::string tag = mode_name(mode) + "_seed" + std::to_string(run_cfg.seed);
            auto record = record_to_json(rec, "gmm-flow");

            write_loss_csv(out / ("loss_" + tag + ".csv"), rec);
            for (const auto& [step, cloud] : rec.snapshots)
                write_particles_csv(
                    out / ("particles_" + tag + "_step" + std::to_string(step) + ".csv"),
                    cloud);
            if (!rec.ok()) {
                record["summary"]["error"] = rec.error;
                write_text(out / ("record_" + tag + ".json"), record.dump(2));
                std::cerr << "numeric failure: " << rec.error << '\n';
                return 2;
            }

            if (test_particles > 0 && i == 0) {
                auto replay = fl::replay_flow(rec, {{&target, 1.0}},
                                              static_cast<std::size_t>(test_particles),
                                              swflow::mix_seed(run_cfg.seed, 9001));
                std::ostringstream rp;
                rp << "step,sw_cost\n";
                for (std::size_t k = 0; k < replay.sw_cost.size(); ++k)
                    rp << (k + 1) << ',' << swflow::fmt_g17(replay.sw_cost[k]) << '\n';
                write_text(out / ("replay_" + tag + ".csv"), rp.str());
                record["replay"] = {{"n_fresh", test_particles},
                                    {"max_rel_gap", replay.max_rel_gap},
                                    {"final_sw_cost", replay.sw_cost.back()}};
            }
            write_text(out / ("record_" + tag + ".json"), record.dump(2));

            summary_lines.push_back(mode_name(mode) + "," + std::to_string(run_cfg.seed) +
                                    "," + swflow::fmt_g17(rec.sw_cost.back()) + "," +
                                    swflow::fmt_g17(rec.sw_cost_db.back()));
            mode_finals.push_back(rec.sw_cost.back());
            log_line(cfg, "[gmm-flow] " + tag +
                              " final_sw_cost=" + swflow::fmt_g17(rec.sw_cost.back()));
        }
        finals.emplace_back(mode_name(mode), std::move(mode_finals));
    }

    if (n_seeds > 1) {
        std::ostringstream by_seed;
        for (const auto& line : summary_lines) by_seed << line << '\n';
        write_text(out / "variance_by_seed.csv", by_seed.str());

        std::ostringstream summary;
        summary << "mode,n_seeds,mean_final_sw_cost,std_final_sw_cost\n";
        for (const auto& [name, vals] : finals)
            summary << name << ',' << vals.size() << ',' << swflow::fmt_g17(sample_mean(vals))
                    << ',' << swflow::fmt_g17(sample_std(vals)) << '\n';
        write_text(out / "variance_summary.csv", summary.str());
        log_line(cfg, "[gmm-flow] variance summary over " + std::to_string(n_seeds) +
                          " seeds written");
    }
    return 0;
}

// --- barycenter --------------------------------------------------------------

json barycenter_defaults() {
    return {{"h", 0.5},      {"lambda", 0.001},      {"K", 100},
            {"n_theta", 30}, {"num_quantiles", 100}, {"n_particles", 1000},
            {"mode", "stochastic"}};
}

struct GroupSamples {
    std::vector<Mat> samples;
    std::vector<double> weights;
};

GroupSamples groups_from_config(const json& cfg, std::uint64_t master_seed) {
    if (!cfg.contains("groups") || !cfg["groups"].is_array() || cfg["groups"].empty())
        throw std::invalid_argument("config needs a non-empty 'groups' array");
    GroupSamples gs;
    bool explicit_weights = false;
    for (std::size_t idx = 0; idx < cfg["groups"].size(); ++idx) {
        const json& g = cfg["groups"][idx];
        Mat sample;
        if (g.contains("file")) {
            sample = load_matrix_csv(g["file"].get<std::string>());
        } else if (g.contains("gaussian")) {
            auto mean = g["gaussian"].value("mean", std::vector<double>{0.0});
            auto sd = g["gaussian"].value("std", std::vector<double>(mean.size(), 1.0));
            if (sd.size() != mean.size())
                throw std::invalid_argument("group gaussian mean/std size mismatch");
            swflow::data::GmmSpec spec;
            spec.seed = g.value("seed", swflow::mix_seed(master_seed, 200 + idx));
            swflow::data::GmmComponent c;
            c.weight = 1.0;
            c.mean = mean;
            c.var.resize(sd.size());
            for (std::size_t j = 0; j < sd.size(); ++j) c.var[j] = sd[j] * sd[j];
            spec.components.push_back(std::move(c));
            sample = swflow::data::sample_gmm(spec, g.value("n", 1000ULL));
        } else if (g.contains("gmm_spec_file")) {
            std::ifstream in(g["gmm_spec_file"].get<std::string>());
            if (!in)
                throw std::invalid_argument("cannot open: " +
                                            g["gmm_spec_file"].get<std::string>());
            std::stringstream ss;
            ss << in.rdbuf();
            auto spec = swflow::data::gmm_spec_from_json(ss.str());
            sample = swflow::data::sample_gmm(spec, g.value("n", 1000ULL));
        } else {
            throw std::invalid_argument("group needs 'file', 'gaussian', or 'gmm_spec_file'");
        }
        if (g.contains("weight")) explicit_weights = true;
        gs.weights.push_back(g.value("weight", 0.0));
        gs.samples.push_back(std::move(sample));
    }
    if (!explicit_weights) {
        // empirical frequencies p_s = n_s / n
        double total = 0.0;
        for (const auto& s : gs.samples) total += static_cast<double>(s.rows);
        for (std::size_t i = 0; i < gs.samples.size(); ++i)
            gs.weights[i] = static_cast<double>(gs.samples[i].rows) / total;
    }
    return gs;
}

int cmd_barycenter(json cfg, bool validate_only) {
    auto base_cfg = flow_from_json(cfg, barycenter_defaults());
    auto gs = groups_from_config(cfg, cfg.value("seed", 1ULL));
    if (base_cfg.dim == 0) base_cfg.dim = gs.samples.front().cols;
    fl::validate_config(base_cfg);
    const int n_seeds = cfg.value("seeds", 1);
    if (n_seeds < 1) throw std::invalid_argument("seeds must be >= 1");
    if (validate_only) {
        std::cout << "config ok: barycenter\n";
        return 0;
    }

    auto out = ensure_out(cfg, "runs/barycenter");
    const bool is_1d = base_cfg.dim == 1;
    ot::Empirical1D exact;
    if (is_1d) {
        std::vector<std::pair<ot::Empirical1D, double>> tables;
        for (std::size_t s = 0; s < gs.samples.size(); ++s)
            tables.emplace_back(ot::Empirical1D::from_unsorted(gs.samples[s].a),
                                gs.weights[s]);
        exact = swflow::bary::exact_barycenter_1d(
            tables, cfg.value("exact_quantiles", 400));
        std::ostringstream ex;
        ex << "tau,quantile\n";
        for (std::size_t j = 0; j < exact.values.size(); ++j)
            ex << swflow::fmt_g17((j + 0.5) / static_cast<double>(exact.values.size()))
               << ',' << swflow::fmt_g17(exact.values[j]) << '\n';
        write_text(out / "exact_barycenter.csv", ex.str());
    }

    std::ostringstream gap_csv;
    gap_csv << "mode,seed,gap_w2\n";
    for (auto mode : modes_from_config(cfg, "stochastic")) {
        for (int i = 0; i < n_seeds; ++i) {
            swflow::bary::BarycenterProblem prob;
            for (std::size_t s = 0; s < gs.samples.size(); ++s)
                prob.groups.emplace_back(gs.samples[s], gs.weights[s]);
            prob.config = base_cfg;
            prob.config.mode = mode;
            prob.config.seed = cfg.value("seed", 1ULL) + static_cast<std::uint64_t>(i);
            prob.config.snapshot_steps = {0, prob.config.K / 2, prob.config.K};

            auto rec = swflow::bary::run_barycenter_flow(prob);
            std::string tag = mode_name(mode) + "_seed" + std::to_string(prob.config.seed);
            auto record = record_to_json(rec, "barycenter");
            record["weights"] = gs.weights;

            write_loss_csv(out / ("loss_" + tag + ".csv"), rec);
            for (const auto& [step, cloud] : rec.snapshots)
                write_particles_csv(
                    out / ("particles_" + tag + "_step" + std::to_string(step) + ".csv"),
                    cloud);
            if (!rec.ok()) {
                write_text(out / ("record_" + tag + ".json"), record.dump(2));
                std::cerr << "numeric failure: " << rec.error << '\n';
                return 2;
            }

            if (is_1d) {
                auto cloud = ot::Empirical1D::from_unsorted(rec.final_cloud.positions.a);
                double gap = ot::w2_squared_1d(cloud, exact, base_cfg.num_quantiles);
                record["gap_w2_to_exact"] = gap;
                gap_csv << mode_name(mode) << ',' << prob.config.seed << ','
                        << swflow::fmt_g17(gap) << '\n';
                log_line(cfg, "[barycenter] " + tag + " gap=" + swflow::fmt_g17(gap));
            } else {
                log_line(cfg, "[barycenter] " + tag +
                                  " final_sw_cost=" + swflow::fmt_g17(rec.sw_cost.back()));
            }
            write_text(out / ("record_" + tag + ".json"), record.dump(2));
        }
    }
    if (is_1d) write_text(out / "barycenter_gap.csv", gap_csv.str());
    return 0;
}

// --- fair ----------------------------------------------------------------------

json fair_defaults() {
    return {{"h", 0.5},      {"lambda", 0.001},      {"K", 100},
            {"n_theta", 30}, {"num_quantiles", 100}, {"n_particles", 0},
            {"mode", "stochastic"}};
}

swflow::fair::GroupedDataset dataset_from_config(const json& cfg) {
    if (!cfg.contains("dataset"))
        throw std::invalid_argument("config needs a 'dataset' object");
    const json& d = cfg["dataset"];
    if (d.contains("file")) {
        swflow::data::CsvSchema schema;
        const json& s = d.value("schema", json::object());
        schema.feature_cols = s.value("features", std::vector<std::string>{});
        schema.sensitive_col = s.value("sensitive", std::string("s"));
        schema.target_col = s.value("target", std::string("y"));
        std::string coding = s.value("coding", "raw");
        if (coding == "raw") {
            schema.coding.mode = swflow::data::SensitiveCoding::Mode::raw;
        } else if (coding == "threshold") {
            schema.coding.mode = swflow::data::SensitiveCoding::Mode::threshold;
            schema.coding.threshold = s.value("threshold", 0.0);
        } else if (coding == "deciles") {
            schema.coding.mode = swflow::data::SensitiveCoding::Mode::deciles;
        } else {
            throw std::invalid_argument("unknown sensitive coding '" + coding + "'");
        }
        return swflow::data::load_csv(d["file"].get<std::string>(), schema);
    }
    std::string kind = d.value("synthetic", "");
    if (kind == "grouped_gaussian")
        return swflow::data::synth_grouped_gaussian(
            d.value("n", 1994ULL), d.value("p", 5ULL), d.value("shift", 1.0),
            d.value("noise", 0.1), d.value("seed", 13ULL));
    if (kind == "health")
        return swflow::data::synth_health_surrogate(d.value("n", 1994ULL),
                                                    d.value("conditions", 62ULL),
                                                    d.value("seed", 3ULL),
                                                    d.value("noise", 0.05));
    throw std::invalid_argument("dataset needs 'file' or synthetic kind "
                                "'grouped_gaussian'/'health'");
}

int cmd_fair(json cfg, bool validate_only) {
    auto dataset_cfg = cfg.value("dataset", json::object());
    if (dataset_cfg.contains("file") &&
        !fs::exists(dataset_cfg["file"].get<std::string>()))
        throw std::invalid_argument("dataset file does not exist: " +
                                    dataset_cfg["file"].get<std::string>());
    auto flow_cfg = flow_from_json(cfg, fair_defaults());
    flow_cfg.dim = 1;

    std::vector<double> alphas =
        cfg.value("alphas", std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    std::vector<double> lambdas =
        cfg.value("lambdas", std::vector<double>{0.001, 0.01, 0.1, 1.0});
    std::vector<std::string> methods = cfg.value(
        "methods",
        std::vector<std::string>{"exact_1d", "swf_stochastic", "swf_liouville"});
    if (alphas.empty() || lambdas.empty() || methods.empty())
        throw std::invalid_argument("alphas, lambdas, and methods must be non-empty");
    for (double a : alphas)
        if (!(a >= 0.0 && a <= 1.0))
            throw std::invalid_argument("alpha must be in [0,1]");
    for (const auto& m : methods)
        if (m != "exact_1d" && m != "swf_stochastic" && m != "swf_liouville")
            throw std::invalid_argument("unknown method '" + m + "'");
    const int n_seeds = cfg.value("seeds", 1);
    if (n_seeds < 1) throw std::invalid_argument("seeds must be >= 1");
    const double ridge = cfg.value("ridge", 1e-3);
    if (validate_only) {
        std::cout << "config ok: fair\n";
        return 0;
    }

    auto dataset = dataset_from_config(cfg);
    const json split_cfg = cfg.value("split", json::object());
    const std::size_t n_train = split_cfg.value("n_train", 1694ULL);
    auto [train, test] = swflow::data::split(dataset, n_train,
                                             split_cfg.value("seed", 0ULL));

    auto out = ensure_out(cfg, "runs/fair");
    auto base = swflow::fair::fit_base_regressor(train, ridge);

    std::vector<double> y0(test.n());
    for (std::size_t i = 0; i < test.n(); ++i)
        y0[i] = base.predict(test.features.row(i), test.features.cols, test.sensitive[i]);
    double base_mse = swflow::fair::mse(y0, test.target);
    double base_ks = swflow::fair::ks_distance(y0, test.sensitive);

    json base_json;
    base_json["ridge"] = ridge;
    base_json["beta"] = base.beta;
    base_json["intercepts"] = base.intercepts;
    base_json["test_mse"] = base_mse;
    base_json["test_ks"] = base_ks;
    base_json["n_train"] = train.n();
    base_json["n_test"] = test.n();
    base_json["n_groups"] = train.n_groups();
    write_text(out / "base_model.json", base_json.dump(2));
    log_line(cfg, "[fair] base test mse=" + swflow::fmt_g17(base_mse) +
                      " ks=" + swflow::fmt_g17(base_ks));

    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < n_seeds; ++i)
        seeds.push_back(cfg.value("seed", 1ULL) + static_cast<std::uint64_t>(i));

    std::ostringstream comparison;
    comparison << "method,lambda,n_groups,alpha,mse_mean,mse_std,ks_mean,ks_std,"
                  "mse_mean_x100sq\n";
    comparison << "base,0,"  << train.n_groups() << ",0," << swflow::fmt_g17(base_mse)
               << ",0," << swflow::fmt_g17(base_ks) << ",0,"
               << swflow::fmt_g17(base_mse * 1e4) << '\n';

    for (const auto& method_name : methods) {
        swflow::fair::FairMethod method = method_name == "exact_1d"
                                              ? swflow::fair::FairMethod::exact_1d
                                              : swflow::fair::FairMethod::swf_barycenter;
        fl::FlowConfig method_cfg = flow_cfg;
        if (method_name == "swf_stochastic") method_cfg.mode = fl::Mode::stochastic;
        if (method_name == "swf_liouville") method_cfg.mode = fl::Mode::liouville;

        auto sweep = swflow::fair::pareto_sweep(train, test, base, method, alphas, lambdas,
                                                seeds, method_cfg);

        std::ostringstream rows;
        rows << "alpha,lambda,seed,mse,ks\n";
        for (const auto& r : sweep.rows)
            rows << swflow::fmt_g17(r.alpha) << ',' << swflow::fmt_g17(r.lambda) << ','
                 << r.seed << ',' << swflow::fmt_g17(r.mse) << ',' << swflow::fmt_g17(r.ks)
                 << '\n';
        write_text(out / ("sweep_" + method_name + ".csv"), rows.str());

        std::ostringstream aggs;
        aggs << "alpha,lambda,mse_mean,mse_std,ks_mean,ks_std\n";
        for (const auto& a : sweep.aggregates)
            aggs << swflow::fmt_g17(a.alpha) << ',' << swflow::fmt_g17(a.lambda) << ','
                 << swflow::fmt_g17(a.mse_mean) << ',' << swflow::fmt_g17(a.mse_std) << ','
                 << swflow::fmt_g17(a.ks_mean) << ',' << swflow::fmt_g17(a.ks_std) << '\n';
        write_text(out / ("aggregate_" + method_name + ".csv"), aggs.str());

        double alpha_max = *std::max_element(alphas.begin(), alphas.end());
        for (const auto& a : sweep.aggregates) {
            if (a.alpha != alpha_max) continue;
            comparison << method_name << ',' << swflow::fmt_g17(a.lambda) << ','
                       << train.n_groups() << ',' << swflow::fmt_g17(a.alpha) << ','
                       << swflow::fmt_g17(a.mse_mean) << ',' << swflow::fmt_g17(a.mse_std)
                       << ',' << swflow::fmt_g17(a.ks_mean) << ','
                       << swflow::fmt_g17(a.ks_std) << ','
                       << swflow::fmt_g17(a.mse_mean * 1e4) << '\n';
        }
        log_line(cfg, "[fair] method " + method_name + ": " +
                          std::to_string(sweep.rows.size()) + " sweep rows");
    }
    write_text(out / "comparison.csv", comparison.str());
    return 0;
}

// --- validate --------------------------------------------------------------------

int cmd_validate(const json& cfg) {
    std::string command = cfg.value("command", "");
    if (command == "gmm-flow") return cmd_gmm_flow(cfg, true);
    if (command == "barycenter") return cmd_barycenter(cfg, true);
    if (command == "fair") return cmd_fair(cfg, true);
    throw std::invalid_argument(
        "config needs \"command\": one of gmm-flow | barycenter | fair");
}

int dispatch(const std::string& command, const CliOverrides& cli) {
    json cfg = load_config(cli.config_path);
    apply_overrides(cfg, cli);
    if (command == "validate") return cmd_validate(cfg);
    if (cli.validate_only) {
        cfg["command"] = command;
        return cmd_validate(cfg);
    }
    if (command == "gmm-flow") return cmd_gmm_flow(cfg, false);
    if (command == "barycenter") return cmd_barycenter(cfg, false);
    if (command == "fair") return cmd_fair(cfg, false);
    throw std::invalid_argument("unknown command " + command);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sliced-Wasserstein flows, barycenters, and fair regression"};
    app.require_subcommand(1);

    CliOverrides cli;
    std::string active;
    for (const auto& name : {"gmm-flow", "barycenter", "fair", "validate"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", cli.config_path, "JSON config file");
        sub->add_option("--mode", cli.mode, "stochastic | liouville | both");
        sub->add_option("--seed", cli.seed, "master seed");
        sub->add_option("--seeds", cli.seeds, "number of seeds");
        sub->add_option("--out", cli.out, "output directory");
        sub->add_option("--lambda", cli.lambda, "entropic regularization");
        sub->add_option("--alphas", cli.alphas, "comma-separated alpha grid");
        sub->add_option("--test-particles", cli.test_particles,
                        "replay recorded maps with this many fresh particles");
        sub->add_flag("--quiet", cli.quiet, "suppress progress output");
        sub->add_flag("--validate", cli.validate_only, "check the config and exit");
        sub->callback([&active, name] { active = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        return dispatch(active, cli);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 2;
    }
}
