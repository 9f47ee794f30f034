#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "swflow/data.hpp"
#include "swflow/flow.hpp"

using swflow::Mat;
using namespace swflow::flow;
namespace sl = swflow::sliced;
namespace ot = swflow::ot1d;

namespace {

constexpr double kPi = 3.14159265358979323846;

Mat gaussian_sample(std::mt19937_64& rng, std::size_t n, double mean, double sd) {
    std::normal_distribution<double> g(mean, sd);
    Mat m(n, 1);
    for (auto& x : m.a) x = g(rng);
    return m;
}

FlowConfig base_config(Mode mode, std::size_t n, std::size_t d) {
    FlowConfig c;
    c.mode = mode;
    c.n_particles = n;
    c.dim = d;
    c.seed = 42;
    return c;
}

}  // namespace

TEST_CASE("init_cloud gaussian log-density matches the analytic formula") {
    auto cfg = base_config(Mode::liouville, 64, 2);
    cfg.init = {InitSpec::Kind::gaussian, 1.0};
    auto cloud = init_cloud(cfg);
    REQUIRE(cloud.has_log_density());
    for (std::size_t i = 0; i < 64; ++i) {
        double r2 = cloud.positions(i, 0) * cloud.positions(i, 0) +
                    cloud.positions(i, 1) * cloud.positions(i, 1);
        CHECK(cloud.log_density[i] ==
              doctest::Approx(-std::log(2.0 * kPi) - 0.5 * r2).epsilon(1e-12));
    }
    // at the origin the formula gives -log(2 pi)
    CHECK(-std::log(2.0 * kPi) == doctest::Approx(-1.8379).epsilon(1e-4));
}

TEST_CASE("init_cloud uniform ball log-density and support") {
    auto cfg = base_config(Mode::liouville, 128, 1);
    cfg.init = {InitSpec::Kind::uniform_ball, 2.0};
    auto cloud = init_cloud(cfg);
    for (std::size_t i = 0; i < 128; ++i) {
        CHECK(cloud.log_density[i] == doctest::Approx(-std::log(4.0)).epsilon(1e-12));
        CHECK(std::abs(cloud.positions(i, 0)) <= 2.0);
    }
}

TEST_CASE("init_cloud is deterministic; stochastic mode carries no log-density") {
    auto cfg = base_config(Mode::stochastic, 50, 3);
    auto a = init_cloud(cfg);
    auto b = init_cloud(cfg);
    CHECK(a.positions.a == b.positions.a);
    CHECK_FALSE(a.has_log_density());
}

TEST_CASE("estimate_score pulls inward and is antisymmetric on symmetric clouds") {
    ParticleCloud two;
    two.positions = Mat(2, 1);
    two.positions(0, 0) = 1.0;
    two.positions(1, 0) = -1.0;
    auto s = estimate_score(two, 0.8);
    CHECK(s(0, 0) < 0.0);
    CHECK(s(1, 0) > 0.0);

    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0.0, 1.0);
    ParticleCloud sym;
    sym.positions = Mat(100, 2);
    for (std::size_t i = 0; i < 50; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            double v = g(rng);
            sym.positions(i, j) = v;
            sym.positions(50 + i, j) = -v;
        }
    }
    auto sc = estimate_score(sym, 0.7);
    for (std::size_t i = 0; i < 50; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(sc(i, j) == doctest::Approx(-sc(50 + i, j)).epsilon(1e-9));
}

TEST_CASE("estimate_score approximates the analytic Gaussian score") {
    std::mt19937_64 rng(13);
    ParticleCloud cloud;
    cloud.positions = gaussian_sample(rng, 1000, 0.0, 1.0);
    double bw = scott_bandwidth(cloud.positions)[0];
    auto s = estimate_score(cloud, bw);
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < 1000; ++i) {
        double x = cloud.positions(i, 0);
        if (std::abs(x) > 2.0) continue;
        double d = s(i, 0) - (-x);
        acc += d * d;
        ++count;
    }
    CHECK(acc / static_cast<double>(count) < 0.15);
}

TEST_CASE("estimate_score error paths") {
    ParticleCloud one;
    one.positions = Mat(1, 1);
    CHECK_THROWS_WITH_AS(estimate_score(one, 1.0), "score needs >= 2 particles",
                         std::invalid_argument);
    ParticleCloud two;
    two.positions = Mat(2, 1);
    two.positions(0, 0) = 0.0;
    two.positions(1, 0) = 1.0;
    CHECK_THROWS_WITH_AS(estimate_score(two, 0.0), "score overflow", std::runtime_error);
}

TEST_CASE("divergence_of_drift analytic cases") {
    auto identity = [](const double* x, double* out) {
        out[0] = x[0];
        out[1] = x[1];
    };
    double x0[2] = {0.3, -0.7};
    CHECK(divergence_of_drift(identity, x0, 2, 1e-5) == doctest::Approx(2.0).epsilon(1e-6));

    auto constant = [](const double*, double* out) {
        out[0] = 4.0;
        out[1] = -1.0;
    };
    CHECK(divergence_of_drift(constant, x0, 2, 1e-5) == doctest::Approx(0.0).epsilon(1e-9));

    auto quad = [](const double* x, double* out) {
        out[0] = x[0] * x[0];
        out[1] = 0.0;
    };
    double x1[2] = {1.0, 0.0};
    CHECK(divergence_of_drift(quad, x1, 2, 1e-4) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("stochastic_step is a fixed point on the target with lambda = 0") {
    std::mt19937_64 rng(9);
    auto target = gaussian_sample(rng, 80, 1.0, 2.0);
    auto cfg = base_config(Mode::stochastic, 80, 1);
    cfg.h = 1.0;
    cfg.lambda = 0.0;
    cfg.n_theta = 1;
    cfg.num_quantiles = 80;  // lossless target table at the sample size
    auto ps = sl::sample_directions(1, 1, 5);
    auto tables = sl::SlicedTarget::build(target, ps, cfg.num_quantiles);
    ParticleCloud cloud;
    cloud.positions = target;
    std::mt19937_64 noise(1);
    auto next = stochastic_step(cloud, tables, ps, cfg, noise);
    for (std::size_t i = 0; i < 80; ++i)
        CHECK(next.positions(i, 0) == doctest::Approx(target(i, 0)).epsilon(1e-6));
}

TEST_CASE("stochastic_step with h=1 lands on the target order statistics") {
    std::mt19937_64 rng(21);
    auto target = gaussian_sample(rng, 64, 4.0, 1.0);
    auto cfg = base_config(Mode::stochastic, 64, 1);
    cfg.h = 1.0;
    cfg.lambda = 0.0;
    cfg.n_theta = 1;
    cfg.num_quantiles = 64;
    auto ps = sl::sample_directions(1, 1, 5);
    auto tables = sl::SlicedTarget::build(target, ps, 64);
    ParticleCloud cloud;
    cloud.positions = gaussian_sample(rng, 64, 0.0, 1.0);
    std::mt19937_64 noise(1);
    auto next = stochastic_step(cloud, tables, ps, cfg, noise);
    auto landed = next.positions.a;
    auto expect = target.a;
    std::sort(landed.begin(), landed.end());
    std::sort(expect.begin(), expect.end());
    for (std::size_t i = 0; i < 64; ++i)
        CHECK(landed[i] == doctest::Approx(expect[i]).epsilon(1e-9));
}

TEST_CASE("liouville_step with lambda = 0 is drift-only and fixes the target") {
    std::mt19937_64 rng(31);
    auto target = gaussian_sample(rng, 60, -2.0, 1.0);
    auto cfg = base_config(Mode::liouville, 60, 1);
    cfg.h = 0.5;
    cfg.lambda = 0.0;
    cfg.n_theta = 1;
    cfg.num_quantiles = 60;
    auto ps = sl::sample_directions(1, 1, 8);
    auto tables = sl::SlicedTarget::build(target, ps, 60);
    ParticleCloud cloud;
    cloud.positions = target;
    cloud.log_density.assign(60, 0.25);
    auto next = liouville_step(cloud, tables, ps, cfg);
    for (std::size_t i = 0; i < 60; ++i)
        CHECK(next.positions(i, 0) == doctest::Approx(target(i, 0)).epsilon(1e-6));
}

TEST_CASE("liouville run transports N(0,1) to N(5,1)") {
    std::mt19937_64 rng(55);
    auto target = gaussian_sample(rng, 500, 5.0, 1.0);
    auto cfg = base_config(Mode::liouville, 500, 1);
    cfg.h = 0.5;
    cfg.K = 100;
    cfg.lambda = 0.0;
    cfg.n_theta = 1;
    cfg.num_quantiles = 100;
    cfg.seed = 77;
    auto rec = run_flow(target, cfg);
    REQUIRE(rec.ok());
    auto fresh = gaussian_sample(rng, 500, 5.0, 1.0);
    auto final_emp = ot::Empirical1D::from_unsorted(rec.final_cloud.positions.a);
    auto fresh_emp = ot::Empirical1D::from_unsorted(fresh.a);
    CHECK(ot::w2_squared_1d(final_emp, fresh_emp, 100) < 0.05);
}

TEST_CASE("tracked log-density matches the analytic linear-drift solution") {
    auto cfg = base_config(Mode::liouville, 200, 1);
    cfg.init = {InitSpec::Kind::gaussian, 2.0};
    cfg.seed = 3;
    auto cloud = init_cloud(cfg);
    auto initial_logrho = cloud.log_density;
    auto field = [](const double* x, double* out) { out[0] = -x[0]; };
    auto moved = advect_with_field(cloud, field, 0.01, 100, 1e-4);
    // d log rho / dt = -div f = 1, so after t = 1 the tracked value grows by 1
    for (std::size_t i = 0; i < 200; ++i)
        CHECK(moved.log_density[i] == doctest::Approx(initial_logrho[i] + 1.0).epsilon(1e-3));
}

TEST_CASE("run_flow with K = 0 returns the initial cloud and empty series") {
    std::mt19937_64 rng(70);
    auto target = gaussian_sample(rng, 32, 0.0, 1.0);
    auto cfg = base_config(Mode::stochastic, 32, 1);
    cfg.K = 0;
    auto rec = run_flow(target, cfg);
    CHECK(rec.sw_cost.empty());
    CHECK(rec.mean_drift.empty());
    CHECK(rec.final_cloud.positions.a == rec.initial_cloud.positions.a);
}

TEST_CASE("run_flow is bit-deterministic given config and seed") {
    std::mt19937_64 rng(71);
    auto target = gaussian_sample(rng, 100, 2.0, 1.0);
    auto cfg = base_config(Mode::stochastic, 100, 1);
    cfg.K = 5;
    cfg.lambda = 0.01;
    cfg.n_theta = 4;
    auto a = run_flow(target, cfg);
    auto b = run_flow(target, cfg);
    CHECK(a.sw_cost == b.sw_cost);
    CHECK(a.final_cloud.positions.a == b.final_cloud.positions.a);
    CHECK(a.sw_cost.size() == 5);
    CHECK(a.mean_drift.size() == 5);
    CHECK(a.step_seconds.size() == 5);
}

TEST_CASE("liouville mode is deterministic end to end") {
    std::mt19937_64 rng(72);
    auto target = gaussian_sample(rng, 80, 1.0, 1.0);
    auto cfg = base_config(Mode::liouville, 80, 1);
    cfg.K = 8;
    cfg.lambda = 0.01;
    cfg.n_theta = 2;
    auto a = run_flow(target, cfg);
    auto b = run_flow(target, cfg);
    REQUIRE(a.ok());
    CHECK(a.final_cloud.positions.a == b.final_cloud.positions.a);
    CHECK(a.final_cloud.log_density == b.final_cloud.log_density);
}

TEST_CASE("numeric failure mid-run yields a partial record with the step index") {
    std::mt19937_64 rng(73);
    auto target = gaussian_sample(rng, 16, 0.0, 1.0);
    auto cfg = base_config(Mode::liouville, 16, 1);
    cfg.K = 3;
    cfg.lambda = 0.1;
    cfg.kde_bandwidth = 1e-300;  // forces the score to overflow
    auto rec = run_flow(target, cfg);
    CHECK_FALSE(rec.ok());
    CHECK(rec.error == "score overflow at step 0");
    CHECK(rec.sw_cost.empty());
}

TEST_CASE("GMM loss series is non-increasing after the burn-in in >= 9/10 seeds") {
    auto spec = swflow::data::random_gmm_spec(2, 10, 99);
    auto target = swflow::data::sample_gmm(spec, 2000);
    int good = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto cfg = base_config(Mode::stochastic, 500, 2);
        cfg.h = 1.0;
        cfg.lambda = 1e-4;
        cfg.n_theta = 30;
        cfg.K = 14;
        cfg.seed = 1000 + seed;
        auto rec = run_flow(target, cfg);
        REQUIRE(rec.ok());
        bool monotone = true;
        for (std::size_t k = 3; k + 1 <= 13; ++k)
            if (rec.sw_cost[k + 1] > rec.sw_cost[k] * (1.0 + 1e-9)) monotone = false;
        good += monotone;
    }
    CHECK(good >= 9);
}

TEST_CASE("replay drives fresh particles through the recorded maps") {
    std::mt19937_64 rng(74);
    auto target = gaussian_sample(rng, 400, 3.0, 1.0);
    auto cfg = base_config(Mode::liouville, 400, 1);
    cfg.h = 0.5;
    cfg.K = 30;
    cfg.lambda = 0.0;
    cfg.n_theta = 1;
    cfg.record_tables = true;
    cfg.table_quantiles = 64;
    auto rec = run_flow(target, cfg);
    REQUIRE(rec.ok());
    CHECK(rec.step_tables.size() == 30);

    auto replay = replay_flow(rec, {{&target, 1.0}}, 300, 777);
    REQUIRE(replay.sw_cost.size() == 30);
    // fresh particles follow the recorded loss curve and end close to the target
    CHECK(replay.sw_cost.back() < rec.sw_cost.back() + 0.05);
    CHECK(replay.max_rel_gap < 0.5);
}
