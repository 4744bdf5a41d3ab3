#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "riskgrad/sgld.hpp"
#include "test_util.hpp"

using namespace riskgrad;
using testutil::scalar_samples;

namespace {

SgldConfig chain_config(double u, double gamma, double h, std::uint64_t steps,
                        std::uint64_t chains, std::uint64_t seed, PenaltyMode mode) {
    SgldConfig cfg;
    cfg.u = u;
    cfg.gamma = gamma;
    cfg.step_h = h;
    cfg.steps_m = steps;
    cfg.chains_n = chains;
    cfg.seed = seed;
    cfg.lambda = 1e8;
    cfg.penalty_mode = mode;
    return cfg;
}

ObjectiveConfig objective_for(const SgldConfig& cfg, std::shared_ptr<const SampleSet> samples) {
    ObjectiveConfig obj;
    obj.u = cfg.u;
    obj.gamma = cfg.gamma;
    obj.penalty_mode = cfg.penalty_mode;
    obj.samples = std::move(samples);
    return obj;
}

} // namespace

TEST_CASE("schedule resolution") {
    SgldConfig cfg = chain_config(0.95, 1e-8, 1e-4, 100, 1, 0, PenaltyMode::FullState);
    ResolvedSchedule sched = resolve_schedule(cfg);
    CHECK(sched.h == 1e-4);
    CHECK(sched.implied_t == doctest::Approx(1e-4 * 100.0 * 100.0));

    // Horizon parameterization: h = t / M^2.
    cfg.step_h = 0.0;
    cfg.horizon_t = 1.0;
    sched = resolve_schedule(cfg);
    CHECK(sched.h == doctest::Approx(1e-4).epsilon(1e-15));
    CHECK(sched.implied_t == doctest::Approx(1.0).epsilon(1e-12));

    // Exactly one of the two must be given.
    cfg.step_h = 1e-4;
    CHECK_THROWS_AS(resolve_schedule(cfg), argument_error);
    cfg.step_h = 0.0;
    cfg.horizon_t = 0.0;
    CHECK_THROWS_AS(resolve_schedule(cfg), argument_error);
}

TEST_CASE("step-size warning fires exactly at the stability bound") {
    const double u = 0.5, gamma = 1.0;
    const double bound = 1.0 / (2.0 / (1.0 - u) + gamma); // 0.2
    SgldConfig cfg = chain_config(u, gamma, bound - 1e-9, 10, 1, 0, PenaltyMode::FullState);
    CHECK_FALSE(resolve_schedule(cfg).stability_warning);
    cfg.step_h = bound;
    CHECK(resolve_schedule(cfg).stability_warning);
    cfg.step_h = bound + 1e-9;
    CHECK(resolve_schedule(cfg).stability_warning);
}

TEST_CASE("stationary point of the drift is a fixed point of the noiseless step") {
    // Identity payoff, single sample at 5, u = 1/2, gamma = 1/4: the drift
    // 1 + gamma m - 2 * 1{5 >= m} vanishes at m = 4.
    SgldConfig cfg = chain_config(0.5, 0.25, 0.01, 1, 1, 0, PenaltyMode::FullState);
    ObjectiveConfig obj = objective_for(cfg, scalar_samples({5.0}));
    const auto model = PayoffModel::identity();

    const ChainState z{4.0, {}};
    const std::vector<double> no_noise{0.0};
    const ChainState next = step(cfg, model, obj, z, no_noise);
    CHECK(next.m == 4.0);
}

TEST_CASE("noiseless chain follows the hand-iterated affine map") {
    // Indicators stay off along the path, so the update is
    // z_{k+1} = (1 - h) z_k - h e_1 with gamma = 1.
    SgldConfig cfg = chain_config(0.5, 1.0, 0.1, 1, 1, 0, PenaltyMode::FullState);
    auto set = std::make_shared<SampleSet>(1, 2);
    set->row(0)[0] = 100.0;
    set->row(0)[1] = 100.0;
    ObjectiveConfig obj = objective_for(cfg, set);
    const auto model = PayoffModel::linear_pnl(2);

    ChainState z{0.5, {0.2, -0.3}};
    const std::vector<double> no_noise{0.0, 0.0, 0.0};
    z = step(cfg, model, obj, z, no_noise);
    CHECK(z.m == doctest::Approx(0.35).epsilon(1e-12));
    CHECK(z.r[0] == doctest::Approx(0.18).epsilon(1e-12));
    CHECK(z.r[1] == doctest::Approx(-0.27).epsilon(1e-12));
    z = step(cfg, model, obj, z, no_noise);
    CHECK(z.m == doctest::Approx(0.215).epsilon(1e-12));
    CHECK(z.r[0] == doctest::Approx(0.162).epsilon(1e-12));
    CHECK(z.r[1] == doctest::Approx(-0.243).epsilon(1e-12));
    z = step(cfg, model, obj, z, no_noise);
    CHECK(z.m == doctest::Approx(0.0935).epsilon(1e-12));
    CHECK(z.r[0] == doctest::Approx(0.1458).epsilon(1e-12));
    CHECK(z.r[1] == doctest::Approx(-0.2187).epsilon(1e-12));
}

TEST_CASE("ensemble runs are deterministic and scheduling independent") {
    SgldConfig cfg = chain_config(0.9, 1e-4, 1e-3, 400, 6, 1234, PenaltyMode::FullState);
    ObjectiveConfig obj = objective_for(cfg, scalar_samples({0.3, -0.7, 1.9, 0.2, 2.4}));
    const auto model = PayoffModel::identity();

    RunOptions one_thread;
    one_thread.threads = 1;
    RunOptions four_threads;
    four_threads.threads = 4;

    const auto a = run_ensemble(cfg, model, obj, one_thread);
    const auto b = run_ensemble(cfg, model, obj, one_thread);
    const auto c = run_ensemble(cfg, model, obj, four_threads);
    for (std::size_t n = 0; n < a.size(); ++n) {
        CHECK(a[n].states.back().m == b[n].states.back().m);
        CHECK(a[n].states.back().m == c[n].states.back().m);
        CHECK(a[n].losses.back() == c[n].losses.back());
    }
}

TEST_CASE("chains draw from distinct streams") {
    SgldConfig cfg = chain_config(0.9, 1e-4, 1e-3, 1, 2, 77, PenaltyMode::FullState);
    ObjectiveConfig obj = objective_for(cfg, scalar_samples({0.0}));
    const auto traces = run_ensemble(cfg, PayoffModel::identity(), obj);
    // After one step the only difference between chains is their noise.
    CHECK(traces[0].states.back().m != traces[1].states.back().m);

    // The underlying streams differ from the first draw.
    RngStream s0(77, 0), s1(77, 1);
    CHECK(s0.next_gaussian() != s1.next_gaussian());
}

TEST_CASE("zero-step run records only the initial state") {
    SgldConfig cfg = chain_config(0.9, 1e-4, 1e-3, 0, 1, 0, PenaltyMode::FullState);
    cfg.init_state = ChainState{2.5, {}};
    ObjectiveConfig obj = objective_for(cfg, scalar_samples({1.0}));
    const auto traces = run_ensemble(cfg, PayoffModel::identity(), obj);
    REQUIRE(traces.size() == 1);
    CHECK(traces[0].steps == std::vector<std::uint64_t>{0});
    CHECK(traces[0].states[0].m == 2.5);
}

TEST_CASE("trace recording follows the stride plus the final step") {
    SgldConfig cfg = chain_config(0.9, 1e-4, 1e-3, 1000, 1, 5, PenaltyMode::FullState);
    cfg.record_stride = 100;
    ObjectiveConfig obj = objective_for(cfg, scalar_samples({1.0}));
    auto traces = run_ensemble(cfg, PayoffModel::identity(), obj);
    CHECK(traces[0].steps.size() == 11); // 0,100,...,1000
    CHECK(traces[0].steps.front() == 0);
    CHECK(traces[0].steps.back() == 1000);

    cfg.record_stride = 300; // final step is not a stride multiple
    traces = run_ensemble(cfg, PayoffModel::identity(), obj);
    CHECK(traces[0].steps == std::vector<std::uint64_t>{0, 300, 600, 900, 1000});
}

TEST_CASE("quadratic potential keeps the stationary second moment small") {
    // Constant payoff at 0 with full-state penalty: invariant density
    // proportional to exp(-lambda l(m)); the second moment stays well under
    // 4 (d+1) / (lambda gamma) once the chain has equilibrated.
    const double lambda = 200.0, gamma = 1.0;
    SgldConfig cfg = chain_config(0.5, gamma, 1e-3, 20000, 4, 9, PenaltyMode::FullState);
    cfg.lambda = lambda;
    cfg.record_stride = 1;
    ObjectiveConfig obj = objective_for(cfg, scalar_samples({0.0}));
    const auto traces = run_ensemble(cfg, PayoffModel::identity(), obj);

    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& trace : traces) {
        for (std::size_t j = trace.states.size() / 2; j < trace.states.size(); ++j) {
            acc += trace.states[j].m * trace.states[j].m;
            ++count;
        }
    }
    const double second_moment = acc / static_cast<double>(count);
    CHECK(std::isfinite(second_moment));
    CHECK(second_moment <= 4.0 / (lambda * gamma) + cfg.step_h);
}

TEST_CASE("divergence is reported with chain and step") {
    SgldConfig cfg = chain_config(0.5, 1.0, 1e200, 10, 1, 0, PenaltyMode::FullState);
    ObjectiveConfig obj = objective_for(cfg, scalar_samples({0.0}));
    try {
        run_ensemble(cfg, PayoffModel::identity(), obj);
        FAIL("expected divergence");
    } catch (const divergence_error& e) {
        const std::string what = e.what();
        CHECK(what.find("chain 0") != std::string::npos);
        CHECK(what.find("step") != std::string::npos);
    }
}

TEST_CASE("config validation") {
    SgldConfig cfg = chain_config(0.9, 1e-4, 1e-3, 10, 1, 0, PenaltyMode::FullState);
    ObjectiveConfig obj = objective_for(cfg, scalar_samples({1.0}));
    const auto model = PayoffModel::identity();

    SgldConfig bad = cfg;
    bad.u = 0.5; // disagrees with the objective config
    CHECK_THROWS_AS(run_ensemble(bad, model, obj), argument_error);

    bad = cfg;
    bad.chains_n = 0;
    CHECK_THROWS_AS(run_ensemble(bad, model, obj), argument_error);

    bad = cfg;
    bad.init_state.r = {1.0}; // identity payoff has no portfolio
    CHECK_THROWS_AS(run_ensemble(bad, model, obj), argument_error);

    bad = cfg;
    bad.init_state.m = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(run_ensemble(bad, model, obj), argument_error);

    // Noise vector dimension is checked by step().
    CHECK_THROWS_AS(step(cfg, model, obj, {0.0, {}}, std::vector<double>{0.0, 0.0}),
                    argument_error);
}

TEST_CASE("fresh-minibatch mode stays deterministic") {
    SgldConfig cfg = chain_config(0.9, 1e-4, 1e-3, 200, 3, 21, PenaltyMode::FullState);
    ObjectiveConfig obj = objective_for(cfg, scalar_samples({2.0, 2.0}));
    const auto model = PayoffModel::identity();

    RunOptions opts;
    opts.fresh_minibatch = [](SampleSet& set, RngStream& rng) {
        for (std::size_t p = 0; p < set.rows; ++p) {
            set.row(p)[0] = 2.0 + 0.01 * rng.next_gaussian();
        }
    };
    opts.threads = 1;
    const auto a = run_ensemble(cfg, model, obj, opts);
    opts.threads = 3;
    const auto b = run_ensemble(cfg, model, obj, opts);
    for (std::size_t n = 0; n < a.size(); ++n) {
        CHECK(a[n].states.back().m == b[n].states.back().m);
    }
    // Near-constant payoff at 2: the chain heads toward the kink.
    CHECK(a[0].states.back().m > 0.1);
}
