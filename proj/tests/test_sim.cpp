#include <doctest.h>

#include <cmath>

#include "qnet/errors.hpp"
#include "qnet/normconst.hpp"
#include "qnet/productform.hpp"
#include "qnet/sim.hpp"
#include "test_support.hpp"

using namespace qnet;
using namespace qnet::testing;

namespace {

SimConfig quick(std::uint64_t seed, double run_time) {
    SimConfig config;
    config.seed = seed;
    config.run_time = run_time;
    return config;
}

}  // namespace

TEST_CASE("same seed, same report") {
    auto model = tandem();
    auto config = quick(42, 2000.0);
    config.record_events = true;
    auto a = run(model, config);
    auto b = run(model, config);

    REQUIRE(a.replications.size() == 1);
    REQUIRE(a.replications[0].events.size() == b.replications[0].events.size());
    for (std::size_t i = 0; i < a.replications[0].events.size(); ++i) {
        const auto& ea = a.replications[0].events[i];
        const auto& eb = b.replications[0].events[i];
        CHECK(ea.time == eb.time);
        CHECK(ea.kind == eb.kind);
        CHECK(ea.from == eb.from);
        CHECK(ea.to == eb.to);
    }
    CHECK(a.node_pmf == b.node_pmf);
    CHECK(a.joint_pmf == b.joint_pmf);

    auto c = run(model, quick(43, 2000.0));
    CHECK(a.joint_pmf != c.joint_pmf);  // different seed, different history
}

TEST_CASE("closed run conserves the population at every event") {
    auto model = closed_cycle({1.0, 2.0, 0.7}, 4);
    auto config = quick(7, 500.0);
    config.record_events = true;
    auto report = run(model, config);
    for (const auto& event : report.replications[0].events) {
        int total = 0;
        for (int v : event.state_after) total += v;
        REQUIRE(total == 4);
        REQUIRE(event.kind == OpKind::Transfer);  // no arrivals or exits in a closed net
    }
}

TEST_CASE("no event ever routes a customer back to its own node") {
    std::mt19937_64 rng(9001);
    auto model = random_open(rng, 3, 0.3, 0.7);
    auto config = quick(11, 300.0);
    config.record_events = true;
    auto report = run(model, config);
    bool saw_transfer = false;
    for (const auto& event : report.replications[0].events) {
        if (event.kind == OpKind::Transfer) {
            saw_transfer = true;
            CHECK(event.from != event.to);
        }
    }
    CHECK(saw_transfer);
}

TEST_CASE("unstable open models are refused unless overridden") {
    auto model = mm1(3.0, 2.0);
    CHECK_THROWS_AS(run(model, quick(1, 100.0)), UnstableOpenModel);
    auto config = quick(1, 100.0);
    config.allow_unstable = true;
    CHECK_NOTHROW(run(model, config));
}

TEST_CASE("M|M|1 empirical distribution approaches the geometric law") {
    auto model = mm1(1.0, 2.0);
    auto report = run(model, quick(123, 100000.0));
    // P[N = 0] = 0.5
    CHECK(report.node_pmf[0][0] == doctest::Approx(0.5).epsilon(0.03));

    auto pf = open_stationary(model, solve_open_traffic(model));
    auto tv = empirical_vs_analytic(report, pf);
    CHECK(tv.per_node[0] < 0.03);
    CHECK(tv.joint < 0.03);
}

TEST_CASE("closed two-node cycle empirical law approaches the product form") {
    auto model = closed_cycle({1.0, 2.0}, 2);
    auto report = run(model, quick(321, 100000.0));
    auto traffic = solve_closed_traffic(model);
    auto pf = closed_stationary(model, traffic, compute_B(model, traffic));
    auto tv = empirical_vs_analytic(report, pf);
    CHECK(tv.joint < 0.02);
    // empirical mass near (4/7, 2/7, 1/7)
    auto it = report.joint_pmf.find({2, 0});
    REQUIRE(it != report.joint_pmf.end());
    CHECK(it->second == doctest::Approx(4.0 / 7.0).epsilon(0.05));
}

TEST_CASE("per-node empirical pmfs are normalized") {
    auto model = tandem();
    auto report = run(model, quick(5, 5000.0));
    for (const auto& pmf : report.node_pmf) {
        double total = 0.0;
        for (double v : pmf) total += v;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    double joint_total = 0.0;
    for (const auto& [state, p] : report.joint_pmf) joint_total += p;
    CHECK(joint_total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("observed arrival rates approach the traffic solution") {
    auto model = tandem();
    auto traffic = solve_open_traffic(model);
    auto report = run(model, quick(99, 50000.0));
    const auto& rep = report.replications[0];
    for (int j = 0; j < 2; ++j) {
        // arrival_counts span the whole run, warmup included
        double observed = static_cast<double>(rep.arrival_counts[j]) / 50000.0;
        double se = std::sqrt(static_cast<double>(rep.arrival_counts[j])) / 50000.0;
        CHECK(std::abs(observed - traffic.alpha(j)) < 3.0 * se + 0.05);
    }
}

TEST_CASE("departure test: tandem exit stream is Poisson at rate 1") {
    auto model = tandem();
    auto traffic = solve_open_traffic(model);
    auto report = run(model, quick(2718, 100000.0));
    auto verdict = departure_poisson_test(report, model, traffic, 1);
    CHECK(verdict.expected_rate == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(verdict.rate_ok);
    CHECK(verdict.dispersion_ok);
    CHECK(verdict.ks_ok);
    CHECK(verdict.pass);

    // node 1 has no exit path
    CHECK_THROWS_AS(departure_poisson_test(report, model, traffic, 0), InsufficientSamples);
}

TEST_CASE("departure test needs enough samples") {
    auto model = tandem();
    auto traffic = solve_open_traffic(model);
    auto report = run(model, quick(3, 200.0));
    CHECK_THROWS_AS(departure_poisson_test(report, model, traffic, 1), InsufficientSamples);
}

TEST_CASE("independence smoke test on M|M|1 and the tandem") {
    auto model = mm1(1.0, 2.0);
    auto report = run(model, quick(555, 100000.0));
    auto res = departure_state_independence_smoketest(report, 0);
    CHECK(std::abs(res.correlation) < 0.05);
    CHECK(res.pass);

    auto t = tandem();
    auto t_report = run(t, quick(556, 100000.0));
    auto t_res = departure_state_independence_smoketest(t_report, 1);
    CHECK(std::abs(t_res.correlation) < 0.05);
    CHECK(t_res.pass);
}

TEST_CASE("smoke test rejects closed networks") {
    auto model = closed_cycle({1.0, 2.0}, 2);
    auto report = run(model, quick(6, 2000.0));
    CHECK_THROWS_AS(departure_state_independence_smoketest(report, 0), InsufficientSamples);
    auto traffic = solve_closed_traffic(model);
    CHECK_THROWS_AS(departure_poisson_test(report, model, traffic, 0), InsufficientSamples);
}

TEST_CASE("replications merge deterministically") {
    auto model = tandem();
    auto config = quick(31415, 5000.0);
    config.replication_count = 3;
    auto report = run(model, config);
    CHECK(report.replications.size() == 3);
    CHECK(report.total_observed_time == doctest::Approx(3 * 4500.0));
    // replications see different randomness
    CHECK(report.replications[0].joint_occupancy != report.replications[1].joint_occupancy);
    auto again = run(model, config);
    CHECK(report.joint_pmf == again.joint_pmf);
}

TEST_CASE("config sanity checks") {
    auto model = tandem();
    auto bad = quick(1, 0.0);
    CHECK_THROWS_AS(run(model, bad), Error);
    auto worse = quick(1, 100.0);
    worse.warmup_time = 100.0;
    CHECK_THROWS_AS(run(model, worse), Error);
    auto negative_window = quick(1, 100.0);
    negative_window.departure_window = 0.0;
    CHECK_THROWS_AS(run(model, negative_window), Error);
}
