#include <doctest.h>

#include <random>

#include "qnet/errors.hpp"
#include "qnet/traffic.hpp"
#include "test_support.hpp"

using namespace qnet;
using namespace qnet::testing;

namespace {

// Independent fixed-point oracle for open traffic: iterate the defining
// equations directly instead of solving the linear system.
Eigen::VectorXd open_traffic_oracle(const NetworkModel& model) {
    Eigen::MatrixXd pt = model.routing.p.transpose();
    Eigen::VectorXd alpha = model.open().nu;
    for (int it = 0; it < 200000; ++it) {
        Eigen::VectorXd next = model.open().nu + pt * alpha;
        if ((next - alpha).lpNorm<Eigen::Infinity>() < 1e-14) return next;
        alpha = next;
    }
    return alpha;
}

// Independent power-iteration oracle for the closed routing chain.
Eigen::VectorXd closed_traffic_oracle(const NetworkModel& model) {
    int j = model.nodes();
    Eigen::VectorXd x = Eigen::VectorXd::Ones(j) / j;
    // damp with a lazy step so periodic cycles converge too
    Eigen::MatrixXd pt = 0.5 * model.routing.p.transpose() +
                         0.5 * Eigen::MatrixXd::Identity(j, j);
    for (int it = 0; it < 500000; ++it) {
        Eigen::VectorXd next = pt * x;
        next /= next.sum();
        if ((next - x).lpNorm<Eigen::Infinity>() < 1e-15) {
            x = next;
            break;
        }
        x = next;
    }
    return x / x(0);
}

}  // namespace

TEST_CASE("tandem traffic: flow conserves along the chain") {
    auto traffic = solve_open_traffic(tandem());
    CHECK(traffic.alpha(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(traffic.alpha(1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(traffic.normalization == Normalization::Absolute);
}

TEST_CASE("open traffic with feedback loop") {
    // nu = (1,0), 1 -> 2 always, 2 -> 1 half the time: alpha = (2,2),
    // frozen from the independent fixed-point oracle.
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2, 2);
    p(0, 1) = 1.0;
    p(1, 0) = 0.5;
    NetworkModel model;
    model.routing = RoutingMatrix::from_probabilities(p);
    model.service = {ServiceRate::constant(4.0), ServiceRate::constant(4.0)};
    Eigen::VectorXd nu(2);
    nu << 1.0, 0.0;
    model.kind = OpenKind{nu};

    auto oracle = open_traffic_oracle(model);
    CHECK(oracle(0) == doctest::Approx(2.0).epsilon(1e-10));

    auto traffic = solve_open_traffic(model);
    CHECK(traffic.alpha(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(traffic.alpha(1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("single node traffic is just nu") {
    auto traffic = solve_open_traffic(mm1(3.0, 5.0));
    CHECK(traffic.alpha(0) == 3.0);
}

TEST_CASE("closed cycles have uniform traffic") {
    auto t3 = solve_closed_traffic(closed_cycle({1.0, 2.0, 3.0}, 2));
    CHECK(t3.alpha.isApproxToConstant(1.0, 1e-12));
    CHECK(t3.normalization == Normalization::ScaledFirstNodeOne);

    auto t2 = solve_closed_traffic(closed_cycle({1.0, 2.0}, 5));
    CHECK(t2.alpha.isApproxToConstant(1.0, 1e-12));
}

TEST_CASE("closed branching network matches the stationary routing vector") {
    // 1 -> {2,3} evenly, both return to 1: alpha = (1, 0.5, 0.5), frozen
    // from the independent power-iteration oracle.
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(3, 3);
    p(0, 1) = 0.5;
    p(0, 2) = 0.5;
    p(1, 0) = 1.0;
    p(2, 0) = 1.0;
    NetworkModel model;
    model.routing = RoutingMatrix::from_probabilities(p);
    model.service.assign(3, ServiceRate::constant(1.0));
    model.kind = ClosedKind{4};

    auto oracle = closed_traffic_oracle(model);
    CHECK(oracle(1) == doctest::Approx(0.5).epsilon(1e-10));

    auto traffic = solve_closed_traffic(model);
    CHECK(traffic.alpha(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(traffic.alpha(1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(traffic.alpha(2) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("traffic residual bound holds on random models") {
    std::mt19937_64 rng(1234);
    for (int i = 0; i < 50; ++i) {
        auto model = random_open(rng, 1 + static_cast<int>(i % 4), 0.1, 0.8);
        auto traffic = solve_open_traffic(model);
        double bound = 1e-10 * std::max(1.0, traffic.alpha.lpNorm<Eigen::Infinity>());
        CHECK(traffic_residual(model, traffic) < bound);
        CHECK(traffic.alpha.minCoeff() > 0.0);
    }
    for (int i = 0; i < 50; ++i) {
        auto model = random_closed(rng, 2 + static_cast<int>(i % 4), 3);
        auto traffic = solve_closed_traffic(model);
        CHECK(traffic.alpha(0) == 1.0);
        double bound = 1e-10 * std::max(1.0, traffic.alpha.lpNorm<Eigen::Infinity>());
        CHECK(traffic_residual(model, traffic) < bound);
        CHECK(traffic.alpha.minCoeff() > 0.0);
    }
}

TEST_CASE("open traffic is linear in nu") {
    std::mt19937_64 rng(77);
    auto model = random_open(rng, 3, 0.2, 0.6);
    auto base = solve_open_traffic(model);

    // doubling nu doubles alpha exactly (power-of-two scaling is lossless)
    auto doubled = model;
    std::get<OpenKind>(doubled.kind).nu *= 2.0;
    auto scaled = solve_open_traffic(doubled);
    CHECK(scaled.alpha == 2.0 * base.alpha);

    auto tripled = model;
    std::get<OpenKind>(tripled.kind).nu *= 3.0;
    auto scaled3 = solve_open_traffic(tripled);
    CHECK((scaled3.alpha - 3.0 * base.alpha).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("closed traffic is stable under node reordering") {
    std::mt19937_64 rng(99);
    auto model = random_closed(rng, 4, 3);
    auto traffic = solve_closed_traffic(model);

    // rotate node labels by one, solve, undo the rotation, renormalize
    int j_count = model.nodes();
    std::vector<int> perm(j_count);
    for (int j = 0; j < j_count; ++j) perm[j] = (j + 1) % j_count;
    Eigen::MatrixXd q(j_count, j_count);
    for (int a = 0; a < j_count; ++a) {
        for (int b = 0; b < j_count; ++b) q(perm[a], perm[b]) = model.routing.p(a, b);
    }
    NetworkModel rotated;
    rotated.routing = RoutingMatrix::from_probabilities(q);
    rotated.service.assign(j_count, ServiceRate::constant(1.0));
    for (int j = 0; j < j_count; ++j) rotated.service[perm[j]] = model.service[j];
    rotated.kind = model.kind;

    auto rotated_traffic = solve_closed_traffic(rotated);
    Eigen::VectorXd back(j_count);
    for (int j = 0; j < j_count; ++j) back(j) = rotated_traffic.alpha(perm[j]);
    back /= back(0);
    CHECK((back - traffic.alpha).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("reducible closed chain is reported") {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(4, 4);
    p(0, 1) = 1.0;
    p(1, 0) = 1.0;
    p(2, 3) = 1.0;
    p(3, 2) = 1.0;
    NetworkModel model;
    model.routing = RoutingMatrix::from_probabilities(p);
    model.service.assign(4, ServiceRate::constant(1.0));
    model.kind = ClosedKind{2};
    CHECK_THROWS_AS(solve_closed_traffic(model), NotIrreducible);
}
