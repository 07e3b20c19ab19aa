#include "qnet/traffic.hpp"

#include <cmath>

#include "qnet/errors.hpp"

namespace qnet {

namespace {

constexpr int kDenseLimit = 2000;
constexpr double kResidualTol = 1e-10;

Eigen::VectorXd fixed_point_open(const Eigen::MatrixXd& pt, const Eigen::VectorXd& nu) {
    Eigen::VectorXd alpha = nu;
    for (int it = 0; it < 1000000; ++it) {
        Eigen::VectorXd next = nu + pt * alpha;
        double diff = (next - alpha).lpNorm<Eigen::Infinity>();
        alpha = next;
        if (diff < 1e-15 * std::max(1.0, alpha.lpNorm<Eigen::Infinity>())) return alpha;
    }
    throw SingularSystem("open traffic fixed-point iteration did not converge");
}

}  // namespace

TrafficSolution solve_open_traffic(const NetworkModel& model) {
    const Eigen::VectorXd& nu = model.open().nu;
    Eigen::MatrixXd pt = model.routing.p.transpose();
    int j_count = model.nodes();

    Eigen::VectorXd alpha;
    if (j_count <= kDenseLimit) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(j_count, j_count) - pt;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
        alpha = lu.solve(nu);
        double residual = (a * alpha - nu).lpNorm<Eigen::Infinity>();
        if (!alpha.allFinite() || residual > kResidualTol * std::max(1.0, alpha.lpNorm<Eigen::Infinity>()))
            throw SingularSystem("traffic equations solve failed (residual " + std::to_string(residual) + ")");
    } else {
        alpha = fixed_point_open(pt, nu);
    }
    for (int j = 0; j < j_count; ++j) {
        if (!(alpha(j) > 0.0))
            throw SingularSystem("traffic solution not positive at node " + std::to_string(j + 1) +
                                 "; model should have been rejected by validation");
    }
    return {std::move(alpha), Normalization::Absolute};
}

TrafficSolution solve_closed_traffic(const NetworkModel& model) {
    int j_count = model.nodes();
    Eigen::MatrixXd pt = model.routing.p.transpose();

    Eigen::VectorXd alpha;
    if (j_count <= kDenseLimit) {
        // alpha^T = alpha^T P with the first balance equation replaced by the
        // normalization alpha_1 = 1.
        Eigen::MatrixXd a = pt - Eigen::MatrixXd::Identity(j_count, j_count);
        a.row(0).setZero();
        a(0, 0) = 1.0;
        Eigen::VectorXd b = Eigen::VectorXd::Zero(j_count);
        b(0) = 1.0;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
        alpha = lu.solve(b);
        if (!alpha.allFinite()) throw NotIrreducible("closed traffic solve produced non-finite values");
    } else {
        alpha = Eigen::VectorXd::Ones(j_count) / j_count;
        for (int it = 0; it < 1000000; ++it) {
            Eigen::VectorXd next = pt * alpha;
            next /= next.sum();
            double diff = (next - alpha).lpNorm<Eigen::Infinity>();
            alpha = next;
            if (diff < 1e-15) break;
        }
        alpha /= alpha(0);
    }

    double residual = (pt * alpha - alpha).lpNorm<Eigen::Infinity>();
    if (residual > kResidualTol * std::max(1.0, alpha.lpNorm<Eigen::Infinity>()))
        throw NotIrreducible("closed traffic residual " + std::to_string(residual) +
                             "; routing chain looks reducible");
    for (int j = 0; j < j_count; ++j) {
        if (!(alpha(j) > 0.0))
            throw NotIrreducible("stationary routing vector not positive at node " +
                                 std::to_string(j + 1) + "; routing chain is reducible");
    }
    return {std::move(alpha), Normalization::ScaledFirstNodeOne};
}

double traffic_residual(const NetworkModel& model, const TrafficSolution& traffic) {
    Eigen::VectorXd lhs = traffic.alpha;
    Eigen::VectorXd rhs = model.routing.p.transpose() * traffic.alpha;
    if (model.is_open()) rhs += model.open().nu;
    return (lhs - rhs).lpNorm<Eigen::Infinity>();
}

}  // namespace qnet
