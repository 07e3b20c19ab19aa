#ifndef QNET_TRAFFIC_HPP
#define QNET_TRAFFIC_HPP

#include <Eigen/Dense>

#include "qnet/model.hpp"

namespace qnet {

enum class Normalization {
    Absolute,            // open: alpha has customers/time units
    ScaledFirstNodeOne,  // closed: alpha is a ray, pinned by alpha_1 = 1
};

// Per-node total arrival rates alpha, the unique solution of the flow
// balance equations of the network.
struct TrafficSolution {
    Eigen::VectorXd alpha;
    Normalization normalization = Normalization::Absolute;
};

// Open networks: alpha = nu + P^T alpha, all components positive.
// Throws SingularSystem if the linear system cannot be solved; that means
// validation let a bad model through.
TrafficSolution solve_open_traffic(const NetworkModel& model);

// Closed networks: alpha_j = sum_k alpha_k p(k,j), normalized to alpha_1 = 1.
// Throws NotIrreducible if the solve betrays a reducible routing chain.
TrafficSolution solve_closed_traffic(const NetworkModel& model);

// Infinity norm of the defining equations' residual, scaled check:
// open  |alpha - nu - P^T alpha|, closed |alpha - P^T alpha|.
double traffic_residual(const NetworkModel& model, const TrafficSolution& traffic);

}  // namespace qnet

#endif  // QNET_TRAFFIC_HPP
