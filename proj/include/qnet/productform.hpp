#ifndef QNET_PRODUCTFORM_HPP
#define QNET_PRODUCTFORM_HPP

#include <Eigen/Dense>
#include <vector>

#include "qnet/ctmc.hpp"
#include "qnet/model.hpp"
#include "qnet/normconst.hpp"
#include "qnet/traffic.hpp"

namespace qnet {

// Stationary law of one node of an open network:
//   pi_j(n) = b_j alpha_j^n / prod_{r=1..n} mu_j(r),
// geometric beyond the point where the service rate becomes constant.
struct NodeMarginal {
    int node = 0;
    double alpha = 0.0;
    double b = 0.0;           // normalizing constant, pi_j(0)
    ServiceRate service;      // copy; the marginal is self-contained
    double tail_ratio = 0.0;  // alpha / mu(tail), < 1 for a stable node

    double pmf(int n) const;
    // Total mass strictly above level c (analytic geometric tail).
    double tail_mass_above(int c) const;
    double mean() const;
    double utilization() const;  // P[N_j > 0]
    double throughput() const;   // sum_n pi(n) mu(n); equals alpha
};

struct OpenProductForm {
    std::vector<NodeMarginal> marginals;
    double joint_pmf(const State& n) const;
};

// Closed-network stationary law on the population simplex:
//   pi(n) = B prod_j alpha_j^{n_j} / prod_{r=1..n_j} mu_j(r).
struct ClosedProductForm {
    Eigen::VectorXd alpha;
    double B = 0.0;
    double G = 0.0;
    std::vector<ServiceRate> service;
    StateSpace space;                // the enumerated simplex
    Eigen::VectorXd probabilities;   // aligned with space enumeration

    double pmf(const State& n) const;
};

struct NodeStability {
    int node = 0;
    bool stable = false;
    double rho = 0.0;  // alpha over the eventual constant rate
};

// Per-node stability verdicts; constant rates are stable iff rho < 1,
// eventually-constant tables iff the tail ratio is < 1.
std::vector<NodeStability> check_stability(const NetworkModel& model,
                                           const TrafficSolution& traffic);

// Open-network product form. Throws UnstableNode if any b_j series diverges.
OpenProductForm open_stationary(const NetworkModel& model, const TrafficSolution& traffic);

// Closed-network product form using a normalizing constant from compute_B.
ClosedProductForm closed_stationary(const NetworkModel& model, const TrafficSolution& traffic,
                                    const NormalizingConstant& norm);

// Residuals of the per-node and exogenous station balance equations at state
// n, evaluated with the product-form law. All zero (to rounding) for a valid
// open product form.
struct PartialBalanceResiduals {
    std::vector<double> per_node;
    double exogenous = 0.0;
    double max() const;
};

PartialBalanceResiduals verify_partial_balance(const NetworkModel& model,
                                               const OpenProductForm& pf, const State& n);

struct NodeMetrics {
    double mean_queue = 0.0;
    double utilization = 0.0;
    double throughput = 0.0;
};

std::vector<NodeMetrics> metrics(const OpenProductForm& pf);
std::vector<NodeMetrics> metrics(const ClosedProductForm& pf);

// Smallest per-node caps such that the product-form mass above each cap is
// below tail_target / J, i.e. the joint law charges the box with all but
// ~tail_target of its mass. Caps never fall below min_cap or the point where
// a rate table goes constant.
std::vector<int> choose_caps(const OpenProductForm& pf, double tail_target, int min_cap = 2);

}  // namespace qnet

#endif  // QNET_PRODUCTFORM_HPP
