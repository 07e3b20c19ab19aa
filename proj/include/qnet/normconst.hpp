#ifndef QNET_NORMCONST_HPP
#define QNET_NORMCONST_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "qnet/model.hpp"
#include "qnet/traffic.hpp"

namespace qnet {

// Per-node loads rho_j = alpha_j / mu_j; only meaningful for constant rates.
using LoadVector = Eigen::VectorXd;

enum class GMethod {
    Enumeration,
    Convolution,
    HarrisonDistinct,
    HarrisonDegenerate,
    GeneralizedEnumeration,  // state-dependent rates
};

std::string to_string(GMethod method);

// G = sum over the population simplex of prod_j rho_j^{n_j}; the stationary
// weights of a closed network sum to G, so B = 1/G normalizes them.
struct NormalizingConstant {
    double G = 0.0;
    double log_G = 0.0;  // always valid, even when G overflows a double
    double B = 0.0;      // 1/G
    GMethod method = GMethod::Convolution;
};

// Loads equal within this relative tolerance are treated as coinciding;
// closer pairs make the distinct-load formula cancel catastrophically.
inline constexpr double kLoadDistinctTol = 1e-8;

inline constexpr std::size_t kDefaultSimplexGuard = 10000000;

// Exact simplex sum, the reference oracle. O(#states); refuses simplices
// bigger than the guard.
NormalizingConstant g_enumeration(const LoadVector& rho, int population,
                                  std::size_t guard = kDefaultSimplexGuard);

// g(j,n) = g(j-1,n) + rho_j g(j,n-1) recursion; O(J*N), unconditionally
// stable for positive loads. Production default.
NormalizingConstant g_convolution(const LoadVector& rho, int population);

// Closed form for pairwise-distinct loads:
//   G = sum_j rho_j^{N+J-1} / prod_{i != j} (rho_j - rho_i).
// O(J^2), independent of N. Throws DegenerateLoads when two loads coincide
// within kLoadDistinctTol.
NormalizingConstant g_harrison_distinct(const LoadVector& rho, int population);

// Grouping of equal loads. d(j) = number of OTHER nodes sharing node j's load.
struct Multiplicity {
    std::vector<std::vector<int>> groups;  // node indices per distinct load value
    static Multiplicity of(const LoadVector& rho, double rel_tol = kLoadDistinctTol);
    int d(int node) const;
};

// Repeated-load closed form: the distinct formula's limit under load
// coalescence, evaluated through the partial-fraction expansion of the
// generating function prod_t (1 - x_t z)^{-k_t}; each repeated group
// contributes derivative terms of order up to its multiplicity.
// Requires at least one repeated load.
NormalizingConstant g_harrison_degenerate(const LoadVector& rho, int population,
                                          const Multiplicity& mult);

// Normalizing constant of a validated closed model. Constant-rate models use
// the convolution value cross-checked against the matching Harrison form;
// state-dependent rates fall back to generalized enumeration of the weights
// prod_j alpha_j^{n_j} / prod_{r<=n_j} mu_j(r).
NormalizingConstant compute_B(const NetworkModel& model, const TrafficSolution& traffic);

// The generalized enumeration used by compute_B, exposed for cross-checks.
NormalizingConstant g_general_enumeration(const NetworkModel& model,
                                          const TrafficSolution& traffic,
                                          std::size_t guard = kDefaultSimplexGuard);

}  // namespace qnet

#endif  // QNET_NORMCONST_HPP
