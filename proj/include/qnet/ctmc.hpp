#ifndef QNET_CTMC_HPP
#define QNET_CTMC_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "qnet/model.hpp"
#include "qnet/traffic.hpp"

namespace qnet {

// Queue-length vector, one entry per node.
using State = std::vector<int>;

// State-change operators of the network process:
//   Transfer  j -> k   (defined when n_j > 0)
//   Departure from j   (defined when n_j > 0)
//   Arrival   at k     (always defined on the free space)
enum class OpKind { Transfer, Departure, Arrival };

struct Operator {
    OpKind kind;
    int from = -1;  // j for Transfer/Departure
    int to = -1;    // k for Transfer/Arrival
};

// Result state, or nullopt when the operator is undefined at n.
std::optional<State> apply_operator(const State& n, const Operator& op);

// Enumerated finite state space with a state <-> ordinal bijection.
// Enumeration is lexicographically ascending with the first coordinate most
// significant, so indices are reproducible.
class StateSpace {
  public:
    enum class Kind { OpenTruncated, ClosedSimplex };

    // Spaces bigger than this many states are refused (GuardExceeded).
    static constexpr std::size_t kDefaultGuard = 10000000;

    // Per-node caps; size (cap_1+1) * ... * (cap_J+1).
    static StateSpace open_truncated(std::vector<int> caps, std::size_t guard = kDefaultGuard);
    // All states with coordinates summing to the population.
    static StateSpace closed_simplex(int nodes, int population,
                                     std::size_t guard = kDefaultGuard);

    Kind kind() const { return kind_; }
    int nodes() const { return nodes_; }
    int population() const { return population_; }
    const std::vector<int>& caps() const { return caps_; }
    std::size_t size() const { return states_.size(); }
    const State& state(std::size_t i) const { return states_[i]; }
    const std::vector<State>& states() const { return states_; }

    bool contains(const State& n) const;
    std::size_t index_of(const State& n) const;  // throws if not contained

  private:
    Kind kind_;
    int nodes_ = 0;
    int population_ = 0;          // ClosedSimplex only
    std::vector<int> caps_;       // OpenTruncated only
    std::vector<std::size_t> strides_;  // OpenTruncated mixed-radix index
    std::vector<State> states_;
    std::vector<std::vector<std::size_t>> simplex_rank_;  // ClosedSimplex rank table
};

// Sparse CTMC generator over a StateSpace enumeration. Off-diagonal entries
// are transition rates; each diagonal entry is minus its row sum.
struct Generator {
    Eigen::SparseMatrix<double, Eigen::RowMajor> Q;

    std::size_t size() const { return static_cast<std::size_t>(Q.rows()); }
    double max_total_rate() const;   // max_n -q(n,n)
    double max_abs_row_sum() const;  // should be ~0 by construction
};

// Open-network generator on a truncated box; transitions that would leave
// the box are dropped. Throws CapacityTooSmall if any cap < 1.
Generator build_generator_open(const NetworkModel& model, const StateSpace& space);

// Closed-network generator on the population simplex.
Generator build_generator_closed(const NetworkModel& model, const StateSpace& space);

enum class SolveMethod {
    Auto,   // dense up to dense_limit states, power iteration above
    Dense,  // direct solve with one balance row replaced by normalization
    Power,  // power iteration on the uniformized chain; componentwise stable
};

struct SolveOptions {
    SolveMethod method = SolveMethod::Auto;
    std::size_t dense_limit = 20000;
    double power_tol = 1e-12;     // stop when successive iterates differ less (inf norm)
    double power_l1_tol = 0.0;    // optional extra L1 stopping requirement
    std::size_t max_iterations = 500000;
};

// Stationary distribution of an irreducible generator: pi Q = 0, sum pi = 1.
// Throws SingularOrReducible when the solve fails, produces components below
// -1e-12, or the iteration does not converge.
Eigen::VectorXd solve_stationary(const Generator& gen, const SolveOptions& opts = {});

// ||pi Q||_inf
double global_balance_residual(const Generator& gen, const Eigen::VectorXd& pi);

// Time-reversal: q'(n',n) = pi(n) q(n,n') / pi(n'). Requires pi(n) > 0
// everywhere (ZeroProbabilityState otherwise).
Generator reversed_generator(const Generator& gen, const Eigen::VectorXd& pi);

// One closed-form reversed transition out of state n.
struct ReversedRate {
    Operator op;
    State target;
    double rate;
};

// Reversed rates of an open network straight from the traffic solution,
// without building or inverting any matrix. Includes every operator that is
// defined at n, even when its rate is zero.
std::vector<ReversedRate> reversed_rates_formula(const NetworkModel& model,
                                                 const TrafficSolution& traffic,
                                                 const State& n);

// Debug dump: one row_state,col_state,rate line per off-diagonal entry,
// states rendered as quoted comma-joined coordinates.
void dump_generator_csv(const Generator& gen, const StateSpace& space, std::ostream& out);

}  // namespace qnet

#endif  // QNET_CTMC_HPP
