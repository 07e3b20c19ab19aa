#ifndef QNET_MODEL_HPP
#define QNET_MODEL_HPP

#include <Eigen/Dense>
#include <string>
#include <variant>
#include <vector>

namespace qnet {

// Tolerance for probability row sums in human-authored inputs.
inline constexpr double kRowSumTol = 1e-12;

// Customer routing between nodes. p(j,k) is the probability that a customer
// leaving node j moves to node k; exit(j) is the probability of leaving the
// network. Diagonal entries must be zero (no immediate return to the node
// just left).
struct RoutingMatrix {
    Eigen::MatrixXd p;     // J x J
    Eigen::VectorXd exit;  // length J, exit(j) = 1 - sum_k p(j,k)

    int nodes() const { return static_cast<int>(p.rows()); }

    // Builds the matrix and derives exit probabilities from row sums.
    static RoutingMatrix from_probabilities(Eigen::MatrixXd probs);
};

// Service rate as a function of the local queue length. Either a single
// constant, or a finite table mu(1..K) continued as mu(K) for n > K.
// mu(0) is always 0.
class ServiceRate {
  public:
    static ServiceRate constant(double mu);
    static ServiceRate table(std::vector<double> rates);

    double at(int n) const {
        if (n <= 0) return 0.0;
        int k = static_cast<int>(rates_.size());
        return n <= k ? rates_[n - 1] : rates_.back();
    }
    bool is_constant() const { return rates_.size() == 1; }
    double tail_rate() const { return rates_.back(); }
    // Queue length from which the rate stays constant.
    int tail_start() const { return static_cast<int>(rates_.size()); }
    const std::vector<double>& table_values() const { return rates_; }

  private:
    std::vector<double> rates_;  // values mu(1..K), K >= 1
};

struct OpenKind {
    Eigen::VectorXd nu;  // exogenous Poisson arrival rates, length J
};

struct ClosedKind {
    int population = 1;  // fixed number of circulating customers N
};

struct NetworkModel {
    RoutingMatrix routing;
    std::vector<ServiceRate> service;
    std::variant<OpenKind, ClosedKind> kind;

    int nodes() const { return routing.nodes(); }
    bool is_open() const { return std::holds_alternative<OpenKind>(kind); }
    const OpenKind& open() const { return std::get<OpenKind>(kind); }
    const ClosedKind& closed() const { return std::get<ClosedKind>(kind); }
};

struct Violation {
    std::string code;        // stable machine-readable identifier
    std::vector<int> nodes;  // 0-based indices of offending nodes, may be empty
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    std::vector<std::string> warnings;
    bool ok() const { return violations.empty(); }
};

// Structural validation. Violations are data, not exceptions.
ValidationReport validate(const NetworkModel& model);

// Per node: can a customer starting there eventually leave the network?
std::vector<bool> reachable_exit(const RoutingMatrix& routing);

}  // namespace qnet

#endif  // QNET_MODEL_HPP
