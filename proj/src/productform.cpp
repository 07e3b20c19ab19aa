#include "qnet/productform.hpp"

#include <algorithm>
#include <cmath>

#include "qnet/errors.hpp"
#include "qnet/numerics.hpp"

namespace qnet {

double NodeMarginal::pmf(int n) const {
    if (n < 0) return 0.0;
    double w = b;
    int k = service.tail_start();
    for (int r = 1; r <= std::min(n, k); ++r) w *= alpha / service.at(r);
    if (n > k) w *= std::pow(tail_ratio, n - k);
    return w;
}

double NodeMarginal::tail_mass_above(int c) const {
    if (c < 0) return 1.0;
    int k = service.tail_start();
    if (c >= k) return pmf(c) * tail_ratio / (1.0 - tail_ratio);
    // walk the table region, then close with the geometric remainder
    double total = 0.0;
    double w = pmf(c);
    for (int n = c + 1; n <= k; ++n) {
        w *= alpha / service.at(n);
        total += w;
    }
    total += w * tail_ratio / (1.0 - tail_ratio);
    return total;
}

double NodeMarginal::mean() const {
    int k = service.tail_start();
    double head = 0.0;
    double w = b;
    for (int n = 1; n <= k; ++n) {
        w *= alpha / service.at(n);
        head += n * w;
    }
    // sum_{n>k} n pi(k) q^{n-k} = pi(k) [ k q/(1-q) + q/(1-q)^2 ]
    double q = tail_ratio;
    return head + w * (k * q / (1.0 - q) + q / ((1.0 - q) * (1.0 - q)));
}

double NodeMarginal::utilization() const { return 1.0 - b; }

double NodeMarginal::throughput() const {
    int k = service.tail_start();
    double head = 0.0;
    double w = b;
    for (int n = 1; n <= k; ++n) {
        w *= alpha / service.at(n);
        head += service.at(n) * w;
    }
    return head + service.tail_rate() * w * tail_ratio / (1.0 - tail_ratio);
}

double OpenProductForm::joint_pmf(const State& n) const {
    double p = 1.0;
    for (std::size_t j = 0; j < marginals.size(); ++j) p *= marginals[j].pmf(n[j]);
    return p;
}

double ClosedProductForm::pmf(const State& n) const {
    double w = B;
    for (std::size_t j = 0; j < service.size(); ++j) {
        for (int r = 1; r <= n[j]; ++r) w *= alpha(static_cast<Eigen::Index>(j)) / service[j].at(r);
    }
    return w;
}

std::vector<NodeStability> check_stability(const NetworkModel& model,
                                           const TrafficSolution& traffic) {
    std::vector<NodeStability> out;
    for (int j = 0; j < model.nodes(); ++j) {
        double rho = traffic.alpha(j) / model.service[j].tail_rate();
        out.push_back({j, rho < 1.0, rho});
    }
    return out;
}

namespace {

// b_j as the reciprocal of sum_{i>=0} alpha^i / prod_{r<=i} mu(r), summed
// until the terms stop mattering. Non-decreasing terms for 50 consecutive
// indices mean the series diverges.
double marginal_b(int node, double alpha, const ServiceRate& service) {
    CompensatedSum<double> sum;
    double term = 1.0;
    sum.add(term);
    double prev = term;
    int non_decreasing = 0;
    for (int i = 1; i < 1000000; ++i) {
        term *= alpha / service.at(i);
        sum.add(term);
        if (term < 1e-16 * sum.value()) return 1.0 / sum.value();
        if (term >= prev) {
            if (++non_decreasing >= 50)
                throw UnstableNode(node, "node " + std::to_string(node + 1) +
                                             ": normalizing series diverges (rho >= 1)");
        } else {
            non_decreasing = 0;
        }
        prev = term;
    }
    throw UnstableNode(node, "node " + std::to_string(node + 1) +
                                 ": normalizing series did not converge");
}

}  // namespace

OpenProductForm open_stationary(const NetworkModel& model, const TrafficSolution& traffic) {
    OpenProductForm pf;
    for (int j = 0; j < model.nodes(); ++j) {
        const ServiceRate& service = model.service[j];
        double alpha = traffic.alpha(j);
        double rho_tail = alpha / service.tail_rate();
        if (rho_tail >= 1.0)
            throw UnstableNode(j, "node " + std::to_string(j + 1) + " is unstable (rho = " +
                                      std::to_string(rho_tail) + ")");
        double b = service.is_constant() ? 1.0 - rho_tail : marginal_b(j, alpha, service);
        pf.marginals.push_back({j, alpha, b, service, rho_tail});
    }
    return pf;
}

ClosedProductForm closed_stationary(const NetworkModel& model, const TrafficSolution& traffic,
                                    const NormalizingConstant& norm) {
    ClosedProductForm pf{traffic.alpha,
                         norm.B,
                         norm.G,
                         model.service,
                         StateSpace::closed_simplex(model.nodes(), model.closed().population),
                         {}};
    pf.probabilities.resize(static_cast<Eigen::Index>(pf.space.size()));
    for (std::size_t i = 0; i < pf.space.size(); ++i) {
        pf.probabilities(static_cast<Eigen::Index>(i)) = pf.pmf(pf.space.state(i));
    }
    return pf;
}

double PartialBalanceResiduals::max() const {
    double m = exogenous;
    for (double v : per_node) m = std::max(m, v);
    return m;
}

PartialBalanceResiduals verify_partial_balance(const NetworkModel& model,
                                               const OpenProductForm& pf, const State& n) {
    const auto& routing = model.routing;
    const auto& nu = model.open().nu;
    int j_count = model.nodes();
    double pi_n = pf.joint_pmf(n);

    PartialBalanceResiduals res;
    // Station balance at node j: probability flux out of n due to a service
    // completion at j balances the flux into n that re-creates that state
    // (an arrival into j at T_j.n, or a transfer k -> j at T_jk n).
    for (int j = 0; j < j_count; ++j) {
        if (n[j] == 0) {
            res.per_node.push_back(0.0);
            continue;
        }
        double mu_j = model.service[j].at(n[j]);
        double lhs = pi_n * mu_j * (routing.exit(j) + routing.p.row(j).sum());

        State dep = n;
        dep[j] -= 1;
        double rhs = pf.joint_pmf(dep) * nu(j);
        for (int k = 0; k < j_count; ++k) {
            if (routing.p(k, j) <= 0.0) continue;
            State m = n;
            m[j] -= 1;
            m[k] += 1;
            rhs += pf.joint_pmf(m) * routing.p(k, j) * model.service[k].at(m[k]);
        }
        res.per_node.push_back(std::abs(lhs - rhs));
    }
    // Exogenous balance: flux out of n due to outside arrivals balances the
    // flux into n due to departures to the outside.
    double lhs = pi_n * nu.sum();
    double rhs = 0.0;
    for (int k = 0; k < j_count; ++k) {
        if (routing.exit(k) <= 0.0) continue;
        State m = n;
        m[k] += 1;
        rhs += pf.joint_pmf(m) * routing.exit(k) * model.service[k].at(m[k]);
    }
    res.exogenous = std::abs(lhs - rhs);
    return res;
}

std::vector<NodeMetrics> metrics(const OpenProductForm& pf) {
    std::vector<NodeMetrics> out;
    for (const auto& m : pf.marginals) {
        out.push_back({m.mean(), m.utilization(), m.throughput()});
    }
    return out;
}

std::vector<int> choose_caps(const OpenProductForm& pf, double tail_target, int min_cap) {
    std::vector<int> caps;
    double per_node = tail_target / static_cast<double>(pf.marginals.size());
    for (const auto& m : pf.marginals) {
        int cap = std::max(min_cap, m.service.tail_start());
        while (m.tail_mass_above(cap) >= per_node && cap < 100000) ++cap;
        caps.push_back(cap);
    }
    return caps;
}

std::vector<NodeMetrics> metrics(const ClosedProductForm& pf) {
    int j_count = pf.space.nodes();
    std::vector<NodeMetrics> out(static_cast<std::size_t>(j_count));
    for (std::size_t i = 0; i < pf.space.size(); ++i) {
        const State& n = pf.space.state(i);
        double p = pf.probabilities(static_cast<Eigen::Index>(i));
        for (int j = 0; j < j_count; ++j) {
            out[j].mean_queue += p * n[j];
            if (n[j] > 0) {
                out[j].utilization += p;
                out[j].throughput += p * pf.service[j].at(n[j]);
            }
        }
    }
    return out;
}

}  // namespace qnet
