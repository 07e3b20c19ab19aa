#include "qnet/model.hpp"

#include <cmath>
#include <deque>
#include <sstream>

#include "qnet/errors.hpp"

namespace qnet {

RoutingMatrix RoutingMatrix::from_probabilities(Eigen::MatrixXd probs) {
    if (probs.rows() != probs.cols() || probs.rows() < 1) {
        throw SpecParseError("routing matrix must be square and non-empty");
    }
    RoutingMatrix r;
    r.exit = Eigen::VectorXd::Ones(probs.rows()) - probs.rowwise().sum();
    r.p = std::move(probs);
    return r;
}

ServiceRate ServiceRate::constant(double mu) {
    ServiceRate s;
    s.rates_ = {mu};
    return s;
}

ServiceRate ServiceRate::table(std::vector<double> rates) {
    if (rates.empty()) throw SpecParseError("service rate table must not be empty");
    ServiceRate s;
    s.rates_ = std::move(rates);
    return s;
}

namespace {

std::string join_nodes(const std::vector<int>& nodes) {
    std::ostringstream os;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (i) os << ",";
        os << nodes[i] + 1;  // 1-based in messages
    }
    return os.str();
}

// Nodes reachable from `start` along edges with positive probability.
std::vector<bool> forward_reachable(const Eigen::MatrixXd& p, const std::vector<int>& start) {
    int j_count = static_cast<int>(p.rows());
    std::vector<bool> seen(j_count, false);
    std::deque<int> queue;
    for (int s : start) {
        if (!seen[s]) {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while (!queue.empty()) {
        int j = queue.front();
        queue.pop_front();
        for (int k = 0; k < j_count; ++k) {
            if (!seen[k] && p(j, k) > 0.0) {
                seen[k] = true;
                queue.push_back(k);
            }
        }
    }
    return seen;
}

bool irreducible(const Eigen::MatrixXd& p) {
    int j_count = static_cast<int>(p.rows());
    if (j_count == 1) return true;  // single node, trivially one class
    for (int s = 0; s < j_count; ++s) {
        auto seen = forward_reachable(p, {s});
        for (bool b : seen) {
            if (!b) return false;
        }
    }
    return true;
}

}  // namespace

std::vector<bool> reachable_exit(const RoutingMatrix& routing) {
    int j_count = routing.nodes();
    // Backward traversal from every node with positive exit probability.
    std::vector<bool> can(j_count, false);
    std::deque<int> queue;
    for (int j = 0; j < j_count; ++j) {
        if (routing.exit(j) > 0.0) {
            can[j] = true;
            queue.push_back(j);
        }
    }
    while (!queue.empty()) {
        int k = queue.front();
        queue.pop_front();
        for (int j = 0; j < j_count; ++j) {
            if (!can[j] && routing.p(j, k) > 0.0) {
                can[j] = true;
                queue.push_back(j);
            }
        }
    }
    return can;
}

ValidationReport validate(const NetworkModel& model) {
    ValidationReport report;
    const auto& r = model.routing;
    int j_count = model.nodes();

    auto add = [&report](std::string code, std::vector<int> nodes, std::string message) {
        report.violations.push_back({std::move(code), std::move(nodes), std::move(message)});
    };

    if (static_cast<int>(model.service.size()) != j_count) {
        add("service_size", {},
            "service rate list has " + std::to_string(model.service.size()) +
                " entries for " + std::to_string(j_count) + " nodes");
        return report;
    }

    std::vector<int> bad_prob, self_loop, bad_row, bad_exit;
    for (int j = 0; j < j_count; ++j) {
        double row = 0.0;
        for (int k = 0; k < j_count; ++k) {
            double v = r.p(j, k);
            if (v < 0.0 || v > 1.0 || !std::isfinite(v)) bad_prob.push_back(j);
            row += v;
        }
        if (r.p(j, j) != 0.0) self_loop.push_back(j);
        if (row > 1.0 + kRowSumTol) bad_row.push_back(j);
        if (std::abs(r.exit(j) - (1.0 - row)) > kRowSumTol) bad_exit.push_back(j);
    }
    if (!bad_prob.empty())
        add("probability_range", bad_prob, "routing probabilities outside [0,1] at nodes " + join_nodes(bad_prob));
    if (!self_loop.empty())
        add("self_loop", self_loop, "p(j,j) != 0 at nodes " + join_nodes(self_loop));
    if (!bad_row.empty())
        add("row_sum", bad_row, "routing row sums exceed 1 at nodes " + join_nodes(bad_row));
    if (!bad_exit.empty())
        add("exit_mismatch", bad_exit,
            "exit probabilities inconsistent with row sums at nodes " + join_nodes(bad_exit));

    std::vector<int> bad_rate;
    for (int j = 0; j < j_count; ++j) {
        for (double mu : model.service[j].table_values()) {
            if (!(mu > 0.0) || !std::isfinite(mu)) {
                bad_rate.push_back(j);
                break;
            }
        }
    }
    if (!bad_rate.empty())
        add("service_rate", bad_rate, "service rates must be positive at nodes " + join_nodes(bad_rate));

    // Structural checks only make sense on a well-formed matrix.
    if (!bad_prob.empty() || !bad_row.empty()) return report;

    if (model.is_open()) {
        const auto& nu = model.open().nu;
        if (nu.size() != j_count) {
            add("nu_size", {}, "exogenous rate vector length does not match node count");
            return report;
        }
        std::vector<int> bad_nu, sources;
        for (int j = 0; j < j_count; ++j) {
            if (nu(j) < 0.0 || !std::isfinite(nu(j))) bad_nu.push_back(j);
            if (nu(j) > 0.0) sources.push_back(j);
        }
        if (!bad_nu.empty())
            add("nu_range", bad_nu, "exogenous rates must be >= 0 at nodes " + join_nodes(bad_nu));
        if (sources.empty()) {
            add("zero_exogenous", {}, "open network needs at least one node with nu > 0");
        } else {
            auto fed = forward_reachable(r.p, sources);
            std::vector<int> unfed;
            for (int j = 0; j < j_count; ++j) {
                if (!fed[j]) unfed.push_back(j);
            }
            if (!unfed.empty())
                add("unreachable_node", unfed,
                    "nodes never visited by any customer: " + join_nodes(unfed));
        }
        auto can_leave = reachable_exit(r);
        std::vector<int> trapped;
        for (int j = 0; j < j_count; ++j) {
            if (!can_leave[j]) trapped.push_back(j);
        }
        if (!trapped.empty())
            add("absorbing_subset", trapped,
                "absorbing subset {" + join_nodes(trapped) + "}: no path to the exterior");
        // Full irreducibility of the routing chain is stronger than needed for
        // the stationary law to exist; report it as a warning only.
        if (report.violations.empty() && j_count > 1 && !irreducible(r.p)) {
            report.warnings.push_back("routing chain restricted to the nodes is not irreducible");
        }
    } else {
        const auto& c = model.closed();
        if (c.population < 1) add("population", {}, "closed network population must be >= 1");
        std::vector<int> open_rows;
        for (int j = 0; j < j_count; ++j) {
            if (std::abs(r.exit(j)) > kRowSumTol || std::abs(r.p.row(j).sum() - 1.0) > kRowSumTol)
                open_rows.push_back(j);
        }
        if (!open_rows.empty()) {
            add("closed_row_sum", open_rows,
                "closed network rows must sum to exactly 1, offending nodes " + join_nodes(open_rows));
        } else if (!irreducible(r.p)) {
            add("not_irreducible", {}, "closed routing chain is not irreducible");
        }
    }
    return report;
}

}  // namespace qnet
