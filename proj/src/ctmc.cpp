#include "qnet/ctmc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qnet/errors.hpp"
#include "qnet/json_io.hpp"

namespace qnet {

namespace {

std::string state_label(const State& n) {
    std::string s;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(n[i]);
    }
    return s;
}

}  // namespace

std::optional<State> apply_operator(const State& n, const Operator& op) {
    State m = n;
    switch (op.kind) {
        case OpKind::Transfer:
            if (n[op.from] <= 0) return std::nullopt;
            m[op.from] -= 1;
            m[op.to] += 1;
            return m;
        case OpKind::Departure:
            if (n[op.from] <= 0) return std::nullopt;
            m[op.from] -= 1;
            return m;
        case OpKind::Arrival:
            m[op.to] += 1;
            return m;
    }
    return std::nullopt;
}

StateSpace StateSpace::open_truncated(std::vector<int> caps, std::size_t guard) {
    if (caps.empty()) throw CapacityTooSmall("need at least one node");
    for (int c : caps) {
        if (c < 1) throw CapacityTooSmall("per-node cap must be >= 1");
    }
    StateSpace space;
    space.kind_ = Kind::OpenTruncated;
    space.nodes_ = static_cast<int>(caps.size());
    space.caps_ = std::move(caps);

    std::size_t total = 1;
    for (int c : space.caps_) {
        std::size_t dim = static_cast<std::size_t>(c) + 1;
        if (total > guard / dim)
            throw GuardExceeded("truncated state space exceeds the state-count guard");
        total *= dim;
    }
    space.strides_.assign(space.nodes_, 1);
    for (int j = space.nodes_ - 2; j >= 0; --j) {
        space.strides_[j] = space.strides_[j + 1] * (static_cast<std::size_t>(space.caps_[j + 1]) + 1);
    }
    space.states_.reserve(total);
    State n(space.nodes_, 0);
    for (std::size_t i = 0; i < total; ++i) {
        space.states_.push_back(n);
        for (int j = space.nodes_ - 1; j >= 0; --j) {
            if (++n[j] <= space.caps_[j]) break;
            n[j] = 0;
        }
    }
    return space;
}

StateSpace StateSpace::closed_simplex(int nodes, int population, std::size_t guard) {
    if (nodes < 1) throw CapacityTooSmall("need at least one node");
    if (population < 0) throw CapacityTooSmall("population must be >= 0");
    StateSpace space;
    space.kind_ = Kind::ClosedSimplex;
    space.nodes_ = nodes;
    space.population_ = population;

    // count(j, m): states of a j-node simplex holding m customers.
    std::vector<std::vector<std::size_t>> count(nodes + 1,
                                                std::vector<std::size_t>(population + 1, 0));
    for (int m = 0; m <= population; ++m) count[1][m] = 1;
    for (int j = 2; j <= nodes; ++j) {
        for (int m = 0; m <= population; ++m) {
            std::size_t acc = 0;
            for (int v = 0; v <= m; ++v) {
                acc += count[j - 1][m - v];
                if (acc > guard) throw GuardExceeded("simplex exceeds the state-count guard");
            }
            count[j][m] = acc;
        }
    }
    space.simplex_rank_ = count;

    space.states_.reserve(count[nodes][population]);
    State n(nodes, 0);
    auto emit_all = [&](auto&& self, int j, int remaining) -> void {
        if (j == nodes - 1) {
            n[j] = remaining;
            space.states_.push_back(n);
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            n[j] = v;
            self(self, j + 1, remaining - v);
        }
    };
    emit_all(emit_all, 0, population);
    return space;
}

bool StateSpace::contains(const State& n) const {
    if (static_cast<int>(n.size()) != nodes_) return false;
    if (kind_ == Kind::OpenTruncated) {
        for (int j = 0; j < nodes_; ++j) {
            if (n[j] < 0 || n[j] > caps_[j]) return false;
        }
        return true;
    }
    int sum = 0;
    for (int v : n) {
        if (v < 0) return false;
        sum += v;
    }
    return sum == population_;
}

std::size_t StateSpace::index_of(const State& n) const {
    if (!contains(n)) throw Error("state " + state_label(n) + " outside the state space");
    if (kind_ == Kind::OpenTruncated) {
        std::size_t idx = 0;
        for (int j = 0; j < nodes_; ++j) idx += static_cast<std::size_t>(n[j]) * strides_[j];
        return idx;
    }
    // Rank in lexicographic order: states whose prefix is strictly smaller.
    std::size_t rank = 0;
    int remaining = population_;
    for (int j = 0; j < nodes_ - 1; ++j) {
        for (int v = 0; v < n[j]; ++v) rank += simplex_rank_[nodes_ - 1 - j][remaining - v];
        remaining -= n[j];
    }
    return rank;
}

double Generator::max_total_rate() const {
    double m = 0.0;
    for (int i = 0; i < Q.outerSize(); ++i) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Q, i); it; ++it) {
            if (it.row() == it.col()) m = std::max(m, -it.value());
        }
    }
    return m;
}

double Generator::max_abs_row_sum() const {
    double worst = 0.0;
    for (int i = 0; i < Q.outerSize(); ++i) {
        double row = 0.0;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Q, i); it; ++it) {
            row += it.value();
        }
        worst = std::max(worst, std::abs(row));
    }
    return worst;
}

namespace {

using Triplet = Eigen::Triplet<double>;

Generator assemble(std::vector<Triplet>& entries, std::size_t size) {
    Generator gen;
    gen.Q.resize(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
    gen.Q.setFromTriplets(entries.begin(), entries.end());
    // Diagonal = minus row sum of the off-diagonal part.
    std::vector<Triplet> diag;
    diag.reserve(size);
    for (int i = 0; i < gen.Q.outerSize(); ++i) {
        double row = 0.0;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(gen.Q, i); it; ++it) {
            row += it.value();
        }
        diag.emplace_back(i, i, -row);
    }
    entries.insert(entries.end(), diag.begin(), diag.end());
    gen.Q.setFromTriplets(entries.begin(), entries.end());
    return gen;
}

}  // namespace

Generator build_generator_open(const NetworkModel& model, const StateSpace& space) {
    if (space.kind() != StateSpace::Kind::OpenTruncated)
        throw Error("open generator needs a truncated open state space");
    const auto& nu = model.open().nu;
    const auto& routing = model.routing;
    int j_count = model.nodes();

    std::vector<Triplet> entries;
    entries.reserve(space.size() * (2 * static_cast<std::size_t>(j_count) + 2));
    for (std::size_t i = 0; i < space.size(); ++i) {
        const State& n = space.state(i);
        for (int j = 0; j < j_count; ++j) {
            if (n[j] == 0) continue;
            double mu = model.service[j].at(n[j]);
            for (int k = 0; k < j_count; ++k) {
                if (routing.p(j, k) <= 0.0) continue;
                if (n[k] + 1 > space.caps()[k]) continue;  // dropped at the box wall
                State m = n;
                m[j] -= 1;
                m[k] += 1;
                entries.emplace_back(static_cast<int>(i), static_cast<int>(space.index_of(m)),
                                     routing.p(j, k) * mu);
            }
            if (routing.exit(j) > 0.0) {
                State m = n;
                m[j] -= 1;
                entries.emplace_back(static_cast<int>(i), static_cast<int>(space.index_of(m)),
                                     routing.exit(j) * mu);
            }
        }
        for (int k = 0; k < j_count; ++k) {
            if (nu(k) <= 0.0) continue;
            if (n[k] + 1 > space.caps()[k]) continue;
            State m = n;
            m[k] += 1;
            entries.emplace_back(static_cast<int>(i), static_cast<int>(space.index_of(m)), nu(k));
        }
    }
    return assemble(entries, space.size());
}

Generator build_generator_closed(const NetworkModel& model, const StateSpace& space) {
    if (space.kind() != StateSpace::Kind::ClosedSimplex)
        throw Error("closed generator needs a simplex state space");
    const auto& routing = model.routing;
    int j_count = model.nodes();

    std::vector<Triplet> entries;
    entries.reserve(space.size() * static_cast<std::size_t>(j_count) * 2);
    for (std::size_t i = 0; i < space.size(); ++i) {
        const State& n = space.state(i);
        for (int j = 0; j < j_count; ++j) {
            if (n[j] == 0) continue;
            double mu = model.service[j].at(n[j]);
            for (int k = 0; k < j_count; ++k) {
                if (routing.p(j, k) <= 0.0) continue;
                State m = n;
                m[j] -= 1;
                m[k] += 1;
                entries.emplace_back(static_cast<int>(i), static_cast<int>(space.index_of(m)),
                                     routing.p(j, k) * mu);
            }
        }
    }
    return assemble(entries, space.size());
}

namespace {

Eigen::VectorXd solve_dense(const Generator& gen) {
    const auto n = gen.Q.rows();
    Eigen::MatrixXd a = Eigen::MatrixXd(gen.Q).transpose();
    a.row(n - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    Eigen::VectorXd pi = lu.solve(b);
    if (!pi.allFinite()) throw SingularOrReducible("dense stationary solve produced non-finite values");
    return pi;
}

Eigen::VectorXd solve_power(const Generator& gen, const SolveOptions& opts) {
    const auto n = gen.Q.rows();
    double lambda = 1.05 * gen.max_total_rate();
    if (lambda <= 0.0) throw SingularOrReducible("generator has no transitions");

    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    Eigen::VectorXd y(n);
    for (std::size_t it = 0; it < opts.max_iterations; ++it) {
        // y = x P with P = I + Q / lambda
        y.noalias() = gen.Q.transpose() * x;
        y = x + y / lambda;
        y /= y.sum();
        double diff = (y - x).lpNorm<Eigen::Infinity>();
        bool l1_ok = opts.power_l1_tol <= 0.0 || (y - x).lpNorm<1>() < opts.power_l1_tol;
        x.swap(y);
        if (diff < opts.power_tol && l1_ok) return x;
    }
    throw SingularOrReducible("power iteration did not converge within the iteration budget");
}

}  // namespace

Eigen::VectorXd solve_stationary(const Generator& gen, const SolveOptions& opts) {
    const std::size_t n = gen.size();
    if (n == 0) throw SingularOrReducible("empty generator");

    Eigen::VectorXd pi;
    switch (opts.method) {
        case SolveMethod::Dense:
            pi = solve_dense(gen);
            break;
        case SolveMethod::Power:
            pi = solve_power(gen, opts);
            break;
        case SolveMethod::Auto:
            pi = n <= opts.dense_limit ? solve_dense(gen) : solve_power(gen, opts);
            break;
    }

    double negative = pi.minCoeff();
    if (negative < -1e-12)
        throw SingularOrReducible("stationary solve produced component " + std::to_string(negative));
    pi = pi.cwiseMax(0.0);
    double total = pi.sum();
    if (!(total > 0.0)) throw SingularOrReducible("stationary solve produced a zero vector");
    pi /= total;
    return pi;
}

double global_balance_residual(const Generator& gen, const Eigen::VectorXd& pi) {
    Eigen::VectorXd r = gen.Q.transpose() * pi;
    return r.lpNorm<Eigen::Infinity>();
}

Generator reversed_generator(const Generator& gen, const Eigen::VectorXd& pi) {
    const auto n = gen.Q.rows();
    if (pi.size() != n) throw Error("pi dimension does not match the generator");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(pi(i) > 0.0))
            throw ZeroProbabilityState("pi has a non-positive component at index " + std::to_string(i));
    }
    // q'(m,n) = pi(n) q(n,m) / pi(m): scale rows/columns of Q, then transpose.
    Eigen::SparseMatrix<double, Eigen::RowMajor> scaled = gen.Q;
    for (int i = 0; i < scaled.outerSize(); ++i) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(scaled, i); it; ++it) {
            it.valueRef() = pi(it.row()) * it.value() / pi(it.col());
        }
    }
    Generator rev;
    rev.Q = Eigen::SparseMatrix<double, Eigen::RowMajor>(scaled.transpose());
    // Fix the diagonal: minus the off-diagonal row sum.
    for (int i = 0; i < rev.Q.outerSize(); ++i) {
        double row = 0.0;
        double* diag = nullptr;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(rev.Q, i); it; ++it) {
            if (it.row() == it.col()) {
                diag = &it.valueRef();
            } else {
                row += it.value();
            }
        }
        if (diag == nullptr) throw Error("generator row without a diagonal entry");
        *diag = -row;
    }
    return rev;
}

std::vector<ReversedRate> reversed_rates_formula(const NetworkModel& model,
                                                 const TrafficSolution& traffic,
                                                 const State& n) {
    if (!model.is_open()) throw Error("reversed rate formulas apply to open networks");
    const auto& routing = model.routing;
    const auto& nu = model.open().nu;
    const auto& alpha = traffic.alpha;
    int j_count = model.nodes();

    std::vector<ReversedRate> out;
    for (int j = 0; j < j_count; ++j) {
        if (n[j] == 0) continue;
        double mu = model.service[j].at(n[j]);
        for (int k = 0; k < j_count; ++k) {
            if (k == j) continue;
            Operator op{OpKind::Transfer, j, k};
            State m = *apply_operator(n, op);
            out.push_back({op, std::move(m), alpha(k) * routing.p(k, j) * mu / alpha(j)});
        }
        Operator dep{OpKind::Departure, j, -1};
        State m = *apply_operator(n, dep);
        out.push_back({dep, std::move(m), nu(j) * mu / alpha(j)});
    }
    for (int k = 0; k < j_count; ++k) {
        Operator arr{OpKind::Arrival, -1, k};
        State m = *apply_operator(n, arr);
        out.push_back({arr, std::move(m), alpha(k) * routing.exit(k)});
    }
    return out;
}

void dump_generator_csv(const Generator& gen, const StateSpace& space, std::ostream& out) {
    out << "row_state,col_state,rate\n";
    for (int i = 0; i < gen.Q.outerSize(); ++i) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(gen.Q, i); it; ++it) {
            if (it.row() == it.col()) continue;
            out << '"' << state_label(space.state(static_cast<std::size_t>(it.row()))) << "\",\""
                << state_label(space.state(static_cast<std::size_t>(it.col()))) << "\","
                << format_double(it.value()) << "\n";
        }
    }
}

}  // namespace qnet
