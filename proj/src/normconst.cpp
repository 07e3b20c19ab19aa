#include "qnet/normconst.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qnet/errors.hpp"
#include "qnet/numerics.hpp"

namespace qnet {

namespace {

std::size_t simplex_size(int nodes, int population, std::size_t guard) {
    // binomial(N + J - 1, J - 1) with overflow guard
    long double size = 1.0L;
    for (int i = 1; i <= nodes - 1; ++i) {
        size *= static_cast<long double>(population + i) / i;
        if (size > 2.0L * static_cast<long double>(guard)) return guard + 1;
    }
    return static_cast<std::size_t>(size + 0.5L);
}

void check_loads(const LoadVector& rho) {
    if (rho.size() < 1) throw Error("load vector must not be empty");
    for (Eigen::Index j = 0; j < rho.size(); ++j) {
        if (!(rho(j) > 0.0) || !std::isfinite(rho(j)))
            throw Error("loads must be positive and finite");
    }
}

NormalizingConstant make_result(long double g, GMethod method) {
    NormalizingConstant out;
    out.G = static_cast<double>(g);
    out.log_G = static_cast<double>(std::log(g));
    out.B = static_cast<double>(1.0L / g);
    out.method = method;
    return out;
}

// Power by squaring in long double; the N+J-1 exponents feeding the Harrison
// forms lose too much to repeated pow() rounding otherwise.
long double powl_int(long double base, int exp) {
    long double r = 1.0L;
    long double b = base;
    int e = exp;
    while (e > 0) {
        if (e & 1) r *= b;
        b *= b;
        e >>= 1;
    }
    return r;
}

}  // namespace

std::string to_string(GMethod method) {
    switch (method) {
        case GMethod::Enumeration: return "enumeration";
        case GMethod::Convolution: return "convolution";
        case GMethod::HarrisonDistinct: return "harrison-distinct";
        case GMethod::HarrisonDegenerate: return "harrison-degenerate";
        case GMethod::GeneralizedEnumeration: return "generalized-enumeration";
    }
    return "unknown";
}

NormalizingConstant g_enumeration(const LoadVector& rho, int population, std::size_t guard) {
    check_loads(rho);
    if (population < 0) throw Error("population must be >= 0");
    int j_count = static_cast<int>(rho.size());
    if (simplex_size(j_count, population, guard) > guard)
        throw GuardExceeded("simplex too large to enumerate");

    CompensatedSum<long double> total;
    // Depth-first walk over the simplex carrying the partial product.
    auto walk = [&](auto&& self, int j, int remaining, long double weight) -> void {
        if (j == j_count - 1) {
            total.add(weight * powl_int(static_cast<long double>(rho(j)), remaining));
            return;
        }
        long double w = weight;
        for (int v = 0; v <= remaining; ++v) {
            self(self, j + 1, remaining - v, w);
            w *= static_cast<long double>(rho(j));
        }
    };
    walk(walk, 0, population, 1.0L);
    return make_result(total.value(), GMethod::Enumeration);
}

NormalizingConstant g_convolution(const LoadVector& rho, int population) {
    check_loads(rho);
    if (population < 0) throw Error("population must be >= 0");
    std::vector<long double> g(static_cast<std::size_t>(population) + 1, 0.0L);
    g[0] = 1.0L;
    for (Eigen::Index j = 0; j < rho.size(); ++j) {
        long double r = static_cast<long double>(rho(j));
        for (int n = 1; n <= population; ++n) {
            g[n] += r * g[n - 1];
        }
    }
    return make_result(g[population], GMethod::Convolution);
}

NormalizingConstant g_harrison_distinct(const LoadVector& rho, int population) {
    check_loads(rho);
    int j_count = static_cast<int>(rho.size());
    for (int j = 0; j < j_count; ++j) {
        for (int i = j + 1; i < j_count; ++i) {
            if (std::abs(rho(i) - rho(j)) <= kLoadDistinctTol * std::max(rho(i), rho(j)))
                throw DegenerateLoads("loads at nodes " + std::to_string(j + 1) + " and " +
                                      std::to_string(i + 1) + " coincide; use the degenerate form");
        }
    }
    CompensatedSum<long double> total;
    for (int j = 0; j < j_count; ++j) {
        long double denom = 1.0L;
        for (int i = 0; i < j_count; ++i) {
            if (i != j) denom *= static_cast<long double>(rho(j)) - static_cast<long double>(rho(i));
        }
        total.add(powl_int(static_cast<long double>(rho(j)), population + j_count - 1) / denom);
    }
    return make_result(total.value(), GMethod::HarrisonDistinct);
}

Multiplicity Multiplicity::of(const LoadVector& rho, double rel_tol) {
    check_loads(rho);
    int j_count = static_cast<int>(rho.size());
    std::vector<int> order(j_count);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return rho(a) < rho(b); });

    Multiplicity mult;
    for (int idx : order) {
        if (!mult.groups.empty()) {
            int rep = mult.groups.back().front();
            if (std::abs(rho(idx) - rho(rep)) <= rel_tol * std::max(rho(idx), rho(rep))) {
                mult.groups.back().push_back(idx);
                continue;
            }
        }
        mult.groups.push_back({idx});
    }
    return mult;
}

int Multiplicity::d(int node) const {
    for (const auto& group : groups) {
        for (int member : group) {
            if (member == node) return static_cast<int>(group.size()) - 1;
        }
    }
    throw Error("node " + std::to_string(node + 1) + " not present in the multiplicity table");
}

NormalizingConstant g_harrison_degenerate(const LoadVector& rho, int population,
                                          const Multiplicity& mult) {
    check_loads(rho);
    int j_count = static_cast<int>(rho.size());
    bool repeated = false;
    int member_count = 0;
    for (const auto& group : mult.groups) {
        member_count += static_cast<int>(group.size());
        if (group.size() > 1) repeated = true;
    }
    if (member_count != j_count) throw Error("multiplicity table does not cover every node");
    if (!repeated) throw Error("no repeated loads; the distinct-load form applies instead");

    // G(N) = [z^N] prod_t (1 - x_t z)^{-k_t}
    //      = sum_t x_t^N sum_{l=1..k_t} A_{t,l} binom(N+l-1, l-1),
    // where A_{t,l} is the coefficient of (1 - x_t z)^{-l} in the partial
    // fractions. Around the pole of group t, substituting u = 1 - x_t z turns
    // prod_{s != t} (1 - x_s z)^{-k_s} into
    //   prod_{s != t} (x_t / (x_t - x_s))^{k_s} (1 + beta_s u)^{-k_s},
    // beta_s = x_s / (x_t - x_s); A_{t,l} is its Taylor coefficient of
    // u^{k_t - l}, i.e. repeated derivatives at the coalesced load.
    int group_count = static_cast<int>(mult.groups.size());
    CompensatedSum<long double> total;
    for (int t = 0; t < group_count; ++t) {
        int k_t = static_cast<int>(mult.groups[t].size());
        long double x_t = rho(mult.groups[t].front());

        // Taylor series of prod_{s != t} (...) up to degree k_t - 1.
        std::vector<long double> series(static_cast<std::size_t>(k_t), 0.0L);
        series[0] = 1.0L;
        for (int s = 0; s < group_count; ++s) {
            if (s == t) continue;
            int k_s = static_cast<int>(mult.groups[s].size());
            long double x_s = rho(mult.groups[s].front());
            long double gap = x_t - x_s;
            long double scale = powl_int(x_t / gap, k_s);
            long double beta = x_s / gap;
            // factor series: (1 + beta u)^{-k} = sum_i binom(k+i-1, i) (-beta)^i u^i
            std::vector<long double> factor(static_cast<std::size_t>(k_t), 0.0L);
            long double coeff = 1.0L;
            long double neg_beta_pow = 1.0L;
            for (int i = 0; i < k_t; ++i) {
                factor[i] = scale * coeff * neg_beta_pow;
                neg_beta_pow *= -beta;
                coeff *= static_cast<long double>(k_s + i) / static_cast<long double>(i + 1);
            }
            // truncated product
            std::vector<long double> next(static_cast<std::size_t>(k_t), 0.0L);
            for (int a = 0; a < k_t; ++a) {
                if (series[a] == 0.0L) continue;
                for (int b = 0; a + b < k_t; ++b) {
                    next[a + b] += series[a] * factor[b];
                }
            }
            series.swap(next);
        }

        long double x_pow_n = powl_int(x_t, population);
        for (int l = 1; l <= k_t; ++l) {
            long double a_tl = series[k_t - l];
            // binom(N + l - 1, l - 1)
            long double binom = 1.0L;
            for (int i = 1; i <= l - 1; ++i) {
                binom *= static_cast<long double>(population + i) / i;
            }
            total.add(a_tl * binom * x_pow_n);
        }
    }
    return make_result(total.value(), GMethod::HarrisonDegenerate);
}

NormalizingConstant g_general_enumeration(const NetworkModel& model,
                                          const TrafficSolution& traffic,
                                          std::size_t guard) {
    int j_count = model.nodes();
    int population = model.closed().population;
    if (simplex_size(j_count, population, guard) > guard)
        throw GuardExceeded("simplex too large to enumerate");

    // Per-node weight ladders w_j(v) = alpha_j^v / prod_{r<=v} mu_j(r).
    std::vector<std::vector<long double>> ladder(static_cast<std::size_t>(j_count));
    for (int j = 0; j < j_count; ++j) {
        ladder[j].resize(static_cast<std::size_t>(population) + 1);
        ladder[j][0] = 1.0L;
        for (int v = 1; v <= population; ++v) {
            ladder[j][v] = ladder[j][v - 1] * static_cast<long double>(traffic.alpha(j)) /
                           static_cast<long double>(model.service[j].at(v));
        }
    }
    CompensatedSum<long double> total;
    auto walk = [&](auto&& self, int j, int remaining, long double weight) -> void {
        if (j == j_count - 1) {
            total.add(weight * ladder[j][remaining]);
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            self(self, j + 1, remaining - v, weight * ladder[j][v]);
        }
    };
    walk(walk, 0, population, 1.0L);
    return make_result(total.value(), GMethod::GeneralizedEnumeration);
}

NormalizingConstant compute_B(const NetworkModel& model, const TrafficSolution& traffic) {
    if (model.is_open()) throw Error("normalizing constants apply to closed networks");
    bool constant_rates = true;
    for (const auto& s : model.service) {
        if (!s.is_constant()) {
            constant_rates = false;
            break;
        }
    }
    if (!constant_rates) return g_general_enumeration(model, traffic);

    int j_count = model.nodes();
    int population = model.closed().population;
    LoadVector rho(j_count);
    for (int j = 0; j < j_count; ++j) rho(j) = traffic.alpha(j) / model.service[j].tail_rate();

    NormalizingConstant conv = g_convolution(rho, population);

    // Cross-check against the matching Harrison closed form. Pairs that are
    // neither cleanly distinct nor exactly equal sit in the cancellation zone
    // of both forms, so only the convolution value is reported there.
    bool any_repeated = false;
    bool grey_zone = false;
    for (int j = 0; j < j_count && !grey_zone; ++j) {
        for (int i = j + 1; i < j_count; ++i) {
            double gap = std::abs(rho(i) - rho(j)) / std::max(rho(i), rho(j));
            if (gap <= 1e-13) {
                any_repeated = true;
            } else if (gap <= kLoadDistinctTol) {
                grey_zone = true;
                break;
            }
        }
    }
    if (!grey_zone) {
        NormalizingConstant check =
            any_repeated ? g_harrison_degenerate(rho, population, Multiplicity::of(rho))
                         : g_harrison_distinct(rho, population);
        double rel = std::abs(check.G - conv.G) / std::max(std::abs(conv.G), 1e-300);
        if (rel > 1e-9)
            throw MethodDisagreement("harrison form disagrees with convolution by relative " +
                                     std::to_string(rel));
    }
    return conv;
}

}  // namespace qnet
