#include "qnet/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "qnet/errors.hpp"
#include "qnet/numerics.hpp"

namespace qnet {

namespace {

enum Purpose : std::uint64_t { kArrivals = 1, kServices = 2, kRouting = 3 };

class ExpStream {
  public:
    explicit ExpStream(std::uint64_t seed) : engine_(seed) {}
    // Exponential(rate) holding time.
    double exp(double rate) { return std::exponential_distribution<double>(rate)(engine_); }
    // Uniform in [0,1).
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  private:
    std::mt19937_64 engine_;
};

void add_weight(std::vector<double>& bins, int level, double weight) {
    if (level >= static_cast<int>(bins.size())) bins.resize(level + 1, 0.0);
    bins[level] += weight;
}

ReplicationData simulate_one(const NetworkModel& model, const SimConfig& config,
                             std::uint64_t replication) {
    int j_count = model.nodes();
    const auto& routing = model.routing;
    bool open = model.is_open();
    double warmup = config.effective_warmup();

    ExpStream arrivals(derive_seed(config.seed, replication, kArrivals));
    ExpStream services(derive_seed(config.seed, replication, kServices));
    ExpStream routes(derive_seed(config.seed, replication, kRouting));

    ReplicationData data;
    data.seed = derive_seed(config.seed, replication, 0);
    data.warmup_end = warmup;
    data.observed_time = config.run_time - warmup;
    data.node_occupancy.assign(j_count, {});
    data.exit_times.assign(j_count, {});
    data.arrival_counts.assign(j_count, 0);

    State n(j_count, 0);
    double total_nu = 0.0;
    if (open) {
        total_nu = model.open().nu.sum();
    } else {
        // Start a closed run with the whole population at the first node.
        n[0] = model.closed().population;
    }

    std::vector<double> rate(j_count, 0.0);  // mu_j(n_j)
    double total_service = 0.0;
    for (int j = 0; j < j_count; ++j) {
        rate[j] = model.service[j].at(n[j]);
        total_service += rate[j];
    }

    std::vector<std::uint64_t> exit_counts(j_count, 0);
    double grid_next = config.record_state_grid ? warmup + config.departure_window : -1.0;

    double now = 0.0;
    auto account = [&](double until) {
        // time-weighted occupancy of the current state over (now, until]
        double from = std::max(now, warmup);
        if (until > from) {
            double w = until - from;
            for (int j = 0; j < j_count; ++j) add_weight(data.node_occupancy[j], n[j], w);
            data.joint_occupancy[n] += w;
        }
    };

    while (true) {
        double dt_arrival = (open && total_nu > 0.0) ? arrivals.exp(total_nu)
                                                     : std::numeric_limits<double>::infinity();
        double dt_service = total_service > 0.0 ? services.exp(total_service)
                                                : std::numeric_limits<double>::infinity();
        double dt = std::min(dt_arrival, dt_service);
        double next = now + dt;

        // grid snapshots strictly before the state changes at `next`
        while (grid_next >= 0.0 && grid_next <= std::min(next, config.run_time)) {
            data.grid_states.push_back(n);
            data.grid_exit_counts.push_back(exit_counts);
            grid_next += config.departure_window;
            if (grid_next > config.run_time) grid_next = -1.0;
        }
        if (next >= config.run_time) {
            account(config.run_time);
            break;
        }
        account(next);

        EventRecord record;
        record.time = next;
        if (dt_arrival < dt_service) {
            // exogenous arrival: pick the node proportionally to nu
            const auto& nu = model.open().nu;
            double u = arrivals.uniform() * total_nu;
            int k = 0;
            for (; k < j_count - 1; ++k) {
                u -= nu(k);
                if (u < 0.0) break;
            }
            while (nu(k) <= 0.0) --k;  // guard against rounding past a zero-rate node
            n[k] += 1;
            ++data.arrival_counts[k];
            total_service -= rate[k];
            rate[k] = model.service[k].at(n[k]);
            total_service += rate[k];
            record.kind = OpKind::Arrival;
            record.to = k;
        } else {
            // service completion: pick the node proportionally to mu_j(n_j)
            double u = services.uniform() * total_service;
            int j = 0;
            for (; j < j_count - 1; ++j) {
                u -= rate[j];
                if (u < 0.0) break;
            }
            while (rate[j] <= 0.0) --j;
            // route the customer
            double v = routes.uniform();
            int target = -1;  // -1 = leave the network
            double acc = 0.0;
            for (int k = 0; k < j_count; ++k) {
                acc += routing.p(j, k);
                if (v < acc) {
                    target = k;
                    break;
                }
            }
            if (target < 0 && !open) {
                // closed rows sum to 1 up to rounding; the draw cannot exit
                for (int k = j_count - 1; k >= 0; --k) {
                    if (routing.p(j, k) > 0.0) {
                        target = k;
                        break;
                    }
                }
            }
            n[j] -= 1;
            total_service -= rate[j];
            rate[j] = model.service[j].at(n[j]);
            total_service += rate[j];
            if (target >= 0) {
                n[target] += 1;
                ++data.arrival_counts[target];
                total_service -= rate[target];
                rate[target] = model.service[target].at(n[target]);
                total_service += rate[target];
                record.kind = OpKind::Transfer;
                record.from = j;
                record.to = target;
            } else {
                ++exit_counts[j];
                if (next > warmup) data.exit_times[j].push_back(next);
                record.kind = OpKind::Departure;
                record.from = j;
            }
        }
        now = next;
        if (config.record_events) {
            record.state_after = n;
            data.events.push_back(std::move(record));
        }
    }
    return data;
}

}  // namespace

SimulationReport run(const NetworkModel& model, const SimConfig& config) {
    if (config.run_time <= 0.0 || config.effective_warmup() >= config.run_time)
        throw Error("need run_time > warmup_time >= 0");
    if (config.departure_window <= 0.0) throw Error("departure_window must be positive");
    if (config.replication_count < 1) throw Error("replication_count must be >= 1");

    if (model.is_open() && !config.allow_unstable) {
        auto traffic = solve_open_traffic(model);
        for (const auto& s : check_stability(model, traffic)) {
            if (!s.stable)
                throw UnstableOpenModel("node " + std::to_string(s.node + 1) +
                                        " has rho = " + std::to_string(s.rho) +
                                        " >= 1; pass allow_unstable to simulate anyway");
        }
    }

    SimulationReport report;
    report.master_seed = config.seed;
    report.departure_window = config.departure_window;
    report.open = model.is_open();
    for (int r = 0; r < config.replication_count; ++r) {
        report.replications.push_back(simulate_one(model, config, static_cast<std::uint64_t>(r)));
    }

    int j_count = model.nodes();
    report.node_pmf.assign(j_count, {});
    for (const auto& rep : report.replications) {
        report.total_observed_time += rep.observed_time;
        for (int j = 0; j < j_count; ++j) {
            if (report.node_pmf[j].size() < rep.node_occupancy[j].size())
                report.node_pmf[j].resize(rep.node_occupancy[j].size(), 0.0);
            for (std::size_t l = 0; l < rep.node_occupancy[j].size(); ++l)
                report.node_pmf[j][l] += rep.node_occupancy[j][l];
        }
        for (const auto& [state, weight] : rep.joint_occupancy) report.joint_pmf[state] += weight;
    }
    for (auto& pmf : report.node_pmf) {
        for (double& v : pmf) v /= report.total_observed_time;
    }
    for (auto& [state, weight] : report.joint_pmf) weight /= report.total_observed_time;
    return report;
}

double ks_critical_value(long n, double alpha) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

DepartureTestVerdict departure_poisson_test(const SimulationReport& report,
                                            const NetworkModel& model,
                                            const TrafficSolution& traffic, int node) {
    if (!report.open) throw InsufficientSamples("closed network has no exit streams");
    if (model.routing.exit(node) <= 0.0)
        throw InsufficientSamples("node " + std::to_string(node + 1) + " has no exit stream");

    DepartureTestVerdict v;
    v.node = node;
    v.expected_rate = traffic.alpha(node) * model.routing.exit(node);

    // Pool interdeparture gaps and windowed counts within each replication.
    std::vector<double> gaps;
    std::vector<double> window_counts;
    long total = 0;
    for (const auto& rep : report.replications) {
        const auto& times = rep.exit_times[node];
        total += static_cast<long>(times.size());
        for (std::size_t i = 1; i < times.size(); ++i) gaps.push_back(times[i] - times[i - 1]);
        // windows anchored at the end of the warmup; the ragged last one is dropped
        double window = report.departure_window;
        long bins = static_cast<long>(rep.observed_time / window);
        std::vector<double> counts(static_cast<std::size_t>(std::max<long>(bins, 0)), 0.0);
        for (double t : times) {
            long b = static_cast<long>((t - rep.warmup_end) / window);
            if (b >= 0 && b < bins) counts[static_cast<std::size_t>(b)] += 1.0;
        }
        window_counts.insert(window_counts.end(), counts.begin(), counts.end());
    }
    v.samples = total;
    if (total < 1000)
        throw InsufficientSamples("observed " + std::to_string(total) +
                                  " exits at node " + std::to_string(node + 1) + ", need 1000");

    double observed_time = report.total_observed_time;
    v.rate_estimate = static_cast<double>(total) / observed_time;
    v.rate_ok = std::abs(v.rate_estimate - v.expected_rate) <= 0.03 * v.expected_rate;

    double mean = 0.0;
    for (double c : window_counts) mean += c;
    mean /= static_cast<double>(window_counts.size());
    double var = 0.0;
    for (double c : window_counts) var += (c - mean) * (c - mean);
    var /= static_cast<double>(window_counts.size() - 1);
    v.dispersion_index = var / mean;
    v.dispersion_ok = v.dispersion_index >= 0.9 && v.dispersion_index <= 1.1;

    // KS distance between the gap sample and Exponential(expected_rate).
    std::sort(gaps.begin(), gaps.end());
    double n_gaps = static_cast<double>(gaps.size());
    double d = 0.0;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        double f = 1.0 - std::exp(-v.expected_rate * gaps[i]);
        double lo = static_cast<double>(i) / n_gaps;
        double hi = static_cast<double>(i + 1) / n_gaps;
        d = std::max({d, f - lo, hi - f});
    }
    v.ks_statistic = d;
    v.ks_critical = ks_critical_value(static_cast<long>(gaps.size()), 0.01);
    v.ks_ok = v.ks_statistic < v.ks_critical;

    v.pass = v.rate_ok && v.dispersion_ok && v.ks_ok;
    return v;
}

IndependenceSmokeResult departure_state_independence_smoketest(const SimulationReport& report,
                                                               int node) {
    if (!report.open) throw InsufficientSamples("closed network has no exit streams");

    // Pair the exit count in (t - w, t] with the queue length at t, over the
    // snapshot grid of each replication.
    std::vector<double> xs, ys;
    for (const auto& rep : report.replications) {
        for (std::size_t i = 1; i < rep.grid_states.size(); ++i) {
            xs.push_back(static_cast<double>(rep.grid_exit_counts[i][node] -
                                             rep.grid_exit_counts[i - 1][node]));
            ys.push_back(static_cast<double>(rep.grid_states[i][node]));
        }
    }
    IndependenceSmokeResult res;
    res.samples = static_cast<long>(xs.size());
    if (res.samples < 100)
        throw InsufficientSamples("only " + std::to_string(res.samples) +
                                  " grid samples; enable record_state_grid and run longer");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(res.samples);
    my /= static_cast<double>(res.samples);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    res.correlation = sxy / std::sqrt(sxx * syy);
    res.threshold = 3.0 / std::sqrt(static_cast<double>(res.samples));
    res.pass = std::abs(res.correlation) < res.threshold;
    return res;
}

namespace {

double node_tv(const std::vector<double>& empirical, const NodeMarginal& marginal) {
    double acc = 0.0;
    double analytic_seen = 0.0;
    for (std::size_t l = 0; l < empirical.size(); ++l) {
        double a = marginal.pmf(static_cast<int>(l));
        acc += std::abs(empirical[l] - a);
        analytic_seen += a;
    }
    acc += 1.0 - analytic_seen;  // analytic mass beyond the observed range
    return 0.5 * acc;
}

}  // namespace

TvReport empirical_vs_analytic(const SimulationReport& report, const OpenProductForm& pf) {
    TvReport tv;
    for (std::size_t j = 0; j < pf.marginals.size(); ++j) {
        tv.per_node.push_back(node_tv(report.node_pmf[j], pf.marginals[j]));
    }
    double acc = 0.0;
    double analytic_seen = 0.0;
    for (const auto& [state, weight] : report.joint_pmf) {
        double a = pf.joint_pmf(state);
        acc += std::abs(weight - a);
        analytic_seen += a;
    }
    acc += 1.0 - analytic_seen;
    tv.joint = 0.5 * acc;
    return tv;
}

TvReport empirical_vs_analytic(const SimulationReport& report, const ClosedProductForm& pf) {
    TvReport tv;
    int j_count = pf.space.nodes();
    // marginals from the enumerated joint law
    std::vector<std::vector<double>> analytic(static_cast<std::size_t>(j_count));
    for (std::size_t i = 0; i < pf.space.size(); ++i) {
        const State& n = pf.space.state(i);
        double p = pf.probabilities(static_cast<Eigen::Index>(i));
        for (int j = 0; j < j_count; ++j) {
            auto& bins = analytic[j];
            if (n[j] >= static_cast<int>(bins.size())) bins.resize(n[j] + 1, 0.0);
            bins[n[j]] += p;
        }
    }
    for (int j = 0; j < j_count; ++j) {
        double acc = 0.0;
        std::size_t levels = std::max(analytic[j].size(), report.node_pmf[j].size());
        for (std::size_t l = 0; l < levels; ++l) {
            double e = l < report.node_pmf[j].size() ? report.node_pmf[j][l] : 0.0;
            double a = l < analytic[j].size() ? analytic[j][l] : 0.0;
            acc += std::abs(e - a);
        }
        tv.per_node.push_back(0.5 * acc);
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < pf.space.size(); ++i) {
        const State& n = pf.space.state(i);
        auto it = report.joint_pmf.find(n);
        double e = it == report.joint_pmf.end() ? 0.0 : it->second;
        acc += std::abs(e - pf.probabilities(static_cast<Eigen::Index>(i)));
    }
    tv.joint = 0.5 * acc;
    return tv;
}

}  // namespace qnet
