#ifndef QNET_SIM_HPP
#define QNET_SIM_HPP

#include <cstdint>
#include <map>
#include <vector>

#include "qnet/ctmc.hpp"
#include "qnet/model.hpp"
#include "qnet/productform.hpp"
#include "qnet/traffic.hpp"

namespace qnet {

struct SimConfig {
    std::uint64_t seed = 1;
    double run_time = 10000.0;
    double warmup_time = -1.0;       // < 0 means 10% of run_time
    double departure_window = 10.0;  // bin width for windowed departure counts
    int replication_count = 1;
    bool record_events = false;      // keep the full event log in memory
    bool record_state_grid = true;   // snapshots on the departure_window grid
    bool allow_unstable = false;     // simulate even when some rho >= 1

    double effective_warmup() const {
        return warmup_time < 0.0 ? 0.1 * run_time : warmup_time;
    }
};

struct EventRecord {
    double time = 0.0;
    OpKind kind = OpKind::Arrival;
    int from = -1;  // node a customer left (Transfer/Departure)
    int to = -1;    // node a customer entered (Transfer/Arrival)
    State state_after;
};

// Everything one replication observed after its warmup.
struct ReplicationData {
    std::uint64_t seed = 0;          // derived per-replication seed
    double warmup_end = 0.0;         // observation starts here
    double observed_time = 0.0;      // run_time - warmup
    std::vector<std::vector<double>> node_occupancy;  // time in [node][level]
    std::map<State, double> joint_occupancy;          // time per visited state
    std::vector<std::vector<double>> exit_times;      // per node, post-warmup
    std::vector<std::uint64_t> arrival_counts;        // arrivals into node (any source)
    // Snapshots on the grid t = warmup + i*departure_window:
    std::vector<State> grid_states;
    std::vector<std::vector<std::uint64_t>> grid_exit_counts;  // cumulative per node
    std::vector<EventRecord> events;  // only when record_events
};

struct SimulationReport {
    std::uint64_t master_seed = 0;
    double departure_window = 0.0;
    double total_observed_time = 0.0;
    bool open = true;
    std::vector<ReplicationData> replications;
    // Merged across replications, normalized:
    std::vector<std::vector<double>> node_pmf;
    std::map<State, double> joint_pmf;
};

// Event-driven simulation of the exact network dynamics. Deterministic:
// identical (model, config) pairs produce identical reports. Open models
// with an unstable node are refused unless config.allow_unstable is set.
SimulationReport run(const NetworkModel& model, const SimConfig& config);

struct DepartureTestVerdict {
    int node = 0;
    long samples = 0;
    double expected_rate = 0.0;
    double rate_estimate = 0.0;
    double dispersion_index = 0.0;  // variance/mean of windowed counts
    double ks_statistic = 0.0;
    double ks_critical = 0.0;       // alpha = 0.01 asymptotic critical value
    bool rate_ok = false;           // within 3% of expected
    bool dispersion_ok = false;     // in [0.9, 1.1]
    bool ks_ok = false;
    bool pass = false;              // all three
};

// Checks that the exit stream of `node` looks Poisson with the predicted
// rate alpha_k * exit(k). Needs at least 1000 observed exits
// (InsufficientSamples otherwise, also for nodes with no exit path).
DepartureTestVerdict departure_poisson_test(const SimulationReport& report,
                                            const NetworkModel& model,
                                            const TrafficSolution& traffic, int node);

// Consistency check: sample correlation between the exit count of `node` in
// a window and the queue length of that node at the window's end. Small for
// the exact process; this can fail to falsify independence, never prove it.
struct IndependenceSmokeResult {
    long samples = 0;
    double correlation = 0.0;
    double threshold = 0.0;  // 3/sqrt(samples)
    bool pass = false;
};

IndependenceSmokeResult departure_state_independence_smoketest(const SimulationReport& report,
                                                               int node);

struct TvReport {
    std::vector<double> per_node;
    double joint = 0.0;
};

// Total-variation distances between time-weighted empirical occupancy and
// the analytic stationary law.
TvReport empirical_vs_analytic(const SimulationReport& report, const OpenProductForm& pf);
TvReport empirical_vs_analytic(const SimulationReport& report, const ClosedProductForm& pf);

// Asymptotic Kolmogorov-Smirnov critical value sqrt(-ln(alpha/2)/2) / sqrt(n).
double ks_critical_value(long n, double alpha);

}  // namespace qnet

#endif  // QNET_SIM_HPP
