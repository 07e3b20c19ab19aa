// qnet: exact and simulated analysis of open/closed exponential queueing
// networks. Subcommands: analyze | normconst | simulate | verify.

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qnet/ctmc.hpp"
#include "qnet/errors.hpp"
#include "qnet/json_io.hpp"
#include "qnet/model.hpp"
#include "qnet/normconst.hpp"
#include "qnet/productform.hpp"
#include "qnet/sim.hpp"
#include "qnet/traffic.hpp"

using namespace qnet;

namespace {

constexpr const char* kSchema = "qnet-report-v1";

// exit codes, stable contract
enum ExitCode {
    kOk = 0,
    kValidation = 2,
    kUnstable = 3,
    kBadInput = 4,
    kNoSamples = 5,
    kGuard = 6,
};

struct GlobalFlags {
    std::string output;
    std::string format;  // "", "json", "csv"
    bool quiet = false;
};

std::size_t state_guard() {
    if (const char* env = std::getenv("QNET_GUARD_STATES")) {
        char* end = nullptr;
        double v = std::strtod(env, &end);
        if (end != env && v > 0) return static_cast<std::size_t>(v);
    }
    return StateSpace::kDefaultGuard;
}

void emit(const GlobalFlags& flags, const std::string& text) {
    if (!flags.output.empty()) {
        std::ofstream out(flags.output, std::ios::binary);
        if (!out) throw Error("cannot write " + flags.output);
        out << text;
        if (!flags.quiet) std::cerr << "wrote " << flags.output << "\n";
    } else {
        std::cout << text;
    }
}

json validation_to_json(const ValidationReport& report) {
    json v;
    v["ok"] = report.ok();
    json list = json::array();
    for (const auto& violation : report.violations) {
        json entry;
        entry["code"] = violation.code;
        json nodes = json::array();
        for (int node : violation.nodes) nodes.push_back(node + 1);
        entry["nodes"] = std::move(nodes);
        entry["message"] = violation.message;
        list.push_back(std::move(entry));
    }
    v["violations"] = std::move(list);
    v["warnings"] = report.warnings;
    return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

json state_to_json(const State& n) {
    json arr = json::array();
    for (int v : n) arr.push_back(v);
    return arr;
}

// Stationary law whose small components can be trusted in relative terms.
// The dense route solves to absolute accuracy only, so deep-corner states
// come out as noise (or clamped zeros) and would poison the reversed rates
// pi(n) q / pi(m); power iteration on the uniformized chain never cancels
// and keeps every component positive and relatively accurate.
Eigen::VectorXd solve_componentwise(const Generator& gen, const SolveOptions& opts) {
    Eigen::VectorXd pi = solve_stationary(gen, opts);
    if (pi.minCoeff() > 1e-13 * pi.maxCoeff()) return pi;
    SolveOptions power = opts;
    power.method = SolveMethod::Power;
    return solve_stationary(gen, power);
}

int run_analyze(const std::string& spec_path, bool oracle, int cap, double tail_target,
                bool allow_unstable, const GlobalFlags& flags) {
    NetworkModel model = load_model_file(spec_path);
    json doc;
    doc["schema"] = kSchema;
    doc["command"] = "analyze";
    doc["model"] = model_to_json(model);
    auto validation = validate(model);
    doc["validation"] = validation_to_json(validation);
    if (!validation.ok()) {
        emit(flags, dump_json(doc));
        return kValidation;
    }

    std::size_t guard = state_guard();
    if (model.is_open()) {
        auto traffic = solve_open_traffic(model);
        doc["traffic"] = {{"alpha", vector_to_json(traffic.alpha)},
                          {"normalization", "absolute"},
                          {"residual", traffic_residual(model, traffic)}};
        auto stability = check_stability(model, traffic);
        json st = json::array();
        bool stable = true;
        for (const auto& s : stability) {
            st.push_back({{"node", s.node + 1}, {"rho", s.rho}, {"stable", s.stable}});
            stable = stable && s.stable;
        }
        doc["stability"] = std::move(st);
        if (!stable && !allow_unstable) {
            emit(flags, dump_json(doc));
            return kUnstable;
        }
        if (stable) {
            auto pf = open_stationary(model, traffic);
            json marginals = json::array();
            for (const auto& m : pf.marginals) {
                marginals.push_back({{"node", m.node + 1},
                                     {"alpha", m.alpha},
                                     {"b", m.b},
                                     {"rho", m.tail_ratio}});
            }
            doc["product_form"] = {{"marginals", std::move(marginals)}};
            json mt = json::array();
            auto ms = metrics(pf);
            for (std::size_t j = 0; j < ms.size(); ++j) {
                mt.push_back({{"node", j + 1},
                              {"mean_queue", ms[j].mean_queue},
                              {"utilization", ms[j].utilization},
                              {"throughput", ms[j].throughput}});
            }
            doc["metrics"] = std::move(mt);
            if (oracle) {
                std::vector<int> caps = cap > 0 ? std::vector<int>(model.nodes(), cap)
                                                : choose_caps(pf, tail_target);
                std::size_t states = 1;
                bool over = false;
                for (int c : caps) {
                    if (states > guard / (static_cast<std::size_t>(c) + 1)) {
                        over = true;
                        break;
                    }
                    states *= static_cast<std::size_t>(c) + 1;
                }
                if (over) {
                    emit(flags, dump_json(doc));
                    std::cerr << "state space exceeds the guard (" << guard << " states)\n";
                    return kGuard;
                }
                auto space = StateSpace::open_truncated(caps, guard);
                auto gen = build_generator_open(model, space);
                auto pi = solve_stationary(gen);
                double box_mass = 1.0;
                for (std::size_t j = 0; j < pf.marginals.size(); ++j) {
                    box_mass *= 1.0 - pf.marginals[j].tail_mass_above(caps[j]);
                }
                double tv = 0.0;
                for (std::size_t i = 0; i < space.size(); ++i) {
                    tv += std::abs(pf.joint_pmf(space.state(i)) / box_mass -
                                   pi(static_cast<Eigen::Index>(i)));
                }
                json caps_json = json::array();
                for (int c : caps) caps_json.push_back(c);
                doc["oracle"] = {{"caps", std::move(caps_json)},
                                 {"states", space.size()},
                                 {"balance_residual", global_balance_residual(gen, pi)},
                                 {"tv_distance", 0.5 * tv}};
            }
        }
    } else {
        auto traffic = solve_closed_traffic(model);
        doc["traffic"] = {{"alpha", vector_to_json(traffic.alpha)},
                          {"normalization", "alpha1=1"},
                          {"residual", traffic_residual(model, traffic)}};
        auto norm = compute_B(model, traffic);
        doc["normalizing_constant"] = {
            {"G", norm.G}, {"log_G", norm.log_G}, {"B", norm.B}, {"method", to_string(norm.method)}};
        auto pf = closed_stationary(model, traffic, norm);
        // top probability states
        std::vector<std::size_t> order(pf.space.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            double pa = pf.probabilities(static_cast<Eigen::Index>(a));
            double pb = pf.probabilities(static_cast<Eigen::Index>(b));
            return pa != pb ? pa > pb : a < b;
        });
        json top = json::array();
        for (std::size_t i = 0; i < std::min<std::size_t>(10, order.size()); ++i) {
            top.push_back({{"state", state_to_json(pf.space.state(order[i]))},
                           {"probability", pf.probabilities(static_cast<Eigen::Index>(order[i]))}});
        }
        doc["product_form"] = {{"states", pf.space.size()}, {"top_states", std::move(top)}};
        json mt = json::array();
        auto ms = metrics(pf);
        for (std::size_t j = 0; j < ms.size(); ++j) {
            mt.push_back({{"node", j + 1},
                          {"mean_queue", ms[j].mean_queue},
                          {"utilization", ms[j].utilization},
                          {"throughput", ms[j].throughput}});
        }
        doc["metrics"] = std::move(mt);
        if (oracle) {
            if (pf.space.size() > guard) {
                emit(flags, dump_json(doc));
                std::cerr << "state space exceeds the guard (" << guard << " states)\n";
                return kGuard;
            }
            auto gen = build_generator_closed(model, pf.space);
            auto pi = solve_stationary(gen);
            doc["oracle"] = {{"states", pf.space.size()},
                             {"balance_residual", global_balance_residual(gen, pf.probabilities)},
                             {"tv_distance", 0.5 * (pf.probabilities - pi).lpNorm<1>()},
                             {"max_abs_diff", (pf.probabilities - pi).lpNorm<Eigen::Infinity>()}};
        }
    }
    emit(flags, dump_json(doc));
    return kOk;
}

int run_normconst(const std::string& spec_path, const std::string& rho_csv, int population,
                  const std::string& methods_csv, bool bench, const GlobalFlags& flags) {
    LoadVector rho;
    if (!spec_path.empty()) {
        NetworkModel model = load_model_file(spec_path);
        if (model.is_open()) throw SpecParseError("normconst needs a closed model");
        auto validation = validate(model);
        if (!validation.ok()) throw SpecParseError("model failed validation");
        for (const auto& s : model.service) {
            if (!s.is_constant())
                throw SpecParseError("normconst methods need constant service rates");
        }
        auto traffic = solve_closed_traffic(model);
        rho.resize(model.nodes());
        for (int j = 0; j < model.nodes(); ++j)
            rho(j) = traffic.alpha(j) / model.service[j].tail_rate();
        population = model.closed().population;
    } else {
        std::vector<double> values;
        std::stringstream ss(rho_csv);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                values.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw SpecParseError("bad load value '" + item + "'");
            }
        }
        if (values.empty()) throw SpecParseError("--rho list is empty");
        rho.resize(static_cast<Eigen::Index>(values.size()));
        for (std::size_t i = 0; i < values.size(); ++i) rho(static_cast<Eigen::Index>(i)) = values[i];
        if (population < 0) throw SpecParseError("--population is required with --rho");
    }
    for (Eigen::Index j = 0; j < rho.size(); ++j) {
        if (!(rho(j) > 0.0)) throw SpecParseError("loads must be positive");
    }

    std::vector<std::string> methods;
    {
        std::stringstream ss(methods_csv);
        std::string item;
        while (std::getline(ss, item, ',')) methods.push_back(item);
    }

    bool degenerate = false;
    for (Eigen::Index j = 0; j < rho.size() && !degenerate; ++j) {
        for (Eigen::Index i = j + 1; i < rho.size(); ++i) {
            if (std::abs(rho(i) - rho(j)) <= kLoadDistinctTol * std::max(rho(i), rho(j))) {
                degenerate = true;
                break;
            }
        }
    }

    auto reference = g_convolution(rho, population);
    struct Row {
        std::string method;
        NormalizingConstant value;
        double ms;
    };
    std::vector<Row> rows;
    std::size_t guard = state_guard();
    for (const auto& name : methods) {
        auto start = std::chrono::steady_clock::now();
        std::optional<NormalizingConstant> value;
        if (name == "enumeration") {
            value = g_enumeration(rho, population, guard);
        } else if (name == "convolution") {
            value = g_convolution(rho, population);
        } else if (name == "harrison" || name == "harrison-auto") {
            value = degenerate ? g_harrison_degenerate(rho, population, Multiplicity::of(rho))
                               : g_harrison_distinct(rho, population);
        } else if (name == "harrison-distinct") {
            value = g_harrison_distinct(rho, population);
        } else if (name == "harrison-degenerate") {
            value = g_harrison_degenerate(rho, population, Multiplicity::of(rho));
        } else {
            throw SpecParseError("unknown method '" + name + "'");
        }
        double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              start)
                        .count();
        rows.push_back({to_string(value->method), *value, ms});
    }

    int j_count = static_cast<int>(rho.size());
    if (flags.format == "json") {
        json doc;
        doc["schema"] = kSchema;
        doc["command"] = "normconst";
        doc["J"] = j_count;
        doc["N"] = population;
        json list = json::array();
        for (const auto& row : rows) {
            json entry = {{"method", row.method},
                          {"G", row.value.G},
                          {"B", row.value.B},
                          {"rel_error_vs_convolution",
                           std::abs(row.value.G - reference.G) / reference.G}};
            if (bench) entry["wall_time_ms"] = row.ms;
            list.push_back(std::move(entry));
        }
        doc["results"] = std::move(list);
        emit(flags, dump_json(doc));
    } else {
        std::string text = "method,J,N,G,B,rel_error_vs_convolution";
        if (bench) text += ",wall_time_ms";
        text += "\n";
        for (const auto& row : rows) {
            text += row.method + "," + std::to_string(j_count) + "," + std::to_string(population) +
                    "," + format_double(row.value.G) + "," + format_double(row.value.B) + "," +
                    format_double(std::abs(row.value.G - reference.G) / reference.G);
            if (bench) text += "," + format_double(row.ms);
            text += "\n";
        }
        emit(flags, text);
    }
    return kOk;
}

int run_simulate(const std::string& spec_path, const SimConfig& base_config,
                 const std::string& tests_csv, const std::string& plot_prefix,
                 const std::string& event_log, const GlobalFlags& flags) {
    NetworkModel model = load_model_file(spec_path);
    auto validation = validate(model);
    if (!validation.ok()) {
        emit(flags, dump_json(validation_to_json(validation)));
        return kValidation;
    }
    std::vector<std::string> tests;
    {
        std::stringstream ss(tests_csv);
        std::string item;
        while (std::getline(ss, item, ',')) tests.push_back(item);
    }

    SimConfig config = base_config;
    config.record_events = !event_log.empty();

    SimulationReport report = run(model, config);

    json doc;
    doc["schema"] = kSchema;
    doc["command"] = "simulate";
    doc["model"] = model_to_json(model);
    doc["config"] = {{"seed", config.seed},
                     {"run_time", config.run_time},
                     {"warmup_time", config.effective_warmup()},
                     {"departure_window", config.departure_window},
                     {"replications", config.replication_count}};
    json seeds = json::array();
    for (const auto& rep : report.replications) seeds.push_back(rep.seed);
    doc["summary"] = {{"total_observed_time", report.total_observed_time},
                      {"replication_seeds", std::move(seeds)}};
    json pmfs = json::array();
    for (const auto& pmf : report.node_pmf) pmfs.push_back(pmf);
    doc["node_pmf"] = std::move(pmfs);

    json tests_json;
    for (const auto& test : tests) {
        if (test == "departures") {
            if (!model.is_open()) {
                emit(flags, dump_json(doc));
                std::cerr << "closed network has no exits; departure tests need an open model\n";
                return kNoSamples;
            }
            auto traffic = solve_open_traffic(model);
            json verdicts = json::array();
            for (int k = 0; k < model.nodes(); ++k) {
                if (model.routing.exit(k) <= 0.0) continue;
                auto v = departure_poisson_test(report, model, traffic, k);
                verdicts.push_back({{"node", v.node + 1},
                                    {"samples", v.samples},
                                    {"expected_rate", v.expected_rate},
                                    {"rate_estimate", v.rate_estimate},
                                    {"rate_ok", v.rate_ok},
                                    {"dispersion_index", v.dispersion_index},
                                    {"dispersion_ok", v.dispersion_ok},
                                    {"ks_statistic", v.ks_statistic},
                                    {"ks_critical", v.ks_critical},
                                    {"ks_ok", v.ks_ok},
                                    {"pass", v.pass}});
            }
            if (verdicts.empty()) {
                emit(flags, dump_json(doc));
                std::cerr << "no node has an exit stream\n";
                return kNoSamples;
            }
            tests_json["departures"] = std::move(verdicts);
        } else if (test == "marginals") {
            TvReport tv;
            if (model.is_open()) {
                auto traffic = solve_open_traffic(model);
                tv = empirical_vs_analytic(report, open_stationary(model, traffic));
            } else {
                auto traffic = solve_closed_traffic(model);
                tv = empirical_vs_analytic(
                    report, closed_stationary(model, traffic, compute_B(model, traffic)));
            }
            tests_json["marginals"] = {{"tv_per_node", tv.per_node}, {"tv_joint", tv.joint}};
        } else if (test == "independence") {
            if (!model.is_open()) {
                emit(flags, dump_json(doc));
                std::cerr << "closed network has no exits; the smoke test needs an open model\n";
                return kNoSamples;
            }
            json verdicts = json::array();
            for (int k = 0; k < model.nodes(); ++k) {
                if (model.routing.exit(k) <= 0.0) continue;
                auto r = departure_state_independence_smoketest(report, k);
                verdicts.push_back({{"node", k + 1},
                                    {"samples", r.samples},
                                    {"correlation", r.correlation},
                                    {"threshold", r.threshold},
                                    {"pass", r.pass}});
            }
            tests_json["independence"] = std::move(verdicts);
        } else if (!test.empty()) {
            throw SpecParseError("unknown test '" + test + "'");
        }
    }
    if (!tests_json.is_null()) doc["tests"] = std::move(tests_json);

    if (!plot_prefix.empty()) {
        for (std::size_t j = 0; j < report.node_pmf.size(); ++j) {
            std::ofstream out(plot_prefix + "_pmf_node" + std::to_string(j + 1) + ".csv",
                              std::ios::binary);
            out << "level,probability\n";
            for (std::size_t l = 0; l < report.node_pmf[j].size(); ++l) {
                out << l << "," << format_double(report.node_pmf[j][l]) << "\n";
            }
        }
        if (model.is_open()) {
            // interdeparture histograms per exit node, fixed 50-bin layout
            for (int k = 0; k < model.nodes(); ++k) {
                if (model.routing.exit(k) <= 0.0) continue;
                std::vector<double> gaps;
                for (const auto& rep : report.replications) {
                    const auto& times = rep.exit_times[k];
                    for (std::size_t i = 1; i < times.size(); ++i)
                        gaps.push_back(times[i] - times[i - 1]);
                }
                if (gaps.empty()) continue;
                double mean = 0.0;
                for (double g : gaps) mean += g;
                mean /= static_cast<double>(gaps.size());
                double width = 5.0 * mean / 50.0;
                std::vector<long> hist(50, 0);
                for (double g : gaps) {
                    auto bin = static_cast<long>(g / width);
                    if (bin >= 0 && bin < 50) ++hist[static_cast<std::size_t>(bin)];
                }
                std::ofstream out(plot_prefix + "_departures_node" + std::to_string(k + 1) + ".csv",
                                  std::ios::binary);
                out << "bin_start,count\n";
                for (std::size_t b = 0; b < hist.size(); ++b) {
                    out << format_double(static_cast<double>(b) * width) << "," << hist[b] << "\n";
                }
            }
        }
    }
    if (!event_log.empty()) {
        std::ofstream out(event_log, std::ios::binary);
        out << "time,kind,node_from,node_to\n";
        for (const auto& rep : report.replications) {
            for (const auto& event : rep.events) {
                const char* kind = event.kind == OpKind::Arrival    ? "arrival"
                                   : event.kind == OpKind::Transfer ? "transfer"
                                                                    : "departure";
                out << format_double(event.time) << "," << kind << ","
                    << (event.from >= 0 ? std::to_string(event.from + 1) : "") << ","
                    << (event.to >= 0 ? std::to_string(event.to + 1) : "") << "\n";
            }
        }
    }
    emit(flags, dump_json(doc));
    return kOk;
}

int run_verify(const std::string& spec_path, int cap, double tail_target, int samples,
               const GlobalFlags& flags) {
    NetworkModel model = load_model_file(spec_path);
    auto validation = validate(model);
    if (!validation.ok()) {
        emit(flags, dump_json(validation_to_json(validation)));
        return kValidation;
    }
    std::size_t guard = state_guard();
    json doc;
    doc["schema"] = kSchema;
    doc["command"] = "verify";

    bool pass = true;
    if (model.is_open()) {
        auto traffic = solve_open_traffic(model);
        for (const auto& s : check_stability(model, traffic)) {
            if (!s.stable) {
                std::cerr << "node " << s.node + 1 << " is unstable; verify needs a stable model\n";
                return kUnstable;
            }
        }
        auto pf = open_stationary(model, traffic);
        std::vector<int> caps = cap > 0 ? std::vector<int>(model.nodes(), cap)
                                        : choose_caps(pf, tail_target);
        std::size_t states = 1;
        for (int c : caps) {
            if (states > guard / (static_cast<std::size_t>(c) + 1)) {
                std::cerr << "state space exceeds the guard (" << guard << " states)\n";
                return kGuard;
            }
            states *= static_cast<std::size_t>(c) + 1;
        }
        auto space = StateSpace::open_truncated(caps, guard);
        auto gen = build_generator_open(model, space);
        auto pi = solve_componentwise(gen, {});
        json caps_json = json::array();
        for (int c : caps) caps_json.push_back(c);
        doc["caps"] = std::move(caps_json);
        doc["states"] = space.size();

        // partial balance on sampled states (seeded, reproducible)
        double worst_pb = 0.0;
        std::mt19937_64 rng(12345);
        for (int s = 0; s < samples; ++s) {
            State n(model.nodes());
            for (int j = 0; j < model.nodes(); ++j) {
                n[j] = static_cast<int>(rng() % (static_cast<std::uint64_t>(caps[j]) + 1));
            }
            worst_pb = std::max(worst_pb, verify_partial_balance(model, pf, n).max());
        }
        doc["partial_balance"] = {{"samples", samples}, {"max_residual", worst_pb}};
        pass = pass && worst_pb < 1e-10;

        auto rev = reversed_generator(gen, pi);
        auto pi_rev = solve_componentwise(rev, {});
        double row_sum = rev.max_abs_row_sum();
        double stat_diff = (pi_rev - pi).lpNorm<Eigen::Infinity>();
        doc["reversed"] = {{"row_sum_max", row_sum}, {"stationary_max_diff", stat_diff}};
        pass = pass && row_sum < 1e-12 && stat_diff < 1e-9;

        // Formula-vs-matrix reversed rates need caps deep enough that the
        // truncation bias (~ rho^margin) sits below the 1e-9 tolerance.
        bool margins_ok = true;
        std::vector<int> box(model.nodes());
        for (int j = 0; j < model.nodes(); ++j) {
            box[j] = std::min(3, caps[j] - 1);
            double rho = pf.marginals[j].tail_ratio;
            margins_ok =
                margins_ok && (caps[j] - box[j]) * std::log(1.0 / rho) >= std::log(1e11);
        }
        if (margins_ok) {
            double worst = 0.0;
            State n(model.nodes(), 1);
            bool done = false;
            while (!done) {
                auto i = static_cast<Eigen::Index>(space.index_of(n));
                for (const auto& r : reversed_rates_formula(model, traffic, n)) {
                    double matrix_rate =
                        rev.Q.coeff(i, static_cast<Eigen::Index>(space.index_of(r.target)));
                    worst = std::max(worst, std::abs(matrix_rate - r.rate) / (1.0 + r.rate));
                }
                int j = model.nodes() - 1;
                while (j >= 0 && ++n[j] > box[j]) n[j--] = 1;
                done = j < 0;
            }
            doc["reversed"]["formula_matrix_max_err"] = worst;
            doc["reversed"]["comparison_level"] = box[0];
            pass = pass && worst < 1e-9;
        } else {
            doc["reversed"]["formula_check"] = "skipped: caps leave too little margin";
        }
    } else {
        auto traffic = solve_closed_traffic(model);
        auto pf = closed_stationary(model, traffic, compute_B(model, traffic));
        if (pf.space.size() > guard) {
            std::cerr << "state space exceeds the guard (" << guard << " states)\n";
            return kGuard;
        }
        doc["states"] = pf.space.size();
        auto gen = build_generator_closed(model, pf.space);
        auto pi = solve_componentwise(gen, {});
        double residual = global_balance_residual(gen, pf.probabilities);
        double diff = (pf.probabilities - pi).lpNorm<Eigen::Infinity>();
        doc["product_form"] = {{"global_balance_residual", residual},
                               {"max_abs_diff_vs_oracle", diff}};
        pass = pass && residual < 1e-10 && diff < 1e-9;

        auto rev = reversed_generator(gen, pi);
        auto pi_rev = solve_componentwise(rev, {});
        double row_sum = rev.max_abs_row_sum();
        double stat_diff = (pi_rev - pi).lpNorm<Eigen::Infinity>();
        doc["reversed"] = {{"row_sum_max", row_sum}, {"stationary_max_diff", stat_diff}};
        pass = pass && row_sum < 1e-12 && stat_diff < 1e-9;
    }
    doc["pass"] = pass;
    emit(flags, dump_json(doc));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact and simulated analysis of exponential queueing networks"};
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--output", flags.output, "write the report to this file instead of stdout");
    app.add_option("--format", flags.format, "report format: json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    app.add_flag("--quiet", flags.quiet, "suppress auxiliary notes on stderr");

    auto* analyze = app.add_subcommand("analyze", "traffic, stability, product form, metrics");
    std::string analyze_spec;
    bool analyze_oracle = false;
    int analyze_cap = 0;
    double analyze_tail = 1e-8;
    bool analyze_allow_unstable = false;
    analyze->add_option("spec", analyze_spec, "network spec JSON")->required();
    analyze->add_flag("--oracle", analyze_oracle, "cross-check against the CTMC oracle");
    analyze->add_option("--cap", analyze_cap, "uniform truncation cap for the open-network oracle");
    analyze->add_option("--tail-target", analyze_tail,
                        "auto caps keep product-form tail mass below this");
    analyze->add_flag("--allow-unstable", analyze_allow_unstable,
                      "report unstable models instead of exiting with code 3");

    auto* normconst = app.add_subcommand("normconst", "normalizing constant method comparison");
    std::string nc_spec, nc_rho, nc_methods = "enumeration,convolution,harrison";
    int nc_population = -1;
    bool nc_bench = false;
    normconst->add_option("spec", nc_spec, "closed network spec JSON");
    normconst->add_option("--rho", nc_rho, "comma-separated loads (alternative to a spec)");
    normconst->add_option("--population", nc_population, "population N for --rho");
    normconst->add_option("--methods", nc_methods, "comma-separated method list");
    normconst->add_flag("--bench", nc_bench, "add wall-clock timings (non-deterministic output)");

    auto* simulate = app.add_subcommand("simulate", "seeded discrete-event simulation");
    std::string sim_spec, sim_tests, sim_plots, sim_events;
    SimConfig sim_config;
    simulate->add_option("spec", sim_spec, "network spec JSON")->required();
    simulate->add_option("--seed", sim_config.seed, "master RNG seed");
    simulate->add_option("--time", sim_config.run_time, "model time to simulate");
    simulate->add_option("--warmup", sim_config.warmup_time,
                         "warmup time to discard (default 10% of --time)");
    simulate->add_option("--window", sim_config.departure_window,
                         "window width for departure counts and snapshots");
    simulate->add_option("--replications", sim_config.replication_count,
                         "independent replications");
    simulate->add_option("--tests", sim_tests, "comma list: departures,marginals,independence");
    simulate->add_option("--plot-prefix", sim_plots, "write plot-ready CSVs with this prefix");
    simulate->add_option("--event-log", sim_events, "write the event log CSV here");
    simulate->add_flag("--allow-unstable", sim_config.allow_unstable,
                       "simulate even when a node is unstable");

    auto* verify = app.add_subcommand("verify", "balance equations and reversed-process checks");
    std::string verify_spec;
    int verify_cap = 0, verify_samples = 100;
    double verify_tail = 1e-8;
    verify->add_option("spec", verify_spec, "network spec JSON")->required();
    verify->add_option("--cap", verify_cap, "uniform truncation cap for open networks");
    verify->add_option("--tail-target", verify_tail,
                       "auto caps keep product-form tail mass below this");
    verify->add_option("--samples", verify_samples, "states sampled for partial balance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kBadInput;
    }

    try {
        if (analyze->parsed()) {
            return run_analyze(analyze_spec, analyze_oracle, analyze_cap, analyze_tail,
                               analyze_allow_unstable, flags);
        }
        if (normconst->parsed()) {
            if (nc_spec.empty() && nc_rho.empty())
                throw SpecParseError("normconst needs a spec file or --rho");
            return run_normconst(nc_spec, nc_rho, nc_population, nc_methods, nc_bench, flags);
        }
        if (simulate->parsed()) {
            return run_simulate(sim_spec, sim_config, sim_tests, sim_plots, sim_events, flags);
        }
        if (verify->parsed()) {
            return run_verify(verify_spec, verify_cap, verify_tail, verify_samples, flags);
        }
    } catch (const UnstableOpenModel& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUnstable;
    } catch (const UnstableNode& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUnstable;
    } catch (const GuardExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kGuard;
    } catch (const InsufficientSamples& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNoSamples;
    } catch (const SpecParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kBadInput;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kOk;
}
