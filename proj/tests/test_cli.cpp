// End-to-end tests of the qnet binary: exit codes, output shapes, and
// byte-identical reruns. The binary path comes from the QNET_CLI environment
// variable (set by ctest).

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

std::string cli_path() {
    const char* env = std::getenv("QNET_CLI");
    return env ? env : "";
}

fs::path work_dir() {
    auto dir = fs::temp_directory_path() / "qnet_cli_tests";
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    std::string cmd = cli_path() + " " + args + " >/dev/null 2>/dev/null";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_spec(const std::string& name, const std::string& text) {
    auto path = work_dir() / name;
    std::ofstream out(path);
    out << text;
    return path;
}

const char* kTandem = R"({
  "nodes": 2,
  "routing": [[0.0, 1.0], [0.0, 0.0]],
  "service": [{"type": "constant", "rate": 2.0}, {"type": "constant", "rate": 4.0}],
  "kind": {"open": {"nu": [1.0, 0.0]}}
})";

const char* kCycle = R"({
  "nodes": 2,
  "routing": [[0.0, 1.0], [1.0, 0.0]],
  "service": [{"type": "constant", "rate": 1.0}, {"type": "constant", "rate": 2.0}],
  "kind": {"closed": {"population": 2}}
})";

const char* kUnstable = R"({
  "nodes": 1,
  "routing": [[0.0]],
  "service": [{"type": "constant", "rate": 2.0}],
  "kind": {"open": {"nu": [3.0]}}
})";

const char* kNoExit = R"({
  "nodes": 2,
  "routing": [[0.0, 1.0], [1.0, 0.0]],
  "service": [{"type": "constant", "rate": 2.0}, {"type": "constant", "rate": 4.0}],
  "kind": {"open": {"nu": [1.0, 0.0]}}
})";

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("cli binary is configured") { REQUIRE_FALSE(cli_path().empty()); }

TEST_CASE("analyze tandem reports traffic and metrics") {
    auto spec = write_spec("tandem.json", kTandem);
    auto out = work_dir() / "analyze.json";
    CHECK(run_cli("--output " + out.string() + " --quiet analyze " + spec.string()) == 0);
    auto text = slurp(out);
    CHECK(contains(text, "\"alpha\": [1, 1]"));
    CHECK(contains(text, "\"rho\": 0.25"));
    CHECK(contains(text, "\"mean_queue\": 0.33333333333333331"));
}

TEST_CASE("analyze closed cycle reports B") {
    auto spec = write_spec("cycle.json", kCycle);
    auto out = work_dir() / "closed.json";
    CHECK(run_cli("--output " + out.string() + " --quiet analyze " + spec.string()) == 0);
    auto text = slurp(out);
    CHECK(contains(text, "\"B\": 0.5714285714285714"));
}

TEST_CASE("exit codes follow the contract") {
    auto bad = write_spec("bad.json", "{\"nodes\": 1}");
    CHECK(run_cli("analyze " + bad.string()) == 4);

    auto missing = work_dir() / "no_such_file.json";
    CHECK(run_cli("analyze " + missing.string()) == 4);

    auto unstable = write_spec("unstable.json", kUnstable);
    CHECK(run_cli("analyze " + unstable.string()) == 3);
    CHECK(run_cli("analyze --allow-unstable " + unstable.string()) == 0);

    auto invalid = write_spec("invalid.json", R"({
      "nodes": 2,
      "routing": [[0.0, 1.0], [1.0, 0.0]],
      "service": [{"type": "constant", "rate": 1.0}, {"type": "constant", "rate": 1.0}],
      "kind": {"open": {"nu": [1.0, 0.0]}}
    })");
    CHECK(run_cli("analyze " + invalid.string()) == 2);  // no path to the exterior

    auto cycle = write_spec("cycle_codes.json", kCycle);
    CHECK(run_cli("simulate " + cycle.string() + " --seed 1 --time 500 --tests departures") == 5);

    auto tandem = write_spec("tandem_codes.json", kTandem);
    CHECK(run_cli("simulate " + tandem.string() + " --seed 1 --time 300 --tests departures") == 5);

    auto big = write_spec("big.json", R"({
      "nodes": 2,
      "routing": [[0.0, 1.0], [1.0, 0.0]],
      "service": [{"type": "constant", "rate": 1.0}, {"type": "constant", "rate": 2.0}],
      "kind": {"closed": {"population": 9000000}}
    })");
    CHECK(run_cli("verify " + big.string()) == 6);

    CHECK(run_cli("normconst --rho 1,2,nonsense --population 3") == 4);
    CHECK(run_cli("bogus-subcommand") == 4);
}

TEST_CASE("normconst emits the comparison table") {
    auto out = work_dir() / "norm.csv";
    CHECK(run_cli("--output " + out.string() + " --quiet normconst --rho 1,2 --population 2") == 0);
    auto text = slurp(out);
    CHECK(contains(text, "method,J,N,G,B,rel_error_vs_convolution"));
    CHECK(contains(text, "enumeration,2,2,7,"));
    CHECK(contains(text, "convolution,2,2,7,"));
    CHECK(contains(text, "harrison-distinct,2,2,7,"));

    auto out2 = work_dir() / "norm_degenerate.csv";
    CHECK(run_cli("--output " + out2.string() + " --quiet normconst --rho 1,1,2 --population 2") ==
          0);
    CHECK(contains(slurp(out2), "harrison-degenerate,3,2,11,"));
}

TEST_CASE("every command is byte-deterministic across reruns") {
    auto tandem = write_spec("det_tandem.json", kTandem);
    auto cycle = write_spec("det_cycle.json", kCycle);
    struct Case {
        const char* name;
        std::string args;
    };
    const Case cases[] = {
        {"analyze_open", "analyze " + tandem.string() + " --oracle"},
        {"analyze_closed", "analyze " + cycle.string() + " --oracle"},
        {"normconst", "normconst --rho 0.5,1.5,2.5 --population 12"},
        {"simulate",
         "simulate " + tandem.string() + " --seed 20240101 --time 3000 --tests departures,marginals"},
        {"verify_open", "verify " + tandem.string() + " --cap 25"},
        {"verify_closed", "verify " + cycle.string()},
    };
    for (const auto& c : cases) {
        CAPTURE(c.name);
        auto first = work_dir() / (std::string(c.name) + "_1.out");
        auto second = work_dir() / (std::string(c.name) + "_2.out");
        REQUIRE(run_cli("--output " + first.string() + " --quiet " + c.args) == 0);
        REQUIRE(run_cli("--output " + second.string() + " --quiet " + c.args) == 0);
        auto a = slurp(first);
        REQUIRE_FALSE(a.empty());
        CHECK(a == slurp(second));
    }
}

TEST_CASE("simulate writes plot data and an event log") {
    auto tandem = write_spec("plots_tandem.json", kTandem);
    auto prefix = (work_dir() / "plots").string();
    auto log = work_dir() / "events.csv";
    auto out = work_dir() / "sim.json";
    CHECK(run_cli("--output " + out.string() + " --quiet simulate " + tandem.string() +
                  " --seed 7 --time 2000 --plot-prefix " + prefix + " --event-log " +
                  log.string()) == 0);
    CHECK(fs::exists(prefix + "_pmf_node1.csv"));
    CHECK(fs::exists(prefix + "_pmf_node2.csv"));
    CHECK(fs::exists(prefix + "_departures_node2.csv"));
    auto events = slurp(log);
    CHECK(contains(events, "time,kind,node_from,node_to"));
    CHECK(contains(events, "arrival"));
    CHECK(contains(events, "transfer"));
    CHECK(contains(events, "departure"));

    auto pmf = slurp(prefix + "_pmf_node1.csv");
    CHECK(contains(pmf, "level,probability"));
}

TEST_CASE("verify passes on sound models") {
    auto tandem = write_spec("verify_tandem.json", kTandem);
    auto out = work_dir() / "verify.json";
    CHECK(run_cli("--output " + out.string() + " --quiet verify " + tandem.string() +
                  " --tail-target 1e-13") == 0);
    CHECK(contains(slurp(out), "\"pass\": true"));

    auto cycle = write_spec("verify_cycle.json", kCycle);
    auto out2 = work_dir() / "verify_closed.json";
    CHECK(run_cli("--output " + out2.string() + " --quiet verify " + cycle.string()) == 0);
    CHECK(contains(slurp(out2), "\"pass\": true"));
}

TEST_CASE("no-exit open network still analyzes but refuses departure tests") {
    auto spec = write_spec("noexit.json", kNoExit);
    CHECK(run_cli("analyze " + spec.string()) == 2);  // absorbing subset violation
}
