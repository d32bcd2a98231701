// End-to-end checks of the mgrid binary: exit codes, file outputs, and
// byte-level determinism. Each case works inside its own scratch directory.

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "mg/config.hpp"
#include "mg/scenario.hpp"
#include "mg/timeseries.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mg;

namespace {

const std::string kBin = MGRID_BIN;
const std::string kWeather = std::string(TESTS_DATA_DIR) + "/weather_96h.csv";

struct CmdResult {
    int code = -1;
    std::string output;  // stdout + stderr
};

CmdResult run_cmd(const std::string& cmd) {
    CmdResult res;
    FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) res.output.append(buf, n);
    const int rc = pclose(pipe);
    res.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return res;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::current_path() / ("cli_scratch_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::size_t line_count(const fs::path& path) {
    std::ifstream is(path);
    REQUIRE(is.good());
    std::size_t n = 0;
    std::string line;
    while (std::getline(is, line)) ++n;
    return n;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

/// 24-step flat-spot-price scenario with enough battery to arbitrage.
Scenario flat_price_scenario() {
    const std::size_t n = 24;
    std::vector<double> load(n), solar(n), price(n, 0.15);
    for (std::size_t t = 0; t < n; ++t) {
        load[t] = 10.0 + 3.0 * std::sin(2.0 * M_PI * static_cast<double>(t) / 24.0);
        solar[t] = t >= 6 && t <= 18
                       ? 6.0 * std::sin(M_PI * (static_cast<double>(t) - 6.0) / 12.0)
                       : 0.0;
    }
    Scenario sc;
    sc.config.battery_capacity_kwh = 20.0;
    sc.config.battery_max_charge_kw = 10.0;
    sc.config.battery_max_discharge_kw = 10.0;
    sc.config.pv_peak_kw = 6.0;
    sc.config.initial_soc_fraction = 0.5;
    sc.config.step_seconds = 3600;
    sc.loads.emplace_back(0, 3600, Unit::kW, std::move(load));
    sc.solar = TimeSeries(0, 3600, Unit::kW, std::move(solar));
    sc.price = TimeSeries(0, 3600, Unit::CadPerKwh, std::move(price));
    sc.validate();
    return sc;
}

}  // namespace

TEST_CASE("cli synth is reproducible and honors the horizon") {
    const fs::path dir = scratch_dir("synth");

    const std::string base = kBin + " synth --weather " + kWeather + " --seed 11";
    const CmdResult a = run_cmd(base + " --horizon 24 --out " + q(dir / "a"));
    CHECK(a.code == 0);
    const CmdResult b = run_cmd(base + " --horizon 24 --out " + q(dir / "b"));
    CHECK(b.code == 0);

    CHECK(slurp(dir / "a/manifest.json") == slurp(dir / "b/manifest.json"));
    CHECK(slurp(dir / "a/load.csv") == slurp(dir / "b/load.csv"));
    CHECK(slurp(dir / "a/solar.csv") == slurp(dir / "b/solar.csv"));

    CHECK(line_count(dir / "a/load.csv") == 25);  // header + 24 steps
    CHECK(line_count(dir / "a/solar.csv") == 25);

    const json manifest = json::parse(slurp(dir / "a/manifest.json"));
    CHECK(manifest["n_steps"] == 24);
    CHECK(manifest["seed"] == 11);
    CHECK(manifest["config_hash"].get<std::string>().size() == 16);

    // a different seed must change the scenario draw
    const CmdResult c =
        run_cmd(base + "7 --horizon 24 --out " + q(dir / "c"));
    CHECK(c.code == 0);
    CHECK(slurp(dir / "a/load.csv") != slurp(dir / "c/load.csv"));
}

TEST_CASE("cli synth rejects a missing weather file naming the path") {
    const fs::path dir = scratch_dir("synth_missing");
    const CmdResult r = run_cmd(kBin + " synth --weather " + q(dir / "nope.csv") +
                                " --out " + q(dir / "out"));
    CHECK(r.code == 2);
    CHECK(r.output.find("nope.csv") != std::string::npos);
}

TEST_CASE("cli rejects unknown config keys") {
    const fs::path dir = scratch_dir("badkey");
    {
        std::ofstream os(dir / "bad.ini");
        os << "[bogus]\nkey = 1\n";
    }
    const CmdResult r = run_cmd(kBin + " synth --config " + q(dir / "bad.ini") +
                                " --weather " + kWeather + " --out " + q(dir / "out"));
    CHECK(r.code == 2);
    CHECK(r.output.find("bogus.key") != std::string::npos);
}

TEST_CASE("cli rule baseline leaves no unmet load and writes exact metric keys") {
    const fs::path dir = scratch_dir("rule");
    flat_price_scenario().save((dir / "scen").string());

    const CmdResult r = run_cmd(kBin + " baseline --scenario " + q(dir / "scen") +
                                " --kind rule --out " + q(dir / "out"));
    CHECK(r.code == 0);

    const json m = json::parse(slurp(dir / "out/metrics.json"));
    const std::vector<std::string> expected = {"cost_cad", "grid_load_fraction",
                                               "island_fraction", "unmet_fraction"};
    std::vector<std::string> got;
    for (const auto& [key, value] : m.items()) {
        (void)value;
        got.push_back(key);
    }
    CHECK(got == expected);
    CHECK(m["unmet_fraction"].get<double>() == 0.0);
    CHECK(m["island_fraction"].get<double>() >= 0.0);
    CHECK(m["island_fraction"].get<double>() <= 1.0);
    CHECK(line_count(dir / "out/trace.csv") == 25);
    CHECK(fs::exists(dir / "out/resolved_config.ini"));
}

TEST_CASE("cli milp baseline undercuts the rule baseline on flat prices") {
    const fs::path dir = scratch_dir("dominance");
    flat_price_scenario().save((dir / "scen").string());

    const CmdResult rule = run_cmd(kBin + " baseline --scenario " + q(dir / "scen") +
                                   " --kind rule --out " + q(dir / "rule"));
    CHECK(rule.code == 0);
    const CmdResult milp = run_cmd(
        kBin + " baseline --scenario " + q(dir / "scen") +
        " --kind milp --mode corrected --objective cost_only --window 0 " +
        "--solver-time-limit 60 --out " + q(dir / "milp"));
    CHECK(milp.code == 0);

    const double rule_cost =
        json::parse(slurp(dir / "rule/metrics.json"))["cost_cad"].get<double>();
    const double milp_cost =
        json::parse(slurp(dir / "milp/metrics.json"))["cost_cad"].get<double>();
    CHECK(milp_cost <= rule_cost + 1e-6);

    // identical command, identical bytes
    const CmdResult again = run_cmd(
        kBin + " baseline --scenario " + q(dir / "scen") +
        " --kind milp --mode corrected --objective cost_only --window 0 " +
        "--solver-time-limit 60 --out " + q(dir / "milp2"));
    CHECK(again.code == 0);
    CHECK(slurp(dir / "milp/trace.csv") == slurp(dir / "milp2/trace.csv"));
    CHECK(slurp(dir / "milp/metrics.json") == slurp(dir / "milp2/metrics.json"));
}

TEST_CASE("cli train writes one curve row per update and is byte-deterministic") {
    const fs::path dir = scratch_dir("train");
    flat_price_scenario().save((dir / "scen").string());
    {
        std::ofstream os(dir / "run.ini");
        os << "seed = 5\n\n[scenario]\ndir = " << (dir / "scen").string()
           << "\n\n[env]\nlayout = rye\nkind = discrete\n\n[ppo]\nhidden = 8,4\n"
              "rollout_len = 24\nepochs = 2\nminibatch_size = 12\n\n"
              "[train]\ntotal_steps = 24\n";
    }

    const std::string cmd = kBin + " train --config " + q(dir / "run.ini");
    const CmdResult a = run_cmd(cmd + " --out " + q(dir / "a"));
    CHECK(a.code == 0);
    CHECK(line_count(dir / "a/curve.csv") == 2);  // header + 1 update
    CHECK(fs::exists(dir / "a/checkpoint.bin"));

    const CmdResult b = run_cmd(cmd + " --out " + q(dir / "b"));
    CHECK(b.code == 0);
    CHECK(slurp(dir / "a/curve.csv") == slurp(dir / "b/curve.csv"));
    CHECK(slurp(dir / "a/checkpoint.bin") == slurp(dir / "b/checkpoint.bin"));
}

TEST_CASE("cli evaluate repeats byte-identically and gates on the config hash") {
    const fs::path dir = scratch_dir("evaluate");
    flat_price_scenario().save((dir / "scen").string());
    const std::string common =
        "\n\n[scenario]\ndir = " + (dir / "scen").string() +
        "\n\n[env]\nlayout = rye\nkind = discrete\n\n[ppo]\nhidden = 8,4\n"
        "rollout_len = 24\nepochs = 2\nminibatch_size = 12\n";
    {
        std::ofstream os(dir / "run.ini");
        os << "seed = 5" << common << "\n[train]\ntotal_steps = 24\n"
           << "\n[evaluate]\nepisodes = 2\ncheckpoint = "
           << (dir / "model/checkpoint.bin").string() << "\n";
    }
    CHECK(run_cmd(kBin + " train --config " + q(dir / "run.ini") + " --out " +
                  q(dir / "model"))
              .code == 0);

    const std::string eval_cmd = kBin + " evaluate --config " + q(dir / "run.ini");
    const CmdResult a = run_cmd(eval_cmd + " --out " + q(dir / "a"));
    CHECK(a.code == 0);
    const CmdResult b = run_cmd(eval_cmd + " --out " + q(dir / "b"));
    CHECK(b.code == 0);
    CHECK(slurp(dir / "a/metrics.json") == slurp(dir / "b/metrics.json"));
    CHECK(slurp(dir / "a/trace.csv") == slurp(dir / "b/trace.csv"));

    const json m = json::parse(slurp(dir / "a/metrics.json"));
    CHECK(m["island_fraction"].get<double>() >= 0.0);
    CHECK(m["island_fraction"].get<double>() <= 1.0);

    // changing a PPO hyperparameter invalidates the stored hash
    {
        std::ofstream os(dir / "tweaked.ini");
        os << "seed = 5" << common << "ent_coef = 0.02\n"
           << "\n[evaluate]\nepisodes = 2\ncheckpoint = "
           << (dir / "model/checkpoint.bin").string() << "\n";
    }
    const CmdResult mism =
        run_cmd(kBin + " evaluate --config " + q(dir / "tweaked.ini") + " --out " +
                q(dir / "m"));
    CHECK(mism.code == 5);
    CHECK(mism.output.find("hash mismatch") != std::string::npos);
    const CmdResult forced =
        run_cmd(kBin + " evaluate --config " + q(dir / "tweaked.ini") +
                " --force --out " + q(dir / "f"));
    CHECK(forced.code == 0);
}

TEST_CASE("cli export-plot flattens fields and survives a pivot round trip") {
    const fs::path dir = scratch_dir("plot");
    flat_price_scenario().save((dir / "scen").string());
    CHECK(run_cmd(kBin + " baseline --scenario " + q(dir / "scen") +
                  " --kind rule --out " + q(dir / "base"))
              .code == 0);

    const CmdResult one = run_cmd(kBin + " export-plot --trace " +
                                  q(dir / "base/trace.csv") +
                                  " --fields soc_kwh --out " + q(dir / "one"));
    CHECK(one.code == 0);
    CHECK(line_count(dir / "one/plot.csv") == 25);  // header + 24 steps

    const CmdResult two = run_cmd(
        kBin + " export-plot --trace " + q(dir / "base/trace.csv") +
        " --fields grid_import,soc_kwh --out " + q(dir / "two"));
    CHECK(two.code == 0);

    // pivot the long file back and compare against the source columns
    std::map<std::string, std::vector<std::string>> pivot;
    {
        std::ifstream is(dir / "two/plot.csv");
        std::string line;
        std::getline(is, line);
        while (std::getline(is, line)) {
            const std::size_t c1 = line.find(',');
            const std::size_t c2 = line.find(',', c1 + 1);
            pivot[line.substr(c1 + 1, c2 - c1 - 1)].push_back(line.substr(c2 + 1));
        }
    }
    std::map<std::string, std::vector<std::string>> source;
    {
        std::ifstream is(dir / "base/trace.csv");
        std::string line;
        std::getline(is, line);
        std::vector<std::string> header;
        {
            std::istringstream hs(line);
            std::string tok;
            while (std::getline(hs, tok, ',')) header.push_back(tok);
        }
        while (std::getline(is, line)) {
            std::istringstream ls(line);
            std::string tok;
            for (std::size_t i = 0; std::getline(ls, tok, ','); ++i) {
                source[header[i]].push_back(tok);
            }
        }
    }
    CHECK(pivot["soc_kwh"] == source["soc_kwh"]);
    CHECK(pivot["grid_import"] == source["grid_import"]);

    const CmdResult bad = run_cmd(kBin + " export-plot --trace " +
                                  q(dir / "base/trace.csv") +
                                  " --fields made_up --out " + q(dir / "bad"));
    CHECK(bad.code == 2);
    CHECK(bad.output.find("unknown field: made_up") != std::string::npos);
    CHECK(bad.output.find("soc_kwh") != std::string::npos);  // lists valid names
}
