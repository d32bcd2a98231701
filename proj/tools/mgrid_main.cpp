// mgrid: command-line driver for scenario synthesis, dispatch baselines,
// PPO training, policy evaluation, and plot-data export.
//
// Exit codes: 0 ok, 2 config/usage error, 3 infeasible optimization window,
// 4 training divergence (after one halved-lr retry), 5 checkpoint/config
// hash mismatch (override with --force).

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mg/csv.hpp"
#include "mg/dispatch.hpp"
#include "mg/env.hpp"
#include "mg/forecast.hpp"
#include "mg/hash.hpp"
#include "mg/ingest.hpp"
#include "mg/milp.hpp"
#include "mg/rl.hpp"
#include "mg/rng.hpp"
#include "mg/scenario.hpp"
#include "mg/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mg;

namespace {

struct CliError {
    int code;
    std::string message;
};

std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    const std::size_t a = s.find_first_not_of(ws);
    if (a == std::string::npos) return "";
    const std::size_t b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += sep;
        out += items[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// merged key-value configuration (file keys + flag overrides, flags win)

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "seed",
        "scenario.dir",
        "synth.weather",
        "synth.timestamp_column",
        "synth.temperature_column",
        "synth.irradiance_column",
        "synth.horizon",
        "synth.n_buildings",
        "synth.scale",
        "synth.mult_sigma",
        "synth.add_sigma",
        "synth.regressor",
        "grid.battery_capacity_kwh",
        "grid.battery_max_charge_kw",
        "grid.battery_max_discharge_kw",
        "grid.pv_peak_kw",
        "grid.wind_peak_kw",
        "grid.fuel_cell_max_kw",
        "grid.generator_max_kw",
        "grid.initial_soc_fraction",
        "grid.step_seconds",
        "plant.panel_area_m2",
        "plant.efficiency",
        "tariff.tier1_limit_kwh_per_day",
        "tariff.tier1_rate",
        "tariff.tier2_rate",
        "baseline.kind",
        "baseline.variant",
        "baseline.mode",
        "baseline.objective",
        "baseline.window",
        "baseline.time_limit_s",
        "baseline.big_m",
        "env.layout",
        "env.kind",
        "env.forecaster",
        "reward.w_unmet",
        "reward.w_grid_connected",
        "reward.w_import",
        "reward.w_buy",
        "reward.w_sell",
        "reward.w_export",
        "reward.w_renewable_ratio",
        "reward.w_soc_mid",
        "ppo.clip_eps",
        "ppo.vf_coef",
        "ppo.ent_coef",
        "ppo.gamma",
        "ppo.gae_lambda",
        "ppo.epochs",
        "ppo.minibatch_size",
        "ppo.lr_initial",
        "ppo.lr_final",
        "ppo.max_policy_std",
        "ppo.std_reset_value",
        "ppo.kl_threshold",
        "ppo.grad_norm_clip",
        "ppo.rollout_len",
        "ppo.hidden",
        "ppo.dropout_rate",
        "train.total_steps",
        "evaluate.checkpoint",
        "evaluate.episodes",
        "evaluate.deterministic",
        "evaluate.train_reference",
        "export.trace",
        "export.fields",
    };
    return keys;
}

class ConfigStore {
public:
    void set(const std::string& key, std::string value) { kv_[key] = std::move(value); }
    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string str(const std::string& key, const std::string& fallback) const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }

    std::string require_str(const std::string& key) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) throw CliError{2, "required config key not set: " + key};
        return it->second;
    }

    double num(const std::string& key, double fallback) const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? fallback : parse_double(key, it->second);
    }

    std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
        const auto it = kv_.find(key);
        return it == kv_.end() ? fallback : parse_count(key, it->second);
    }

    bool flag(const std::string& key, bool fallback) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        const std::string& v = it->second;
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw CliError{2, "config key " + key + ": expected a boolean, got '" + v + "'"};
    }

    std::vector<double> num_list(const std::string& key,
                                 const std::vector<double>& fallback) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        std::vector<double> out;
        for (const std::string& tok : split(it->second, ',')) {
            out.push_back(parse_double(key, tok));
        }
        return out;
    }

    std::vector<std::size_t> size_list(const std::string& key,
                                       const std::vector<std::size_t>& fallback) const {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        std::vector<std::size_t> out;
        for (const std::string& tok : split(it->second, ',')) {
            out.push_back(static_cast<std::size_t>(parse_count(key, tok)));
        }
        return out;
    }

    const std::map<std::string, std::string>& all() const { return kv_; }

    void validate_keys() const {
        for (const auto& [key, value] : kv_) {
            (void)value;
            if (known_keys().count(key) == 0) {
                throw CliError{2, "unknown config key: " + key};
            }
        }
    }

private:
    static double parse_double(const std::string& key, const std::string& raw) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw CliError{2, "config key " + key + ": not a number: '" + raw + "'"};
        }
    }

    static std::uint64_t parse_count(const std::string& key, const std::string& raw) {
        try {
            std::size_t pos = 0;
            if (!raw.empty() && raw[0] == '-') throw std::invalid_argument(raw);
            const unsigned long long v = std::stoull(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw CliError{2,
                           "config key " + key + ": not a whole number: '" + raw + "'"};
        }
    }

    std::map<std::string, std::string> kv_;
};

ConfigStore parse_ini_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw CliError{2, "cannot open config file: " + path};
    ConfigStore store;
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        const std::string where = path + ":" + std::to_string(lineno);
        if (s.front() == '[') {
            if (s.back() != ']') throw CliError{2, where + ": malformed section header"};
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty()) throw CliError{2, where + ": empty section name"};
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) {
            throw CliError{2, where + ": expected 'key = value'"};
        }
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty()) throw CliError{2, where + ": empty key"};
        store.set(section.empty() ? key : section + "." + key, value);
    }
    return store;
}

/// Canonical INI rendering: global keys first, then sorted sections. The
/// config hash is FNV-1a over exactly these bytes.
std::string canonical_config_text(const ConfigStore& store) {
    std::ostringstream out;
    for (const auto& [key, value] : store.all()) {
        if (key.find('.') == std::string::npos) out << key << " = " << value << "\n";
    }
    std::string current;
    for (const auto& [key, value] : store.all()) {
        const std::size_t dot = key.find('.');
        if (dot == std::string::npos) continue;
        const std::string section = key.substr(0, dot);
        if (section != current) {
            out << "\n[" << section << "]\n";
            current = section;
        }
        out << key.substr(dot + 1) << " = " << value << "\n";
    }
    return out.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CliError{2, "cannot write: " + path.string()};
    os << text;
}

std::string hex16(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t write_snapshot(const ConfigStore& store, const fs::path& out) {
    const std::string text = canonical_config_text(store);
    write_text(out / "resolved_config.ini", text);
    return fnv1a64(text);
}

// ---------------------------------------------------------------------------
// typed builders from the merged store

MicrogridConfig grid_from(const ConfigStore& c) {
    MicrogridConfig g = MicrogridConfig::rye_preset();
    g.battery_capacity_kwh = c.num("grid.battery_capacity_kwh", g.battery_capacity_kwh);
    g.battery_max_charge_kw = c.num("grid.battery_max_charge_kw", g.battery_max_charge_kw);
    g.battery_max_discharge_kw =
        c.num("grid.battery_max_discharge_kw", g.battery_max_discharge_kw);
    g.pv_peak_kw = c.num("grid.pv_peak_kw", g.pv_peak_kw);
    g.wind_peak_kw = c.num("grid.wind_peak_kw", g.wind_peak_kw);
    g.fuel_cell_max_kw = c.num("grid.fuel_cell_max_kw", g.fuel_cell_max_kw);
    g.generator_max_kw = c.num("grid.generator_max_kw", g.generator_max_kw);
    g.initial_soc_fraction = c.num("grid.initial_soc_fraction", g.initial_soc_fraction);
    g.step_seconds =
        static_cast<std::int64_t>(c.count("grid.step_seconds",
                                          static_cast<std::uint64_t>(g.step_seconds)));
    return g;
}

TieredTariff tariff_from(const ConfigStore& c) {
    TieredTariff t;
    t.tier1_limit_kwh_per_day = c.num("tariff.tier1_limit_kwh_per_day",
                                      t.tier1_limit_kwh_per_day);
    t.tier1_rate = c.num("tariff.tier1_rate", t.tier1_rate);
    t.tier2_rate = c.num("tariff.tier2_rate", t.tier2_rate);
    return t;
}

SolarPlant plant_from(const ConfigStore& c) {
    SolarPlant p;
    p.panel_area_m2 = c.num("plant.panel_area_m2", 2000.0);
    p.efficiency = c.num("plant.efficiency", 0.18);
    return p;
}

RewardWeights weights_from(const ConfigStore& c) {
    RewardWeights w;
    w.w_unmet = c.num("reward.w_unmet", w.w_unmet);
    w.w_grid_connected = c.num("reward.w_grid_connected", w.w_grid_connected);
    w.w_import = c.num("reward.w_import", w.w_import);
    w.w_buy = c.num("reward.w_buy", w.w_buy);
    w.w_sell = c.num("reward.w_sell", w.w_sell);
    w.w_export = c.num("reward.w_export", w.w_export);
    w.w_renewable_ratio = c.num("reward.w_renewable_ratio", w.w_renewable_ratio);
    w.w_soc_mid = c.num("reward.w_soc_mid", w.w_soc_mid);
    try {
        w.validate();
    } catch (const std::exception& e) {
        throw CliError{2, std::string("reward weights: ") + e.what()};
    }
    return w;
}

ObsLayout layout_from(const ConfigStore& c) {
    const std::string v = c.str("env.layout", "rye");
    if (v == "rye") return ObsLayout::rye;
    if (v == "lac") return ObsLayout::lac;
    if (v == "mesa") return ObsLayout::mesa;
    throw CliError{2, "env.layout must be rye, lac, or mesa (got '" + v + "')"};
}

PPOConfig ppo_from(const ConfigStore& c) {
    PPOConfig p;
    p.clip_eps = c.num("ppo.clip_eps", p.clip_eps);
    p.vf_coef = c.num("ppo.vf_coef", p.vf_coef);
    p.ent_coef = c.num("ppo.ent_coef", p.ent_coef);
    p.gamma = c.num("ppo.gamma", p.gamma);
    p.gae_lambda = c.num("ppo.gae_lambda", p.gae_lambda);
    p.epochs = static_cast<std::size_t>(c.count("ppo.epochs", p.epochs));
    p.minibatch_size =
        static_cast<std::size_t>(c.count("ppo.minibatch_size", p.minibatch_size));
    p.lr_initial = c.num("ppo.lr_initial", p.lr_initial);
    p.lr_final = c.num("ppo.lr_final", p.lr_final);
    p.max_policy_std = c.num("ppo.max_policy_std", p.max_policy_std);
    p.std_reset_value = c.num("ppo.std_reset_value", p.std_reset_value);
    p.kl_threshold = c.num("ppo.kl_threshold", p.kl_threshold);
    p.grad_norm_clip = c.num("ppo.grad_norm_clip", p.grad_norm_clip);
    p.rollout_len = static_cast<std::size_t>(c.count("ppo.rollout_len", p.rollout_len));
    p.hidden = c.size_list("ppo.hidden", p.hidden);
    p.dropout_rate = c.num("ppo.dropout_rate", p.dropout_rate);
    const std::string kind = c.str("env.kind", "discrete");
    if (kind == "discrete") {
        p.action_kind = ActionKind::discrete;
    } else if (kind == "continuous") {
        p.action_kind = ActionKind::continuous;
    } else {
        throw CliError{2, "env.kind must be discrete or continuous (got '" + kind + "')"};
    }
    try {
        p.validate();
    } catch (const std::exception& e) {
        throw CliError{2, std::string("ppo config: ") + e.what()};
    }
    return p;
}

Scenario load_scenario_from(const ConfigStore& c) {
    const std::string dir = c.require_str("scenario.dir");
    if (!fs::exists(dir)) throw CliError{2, "scenario directory not found: " + dir};
    try {
        Scenario sc = Scenario::load(dir);
        sc.validate();
        return sc;
    } catch (const std::exception& e) {
        throw CliError{2, "cannot load scenario " + dir + ": " + e.what()};
    }
}

/// Env plus the forecaster it points at. The forecaster's models key on the
/// env's own scenario copy, so the bundle keeps both alive together.
struct EnvBundle {
    std::unique_ptr<ModelObsForecaster> forecaster;
    std::unique_ptr<Env> env;
};

EnvBundle make_env(const Scenario& scenario, const ConfigStore& c, std::uint64_t seed) {
    EnvBundle b;
    const RewardWeights weights = weights_from(c);
    const ObsLayout layout = layout_from(c);
    const std::string fk = c.str("env.forecaster", "persistence");
    ForecastKind kind = ForecastKind::persistence;
    if (fk == "linear_ar") {
        kind = ForecastKind::linear_ar;
    } else if (fk == "attention") {
        kind = ForecastKind::attention;
    } else if (fk != "persistence") {
        throw CliError{2, "env.forecaster must be persistence, linear_ar, or attention"};
    }
    if (fk != "persistence") b.forecaster = std::make_unique<ModelObsForecaster>();
    b.env = std::make_unique<Env>(scenario, weights, layout, b.forecaster.get());
    if (b.forecaster) {
        ForecastTrainConfig fcfg;
        fcfg.seed = seed;
        const Scenario& inner = b.env->scenario();
        const auto attach = [&](const TimeSeries& series) {
            try {
                b.forecaster->set_model(&series, fit(kind, series, fcfg).model);
            } catch (const std::exception& e) {
                throw CliError{2, std::string("forecaster fit: ") + e.what()};
            }
        };
        for (const TimeSeries& load : inner.loads) attach(load);
        if (inner.solar) attach(*inner.solar);
        if (inner.wind) attach(*inner.wind);
    }
    return b;
}

json metrics_json(const EpisodeMetrics& m) {
    return {{"cost_cad", m.cost_cad},
            {"island_fraction", m.island_fraction},
            {"grid_load_fraction", m.grid_load_fraction},
            {"unmet_fraction", m.unmet_fraction}};
}

void write_metrics(const fs::path& path, const EpisodeMetrics& m) {
    write_text(path, metrics_json(m).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// subcommands

void cmd_synth(const ConfigStore& c, const fs::path& out, std::uint64_t seed) {
    if (!c.has("synth.weather")) {
        throw CliError{2, "synth needs a weather CSV (key synth.weather or --weather)"};
    }
    const std::string weather_path = c.require_str("synth.weather");
    if (!fs::exists(weather_path)) {
        throw CliError{2, "weather file not found: " + weather_path};
    }

    const std::string ts_col = c.str("synth.timestamp_column", "timestamp");
    const std::string temp_col = c.str("synth.temperature_column", "temperature");
    const std::string irr_col = c.str("synth.irradiance_column", "irradiance");

    SynthConfig scfg;
    scfg.grid = grid_from(c);
    scfg.plant = plant_from(c);
    scfg.tariff = tariff_from(c);
    scfg.n_buildings = static_cast<std::size_t>(c.count("synth.n_buildings", 30));
    scfg.scale = c.num("synth.scale", 1.5);
    scfg.mult_sigma = c.num("synth.mult_sigma", 0.2);
    scfg.add_sigma = c.num("synth.add_sigma", 0.1);
    // temperature, daily harmonic, yearly harmonic, bias
    const std::vector<double> coef = c.num_list(
        "synth.regressor", {-0.35, -3.0, -2.5, 0.8, 0.5, 16.0});
    try {
        scfg.regressor = LoadRegressor(coef);
    } catch (const std::exception& e) {
        throw CliError{2, std::string("synth.regressor: ") + e.what()};
    }

    std::optional<TimeSeries> temperature;
    std::optional<TimeSeries> irradiance;
    try {
        CsvSchema schema;
        schema.timestamp_column = ts_col;
        schema.value_columns = {{temp_col, Unit::Celsius}, {irr_col, Unit::WattPerM2}};
        const RawTable table = parse_csv(weather_path, schema);
        temperature = to_timeseries(table, temp_col, scfg.grid.step_seconds);
        irradiance = to_timeseries(table, irr_col, scfg.grid.step_seconds);
    } catch (const std::exception& e) {
        throw CliError{2, "weather file " + weather_path + ": " + e.what()};
    }

    const std::uint64_t horizon = c.count("synth.horizon", 0);
    if (horizon > 0) {
        if (horizon > temperature->size()) {
            throw CliError{2, "synth.horizon exceeds weather length (" +
                                  std::to_string(temperature->size()) + " steps)"};
        }
        const auto cut = [&](const TimeSeries& s) {
            std::vector<double> head(s.values().begin(),
                                     s.values().begin() + static_cast<std::ptrdiff_t>(horizon));
            return TimeSeries(s.epoch_at(0), s.resolution_s(), s.unit(), std::move(head));
        };
        temperature = cut(*temperature);
        irradiance = cut(*irradiance);
    }

    Rng rng(seed);
    Scenario scenario;
    try {
        scenario = generate_scenario(
            scfg, {{"temperature", *temperature}, {"irradiance", *irradiance}}, rng);
        scenario.save(out.string());
    } catch (const std::exception& e) {
        throw CliError{2, std::string("scenario generation: ") + e.what()};
    }

    const std::uint64_t hash = write_snapshot(c, out);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(out)) {
        const std::string name = entry.path().filename().string();
        if (name != "manifest.json") files.push_back(name);
    }
    std::sort(files.begin(), files.end());

    json manifest;
    manifest["command"] = "synth";
    manifest["config_hash"] = hex16(hash);
    manifest["n_steps"] = scenario.n_steps();
    manifest["seed"] = seed;
    manifest["files"] = files;
    write_text(out / "manifest.json", manifest.dump(2) + "\n");

    std::printf("synth: %zu steps -> %s (config hash %s)\n", scenario.n_steps(),
                out.string().c_str(), hex16(hash).c_str());
}

void cmd_baseline(const ConfigStore& c, const fs::path& out) {
    const Scenario scenario = load_scenario_from(c);
    const std::string kind = c.str("baseline.kind", "rule");

    std::vector<MicrogridState> trace;
    std::vector<std::string> labels;
    EpisodeMetrics metrics;

    if (kind == "rule") {
        const std::string variant = c.str("baseline.variant", "simple");
        RuleVariant rv;
        if (variant == "simple") {
            rv = RuleVariant::simple;
        } else if (variant == "mesa") {
            rv = RuleVariant::mesa;
        } else {
            throw CliError{2, "baseline.variant must be simple or mesa"};
        }
        BaselineRun run = rule_based_run(scenario, rv);
        trace = std::move(run.trace);
        labels = std::move(run.action_labels);
        metrics = run.metrics;
    } else if (kind == "milp") {
        MilpBuildOptions build;
        const std::string mode = c.str("baseline.mode", "corrected");
        if (mode == "as_printed") {
            build.mode = MilpMode::as_printed;
        } else if (mode == "corrected") {
            build.mode = MilpMode::corrected;
        } else {
            throw CliError{2, "baseline.mode must be as_printed or corrected"};
        }
        const std::string objective = c.str("baseline.objective", "cost_only");
        if (objective == "verbatim") {
            build.objective = ObjectiveMode::verbatim;
        } else if (objective == "cost_only") {
            build.objective = ObjectiveMode::cost_only;
        } else {
            throw CliError{2, "baseline.objective must be verbatim or cost_only"};
        }
        build.big_m = c.num("baseline.big_m", 0.0);

        SolveOptions solve;
        solve.time_limit_s = c.num("baseline.time_limit_s", 0.0);
        std::size_t window =
            static_cast<std::size_t>(c.count("baseline.window", 0));
        if (window == 0) window = scenario.n_steps();

        RecedingResult run;
        try {
            run = receding_horizon_run(scenario, window, build, solve);
        } catch (const std::invalid_argument& e) {
            throw CliError{2, std::string("milp baseline: ") + e.what()};
        } catch (const std::runtime_error& e) {
            throw CliError{3, std::string("milp baseline: ") + e.what()};
        }
        for (const SolveStatus status : run.window_status) {
            if (status == SolveStatus::infeasible || status == SolveStatus::unbounded) {
                throw CliError{3, "milp baseline: optimization window infeasible"};
            }
        }
        trace = std::move(run.trace);
        labels = std::move(run.action_labels);
        metrics = run.metrics;
    } else {
        throw CliError{2, "baseline.kind must be rule or milp (got '" + kind + "')"};
    }

    const std::vector<double> rewards(trace.size(), 0.0);
    write_trace_csv((out / "trace.csv").string(), trace, labels, rewards, scenario);
    write_metrics(out / "metrics.json", metrics);
    write_snapshot(c, out);

    std::printf(
        "baseline %s: cost_cad=%.6f island_fraction=%.6f grid_load_fraction=%.6f "
        "unmet_fraction=%.6f\n",
        kind.c_str(), metrics.cost_cad, metrics.island_fraction,
        metrics.grid_load_fraction, metrics.unmet_fraction);
}

void cmd_train(const ConfigStore& c, const fs::path& out, std::uint64_t seed) {
    const Scenario scenario = load_scenario_from(c);
    const PPOConfig base = ppo_from(c);
    const std::size_t total_steps = static_cast<std::size_t>(
        c.count("train.total_steps", base.rollout_len * 10));

    const auto run_once = [&](const PPOConfig& cfg) {
        EnvBundle bundle = make_env(scenario, c, seed);
        Rng rng(seed);
        return train(*bundle.env, cfg, total_steps, rng);
    };

    TrainResult result;
    PPOConfig used = base;
    try {
        result = run_once(base);
    } catch (const NaNLoss&) {
        std::fprintf(stderr,
                     "warning: non-finite loss, retrying once with halved learning "
                     "rate\n");
        used.lr_initial *= 0.5;
        used.lr_final *= 0.5;
        try {
            result = run_once(used);
        } catch (const NaNLoss&) {
            throw CliError{4, "training diverged (non-finite loss) even after the "
                              "halved-lr retry"};
        }
    }

    save_checkpoint((out / "checkpoint.bin").string(), result.params,
                    config_hash(used));
    write_learning_curve_csv((out / "curve.csv").string(), result.curve);
    write_snapshot(c, out);

    const double final_reward =
        result.curve.empty() ? 0.0 : result.curve.back().mean_reward;
    std::printf("train: %zu updates over %zu env steps, final mean reward %.6f\n",
                result.curve.size(), result.total_env_steps, final_reward);
}

void cmd_evaluate(const ConfigStore& c, const fs::path& out, std::uint64_t seed,
                  bool force) {
    const std::string ckpt_path = c.require_str("evaluate.checkpoint");
    LoadedCheckpoint ckpt;
    try {
        ckpt = load_checkpoint(ckpt_path);
    } catch (const std::exception& e) {
        throw CliError{2, "cannot load checkpoint " + ckpt_path + ": " + e.what()};
    }

    const PPOConfig cfg = ppo_from(c);
    if (config_hash(cfg) != ckpt.config_hash) {
        if (force) {
            std::fprintf(stderr,
                         "warning: checkpoint was trained under a different config "
                         "(hash %s vs %s), continuing because of --force\n",
                         hex16(ckpt.config_hash).c_str(),
                         hex16(config_hash(cfg)).c_str());
        } else {
            throw CliError{5, "checkpoint config hash mismatch (trained " +
                                  hex16(ckpt.config_hash) + ", configured " +
                                  hex16(config_hash(cfg)) +
                                  "); pass --force to evaluate anyway"};
        }
    }

    Scenario scenario = load_scenario_from(c);
    if (c.has("evaluate.train_reference")) {
        const std::string refdir = c.require_str("evaluate.train_reference");
        if (!fs::exists(refdir)) {
            throw CliError{2, "train-reference scenario not found: " + refdir};
        }
        try {
            const Scenario ref = Scenario::load(refdir);
            for (std::size_t i = 0; i < scenario.loads.size() && i < ref.loads.size();
                 ++i) {
                scenario.loads[i] = rescale_test_to_train(scenario.loads[i], ref.loads[i]);
            }
            if (scenario.solar && ref.solar) {
                scenario.solar = rescale_test_to_train(*scenario.solar, *ref.solar);
            }
            if (scenario.wind && ref.wind) {
                scenario.wind = rescale_test_to_train(*scenario.wind, *ref.wind);
            }
            scenario.validate();
        } catch (const std::exception& e) {
            throw CliError{2, std::string("train-reference rescale: ") + e.what()};
        }
    }

    EnvBundle bundle = make_env(scenario, c, seed);
    const std::size_t episodes =
        static_cast<std::size_t>(c.count("evaluate.episodes", 20));
    const bool deterministic = c.flag("evaluate.deterministic", true);

    Rng rng(seed);
    EvalResult result;
    try {
        result = evaluate(ckpt.params, *bundle.env, episodes, deterministic, rng);
    } catch (const std::exception& e) {
        throw CliError{2, std::string("evaluate: ") + e.what()};
    }

    write_metrics(out / "metrics.json", result.mean_metrics);
    write_trace_csv((out / "trace.csv").string(), bundle.env->trace(),
                    bundle.env->action_labels(), bundle.env->rewards(),
                    bundle.env->scenario());
    write_snapshot(c, out);

    std::printf(
        "evaluate: mean reward %.6f over %zu episodes; cost_cad=%.6f "
        "unmet_fraction=%.6f\n",
        result.mean_reward, episodes, result.mean_metrics.cost_cad,
        result.mean_metrics.unmet_fraction);
}

void cmd_export_plot(const ConfigStore& c, const fs::path& out) {
    const std::string trace_path = c.require_str("export.trace");
    if (!fs::exists(trace_path)) {
        throw CliError{2, "trace file not found: " + trace_path};
    }
    std::ifstream is(trace_path);
    if (!is) throw CliError{2, "cannot open trace file: " + trace_path};

    std::string line;
    if (!std::getline(is, line)) throw CliError{2, "trace file is empty: " + trace_path};
    const std::vector<std::string> header = split(trim(line), ',');

    std::vector<std::string> valid;
    for (const std::string& name : header) {
        if (name != "step" && name != "action") valid.push_back(name);
    }
    std::size_t step_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "step") step_col = i;
    }
    if (step_col == header.size()) {
        throw CliError{2, "trace file has no step column: " + trace_path};
    }

    std::vector<std::string> fields = valid;
    if (c.has("export.fields")) {
        fields = split(c.require_str("export.fields"), ',');
        for (const std::string& f : fields) {
            if (std::find(valid.begin(), valid.end(), f) == valid.end()) {
                throw CliError{2, "unknown field: " + f +
                                      " (valid fields: " + join(valid, ", ") + ")"};
            }
        }
    }

    std::vector<std::vector<std::string>> rows;
    while (std::getline(is, line)) {
        const std::string s = trim(line);
        if (s.empty()) continue;
        std::vector<std::string> tokens = split(s, ',');
        if (tokens.size() != header.size()) {
            throw CliError{2, "trace row has " + std::to_string(tokens.size()) +
                                  " columns, header has " +
                                  std::to_string(header.size())};
        }
        rows.push_back(std::move(tokens));
    }

    // Values are re-emitted verbatim so an export+pivot round trip is
    // byte-exact against the source columns.
    std::ostringstream plot;
    plot << "step,field,value\n";
    for (const std::string& field : fields) {
        const std::size_t ci = static_cast<std::size_t>(
            std::find(header.begin(), header.end(), field) - header.begin());
        for (const std::vector<std::string>& row : rows) {
            plot << row[step_col] << ',' << field << ',' << row[ci] << '\n';
        }
    }
    write_text(out / "plot.csv", plot.str());
    write_snapshot(c, out);

    std::printf("export-plot: %zu rows (%zu fields x %zu steps) -> %s\n",
                fields.size() * rows.size(), fields.size(), rows.size(),
                (out / "plot.csv").string().c_str());
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
    CLI::App app{"microgrid dispatch toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "INI config file");
        sub->add_option("--seed", seed, "master RNG seed");
        sub->add_option("--out", out_dir, "output directory");
        return sub;
    };

    CLI::App* synth = add_common(
        app.add_subcommand("synth", "generate a synthetic scenario from weather"));
    std::string weather;
    synth->add_option("--weather", weather, "weather CSV (temperature, irradiance)");
    std::uint64_t horizon = 0;
    synth->add_option("--horizon", horizon, "truncate the scenario to N steps");

    std::string scenario_dir;
    CLI::App* baseline =
        add_common(app.add_subcommand("baseline", "run a rule or MILP baseline"));
    baseline->add_option("--scenario", scenario_dir, "scenario directory");
    std::string bl_kind, bl_mode, bl_objective, bl_variant;
    baseline->add_option("--kind", bl_kind, "rule|milp");
    baseline->add_option("--mode", bl_mode, "as_printed|corrected");
    baseline->add_option("--objective", bl_objective, "verbatim|cost_only");
    baseline->add_option("--variant", bl_variant, "simple|mesa");
    std::uint64_t bl_window = 0;
    baseline->add_option("--window", bl_window, "MILP window steps (0 = full horizon)");
    double time_limit = 0.0;
    baseline->add_option("--solver-time-limit", time_limit,
                         "per-window solver time limit in seconds");

    CLI::App* trainc = add_common(app.add_subcommand("train", "train a PPO policy"));
    trainc->add_option("--scenario", scenario_dir, "scenario directory");
    std::uint64_t total_steps = 0;
    trainc->add_option("--total-steps", total_steps, "environment steps to collect");

    CLI::App* evalc =
        add_common(app.add_subcommand("evaluate", "evaluate a trained checkpoint"));
    evalc->add_option("--scenario", scenario_dir, "scenario directory");
    std::string checkpoint;
    evalc->add_option("--checkpoint", checkpoint, "checkpoint file from train");
    std::uint64_t episodes = 0;
    evalc->add_option("--episodes", episodes, "evaluation episodes");
    bool force = false;
    evalc->add_flag("--force", force, "downgrade config hash mismatch to a warning");
    bool stochastic = false;
    evalc->add_flag("--stochastic", stochastic, "sample actions instead of the mode");

    CLI::App* exportc = add_common(
        app.add_subcommand("export-plot", "flatten a trace CSV to long format"));
    std::string trace_path;
    exportc->add_option("--trace", trace_path, "trace CSV produced by another command");
    std::string fields;
    exportc->add_option("--fields", fields, "comma-separated field names (default all)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string cmd = sub->get_name();

    ConfigStore store;
    if (!config_path.empty()) store = parse_ini_file(config_path);

    if (sub == synth) {
        if (synth->count("--weather")) store.set("synth.weather", weather);
        if (synth->count("--horizon")) store.set("synth.horizon", std::to_string(horizon));
    } else if (sub == baseline) {
        if (baseline->count("--scenario")) store.set("scenario.dir", scenario_dir);
        if (baseline->count("--kind")) store.set("baseline.kind", bl_kind);
        if (baseline->count("--mode")) store.set("baseline.mode", bl_mode);
        if (baseline->count("--objective")) store.set("baseline.objective", bl_objective);
        if (baseline->count("--variant")) store.set("baseline.variant", bl_variant);
        if (baseline->count("--window")) {
            store.set("baseline.window", std::to_string(bl_window));
        }
        if (baseline->count("--solver-time-limit")) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.17g", time_limit);
            store.set("baseline.time_limit_s", buf);
        }
    } else if (sub == trainc) {
        if (trainc->count("--scenario")) store.set("scenario.dir", scenario_dir);
        if (trainc->count("--total-steps")) {
            store.set("train.total_steps", std::to_string(total_steps));
        }
    } else if (sub == evalc) {
        if (evalc->count("--scenario")) store.set("scenario.dir", scenario_dir);
        if (evalc->count("--checkpoint")) store.set("evaluate.checkpoint", checkpoint);
        if (evalc->count("--episodes")) {
            store.set("evaluate.episodes", std::to_string(episodes));
        }
        if (stochastic) store.set("evaluate.deterministic", "false");
    } else if (sub == exportc) {
        if (exportc->count("--trace")) store.set("export.trace", trace_path);
        if (exportc->count("--fields")) store.set("export.fields", fields);
    }
    if (sub->count("--seed")) store.set("seed", std::to_string(seed));

    store.validate_keys();

    const std::uint64_t final_seed = store.count("seed", 1);
    store.set("seed", std::to_string(final_seed));
    // The output directory routes files but never changes their content, so
    // it stays out of the snapshot and the config hash.
    const std::string out_value = sub->count("--out") ? out_dir : "runs/" + cmd;

    const fs::path out(out_value);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw CliError{2, "cannot create output directory " + out_value};

    if (cmd == "synth") {
        cmd_synth(store, out, final_seed);
    } else if (cmd == "baseline") {
        cmd_baseline(store, out);
    } else if (cmd == "train") {
        cmd_train(store, out, final_seed);
    } else if (cmd == "evaluate") {
        cmd_evaluate(store, out, final_seed, force);
    } else {
        cmd_export_plot(store, out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
