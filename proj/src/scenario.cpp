#include "mg/scenario.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mg {
namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_series_csv(const fs::path& path, const TimeSeries& ts) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "timestamp,value\n";
    for (std::size_t i = 0; i < ts.size(); ++i) {
        out << ts.epoch_at(i) << ',' << fmt_double(ts[i]) << '\n';
    }
}

TimeSeries read_series_csv(const fs::path& path, Unit unit, std::int64_t fallback_res) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file " + path.string());
    std::vector<std::int64_t> epochs;
    std::vector<double> values;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::runtime_error("bad row in " + path.string() + ": " + line);
        }
        epochs.push_back(std::stoll(line.substr(0, comma)));
        values.push_back(std::stod(line.substr(comma + 1)));
    }
    if (values.empty()) throw std::runtime_error("no rows in " + path.string());
    const std::int64_t res = epochs.size() > 1 ? epochs[1] - epochs[0] : fallback_res;
    return TimeSeries(epochs[0], res, unit, std::move(values));
}

// Mesa feeder order is fixed; single-feeder scenarios use just "load".
const char* kLoadNames[3] = {"load_critical", "load_non_critical", "load_essential"};

}  // namespace

double Scenario::total_load_kw(std::size_t step) const {
    double total = 0.0;
    for (const auto& l : loads) total += l[step];
    return total;
}

double Scenario::solar_kw(std::size_t step) const {
    return solar ? (*solar)[step] : 0.0;
}

double Scenario::wind_kw(std::size_t step) const {
    return wind ? (*wind)[step] : 0.0;
}

double Scenario::spot_price(std::size_t step) const {
    if (!price) {
        throw std::logic_error("Scenario::spot_price: tariff scenario has no spot price");
    }
    return (*price)[step];
}

double Scenario::marginal_buy_rate(std::size_t step, double bought_today_kwh) const {
    if (tariff) {
        return bought_today_kwh < tariff->tier1_limit_kwh_per_day ? tariff->tier1_rate
                                                                  : tariff->tier2_rate;
    }
    return spot_price(step);
}

double Scenario::sell_rate(std::size_t step) const {
    // Tariff sites are remunerated flat at the tier-1 rate.
    if (tariff) return tariff->tier1_rate;
    return spot_price(step);
}

double Scenario::buy_cost(std::size_t step, double bought_today_kwh,
                          double import_kwh) const {
    if (tariff) {
        return tariff->cost(bought_today_kwh + import_kwh) -
               tariff->cost(bought_today_kwh);
    }
    return spot_price(step) * import_kwh;
}

void Scenario::validate() const {
    config.validate();
    if (loads.size() != 1 && loads.size() != 3) {
        throw std::invalid_argument("Scenario: expected 1 or 3 load series");
    }
    const TimeSeries& ref = loads[0];
    auto check = [&](const TimeSeries& ts, const char* name) {
        if (!ref.same_clock(ts)) {
            throw std::invalid_argument(std::string("Scenario: ") + name +
                                        " not aligned with load");
        }
    };
    for (const auto& l : loads) check(l, "load");
    if (solar) check(*solar, "solar");
    if (wind) check(*wind, "wind");
    if (price) check(*price, "price");
    for (const auto& [name, ts] : weather) check(ts, name.c_str());
    if (price.has_value() == tariff.has_value()) {
        throw std::invalid_argument("Scenario: exactly one of price/tariff required");
    }
    if (tariff) tariff->validate();
    if (ref.resolution_s() != config.step_seconds) {
        throw std::invalid_argument("Scenario: series resolution != config step_seconds");
    }
    if (86400 % config.step_seconds != 0) {
        throw std::invalid_argument("Scenario: step_seconds must divide one day");
    }
}

void Scenario::save(const std::string& dir) const {
    validate();
    fs::create_directories(dir);
    const fs::path root(dir);

    std::ofstream ini(root / "scenario.ini");
    if (!ini) throw std::runtime_error("cannot write scenario.ini in " + dir);
    ini << "battery_capacity_kwh = " << fmt_double(config.battery_capacity_kwh) << '\n'
        << "battery_max_charge_kw = " << fmt_double(config.battery_max_charge_kw) << '\n'
        << "battery_max_discharge_kw = " << fmt_double(config.battery_max_discharge_kw)
        << '\n'
        << "pv_peak_kw = " << fmt_double(config.pv_peak_kw) << '\n'
        << "wind_peak_kw = " << fmt_double(config.wind_peak_kw) << '\n'
        << "fuel_cell_max_kw = " << fmt_double(config.fuel_cell_max_kw) << '\n'
        << "generator_max_kw = " << fmt_double(config.generator_max_kw) << '\n'
        << "initial_soc_fraction = " << fmt_double(config.initial_soc_fraction) << '\n'
        << "step_seconds = " << config.step_seconds << '\n'
        << "n_loads = " << loads.size() << '\n'
        << "has_solar = " << (solar ? 1 : 0) << '\n'
        << "has_wind = " << (wind ? 1 : 0) << '\n'
        << "price_mode = " << (tariff ? "tariff" : "spot") << '\n';
    if (tariff) {
        ini << "tier1_limit_kwh_per_day = " << fmt_double(tariff->tier1_limit_kwh_per_day)
            << '\n'
            << "tier1_rate = " << fmt_double(tariff->tier1_rate) << '\n'
            << "tier2_rate = " << fmt_double(tariff->tier2_rate) << '\n';
    }
    if (!weather.empty()) {
        ini << "weather =";
        bool first = true;
        for (const auto& [name, ts] : weather) {
            ini << (first ? " " : ",") << name;
            first = false;
        }
        ini << '\n';
        for (const auto& [name, ts] : weather) {
            ini << "weather_unit_" << name << " = " << unit_name(ts.unit()) << '\n';
        }
    }

    if (loads.size() == 1) {
        write_series_csv(root / "load.csv", loads[0]);
    } else {
        for (std::size_t i = 0; i < 3; ++i) {
            write_series_csv(root / (std::string(kLoadNames[i]) + ".csv"), loads[i]);
        }
    }
    if (solar) write_series_csv(root / "solar.csv", *solar);
    if (wind) write_series_csv(root / "wind.csv", *wind);
    if (price) write_series_csv(root / "price.csv", *price);
    for (const auto& [name, ts] : weather) {
        write_series_csv(root / ("weather_" + name + ".csv"), ts);
    }
}

Scenario Scenario::load(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream ini(root / "scenario.ini");
    if (!ini) throw std::runtime_error("cannot read scenario.ini in " + dir);

    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(ini, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("bad line in scenario.ini: " + line);
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    auto need = [&](const std::string& key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) {
            throw std::runtime_error("scenario.ini missing key: " + key);
        }
        return it->second;
    };

    Scenario sc;
    sc.config.battery_capacity_kwh = std::stod(need("battery_capacity_kwh"));
    sc.config.battery_max_charge_kw = std::stod(need("battery_max_charge_kw"));
    sc.config.battery_max_discharge_kw = std::stod(need("battery_max_discharge_kw"));
    sc.config.pv_peak_kw = std::stod(need("pv_peak_kw"));
    sc.config.wind_peak_kw = std::stod(need("wind_peak_kw"));
    sc.config.fuel_cell_max_kw = std::stod(need("fuel_cell_max_kw"));
    sc.config.generator_max_kw = std::stod(need("generator_max_kw"));
    sc.config.initial_soc_fraction = std::stod(need("initial_soc_fraction"));
    sc.config.step_seconds = std::stoll(need("step_seconds"));
    const std::int64_t res = sc.config.step_seconds;

    const int n_loads = std::stoi(need("n_loads"));
    if (n_loads == 1) {
        sc.loads.push_back(read_series_csv(root / "load.csv", Unit::kW, res));
    } else if (n_loads == 3) {
        for (std::size_t i = 0; i < 3; ++i) {
            sc.loads.push_back(read_series_csv(
                root / (std::string(kLoadNames[i]) + ".csv"), Unit::kW, res));
        }
    } else {
        throw std::runtime_error("scenario.ini: n_loads must be 1 or 3");
    }
    if (std::stoi(need("has_solar")) != 0) {
        sc.solar = read_series_csv(root / "solar.csv", Unit::kW, res);
    }
    if (std::stoi(need("has_wind")) != 0) {
        sc.wind = read_series_csv(root / "wind.csv", Unit::kW, res);
    }
    if (need("price_mode") == "tariff") {
        TieredTariff t;
        t.tier1_limit_kwh_per_day = std::stod(need("tier1_limit_kwh_per_day"));
        t.tier1_rate = std::stod(need("tier1_rate"));
        t.tier2_rate = std::stod(need("tier2_rate"));
        sc.tariff = t;
    } else {
        sc.price = read_series_csv(root / "price.csv", Unit::CadPerKwh, res);
    }
    if (auto it = kv.find("weather"); it != kv.end()) {
        std::stringstream names(it->second);
        std::string name;
        while (std::getline(names, name, ',')) {
            name = trim(name);
            if (name.empty()) continue;
            const Unit u = unit_from_name(need("weather_unit_" + name));
            sc.weather.emplace(name, read_series_csv(root / ("weather_" + name + ".csv"),
                                                     u, res));
        }
    }
    sc.validate();
    return sc;
}

}  // namespace mg
