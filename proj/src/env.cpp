#include "mg/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mg/clock.hpp"

namespace mg {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::int64_t day_index(std::int64_t epoch) {
    return epoch >= 0 ? epoch / 86400 : (epoch - 86399) / 86400;
}

double norm_or_one(double max_value) { return max_value > 0.0 ? max_value : 1.0; }

}  // namespace

ContinuousAction ContinuousAction::clamped() const {
    ContinuousAction a;
    a.battery = std::clamp(battery, -1.0, 1.0);
    a.fuel_cell = std::clamp(fuel_cell, 0.0, 1.0);
    a.generator = std::clamp(generator, 0.0, 1.0);
    a.island = std::clamp(island, 0.0, 1.0);
    return a;
}

void RewardWeights::validate() const {
    if (!(w_unmet < 0.0)) {
        throw std::invalid_argument("RewardWeights: w_unmet must be negative");
    }
    const double dominant = std::abs(w_unmet);
    for (double w : {w_grid_connected, w_import, w_buy, w_sell, w_export,
                     w_renewable_ratio, w_soc_mid}) {
        if (!(std::abs(w) < dominant)) {
            throw std::invalid_argument(
                "RewardWeights: |w_unmet| must dominate every other weight");
        }
    }
}

double reward(const MicrogridState& state, const RewardWeights& weights,
              const Scenario& scenario, double bought_today_kwh) {
    const StepFlows& f = state.last_flows;
    const std::size_t step =
        state.step_index > 0 ? static_cast<std::size_t>(state.step_index - 1) : 0;

    const double buy_cost = scenario.buy_cost(step, bought_today_kwh, f.grid_import);
    const double sell_revenue = scenario.sell_rate(step) * f.grid_export;

    const double total_supplied = f.renewable_used + f.battery_discharge +
                                  f.grid_import + f.fuel_cell_kwh + f.generator_kwh;
    const double renewable_ratio =
        total_supplied > 0.0 ? f.renewable_used / total_supplied : 0.0;

    const double capacity = scenario.config.battery_capacity_kwh;
    const double soc_frac = capacity > 0.0 ? state.soc_kwh / capacity : 0.5;
    const double soc_mid = 1.0 - 2.0 * std::abs(soc_frac - 0.5);

    return weights.w_export * f.grid_export + weights.w_sell * sell_revenue -
           weights.w_buy * buy_cost + weights.w_renewable_ratio * renewable_ratio +
           weights.w_soc_mid * soc_mid +
           weights.w_grid_connected * (state.islanded ? 0.0 : 1.0) +
           weights.w_import * f.grid_import + weights.w_unmet * f.unmet_load;
}

double ObsForecaster::forecast(const TimeSeries& series, std::size_t t,
                               std::size_t steps_ahead) const {
    (void)steps_ahead;  // persistence: tomorrow looks like right now
    return series[std::min(t, series.size() - 1)];
}

std::size_t obs_dim(ObsLayout layout) {
    switch (layout) {
        case ObsLayout::rye: return 9;
        case ObsLayout::lac: return 7;
        case ObsLayout::mesa: return 32;
    }
    throw std::logic_error("obs_dim: unknown layout");
}

Env::Env(Scenario scenario, RewardWeights weights, ObsLayout layout,
         const ObsForecaster* forecaster)
    : scenario_(std::move(scenario)), weights_(weights), layout_(layout),
      forecaster_(forecaster ? forecaster : &default_forecaster_) {
    scenario_.validate();
    weights_.validate();
    if (layout_ == ObsLayout::mesa && scenario_.loads.size() != 3) {
        throw std::invalid_argument("Env: mesa layout needs three load feeders");
    }
    if (scenario_.solar) max_solar_ = norm_or_one(scenario_.solar->max());
    if (scenario_.wind) max_wind_ = norm_or_one(scenario_.wind->max());
    double load_max = 0.0;
    for (const auto& l : scenario_.loads) load_max = std::max(load_max, l.max());
    max_load_ = norm_or_one(load_max);
    max_price_ = scenario_.has_tariff() ? scenario_.tariff->tier2_rate
                                        : norm_or_one(scenario_.price->max());
}

Observation Env::reset(Rng& rng) {
    (void)rng;  // reserved for randomized starts
    state_ = MicrogridState{};
    state_.soc_kwh = scenario_.config.initial_soc_kwh();
    state_.islanded = false;
    done_ = scenario_.n_steps() == 0;
    bought_today_kwh_ = 0.0;
    trace_.clear();
    rewards_.clear();
    action_labels_.clear();
    return observe(0);
}

StepFlows Env::resolve_discrete(int action_id, double load_kwh, double renew_kwh,
                                double& soc, bool& islanded) const {
    const MicrogridConfig& cfg = scenario_.config;
    const double h = cfg.step_hours();
    const double charge_cap = cfg.battery_max_charge_kw * h;
    const double discharge_cap = cfg.battery_max_discharge_kw * h;
    const double headroom = cfg.battery_capacity_kwh - soc;
    const double surplus = std::max(0.0, renew_kwh - load_kwh);
    const double deficit = std::max(0.0, load_kwh - renew_kwh);
    const double renew_to_load = std::min(renew_kwh, load_kwh);

    StepFlows f;
    islanded = DiscreteAction{action_id}.islanded();
    switch (action_id) {
        case 0: {  // connected: charge surplus, buy deficit
            f.battery_charge = std::min({surplus, charge_cap, headroom});
            f.curtailed = surplus - f.battery_charge;
            f.grid_import = deficit;
            f.renewable_used = renew_to_load + f.battery_charge;
            break;
        }
        case 1: {  // connected: discharge for deficit, buy remainder
            f.battery_discharge = std::min({deficit, discharge_cap, soc});
            f.grid_import = deficit - f.battery_discharge;
            f.curtailed = surplus;
            f.renewable_used = renew_to_load;
            break;
        }
        case 2: {  // connected: sell surplus, battery idle
            f.grid_export = surplus;
            f.grid_import = deficit;
            f.renewable_used = renew_to_load + surplus;
            break;
        }
        case 3: {  // islanded: discharge for deficit, curtail surplus
            f.battery_discharge = std::min({deficit, discharge_cap, soc});
            f.unmet_load = deficit - f.battery_discharge;
            f.curtailed = surplus;
            f.renewable_used = renew_to_load;
            break;
        }
        case 4: {  // islanded: charge surplus, deficit goes unmet
            f.battery_charge = std::min({surplus, charge_cap, headroom});
            f.curtailed = surplus - f.battery_charge;
            f.unmet_load = deficit;
            f.renewable_used = renew_to_load + f.battery_charge;
            break;
        }
        case 5: {  // connected: charge battery from grid and surplus
            f.battery_charge = std::min(charge_cap, headroom);
            const double from_surplus = std::min(surplus, f.battery_charge);
            f.curtailed = surplus - from_surplus;
            f.grid_import = deficit + (f.battery_charge - from_surplus);
            f.renewable_used = renew_to_load + from_surplus;
            break;
        }
        case 6: {  // connected: discharge at full rate, net out via grid
            f.battery_discharge = std::min(discharge_cap, soc);
            const double net = load_kwh - renew_kwh - f.battery_discharge;
            f.grid_import = std::max(0.0, net);
            f.grid_export = std::max(0.0, -net);
            f.renewable_used = renew_kwh;
            break;
        }
        default:
            throw std::out_of_range("discrete action id must be 0..6");
    }
    soc += f.battery_charge - f.battery_discharge;
    return f;
}

StepFlows Env::resolve_continuous(const ContinuousAction& action, double load_kwh,
                                  double renew_kwh, double& soc,
                                  bool& islanded) const {
    const MicrogridConfig& cfg = scenario_.config;
    const double h = cfg.step_hours();
    const ContinuousAction a = action.clamped();
    islanded = a.island >= 0.5;

    StepFlows f;
    f.battery_charge = std::min(std::max(0.0, a.battery) * cfg.battery_max_charge_kw * h,
                                cfg.battery_capacity_kwh - soc);
    f.battery_discharge =
        std::min(std::max(0.0, -a.battery) * cfg.battery_max_discharge_kw * h, soc);
    f.fuel_cell_kwh = a.fuel_cell * cfg.fuel_cell_max_kw * h;
    f.generator_kwh = a.generator * cfg.generator_max_kw * h;
    f.renewable_used = renew_kwh;

    const double supply =
        renew_kwh + f.battery_discharge + f.fuel_cell_kwh + f.generator_kwh;
    const double demand = load_kwh + f.battery_charge;
    double net = demand - supply;
    if (net >= 0.0) {
        if (islanded) {
            f.unmet_load = net;
        } else {
            f.grid_import = net;
        }
    } else if (!islanded) {
        f.grid_export = -net;
    } else {
        // Islanded surplus: curtail renewables first, then back off the
        // dispatchable units, discharge last.
        double excess = -net;
        const double cut_renew = std::min(f.renewable_used, excess);
        f.renewable_used -= cut_renew;
        f.curtailed = cut_renew;
        excess -= cut_renew;
        const double cut_gen = std::min(f.generator_kwh, excess);
        f.generator_kwh -= cut_gen;
        excess -= cut_gen;
        const double cut_fuel = std::min(f.fuel_cell_kwh, excess);
        f.fuel_cell_kwh -= cut_fuel;
        excess -= cut_fuel;
        f.battery_discharge -= std::min(f.battery_discharge, excess);
    }
    soc += f.battery_charge - f.battery_discharge;
    return f;
}

StepResult Env::finish_step(StepFlows flows, bool islanded, const std::string& label) {
    const std::size_t t = static_cast<std::size_t>(state_.step_index);
    const double load_kwh =
        scenario_.total_load_kw(t) * scenario_.config.step_hours();
    if (std::abs(flows.balance_residual(load_kwh)) > 1e-9) {
        throw std::logic_error("Env: step violated the energy balance");
    }

    state_.step_index = static_cast<std::int64_t>(t) + 1;
    state_.islanded = islanded;
    state_.last_flows = flows;

    const double r = reward(state_, weights_, scenario_, bought_today_kwh_);
    bought_today_kwh_ += flows.grid_import;

    trace_.push_back(state_);
    rewards_.push_back(r);
    action_labels_.push_back(label);
    done_ = t + 1 == scenario_.n_steps();

    // Day rollover applies to the next step's purchases.
    if (!done_) {
        const std::int64_t ended = day_index(scenario_.loads[0].epoch_at(t));
        const std::int64_t next = day_index(scenario_.loads[0].epoch_at(t + 1));
        if (next != ended) bought_today_kwh_ = 0.0;
    }
    return {observe(std::min(t + 1, scenario_.n_steps() - 1)), r, done_};
}

StepResult Env::step_discrete(int action_id) {
    if (done_) throw EpisodeFinished();
    const std::size_t t = static_cast<std::size_t>(state_.step_index);
    const double h = scenario_.config.step_hours();
    double soc = state_.soc_kwh;
    bool islanded = false;
    StepFlows flows = resolve_discrete(action_id, scenario_.total_load_kw(t) * h,
                                       scenario_.renewable_kw(t) * h, soc, islanded);
    state_.soc_kwh = soc;
    return finish_step(flows, islanded, std::to_string(action_id));
}

StepResult Env::step_continuous(const ContinuousAction& action) {
    if (done_) throw EpisodeFinished();
    const std::size_t t = static_cast<std::size_t>(state_.step_index);
    const double h = scenario_.config.step_hours();
    double soc = state_.soc_kwh;
    bool islanded = false;
    StepFlows flows = resolve_continuous(action, scenario_.total_load_kw(t) * h,
                                         scenario_.renewable_kw(t) * h, soc, islanded);
    state_.soc_kwh = soc;
    const ContinuousAction a = action.clamped();
    char label[80];
    std::snprintf(label, sizeof(label), "b%.3f|f%.3f|g%.3f|i%.0f", a.battery,
                  a.fuel_cell, a.generator, a.island >= 0.5 ? 1.0 : 0.0);
    return finish_step(flows, islanded, label);
}

Observation Env::observe(std::size_t t) const {
    const std::int64_t epoch = scenario_.loads[0].epoch_at(t);
    const double hour_angle = kTwoPi * hour_of_day(epoch) / 24.0;
    const double hour_sin = 0.5 * (std::sin(hour_angle) + 1.0);
    const double hour_cos = 0.5 * (std::cos(hour_angle) + 1.0);
    const double capacity = scenario_.config.battery_capacity_kwh;
    const double soc = capacity > 0.0 ? state_.soc_kwh / capacity : 0.0;
    const double price =
        scenario_.marginal_buy_rate(t, bought_today_kwh_) / max_price_;

    auto fc = [&](const std::optional<TimeSeries>& s, std::size_t ahead, double norm) {
        return s ? forecaster_->forecast(*s, t, ahead) / norm : 0.0;
    };
    const double solar = scenario_.solar_kw(t) / max_solar_;
    const double wind = scenario_.wind_kw(t) / max_wind_;

    Observation obs;
    switch (layout_) {
        case ObsLayout::rye:
            obs = {solar,
                   wind,
                   scenario_.total_load_kw(t) / max_load_,
                   price,
                   hour_sin,
                   hour_cos,
                   fc(scenario_.solar, 1, max_solar_),
                   fc(scenario_.wind, 1, max_wind_),
                   soc};
            break;
        case ObsLayout::lac:
            obs = {solar,
                   scenario_.total_load_kw(t) / max_load_,
                   soc,
                   price,
                   fc(scenario_.solar, 1, max_solar_),
                   hour_sin,
                   hour_cos};
            break;
        case ObsLayout::mesa: {
            const MicrogridConfig& cfg = scenario_.config;
            const double h = cfg.step_hours();
            const double fuel_frac =
                cfg.fuel_cell_max_kw > 0.0
                    ? state_.last_flows.fuel_cell_kwh / (cfg.fuel_cell_max_kw * h)
                    : 0.0;
            const double gen_frac =
                cfg.generator_max_kw > 0.0
                    ? state_.last_flows.generator_kwh / (cfg.generator_max_kw * h)
                    : 0.0;
            obs = {solar,
                   wind,
                   scenario_.loads[0][t] / max_load_,
                   scenario_.loads[1][t] / max_load_,
                   scenario_.loads[2][t] / max_load_,
                   soc,
                   state_.islanded ? 0.0 : 1.0,
                   hour_sin,
                   hour_cos};
            for (std::size_t ahead = 1; ahead <= 4; ++ahead) {
                obs.push_back(fc(scenario_.solar, ahead, max_solar_));
                obs.push_back(fc(scenario_.wind, ahead, max_wind_));
                for (int feeder = 0; feeder < 3; ++feeder) {
                    obs.push_back(forecaster_->forecast(scenario_.loads[feeder], t,
                                                        ahead) /
                                  max_load_);
                }
            }
            obs.push_back(price);
            obs.push_back(fuel_frac);
            obs.push_back(gen_frac);
            break;
        }
    }
    for (double v : obs) {
        if (!std::isfinite(v)) throw std::logic_error("Env: non-finite observation");
    }
    return obs;
}

EpisodeMetrics episode_metrics(const std::vector<MicrogridState>& trace,
                               const Scenario& scenario) {
    if (trace.empty()) throw EmptyTrace();
    const double h = scenario.config.step_hours();

    EpisodeMetrics m;
    double total_load = 0.0;
    double total_import = 0.0;
    double total_unmet = 0.0;
    double bought_today = 0.0;
    std::int64_t current_day = day_index(scenario.loads[0].epoch_at(0));
    std::size_t islanded_steps = 0;

    for (const MicrogridState& s : trace) {
        const std::size_t t =
            s.step_index > 0 ? static_cast<std::size_t>(s.step_index - 1) : 0;
        const std::int64_t day = day_index(scenario.loads[0].epoch_at(t));
        if (day != current_day) {
            current_day = day;
            bought_today = 0.0;
        }
        m.cost_cad += scenario.buy_cost(t, bought_today, s.last_flows.grid_import);
        m.cost_cad -= scenario.sell_rate(t) * s.last_flows.grid_export;
        bought_today += s.last_flows.grid_import;

        total_load += scenario.total_load_kw(t) * h;
        total_import += s.last_flows.grid_import;
        total_unmet += s.last_flows.unmet_load;
        if (s.islanded) ++islanded_steps;
    }
    m.island_fraction = static_cast<double>(islanded_steps) /
                        static_cast<double>(trace.size());
    m.grid_load_fraction = total_load > 0.0 ? total_import / total_load : 0.0;
    m.unmet_fraction = total_load > 0.0 ? total_unmet / total_load : 0.0;
    return m;
}

void write_trace_csv(const std::string& path,
                     const std::vector<MicrogridState>& trace,
                     const std::vector<std::string>& action_labels,
                     const std::vector<double>& rewards,
                     const Scenario& scenario) {
    if (trace.size() != action_labels.size() || trace.size() != rewards.size()) {
        throw std::invalid_argument("write_trace_csv: length mismatch");
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace csv: " + path);
    out << "step,epoch,load_kwh,soc_kwh,islanded,renewable_used,battery_charge,"
           "battery_discharge,grid_import,grid_export,fuel_cell_kwh,generator_kwh,"
           "unmet_load,curtailed,action,reward\n";
    const double h = scenario.config.step_hours();
    char buf[512];
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const MicrogridState& s = trace[k];
        const std::size_t t =
            s.step_index > 0 ? static_cast<std::size_t>(s.step_index - 1) : 0;
        const StepFlows& f = s.last_flows;
        std::snprintf(buf, sizeof(buf),
                      "%zu,%lld,%.10g,%.10g,%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,"
                      "%.10g,%.10g,%.10g",
                      t, static_cast<long long>(scenario.loads[0].epoch_at(t)),
                      scenario.total_load_kw(t) * h, s.soc_kwh, s.islanded ? 1 : 0,
                      f.renewable_used, f.battery_charge, f.battery_discharge,
                      f.grid_import, f.grid_export, f.fuel_cell_kwh, f.generator_kwh,
                      f.unmet_load, f.curtailed);
        out << buf << ',' << action_labels[k] << ',';
        std::snprintf(buf, sizeof(buf), "%.10g", rewards[k]);
        out << buf << '\n';
    }
}

}  // namespace mg
