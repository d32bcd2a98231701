#include "mg/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mg {

DispatchDecision rule_based_step(const MicrogridState& state, const Scenario& scenario,
                                 RuleVariant variant) {
    const std::size_t t = static_cast<std::size_t>(state.step_index);
    if (t >= scenario.n_steps()) {
        throw std::out_of_range("rule_based_step: past the end of the scenario");
    }
    const MicrogridConfig& cfg = scenario.config;
    const double h = cfg.step_hours();
    const double load = scenario.total_load_kw(t) * h;
    const double renew = scenario.renewable_kw(t) * h;

    DispatchDecision d;
    StepFlows& f = d.flows;
    f.renewable_used = std::min(renew, load);

    const double surplus = std::max(0.0, renew - load);
    const double deficit = std::max(0.0, load - renew);
    if (surplus > 0.0) {
        const double headroom = cfg.battery_capacity_kwh - state.soc_kwh;
        f.battery_charge =
            std::min({surplus, cfg.battery_max_charge_kw * h, headroom});
        f.grid_export = surplus - f.battery_charge;
        f.renewable_used += f.battery_charge + f.grid_export;
    } else if (deficit > 0.0) {
        double rest = deficit;
        if (variant == RuleVariant::mesa) {
            f.generator_kwh = std::min(rest, cfg.generator_max_kw * h);
            rest -= f.generator_kwh;
            f.fuel_cell_kwh = std::min(rest, cfg.fuel_cell_max_kw * h);
            rest -= f.fuel_cell_kwh;
        }
        f.battery_discharge =
            std::min({rest, cfg.battery_max_discharge_kw * h, state.soc_kwh});
        rest -= f.battery_discharge;
        f.grid_import = rest;
    }
    return d;
}

BaselineRun rule_based_run(const Scenario& scenario, RuleVariant variant) {
    scenario.validate();
    BaselineRun run;
    MicrogridState st;
    st.soc_kwh = scenario.config.initial_soc_kwh();

    const std::size_t n = scenario.n_steps();
    const double h = scenario.config.step_hours();
    const std::string label =
        variant == RuleVariant::simple ? "rule_simple" : "rule_mesa";
    for (std::size_t t = 0; t < n; ++t) {
        const DispatchDecision d = rule_based_step(st, scenario, variant);
        const double load = scenario.total_load_kw(t) * h;
        if (std::abs(d.flows.balance_residual(load)) > 1e-9) {
            throw std::logic_error("rule_based_run: unbalanced step");
        }
        st.soc_kwh += d.flows.battery_charge - d.flows.battery_discharge;
        st.soc_kwh = std::clamp(st.soc_kwh, 0.0, scenario.config.battery_capacity_kwh);
        st.islanded = d.islanded;
        st.last_flows = d.flows;
        st.step_index = static_cast<std::int64_t>(t + 1);
        run.trace.push_back(st);
        run.action_labels.push_back(label);
    }
    run.metrics = episode_metrics(run.trace, scenario);
    return run;
}

MilpWindow make_milp_window(const Scenario& scenario, std::size_t start,
                            std::size_t length, MilpMode mode,
                            double initial_soc_kwh) {
    if (start + length > scenario.n_steps()) {
        throw std::out_of_range("make_milp_window: window past the end of the scenario");
    }
    const MicrogridConfig& cfg = scenario.config;
    const double h = cfg.step_hours();

    MilpWindow w;
    w.battery_capacity_kwh = cfg.battery_capacity_kwh;
    w.initial_soc_kwh = initial_soc_kwh;
    for (std::size_t j = 0; j < length; ++j) {
        const std::size_t t = start + j;
        const double gross = scenario.total_load_kw(t) * h;
        w.load_kwh.push_back(mode == MilpMode::corrected
                                 ? gross - scenario.renewable_kw(t) * h
                                 : gross);
        // Tiered scenarios are priced at the tier-1 rate: the daily
        // cumulative tariff is not expressible as a per-step linear cost.
        w.price.push_back(scenario.has_tariff() ? scenario.tariff->tier1_rate
                                                : scenario.spot_price(t));
    }
    if (cfg.fuel_cell_max_kw > 0.0) {
        w.fuel_cap_kwh.assign(length, cfg.fuel_cell_max_kw * h);
    }
    if (cfg.generator_max_kw > 0.0) {
        w.gen_cap_kwh.assign(length, cfg.generator_max_kw * h);
    }
    return w;
}

namespace {

/// Turns one step of a MILP solution into physical flows. The solution
/// satisfies the model's balance row, which in as_printed mode is not the
/// physical identity, so the residual is closed deterministically:
/// oversupply curtails renewables first, then backs off generator, fuel,
/// discharge, import; undersupply is recorded as unmet load, then backs
/// off charge and export. Tiny residuals (solver tolerance) are folded
/// into the grid exchange instead.
StepFlows realize_flows(const MilpSolution& sol, const DispatchModel& dm,
                        std::size_t j, double load_kwh, double renew_kwh) {
    auto val = [&](int col) { return std::max(0.0, sol.values[col]); };
    StepFlows f;
    f.grid_export = val(dm.q(j, 1));
    f.grid_import = val(dm.q(j, 2));
    f.battery_charge = val(dm.q(j, 3));
    f.battery_discharge = val(dm.q(j, 4));
    f.fuel_cell_kwh = val(dm.z(j, 2));
    f.generator_kwh = val(dm.z(j, 3));
    f.renewable_used = renew_kwh;

    double res = f.balance_residual(load_kwh);
    if (std::abs(res) <= 1e-6) {
        if (res > 0.0) {
            f.grid_export += res;
        } else {
            f.grid_import -= res;
        }
        return f;
    }
    if (res > 0.0) {
        const double cut = std::min(f.renewable_used, res);
        f.renewable_used -= cut;
        f.curtailed += cut;
        res -= cut;
        for (double* slot : {&f.generator_kwh, &f.fuel_cell_kwh,
                             &f.battery_discharge, &f.grid_import}) {
            const double back = std::min(*slot, res);
            *slot -= back;
            res -= back;
        }
    } else {
        double short_by = -res;
        const double unmet = std::min(load_kwh, short_by);
        f.unmet_load = unmet;
        short_by -= unmet;
        for (double* slot : {&f.battery_charge, &f.grid_export}) {
            const double back = std::min(*slot, short_by);
            *slot -= back;
            short_by -= back;
        }
        res = -short_by;
    }
    if (std::abs(res) > 1e-6) {
        throw std::logic_error("realize_flows: could not close the energy balance");
    }
    return f;
}

}  // namespace

RecedingResult receding_horizon_run(const Scenario& scenario, std::size_t window_steps,
                                    const MilpBuildOptions& build_options,
                                    const SolveOptions& solve_options) {
    scenario.validate();
    if (window_steps == 0) {
        throw std::invalid_argument("receding_horizon_run: window must be at least 1 step");
    }
    const std::size_t n = scenario.n_steps();
    const double h = scenario.config.step_hours();
    const double capacity = scenario.config.battery_capacity_kwh;

    RecedingResult out;
    // The as_printed formulation pins the first-step SOC to half capacity;
    // corrected mode starts from the configured SOC. Later windows carry
    // the terminal SOC either way.
    double soc = build_options.mode == MilpMode::as_printed
                     ? 0.5 * capacity
                     : scenario.config.initial_soc_kwh();
    for (std::size_t start = 0; start < n; start += window_steps) {
        const std::size_t len = std::min(window_steps, n - start);
        const MilpWindow window =
            make_milp_window(scenario, start, len, build_options.mode, soc);
        const DispatchModel dm = build_milp(window, build_options);
        const MilpSolution sol = solve_milp(dm.model, solve_options);
        out.window_status.push_back(sol.status);
        if (sol.values.empty()) {
            throw std::runtime_error("receding_horizon_run: window has no solution");
        }
        out.total_objective += sol.objective;

        for (std::size_t j = 0; j < len; ++j) {
            const std::size_t t = start + j;
            const double load = scenario.total_load_kw(t) * h;
            const double renew = scenario.renewable_kw(t) * h;

            MicrogridState st;
            st.last_flows = realize_flows(sol, dm, j, load, renew);
            soc = std::clamp(sol.values[dm.z(j, 1)], 0.0, capacity);
            st.soc_kwh = soc;
            st.islanded = false;
            st.step_index = static_cast<std::int64_t>(t + 1);
            out.trace.push_back(st);
            out.action_labels.push_back("milp");
        }
    }
    out.metrics = episode_metrics(out.trace, scenario);
    return out;
}

}  // namespace mg
