#ifndef MG_STATE_HPP
#define MG_STATE_HPP

#include <cstdint>

namespace mg {

/// Resolved energy flows of one simulation step, all in kWh per step.
struct StepFlows {
    double renewable_used = 0.0;
    double battery_charge = 0.0;
    double battery_discharge = 0.0;
    double grid_import = 0.0;
    double grid_export = 0.0;
    double fuel_cell_kwh = 0.0;
    double generator_kwh = 0.0;
    double unmet_load = 0.0;
    double curtailed = 0.0;

    /// Supply-side minus demand-side residual against the load actually
    /// served. Zero (to 1e-9) for every validly constructed state:
    ///   renewable_used + discharge + import + fuel + generator
    ///     = load - unmet + charge + export
    double balance_residual(double load_kwh) const {
        return (renewable_used + battery_discharge + grid_import +
                fuel_cell_kwh + generator_kwh) -
               (load_kwh - unmet_load + battery_charge + grid_export);
    }
};

/// Physical state of the microgrid after a step has been resolved.
struct MicrogridState {
    std::int64_t step_index = 0;
    double soc_kwh = 0.0;
    bool islanded = false;
    StepFlows last_flows;
};

}  // namespace mg

#endif  // MG_STATE_HPP
