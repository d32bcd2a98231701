#ifndef MG_DISPATCH_HPP
#define MG_DISPATCH_HPP

#include <string>
#include <vector>

#include "mg/env.hpp"
#include "mg/milp.hpp"
#include "mg/scenario.hpp"
#include "mg/state.hpp"

namespace mg {

enum class RuleVariant { simple, mesa };

/// Fully resolved flows for one step plus the islanding choice.
struct DispatchDecision {
    StepFlows flows;
    bool islanded = false;
};

/// Greedy price-agnostic policy. Surplus charges the battery and sells the
/// remainder; deficit discharges then buys (simple), or runs generator,
/// fuel cell, battery, grid in that order (mesa). Never leaves load unmet
/// while the grid is available.
DispatchDecision rule_based_step(const MicrogridState& state, const Scenario& scenario,
                                 RuleVariant variant);

struct BaselineRun {
    std::vector<MicrogridState> trace;
    std::vector<std::string> action_labels;
    EpisodeMetrics metrics;
};

BaselineRun rule_based_run(const Scenario& scenario, RuleVariant variant);

/// Extracts the per-step window data the optimizer needs. Corrected mode
/// uses net load (gross minus renewables); as_printed keeps gross load.
MilpWindow make_milp_window(const Scenario& scenario, std::size_t start,
                            std::size_t length, MilpMode mode, double initial_soc_kwh);

struct RecedingResult {
    std::vector<MicrogridState> trace;
    std::vector<std::string> action_labels;
    EpisodeMetrics metrics;
    std::vector<SolveStatus> window_status;
    double total_objective = 0.0;
};

/// Solves consecutive windows, realizes each solution as physical flows,
/// and carries the terminal SOC into the next window. The first window
/// starts from half capacity in as_printed mode (the formulation pins it)
/// and from the configured initial SOC in corrected mode.
RecedingResult receding_horizon_run(const Scenario& scenario, std::size_t window_steps,
                                    const MilpBuildOptions& build_options,
                                    const SolveOptions& solve_options = {});

}  // namespace mg

#endif  // MG_DISPATCH_HPP
