#ifndef MG_ENV_HPP
#define MG_ENV_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "mg/rng.hpp"
#include "mg/scenario.hpp"
#include "mg/state.hpp"

namespace mg {

struct EpisodeFinished : std::runtime_error {
    EpisodeFinished() : std::runtime_error("episode already finished") {}
};

struct EmptyTrace : std::runtime_error {
    EmptyTrace() : std::runtime_error("episode trace is empty") {}
};

/// The seven discrete actions. Each one fixes the battery mode, the grid
/// mode, and how surplus/deficit left by the renewables is resolved:
///   0 connected: charge surplus, buy deficit
///   1 connected: discharge for deficit, buy remainder
///   2 connected: sell surplus, battery idle, buy deficit
///   3 islanded:  discharge for deficit, curtail surplus
///   4 islanded:  charge surplus, deficit goes unmet
///   5 connected: charge battery from grid (and surplus), buy deficit
///   6 connected: discharge at full rate, sell surplus
struct DiscreteAction {
    int id = 0;

    bool islanded() const { return id == 3 || id == 4; }
    bool charges() const { return id == 0 || id == 4 || id == 5; }
    bool discharges() const { return id == 1 || id == 3 || id == 6; }
};

inline constexpr int kNumDiscreteActions = 7;

/// Setpoints in [-1,1] / [0,1]; clamped before dynamics.
struct ContinuousAction {
    double battery = 0.0;    // + charge, - discharge, fraction of max rate
    double fuel_cell = 0.0;  // fraction of fuel_cell_max_kw
    double generator = 0.0;  // fraction of generator_max_kw
    double island = 0.0;     // islanded iff >= 0.5 after clamping

    ContinuousAction clamped() const;
};

/// Reward weights. The unmet-load penalty dominates every other weight by
/// construction; w_buy and w_sell multiply the price-valued transaction
/// cost/revenue rather than raw kWh.
struct RewardWeights {
    double w_unmet = -100.0;
    double w_grid_connected = -1.0;
    double w_import = -0.1;
    double w_buy = 1.0;
    double w_sell = 1.0;
    double w_export = 0.5;
    double w_renewable_ratio = 1.0;
    double w_soc_mid = 0.2;

    void validate() const;
};

/// r = w_export*export + w_sell*sell_revenue - w_buy*buy_cost
///   + w_renewable_ratio*(renewable_used/total_supplied)
///   + w_soc_mid*(1 - 2*|soc/B - 0.5|)
///   + w_grid_connected*connected + w_import*import + w_unmet*unmet
/// The renewable ratio is 0 when nothing was supplied. `bought_today_kwh`
/// is the cumulative purchase before this step (tiered pricing).
double reward(const MicrogridState& state, const RewardWeights& weights,
              const Scenario& scenario, double bought_today_kwh);

using Observation = std::vector<double>;

/// Next-value estimates injected into observations. The default is
/// persistence: the forecast for t+ahead is the value at t.
class ObsForecaster {
public:
    virtual ~ObsForecaster() = default;
    virtual double forecast(const TimeSeries& series, std::size_t t,
                            std::size_t steps_ahead) const;
};

enum class ObsLayout {
    rye,   // [solar, wind, load, price, hour_sin, hour_cos, fc_solar, fc_wind, soc]
    lac,   // [solar, load, soc, price, fc_solar, hour_sin, hour_cos]
    mesa,  // 32-dim: 9 current + 5 signals x 4 forecast steps + price + fuel + gen
};

std::size_t obs_dim(ObsLayout layout);

struct StepResult {
    Observation observation;
    double reward = 0.0;
    bool done = false;
};

/// Episodic simulation over one scenario. Deterministic given the scenario
/// and the action sequence; the reset RNG is reserved for randomized starts
/// and is not consumed by the default dynamics.
class Env {
public:
    Env(Scenario scenario, RewardWeights weights, ObsLayout layout,
        const ObsForecaster* forecaster = nullptr);

    Observation reset(Rng& rng);
    StepResult step_discrete(int action_id);
    StepResult step_continuous(const ContinuousAction& action);

    const MicrogridState& state() const { return state_; }
    const Scenario& scenario() const { return scenario_; }
    const std::vector<MicrogridState>& trace() const { return trace_; }
    const std::vector<double>& rewards() const { return rewards_; }
    const std::vector<std::string>& action_labels() const { return action_labels_; }
    std::size_t horizon() const { return scenario_.n_steps(); }
    std::size_t obs_dim() const { return mg::obs_dim(layout_); }
    bool done() const { return done_; }

private:
    StepFlows resolve_discrete(int action_id, double load_kwh, double renew_kwh,
                               double& soc, bool& islanded) const;
    StepFlows resolve_continuous(const ContinuousAction& action, double load_kwh,
                                 double renew_kwh, double& soc, bool& islanded) const;
    StepResult finish_step(StepFlows flows, bool islanded, const std::string& label);
    Observation observe(std::size_t t) const;

    Scenario scenario_;
    RewardWeights weights_;
    ObsLayout layout_;
    const ObsForecaster* forecaster_;
    ObsForecaster default_forecaster_;

    MicrogridState state_;
    bool done_ = true;
    double bought_today_kwh_ = 0.0;
    std::vector<MicrogridState> trace_;
    std::vector<double> rewards_;
    std::vector<std::string> action_labels_;

    // Normalization constants frozen at construction.
    double max_solar_ = 1.0;
    double max_wind_ = 1.0;
    double max_load_ = 1.0;
    double max_price_ = 1.0;
};

struct EpisodeMetrics {
    double cost_cad = 0.0;
    double island_fraction = 0.0;
    double grid_load_fraction = 0.0;
    double unmet_fraction = 0.0;
};

/// Aggregates a complete trace. Cost uses the scenario's pricing (tiered
/// daily cumulative or spot) minus sell revenue.
EpisodeMetrics episode_metrics(const std::vector<MicrogridState>& trace,
                               const Scenario& scenario);

/// One CSV row per step: flows, SOC, islanded flag, action label, reward.
void write_trace_csv(const std::string& path,
                     const std::vector<MicrogridState>& trace,
                     const std::vector<std::string>& action_labels,
                     const std::vector<double>& rewards,
                     const Scenario& scenario);

}  // namespace mg

#endif  // MG_ENV_HPP
