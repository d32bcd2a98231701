// Shared by the unit tests and the acceptance harness.

#ifndef TESTS_MILP_ORACLE_HPP
#define TESTS_MILP_ORACLE_HPP

#include <algorithm>
#include <vector>

#include "mg/milp.hpp"
#include "mg/rng.hpp"

namespace mgtest {

/// Exhaustive reference: one action per step, fuel/generator output on a
/// 0.5 kWh grid, the active amount forced by the balance row. Exact for
/// windows whose data sit on the same grid (every optimal vertex does).
class ExhaustiveBest {
public:
    ExhaustiveBest(const mg::MilpWindow& w, mg::MilpMode mode, mg::ObjectiveMode om)
        : w_(w), mode_(mode), om_(om) {}

    double run() {
        best_ = -mg::kInf;
        const double start =
            mode_ == mg::MilpMode::corrected ? w_.initial_soc_kwh : 0.0;
        dfs(0, start, 0.0);
        return best_;
    }

private:
    static std::vector<double> grid(const std::vector<double>& caps, std::size_t j) {
        std::vector<double> g{0.0};
        if (!caps.empty()) {
            for (double v = 0.5; v <= caps[j] + 1e-12; v += 0.5) g.push_back(v);
        }
        return g;
    }

    void dfs(std::size_t j, double soc, double obj) {
        if (j == w_.load_kwh.size()) {
            best_ = std::max(best_, obj);
            return;
        }
        const double cap = w_.battery_capacity_kwh;
        for (const double z2 : grid(w_.fuel_cap_kwh, j)) {
            for (const double z3 : grid(w_.gen_cap_kwh, j)) {
                const double resid = w_.load_kwh[j] - z2 - z3;
                const double bonus =
                    om_ == mg::ObjectiveMode::verbatim ? 0.1 * (z2 + z3) : 0.0;
                for (int a = 1; a <= 4; ++a) {
                    const bool negates =
                        mode_ == mg::MilpMode::corrected && (a == 1 || a == 3);
                    double q = negates ? -resid : resid;
                    if (q < -1e-9) continue;
                    q = std::max(q, 0.0);
                    if ((a == 3 || a == 4) && q > cap + 1e-9) continue;
                    double soc2;
                    if (mode_ == mg::MilpMode::as_printed && j == 0) {
                        soc2 = w_.initial_soc_kwh;  // pinned, step-one q has no effect
                    } else {
                        soc2 = soc + (a == 3 ? q : 0.0) - (a == 4 ? q : 0.0);
                    }
                    if (soc2 < -1e-9 || soc2 > cap + 1e-9) continue;
                    const double cash = a == 1   ? w_.price[j] * q
                                        : a == 2 ? -w_.price[j] * q
                                                 : 0.0;
                    dfs(j + 1, soc2, obj + bonus + cash);
                }
            }
        }
    }

    const mg::MilpWindow& w_;
    mg::MilpMode mode_;
    mg::ObjectiveMode om_;
    double best_ = -mg::kInf;
};

/// Random window with all energies on the 0.5 kWh grid the oracle assumes.
inline mg::MilpWindow random_window(mg::Rng& rng, std::size_t horizon,
                                    mg::MilpMode mode, bool with_units) {
    mg::MilpWindow w;
    const std::uint64_t half_steps = 1 + rng.randint(20);
    w.battery_capacity_kwh = 0.5 * static_cast<double>(half_steps);  // 0.5 .. 10
    w.initial_soc_kwh = 0.5 * static_cast<double>(rng.randint(half_steps + 1));
    for (std::size_t j = 0; j < horizon; ++j) {
        const double load =
            mode == mg::MilpMode::corrected
                ? 0.5 * (static_cast<double>(rng.randint(21)) - 10.0)  // [-5, 5]
                : 0.5 * static_cast<double>(rng.randint(11));          // [0, 5]
        w.load_kwh.push_back(load);
        w.price.push_back(0.5 * static_cast<double>(1 + rng.randint(6)));
    }
    if (with_units) {
        const double fuel = 0.5 * static_cast<double>(rng.randint(3));
        const double gen = 0.5 * static_cast<double>(rng.randint(3));
        if (fuel > 0.0) w.fuel_cap_kwh.assign(horizon, fuel);
        if (gen > 0.0) w.gen_cap_kwh.assign(horizon, gen);
    }
    return w;
}

}  // namespace mgtest

#endif  // TESTS_MILP_ORACLE_HPP
