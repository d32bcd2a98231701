#ifndef MG_MILP_HPP
#define MG_MILP_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "mg/simplex.hpp"

namespace mg {

struct BadBigM : std::invalid_argument {
    explicit BadBigM(const std::string& what) : std::invalid_argument(what) {}
};

struct InfeasibleModel : std::runtime_error {
    InfeasibleModel() : std::runtime_error("model is infeasible") {}
};

struct UnboundedModel : std::runtime_error {
    UnboundedModel() : std::runtime_error("model is unbounded") {}
};

/// Generic mixed-integer program (maximization) shared by the builder, the
/// branch-and-bound solver, and the exporters.
struct MilpModel {
    std::string name = "model";
    std::vector<std::string> col_names;
    std::vector<double> objective;
    std::vector<double> lo;
    std::vector<double> up;
    std::vector<bool> integer;
    std::vector<std::string> row_names;
    std::vector<LinearProgram::Row> rows;

    std::size_t n_cols() const { return objective.size(); }

    int add_col(const std::string& cname, double lower, double upper, double obj,
                bool is_integer);
    void add_row(const std::string& rname, std::vector<LinTerm> terms, RowSense sense,
                 double rhs);

    LinearProgram relaxation() const;
};

/// One planning window of step-indexed data. Loads are gross demand in
/// as_printed mode and net demand (load minus renewables, possibly
/// negative) in corrected mode, both in kWh per step.
struct MilpWindow {
    std::vector<double> load_kwh;
    std::vector<double> price;
    std::vector<double> fuel_cap_kwh;  // empty means no fuel cell
    std::vector<double> gen_cap_kwh;   // empty means no generator
    double battery_capacity_kwh = 0.0;
    double initial_soc_kwh = 0.0;
};

enum class MilpMode { as_printed, corrected };
enum class ObjectiveMode { verbatim, cost_only };

struct MilpBuildOptions {
    MilpMode mode = MilpMode::as_printed;
    ObjectiveMode objective = ObjectiveMode::verbatim;
    double big_m = 0.0;  // 0 = derive as 10x the largest data bound
};

/// Columns per step j (0-based step index):
///   x1..x4 binaries (sell, buy, charge, discharge), y1..y4 intended
///   amounts, q1..q4 activated amounts, z1 SOC, z2 fuel, z3 generator.
struct DispatchModel {
    MilpModel model;
    std::size_t horizon = 0;
    MilpMode mode = MilpMode::as_printed;
    double big_m = 0.0;

    // Column index helpers; i in 1..4, step in 0..T-1.
    int x(std::size_t step, int i) const;
    int y(std::size_t step, int i) const;
    int q(std::size_t step, int i) const;
    int z(std::size_t step, int k) const;  // k in 1..3
};

DispatchModel build_milp(const MilpWindow& window, const MilpBuildOptions& options);

enum class SolveStatus { optimal, time_limit, infeasible, unbounded };

struct SolveOptions {
    double time_limit_s = 0.0;   // 0 = no wall-clock limit
    long node_limit = 2000000;   // deterministic cutoff
    double gap_tol = 1e-9;
    double int_tol = 1e-6;
};

struct MilpSolution {
    SolveStatus status = SolveStatus::infeasible;
    double objective = 0.0;
    double best_bound = 0.0;
    std::vector<double> values;
    long nodes = 0;
};

/// Branch & bound over the integer columns: best-bound node selection,
/// most-fractional branching, LP relaxations via solve_lp. Throws
/// InfeasibleModel / UnboundedModel when the root shows either.
MilpSolution solve_milp(const MilpModel& model, const SolveOptions& options = {});

}  // namespace mg

#endif  // MG_MILP_HPP
