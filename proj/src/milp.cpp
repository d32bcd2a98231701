#include "mg/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>

namespace mg {

int MilpModel::add_col(const std::string& cname, double lower, double upper,
                       double obj, bool is_integer) {
    col_names.push_back(cname);
    lo.push_back(lower);
    up.push_back(upper);
    objective.push_back(obj);
    integer.push_back(is_integer);
    return static_cast<int>(objective.size()) - 1;
}

void MilpModel::add_row(const std::string& rname, std::vector<LinTerm> terms,
                        RowSense sense, double rhs) {
    row_names.push_back(rname);
    rows.push_back(LinearProgram::Row{std::move(terms), sense, rhs});
}

LinearProgram MilpModel::relaxation() const {
    LinearProgram lp;
    lp.objective = objective;
    lp.lo = lo;
    lp.up = up;
    lp.rows = rows;
    return lp;
}

namespace {

std::string tagged(const char* stem, std::size_t step, int i) {
    return std::string(stem) + std::to_string(i) + "_" + std::to_string(step + 1);
}

}  // namespace

int DispatchModel::x(std::size_t step, int i) const {
    return static_cast<int>(step * 15) + (i - 1);
}
int DispatchModel::y(std::size_t step, int i) const {
    return static_cast<int>(step * 15) + 4 + (i - 1);
}
int DispatchModel::q(std::size_t step, int i) const {
    return static_cast<int>(step * 15) + 8 + (i - 1);
}
int DispatchModel::z(std::size_t step, int k) const {
    return static_cast<int>(step * 15) + 12 + (k - 1);
}

DispatchModel build_milp(const MilpWindow& window, const MilpBuildOptions& options) {
    const std::size_t horizon = window.load_kwh.size();
    if (horizon == 0) throw std::invalid_argument("build_milp: empty window");
    if (window.price.size() != horizon) {
        throw std::invalid_argument("build_milp: price/load length mismatch");
    }
    auto cap_at = [](const std::vector<double>& caps, std::size_t j) {
        return caps.empty() ? 0.0 : caps[j];
    };

    double largest = window.battery_capacity_kwh;
    for (std::size_t j = 0; j < horizon; ++j) {
        largest = std::max({largest, std::abs(window.load_kwh[j]),
                            cap_at(window.fuel_cap_kwh, j),
                            cap_at(window.gen_cap_kwh, j)});
    }
    const double min_m = 10.0 * largest;
    double big_m = options.big_m;
    if (big_m == 0.0) {
        big_m = min_m > 0.0 ? min_m : 10.0;
    } else if (big_m < min_m) {
        throw BadBigM("build_milp: M must be at least 10x the largest data bound");
    }

    DispatchModel dm;
    dm.horizon = horizon;
    dm.mode = options.mode;
    dm.big_m = big_m;
    MilpModel& m = dm.model;
    m.name = options.mode == MilpMode::as_printed ? "dispatch_ap" : "dispatch_co";

    const double capacity = window.battery_capacity_kwh;
    for (std::size_t j = 0; j < horizon; ++j) {
        for (int i = 1; i <= 4; ++i) {
            m.add_col(tagged("X", j, i), 0.0, 1.0, 0.0, true);
        }
        // Intended amounts; battery lanes are bounded by the capacity.
        m.add_col(tagged("Y", j, 1), 0.0, big_m, 0.0, false);
        m.add_col(tagged("Y", j, 2), 0.0, big_m, 0.0, false);
        m.add_col(tagged("Y", j, 3), 0.0, capacity, 0.0, false);
        m.add_col(tagged("Y", j, 4), 0.0, capacity, 0.0, false);
        const double price = window.price[j];
        m.add_col(tagged("Q", j, 1), 0.0, kInf, price, false);
        m.add_col(tagged("Q", j, 2), 0.0, kInf, -price, false);
        m.add_col(tagged("Q", j, 3), 0.0, kInf, 0.0, false);
        m.add_col(tagged("Q", j, 4), 0.0, kInf, 0.0, false);
        const double z_bonus = options.objective == ObjectiveMode::verbatim ? 0.1 : 0.0;
        m.add_col(tagged("Z", j, 1), 0.0, capacity, 0.0, false);
        m.add_col(tagged("Z", j, 2), 0.0, cap_at(window.fuel_cap_kwh, j), z_bonus,
                  false);
        m.add_col(tagged("Z", j, 3), 0.0, cap_at(window.gen_cap_kwh, j), z_bonus,
                  false);
    }

    for (std::size_t j = 0; j < horizon; ++j) {
        m.add_row("ONEHOT_" + std::to_string(j + 1),
                  {{dm.x(j, 1), 1.0}, {dm.x(j, 2), 1.0}, {dm.x(j, 3), 1.0},
                   {dm.x(j, 4), 1.0}},
                  RowSense::eq, 1.0);

        for (int i = 1; i <= 4; ++i) {
            const std::string suffix = std::to_string(i) + "_" + std::to_string(j + 1);
            // q <= y
            m.add_row("QLEY" + suffix, {{dm.q(j, i), 1.0}, {dm.y(j, i), -1.0}},
                      RowSense::le, 0.0);
            // q >= y - M(1-x)  <=>  q - y - Mx >= -M
            m.add_row("QGEY" + suffix,
                      {{dm.q(j, i), 1.0}, {dm.y(j, i), -1.0}, {dm.x(j, i), -big_m}},
                      RowSense::ge, -big_m);
            // q <= Mx
            m.add_row("QLEMX" + suffix, {{dm.q(j, i), 1.0}, {dm.x(j, i), -big_m}},
                      RowSense::le, 0.0);
        }

        if (options.mode == MilpMode::as_printed) {
            m.add_row("BAL_" + std::to_string(j + 1),
                      {{dm.q(j, 1), 1.0}, {dm.q(j, 2), 1.0}, {dm.q(j, 3), 1.0},
                       {dm.q(j, 4), 1.0}, {dm.z(j, 2), 1.0}, {dm.z(j, 3), 1.0}},
                      RowSense::eq, window.load_kwh[j]);
        } else {
            m.add_row("BAL_" + std::to_string(j + 1),
                      {{dm.q(j, 2), 1.0}, {dm.q(j, 4), 1.0}, {dm.z(j, 2), 1.0},
                       {dm.z(j, 3), 1.0}, {dm.q(j, 1), -1.0}, {dm.q(j, 3), -1.0}},
                      RowSense::eq, window.load_kwh[j]);
        }

        if (j == 0) {
            if (options.mode == MilpMode::as_printed) {
                // Step-one SOC is pinned; step-one charge/discharge does
                // not touch it (kept exactly as the source formulation).
                m.add_row("SOC_1", {{dm.z(0, 1), 1.0}}, RowSense::eq,
                          window.initial_soc_kwh);
            } else {
                m.add_row("SOC_1",
                          {{dm.z(0, 1), 1.0}, {dm.q(0, 3), -1.0}, {dm.q(0, 4), 1.0}},
                          RowSense::eq, window.initial_soc_kwh);
            }
        } else {
            m.add_row("SOC_" + std::to_string(j + 1),
                      {{dm.z(j, 1), 1.0}, {dm.z(j - 1, 1), -1.0}, {dm.q(j, 3), -1.0},
                       {dm.q(j, 4), 1.0}},
                      RowSense::eq, 0.0);
        }
    }
    return dm;
}

namespace {

struct Node {
    double bound = 0.0;
    long id = 0;
    std::vector<double> lo;
    std::vector<double> up;
};

struct NodeOrder {
    // Max-heap on bound; FIFO on ties for determinism.
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound < b.bound;
        return a.id > b.id;
    }
};

}  // namespace

MilpSolution solve_milp(const MilpModel& model, const SolveOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    auto out_of_time = [&]() {
        if (options.time_limit_s <= 0.0) return false;
        const std::chrono::duration<double> elapsed =
            std::chrono::steady_clock::now() - started;
        return elapsed.count() > options.time_limit_s;
    };

    LinearProgram lp = model.relaxation();

    MilpSolution best;
    best.status = SolveStatus::infeasible;
    best.objective = -kInf;

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    long next_id = 0;

    {
        LpResult root = solve_lp(lp);
        if (root.status == LpStatus::infeasible) throw InfeasibleModel();
        if (root.status == LpStatus::unbounded) throw UnboundedModel();
        open.push(Node{root.objective, next_id++, lp.lo, lp.up});
        best.best_bound = root.objective;
    }

    MilpSolution incumbent = best;
    bool cutoff_hit = false;

    while (!open.empty()) {
        if (out_of_time() || next_id > options.node_limit) {
            cutoff_hit = true;
            break;
        }
        Node node = open.top();
        open.pop();
        incumbent.best_bound = node.bound;
        if (incumbent.objective > -kInf &&
            node.bound <= incumbent.objective +
                              options.gap_tol * std::max(1.0, std::abs(incumbent.objective))) {
            incumbent.best_bound = incumbent.objective;
            break;  // best-bound search: nothing better remains
        }

        lp.lo = node.lo;
        lp.up = node.up;
        LpResult relax = solve_lp(lp);
        ++incumbent.nodes;
        if (relax.status != LpStatus::optimal) continue;
        if (incumbent.objective > -kInf &&
            relax.objective <= incumbent.objective +
                                   options.gap_tol *
                                       std::max(1.0, std::abs(incumbent.objective))) {
            continue;
        }

        // Most fractional integer column; ties to the lowest index.
        int branch_col = -1;
        double best_frac_dist = options.int_tol;
        for (std::size_t c = 0; c < model.n_cols(); ++c) {
            if (!model.integer[c]) continue;
            const double v = relax.x[c];
            const double frac = v - std::floor(v);
            const double dist = std::min(frac, 1.0 - frac);
            if (dist > best_frac_dist + 1e-12) {
                best_frac_dist = dist;
                branch_col = static_cast<int>(c);
            }
        }

        if (branch_col < 0) {
            // Integral: candidate incumbent.
            if (relax.objective > incumbent.objective) {
                incumbent.objective = relax.objective;
                incumbent.values = relax.x;
                for (std::size_t c = 0; c < model.n_cols(); ++c) {
                    if (model.integer[c]) {
                        incumbent.values[c] = std::round(incumbent.values[c]);
                    }
                }
                incumbent.status = SolveStatus::optimal;
            }
            continue;
        }

        const double v = relax.x[branch_col];
        Node down{relax.objective, next_id++, node.lo, node.up};
        down.up[branch_col] = std::floor(v);
        Node up_node{relax.objective, next_id++, node.lo, node.up};
        up_node.lo[branch_col] = std::ceil(v);
        open.push(std::move(down));
        open.push(std::move(up_node));
    }

    if (incumbent.objective == -kInf) {
        if (cutoff_hit) {
            incumbent.status = SolveStatus::time_limit;
            return incumbent;
        }
        throw InfeasibleModel();
    }
    if (cutoff_hit) {
        incumbent.status = SolveStatus::time_limit;
        // Bound reported as the loosest open node.
        if (!open.empty()) {
            incumbent.best_bound = std::max(incumbent.best_bound, open.top().bound);
        }
    } else {
        incumbent.status = SolveStatus::optimal;
        incumbent.best_bound = incumbent.objective;
    }
    return incumbent;
}

}  // namespace mg
