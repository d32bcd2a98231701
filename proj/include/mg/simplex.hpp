#ifndef MG_SIMPLEX_HPP
#define MG_SIMPLEX_HPP

#include <limits>
#include <vector>

namespace mg {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { le, ge, eq };

struct LinTerm {
    int col = 0;
    double coef = 0.0;
};

/// Maximization LP over bounded variables. Rows hold sparse terms; column
/// bounds may be infinite on either side.
struct LinearProgram {
    struct Row {
        std::vector<LinTerm> terms;
        RowSense sense = RowSense::le;
        double rhs = 0.0;
    };

    std::vector<double> objective;
    std::vector<double> lo;
    std::vector<double> up;
    std::vector<Row> rows;

    std::size_t n_cols() const { return objective.size(); }

    int add_col(double lower, double upper, double obj_coef) {
        lo.push_back(lower);
        up.push_back(upper);
        objective.push_back(obj_coef);
        return static_cast<int>(objective.size()) - 1;
    }
    void add_row(std::vector<LinTerm> terms, RowSense sense, double rhs) {
        rows.push_back(Row{std::move(terms), sense, rhs});
    }
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    double objective = 0.0;
    std::vector<double> x;
};

/// Two-phase bounded-variable primal simplex on a dense tableau. Dantzig
/// pricing with a Bland's-rule fallback against cycling; deterministic
/// tie-breaking throughout.
LpResult solve_lp(const LinearProgram& lp);

}  // namespace mg

#endif  // MG_SIMPLEX_HPP
