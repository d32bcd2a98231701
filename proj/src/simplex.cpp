#include "mg/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mg {
namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-7;

// Dense two-phase bounded-variable simplex working state. Columns are the
// structurals followed by one slack per row and any artificials appended
// by phase 1. `where[c]` is the row index when basic, else a bound marker.
class Tableau {
public:
    static constexpr int kAtLo = -1;
    static constexpr int kAtUp = -2;
    static constexpr int kFree = -3;

    explicit Tableau(const LinearProgram& lp) : n_struct_(lp.n_cols()) {
        m_ = lp.rows.size();
        lo_ = lp.lo;
        up_ = lp.up;
        const std::size_t total0 = n_struct_ + m_;
        lo_.reserve(total0);
        up_.reserve(total0);

        // One slack per row; its bounds encode the constraint sense.
        for (const auto& row : lp.rows) {
            switch (row.sense) {
                case RowSense::le: lo_.push_back(0.0); up_.push_back(kInf); break;
                case RowSense::ge: lo_.push_back(-kInf); up_.push_back(0.0); break;
                case RowSense::eq: lo_.push_back(0.0); up_.push_back(0.0); break;
            }
        }
        t_.assign(m_ * total0, 0.0);
        rhs_.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            for (const LinTerm& term : lp.rows[i].terms) {
                if (term.col < 0 || static_cast<std::size_t>(term.col) >= n_struct_) {
                    throw std::invalid_argument("solve_lp: term column out of range");
                }
                t_[i * total0 + term.col] += term.coef;
            }
            t_[i * total0 + n_struct_ + i] = 1.0;
            rhs_[i] = lp.rows[i].rhs;
        }
        ncols_ = total0;

        where_.assign(ncols_, kAtLo);
        val_.assign(ncols_, 0.0);
        for (std::size_t c = 0; c < ncols_; ++c) {
            if (std::isfinite(lo_[c])) {
                where_[c] = kAtLo;
                val_[c] = lo_[c];
            } else if (std::isfinite(up_[c])) {
                where_[c] = kAtUp;
                val_[c] = up_[c];
            } else {
                where_[c] = kFree;
                val_[c] = 0.0;
            }
        }

        // Slacks start basic; rows whose slack value violates its own
        // bounds get an artificial column instead.
        basis_.resize(m_);
        beta_.resize(m_);
        std::vector<double> resid(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            double acc = rhs_[i];
            for (std::size_t c = 0; c < n_struct_; ++c) acc -= at(i, c) * val_[c];
            resid[i] = acc;
        }

        std::vector<std::size_t> needs_artificial;
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t s = n_struct_ + i;
            if (resid[i] >= lo_[s] - kFeasTol && resid[i] <= up_[s] + kFeasTol) {
                basis_[i] = static_cast<int>(s);
                beta_[i] = resid[i];
                where_[s] = static_cast<int>(i);
            } else {
                needs_artificial.push_back(i);
            }
        }
        if (!needs_artificial.empty()) {
            grow_columns(needs_artificial.size());
            std::size_t k = 0;
            for (std::size_t i : needs_artificial) {
                const std::size_t s = n_struct_ + i;
                // Park the slack at its bound nearest the residual.
                double parked;
                if (!std::isfinite(lo_[s])) {
                    parked = up_[s];
                } else if (!std::isfinite(up_[s])) {
                    parked = lo_[s];
                } else {
                    parked = resid[i] > up_[s] ? up_[s] : lo_[s];
                }
                where_[s] = kAtLo;
                if (parked == up_[s] && up_[s] != lo_[s]) where_[s] = kAtUp;
                val_[s] = parked;

                const double r = resid[i] - parked;
                const std::size_t a = n_struct_ + m_ + k++;
                // Basic columns must be +1 unit vectors for the tableau
                // algebra; negate the row when the residual is negative.
                if (r < 0.0) {
                    for (std::size_t c = 0; c < ncols_; ++c) at(i, c) = -at(i, c);
                }
                at(i, a) = 1.0;
                lo_[a] = 0.0;
                up_[a] = kInf;
                basis_[i] = static_cast<int>(a);
                beta_[i] = std::abs(r);
                where_[a] = static_cast<int>(i);
                artificials_.push_back(a);
            }
        }
    }

    bool has_artificials() const { return !artificials_.empty(); }

    // Runs simplex for the given objective; returns false on unbounded.
    bool optimize(const std::vector<double>& cost) {
        const std::size_t iter_cap = 200 * (m_ + ncols_) + 5000;
        const std::size_t bland_after = 20 * (m_ + ncols_) + 500;
        for (std::size_t iter = 0; iter < iter_cap; ++iter) {
            const bool bland = iter >= bland_after;

            std::vector<double> cb(m_);
            for (std::size_t i = 0; i < m_; ++i) {
                cb[i] = static_cast<std::size_t>(basis_[i]) < cost.size()
                            ? cost[basis_[i]]
                            : 0.0;
            }

            int entering = -1;
            int direction = 0;  // +1 increase, -1 decrease
            double best_score = kCostTol;
            for (std::size_t c = 0; c < ncols_; ++c) {
                if (where_[c] >= 0) continue;           // basic
                if (lo_[c] == up_[c]) continue;         // fixed, cannot move
                double d = static_cast<std::size_t>(c) < cost.size() ? cost[c] : 0.0;
                for (std::size_t i = 0; i < m_; ++i) d -= cb[i] * at(i, c);

                int dir = 0;
                if (where_[c] == kAtLo && d > kCostTol) dir = 1;
                else if (where_[c] == kAtUp && d < -kCostTol) dir = -1;
                else if (where_[c] == kFree && std::abs(d) > kCostTol) dir = d > 0 ? 1 : -1;
                if (dir == 0) continue;

                if (bland) {
                    entering = static_cast<int>(c);
                    direction = dir;
                    break;
                }
                if (std::abs(d) > best_score) {
                    best_score = std::abs(d);
                    entering = static_cast<int>(c);
                    direction = dir;
                }
            }
            if (entering < 0) return true;  // optimal

            // Ratio test: how far can the entering variable move.
            const std::size_t e = static_cast<std::size_t>(entering);
            double limit = kInf;
            if (std::isfinite(lo_[e]) && std::isfinite(up_[e])) limit = up_[e] - lo_[e];
            int leave_row = -1;
            double leave_bound = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                const double alpha = at(i, e) * direction;
                if (std::abs(alpha) < kPivotTol) continue;
                const std::size_t bc = static_cast<std::size_t>(basis_[i]);
                double step;
                double hit;
                if (alpha > 0.0) {  // basic value decreases toward its lower bound
                    if (!std::isfinite(lo_[bc])) continue;
                    step = (beta_[i] - lo_[bc]) / alpha;
                    hit = lo_[bc];
                } else {  // basic value increases toward its upper bound
                    if (!std::isfinite(up_[bc])) continue;
                    step = (beta_[i] - up_[bc]) / alpha;
                    hit = up_[bc];
                }
                if (step < -1e-12) step = 0.0;
                if (step < limit - 1e-12 ||
                    (step < limit + 1e-12 &&
                     (leave_row < 0 || basis_[i] < basis_[leave_row]))) {
                    limit = std::max(0.0, step);
                    leave_row = static_cast<int>(i);
                    leave_bound = hit;
                }
            }
            if (!std::isfinite(limit)) return false;  // unbounded

            if (leave_row < 0) {
                // Pure bound flip: entering runs to its opposite bound.
                for (std::size_t i = 0; i < m_; ++i) {
                    beta_[i] -= at(i, e) * direction * limit;
                }
                val_[e] = direction > 0 ? up_[e] : lo_[e];
                where_[e] = direction > 0 ? kAtUp : kAtLo;
                continue;
            }

            const std::size_t r = static_cast<std::size_t>(leave_row);
            const double new_entering_value = val_[e] + direction * limit;
            for (std::size_t i = 0; i < m_; ++i) {
                beta_[i] -= at(i, e) * direction * limit;
            }
            const std::size_t leaving = static_cast<std::size_t>(basis_[r]);
            where_[leaving] = leave_bound == lo_[leaving] ? kAtLo : kAtUp;
            if (lo_[leaving] == up_[leaving]) where_[leaving] = kAtLo;
            val_[leaving] = leave_bound;

            basis_[r] = entering;
            where_[e] = static_cast<int>(r);
            beta_[r] = new_entering_value;

            // Gauss pivot on (r, e).
            const double pivot = at(r, e);
            if (std::abs(pivot) < kPivotTol) {
                throw std::runtime_error("solve_lp: numerically singular pivot");
            }
            const double inv = 1.0 / pivot;
            for (std::size_t c = 0; c < ncols_; ++c) at(r, c) *= inv;
            for (std::size_t i = 0; i < m_; ++i) {
                if (i == r) continue;
                const double f = at(i, e);
                if (f == 0.0) continue;
                for (std::size_t c = 0; c < ncols_; ++c) at(i, c) -= f * at(r, c);
            }
        }
        throw std::runtime_error("solve_lp: iteration cap hit (cycling?)");
    }

    double phase1_infeasibility() const {
        double total = 0.0;
        for (std::size_t a : artificials_) {
            total += where_[a] >= 0 ? beta_[where_[a]] : val_[a];
        }
        return total;
    }

    void fix_artificials() {
        for (std::size_t a : artificials_) up_[a] = 0.0;
    }

    std::vector<double> phase1_cost() const {
        std::vector<double> c(ncols_, 0.0);
        for (std::size_t a : artificials_) c[a] = -1.0;
        return c;
    }

    std::vector<double> extract(const std::vector<double>& structural_cost,
                                double* objective) const {
        std::vector<double> x(n_struct_);
        for (std::size_t c = 0; c < n_struct_; ++c) {
            x[c] = where_[c] >= 0 ? beta_[where_[c]] : val_[c];
        }
        double obj = 0.0;
        for (std::size_t c = 0; c < n_struct_; ++c) obj += structural_cost[c] * x[c];
        *objective = obj;
        return x;
    }

    std::size_t ncols() const { return ncols_; }

private:
    double& at(std::size_t row, std::size_t col) { return t_[row * ncols_ + col]; }
    double at(std::size_t row, std::size_t col) const { return t_[row * ncols_ + col]; }

    void grow_columns(std::size_t extra) {
        const std::size_t wider = ncols_ + extra;
        std::vector<double> t2(m_ * wider, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t c = 0; c < ncols_; ++c) t2[i * wider + c] = at(i, c);
        }
        t_ = std::move(t2);
        ncols_ = wider;
        lo_.resize(wider, 0.0);
        up_.resize(wider, 0.0);
        where_.resize(wider, kAtLo);
        val_.resize(wider, 0.0);
    }

    std::size_t n_struct_;
    std::size_t m_ = 0;
    std::size_t ncols_ = 0;
    std::vector<double> t_;
    std::vector<double> rhs_;
    std::vector<double> lo_, up_;
    std::vector<int> where_;
    std::vector<double> val_;
    std::vector<int> basis_;
    std::vector<double> beta_;
    std::vector<std::size_t> artificials_;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp) {
    if (lp.lo.size() != lp.n_cols() || lp.up.size() != lp.n_cols()) {
        throw std::invalid_argument("solve_lp: bounds size mismatch");
    }
    for (std::size_t c = 0; c < lp.n_cols(); ++c) {
        if (lp.lo[c] > lp.up[c]) return {LpStatus::infeasible, 0.0, {}};
    }

    Tableau tab(lp);
    if (tab.has_artificials()) {
        if (!tab.optimize(tab.phase1_cost())) {
            throw std::logic_error("solve_lp: phase 1 cannot be unbounded");
        }
        if (tab.phase1_infeasibility() > kFeasTol) {
            return {LpStatus::infeasible, 0.0, {}};
        }
        tab.fix_artificials();
    }

    std::vector<double> cost(tab.ncols(), 0.0);
    for (std::size_t c = 0; c < lp.n_cols(); ++c) cost[c] = lp.objective[c];
    if (!tab.optimize(cost)) return {LpStatus::unbounded, 0.0, {}};

    LpResult result;
    result.status = LpStatus::optimal;
    result.x = tab.extract(lp.objective, &result.objective);
    return result;
}

}  // namespace mg
