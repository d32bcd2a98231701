#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "mg/rng.hpp"
#include "mg/simplex.hpp"

using namespace mg;

namespace {

double row_value(const LinearProgram::Row& row, const std::vector<double>& x) {
    double v = 0.0;
    for (const LinTerm& t : row.terms) v += t.coef * x[static_cast<std::size_t>(t.col)];
    return v;
}

void check_feasible(const LinearProgram& lp, const std::vector<double>& x,
                    double tol = 1e-7) {
    REQUIRE(x.size() == lp.n_cols());
    for (std::size_t c = 0; c < lp.n_cols(); ++c) {
        CHECK(x[c] >= lp.lo[c] - tol);
        CHECK(x[c] <= lp.up[c] + tol);
    }
    for (const auto& row : lp.rows) {
        const double v = row_value(row, x);
        switch (row.sense) {
            case RowSense::le: CHECK(v <= row.rhs + tol); break;
            case RowSense::ge: CHECK(v >= row.rhs - tol); break;
            case RowSense::eq: CHECK(std::abs(v - row.rhs) <= tol); break;
        }
    }
}

}  // namespace

TEST_CASE("two-variable textbook maximum") {
    // max 3x + 2y  s.t.  x + y <= 4,  x + 3y <= 6,  x,y >= 0  ->  12 at (4,0)
    LinearProgram lp;
    const int x = lp.add_col(0.0, kInf, 3.0);
    const int y = lp.add_col(0.0, kInf, 2.0);
    lp.add_row({{x, 1.0}, {y, 1.0}}, RowSense::le, 4.0);
    lp.add_row({{x, 1.0}, {y, 3.0}}, RowSense::le, 6.0);

    const LpResult r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(12.0));
    CHECK(r.x[0] == doctest::Approx(4.0));
    CHECK(r.x[1] == doctest::Approx(0.0));
    check_feasible(lp, r.x);
}

TEST_CASE("greater-equal rows (covering problem)") {
    // max -(2x + 3y)  s.t.  x + 2y >= 4,  3x + y >= 6  ->  -6.8 at (1.6, 1.2)
    LinearProgram lp;
    const int x = lp.add_col(0.0, kInf, -2.0);
    const int y = lp.add_col(0.0, kInf, -3.0);
    lp.add_row({{x, 1.0}, {y, 2.0}}, RowSense::ge, 4.0);
    lp.add_row({{x, 3.0}, {y, 1.0}}, RowSense::ge, 6.0);

    const LpResult r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(-6.8));
    CHECK(r.x[0] == doctest::Approx(1.6));
    CHECK(r.x[1] == doctest::Approx(1.2));
    check_feasible(lp, r.x);
}

TEST_CASE("equality row with a bounded column") {
    // max 2x + y  s.t.  x + y = 3,  x <= 2  ->  5 at (2,1)
    LinearProgram lp;
    const int x = lp.add_col(0.0, 2.0, 2.0);
    const int y = lp.add_col(0.0, kInf, 1.0);
    lp.add_row({{x, 1.0}, {y, 1.0}}, RowSense::eq, 3.0);

    const LpResult r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(5.0));
    CHECK(r.x[0] == doctest::Approx(2.0));
    CHECK(r.x[1] == doctest::Approx(1.0));
}

TEST_CASE("pure bound problems need no pivots") {
    SUBCASE("maximize against the upper bound") {
        LinearProgram lp;
        lp.add_col(-2.0, 5.0, 1.0);
        const LpResult r = solve_lp(lp);
        REQUIRE(r.status == LpStatus::optimal);
        CHECK(r.objective == doctest::Approx(5.0));
        CHECK(r.x[0] == doctest::Approx(5.0));
    }
    SUBCASE("negative objective drives to the lower bound") {
        LinearProgram lp;
        lp.add_col(-2.0, 5.0, -1.0);
        const LpResult r = solve_lp(lp);
        REQUIRE(r.status == LpStatus::optimal);
        CHECK(r.objective == doctest::Approx(2.0));
        CHECK(r.x[0] == doctest::Approx(-2.0));
    }
    SUBCASE("fixed column") {
        LinearProgram lp;
        lp.add_col(3.0, 3.0, 7.0);
        const LpResult r = solve_lp(lp);
        REQUIRE(r.status == LpStatus::optimal);
        CHECK(r.objective == doctest::Approx(21.0));
    }
}

TEST_CASE("free variables") {
    // max y  s.t.  y - x <= 0,  y + x <= 4,  both free  ->  2 at x = 2
    LinearProgram lp;
    const int x = lp.add_col(-kInf, kInf, 0.0);
    const int y = lp.add_col(-kInf, kInf, 1.0);
    lp.add_row({{y, 1.0}, {x, -1.0}}, RowSense::le, 0.0);
    lp.add_row({{y, 1.0}, {x, 1.0}}, RowSense::le, 4.0);

    const LpResult r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(2.0));
    CHECK(r.x[0] == doctest::Approx(2.0));
    CHECK(r.x[1] == doctest::Approx(2.0));
}

TEST_CASE("infeasibility is detected") {
    SUBCASE("row conflicts with a bound") {
        LinearProgram lp;
        const int x = lp.add_col(0.0, kInf, 1.0);
        lp.add_row({{x, 1.0}}, RowSense::le, -1.0);
        CHECK(solve_lp(lp).status == LpStatus::infeasible);
    }
    SUBCASE("two contradictory rows") {
        LinearProgram lp;
        const int x = lp.add_col(0.0, 10.0, 1.0);
        const int y = lp.add_col(0.0, 10.0, 1.0);
        lp.add_row({{x, 1.0}, {y, 1.0}}, RowSense::ge, 5.0);
        lp.add_row({{x, 1.0}, {y, 1.0}}, RowSense::le, 4.0);
        CHECK(solve_lp(lp).status == LpStatus::infeasible);
    }
    SUBCASE("crossed column bounds") {
        LinearProgram lp;
        lp.add_col(2.0, 1.0, 1.0);
        CHECK(solve_lp(lp).status == LpStatus::infeasible);
    }
}

TEST_CASE("unboundedness is detected") {
    SUBCASE("no rows") {
        LinearProgram lp;
        lp.add_col(0.0, kInf, 1.0);
        CHECK(solve_lp(lp).status == LpStatus::unbounded);
    }
    SUBCASE("rows that do not cap the objective") {
        LinearProgram lp;
        const int x = lp.add_col(0.0, kInf, 1.0);
        const int y = lp.add_col(0.0, kInf, 0.0);
        lp.add_row({{x, 1.0}, {y, -1.0}}, RowSense::le, 1.0);
        CHECK(solve_lp(lp).status == LpStatus::unbounded);
    }
}

TEST_CASE("degenerate ties still terminate") {
    // Klee-Minty-flavored degeneracy: many redundant rows through one vertex.
    LinearProgram lp;
    const int x = lp.add_col(0.0, kInf, 1.0);
    const int y = lp.add_col(0.0, kInf, 1.0);
    for (int k = 1; k <= 6; ++k) {
        lp.add_row({{x, 1.0}, {y, static_cast<double>(k)}}, RowSense::le, 2.0);
    }
    const LpResult r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(2.0));
    check_feasible(lp, r.x);
}

namespace {

/// Brute-force oracle for 2-variable LPs inside finite boxes: enumerates
/// every intersection of two constraint lines (rows at equality and the
/// four bound lines), keeps the feasible ones, returns the best objective.
struct Oracle2D {
    bool feasible = false;
    double objective = 0.0;
};

Oracle2D enumerate_vertices(const LinearProgram& lp) {
    struct Line {
        double a, b, c;  // a*x + b*y = c
    };
    std::vector<Line> lines;
    for (const auto& row : lp.rows) {
        double a = 0.0, b = 0.0;
        for (const LinTerm& t : row.terms) {
            if (t.col == 0) a = t.coef;
            else b = t.coef;
        }
        lines.push_back({a, b, row.rhs});
    }
    lines.push_back({1.0, 0.0, lp.lo[0]});
    lines.push_back({1.0, 0.0, lp.up[0]});
    lines.push_back({0.0, 1.0, lp.lo[1]});
    lines.push_back({0.0, 1.0, lp.up[1]});

    Oracle2D out;
    auto consider = [&](double x, double y) {
        if (x < lp.lo[0] - 1e-9 || x > lp.up[0] + 1e-9) return;
        if (y < lp.lo[1] - 1e-9 || y > lp.up[1] + 1e-9) return;
        for (const auto& row : lp.rows) {
            const double v = row_value(row, {x, y});
            if (row.sense == RowSense::le && v > row.rhs + 1e-9) return;
            if (row.sense == RowSense::ge && v < row.rhs - 1e-9) return;
            if (row.sense == RowSense::eq && std::abs(v - row.rhs) > 1e-9) return;
        }
        const double obj = lp.objective[0] * x + lp.objective[1] * y;
        if (!out.feasible || obj > out.objective) {
            out.feasible = true;
            out.objective = obj;
        }
    };
    for (std::size_t i = 0; i < lines.size(); ++i) {
        for (std::size_t j = i + 1; j < lines.size(); ++j) {
            const double det = lines[i].a * lines[j].b - lines[j].a * lines[i].b;
            if (std::abs(det) < 1e-12) continue;
            const double x = (lines[i].c * lines[j].b - lines[j].c * lines[i].b) / det;
            const double y = (lines[i].a * lines[j].c - lines[j].a * lines[i].c) / det;
            consider(x, y);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("randomized boxed LPs agree with vertex enumeration") {
    Rng rng = seeded_rng(411);
    int solved = 0;
    for (int trial = 0; trial < 120; ++trial) {
        LinearProgram lp;
        for (int c = 0; c < 2; ++c) {
            const double up = 1.0 + static_cast<double>(rng.randint(5));
            const double obj = static_cast<double>(rng.randint(7)) - 3.0;
            lp.add_col(0.0, up, obj);
        }
        const int n_rows = 1 + static_cast<int>(rng.randint(3));
        for (int r = 0; r < n_rows; ++r) {
            std::vector<LinTerm> terms;
            for (int c = 0; c < 2; ++c) {
                const double coef = static_cast<double>(rng.randint(7)) - 3.0;
                if (coef != 0.0) terms.push_back({c, coef});
            }
            if (terms.empty()) terms.push_back({0, 1.0});
            const double rhs = static_cast<double>(rng.randint(11)) - 2.0;
            const RowSense sense = rng.randint(4) == 0 ? RowSense::ge : RowSense::le;
            lp.add_row(std::move(terms), sense, rhs);
        }

        const Oracle2D oracle = enumerate_vertices(lp);
        const LpResult got = solve_lp(lp);
        INFO("trial ", trial);
        if (!oracle.feasible) {
            CHECK(got.status == LpStatus::infeasible);
            continue;
        }
        REQUIRE(got.status == LpStatus::optimal);
        CHECK(got.objective == doctest::Approx(oracle.objective).epsilon(1e-7));
        check_feasible(lp, got.x);
        ++solved;
    }
    CHECK(solved > 40);  // the generator must not be degenerate
}

TEST_CASE("feasibility of reported solutions on larger random instances") {
    // 6 columns, mixed senses; objective capped by a budget row so every
    // instance stays bounded.
    Rng rng = seeded_rng(1912);
    for (int trial = 0; trial < 40; ++trial) {
        LinearProgram lp;
        for (int c = 0; c < 6; ++c) {
            lp.add_col(0.0, 2.0 + static_cast<double>(rng.randint(4)),
                       rng.uniform(-2.0, 3.0));
        }
        std::vector<LinTerm> budget;
        for (int c = 0; c < 6; ++c) budget.push_back({c, 1.0});
        lp.add_row(std::move(budget), RowSense::le, 10.0);
        for (int r = 0; r < 4; ++r) {
            // le rows with positive rhs keep the origin feasible, so every
            // instance is solvable and the box keeps it bounded.
            std::vector<LinTerm> terms;
            for (int c = 0; c < 6; ++c) {
                if (rng.randint(2) == 0) continue;
                terms.push_back({c, rng.uniform(-1.0, 2.0)});
            }
            if (terms.empty()) terms.push_back({static_cast<int>(rng.randint(6)), 1.0});
            lp.add_row(std::move(terms), RowSense::le, rng.uniform(0.5, 6.0));
        }
        const LpResult r = solve_lp(lp);
        INFO("trial ", trial);
        REQUIRE(r.status == LpStatus::optimal);
        check_feasible(lp, r.x);
    }
}
