#include "mg/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace mg {

std::vector<double> solve_linear_system(std::vector<double> a,
                                        std::vector<double> b, std::size_t n) {
    if (a.size() != n * n || b.size() != n) {
        throw std::invalid_argument("solve_linear_system: shape mismatch");
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
        }
        if (std::abs(a[pivot * n + col]) < 1e-12) {
            throw std::runtime_error("solve_linear_system: singular matrix");
        }
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a[r * n + col] / a[col * n + col];
            if (factor == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= factor * a[col * n + c];
            b[r] -= factor * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[i * n + c] * x[c];
        x[i] = acc / a[i * n + i];
    }
    return x;
}

std::vector<double> least_squares(const std::vector<std::vector<double>>& x,
                                  const std::vector<double>& y, double ridge) {
    if (x.empty() || x.size() != y.size()) {
        throw std::invalid_argument("least_squares: shape mismatch");
    }
    const std::size_t p = x[0].size();
    std::vector<double> xtx(p * p, 0.0);
    std::vector<double> xty(p, 0.0);
    for (std::size_t r = 0; r < x.size(); ++r) {
        if (x[r].size() != p) {
            throw std::invalid_argument("least_squares: ragged feature rows");
        }
        for (std::size_t i = 0; i < p; ++i) {
            xty[i] += x[r][i] * y[r];
            for (std::size_t j = i; j < p; ++j) xtx[i * p + j] += x[r][i] * x[r][j];
        }
    }
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < i; ++j) xtx[i * p + j] = xtx[j * p + i];
        xtx[i * p + i] += ridge;
    }
    return solve_linear_system(std::move(xtx), std::move(xty), p);
}

}  // namespace mg
