#ifndef MG_LINALG_HPP
#define MG_LINALG_HPP

#include <cstddef>
#include <vector>

namespace mg {

/// Solves A x = b for dense square A (row-major, n*n) by Gaussian
/// elimination with partial pivoting. Throws std::runtime_error when A is
/// singular to working precision.
std::vector<double> solve_linear_system(std::vector<double> a,
                                        std::vector<double> b, std::size_t n);

/// Ordinary least squares via the normal equations. X is row-major with
/// one feature row per observation. A small ridge term stabilizes nearly
/// collinear features without visibly biasing well-posed fits.
std::vector<double> least_squares(const std::vector<std::vector<double>>& x,
                                  const std::vector<double>& y,
                                  double ridge = 1e-10);

}  // namespace mg

#endif  // MG_LINALG_HPP
