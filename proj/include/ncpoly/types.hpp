/// @file types.hpp
/// @brief small fixed-capacity linear algebra types and the error hierarchy
#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ncpoly {

/// largest spatial dimension supported by the dense per-cell kernels
inline constexpr int kMaxDim = 6;

/// point / vector in R^d, stack allocated (capacity kMaxDim + 1)
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim + 1, 1>;

/// small square matrix (Jacobians, coefficient tensors, simplex systems)
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim + 1, kMaxDim + 1>;

using Point = Vec;

// ==========
// = Errors =
// ==========

/// base of every error thrown by the library
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// bad arguments or broken preconditions
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/// mesh construction / validation failure; carries the offending cell ids
class MeshError : public Error {
  public:
    MeshError(const std::string& what, std::vector<int> cells = {})
        : Error(what), cells_(std::move(cells)) {}
    [[nodiscard]] const std::vector<int>& cells() const noexcept { return cells_; }

  private:
    std::vector<int> cells_;
};

/// facet values violating the opposite-pair sum constraints
class ConstraintViolation : public Error {
  public:
    ConstraintViolation(const std::string& what, std::vector<double> residuals)
        : Error(what), residuals_(std::move(residuals)) {}
    [[nodiscard]] const std::vector<double>& residuals() const noexcept { return residuals_; }

  private:
    std::vector<double> residuals_;
};

/// singular local or global linear system
class SingularSystem : public Error {
  public:
    using Error::Error;
};

/// nonpositive Jacobian determinant encountered during integration
class DegenerateCell : public Error {
  public:
    DegenerateCell(const std::string& what, int cell) : Error(what), cell_(cell) {}
    [[nodiscard]] int cell() const noexcept { return cell_; }

  private:
    int cell_;
};

/// iterative solver ran out of iterations
class NonConvergence : public Error {
  public:
    NonConvergence(const std::string& what, double residual, int iterations)
        : Error(what), residual_(residual), iterations_(iterations) {}
    [[nodiscard]] double residual() const noexcept { return residual_; }
    [[nodiscard]] int iterations() const noexcept { return iterations_; }

  private:
    double residual_;
    int iterations_;
};

/// 2^k for small k
[[nodiscard]] constexpr int pow2(int k) noexcept { return 1 << k; }

[[nodiscard]] constexpr int ipow(int base, int exp) noexcept {
    int r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

} // namespace ncpoly
