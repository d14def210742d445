/// @file sparse.hpp
/// @brief compressed-row matrices, conjugate gradients and a dense Cholesky oracle
#pragma once

#include <ncpoly/types.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

namespace ncpoly {

/// CSR matrix with sorted column indices per row
struct CsrMatrix {
    int n = 0;
    std::vector<int> row_ptr{0};
    std::vector<int> col;
    std::vector<double> val;

    [[nodiscard]] int nnz() const noexcept { return static_cast<int>(col.size()); }

    /// index of entry (i, j) in val, or -1
    [[nodiscard]] int find(int i, int j) const {
        auto first = col.begin() + row_ptr[i];
        auto last = col.begin() + row_ptr[i + 1];
        auto it = std::lower_bound(first, last, j);
        return (it != last && *it == j) ? static_cast<int>(it - col.begin()) : -1;
    }

    [[nodiscard]] double at(int i, int j) const {
        const int k = find(i, j);
        return k < 0 ? 0.0 : val[k];
    }

    void multiply(std::span<const double> x, std::span<double> y) const {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
            y[i] = s;
        }
    }

    [[nodiscard]] Eigen::MatrixXd to_dense() const {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) m(i, col[k]) = val[k];
        return m;
    }

    [[nodiscard]] double max_abs() const {
        double m = 0.0;
        for (double v : val) m = std::max(m, std::abs(v));
        return m;
    }

    /// max |M_ij - M_ji| over stored entries
    [[nodiscard]] double asymmetry() const {
        double m = 0.0;
        for (int i = 0; i < n; ++i)
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) m = std::max(m, std::abs(val[k] - at(col[k], i)));
        return m;
    }
};

struct SparseSystem {
    CsrMatrix matrix;
    std::vector<double> rhs;

    [[nodiscard]] int n_dofs() const noexcept { return matrix.n; }
};

struct SolveResult {
    std::vector<double> x;
    int iterations = 0;
    double relative_residual = 0.0;
};

namespace detail {
[[nodiscard]] inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
} // namespace detail

/// Conjugate gradients from a zero initial guess. Stops when
/// ||b - M x|| <= rel_tol ||b|| (true residual, recomputed at exit).
[[nodiscard]] inline SolveResult solve_cg(const CsrMatrix& m, std::span<const double> b, double rel_tol, int max_iters,
                                          bool jacobi = false) {
    const int n = m.n;
    if (static_cast<int>(b.size()) != n) throw InvalidArgument("solve_cg: rhs size mismatch");
    SolveResult res;
    res.x.assign(n, 0.0);
    const double bnorm = std::sqrt(detail::dot(b, b));
    if (n == 0 || bnorm == 0.0) return res;

    std::vector<double> inv_diag(n, 1.0);
    if (jacobi) {
        for (int i = 0; i < n; ++i) {
            const double d = m.at(i, i);
            if (!(d > 0.0)) throw SingularSystem("solve_cg: nonpositive diagonal with Jacobi preconditioner");
            inv_diag[i] = 1.0 / d;
        }
    }
    std::vector<double> r(b.begin(), b.end());
    std::vector<double> z(n);
    std::vector<double> p(n);
    std::vector<double> q(n);
    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = detail::dot(r, z);
    double rnorm = bnorm;
    int it = 0;
    while (rnorm > rel_tol * bnorm) {
        if (it >= max_iters)
            throw NonConvergence("solve_cg: no convergence within " + std::to_string(max_iters) + " iterations",
                                 rnorm / bnorm, it);
        m.multiply(p, q);
        const double pq = detail::dot(p, q);
        if (!(pq > 0.0)) throw SingularSystem("solve_cg: matrix is not positive definite");
        const double alpha = rz / pq;
        for (int i = 0; i < n; ++i) {
            res.x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        ++it;
        rnorm = std::sqrt(detail::dot(r, r));
        if (rnorm <= rel_tol * bnorm) {
            // guard against drift of the recursive residual
            m.multiply(res.x, q);
            for (int i = 0; i < n; ++i) r[i] = b[i] - q[i];
            rnorm = std::sqrt(detail::dot(r, r));
            if (rnorm <= rel_tol * bnorm) break;
        }
        for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        const double rz_new = detail::dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    res.iterations = it;
    res.relative_residual = rnorm / bnorm;
    return res;
}

[[nodiscard]] inline SolveResult solve_cg(const SparseSystem& sys, double rel_tol, int max_iters, bool jacobi = false) {
    return solve_cg(sys.matrix, sys.rhs, rel_tol, max_iters, jacobi);
}

/// dense Cholesky solve, the reference for small systems
[[nodiscard]] inline std::vector<double> solve_dense_cholesky(const SparseSystem& sys) {
    const Eigen::MatrixXd a = sys.matrix.to_dense();
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw SingularSystem("solve_dense_cholesky: matrix is not SPD");
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(sys.rhs.data(), sys.n_dofs());
    const Eigen::VectorXd x = llt.solve(b);
    return {x.data(), x.data() + x.size()};
}

/// Matrix Market coordinate format, symmetric: lower triangle, 1-based
inline void write_matrix_market(std::ostream& os, const CsrMatrix& m) {
    int lower = 0;
    for (int i = 0; i < m.n; ++i)
        for (int k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k)
            if (m.col[k] <= i) ++lower;
    const auto old = os.precision(std::numeric_limits<double>::max_digits10);
    os << "%%MatrixMarket matrix coordinate real symmetric\n";
    os << m.n << ' ' << m.n << ' ' << lower << '\n';
    for (int i = 0; i < m.n; ++i)
        for (int k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k)
            if (m.col[k] <= i) os << i + 1 << ' ' << m.col[k] + 1 << ' ' << m.val[k] << '\n';
    os.precision(old);
}

/// one value per line
inline void write_vector(std::ostream& os, std::span<const double> v) {
    const auto old = os.precision(std::numeric_limits<double>::max_digits10);
    for (double x : v) os << x << '\n';
    os.precision(old);
}

} // namespace ncpoly
