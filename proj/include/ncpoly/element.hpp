/// @file element.hpp
/// @brief the P1-nonconforming element on d-parallelotopes
///
/// The local space is P1(K). Degrees of freedom are values at the 2d facet
/// barycenters, subject to the d-1 pair constraints
///     u(mu_{1,-}) + u(mu_{1,+}) = ... = u(mu_{d,-}) + u(mu_{d,+}),
/// which hold because all pair midpoints coincide with the cell center.
#pragma once

#include <ncpoly/mesh.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace ncpoly {

/// linear function x -> a0 + grad . x on one cell
struct LocalP1 {
    double a0 = 0.0;
    Vec grad;

    [[nodiscard]] double operator()(const Point& x) const { return a0 + grad.dot(x); }
};

/// values at the 2d facet barycenters, index 2*axis + side
struct FacetValues {
    int dim = 0;
    std::vector<double> values;

    FacetValues() = default;
    explicit FacetValues(int d) : dim(d), values(2 * d, 0.0) {}
    FacetValues(int d, std::vector<double> v) : dim(d), values(std::move(v)) {
        if (static_cast<int>(values.size()) != 2 * d) throw InvalidArgument("FacetValues: expected 2d values");
    }

    [[nodiscard]] double& at(int axis, int side) { return values[2 * axis + side]; }
    [[nodiscard]] double at(int axis, int side) const { return values[2 * axis + side]; }
    [[nodiscard]] double scale() const {
        double s = 0.0;
        for (double v : values) s = std::max(s, std::abs(v));
        return s;
    }
};

/// r_j = (u_{j+1,-} + u_{j+1,+}) - (u_{1,-} + u_{1,+}), j = 1..d-1
[[nodiscard]] inline std::vector<double> check_constraints(const FacetValues& fv) {
    std::vector<double> r(fv.dim - 1);
    const double s0 = fv.at(0, 0) + fv.at(0, 1);
    for (int j = 1; j < fv.dim; ++j) r[j - 1] = (fv.at(j, 0) + fv.at(j, 1)) - s0;
    return r;
}

[[nodiscard]] inline bool is_admissible(const FacetValues& fv, double rel_tol = 1e-12) {
    const double limit = rel_tol * fv.scale();
    for (double r : check_constraints(fv))
        if (std::abs(r) > limit) return false;
    return true;
}

/// evaluates p at the 2d barycenters of cell c
[[nodiscard]] inline FacetValues facet_values_of(const LocalP1& p, const Mesh& mesh, int c) {
    FacetValues fv(mesh.dim());
    for (int j = 0; j < mesh.dim(); ++j)
        for (int s = 0; s < 2; ++s) fv.at(j, s) = p(mesh.facet_barycenter(c, j, s));
    return fv;
}

namespace detail {

/// LU of the simplex system with rows (mu_{j,-} - center)^T
struct CellSimplexSystem {
    Point center;
    Eigen::FullPivLU<Mat> lu;
};

[[nodiscard]] inline CellSimplexSystem cell_simplex_system(const Mesh& mesh, int c) {
    const int d = mesh.dim();
    CellSimplexSystem sys;
    sys.center = 0.5 * (mesh.facet_barycenter(c, 0, 0) + mesh.facet_barycenter(c, 0, 1));
    Mat m(d, d);
    for (int j = 0; j < d; ++j) m.row(j) = (mesh.facet_barycenter(c, j, 0) - sys.center).transpose();
    sys.lu.compute(m);
    sys.lu.setThreshold(1e-12);
    if (!sys.lu.isInvertible()) throw SingularSystem("local solve: degenerate cell " + std::to_string(c));
    return sys;
}

} // namespace detail

/// Unique P1 function with the given admissible facet values. Uses the center
/// value (u_{1,-} + u_{1,+}) / 2 and the d minus-side barycenters; the plus-side
/// conditions then hold by the pair constraints and are checked afterwards.
/// @param rel_tol admissibility tolerance relative to max |value|
[[nodiscard]] inline LocalP1 solve_local_from_facet_values(const Mesh& mesh, int c, const FacetValues& fv,
                                                           double rel_tol = 1e-12) {
    const int d = mesh.dim();
    if (fv.dim != d) throw InvalidArgument("solve_local_from_facet_values: dimension mismatch");
    const double scale = fv.scale();
    auto residuals = check_constraints(fv);
    for (double r : residuals) {
        if (std::abs(r) > rel_tol * scale)
            throw ConstraintViolation("facet values violate the opposite-pair sum constraints", residuals);
    }
    const auto sys = detail::cell_simplex_system(mesh, c);
    const double u_center = 0.5 * (fv.at(0, 0) + fv.at(0, 1));
    Vec rhs(d);
    for (int j = 0; j < d; ++j) rhs[j] = fv.at(j, 0) - u_center;
    LocalP1 p;
    p.grad = sys.lu.solve(rhs);
    p.a0 = u_center - p.grad.dot(sys.center);

    const FacetValues back = facet_values_of(p, mesh, c);
    std::vector<double> mismatch(2 * d);
    double worst = 0.0;
    for (int k = 0; k < 2 * d; ++k) {
        mismatch[k] = back.values[k] - fv.values[k];
        worst = std::max(worst, std::abs(mismatch[k]));
    }
    if (worst > 1e-10 * scale) throw ConstraintViolation("local solve does not reproduce the facet values", mismatch);
    return p;
}

/// The 2^d corner functions of cell c: corner b gets facet value 1 on the d
/// facets containing it and 0 on the d opposite ones.
[[nodiscard]] inline std::vector<LocalP1> corner_basis(const Mesh& mesh, int c) {
    const int d = mesh.dim();
    const auto sys = detail::cell_simplex_system(mesh, c);
    std::vector<LocalP1> basis(pow2(d));
    for (int b = 0; b < pow2(d); ++b) {
        Vec rhs(d);
        for (int j = 0; j < d; ++j) rhs[j] = (((b >> j) & 1) == 0 ? 1.0 : 0.0) - 0.5;
        basis[b].grad = sys.lu.solve(rhs);
        basis[b].a0 = 0.5 - basis[b].grad.dot(sys.center);
    }
    return basis;
}

/// facet value of cell c at slot (j, s) = mean of u over that facet's vertices
template <class Fn>
[[nodiscard]] FacetValues vertex_mean_facet_values(Fn&& u, const Mesh& mesh, int c) {
    const int d = mesh.dim();
    const int nc = pow2(d);
    std::vector<double> uv(nc);
    for (int b = 0; b < nc; ++b) uv[b] = u(mesh.corner(c, b));
    FacetValues fv(d);
    for (int b = 0; b < nc; ++b)
        for (int j = 0; j < d; ++j) fv.at(j, (b >> j) & 1) += uv[b];
    for (double& v : fv.values) v /= pow2(d - 1);
    return fv;
}

/// Local interpolant: facet values are vertex means of u. They are admissible
/// on any combinatorial cube (each pair partitions the vertex set); the
/// identity is checked to 1e-10 rather than assumed.
template <class Fn>
[[nodiscard]] LocalP1 local_interpolate(Fn&& u, const Mesh& mesh, int c) {
    return solve_local_from_facet_values(mesh, c, vertex_mean_facet_values(u, mesh, c), 1e-10);
}

} // namespace ncpoly
