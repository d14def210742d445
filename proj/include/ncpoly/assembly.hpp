/// @file assembly.hpp
/// @brief sparse Galerkin assembly of the broken form
///     a_h(u, v) = sum_K (A grad u, grad v)_K + (c u, v),   l(v) = (f, v)
/// plus facet-mean Dirichlet lifting and the jump-mean continuity check
#pragma once

#include <ncpoly/fe_space.hpp>
#include <ncpoly/sparse.hpp>

#include <algorithm>
#include <concepts>
#include <functional>
#include <optional>
#include <vector>

namespace ncpoly {

/// -div(A grad u) + c u = f; A uniformly SPD, c >= 0
struct CoefficientField {
    std::function<Mat(const Point&)> A;
    ScalarFn c;
    ScalarFn f;
};

[[nodiscard]] inline CoefficientField constant_coefficients(const Mat& a, double c, double f = 0.0) {
    return {[a](const Point&) { return a; }, [c](const Point&) { return c; }, [f](const Point&) { return f; }};
}

namespace detail {

template <class Space>
void check_rule(const Space& space, const QuadratureRule& quad) {
    if (quad.dim != space.dim() || quad.domain != space.domain())
        throw InvalidArgument("quadrature rule does not match the space's reference domain");
}

} // namespace detail

/// spaces whose local basis is a list of linear functions of the physical point
template <class Space>
concept LinearBasisSpace = requires(const typename Space::CellData& data) {
    { Space::cell_basis(data) } -> std::convertible_to<const std::vector<LocalP1>&>;
    { Space::cell_center(data) } -> std::convertible_to<const Point&>;
};

/// Calls visit(c, K, F) with the local stiffness+mass matrix and load vector of every cell.
///
/// For linear bases only the moments of A, c and f are integrated; the local
/// matrices follow from them exactly. Otherwise basis values are integrated
/// point by point.
template <class Space, class Visit>
void for_each_cell_system(const Space& space, const CoefficientField& coeff, const QuadratureRule& quad, Visit&& visit) {
    detail::check_rule(space, quad);
    const int d = space.dim();
    const int nloc = space.dofs().nloc;
    typename Space::CellData data;
    PointEval pt;
    LocalMat k(nloc, nloc);
    LocalVec f(nloc);
    Mat a_mean(d, d);
    for (int c = 0; c < space.n_cells(); ++c) {
        space.bind(c, data);
        k.setZero();
        f.setZero();
        a_mean.setZero();
        if constexpr (LinearBasisSpace<Space>) {
            const auto& basis = Space::cell_basis(data);
            const Point& xc = Space::cell_center(data);
            // moments about the cell center: [1, y] (x) [1, y] weighted by c, and [1, y] by f
            Mat mass_moments = Mat::Zero(d + 1, d + 1);
            Vec load_moments = Vec::Zero(d + 1);
            Vec y1(d + 1);
            y1[0] = 1.0;
            for (int q = 0; q < quad.size(); ++q) {
                const double w = quad.weights[q] * data.map.map(quad.points[q], pt.x);
                a_mean += w * coeff.A(pt.x);
                y1.tail(d) = pt.x - xc;
                const double wc = w * coeff.c(pt.x);
                if (wc != 0.0) mass_moments.noalias() += wc * (y1 * y1.transpose());
                load_moments += (w * coeff.f(pt.x)) * y1;
            }
            Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxLocal, kMaxDim + 1> p(nloc, d + 1);
            for (int a = 0; a < nloc; ++a) {
                p(a, 0) = basis[a](xc);
                p.row(a).tail(d) = basis[a].grad.transpose();
            }
            const auto grads = p.rightCols(d);
            k.noalias() += grads * a_mean * grads.transpose();
            k.noalias() += p * mass_moments * p.transpose();
            f.noalias() += p * load_moments;
        } else {
            for (int q = 0; q < quad.size(); ++q) {
                space.eval(data, quad.points[q], pt);
                const double w = quad.weights[q] * pt.det;
                const Mat a = coeff.A(pt.x);
                if constexpr (Space::constant_gradients) {
                    a_mean += w * a;
                } else {
                    k.noalias() += w * (pt.grads.transpose() * a * pt.grads);
                }
                const double cval = coeff.c(pt.x);
                if (cval != 0.0) k.noalias() += (w * cval) * (pt.values * pt.values.transpose());
                f.noalias() += (w * coeff.f(pt.x)) * pt.values;
            }
            if constexpr (Space::constant_gradients) {
                k.noalias() += pt.grads.transpose() * a_mean * pt.grads;
            }
        }
        visit(c, k, f);
    }
}

/// Assembles the SPD system over the active DOFs. Columns are sorted per row;
/// the pattern is built first, values accumulated in cell order.
template <class Space>
[[nodiscard]] SparseSystem assemble(const Space& space, const CoefficientField& coeff, const QuadratureRule& quad) {
    const DofMap& dofs = space.dofs();
    const int n = dofs.n_dofs;
    std::vector<std::vector<int>> pattern(n);
    for (int c = 0; c < space.n_cells(); ++c) {
        auto ents = dofs.entities(c);
        for (int ei : ents) {
            const int i = dofs.entity_dof[ei];
            if (i < 0) continue;
            for (int ej : ents) {
                const int j = dofs.entity_dof[ej];
                if (j >= 0) pattern[i].push_back(j);
            }
        }
    }
    SparseSystem sys;
    sys.matrix.n = n;
    sys.matrix.row_ptr.assign(n + 1, 0);
    for (int i = 0; i < n; ++i) {
        auto& row = pattern[i];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        sys.matrix.row_ptr[i + 1] = sys.matrix.row_ptr[i] + static_cast<int>(row.size());
    }
    sys.matrix.col.reserve(sys.matrix.row_ptr[n]);
    for (auto& row : pattern) {
        sys.matrix.col.insert(sys.matrix.col.end(), row.begin(), row.end());
        std::vector<int>().swap(row);
    }
    sys.matrix.val.assign(sys.matrix.col.size(), 0.0);
    sys.rhs.assign(n, 0.0);

    for_each_cell_system(space, coeff, quad, [&](int c, const LocalMat& k, const LocalVec& f) {
        auto ents = dofs.entities(c);
        for (int a = 0; a < dofs.nloc; ++a) {
            const int i = dofs.entity_dof[ents[a]];
            if (i < 0) continue;
            sys.rhs[i] += f[a];
            for (int b = 0; b < dofs.nloc; ++b) {
                const int j = dofs.entity_dof[ents[b]];
                if (j >= 0) sys.matrix.val[sys.matrix.find(i, j)] += k(a, b);
            }
        }
    });
    return sys;
}

/// boundary entity values fixed from g and the induced right-hand-side shift
struct DirichletLift {
    std::vector<double> entity_values; ///< boundary entries set, interior zero
    std::vector<double> rhs_shift;     ///< -a_h(lift, phi_i)
};

/// Facet-mean Dirichlet data: boundary facet values become vertex means of g.
template <class Space>
[[nodiscard]] DirichletLift apply_dirichlet_inhomogeneous(const Space& space, const CoefficientField& coeff,
                                                          const QuadratureRule& quad, const ScalarFn& g) {
    const DofMap& dofs = space.dofs();
    if (dofs.bc != BoundaryMode::facet_mean_dirichlet)
        throw InvalidArgument("apply_dirichlet_inhomogeneous: DOF map was not built for facet-mean Dirichlet data");
    DirichletLift lift;
    lift.entity_values.assign(dofs.n_entities(), 0.0);
    lift.rhs_shift.assign(dofs.n_dofs, 0.0);
    std::vector<bool> has_boundary(space.n_cells(), false);
    for (int e = 0; e < dofs.n_entities(); ++e)
        if (dofs.entity_dof[e] < 0) lift.entity_values[e] = space.boundary_value(e, g);
    for (int c = 0; c < space.n_cells(); ++c)
        for (int e : dofs.entities(c))
            if (dofs.entity_dof[e] < 0) has_boundary[c] = true;

    // only cells touching the boundary contribute; reuse the local kernel on a
    // coefficient field without forcing
    CoefficientField no_load{coeff.A, coeff.c, [](const Point&) { return 0.0; }};
    for_each_cell_system(space, no_load, quad, [&](int c, const LocalMat& k, const LocalVec&) {
        if (!has_boundary[c]) return;
        auto ents = dofs.entities(c);
        for (int a = 0; a < dofs.nloc; ++a) {
            const int i = dofs.entity_dof[ents[a]];
            if (i < 0) continue;
            for (int b = 0; b < dofs.nloc; ++b)
                if (dofs.entity_dof[ents[b]] < 0) lift.rhs_shift[i] -= k(a, b) * lift.entity_values[ents[b]];
        }
    });
    return lift;
}

struct SolverOptions {
    double rel_tol = 1e-10;
    int max_iters = -1; ///< -1: 10 * n_dofs
    bool jacobi = false;
};

struct DiscreteSolution {
    std::vector<double> entity_values; ///< interior entries from the solve, boundary from the lift
    SparseSystem system;
    SolveResult solve;
};

/// dofs -> assemble -> (lift) -> CG; returns the full entity coefficient vector
template <class Space>
[[nodiscard]] DiscreteSolution solve_problem(const Space& space, const CoefficientField& coeff, const QuadratureRule& quad,
                                             const SolverOptions& opts = {}, const ScalarFn& boundary = {}) {
    const DofMap& dofs = space.dofs();
    DiscreteSolution sol;
    sol.system = assemble(space, coeff, quad);
    sol.entity_values.assign(dofs.n_entities(), 0.0);
    if (boundary) {
        const DirichletLift lift = apply_dirichlet_inhomogeneous(space, coeff, quad, boundary);
        for (int i = 0; i < dofs.n_dofs; ++i) sol.system.rhs[i] += lift.rhs_shift[i];
        sol.entity_values = lift.entity_values;
    }
    const int max_iters = opts.max_iters > 0 ? opts.max_iters : std::max(10 * dofs.n_dofs, 10);
    sol.solve = solve_cg(sol.system, opts.rel_tol, max_iters, opts.jacobi);
    for (int e = 0; e < dofs.n_entities(); ++e)
        if (dofs.entity_dof[e] >= 0) sol.entity_values[e] = sol.solve.x[dofs.entity_dof[e]];
    return sol;
}

/// scatters a DOF vector into a full entity vector (boundary entities zero)
[[nodiscard]] inline std::vector<double> expand_dofs(const DofMap& dofs, std::span<const double> x) {
    std::vector<double> out(dofs.n_entities(), 0.0);
    for (int e = 0; e < dofs.n_entities(); ++e)
        if (dofs.entity_dof[e] >= 0) out[e] = x[dofs.entity_dof[e]];
    return out;
}

struct JumpReport {
    double max_jump_mean = 0.0;  ///< max_F |<[[v]], 1>_F|
    double max_value_jump = 0.0; ///< max_F |[[v]](mu_F)|
    int worst_facet = -1;
};

/// For piecewise-linear v the facet mean of the jump is |F| times the jump at
/// the (vertex-mean) barycenter.
[[nodiscard]] inline JumpReport jump_mean_check(const Mesh& mesh, std::span<const LocalP1> cells) {
    JumpReport rep;
    for (int f = 0; f < mesh.n_facets(); ++f) {
        const Facet& facet = mesh.facet(f);
        if (facet.is_boundary) continue;
        const double jump = cells[facet.owners[0].cell](facet.barycenter) - cells[facet.owners[1].cell](facet.barycenter);
        const double mean = std::abs(jump) * mesh.facet_measure(f);
        if (mean > rep.max_jump_mean) {
            rep.max_jump_mean = mean;
            rep.worst_facet = f;
        }
        rep.max_value_jump = std::max(rep.max_value_jump, std::abs(jump));
    }
    return rep;
}

[[nodiscard]] inline JumpReport jump_mean_check(const P1ncSpace& space, std::span<const double> vertex_coeffs) {
    const auto cells = space.to_piecewise(vertex_coeffs);
    return jump_mean_check(space.mesh(), cells);
}

} // namespace ncpoly
