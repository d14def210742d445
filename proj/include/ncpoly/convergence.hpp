/// @file convergence.hpp
/// @brief broken-norm errors, rate fitting and the interpolation / Galerkin studies
#pragma once

#include <ncpoly/assembly.hpp>
#include <ncpoly/manufactured.hpp>
#include <ncpoly/simplex_mesh.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace ncpoly {

struct ErrorNorms {
    double l2 = 0.0;        ///< ||u_h - u||_0
    double h1_broken = 0.0; ///< |u_h - u|_{1,h}
};

/// errors of a discrete function given as entity coefficients on `space`
template <class Space>
[[nodiscard]] ErrorNorms compute_errors(const Space& space, std::span<const double> entity_values,
                                        const ManufacturedSolution& exact, const QuadratureRule& quad) {
    detail::check_rule(space, quad);
    const DofMap& dofs = space.dofs();
    typename Space::CellData data;
    PointEval pt;
    LocalVec coeffs(dofs.nloc);
    double l2 = 0.0;
    double h1 = 0.0;
    for (int c = 0; c < space.n_cells(); ++c) {
        space.bind(c, data);
        auto ents = dofs.entities(c);
        for (int a = 0; a < dofs.nloc; ++a) coeffs[a] = entity_values[ents[a]];
        double l2_cell = 0.0;
        double h1_cell = 0.0;
        for (int q = 0; q < quad.size(); ++q) {
            space.eval(data, quad.points[q], pt);
            const double w = quad.weights[q] * pt.det;
            const double e = pt.values.dot(coeffs) - exact.u(pt.x);
            const Vec ge = pt.grads * coeffs - exact.grad(pt.x);
            l2_cell += w * e * e;
            h1_cell += w * ge.squaredNorm();
        }
        l2 += l2_cell;
        h1 += h1_cell;
    }
    return {std::sqrt(l2), std::sqrt(h1)};
}

/// errors of a cellwise-linear function on a cube mesh (e.g. the interpolant)
[[nodiscard]] inline ErrorNorms compute_errors(const Mesh& mesh, std::span<const LocalP1> cells,
                                               const ManufacturedSolution& exact, const QuadratureRule& quad) {
    if (quad.dim != mesh.dim() || quad.domain != ReferenceDomain::cube)
        throw InvalidArgument("compute_errors: cube rule of the mesh dimension required");
    CubeCellMap map;
    Point x;
    double l2 = 0.0;
    double h1 = 0.0;
    for (int c = 0; c < mesh.n_cells(); ++c) {
        map.bind(mesh, c);
        double l2_cell = 0.0;
        double h1_cell = 0.0;
        for (int q = 0; q < quad.size(); ++q) {
            const double w = quad.weights[q] * map.map(quad.points[q], x);
            const double e = cells[c](x) - exact.u(x);
            l2_cell += w * e * e;
            h1_cell += w * (cells[c].grad - exact.grad(x)).squaredNorm();
        }
        l2 += l2_cell;
        h1 += h1_cell;
    }
    return {std::sqrt(l2), std::sqrt(h1)};
}

[[nodiscard]] inline double error_l2(const Mesh& mesh, std::span<const LocalP1> cells, const ManufacturedSolution& exact,
                                     const QuadratureRule& quad) {
    return compute_errors(mesh, cells, exact, quad).l2;
}

[[nodiscard]] inline double error_broken_h1(const Mesh& mesh, std::span<const LocalP1> cells,
                                            const ManufacturedSolution& exact, const QuadratureRule& quad) {
    return compute_errors(mesh, cells, exact, quad).h1_broken;
}

struct RateFit {
    double slope = 0.0;           ///< least-squares slope of log e against log h
    std::vector<double> pairwise; ///< slopes between consecutive points
};

[[nodiscard]] inline RateFit fit_rate(std::span<const double> h, std::span<const double> e) {
    if (h.size() != e.size() || h.size() < 2) throw InvalidArgument("fit_rate: need at least two (h, e) pairs");
    const std::size_t n = h.size();
    double mx = 0.0;
    double my = 0.0;
    std::vector<double> lx(n);
    std::vector<double> ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(h[i] > 0.0) || !(e[i] > 0.0)) throw InvalidArgument("fit_rate: mesh sizes and errors must be positive");
        lx[i] = std::log(h[i]);
        ly[i] = std::log(e[i]);
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (!(sxx > 0.0)) throw InvalidArgument("fit_rate: mesh sizes must not all coincide");
    RateFit fit;
    fit.slope = sxy / sxx;
    for (std::size_t i = 0; i + 1 < n; ++i) fit.pairwise.push_back((ly[i + 1] - ly[i]) / (lx[i + 1] - lx[i]));
    return fit;
}

// ================
// = Mesh families =
// ================

enum class MeshFamily { tensor, shear, perturb2d };

[[nodiscard]] inline std::string_view to_string(MeshFamily f) {
    switch (f) {
    case MeshFamily::tensor: return "tensor";
    case MeshFamily::shear: return "shear";
    case MeshFamily::perturb2d: return "perturb2d";
    }
    return "?";
}

/// fixed shear per dimension: identity with 1/2 on the first superdiagonal
[[nodiscard]] inline Mat default_shear(int dim) {
    Mat a = Mat::Identity(dim, dim);
    for (int i = 0; i + 1 < dim; ++i) a(i, i + 1) = 0.5;
    return a;
}

struct MeshSpec {
    MeshFamily family = MeshFamily::tensor;
    int dim = 2;
    double delta = 0.2;
    std::uint64_t seed = 7;
};

[[nodiscard]] inline Mesh build_family_mesh(const MeshSpec& spec, int n) {
    switch (spec.family) {
    case MeshFamily::tensor: return build_tensor_grid(spec.dim, n);
    case MeshFamily::shear: return apply_affine_map(build_tensor_grid(spec.dim, n), default_shear(spec.dim), Point::Zero(spec.dim));
    case MeshFamily::perturb2d:
        if (spec.dim != 2) throw InvalidArgument("perturb2d meshes are two-dimensional");
        return build_perturbed_quad_mesh_2d(n, spec.delta, spec.seed);
    }
    throw InvalidArgument("unknown mesh family");
}

/// default exact solution for a family: sine product pulled back to the unit box
[[nodiscard]] inline ManufacturedSolution family_solution(const MeshSpec& spec) {
    auto w = sine_product(spec.dim);
    if (spec.family == MeshFamily::shear) return compose_affine(w, default_shear(spec.dim), Point::Zero(spec.dim));
    return w;
}

// ===========
// = Studies =
// ===========

struct ErrorRow {
    double h = 0.0;
    int n = 0; ///< subdivisions per axis
    int n_dofs = 0;
    double err_l2 = 0.0;
    double err_h1_broken = 0.0;
    int iters = 0;
    double seconds = 0.0;
    double oracle_rel_diff = std::numeric_limits<double>::quiet_NaN(); ///< CG vs dense Cholesky, when checked
};

struct ErrorReport {
    std::string study;
    std::vector<ErrorRow> rows;
    bool rates_defined = false;
    double rate_l2 = std::numeric_limits<double>::quiet_NaN();
    double rate_h1 = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> pairwise_l2;
    std::vector<double> pairwise_h1;
};

/// gated windows for the fitted rates
struct RateWindows {
    double l2_low = 1.9, l2_high = 2.1;
    double h1_low = 0.9, h1_high = 1.1;

    [[nodiscard]] bool l2_ok(double r) const { return r >= l2_low && r <= l2_high; }
    [[nodiscard]] bool h1_ok(double r) const { return r >= h1_low && r <= h1_high; }
    [[nodiscard]] bool ok(const ErrorReport& rep) const {
        return rep.rates_defined && l2_ok(rep.rate_l2) && h1_ok(rep.rate_h1);
    }
};

/// Fits the rates over the three finest meshes (the two finest pairs).
inline void fit_report_rates(ErrorReport& rep) {
    const std::size_t n = rep.rows.size();
    rep.rates_defined = false;
    if (n < 2) return;
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& r : rep.rows) worst = std::min({worst, r.err_l2, r.err_h1_broken});
    // errors at round-off level: the exact solution is reproduced, no rate
    if (!(worst > 1e-12)) return;
    const std::size_t first = n >= 3 ? n - 3 : 0;
    std::vector<double> h;
    std::vector<double> el2;
    std::vector<double> eh1;
    for (std::size_t i = first; i < n; ++i) {
        h.push_back(rep.rows[i].h);
        el2.push_back(rep.rows[i].err_l2);
        eh1.push_back(rep.rows[i].err_h1_broken);
    }
    rep.rate_l2 = fit_rate(h, el2).slope;
    rep.rate_h1 = fit_rate(h, eh1).slope;
    std::vector<double> hall;
    std::vector<double> l2all;
    std::vector<double> h1all;
    for (const auto& r : rep.rows) {
        hall.push_back(r.h);
        l2all.push_back(r.err_l2);
        h1all.push_back(r.err_h1_broken);
    }
    rep.pairwise_l2 = fit_rate(hall, l2all).pairwise;
    rep.pairwise_h1 = fit_rate(hall, h1all).pairwise;
    rep.rates_defined = true;
}

namespace detail {
inline void check_sequence(const std::vector<Mesh>& meshes) {
    for (std::size_t i = 1; i < meshes.size(); ++i)
        if (!(meshes[i].h() < meshes[i - 1].h())) throw InvalidArgument("study: mesh sizes must strictly decrease");
}

[[nodiscard]] inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
} // namespace detail

/// I_h u on each mesh (cellwise local interpolation) and its broken errors
[[nodiscard]] inline ErrorReport interpolation_study(const ManufacturedSolution& exact, const std::vector<Mesh>& meshes,
                                                     int quad_k = 4, const std::vector<int>& n_labels = {}) {
    detail::check_sequence(meshes);
    ErrorReport rep;
    rep.study = "interpolation";
    for (std::size_t m = 0; m < meshes.size(); ++m) {
        const Mesh& mesh = meshes[m];
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<LocalP1> cells(mesh.n_cells());
        for (int c = 0; c < mesh.n_cells(); ++c) cells[c] = local_interpolate(exact.u, mesh, c);
        const ErrorNorms e = compute_errors(mesh, cells, exact, tensor_gauss_rule(mesh.dim(), quad_k));
        ErrorRow row;
        row.h = mesh.h();
        row.n = m < n_labels.size() ? n_labels[m] : 0;
        row.n_dofs = mesh.n_interior_vertices();
        row.err_l2 = e.l2;
        row.err_h1_broken = e.h1_broken;
        row.seconds = detail::seconds_since(t0);
        rep.rows.push_back(row);
    }
    fit_report_rates(rep);
    return rep;
}

struct StudyOptions {
    int quad_k = 4;
    SolverOptions solver{1e-10, -1, false};
    int oracle_max_dofs = 0; ///< compare CG with dense Cholesky when n_dofs <= this
    /// called with the mesh index and the assembled system of every mesh
    std::function<void(std::size_t, const SparseSystem&)> on_system;
};

namespace detail {

template <class Space>
void solve_into_row(const Space& space, const CoefficientField& field, const ManufacturedSolution& exact,
                    const QuadratureRule& quad, const StudyOptions& opts, std::size_t index, ErrorRow& row) {
    const DiscreteSolution sol = solve_problem(space, field, quad, opts.solver);
    if (opts.on_system) opts.on_system(index, sol.system);
    row.n_dofs = space.dofs().n_dofs;
    row.iters = sol.solve.iterations;
    const ErrorNorms e = compute_errors(space, sol.entity_values, exact, quad);
    row.err_l2 = e.l2;
    row.err_h1_broken = e.h1_broken;
    if (row.n_dofs > 0 && row.n_dofs <= opts.oracle_max_dofs) {
        const auto dense = solve_dense_cholesky(sol.system);
        double diff = 0.0;
        double norm = 0.0;
        for (int i = 0; i < row.n_dofs; ++i) {
            diff += (dense[i] - sol.solve.x[i]) * (dense[i] - sol.solve.x[i]);
            norm += dense[i] * dense[i];
        }
        row.oracle_rel_diff = norm > 0.0 ? std::sqrt(diff / norm) : std::sqrt(diff);
    }
}

} // namespace detail

/// Galerkin pipeline per mesh: DOFs, assembly, CG, broken errors; rates fitted
/// over the finest meshes. Crouzeix-Raviart runs on the Kuhn subdivision.
[[nodiscard]] inline ErrorReport solve_study(const CoefficientPreset& preset, const ManufacturedSolution& exact,
                                             const std::vector<Mesh>& meshes, ElementKind kind,
                                             const StudyOptions& opts = {}, const std::vector<int>& n_labels = {}) {
    detail::check_sequence(meshes);
    const CoefficientField field = manufactured_problem(preset, exact);
    ErrorReport rep;
    rep.study = "solve";
    for (std::size_t m = 0; m < meshes.size(); ++m) {
        const Mesh& mesh = meshes[m];
        if (!supports_dimension(kind, mesh.dim()))
            throw InvalidArgument("solve_study: element " + std::string(to_string(kind)) + " supports dimensions " +
                                  supported_dimensions(kind));
        const auto t0 = std::chrono::steady_clock::now();
        ErrorRow row;
        row.h = mesh.h();
        row.n = m < n_labels.size() ? n_labels[m] : 0;
        if (kind == ElementKind::p1nc) {
            const P1ncSpace space(mesh);
            detail::solve_into_row(space, field, exact, tensor_gauss_rule(mesh.dim(), opts.quad_k), opts, m, row);
        } else if (kind == ElementKind::crouzeix_raviart) {
            const SimplexMesh simplices = kuhn_subdivide(mesh);
            const CrSpace space(simplices);
            detail::solve_into_row(space, field, exact, simplex_gauss_rule(mesh.dim(), opts.quad_k), opts, m, row);
        } else {
            const CubeBaselineSpace space(mesh, kind);
            detail::solve_into_row(space, field, exact, tensor_gauss_rule(mesh.dim(), opts.quad_k), opts, m, row);
        }
        row.seconds = detail::seconds_since(t0);
        rep.rows.push_back(row);
    }
    fit_report_rates(rep);
    return rep;
}

} // namespace ncpoly
