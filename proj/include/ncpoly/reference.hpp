/// @file reference.hpp
/// @brief reference-element bases: P1-NC on the cube, Crouzeix-Raviart on the
/// simplex, rotated Q1 (point and facet-mean DOFs) and DSSY on the cube
#pragma once

#include <ncpoly/quadrature.hpp>
#include <ncpoly/types.hpp>

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ncpoly {

enum class ElementKind { p1nc, crouzeix_raviart, rotated_q1_point, rotated_q1_integral, dssy1, dssy2 };

inline constexpr std::array<ElementKind, 6> kAllElementKinds{
    ElementKind::p1nc,          ElementKind::crouzeix_raviart, ElementKind::rotated_q1_point,
    ElementKind::rotated_q1_integral, ElementKind::dssy1,      ElementKind::dssy2};

[[nodiscard]] inline std::string_view to_string(ElementKind k) {
    switch (k) {
    case ElementKind::p1nc: return "p1nc";
    case ElementKind::crouzeix_raviart: return "cr";
    case ElementKind::rotated_q1_point: return "rq1-point";
    case ElementKind::rotated_q1_integral: return "rq1-integral";
    case ElementKind::dssy1: return "dssy1";
    case ElementKind::dssy2: return "dssy2";
    }
    return "?";
}

[[nodiscard]] inline std::optional<ElementKind> parse_element_kind(std::string_view s) {
    for (auto k : kAllElementKinds)
        if (to_string(k) == s) return k;
    return std::nullopt;
}

[[nodiscard]] inline bool is_cube_kind(ElementKind k) { return k != ElementKind::crouzeix_raviart; }

/// rotated-Q1 / DSSY families are defined for d in {2, 3} only
[[nodiscard]] inline bool supports_dimension(ElementKind k, int d) {
    switch (k) {
    case ElementKind::p1nc:
    case ElementKind::crouzeix_raviart: return d >= 2 && d <= kMaxDim;
    default: return d == 2 || d == 3;
    }
}

[[nodiscard]] inline std::string supported_dimensions(ElementKind k) {
    return supports_dimension(k, 4) ? "2.." + std::to_string(kMaxDim) : "2, 3";
}

/// theta_0(t) = t^2, theta_1(t) = t^2 - 5/3 t^4, theta_2(t) = t^2 - 25/6 t^4 + 7/2 t^6
[[nodiscard]] inline double dssy_theta(int ell, double t) {
    const double t2 = t * t;
    switch (ell) {
    case 0: return t2;
    case 1: return t2 - 5.0 / 3.0 * t2 * t2;
    case 2: return t2 - 25.0 / 6.0 * t2 * t2 + 3.5 * t2 * t2 * t2;
    default: throw InvalidArgument("dssy_theta: ell must be 0, 1 or 2");
    }
}

[[nodiscard]] inline double dssy_theta_derivative(int ell, double t) {
    const double t2 = t * t;
    switch (ell) {
    case 0: return 2.0 * t;
    case 1: return 2.0 * t - 20.0 / 3.0 * t2 * t;
    case 2: return 2.0 * t - 50.0 / 3.0 * t2 * t + 21.0 * t2 * t2 * t;
    default: throw InvalidArgument("dssy_theta_derivative: ell must be 0, 1 or 2");
    }
}

/// Shape functions of one reference element, dual to its DOF functionals.
///
/// The space is spanned by "generators" (1, x_1..x_d and, for the rotated
/// families, theta(x_i) - theta(x_d)); shape function j is sum_k C(k, j) g_k
/// with C the inverse of the DOF-generator matrix.
///
/// DOF ordering: cube kinds use facet slot 2*axis + side with barycenter
/// (2*side - 1) e_axis; P1-NC keeps the d minus-side barycenters plus
/// mu_{1,+}; Crouzeix-Raviart uses the facet opposite vertex i, with vertex 0
/// at the origin and vertex i at e_i.
class ReferenceBasis {
  public:
    ReferenceBasis(ElementKind kind, int dim) : kind_(kind), dim_(dim) {
        if (!supports_dimension(kind, dim))
            throw InvalidArgument("reference_basis: element " + std::string(to_string(kind)) +
                                  " supports dimensions " + supported_dimensions(kind));
        switch (kind) {
        case ElementKind::p1nc:
        case ElementKind::crouzeix_raviart: n_ = dim + 1; break;
        default: n_ = 2 * dim; break;
        }
        Eigen::MatrixXd dofmat(n_, n_);
        for (int i = 0; i < n_; ++i)
            for (int k = 0; k < n_; ++k) dofmat(i, k) = dof(i, [&](const Point& x) { return generator_value(k, x); });
        Eigen::FullPivLU<Eigen::MatrixXd> lu(dofmat);
        if (!lu.isInvertible()) throw SingularSystem("reference_basis: DOFs are not unisolvent");
        coeffs_ = lu.inverse();
    }

    [[nodiscard]] ElementKind kind() const noexcept { return kind_; }
    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] int size() const noexcept { return n_; }
    [[nodiscard]] ReferenceDomain domain() const noexcept {
        return kind_ == ElementKind::crouzeix_raviart ? ReferenceDomain::simplex : ReferenceDomain::cube;
    }
    [[nodiscard]] const Eigen::MatrixXd& coefficients() const noexcept { return coeffs_; }

    [[nodiscard]] int theta_order() const {
        switch (kind_) {
        case ElementKind::dssy1: return 1;
        case ElementKind::dssy2: return 2;
        default: return 0;
        }
    }

    [[nodiscard]] int n_facets() const { return kind_ == ElementKind::crouzeix_raviart ? dim_ + 1 : 2 * dim_; }

    /// k-th generator of the local polynomial space
    [[nodiscard]] double generator_value(int k, const Point& x) const {
        if (k == 0) return 1.0;
        if (k <= dim_) return x[k - 1];
        const int ell = theta_order();
        return dssy_theta(ell, x[k - dim_ - 1]) - dssy_theta(ell, x[dim_ - 1]);
    }

    [[nodiscard]] Vec generator_gradient(int k, const Point& x) const {
        Vec g = Vec::Zero(dim_);
        if (k == 0) return g;
        if (k <= dim_) {
            g[k - 1] = 1.0;
            return g;
        }
        const int ell = theta_order();
        g[k - dim_ - 1] = dssy_theta_derivative(ell, x[k - dim_ - 1]);
        g[dim_ - 1] = -dssy_theta_derivative(ell, x[dim_ - 1]);
        return g;
    }

    [[nodiscard]] double value(int j, const Point& x) const {
        double v = 0.0;
        for (int k = 0; k < n_; ++k) v += coeffs_(k, j) * generator_value(k, x);
        return v;
    }

    [[nodiscard]] Vec gradient(int j, const Point& x) const {
        Vec g = Vec::Zero(dim_);
        for (int k = 0; k < n_; ++k) g += coeffs_(k, j) * generator_gradient(k, x);
        return g;
    }

    /// barycenter of reference facet i (facet numbering of this element's geometry)
    [[nodiscard]] Point facet_barycenter(int i) const {
        Point x = Point::Zero(dim_);
        if (kind_ == ElementKind::crouzeix_raviart) {
            // facet opposite vertex i
            for (int k = 0; k < dim_; ++k) x[k] = (i == 0 || k != i - 1) ? 1.0 / dim_ : 0.0;
            if (i > 0) x[i - 1] = 0.0;
            return x;
        }
        x[i / 2] = (i % 2 == 0) ? -1.0 : 1.0;
        return x;
    }

    /// (1/|F_i|) int_{F_i} u over reference cube facet i
    template <class Fn>
    [[nodiscard]] double facet_mean(int i, Fn&& u) const {
        if (kind_ == ElementKind::crouzeix_raviart) throw InvalidArgument("facet_mean: cube facets only");
        const int axis = i / 2;
        const double fixed = (i % 2 == 0) ? -1.0 : 1.0;
        const QuadratureRule q = tensor_gauss_rule(dim_ - 1, 5);
        double sum = 0.0;
        for (int p = 0; p < q.size(); ++p) {
            Point x(dim_);
            for (int k = 0, m = 0; k < dim_; ++k) x[k] = (k == axis) ? fixed : q.points[p][m++];
            sum += q.weights[p] * u(x);
        }
        return sum / pow2(dim_ - 1);
    }

    /// DOF functional i applied to u
    template <class Fn>
    [[nodiscard]] double dof(int i, Fn&& u) const {
        switch (kind_) {
        case ElementKind::rotated_q1_integral: return facet_mean(i, u);
        case ElementKind::p1nc: {
            Point x = Point::Zero(dim_);
            if (i < dim_) x[i] = -1.0;
            else x[0] = 1.0;
            return u(x);
        }
        default: return u(facet_barycenter(i));
        }
    }

  private:
    ElementKind kind_;
    int dim_;
    int n_ = 0;
    Eigen::MatrixXd coeffs_;
};

[[nodiscard]] inline ReferenceBasis reference_basis(ElementKind kind, int dim) { return ReferenceBasis(kind, dim); }

/// max_{i,j} |DOF_i(phi_j) - delta_ij|
[[nodiscard]] inline double duality_error(const ReferenceBasis& basis) {
    double err = 0.0;
    for (int i = 0; i < basis.size(); ++i)
        for (int j = 0; j < basis.size(); ++j) {
            const double v = basis.dof(i, [&](const Point& x) { return basis.value(j, x); });
            err = std::max(err, std::abs(v - (i == j ? 1.0 : 0.0)));
        }
    return err;
}

/// Mean-value-property deviations |g(xi_j) - mean_{F_j} g|.
/// Rows are the space generators (the property holds for the whole space iff it
/// holds for a spanning set); shape-function deviations are reported alongside.
struct MvpReport {
    Eigen::MatrixXd generator_deviation; ///< n_generators x 2d
    Eigen::MatrixXd basis_deviation;     ///< n_shape_functions x 2d
    double max_deviation = 0.0;          ///< over generators
};

[[nodiscard]] inline MvpReport mvp_check(ElementKind kind, int dim) {
    if (!is_cube_kind(kind)) throw InvalidArgument("mvp_check: cube-based element kinds only");
    const ReferenceBasis basis(kind, dim);
    const int nf = 2 * dim;
    MvpReport rep;
    rep.generator_deviation.resize(basis.size(), nf);
    rep.basis_deviation.resize(basis.size(), nf);
    for (int k = 0; k < basis.size(); ++k) {
        for (int f = 0; f < nf; ++f) {
            auto g = [&](const Point& x) { return basis.generator_value(k, x); };
            auto phi = [&](const Point& x) { return basis.value(k, x); };
            const Point xi = basis.facet_barycenter(f);
            rep.generator_deviation(k, f) = std::abs(g(xi) - basis.facet_mean(f, g));
            rep.basis_deviation(k, f) = std::abs(phi(xi) - basis.facet_mean(f, phi));
        }
    }
    rep.max_deviation = rep.generator_deviation.maxCoeff();
    return rep;
}

} // namespace ncpoly
