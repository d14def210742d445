#include <ncpoly/element.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace ncpoly;

namespace {

Mesh random_cell(int d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Mat a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = u(rng) + (i == j ? 2.5 : 0.0);
    Point b(d);
    for (int i = 0; i < d; ++i) b[i] = 4.0 * u(rng);
    return apply_affine_map(build_tensor_grid(d, 1), a, b);
}

LocalP1 random_linear(int d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    LocalP1 p{u(rng), Vec(d)};
    for (int i = 0; i < d; ++i) p.grad[i] = u(rng);
    return p;
}

} // namespace

TEST(FacetValues, Constraints) {
    const FacetValues ok(2, {0.0, 1.0, 0.5, 0.5});
    EXPECT_NEAR(check_constraints(ok)[0], 0.0, 1e-15);
    EXPECT_TRUE(is_admissible(ok));
    const FacetValues bad(2, {0.0, 1.0, 0.0, 0.0});
    EXPECT_NEAR(check_constraints(bad)[0], -1.0, 1e-15);
    EXPECT_FALSE(is_admissible(bad));
    EXPECT_THROW(FacetValues(2, {1.0, 2.0, 3.0}), InvalidArgument);
}

TEST(LocalSolve, UnitSquareCoordinate) {
    const Mesh m = build_tensor_grid(2, 1);
    const LocalP1 p = solve_local_from_facet_values(m, 0, FacetValues(2, {0.0, 1.0, 0.5, 0.5}));
    EXPECT_NEAR(p.a0, 0.0, 1e-14);
    EXPECT_NEAR(p.grad[0], 1.0, 1e-14);
    EXPECT_NEAR(p.grad[1], 0.0, 1e-14);
}

TEST(LocalSolve, ConstantValues) {
    std::mt19937_64 rng(1);
    for (int d = 2; d <= 6; ++d) {
        const Mesh m = random_cell(d, rng);
        const LocalP1 p = solve_local_from_facet_values(m, 0, FacetValues(d, std::vector<double>(2 * d, -2.5)));
        EXPECT_NEAR(p.a0, -2.5, 1e-12);
        EXPECT_LT(p.grad.norm(), 1e-12);
    }
}

TEST(LocalSolve, RoundTripAllDimensions) {
    std::mt19937_64 rng(2);
    for (int d = 2; d <= 6; ++d)
        for (int s = 0; s < 200; ++s) {
            const Mesh m = random_cell(d, rng);
            const LocalP1 p = random_linear(d, rng);
            const FacetValues fv = facet_values_of(p, m, 0);
            for (double r : check_constraints(fv)) EXPECT_LE(std::abs(r), 1e-11);
            const LocalP1 q = solve_local_from_facet_values(m, 0, fv);
            const FacetValues back = facet_values_of(q, m, 0);
            for (int k = 0; k < 2 * d; ++k) EXPECT_NEAR(back.values[k], fv.values[k], 1e-10 * fv.scale());
            EXPECT_NEAR(q.a0, p.a0, 1e-9);
            EXPECT_LT((q.grad - p.grad).norm(), 1e-9);
        }
}

TEST(LocalSolve, InadmissibleRejectedWithResiduals) {
    std::mt19937_64 rng(3);
    for (int d = 2; d <= 6; ++d) {
        const Mesh m = random_cell(d, rng);
        FacetValues fv = facet_values_of(random_linear(d, rng), m, 0);
        fv.at(d - 1, 0) += 1e-5;
        try {
            (void)solve_local_from_facet_values(m, 0, fv);
            FAIL() << "expected ConstraintViolation in d=" << d;
        } catch (const ConstraintViolation& e) {
            ASSERT_EQ(static_cast<int>(e.residuals().size()), d - 1);
            EXPECT_NEAR(e.residuals().back(), 1e-5, 1e-11);
        }
    }
}

TEST(LocalSolve, DimensionMismatch) {
    const Mesh m = build_tensor_grid(3, 1);
    EXPECT_THROW((void)solve_local_from_facet_values(m, 0, FacetValues(2)), InvalidArgument);
}

TEST(CornerBasis, FacetValuesAreIncidence) {
    std::mt19937_64 rng(4);
    for (int d = 2; d <= 5; ++d) {
        const Mesh m = random_cell(d, rng);
        const auto basis = corner_basis(m, 0);
        ASSERT_EQ(static_cast<int>(basis.size()), pow2(d));
        for (int b = 0; b < pow2(d); ++b) {
            const FacetValues fv = facet_values_of(basis[b], m, 0);
            for (int j = 0; j < d; ++j)
                for (int s = 0; s < 2; ++s)
                    EXPECT_NEAR(fv.at(j, s), ((b >> j) & 1) == s ? 1.0 : 0.0, 1e-12);
        }
    }
}

// the corner functions sum to 2^{d-1} (each facet contains half the corners)
TEST(CornerBasis, PartitionOfConstant) {
    std::mt19937_64 rng(5);
    const Mesh m = random_cell(4, rng);
    const auto basis = corner_basis(m, 0);
    LocalP1 sum{0.0, Vec::Zero(4)};
    for (const auto& p : basis) {
        sum.a0 += p.a0;
        sum.grad += p.grad;
    }
    EXPECT_NEAR(sum.a0, 8.0, 1e-12);
    EXPECT_LT(sum.grad.norm(), 1e-12);
}

TEST(Interpolation, ReproducesLinear) {
    std::vector<Mesh> meshes;
    meshes.push_back(build_tensor_grid(2, 3));
    Mat a(2, 2);
    a << 1.0, 0.5, 0.0, 1.0;
    meshes.push_back(apply_affine_map(build_tensor_grid(2, 3), a, Point::Zero(2)));
    meshes.push_back(build_perturbed_quad_mesh_2d(4, 0.2, 7));
    Vec g(2);
    g << 1.0, -2.0;
    const LocalP1 u{3.0, g};
    for (const Mesh& m : meshes)
        for (int c = 0; c < m.n_cells(); ++c) {
            const LocalP1 p = local_interpolate(u, m, c);
            EXPECT_NEAR(p.a0, 3.0, 1e-12);
            EXPECT_LT((p.grad - g).norm(), 1e-12);
        }
}

TEST(Interpolation, Idempotent) {
    std::mt19937_64 rng(6);
    const Mesh m = random_cell(3, rng);
    auto u = [](const Point& x) { return std::exp(x[0]) * std::cos(x[1]) + x[2] * x[2]; };
    const LocalP1 p = local_interpolate(u, m, 0);
    const LocalP1 q = local_interpolate(p, m, 0);
    EXPECT_NEAR(q.a0, p.a0, 1e-12);
    EXPECT_LT((q.grad - p.grad).norm(), 1e-12);
}

// sin(pi x) on the cell [0, 1/2] x [0, 1/2]: facet values are vertex means of u,
// fitted here by least squares over all four barycenters
TEST(Interpolation, SineOnSmallCellMatchesIndependentFit) {
    const Mesh m = build_tensor_grid(2, 1, Point::Zero(2), Point::Constant(2, 0.5));
    const double pi = std::acos(-1.0);
    auto u = [&](const Point& x) { return std::sin(pi * x[0]); };
    const double s = std::sin(pi * 0.5); // u at x = 1/2
    // vertex means: facet x=0 -> 0, x=1/2 -> s, y=0 -> s/2, y=1/2 -> s/2
    const double vals[4] = {0.0, s, 0.5 * s, 0.5 * s};
    const double bary[4][2] = {{0.0, 0.25}, {0.5, 0.25}, {0.25, 0.0}, {0.25, 0.5}};
    Eigen::Matrix<double, 4, 3> a;
    Eigen::Vector4d rhs;
    for (int k = 0; k < 4; ++k) {
        a.row(k) << 1.0, bary[k][0], bary[k][1];
        rhs[k] = vals[k];
    }
    const Eigen::Vector3d fit = a.colPivHouseholderQr().solve(rhs);
    const LocalP1 p = local_interpolate(u, m, 0);
    EXPECT_NEAR(p.a0, fit[0], 1e-13);
    EXPECT_NEAR(p.grad[0], fit[1], 1e-13);
    EXPECT_NEAR(p.grad[1], fit[2], 1e-13);
    EXPECT_NEAR(p.grad[0], 2.0, 1e-13);
}

TEST(Interpolation, VertexMeanValuesAdmissibleOnQuads) {
    const Mesh m = build_perturbed_quad_mesh_2d(3, 0.3, 2);
    auto u = [](const Point& x) { return std::sin(3.0 * x[0]) * x[1] + 1.0; };
    for (int c = 0; c < m.n_cells(); ++c) EXPECT_TRUE(is_admissible(vertex_mean_facet_values(u, m, c), 1e-13));
}
