#include <ncpoly/mesh.hpp>

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

using namespace ncpoly;

namespace {

Mat shear(int d) {
    Mat a = Mat::Identity(d, d);
    for (int i = 0; i + 1 < d; ++i) a(i, i + 1) = 0.5;
    return a;
}

// facets of an n^d grid: d directions, (n + 1) planes each, n^{d-1} facets per plane
int expected_facets(int d, int n) { return d * (n + 1) * ipow(n, d - 1); }
int expected_interior_facets(int d, int n) { return d * (n - 1) * ipow(n, d - 1); }

} // namespace

TEST(TensorGrid, SingleSquare) {
    const Mesh m = build_tensor_grid(2, 1);
    EXPECT_EQ(m.n_cells(), 1);
    EXPECT_EQ(m.n_vertices(), 4);
    EXPECT_EQ(m.n_facets(), 4);
    EXPECT_EQ(m.n_interior_facets(), 0);
    EXPECT_EQ(m.n_interior_vertices(), 0);
    // facet slots (axis, side) and their barycenters
    const double expected[4][2] = {{0.0, 0.5}, {1.0, 0.5}, {0.5, 0.0}, {0.5, 1.0}};
    for (int axis = 0; axis < 2; ++axis)
        for (int side = 0; side < 2; ++side) {
            const Point& b = m.facet_barycenter(0, axis, side);
            EXPECT_NEAR(b[0], expected[2 * axis + side][0], 1e-15);
            EXPECT_NEAR(b[1], expected[2 * axis + side][1], 1e-15);
        }
}

TEST(TensorGrid, CubeTwoByTwo) {
    const Mesh m = build_tensor_grid(3, 2);
    EXPECT_EQ(m.n_cells(), 8);
    EXPECT_EQ(m.n_vertices(), 27);
    EXPECT_EQ(m.n_interior_vertices(), 1);
    EXPECT_EQ(m.n_facets(), 36);
    EXPECT_EQ(m.n_interior_facets(), 12);
}

TEST(TensorGrid, FourDimensional) {
    const Mesh m = build_tensor_grid(4, 4);
    EXPECT_EQ(m.n_cells(), 256);
    EXPECT_EQ(m.n_vertices(), 625);
    EXPECT_EQ(m.n_interior_vertices(), 81);
}

TEST(TensorGrid, CountsMatchClosedForms) {
    for (int d = 2; d <= 4; ++d)
        for (int n = 1; n <= (d == 4 ? 3 : 5); ++n) {
            const Mesh m = build_tensor_grid(d, n);
            EXPECT_EQ(m.n_cells(), ipow(n, d));
            EXPECT_EQ(m.n_vertices(), ipow(n + 1, d));
            EXPECT_EQ(m.n_facets(), expected_facets(d, n)) << d << " " << n;
            EXPECT_EQ(m.n_interior_facets(), expected_interior_facets(d, n));
            EXPECT_EQ(m.n_interior_vertices(), ipow(n - 1, d));
            EXPECT_NEAR(m.h(), std::sqrt(static_cast<double>(d)) / n, 1e-14);
        }
}

TEST(TensorGrid, RejectsBadInput) {
    EXPECT_THROW((void)build_tensor_grid(1, 2), InvalidArgument);
    EXPECT_THROW((void)build_tensor_grid(7, 1), InvalidArgument);
    EXPECT_THROW((void)build_tensor_grid(2, 0), InvalidArgument);
    EXPECT_THROW((void)build_tensor_grid(2, 2, Point::Ones(2), Point::Zero(2)), InvalidArgument);
}

TEST(TensorGrid, VolumesSumToBox) {
    Point lo(3), hi(3);
    lo << -1.0, 0.0, 2.0;
    hi << 1.0, 0.5, 5.0;
    const Mesh m = build_tensor_grid(3, 3, lo, hi);
    double v = 0.0;
    for (int c = 0; c < m.n_cells(); ++c) v += m.cell_volume(c);
    EXPECT_NEAR(v, 2.0 * 0.5 * 3.0, 1e-13);
}

// owners of an interior facet see it from opposite sides along the same axis
TEST(Facets, OppositeOwnersAgree) {
    std::vector<Mesh> meshes;
    meshes.push_back(build_tensor_grid(3, 3));
    meshes.push_back(apply_affine_map(build_tensor_grid(3, 3), shear(3), Point::Zero(3)));
    meshes.push_back(build_perturbed_quad_mesh_2d(5, 0.2, 3));
    for (const Mesh& m : meshes) {
        for (int f = 0; f < m.n_facets(); ++f) {
            const Facet& F = m.facet(f);
            EXPECT_EQ(F.is_boundary, F.n_owners == 1);
            for (int k = 0; k < F.n_owners; ++k) {
                const auto& o = F.owners[k];
                EXPECT_EQ(m.cell_facet(o.cell, o.axis, o.side), f);
                EXPECT_LT((m.facet_barycenter(o.cell, o.axis, o.side) - F.barycenter).norm(), 1e-14);
            }
            if (F.n_owners == 2) {
                EXPECT_EQ(F.owners[0].axis, F.owners[1].axis);
                EXPECT_NE(F.owners[0].side, F.owners[1].side);
            }
        }
    }
}

TEST(Facets, BarycenterIsVertexMean) {
    const Mesh m = build_perturbed_quad_mesh_2d(4, 0.25, 11);
    for (int f = 0; f < m.n_facets(); ++f) {
        Point s = Point::Zero(2);
        for (int v : m.facet_vertices(f)) s += m.vertex(v);
        EXPECT_LT((s / 2.0 - m.facet(f).barycenter).norm(), 1e-15);
    }
}

TEST(Facets, DeterministicNumbering) {
    const Mesh a = build_tensor_grid(3, 3);
    const Mesh b = build_tensor_grid(3, 3);
    ASSERT_EQ(a.n_facets(), b.n_facets());
    for (int c = 0; c < a.n_cells(); ++c)
        for (int axis = 0; axis < 3; ++axis)
            for (int side = 0; side < 2; ++side) EXPECT_EQ(a.cell_facet(c, axis, side), b.cell_facet(c, axis, side));
}

TEST(Facets, ThreeOwnersRejected) {
    // three "cells" sharing the facet {0, 1}
    std::vector<Point> v(8, Point::Zero(2));
    for (int i = 0; i < 8; ++i) v[i] << i, i * i;
    const std::vector<int> cells{0, 1, 2, 3, 0, 1, 4, 5, 0, 1, 6, 7};
    try {
        (void)extract_facets(2, v, cells);
        FAIL() << "expected MeshError";
    } catch (const MeshError& e) {
        EXPECT_FALSE(e.cells().empty());
    }
}

TEST(AffineMap, VerticesAreMapped) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Mat a = Mat::Identity(3, 3) * 2.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) += 0.3 * u(rng);
    Point b(3);
    b << 0.1, -0.2, 0.3;
    const Mesh base = build_tensor_grid(3, 2);
    const Mesh m = apply_affine_map(base, a, b);
    for (int v = 0; v < base.n_vertices(); ++v) EXPECT_LT((m.vertex(v) - (a * base.vertex(v) + b)).norm(), 1e-14);
    for (int c = 0; c < m.n_cells(); ++c)
        EXPECT_NEAR(m.cell_volume(c), std::abs(a.determinant()) * base.cell_volume(c), 1e-14);
}

TEST(AffineMap, IdentityKeepsMesh) {
    const Mesh base = build_tensor_grid(2, 3);
    const Mesh m = apply_affine_map(base, Mat::Identity(2, 2), Point::Zero(2));
    for (int v = 0; v < base.n_vertices(); ++v) EXPECT_EQ(m.vertex(v), base.vertex(v));
    EXPECT_EQ(m.n_facets(), base.n_facets());
}

TEST(AffineMap, SingularRejectedWithDeterminant) {
    Mat a(2, 2);
    a << 1.0, 2.0, 2.0, 4.0;
    try {
        (void)apply_affine_map(build_tensor_grid(2, 2), a, Point::Zero(2));
        FAIL() << "expected InvalidArgument";
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("det"), std::string::npos);
    }
}

TEST(MidpointLemma, RandomAffineCells) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int d = 2; d <= 6; ++d) {
        const Mesh unit = build_tensor_grid(d, 1);
        for (int s = 0; s < 50; ++s) {
            Mat a(d, d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) a(i, j) = u(rng) + (i == j ? 2.0 : 0.0);
            Point b(d);
            for (int i = 0; i < d; ++i) b[i] = 5.0 * u(rng);
            const Mesh m = apply_affine_map(unit, a, b);
            const auto rep = validate_midpoint_lemma(m);
            EXPECT_LE(rep.max_relative, 1e-12);
            // the common midpoint is the cell center
            const Point mid = 0.5 * (m.facet_barycenter(0, 0, 0) + m.facet_barycenter(0, 0, 1));
            EXPECT_LT((mid - m.cell_center(0)).norm(), 1e-12 * m.cell_diameter(0));
        }
    }
}

// both pair midpoints are the vertex centroid of any quadrilateral (Varignon)
TEST(MidpointLemma, GeneralQuadsToo) {
    const Mesh m = build_perturbed_quad_mesh_2d(4, 0.3, 1);
    EXPECT_LE(validate_midpoint_lemma(m).max_relative, 1e-12);
}

TEST(MeshValidation, NonParallelotopeRejected) {
    Mesh unit = build_tensor_grid(3, 1);
    auto v = unit.vertices();
    v[7] += Point::Constant(3, 0.1);
    EXPECT_THROW(Mesh(3, v, unit.cell_array(), unit.kinds()), MeshError);
}

TEST(MeshValidation, DegenerateRejected) {
    Mesh unit = build_tensor_grid(2, 1);
    auto v = unit.vertices();
    v[2] = v[0];
    v[3] = v[1];
    EXPECT_THROW(Mesh(2, v, unit.cell_array(), unit.kinds()), MeshError);
}

TEST(PerturbedMesh, ZeroDeltaIsTensorGrid) {
    const Mesh p = build_perturbed_quad_mesh_2d(4, 0.0, 9);
    const Mesh t = build_tensor_grid(2, 4);
    ASSERT_EQ(p.n_vertices(), t.n_vertices());
    for (int v = 0; v < t.n_vertices(); ++v) EXPECT_EQ(p.vertex(v), t.vertex(v));
    EXPECT_EQ(p.kind(0), CellKind::general_quad_2d);
}

TEST(PerturbedMesh, SeedDeterminesMesh) {
    const Mesh a = build_perturbed_quad_mesh_2d(6, 0.2, 7);
    const Mesh b = build_perturbed_quad_mesh_2d(6, 0.2, 7);
    const Mesh c = build_perturbed_quad_mesh_2d(6, 0.2, 8);
    double diff = 0.0;
    for (int v = 0; v < a.n_vertices(); ++v) {
        EXPECT_EQ(a.vertex(v), b.vertex(v));
        diff = std::max(diff, (a.vertex(v) - c.vertex(v)).norm());
    }
    EXPECT_GT(diff, 0.0);
}

TEST(PerturbedMesh, BoundaryStaysOnSquareAndDisplacementBounded) {
    const int n = 8;
    const double delta = 0.25;
    const Mesh p = build_perturbed_quad_mesh_2d(n, delta, 3);
    const Mesh t = build_tensor_grid(2, n);
    for (int v = 0; v < t.n_vertices(); ++v) {
        const double shift = (p.vertex(v) - t.vertex(v)).norm();
        if (t.vertex_on_boundary(v)) EXPECT_EQ(shift, 0.0);
        else EXPECT_LE(shift, delta / n + 1e-15);
    }
    EXPECT_EQ(p.n_cells(), n * n);
}

TEST(PerturbedMesh, LargeDeltaReportsNonConvexCells) {
    bool failed = false;
    for (std::uint64_t seed = 0; seed < 200 && !failed; ++seed) {
        try {
            (void)build_perturbed_quad_mesh_2d(8, 0.5, seed);
        } catch (const MeshError& e) {
            failed = true;
            EXPECT_FALSE(e.cells().empty());
            for (int c : e.cells()) {
                EXPECT_GE(c, 0);
                EXPECT_LT(c, 64);
            }
        }
    }
    EXPECT_TRUE(failed);
    EXPECT_THROW((void)build_perturbed_quad_mesh_2d(4, 1.0, 0), InvalidArgument);
}

TEST(MeshIo, RoundTrip) {
    std::vector<Mesh> meshes;
    meshes.push_back(apply_affine_map(build_tensor_grid(3, 2), shear(3), Point::Ones(3)));
    meshes.push_back(build_perturbed_quad_mesh_2d(4, 0.2, 7));
    for (const Mesh& m : meshes) {
        std::stringstream ss;
        write_mesh(ss, m);
        const Mesh r = read_mesh(ss);
        ASSERT_EQ(r.n_vertices(), m.n_vertices());
        ASSERT_EQ(r.n_cells(), m.n_cells());
        for (int v = 0; v < m.n_vertices(); ++v) EXPECT_EQ(r.vertex(v), m.vertex(v));
        EXPECT_EQ(r.cell_array(), m.cell_array());
        EXPECT_EQ(r.kinds(), m.kinds());
        EXPECT_EQ(r.n_facets(), m.n_facets());
    }
}

TEST(MeshIo, TruncatedInputRejected) {
    std::stringstream ss("2 4 1\n0 0\n1 0\n");
    EXPECT_THROW((void)read_mesh(ss), InvalidArgument);
}
