/// @file mesh.hpp
/// @brief meshes of cells combinatorially equivalent to the d-cube
///
/// Cell corners use binary order: corner index b in [0, 2^d) selects, with
/// bit i, the low (0) or high (1) side along local axis i. Facet slot (j, s)
/// of a cell is the set of corners whose bit j equals s, so the d opposite
/// facet pairs are (j, 0) / (j, 1) for j = 0..d-1.
#pragma once

#include <ncpoly/types.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace ncpoly {

enum class CellKind { parallelotope, general_quad_2d };

/// one (cell, facet slot) reference; axis and side are 0-based, side 0 = minus
struct FacetOwner {
    int cell = -1;
    int axis = -1;
    int side = -1;
};

struct Facet {
    std::array<FacetOwner, 2> owners{};
    int n_owners = 0;
    Point barycenter;
    bool is_boundary = true;
};

/// facet table produced by extract_facets
struct FacetTable {
    int dim = 0;
    std::vector<Facet> facets;
    /// facet vertex ids, 2^{d-1} per facet, ordered as seen from the first owner
    std::vector<int> facet_vertices;
    /// facet id per (cell, 2*axis + side)
    std::vector<int> cell_facets;
};

namespace detail {

[[nodiscard]] inline double max_abs_coord(const Point& p) { return p.cwiseAbs().maxCoeff(); }

/// corners of a d-cube with bit `axis` equal to `side`, increasing order
[[nodiscard]] inline std::vector<int> facet_corners(int dim, int axis, int side) {
    std::vector<int> out;
    out.reserve(pow2(dim - 1));
    for (int b = 0; b < pow2(dim); ++b) {
        if (((b >> axis) & 1) == side) out.push_back(b);
    }
    return out;
}

} // namespace detail

/// Builds the facet table of a cube-cell list. Interior facets are deduplicated
/// by sorted vertex set; facet ids follow first appearance in (cell, slot) order.
/// Throws MeshError if a vertex set is shared by more than two cell slots.
[[nodiscard]] inline FacetTable extract_facets(int dim, std::span<const Point> vertices,
                                               std::span<const int> cells) {
    const int nv_cell = pow2(dim);
    const int nv_facet = pow2(dim - 1);
    const int n_slots = 2 * dim;
    if (cells.size() % nv_cell != 0) throw InvalidArgument("extract_facets: cell array length is not a multiple of 2^d");
    const int n_cells = static_cast<int>(cells.size() / nv_cell);
    const std::size_t n_records = static_cast<std::size_t>(n_cells) * n_slots;

    std::vector<std::vector<int>> corner_sets;
    for (int j = 0; j < dim; ++j)
        for (int s = 0; s < 2; ++s) corner_sets.push_back(detail::facet_corners(dim, j, s));

    std::vector<int> ordered(n_records * nv_facet);
    std::vector<int> keys(n_records * nv_facet);
    for (int c = 0; c < n_cells; ++c) {
        for (int slot = 0; slot < n_slots; ++slot) {
            const std::size_t r = static_cast<std::size_t>(c) * n_slots + slot;
            for (int k = 0; k < nv_facet; ++k)
                ordered[r * nv_facet + k] = cells[static_cast<std::size_t>(c) * nv_cell + corner_sets[slot][k]];
            std::copy_n(ordered.begin() + r * nv_facet, nv_facet, keys.begin() + r * nv_facet);
            std::sort(keys.begin() + r * nv_facet, keys.begin() + (r + 1) * nv_facet);
        }
    }

    auto key_less = [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(keys.begin() + a * nv_facet, keys.begin() + (a + 1) * nv_facet,
                                            keys.begin() + b * nv_facet, keys.begin() + (b + 1) * nv_facet);
    };
    auto key_equal = [&](std::size_t a, std::size_t b) {
        return std::equal(keys.begin() + a * nv_facet, keys.begin() + (a + 1) * nv_facet,
                          keys.begin() + b * nv_facet);
    };

    std::vector<std::size_t> order(n_records);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), key_less);

    // group leader = smallest record index in its group (first appearance)
    std::vector<std::size_t> leader(n_records);
    std::vector<int> group_size(n_records, 0);
    for (std::size_t i = 0; i < n_records;) {
        std::size_t j = i + 1;
        while (j < n_records && key_equal(order[i], order[j])) ++j;
        if (j - i > 2) {
            std::vector<int> bad;
            for (std::size_t k = i; k < j; ++k) bad.push_back(static_cast<int>(order[k] / n_slots));
            throw MeshError("extract_facets: facet shared by more than two cells", bad);
        }
        if (j - i == 2 && order[i] / n_slots == order[i + 1] / n_slots) {
            throw MeshError("extract_facets: cell has two identical facets",
                            {static_cast<int>(order[i] / n_slots)});
        }
        for (std::size_t k = i; k < j; ++k) {
            leader[order[k]] = order[i]; // stable sort keeps the smallest index first
            group_size[order[k]] = static_cast<int>(j - i);
        }
        i = j;
    }

    FacetTable table;
    table.dim = dim;
    table.cell_facets.assign(n_records, -1);
    std::vector<int> id_of_leader(n_records, -1);
    for (std::size_t r = 0; r < n_records; ++r) {
        const int c = static_cast<int>(r / n_slots);
        const int slot = static_cast<int>(r % n_slots);
        const FacetOwner owner{c, slot / 2, slot % 2};
        int id = id_of_leader[leader[r]];
        if (id < 0) {
            id = static_cast<int>(table.facets.size());
            id_of_leader[leader[r]] = id;
            Facet f;
            f.owners[0] = owner;
            f.n_owners = 1;
            f.is_boundary = group_size[r] == 1;
            f.barycenter = Point::Zero(dim);
            for (int k = 0; k < nv_facet; ++k) {
                const int v = ordered[r * nv_facet + k];
                table.facet_vertices.push_back(v);
                f.barycenter += vertices[v];
            }
            f.barycenter /= nv_facet;
            table.facets.push_back(f);
        } else {
            Facet& f = table.facets[id];
            f.owners[f.n_owners++] = owner;
        }
        table.cell_facets[r] = id;
    }
    return table;
}

/// Immutable mesh of cube-like cells with an explicit facet table.
class Mesh {
  public:
    Mesh() = default;

    /// Validates every cell against its kind invariant and builds facets.
    /// @param cells flat list of 2^d vertex ids per cell, binary corner order
    Mesh(int dim, std::vector<Point> vertices, std::vector<int> cells, std::vector<CellKind> kinds)
        : dim_(dim), vertices_(std::move(vertices)), cells_(std::move(cells)), kinds_(std::move(kinds)) {
        if (dim_ < 2 || dim_ > kMaxDim)
            throw InvalidArgument("Mesh: dimension must be in [2, " + std::to_string(kMaxDim) + "]");
        if (cells_.size() % pow2(dim_) != 0) throw InvalidArgument("Mesh: cell array length is not a multiple of 2^d");
        if (kinds_.size() != cells_.size() / pow2(dim_)) throw InvalidArgument("Mesh: one kind per cell required");
        for (const auto& p : vertices_) {
            if (p.size() != dim_) throw InvalidArgument("Mesh: vertex dimension mismatch");
            if (!p.allFinite()) throw InvalidArgument("Mesh: non-finite vertex coordinate");
        }
        validate_cells();
        table_ = extract_facets(dim_, vertices_, cells_);
        vertex_on_boundary_.assign(vertices_.size(), false);
        const int nvf = pow2(dim_ - 1);
        for (int f = 0; f < n_facets(); ++f) {
            if (!table_.facets[f].is_boundary) continue;
            for (int k = 0; k < nvf; ++k) vertex_on_boundary_[table_.facet_vertices[f * nvf + k]] = true;
        }
        h_ = 0.0;
        for (int c = 0; c < n_cells(); ++c) h_ = std::max(h_, cell_diameter(c));
        if (!(h_ > 0.0)) throw MeshError("Mesh: nonpositive mesh size");
    }

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] int n_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
    [[nodiscard]] int n_cells() const noexcept { return static_cast<int>(kinds_.size()); }
    [[nodiscard]] int n_facets() const noexcept { return static_cast<int>(table_.facets.size()); }
    [[nodiscard]] int corners_per_cell() const noexcept { return pow2(dim_); }
    [[nodiscard]] double h() const noexcept { return h_; }

    [[nodiscard]] const Point& vertex(int v) const { return vertices_[v]; }
    [[nodiscard]] const std::vector<Point>& vertices() const noexcept { return vertices_; }
    [[nodiscard]] const std::vector<int>& cell_array() const noexcept { return cells_; }
    [[nodiscard]] std::span<const int> cell_vertices(int c) const {
        return {cells_.data() + static_cast<std::size_t>(c) * corners_per_cell(),
                static_cast<std::size_t>(corners_per_cell())};
    }
    [[nodiscard]] const Point& corner(int c, int b) const { return vertices_[cell_vertices(c)[b]]; }
    [[nodiscard]] CellKind kind(int c) const { return kinds_[c]; }
    [[nodiscard]] const std::vector<CellKind>& kinds() const noexcept { return kinds_; }

    [[nodiscard]] const Facet& facet(int f) const { return table_.facets[f]; }
    [[nodiscard]] std::span<const int> facet_vertices(int f) const {
        const std::size_t nvf = pow2(dim_ - 1);
        return {table_.facet_vertices.data() + f * nvf, nvf};
    }
    /// facet id of slot (axis, side) of cell c
    [[nodiscard]] int cell_facet(int c, int axis, int side) const {
        return table_.cell_facets[static_cast<std::size_t>(c) * 2 * dim_ + 2 * axis + side];
    }
    [[nodiscard]] const Point& facet_barycenter(int c, int axis, int side) const {
        return table_.facets[cell_facet(c, axis, side)].barycenter;
    }
    [[nodiscard]] bool vertex_on_boundary(int v) const { return vertex_on_boundary_[v]; }
    [[nodiscard]] int n_interior_vertices() const {
        return static_cast<int>(std::count(vertex_on_boundary_.begin(), vertex_on_boundary_.end(), false));
    }
    [[nodiscard]] int n_interior_facets() const {
        return static_cast<int>(std::count_if(table_.facets.begin(), table_.facets.end(),
                                              [](const Facet& f) { return !f.is_boundary; }));
    }

    [[nodiscard]] Point cell_center(int c) const {
        Point x = Point::Zero(dim_);
        for (int v : cell_vertices(c)) x += vertices_[v];
        return x / corners_per_cell();
    }

    /// edge vectors e_i = corner(2^i) - corner(0), as matrix columns
    [[nodiscard]] Mat edge_matrix(int c) const {
        Mat e(dim_, dim_);
        for (int i = 0; i < dim_; ++i) e.col(i) = corner(c, pow2(i)) - corner(c, 0);
        return e;
    }

    /// largest distance between two corners of the cell
    [[nodiscard]] double cell_diameter(int c) const {
        const int nc = corners_per_cell();
        double dmax = 0.0;
        if (kinds_[c] == CellKind::parallelotope) {
            for (int b = 0; b < nc / 2; ++b) dmax = std::max(dmax, (corner(c, b) - corner(c, nc - 1 - b)).norm());
        } else {
            for (int a = 0; a < nc; ++a)
                for (int b = a + 1; b < nc; ++b) dmax = std::max(dmax, (corner(c, a) - corner(c, b)).norm());
        }
        return dmax;
    }

    /// d-volume of the cell (exact for parallelotopes and plane quadrilaterals)
    [[nodiscard]] double cell_volume(int c) const {
        if (kinds_[c] == CellKind::parallelotope) return std::abs(edge_matrix(c).determinant());
        const Point& p0 = corner(c, 0);
        const Point& p1 = corner(c, 1);
        const Point& p2 = corner(c, 3);
        const Point& p3 = corner(c, 2);
        return 0.5 * std::abs((p0.x() * p1.y() - p1.x() * p0.y()) + (p1.x() * p2.y() - p2.x() * p1.y()) +
                              (p2.x() * p3.y() - p3.x() * p2.y()) + (p3.x() * p0.y() - p0.x() * p3.y()));
    }

    /// (d-1)-volume of a facet; exact for parallelogram-type facets and segments
    [[nodiscard]] double facet_measure(int f) const {
        auto fv = facet_vertices(f);
        const int k = dim_ - 1;
        Eigen::MatrixXd e(dim_, k);
        for (int i = 0; i < k; ++i) e.col(i) = vertices_[fv[pow2(i)]] - vertices_[fv[0]];
        return std::sqrt(std::abs((e.transpose() * e).determinant()));
    }

  private:
    void validate_cells() const {
        const int nc = corners_per_cell();
        std::vector<int> bad;
        std::string reason;
        for (int c = 0; c < n_cells(); ++c) {
            auto cv = cell_vertices(c);
            std::vector<int> sorted(cv.begin(), cv.end());
            std::sort(sorted.begin(), sorted.end());
            if (sorted.front() < 0 || sorted.back() >= n_vertices() ||
                std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
                throw MeshError("Mesh: cell " + std::to_string(c) + " has invalid or repeated vertex ids", {c});
            }
            if (kinds_[c] == CellKind::parallelotope) {
                const Mat e = edge_matrix(c);
                double scale = 0.0;
                for (int b = 0; b < nc; ++b) scale = std::max(scale, detail::max_abs_coord(corner(c, b)));
                scale = std::max(scale, cell_diameter(c));
                double dev = 0.0;
                for (int b = 0; b < nc; ++b) {
                    Point expect = corner(c, 0);
                    for (int i = 0; i < dim_; ++i)
                        if ((b >> i) & 1) expect += e.col(i);
                    dev = std::max(dev, (expect - corner(c, b)).norm());
                }
                double edge_product = 1.0;
                for (int i = 0; i < dim_; ++i) edge_product *= e.col(i).norm();
                if (dev > 1e-12 * scale) {
                    bad.push_back(c);
                    reason = "not a parallelotope";
                } else if (!(std::abs(e.determinant()) > 1e-12 * edge_product)) {
                    bad.push_back(c);
                    reason = "degenerate edge vectors";
                }
            } else {
                if (dim_ != 2) throw MeshError("Mesh: general_quad_2d cells require dim 2", {c});
                // boundary cycle in binary corner order: 0, 1, 3, 2
                const std::array<int, 4> cycle{0, 1, 3, 2};
                int positive = 0;
                int negative = 0;
                for (int k = 0; k < 4; ++k) {
                    const Point& a = corner(c, cycle[k]);
                    const Point& b = corner(c, cycle[(k + 1) % 4]);
                    const Point& p = corner(c, cycle[(k + 2) % 4]);
                    const double cross = (b - a).x() * (p - b).y() - (b - a).y() * (p - b).x();
                    if (cross > 0.0) ++positive;
                    if (cross < 0.0) ++negative;
                }
                // strictly convex in either orientation (mirror maps flip it)
                if (positive != 4 && negative != 4) {
                    bad.push_back(c);
                    reason = "not strictly convex";
                }
            }
        }
        if (!bad.empty()) {
            throw MeshError("Mesh: cell " + std::to_string(bad.front()) + " is " + reason + " (" +
                                std::to_string(bad.size()) + " offending cells)",
                            bad);
        }
    }

    int dim_ = 0;
    std::vector<Point> vertices_;
    std::vector<int> cells_;
    std::vector<CellKind> kinds_;
    FacetTable table_;
    std::vector<bool> vertex_on_boundary_;
    double h_ = 0.0;
};

// ==============
// = Generators =
// ==============

/// Tensor-product grid of n^d parallelotope cells on the box [low, high].
[[nodiscard]] inline Mesh build_tensor_grid(int dim, int n, const Point& low, const Point& high) {
    if (dim < 2) throw InvalidArgument("build_tensor_grid: dimension must be >= 2");
    if (dim > kMaxDim) throw InvalidArgument("build_tensor_grid: dimension exceeds " + std::to_string(kMaxDim));
    if (n < 1) throw InvalidArgument("build_tensor_grid: n must be >= 1");
    if (low.size() != dim || high.size() != dim) throw InvalidArgument("build_tensor_grid: box dimension mismatch");
    for (int i = 0; i < dim; ++i)
        if (!(low[i] < high[i])) throw InvalidArgument("build_tensor_grid: inverted box along axis " + std::to_string(i));

    const int np = n + 1;
    const int n_vertices = ipow(np, dim);
    std::vector<Point> vertices(n_vertices);
    for (int v = 0; v < n_vertices; ++v) {
        Point x(dim);
        int rem = v;
        for (int i = 0; i < dim; ++i) {
            const int idx = rem % np;
            rem /= np;
            // endpoints land exactly on the box faces
            x[i] = idx == n ? high[i] : low[i] + (high[i] - low[i]) * static_cast<double>(idx) / n;
        }
        vertices[v] = x;
    }
    const int n_cells = ipow(n, dim);
    const int nc = pow2(dim);
    std::vector<int> cells(static_cast<std::size_t>(n_cells) * nc);
    for (int c = 0; c < n_cells; ++c) {
        int rem = c;
        int base = 0;
        int stride = 1;
        std::array<int, kMaxDim> strides{};
        for (int i = 0; i < dim; ++i) {
            base += (rem % n) * stride;
            rem /= n;
            strides[i] = stride;
            stride *= np;
        }
        for (int b = 0; b < nc; ++b) {
            int v = base;
            for (int i = 0; i < dim; ++i)
                if ((b >> i) & 1) v += strides[i];
            cells[static_cast<std::size_t>(c) * nc + b] = v;
        }
    }
    return Mesh(dim, std::move(vertices), std::move(cells), std::vector<CellKind>(n_cells, CellKind::parallelotope));
}

/// unit-box convenience overload
[[nodiscard]] inline Mesh build_tensor_grid(int dim, int n) {
    if (dim < 2 || dim > kMaxDim) throw InvalidArgument("build_tensor_grid: unsupported dimension");
    return build_tensor_grid(dim, n, Point::Zero(dim), Point::Ones(dim));
}

/// Maps every vertex to A v + b; connectivity and facet numbering are unchanged.
[[nodiscard]] inline Mesh apply_affine_map(const Mesh& mesh, const Mat& a, const Point& b) {
    const int d = mesh.dim();
    if (a.rows() != d || a.cols() != d || b.size() != d) throw InvalidArgument("apply_affine_map: dimension mismatch");
    const double det = a.determinant();
    if (!(std::abs(det) > 1e-14 * std::pow(std::max(a.norm(), 1e-300), d)) || !std::isfinite(det)) {
        std::ostringstream msg;
        msg << "apply_affine_map: singular map, det(A) = " << det;
        throw InvalidArgument(msg.str());
    }
    std::vector<Point> vertices;
    vertices.reserve(mesh.n_vertices());
    for (const auto& v : mesh.vertices()) vertices.push_back(a * v + b);
    return Mesh(d, std::move(vertices), mesh.cell_array(), mesh.kinds());
}

/// 2D tensor grid on the unit square with interior vertices displaced by at
/// most delta * spacing (uniform radius and angle). Cells are general quads.
/// Throws MeshError listing the non-convex cells if delta is too large.
[[nodiscard]] inline Mesh build_perturbed_quad_mesh_2d(int n, double delta, std::uint64_t seed) {
    if (!(delta >= 0.0 && delta < 1.0)) throw InvalidArgument("build_perturbed_quad_mesh_2d: delta must be in [0, 1)");
    const Mesh grid = build_tensor_grid(2, n);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double spacing = 1.0 / n;
    const double pi = std::acos(-1.0);
    std::vector<Point> vertices = grid.vertices();
    for (int v = 0; v < grid.n_vertices(); ++v) {
        // draw for every vertex so the stream does not depend on boundary layout
        const double r = delta * spacing * unit(rng);
        const double angle = 2.0 * pi * unit(rng);
        if (grid.vertex_on_boundary(v)) continue;
        vertices[v].x() += r * std::cos(angle);
        vertices[v].y() += r * std::sin(angle);
    }
    return Mesh(2, std::move(vertices), grid.cell_array(), std::vector<CellKind>(grid.n_cells(), CellKind::general_quad_2d));
}

// ==============
// = Validation =
// ==============

struct MidpointReport {
    std::vector<double> per_cell; ///< max_j |c_j - c_1| per cell
    double max_deviation = 0.0;
    double max_relative = 0.0;    ///< max over cells of deviation / cell diameter
};

/// For each cell, the midpoints of the d opposite facet-barycenter pairs must coincide.
[[nodiscard]] inline MidpointReport validate_midpoint_lemma(const Mesh& mesh) {
    MidpointReport rep;
    rep.per_cell.resize(mesh.n_cells());
    for (int c = 0; c < mesh.n_cells(); ++c) {
        const Point c0 = 0.5 * (mesh.facet_barycenter(c, 0, 0) + mesh.facet_barycenter(c, 0, 1));
        double dev = 0.0;
        for (int j = 1; j < mesh.dim(); ++j) {
            const Point cj = 0.5 * (mesh.facet_barycenter(c, j, 0) + mesh.facet_barycenter(c, j, 1));
            dev = std::max(dev, (cj - c0).norm());
        }
        rep.per_cell[c] = dev;
        rep.max_deviation = std::max(rep.max_deviation, dev);
        rep.max_relative = std::max(rep.max_relative, dev / mesh.cell_diameter(c));
    }
    return rep;
}

// ======
// = IO =
// ======

/// header `dim n_vertices n_cells`, vertex lines, then cell lines (binary corner order)
inline void write_mesh(std::ostream& os, const Mesh& mesh) {
    const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
    os << mesh.dim() << ' ' << mesh.n_vertices() << ' ' << mesh.n_cells() << '\n';
    for (const auto& v : mesh.vertices()) {
        for (int i = 0; i < mesh.dim(); ++i) os << (i ? " " : "") << v[i];
        os << '\n';
    }
    for (int c = 0; c < mesh.n_cells(); ++c) {
        auto cv = mesh.cell_vertices(c);
        for (std::size_t k = 0; k < cv.size(); ++k) os << (k ? " " : "") << cv[k];
        os << '\n';
    }
    os.precision(old_precision);
}

/// Reads the text format. Cell kind is inferred: parallelotope when the affine
/// corner identity holds, otherwise general_quad_2d (dim 2 only). Facets are rebuilt.
[[nodiscard]] inline Mesh read_mesh(std::istream& is) {
    int dim = 0;
    int nv = 0;
    int nc = 0;
    if (!(is >> dim >> nv >> nc)) throw InvalidArgument("read_mesh: malformed header");
    if (dim < 2 || dim > kMaxDim || nv < 0 || nc < 0) throw InvalidArgument("read_mesh: header out of range");
    std::vector<Point> vertices(nv, Point(dim));
    for (auto& v : vertices)
        for (int i = 0; i < dim; ++i)
            if (!(is >> v[i])) throw InvalidArgument("read_mesh: truncated vertex list");
    const int ncorner = pow2(dim);
    std::vector<int> cells(static_cast<std::size_t>(nc) * ncorner);
    for (auto& id : cells)
        if (!(is >> id)) throw InvalidArgument("read_mesh: truncated cell list");
    std::vector<CellKind> kinds(nc, CellKind::parallelotope);
    for (int c = 0; c < nc; ++c) {
        Mat e(dim, dim);
        const Point& x0 = vertices.at(cells[static_cast<std::size_t>(c) * ncorner]);
        for (int i = 0; i < dim; ++i) e.col(i) = vertices.at(cells[static_cast<std::size_t>(c) * ncorner + pow2(i)]) - x0;
        double dev = 0.0;
        double scale = 0.0;
        for (int b = 0; b < ncorner; ++b) {
            const Point& xb = vertices.at(cells[static_cast<std::size_t>(c) * ncorner + b]);
            Point expect = x0;
            for (int i = 0; i < dim; ++i)
                if ((b >> i) & 1) expect += e.col(i);
            dev = std::max(dev, (expect - xb).norm());
            scale = std::max({scale, detail::max_abs_coord(xb), (xb - x0).norm()});
        }
        if (dev > 1e-12 * scale && dim == 2) kinds[c] = CellKind::general_quad_2d;
    }
    return Mesh(dim, std::move(vertices), std::move(cells), std::move(kinds));
}

} // namespace ncpoly
