/// @file fe_space.hpp
/// @brief global DOF maps and the per-cell basis evaluators used by assembly
///
/// Each space exposes the same small interface:
///   - `dofs()`, `n_cells()`, `dim()`, `domain()` (reference integration domain)
///   - `bind(c, data)` caches per-cell geometry and local basis
///   - `eval(data, xi, pt)` fills physical point, |det J| and basis values/gradients
///   - `boundary_value(entity, g)` the lifted coefficient of a boundary entity
#pragma once

#include <ncpoly/element.hpp>
#include <ncpoly/quadrature.hpp>
#include <ncpoly/reference.hpp>
#include <ncpoly/simplex_mesh.hpp>

#include <functional>
#include <string>
#include <vector>

namespace ncpoly {

inline constexpr int kMaxLocal = 64; // 2^kMaxDim corner functions

using LocalVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxLocal, 1>;
using LocalGrad = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim + 1, kMaxLocal>;
using LocalMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxLocal, kMaxLocal>;

using ScalarFn = std::function<double(const Point&)>;

enum class DofMode { vertex_basis_p1nc, facet_basis };
enum class BoundaryMode { homogeneous_dirichlet, facet_mean_dirichlet };

/// Global numbering of the active entities (interior vertices for P1-NC,
/// interior facets for the baselines). Boundary entities map to -1.
struct DofMap {
    DofMode mode = DofMode::vertex_basis_p1nc;
    BoundaryMode bc = BoundaryMode::homogeneous_dirichlet;
    ElementKind kind = ElementKind::p1nc;
    int n_dofs = 0;
    int nloc = 0;
    std::vector<int> entity_dof;
    std::vector<int> cell_entities;
    std::string warning;

    [[nodiscard]] int n_entities() const noexcept { return static_cast<int>(entity_dof.size()); }
    [[nodiscard]] std::span<const int> entities(int c) const {
        return {cell_entities.data() + static_cast<std::size_t>(c) * nloc, static_cast<std::size_t>(nloc)};
    }
};

namespace detail {
inline void finish_dof_map(DofMap& map) {
    if (map.n_dofs == 0) map.warning = "mesh has no interior entities: the discrete space is {0}";
}
} // namespace detail

/// DOF map on a cube-cell mesh: p1nc (vertex basis) or rotated-Q1/DSSY (facet basis)
[[nodiscard]] inline DofMap build_dof_map(const Mesh& mesh, ElementKind kind,
                                          BoundaryMode bc = BoundaryMode::homogeneous_dirichlet) {
    if (!is_cube_kind(kind)) throw InvalidArgument("build_dof_map: element " + std::string(to_string(kind)) + " needs a simplex mesh");
    if (!supports_dimension(kind, mesh.dim()))
        throw InvalidArgument("build_dof_map: element " + std::string(to_string(kind)) + " supports dimensions " +
                              supported_dimensions(kind));
    DofMap map;
    map.kind = kind;
    map.bc = bc;
    if (kind == ElementKind::p1nc) {
        map.mode = DofMode::vertex_basis_p1nc;
        map.nloc = mesh.corners_per_cell();
        map.entity_dof.assign(mesh.n_vertices(), -1);
        for (int v = 0; v < mesh.n_vertices(); ++v)
            if (!mesh.vertex_on_boundary(v)) map.entity_dof[v] = map.n_dofs++;
        map.cell_entities = mesh.cell_array();
    } else {
        for (int c = 0; c < mesh.n_cells(); ++c)
            if (mesh.kind(c) != CellKind::parallelotope)
                throw InvalidArgument("build_dof_map: baseline elements need parallelotope cells (cell " + std::to_string(c) + ")");
        map.mode = DofMode::facet_basis;
        map.nloc = 2 * mesh.dim();
        map.entity_dof.assign(mesh.n_facets(), -1);
        for (int f = 0; f < mesh.n_facets(); ++f)
            if (!mesh.facet(f).is_boundary) map.entity_dof[f] = map.n_dofs++;
        map.cell_entities.reserve(static_cast<std::size_t>(mesh.n_cells()) * map.nloc);
        for (int c = 0; c < mesh.n_cells(); ++c)
            for (int j = 0; j < mesh.dim(); ++j)
                for (int s = 0; s < 2; ++s) map.cell_entities.push_back(mesh.cell_facet(c, j, s));
    }
    detail::finish_dof_map(map);
    return map;
}

/// Crouzeix-Raviart DOF map: one DOF per interior facet of the simplex mesh
[[nodiscard]] inline DofMap build_dof_map(const SimplexMesh& mesh, BoundaryMode bc = BoundaryMode::homogeneous_dirichlet) {
    DofMap map;
    map.kind = ElementKind::crouzeix_raviart;
    map.mode = DofMode::facet_basis;
    map.bc = bc;
    map.nloc = mesh.dim() + 1;
    map.entity_dof.assign(mesh.n_facets(), -1);
    for (int f = 0; f < mesh.n_facets(); ++f)
        if (!mesh.facet(f).is_boundary) map.entity_dof[f] = map.n_dofs++;
    for (int c = 0; c < mesh.n_cells(); ++c)
        for (int i = 0; i <= mesh.dim(); ++i) map.cell_entities.push_back(mesh.cell_facet(c, i));
    detail::finish_dof_map(map);
    return map;
}

/// basis data at one quadrature point
struct PointEval {
    Point x;
    double det = 0.0; ///< |det J| of the reference-to-physical map
    LocalVec values;
    LocalGrad grads;  ///< d x nloc
};

/// Reference cube [-1,1]^d to a cube-like cell: affine for parallelotopes,
/// multilinear (bilinear) otherwise.
class CubeCellMap {
  public:
    void bind(const Mesh& mesh, int c) {
        cell_ = c;
        dim_ = mesh.dim();
        affine_ = mesh.kind(c) == CellKind::parallelotope;
        corners_.resize(mesh.corners_per_cell());
        for (int b = 0; b < mesh.corners_per_cell(); ++b) corners_[b] = mesh.corner(c, b);
        if (affine_) {
            jac_ = 0.5 * mesh.edge_matrix(c);
            det_ = std::abs(jac_.determinant());
            origin_ = corners_[0];
        } else {
            Point x;
            Mat j;
            multilinear(Point::Zero(dim_), x, j);
            orientation_ = j.determinant() > 0.0 ? 1.0 : -1.0;
        }
    }

    [[nodiscard]] bool affine() const noexcept { return affine_; }

    /// physical point and |det J| at xi; throws DegenerateCell on sign change
    double map(const Point& xi, Point& x) const {
        if (affine_) {
            x = origin_ + jac_ * (xi + Point::Ones(dim_));
            return det_;
        }
        Mat j;
        multilinear(xi, x, j);
        const double det = j.determinant() * orientation_;
        if (!(det > 0.0)) throw DegenerateCell("nonpositive Jacobian determinant in cell " + std::to_string(cell_), cell_);
        return det;
    }

    [[nodiscard]] const Mat& affine_jacobian() const noexcept { return jac_; }

  private:
    void multilinear(const Point& xi, Point& x, Mat& j) const {
        x = Point::Zero(dim_);
        j = Mat::Zero(dim_, dim_);
        for (int b = 0; b < static_cast<int>(corners_.size()); ++b) {
            double n = 1.0;
            Vec dn = Vec::Ones(dim_);
            for (int i = 0; i < dim_; ++i) {
                const double s = ((b >> i) & 1) ? 1.0 : -1.0;
                const double fi = 0.5 * (1.0 + s * xi[i]);
                n *= fi;
                for (int k = 0; k < dim_; ++k) dn[k] *= (k == i) ? 0.5 * s : fi;
            }
            x += n * corners_[b];
            j += corners_[b] * dn.transpose();
        }
    }

    int cell_ = -1;
    int dim_ = 0;
    bool affine_ = true;
    std::vector<Point> corners_;
    Point origin_;
    Mat jac_;
    double det_ = 0.0;
    double orientation_ = 1.0;
};

/// P1-nonconforming space with the vertex basis
class P1ncSpace {
  public:
    static constexpr bool constant_gradients = true;

    struct CellData {
        CubeCellMap map;
        std::vector<LocalP1> basis;
        Point center;
    };

    [[nodiscard]] static const std::vector<LocalP1>& cell_basis(const CellData& data) { return data.basis; }
    [[nodiscard]] static const Point& cell_center(const CellData& data) { return data.center; }

    P1ncSpace(const Mesh& mesh, BoundaryMode bc = BoundaryMode::homogeneous_dirichlet)
        : mesh_(&mesh), dofs_(build_dof_map(mesh, ElementKind::p1nc, bc)) {}

    [[nodiscard]] const Mesh& mesh() const noexcept { return *mesh_; }
    [[nodiscard]] const DofMap& dofs() const noexcept { return dofs_; }
    [[nodiscard]] int n_cells() const noexcept { return mesh_->n_cells(); }
    [[nodiscard]] int dim() const noexcept { return mesh_->dim(); }
    [[nodiscard]] ReferenceDomain domain() const noexcept { return ReferenceDomain::cube; }

    void bind(int c, CellData& data) const {
        data.map.bind(*mesh_, c);
        data.basis = corner_basis(*mesh_, c);
        data.center = mesh_->cell_center(c);
    }

    void eval(const CellData& data, const Point& xi, PointEval& pt) const {
        pt.det = data.map.map(xi, pt.x);
        const int n = static_cast<int>(data.basis.size());
        pt.values.resize(n);
        pt.grads.resize(dim(), n);
        for (int b = 0; b < n; ++b) {
            pt.values[b] = data.basis[b](pt.x);
            pt.grads.col(b) = data.basis[b].grad;
        }
    }

    /// a boundary vertex carries g(v) / 2^{d-1}, so each boundary facet value is
    /// the vertex mean of g over that facet
    [[nodiscard]] double boundary_value(int vertex, const ScalarFn& g) const {
        return g(mesh_->vertex(vertex)) / pow2(dim() - 1);
    }

    /// per-cell linear functions of a full entity (vertex) coefficient vector
    [[nodiscard]] std::vector<LocalP1> to_piecewise(std::span<const double> vertex_coeffs) const {
        std::vector<LocalP1> out(n_cells());
        for (int c = 0; c < n_cells(); ++c) {
            const auto basis = corner_basis(*mesh_, c);
            auto cv = mesh_->cell_vertices(c);
            LocalP1 p{0.0, Vec::Zero(dim())};
            for (std::size_t b = 0; b < basis.size(); ++b) {
                p.a0 += vertex_coeffs[cv[b]] * basis[b].a0;
                p.grad += vertex_coeffs[cv[b]] * basis[b].grad;
            }
            out[c] = p;
        }
        return out;
    }

  private:
    const Mesh* mesh_;
    DofMap dofs_;
};

/// Parametric rotated-Q1 / DSSY space on parallelotope cells
class CubeBaselineSpace {
  public:
    static constexpr bool constant_gradients = false;

    struct CellData {
        CubeCellMap map;
        Mat inv_jac_t;
    };

    CubeBaselineSpace(const Mesh& mesh, ElementKind kind, BoundaryMode bc = BoundaryMode::homogeneous_dirichlet)
        : mesh_(&mesh), dofs_(build_dof_map(mesh, kind, bc)), basis_(kind, mesh.dim()) {
        if (kind == ElementKind::p1nc) throw InvalidArgument("CubeBaselineSpace: use P1ncSpace for p1nc");
    }

    [[nodiscard]] const Mesh& mesh() const noexcept { return *mesh_; }
    [[nodiscard]] const DofMap& dofs() const noexcept { return dofs_; }
    [[nodiscard]] const ReferenceBasis& reference() const noexcept { return basis_; }
    [[nodiscard]] int n_cells() const noexcept { return mesh_->n_cells(); }
    [[nodiscard]] int dim() const noexcept { return mesh_->dim(); }
    [[nodiscard]] ReferenceDomain domain() const noexcept { return ReferenceDomain::cube; }

    void bind(int c, CellData& data) const {
        data.map.bind(*mesh_, c);
        data.inv_jac_t = data.map.affine_jacobian().inverse().transpose();
    }

    void eval(const CellData& data, const Point& xi, PointEval& pt) const {
        pt.det = data.map.map(xi, pt.x);
        const int n = basis_.size();
        pt.values.resize(n);
        pt.grads.resize(dim(), n);
        for (int j = 0; j < n; ++j) {
            pt.values[j] = basis_.value(j, xi);
            pt.grads.col(j) = data.inv_jac_t * basis_.gradient(j, xi);
        }
    }

    [[nodiscard]] double boundary_value(int facet, const ScalarFn& g) const {
        double s = 0.0;
        auto fv = mesh_->facet_vertices(facet);
        for (int v : fv) s += g(mesh_->vertex(v));
        return s / static_cast<double>(fv.size());
    }

  private:
    const Mesh* mesh_;
    DofMap dofs_;
    ReferenceBasis basis_;
};

/// Crouzeix-Raviart space on a simplex mesh
class CrSpace {
  public:
    static constexpr bool constant_gradients = true;

    struct CellData {
        Point origin;
        Mat jac;
        Mat inv_jac_t;
        double det = 0.0;
    };

    CrSpace(const SimplexMesh& mesh, BoundaryMode bc = BoundaryMode::homogeneous_dirichlet)
        : mesh_(&mesh), dofs_(build_dof_map(mesh, bc)), basis_(ElementKind::crouzeix_raviart, mesh.dim()) {}

    [[nodiscard]] const SimplexMesh& mesh() const noexcept { return *mesh_; }
    [[nodiscard]] const DofMap& dofs() const noexcept { return dofs_; }
    [[nodiscard]] int n_cells() const noexcept { return mesh_->n_cells(); }
    [[nodiscard]] int dim() const noexcept { return mesh_->dim(); }
    [[nodiscard]] ReferenceDomain domain() const noexcept { return ReferenceDomain::simplex; }

    void bind(int c, CellData& data) const {
        data.origin = mesh_->vertex(mesh_->cell_vertices(c)[0]);
        data.jac = mesh_->jacobian(c);
        data.det = std::abs(data.jac.determinant());
        data.inv_jac_t = data.jac.inverse().transpose();
    }

    void eval(const CellData& data, const Point& xi, PointEval& pt) const {
        pt.x = data.origin + data.jac * xi;
        pt.det = data.det;
        const int n = basis_.size();
        pt.values.resize(n);
        pt.grads.resize(dim(), n);
        for (int j = 0; j < n; ++j) {
            pt.values[j] = basis_.value(j, xi);
            pt.grads.col(j) = data.inv_jac_t * basis_.gradient(j, xi);
        }
    }

    [[nodiscard]] double boundary_value(int facet, const ScalarFn& g) const {
        double s = 0.0;
        auto fv = mesh_->facet_vertices(facet);
        for (int v : fv) s += g(mesh_->vertex(v));
        return s / static_cast<double>(fv.size());
    }

  private:
    const SimplexMesh* mesh_;
    DofMap dofs_;
    ReferenceBasis basis_;
};

} // namespace ncpoly
