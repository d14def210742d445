/// @file simplex_mesh.hpp
/// @brief simplicial meshes from Kuhn subdivision of parallelotope meshes,
/// used by the Crouzeix-Raviart baseline
#pragma once

#include <ncpoly/mesh.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

namespace ncpoly {

struct SimplexFacet {
    std::array<int, 2> owner_cell{-1, -1};
    std::array<int, 2> owner_local{-1, -1}; ///< local vertex opposite the facet
    int n_owners = 0;
    bool is_boundary = true;
};

class SimplexMesh {
  public:
    SimplexMesh() = default;

    SimplexMesh(int dim, std::vector<Point> vertices, std::vector<int> simplices)
        : dim_(dim), vertices_(std::move(vertices)), simplices_(std::move(simplices)) {
        const int nv = dim_ + 1;
        if (simplices_.size() % nv != 0) throw InvalidArgument("SimplexMesh: bad simplex array length");
        const int nc = n_cells();
        // records (sorted facet key, simplex, opposite local vertex)
        std::vector<int> keys(static_cast<std::size_t>(nc) * nv * dim_);
        for (int c = 0; c < nc; ++c) {
            for (int i = 0; i < nv; ++i) {
                auto* key = keys.data() + (static_cast<std::size_t>(c) * nv + i) * dim_;
                for (int k = 0, m = 0; k < nv; ++k)
                    if (k != i) key[m++] = simplices_[static_cast<std::size_t>(c) * nv + k];
                std::sort(key, key + dim_);
            }
        }
        const std::size_t nrec = static_cast<std::size_t>(nc) * nv;
        std::vector<std::size_t> order(nrec);
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto key_of = [&](std::size_t r) { return keys.begin() + r * dim_; };
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::lexicographical_compare(key_of(a), key_of(a) + dim_, key_of(b), key_of(b) + dim_);
        });
        cell_facets_.assign(nrec, -1);
        // group equal keys; facets are numbered by first appearance below
        std::vector<std::size_t> leader(nrec);
        for (std::size_t i = 0; i < nrec;) {
            std::size_t j = i + 1;
            while (j < nrec && std::equal(key_of(order[i]), key_of(order[i]) + dim_, key_of(order[j]))) ++j;
            if (j - i > 2) {
                std::vector<int> bad;
                for (std::size_t k = i; k < j; ++k) bad.push_back(static_cast<int>(order[k] / nv));
                throw MeshError("SimplexMesh: facet shared by more than two simplices", bad);
            }
            for (std::size_t k = i; k < j; ++k) leader[order[k]] = order[i];
            i = j;
        }
        std::vector<int> group_id(nrec, -1);
        for (std::size_t r = 0; r < nrec; ++r) {
            int& id = group_id[leader[r]];
            if (id < 0) {
                id = static_cast<int>(facets_.size());
                facets_.emplace_back();
                facet_vertices_.insert(facet_vertices_.end(), key_of(r), key_of(r) + dim_);
            }
            SimplexFacet& f = facets_[id];
            f.owner_cell[f.n_owners] = static_cast<int>(r / nv);
            f.owner_local[f.n_owners] = static_cast<int>(r % nv);
            ++f.n_owners;
            f.is_boundary = f.n_owners == 1;
            cell_facets_[r] = id;
        }
        for (int c = 0; c < nc; ++c) {
            if (!(std::abs(jacobian(c).determinant()) > 0.0))
                throw MeshError("SimplexMesh: degenerate simplex " + std::to_string(c), {c});
        }
    }

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] int n_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
    [[nodiscard]] int n_cells() const noexcept { return static_cast<int>(simplices_.size() / (dim_ + 1)); }
    [[nodiscard]] int n_facets() const noexcept { return static_cast<int>(facets_.size()); }
    [[nodiscard]] int n_interior_facets() const {
        return static_cast<int>(std::count_if(facets_.begin(), facets_.end(), [](const auto& f) { return !f.is_boundary; }));
    }
    [[nodiscard]] const Point& vertex(int v) const { return vertices_[v]; }
    [[nodiscard]] std::span<const int> cell_vertices(int c) const {
        return {simplices_.data() + static_cast<std::size_t>(c) * (dim_ + 1), static_cast<std::size_t>(dim_ + 1)};
    }
    [[nodiscard]] const SimplexFacet& facet(int f) const { return facets_[f]; }
    [[nodiscard]] std::span<const int> facet_vertices(int f) const {
        return {facet_vertices_.data() + static_cast<std::size_t>(f) * dim_, static_cast<std::size_t>(dim_)};
    }
    /// facet opposite local vertex i of simplex c
    [[nodiscard]] int cell_facet(int c, int i) const { return cell_facets_[static_cast<std::size_t>(c) * (dim_ + 1) + i]; }

    /// columns v_i - v_0
    [[nodiscard]] Mat jacobian(int c) const {
        auto cv = cell_vertices(c);
        Mat j(dim_, dim_);
        for (int i = 0; i < dim_; ++i) j.col(i) = vertices_[cv[i + 1]] - vertices_[cv[0]];
        return j;
    }

    [[nodiscard]] double cell_volume(int c) const {
        double fact = 1.0;
        for (int i = 2; i <= dim_; ++i) fact *= i;
        return std::abs(jacobian(c).determinant()) / fact;
    }

  private:
    int dim_ = 0;
    std::vector<Point> vertices_;
    std::vector<int> simplices_;
    std::vector<SimplexFacet> facets_;
    std::vector<int> facet_vertices_;
    std::vector<int> cell_facets_;
};

/// Splits every parallelotope into d! simplices along the corner chains
/// 0 -> e_{p(1)} -> e_{p(1)} + e_{p(2)} -> ... for each axis permutation p.
/// Neighbouring cells induce the same subdivision on shared facets because
/// the chain on a facet depends only on the order of the free axes.
[[nodiscard]] inline SimplexMesh kuhn_subdivide(const Mesh& mesh) {
    const int d = mesh.dim();
    std::vector<int> simplices;
    std::vector<int> perm(d);
    for (int c = 0; c < mesh.n_cells(); ++c) {
        if (mesh.kind(c) != CellKind::parallelotope)
            throw MeshError("kuhn_subdivide: cell " + std::to_string(c) + " is not a parallelotope", {c});
        auto cv = mesh.cell_vertices(c);
        std::iota(perm.begin(), perm.end(), 0);
        do {
            int b = 0;
            simplices.push_back(cv[b]);
            for (int k = 0; k < d; ++k) {
                b |= 1 << perm[k];
                simplices.push_back(cv[b]);
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return SimplexMesh(d, mesh.vertices(), std::move(simplices));
}

} // namespace ncpoly
