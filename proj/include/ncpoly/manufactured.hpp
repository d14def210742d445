/// @file manufactured.hpp
/// @brief manufactured solutions and coefficient presets with analytic forcing
#pragma once

#include <ncpoly/assembly.hpp>

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace ncpoly {

struct ManufacturedSolution {
    std::string name;
    ScalarFn u;
    std::function<Vec(const Point&)> grad;
    std::function<Mat(const Point&)> hessian;
};

/// prod_i sin(pi x_i): vanishes on the boundary of [0,1]^d
[[nodiscard]] inline ManufacturedSolution sine_product(int dim) {
    const double pi = std::acos(-1.0);
    ManufacturedSolution m;
    m.name = "sine_product";
    m.u = [=](const Point& x) {
        double v = 1.0;
        for (int i = 0; i < dim; ++i) v *= std::sin(pi * x[i]);
        return v;
    };
    m.grad = [=](const Point& x) {
        Vec s(dim);
        Vec c(dim);
        for (int i = 0; i < dim; ++i) {
            s[i] = std::sin(pi * x[i]);
            c[i] = std::cos(pi * x[i]);
        }
        Vec g(dim);
        for (int i = 0; i < dim; ++i) {
            double v = pi * c[i];
            for (int k = 0; k < dim; ++k)
                if (k != i) v *= s[k];
            g[i] = v;
        }
        return g;
    };
    m.hessian = [=](const Point& x) {
        Vec s(dim);
        Vec c(dim);
        for (int i = 0; i < dim; ++i) {
            s[i] = std::sin(pi * x[i]);
            c[i] = std::cos(pi * x[i]);
        }
        Mat h(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                double v = (i == j) ? -pi * pi * s[i] : pi * pi * c[i] * c[j];
                for (int k = 0; k < dim; ++k)
                    if (k != i && k != j) v *= s[k];
                h(i, j) = v;
            }
        return h;
    };
    return m;
}

/// w composed with the inverse of x = A xi + b; vanishes on the boundary of
/// the image domain whenever w vanishes on the boundary of the unit box
[[nodiscard]] inline ManufacturedSolution compose_affine(const ManufacturedSolution& w, const Mat& a, const Point& b) {
    const Mat inv = a.inverse();
    const Mat inv_t = inv.transpose();
    ManufacturedSolution m;
    m.name = w.name + "_affine";
    m.u = [=](const Point& x) { return w.u(inv * (x - b)); };
    m.grad = [=](const Point& x) -> Vec { return inv_t * w.grad(inv * (x - b)); };
    m.hessian = [=](const Point& x) -> Mat { return inv_t * w.hessian(inv * (x - b)) * inv; };
    return m;
}

/// u(x) = a0 + a . x
[[nodiscard]] inline ManufacturedSolution linear_solution(double a0, const Vec& a) {
    ManufacturedSolution m;
    m.name = "linear";
    m.u = [=](const Point& x) { return a0 + a.dot(x); };
    m.grad = [=](const Point&) -> Vec { return a; };
    const int d = static_cast<int>(a.size());
    m.hessian = [=](const Point&) -> Mat { return Mat::Zero(d, d); };
    return m;
}

/// Coefficients together with the row divergence (div A)_j = sum_i d_i A_ij,
/// which is all the forcing needs: -div(A grad u) = -(div A) . grad u - A : H(u).
struct CoefficientPreset {
    std::string name;
    std::function<Mat(const Point&)> A;
    std::function<Vec(const Point&)> div_a;
    ScalarFn c;
};

[[nodiscard]] inline std::optional<CoefficientPreset> coefficient_preset(std::string_view name, int dim) {
    CoefficientPreset p;
    p.name = std::string(name);
    if (name == "laplace" || name == "helmholtz-like") {
        const double c = name == "laplace" ? 0.0 : 1.0;
        p.A = [dim](const Point&) -> Mat { return Mat::Identity(dim, dim); };
        p.div_a = [dim](const Point&) -> Vec { return Vec::Zero(dim); };
        p.c = [c](const Point&) { return c; };
        return p;
    }
    if (name == "varcoef") {
        // A = diag(1 + x_i / 2), c = 1
        p.A = [dim](const Point& x) -> Mat {
            Mat a = Mat::Zero(dim, dim);
            for (int i = 0; i < dim; ++i) a(i, i) = 1.0 + 0.5 * x[i];
            return a;
        };
        p.div_a = [dim](const Point&) -> Vec { return Vec::Constant(dim, 0.5); };
        p.c = [](const Point&) { return 1.0; };
        return p;
    }
    return std::nullopt;
}

inline constexpr std::array<std::string_view, 3> kCoefficientPresets{"laplace", "helmholtz-like", "varcoef"};

/// coefficient field whose forcing reproduces `exact`
[[nodiscard]] inline CoefficientField manufactured_problem(const CoefficientPreset& preset, const ManufacturedSolution& exact) {
    CoefficientField field;
    field.A = preset.A;
    field.c = preset.c;
    field.f = [preset, exact](const Point& x) {
        const Mat a = preset.A(x);
        const Mat h = exact.hessian(x);
        return -(preset.div_a(x).dot(exact.grad(x)) + (a.array() * h.array()).sum()) + preset.c(x) * exact.u(x);
    };
    return field;
}

} // namespace ncpoly
