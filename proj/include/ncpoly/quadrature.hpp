/// @file quadrature.hpp
/// @brief Gauss-Legendre rules on the reference hypercube [-1,1]^d and the
/// reference simplex conv{0, e_1, ..., e_d}
#pragma once

#include <ncpoly/types.hpp>

#include <cmath>
#include <vector>

namespace ncpoly {

enum class ReferenceDomain { cube, simplex };

struct QuadratureRule {
    int dim = 0;
    ReferenceDomain domain = ReferenceDomain::cube;
    int degree = 0; ///< per-axis polynomial degree integrated exactly
    std::vector<Point> points;
    std::vector<double> weights;

    [[nodiscard]] int size() const noexcept { return static_cast<int>(weights.size()); }
};

struct Rule1d {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// k-point Gauss-Legendre rule on [-1, 1], nodes ascending
[[nodiscard]] inline Rule1d gauss_legendre_1d(int k) {
    if (k < 1) throw InvalidArgument("gauss_legendre_1d: k must be >= 1");
    const double pi = std::acos(-1.0);
    Rule1d rule;
    rule.nodes.resize(k);
    rule.weights.resize(k);
    for (int i = 0; i < (k + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (k + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            // three-term recurrence for P_k and its derivative
            double p0 = 1.0;
            double p1 = x;
            for (int n = 2; n <= k; ++n) {
                const double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
                p0 = p1;
                p1 = p2;
            }
            if (k == 1) p0 = 1.0;
            dp = k * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0;
        double p1 = x;
        for (int n = 2; n <= k; ++n) {
            const double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
            p0 = p1;
            p1 = p2;
        }
        dp = k * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[k - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[k - 1 - i] = w;
    }
    if (k % 2 == 1) rule.nodes[k / 2] = 0.0;
    return rule;
}

/// k^d-point tensor Gauss rule on [-1,1]^d; exact for per-axis degree <= 2k-1
[[nodiscard]] inline QuadratureRule tensor_gauss_rule(int dim, int k) {
    if (dim < 1 || dim > kMaxDim) throw InvalidArgument("tensor_gauss_rule: unsupported dimension");
    const Rule1d r1 = gauss_legendre_1d(k);
    QuadratureRule q;
    q.dim = dim;
    q.domain = ReferenceDomain::cube;
    q.degree = 2 * k - 1;
    const int n = ipow(k, dim);
    q.points.reserve(n);
    q.weights.reserve(n);
    for (int p = 0; p < n; ++p) {
        Point x(dim);
        double w = 1.0;
        int rem = p;
        for (int i = 0; i < dim; ++i) {
            x[i] = r1.nodes[rem % k];
            w *= r1.weights[rem % k];
            rem /= k;
        }
        q.points.push_back(x);
        q.weights.push_back(w);
    }
    return q;
}

/// Collapsed-coordinate rule on the reference simplex. Axis i carries the
/// extra Jacobian factor (1 - t_i)^{d-1-i}, so it gets extra points to stay
/// exact for total degree 2k-1.
[[nodiscard]] inline QuadratureRule simplex_gauss_rule(int dim, int k) {
    if (dim < 1 || dim > kMaxDim) throw InvalidArgument("simplex_gauss_rule: unsupported dimension");
    if (k < 1) throw InvalidArgument("simplex_gauss_rule: k must be >= 1");
    std::vector<Rule1d> axes;
    for (int i = 0; i < dim; ++i) axes.push_back(gauss_legendre_1d(k + (dim - 1 - i + 1) / 2));
    QuadratureRule q;
    q.dim = dim;
    q.domain = ReferenceDomain::simplex;
    q.degree = 2 * k - 1;
    std::vector<int> idx(dim, 0);
    while (true) {
        Point x(dim);
        double w = 1.0;
        double remaining = 1.0;
        for (int i = 0; i < dim; ++i) {
            const double t = 0.5 * (axes[i].nodes[idx[i]] + 1.0);
            w *= 0.5 * axes[i].weights[idx[i]] * std::pow(1.0 - t, dim - 1 - i);
            x[i] = remaining * t;
            remaining *= 1.0 - t;
        }
        q.points.push_back(x);
        q.weights.push_back(w);
        int i = 0;
        while (i < dim && ++idx[i] == static_cast<int>(axes[i].nodes.size())) idx[i++] = 0;
        if (i == dim) break;
    }
    return q;
}

} // namespace ncpoly
