#include <ncpoly/quadrature.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace ncpoly;

namespace {

double factorial(int k) { return std::tgamma(k + 1.0); }

double integrate(const QuadratureRule& q, const auto& fn) {
    double s = 0.0;
    for (int i = 0; i < q.size(); ++i) s += q.weights[i] * fn(q.points[i]);
    return s;
}

} // namespace

TEST(Quadrature, OnePointRuleIsMidpoint) {
    const auto q = tensor_gauss_rule(1, 1);
    ASSERT_EQ(q.size(), 1);
    EXPECT_NEAR(q.points[0][0], 0.0, 1e-15);
    EXPECT_NEAR(q.weights[0], 2.0, 1e-15);
}

TEST(Quadrature, TwoPointSquare) {
    const auto q = tensor_gauss_rule(2, 2);
    ASSERT_EQ(q.size(), 4);
    const double g = 1.0 / std::sqrt(3.0);
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(std::abs(q.points[i][0]), g, 1e-15);
        EXPECT_NEAR(std::abs(q.points[i][1]), g, 1e-15);
        EXPECT_NEAR(q.weights[i], 1.0, 1e-15);
    }
}

TEST(Quadrature, CubeMonomialX2Y2Z2) {
    const auto q = tensor_gauss_rule(3, 3);
    const double v = integrate(q, [](const Point& x) { return x[0] * x[0] * x[1] * x[1] * x[2] * x[2]; });
    EXPECT_NEAR(v, std::pow(2.0 / 3.0, 3), 1e-14);
}

// int_{-1}^{1} t^p dt = 2/(p+1) for even p, 0 for odd p
TEST(Quadrature, GaussLegendreExactToDegree2kMinus1) {
    for (int k = 1; k <= 12; ++k) {
        const auto r = gauss_legendre_1d(k);
        EXPECT_TRUE(std::is_sorted(r.nodes.begin(), r.nodes.end()));
        for (int p = 0; p <= 2 * k - 1; ++p) {
            double s = 0.0;
            for (int i = 0; i < k; ++i) s += r.weights[i] * std::pow(r.nodes[i], p);
            const double exact = (p % 2 == 0) ? 2.0 / (p + 1) : 0.0;
            EXPECT_NEAR(s, exact, 1e-13) << "k=" << k << " p=" << p;
        }
    }
}

TEST(Quadrature, GaussLegendreNotExactBeyond) {
    const auto r = gauss_legendre_1d(2);
    double s = 0.0;
    for (int i = 0; i < 2; ++i) s += r.weights[i] * std::pow(r.nodes[i], 4);
    EXPECT_GT(std::abs(s - 0.4), 1e-3);
}

TEST(Quadrature, TensorWeightsSumToVolume) {
    for (int d = 1; d <= 6; ++d) {
        const auto q = tensor_gauss_rule(d, 3);
        EXPECT_EQ(q.size(), static_cast<int>(std::pow(3, d)));
        EXPECT_NEAR(std::accumulate(q.weights.begin(), q.weights.end(), 0.0), std::pow(2.0, d), 1e-12);
    }
}

TEST(Quadrature, SimplexWeightsSumToVolume) {
    for (int d = 1; d <= 4; ++d)
        for (int k = 1; k <= 4; ++k) {
            const auto q = simplex_gauss_rule(d, k);
            EXPECT_EQ(q.domain, ReferenceDomain::simplex);
            EXPECT_NEAR(std::accumulate(q.weights.begin(), q.weights.end(), 0.0), 1.0 / factorial(d), 1e-14);
            for (const auto& x : q.points) {
                EXPECT_GE(x.minCoeff(), 0.0);
                EXPECT_LE(x.sum(), 1.0);
            }
        }
}

// int_simplex x^a y^b z^c = a! b! c! / (a + b + c + d)!
TEST(Quadrature, SimplexMonomials) {
    for (int d = 2; d <= 3; ++d) {
        const int k = 3;
        const auto q = simplex_gauss_rule(d, k);
        for (int a = 0; a <= 3; ++a)
            for (int b = 0; a + b <= 3; ++b)
                for (int c = 0; a + b + c <= 3; ++c) {
                    if (d == 2 && c > 0) continue;
                    const double v = integrate(q, [&](const Point& x) {
                        return std::pow(x[0], a) * std::pow(x[1], b) * (d == 3 ? std::pow(x[2], c) : 1.0);
                    });
                    const double exact = factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + d);
                    EXPECT_NEAR(v, exact, 1e-14) << "d=" << d << " a=" << a << " b=" << b << " c=" << c;
                }
    }
}

TEST(Quadrature, RejectsBadArguments) {
    EXPECT_THROW((void)gauss_legendre_1d(0), InvalidArgument);
    EXPECT_THROW((void)tensor_gauss_rule(0, 2), InvalidArgument);
    EXPECT_THROW((void)simplex_gauss_rule(2, 0), InvalidArgument);
}
