#include <cmath>

#include <gtest/gtest.h>

#include "gpefem/quadrature.hpp"

using namespace gpefem;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Mean of l1^a l2^b l3^c over a triangle: 2 a! b! c! / (a+b+c+2)!.
double exact_mean(int a, int b, int c) { return 2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2); }

double rule_mean(const QuadratureRule& r, int a, int b, int c) {
    double s = 0;
    for (std::size_t q = 0; q < r.size(); ++q)
        s += r.weights[q] * std::pow(r.points[q][0], a) * std::pow(r.points[q][1], b) * std::pow(r.points[q][2], c);
    return s;
}

void check_exact(const QuadratureRule& r, int degree) {
    double wsum = 0;
    for (double w : r.weights) wsum += w;
    EXPECT_NEAR(wsum, 1.0, 1e-15);
    for (const auto& p : r.points) EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-15);
    for (int a = 0; a <= degree; ++a)
        for (int b = 0; a + b <= degree; ++b)
            for (int c = 0; a + b + c <= degree; ++c)
                EXPECT_NEAR(rule_mean(r, a, b, c), exact_mean(a, b, c), 2e-15) << a << b << c;
}

}  // namespace

TEST(Quadrature, Degree4Exact) {
    const auto r = triangle_rule_degree4();
    EXPECT_EQ(r.degree, 4);
    EXPECT_EQ(r.size(), 6u);
    check_exact(r, 4);
}

TEST(Quadrature, Degree6Exact) {
    const auto r = triangle_rule_degree6();
    EXPECT_EQ(r.degree, 6);
    EXPECT_EQ(r.size(), 12u);
    check_exact(r, 6);
}

TEST(Quadrature, Degree4NotExactForDegree6) {
    const auto r = triangle_rule_degree4();
    EXPECT_GT(std::abs(rule_mean(r, 6, 0, 0) - exact_mean(6, 0, 0)), 1e-6);
}

TEST(Quadrature, Lookup) {
    EXPECT_EQ(triangle_rule(4).size(), 6u);
    EXPECT_EQ(triangle_rule(6).size(), 12u);
    EXPECT_EQ(triangle_rule(2).size(), 6u);
    EXPECT_EQ(triangle_rule(5).size(), 12u);
    EXPECT_THROW(triangle_rule(7), InvalidParameter);
}
