#include "doi/harmonics.hpp"
#include "doi/quadrature.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <sstream>

using namespace doi;

TEST(Dimension, SmallCases)
{
    for (int n = 2; n <= 8; ++n) EXPECT_EQ(dim_spherical_harmonics(n, 0), 1);
    EXPECT_EQ(dim_spherical_harmonics(3, 2), 5);
    EXPECT_EQ(dim_spherical_harmonics(4, 3), 16);
}

TEST(Dimension, BothFormulasAndClosedForms)
{
    for (int n = 2; n <= 8; ++n)
        for (int l = 0; l <= 20; ++l) EXPECT_EQ(dim_spherical_harmonics(n, l), dim_spherical_harmonics_diff(n, l)) << n << " " << l;
    for (int l = 1; l <= 20; ++l) {
        EXPECT_EQ(dim_spherical_harmonics(2, l), 2);
        EXPECT_EQ(dim_spherical_harmonics(3, l), 2 * l + 1);
        EXPECT_EQ(dim_spherical_harmonics(4, l), (l + 1) * (l + 1));
    }
}

TEST(Eigenvalues, Laplace)
{
    for (int n = 2; n <= 6; ++n) EXPECT_EQ(laplace_eigenvalue(n, 0), 0.0);
    for (int k = 0; k <= 10; ++k) EXPECT_EQ(laplace_eigenvalue(2, k), double(k * k));
    EXPECT_EQ(laplace_eigenvalue(3, 2), 6.0);
}

// -Delta Y_l = lambda_l Y_l with Delta = (1-x^2) d2 - (n-1) x d, checked by quadrature
TEST(Eigenvalues, LaplaceAgainstOperator)
{
    for (int n : {2, 3, 4, 5}) {
        oracle::Zonal Z(n, 6);
        for (int l = 0; l <= 6; ++l) {
            double q = oracle::sphere_mean(n, [&](double x) {
                double lap = (1 - x * x) * Z.deriv2(l, x) - (n - 1) * x * Z.deriv(l, x);
                return -lap * Z.value(l, x);
            });
            EXPECT_NEAR(q, laplace_eigenvalue(n, l), 1e-9) << n << " " << l;
        }
    }
}

TEST(Eigenvalues, Conformal)
{
    EXPECT_EQ(conformal_eigenvalue(2, 5), 5.0);
    EXPECT_EQ(conformal_eigenvalue(3, 2), 6.0);
    EXPECT_EQ(conformal_eigenvalue(4, 1), 6.0);
    for (int l = 1; l <= 12; ++l) {
        double lam3 = laplace_eigenvalue(3, l), lam4 = laplace_eigenvalue(4, l);
        EXPECT_DOUBLE_EQ(conformal_eigenvalue(3, l), lam3);
        EXPECT_NEAR(conformal_eigenvalue(4, l), lam4 * std::sqrt(lam4 + 1), 1e-9 * lam4 * lam4);
        // Gamma ratio form
        for (int n = 2; n <= 7; ++n)
            EXPECT_NEAR(conformal_eigenvalue(n, l), std::tgamma(l + n - 1.0) / std::tgamma(double(l)),
                        1e-12 * conformal_eigenvalue(n, l));
    }
    EXPECT_THROW(conformal_eigenvalue(3, 0), std::invalid_argument);
}

TEST(Gegenbauer, Recurrence)
{
    for (double lam : {0.5, 1.0, 1.5, 3.0}) {
        EXPECT_EQ(gegenbauer_eval(lam, 0, 0.3), 1.0);
        EXPECT_DOUBLE_EQ(gegenbauer_eval(lam, 1, 0.3), 2 * lam * 0.3);
    }
    const double lam = 1.5, x = 0.5;
    EXPECT_NEAR(gegenbauer_eval(lam, 2, x), 2 * lam * (1 + lam) * x * x - lam, 1e-15);
    for (double l2 : {0.5, 1.0, 2.5})
        for (int i = 0; i <= 30; ++i)
            for (double y : {-0.9, -0.2, 0.0, 0.4, 0.99})
                EXPECT_NEAR(gegenbauer_eval(l2, i, y), boost::math::gegenbauer(unsigned(i), l2, y),
                            1e-12 * std::max(1.0, std::abs(boost::math::gegenbauer(unsigned(i), l2, y))));
}

TEST(BasisTable, AgainstQuadrature)
{
    for (int n : {2, 3, 4, 6}) {
        const int L = 24;
        BasisTable B(n, L);
        oracle::Zonal Z(n, L);
        for (int l = 0; l <= L; ++l) {
            // multiplication by x
            double xl = oracle::sphere_mean(n, [&](double x) { return x * Z.value(l, x) * Z.value(l + 1, x); });
            EXPECT_NEAR(B.u(l), xl, 1e-12) << n << " " << l;
            // e.grad Y_l = (1-x^2) Y_l' has components on Y_{l-1}, Y_{l+1}
            double hi = oracle::sphere_mean(n, [&](double x) { return (1 - x * x) * Z.deriv(l, x) * Z.value(l + 1, x); });
            EXPECT_NEAR(B.grad_hi()[l], hi, 1e-12) << n << " " << l;
            double lo = oracle::sphere_mean(n, [&](double x) { return (1 - x * x) * Z.deriv(l + 1, x) * Z.value(l, x); });
            EXPECT_NEAR(B.grad_lo()[l + 1], lo, 1e-12) << n << " " << l;
        }
    }
}

TEST(BasisTable, EvaluationOrthonormal)
{
    for (int n : {2, 3, 5}) {
        const int L = 30;
        BasisTable B(n, L);
        Quadrature q = build_quadrature(n, 2 * L + 4);
        std::vector<double> y(L + 2), gram((L + 2) * (L + 2), 0.0);
        for (int i = 0; i < q.order(); ++i) {
            eval_zonal_basis(B, q.nodes[i], y);
            for (int a = 0; a <= L + 1; ++a)
                for (int b = 0; b <= L + 1; ++b) gram[a * (L + 2) + b] += q.weights[i] * y[a] * y[b];
        }
        for (int a = 0; a <= L + 1; ++a)
            for (int b = 0; b <= L + 1; ++b) EXPECT_NEAR(gram[a * (L + 2) + b], a == b, 1e-12);
        oracle::Zonal Z(n, 10);
        eval_zonal_basis(B, 0.37, y);
        for (int l = 0; l <= 10; ++l) EXPECT_NEAR(y[l], Z.value(l, 0.37), 1e-12);
        eval_zonal_basis(B, 1.0, y);
        for (int l = 0; l <= L + 1; ++l) EXPECT_GT(y[l], 0);
    }
}

TEST(BasisTable, CouplingBoundedNearOne)
{
    BasisTable B3(3, 200);
    EXPECT_NEAR(B3.max_b(), 2 / std::sqrt(3.75), 1e-12);
    for (int n : {2, 3, 4, 6, 8}) {
        BasisTable B(n, 400);
        EXPECT_LE(B.max_b(), 1.1) << n;
        EXPECT_NEAR(B.b()[400], 1.0, 5e-3) << n;
    }
}

TEST(BasisTable, TsvHasOneRowPerDegree)
{
    std::ostringstream os;
    BasisTable(3, 8).write_tsv(os);
    int lines = 0;
    for (char ch : os.str()) lines += ch == '\n';
    EXPECT_GE(lines, 9);
}

TEST(Quadrature, Moments)
{
    for (int n = 2; n <= 8; ++n) {
        Quadrature q = build_quadrature(n, 40);
        double w = 0;
        for (double v : q.weights) w += v;
        EXPECT_NEAR(w, 1.0, 1e-14);
        EXPECT_NEAR(q.integrate([](double x) { return x * x; }), 1.0 / n, 1e-12);
        EXPECT_NEAR(q.integrate([](double x) { return x * x * x * x; }), 3.0 / (n * (n + 2)), 1e-12);
        // exact to degree 2M-1
        double expect = 1;
        for (int k = 1; k <= 39; ++k) {
            expect *= (2 * k - 1.0) / (n + 2 * k - 2.0);
            EXPECT_NEAR(q.integrate([k](double x) { return std::pow(x, 2 * k); }), expect, 1e-13) << n << " " << k;
        }
        for (std::size_t i = 1; i < q.nodes.size(); ++i) EXPECT_LT(q.nodes[i - 1], q.nodes[i]);
    }
    EXPECT_THROW(build_quadrature(3, 2), std::invalid_argument);
}

TEST(Quadrature, LaguerreWeights)
{
    for (double a : {-0.5, 0.0, 0.5, 1.5}) {
        auto r = build_gauss_laguerre(a, 48);
        double s = 0, m1 = 0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
            s += r.weights[i];
            m1 += r.weights[i] * r.nodes[i];
        }
        EXPECT_NEAR(s, std::tgamma(a + 1), 1e-12);
        EXPECT_NEAR(m1, std::tgamma(a + 2), 1e-11);
    }
}
