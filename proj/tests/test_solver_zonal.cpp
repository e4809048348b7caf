#include "doi/diagnostics.hpp"
#include "doi/equilibria.hpp"
#include "doi/harmonics.hpp"
#include "doi/integrate.hpp"
#include "doi/quadrature.hpp"
#include "doi/zonal_solver.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace doi;

namespace {

std::vector<double> l2col(const TimeSeries& ts)
{
    std::vector<double> v;
    for (auto& r : ts.records) v.push_back(r.l2);
    return v;
}

SolverConfig base(int n, double sigma, int L, double t_end)
{
    SolverConfig c;
    c.n = n;
    c.sigma = sigma;
    c.L = L;
    c.t_end = t_end;
    c.keep_fields = false;
    return c;
}

} // namespace

TEST(ZonalRhs, UniformSteady)
{
    for (int n : {2, 3, 5}) {
        BasisTable B(n, 16);
        auto d = rhs(ZonalField(n, 16), B, 0.4);
        for (double v : d) EXPECT_EQ(v, 0.0);
    }
}

// f_t = sigma [(1-x^2) f'' - (n-1) x f'] - j [(1-x^2) f' - (n-1) x f], projected by adaptive quadrature
TEST(ZonalRhs, AgainstPde)
{
    std::mt19937_64 g(21);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int n : {2, 3, 4, 6}) {
        const int L = 12;
        BasisTable B(n, L);
        oracle::Zonal Z(n, L);
        ZonalField f(n, L);
        for (int l = 1; l < L; ++l) f.c[l] = u(g);  // top mode empty: nothing leaves the truncation
        const double s = 0.27, j = f.flux();
        auto d = rhs(f, B, s);
        for (int k = 1; k <= L; ++k) {
            double ref = oracle::sphere_mean(n, [&](double x) {
                double v = Z.f(f.c, x), p = Z.fp(f.c, x), q = Z.fpp(f.c, x);
                double ft = s * ((1 - x * x) * q - (n - 1) * x * p) - j * ((1 - x * x) * p - (n - 1) * x * v);
                return ft * Z.value(k, x);
            });
            EXPECT_NEAR(d[k], ref, 1e-11) << n << " " << k;
        }
    }
}

TEST(ZonalRhs, SteadyStateResidual)
{
    for (int n : {2, 3, 4})
        for (double s : {0.5 / n, 0.9 / n}) {
            const int L = 64;
            BasisTable B(n, L);
            auto d = rhs(fvm_field(n, L, solve_kappa(n, s)), B, s);
            double r = 0;
            for (double v : d) r += v * v;
            EXPECT_LE(std::sqrt(r), 1e-9) << n << " " << s;
        }
}

TEST(FvmField, MatchesDensityProjection)
{
    EXPECT_EQ(l2_distance(fvm_field(3, 10, 0.0)), 0.0);
    for (int n : {2, 3, 4}) {
        const int L = 24;
        const double k = 2.5;
        BasisTable B(n, L);
        auto f = fvm_field(n, L, k);
        oracle::Zonal Z(n, 8);
        for (int l = 1; l <= 8; ++l) {
            double ref = oracle::sphere_mean(n, [&](double x) { return fvm_density(n, k, x) * Z.value(l, x); });
            EXPECT_NEAR(f.c[l], ref, 1e-12);
        }
        EXPECT_NEAR(f.flux(), order_parameter_c(n, k), 1e-15);
        auto r = fvm_field(n, L, -k);
        EXPECT_NEAR(r.flux(), -f.flux(), 1e-15);
        EXPECT_EQ(r.c[2], f.c[2]);
        Projection p = project_ic(IcSpec::fvm(k), B, build_quadrature(n, 64));
        EXPECT_LT(p.residual, 1e-12);
        EXPECT_FALSE(p.nonpositive);
    }
}

TEST(ProjectIc, NodesAndFlags)
{
    const int n = 3, L = 16;
    BasisTable B(n, L);
    Quadrature q = build_quadrature(n, 64);
    auto p = project_ic(IcSpec::from_nodes([](double x) { return 1 + 0.5 * x; }), B, q);
    EXPECT_NEAR(p.field.c[1], 0.5 / std::sqrt(3.0), 1e-14);
    for (int l = 2; l <= L; ++l) EXPECT_NEAR(p.field.c[l], 0.0, 1e-14);
    EXPECT_THROW(project_ic(IcSpec::from_nodes([](double x) { return 2 + x; }), B, q), std::invalid_argument);
    auto bad = project_ic(IcSpec::perturbed(2.0, {1}), B, q);
    EXPECT_TRUE(bad.nonpositive);
    EXPECT_THROW(project_ic(IcSpec::perturbed(0.1, {L + 1}), B, q), std::invalid_argument);
    auto tail = project_ic(IcSpec::from_coeffs(std::vector<double>(L + 2, 0.01)), B, q);
    EXPECT_NEAR(tail.residual, 2e-4, 1e-16);
}

TEST(ZonalStep, EulerConsistency)
{
    const int n = 3, L = 24;
    BasisTable B(n, L);
    ZonalField f(n, L);
    f.c[1] = 0.1;
    f.c[2] = -0.05;
    f.c[3] = 0.02;
    auto d = rhs(f, B, 0.3);
    double err_prev = 0;
    for (double dt : {1e-2, 5e-3, 2.5e-3}) {
        auto g = step(f, B, 0.3, dt);
        double e = 0;
        for (int l = 1; l <= L; ++l) e += std::pow(g.c[l] - f.c[l] - dt * d[l], 2);
        e = std::sqrt(e);
        if (err_prev > 0) {
            EXPECT_NEAR(err_prev / e, 4.0, 0.3);
        }
        err_prev = e;
    }
}

TEST(ZonalStep, FixedPointPreserved)
{
    const int n = 3, L = 48;
    const double s = 0.25;
    BasisTable B(n, L);
    auto f = fvm_field(n, L, solve_kappa(n, s));
    auto g = step(f, B, s, 0.5);
    for (int l = 1; l <= L; ++l) EXPECT_NEAR(g.c[l], f.c[l], 1e-10);
}

TEST(ZonalRun, SubcriticalRate)
{
    auto c = base(3, 0.5, 64, 60);
    c.ic = IcSpec::perturbed(0.1);
    auto ts = run(c);
    auto fit = fit_exponential_rate(ts.t, l2col(ts));
    ASSERT_TRUE(fit.ok);
    EXPECT_NEAR(fit.rate, 1.0 / 3, 0.01 / 3);
    for (std::size_t i = 1; i < ts.records.size(); ++i) EXPECT_LE(ts.records[i].F, ts.records[i - 1].F + 1e-14);
}

TEST(ZonalRun, RateIndependentOfL)
{
    double r[3];
    int i = 0;
    for (int L : {16, 32, 48}) {
        auto c = base(3, 0.6, L, 40);
        c.ic = IcSpec::perturbed(0.1);
        auto ts = run(c);
        r[i++] = fit_exponential_rate(ts.t, l2col(ts)).rate;
    }
    EXPECT_NEAR(r[0], r[2], 1e-3 * r[2]);
    EXPECT_NEAR(r[1], r[2], 1e-3 * r[2]);
}

TEST(ZonalRun, RateIndependentOfTolerance)
{
    double r[2];
    int i = 0;
    for (double tol : {1e-6, 1e-9}) {
        auto c = base(4, 0.5, 24, 30);
        c.rel_tol = tol;
        c.ic = IcSpec::perturbed(0.1);
        auto ts = run(c);
        r[i++] = fit_exponential_rate(ts.t, l2col(ts)).rate;
    }
    EXPECT_NEAR(r[0], r[1], 1e-3 * r[1]);
    EXPECT_NEAR(r[1], 3 * (0.5 - 0.25), 0.01);
}

TEST(ZonalRun, SupercriticalLimit)
{
    auto c = base(3, 0.3, 32, 200);
    c.output_dt = 1.0;
    c.ic = IcSpec::perturbed(0.1);
    auto ts = run(c);
    EXPECT_NEAR(ts.final_field.flux(), order_parameter_c(3, solve_kappa(3, 0.3)), 1e-8);
    EXPECT_NEAR(ts.final_field.flux(), 0.396, 1e-3);
    // distance to the equilibrium decays monotonically once the flux has built up
    bool started = false;
    for (std::size_t i = 1; i < ts.records.size(); ++i) {
        if (ts.records[i].t >= 60) started = true;
        if (started) {
            EXPECT_LE(ts.records[i].dist_to_fvm, ts.records[i - 1].dist_to_fvm);
        }
    }
    EXPECT_LT(ts.records.back().dist_to_fvm, 1e-8);
}

TEST(ZonalRun, NegativeFluxBranch)
{
    auto c = base(3, 0.2, 32, 120);
    c.output_dt = 1.0;
    c.ic = IcSpec::from_coeffs({-0.05});
    auto ts = run(c);
    EXPECT_NEAR(ts.final_field.flux(), -order_parameter_c(3, solve_kappa(3, 0.2)), 1e-8);
    EXPECT_LT(ts.records.back().dist_to_fvm, 1e-7);
}

TEST(ZonalRun, OutputTimesExact)
{
    auto c = base(3, 0.5, 16, 1.0);
    c.output_dt = 0.25;
    c.ic = IcSpec::perturbed(0.1);
    auto ts = run(c);
    ASSERT_EQ(ts.t.size(), 5u);
    for (int i = 0; i <= 4; ++i) EXPECT_DOUBLE_EQ(ts.t[i], 0.25 * i);
}

TEST(ZonalRun, FixedStepMode)
{
    auto c = base(3, 0.5, 16, 1.0);
    c.adaptive = false;
    c.dt_init = 0.01;
    c.ic = IcSpec::perturbed(0.1);
    auto ts = run(c);
    EXPECT_EQ(ts.stats.rejected, 0);
    EXPECT_EQ(ts.stats.accepted, 100);
    c.dt_init = 0.03;  // does not divide the output interval
    EXPECT_THROW(run(c), std::invalid_argument);
}

TEST(ZonalRun, BlowUpAborts)
{
    auto c = base(3, 0.5, 16, 1.0);
    c.ic = IcSpec::from_coeffs({1e13});
    try {
        run(c);
        FAIL() << "expected NumericalAbort";
    } catch (const NumericalAbort& e) {
        EXPECT_FALSE(e.state.empty());
    }
}

// about f = 1 the k = 1 mode obeys c' = ((n-1)/n - sigma(n-1)) c exactly; large steps stay exact
TEST(ZonalStep, LinearizationExact)
{
    for (int n : {2, 3, 5}) {
        const int L = 16;
        BasisTable B(n, L);
        ZonalField f(n, L);
        f.c[1] = 1e-20;
        for (double s : {0.1, 0.6}) {
            auto g = step(f, B, s, 5.0);
            double expect = 1e-20 * std::exp(5.0 * (n - 1) * (1.0 / n - s));
            EXPECT_NEAR(g.c[1], expect, 1e-12 * expect) << n << " " << s;
        }
    }
}
