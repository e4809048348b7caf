#pragma once

// Test-side reference implementations. Nothing here calls into doi_core, so the
// library is checked against boost's special functions and adaptive quadrature.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/chebyshev.hpp>
#include <boost/math/special_functions/gegenbauer.hpp>

#include <cmath>
#include <vector>

namespace oracle {

// Mean over the unit-mass sphere measure of a function of x = cos(theta).
// Odd n: the weight (1-x^2)^{(n-3)/2} is a polynomial, so Gauss-Legendre in x.
// Even n: sin^{n-2} is a polynomial in cos, so the periodic trapezoid in theta.
// Both are exact for the polynomial integrands used here and spectrally
// accurate for analytic ones.
template <class G>
double sphere_mean(int n, G&& g)
{
    if (n % 2 == 1) {
        using boost::math::quadrature::gauss;
        auto w = [n](double x) { return std::pow(1 - x * x, 0.5 * (n - 3)); };
        double z = gauss<double, 100>::integrate(w, -1.0, 1.0);
        return gauss<double, 100>::integrate([&](double x) { return w(x) * g(x); }, -1.0, 1.0) / z;
    }
    const int M = 1024;
    double s = 0, z = 0;
    for (int i = 0; i < M; ++i) {
        double th = 2 * M_PI * (i + 0.5) / M;
        double w = std::pow(std::abs(std::sin(th)), n - 2);
        z += w;
        s += w * g(std::cos(th));
    }
    return s / z;
}

// Orthonormal zonal basis built from boost Gegenbauer / Chebyshev polynomials,
// normalized by adaptive quadrature, Y_l(1) > 0.
class Zonal {
public:
    Zonal(int n, int L) : n_(n), norm_(L + 2)
    {
        for (int l = 0; l <= L + 1; ++l) {
            double m = sphere_mean(n, [&](double x) { double p = raw(l, x); return p * p; });
            norm_[l] = 1.0 / std::sqrt(m);
        }
    }
    double value(int l, double x) const { return norm_[l] * raw(l, x); }
    double deriv(int l, double x) const { return norm_[l] * raw_d(l, x, 1); }
    double deriv2(int l, double x) const { return norm_[l] * raw_d(l, x, 2); }

    // f = sum c_l Y_l and derivatives
    double f(const std::vector<double>& c, double x) const { return sum(c, x, 0); }
    double fp(const std::vector<double>& c, double x) const { return sum(c, x, 1); }
    double fpp(const std::vector<double>& c, double x) const { return sum(c, x, 2); }

private:
    double raw(int l, double x) const
    {
        if (n_ == 2) return boost::math::chebyshev_t(static_cast<unsigned>(l), x);
        return boost::math::gegenbauer(static_cast<unsigned>(l), 0.5 * n_ - 1.0, x);
    }
    double raw_d(int l, double x, int k) const
    {
        if (n_ == 2) {
            if (k == 1) return boost::math::chebyshev_t_prime(static_cast<unsigned>(l), x);
            // T'' from the Chebyshev equation
            double tp = boost::math::chebyshev_t_prime(static_cast<unsigned>(l), x);
            double t = boost::math::chebyshev_t(static_cast<unsigned>(l), x);
            return (x * tp - double(l) * l * t) / (1 - x * x);
        }
        return boost::math::gegenbauer_derivative(static_cast<unsigned>(l), 0.5 * n_ - 1.0, x,
                                                  static_cast<unsigned>(k));
    }
    double sum(const std::vector<double>& c, double x, int k) const
    {
        double s = 0;
        for (std::size_t l = 0; l < c.size(); ++l) {
            if (c[l] == 0) continue;
            s += c[l] * (k == 0 ? value(int(l), x) : norm_[l] * raw_d(int(l), x, k));
        }
        return s;
    }
    int n_;
    std::vector<double> norm_;
};

// axial mean of the von Mises density as a Bessel ratio
inline double c_bessel(int n, double kappa)
{
    return boost::math::cyl_bessel_i(0.5 * n, kappa) / boost::math::cyl_bessel_i(0.5 * n - 1.0, kappa);
}

// kappa(sigma) by bisection on the Bessel ratio
inline double kappa_bessel(int n, double sigma)
{
    double lo = 1e-12, hi = 1.0;
    while (c_bessel(n, hi) / hi > sigma) hi *= 2;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (c_bessel(n, mid) / mid > sigma ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace oracle
