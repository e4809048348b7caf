#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace doi {

// phi-functions of exponential integrators, series near z = 0
inline double phi1(double z)
{
    if (std::abs(z) < 1e-5) return 1.0 + z / 2.0 + z * z / 6.0;
    return std::expm1(z) / z;
}

inline double phi2(double z)
{
    if (std::abs(z) < 1e-3) return 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0 + z * z * z * z / 720.0;
    return (std::expm1(z) - z) / (z * z);
}

// Second-order exponential Runge-Kutta (Cox-Matthews ETD2RK) for
//   y' = diag(lin) y + N(y).
// The diagonal is integrated exactly and fixed points of the full
// system stay fixed points of the map.
class Etd2Stepper {
public:
    explicit Etd2Stepper(std::vector<double> lin) : lin_(std::move(lin))
    {
        const std::size_t m = lin_.size();
        n0_.resize(m);
        n1_.resize(m);
        a_.resize(m);
        e_.resize(m);
        p1_.resize(m);
        p2_.resize(m);
    }

    std::size_t size() const { return lin_.size(); }

    // N(y, out) writes the nonlinear part of the derivative into out
    template <class Nonlinear>
    void step(std::span<double> y, double dt, Nonlinear&& N)
    {
        prepare(dt);
        const std::size_t m = lin_.size();
        N(std::span<const double>(y.data(), m), std::span<double>(n0_));
        for (std::size_t k = 0; k < m; ++k) a_[k] = e_[k] * y[k] + p1_[k] * n0_[k];
        N(std::span<const double>(a_), std::span<double>(n1_));
        for (std::size_t k = 0; k < m; ++k) y[k] = a_[k] + p2_[k] * (n1_[k] - n0_[k]);
    }

private:
    void prepare(double dt)
    {
        if (dt == dt_) return;
        for (std::size_t k = 0; k < lin_.size(); ++k) {
            double z = lin_[k] * dt;
            e_[k] = std::exp(z);
            p1_[k] = dt * phi1(z);
            p2_[k] = dt * phi2(z);
        }
        dt_ = dt;
    }

    std::vector<double> lin_;
    std::vector<double> n0_, n1_, a_, e_, p1_, p2_;
    double dt_ = -1.0;
};

} // namespace doi
