#pragma once

#include <vector>

namespace doi {

// Gauss rule in x = cos(theta) for the normalized weight (1-x^2)^{(n-3)/2}.
struct Quadrature {
    int n = 0;
    std::vector<double> nodes;    // strictly increasing in (-1,1)
    std::vector<double> weights;  // sum to 1

    int order() const { return static_cast<int>(nodes.size()); }

    template <class F>
    double integrate(F&& f) const
    {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
        return s;
    }
};

Quadrature build_quadrature(int n, int M);

// Generalized Gauss-Laguerre rule for  int_0^inf g(s) s^a e^{-s} ds,
// weights not normalized (they sum to Gamma(a+1)).
struct LaguerreRule {
    std::vector<double> nodes, weights;
};
LaguerreRule build_gauss_laguerre(double a, int M);

} // namespace doi
