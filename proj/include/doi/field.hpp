#pragma once

#include <cmath>
#include <vector>

namespace doi {

// Axisymmetric density f = sum_l c[l] Y_l with c[0] = 1 fixed (unit mass).
struct ZonalField {
    int n = 0;
    int L = 0;
    std::vector<double> c;  // size L+1

    ZonalField() = default;
    ZonalField(int n_, int L_) : n(n_), L(L_), c(L_ + 1, 0.0) { c[0] = 1.0; }

    // axial flux int x f = c[1] <x, Y_1> = c[1]/sqrt(n)
    double flux() const { return c[1] / std::sqrt(static_cast<double>(n)); }
};

// Density on the circle under d(theta)/(2 pi):
//   f = 1 + sum_k a[k] cos(k theta) + b[k] sin(k theta),  k = 1..K (index 0 unused)
struct CircleField {
    int K = 0;
    std::vector<double> a, b;

    CircleField() = default;
    explicit CircleField(int K_) : K(K_), a(K_ + 1, 0.0), b(K_ + 1, 0.0) {}

    double J1() const { return 0.5 * a[1]; }
    double J2() const { return 0.5 * b[1]; }
};

} // namespace doi
