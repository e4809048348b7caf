#pragma once

#include "doi/quadrature.hpp"

#include <stdexcept>
#include <string>
#include <string_view>

namespace doi {

enum class Regime { subcritical, critical, supercritical };

std::string_view to_string(Regime r);

inline constexpr double kRegimeTol = 1e-12;

// thrown when an equilibrium quantity is requested outside its regime
struct RegimeError : std::domain_error {
    using std::domain_error::domain_error;
};

Regime classify_regime(int n, double sigma);

// Fisher-Von Mises family on S^{n-1}: M_kappa(x) = e^{kappa x}/Z(kappa) with
// mass 1 under the normalized sphere measure.
class VonMises {
public:
    explicit VonMises(int n, int order = 256);

    int n() const { return n_; }

    double order_parameter(double kappa) const;         // c(kappa)
    double order_parameter_series(double kappa) const;  // power series, kappa <= 50
    double sigma_tilde(double kappa) const;             // c/kappa
    double solve_kappa(double sigma) const;
    double beta(double kappa) const;
    double beta_series(double kappa) const;
    double log_partition(double kappa) const;  // log of int e^{kappa x}
    double density(double kappa, double x) const;
    double second_moment(double kappa) const;  // <x^2> by quadrature
    // sigma int M ln M - c^2/2; the one-argument form uses sigma = sigma_tilde
    double free_energy(double kappa, double sigma) const;
    double free_energy(double kappa) const;

private:
    // numerator/denominator of c with a common scale factor removed
    void moments(double kappa, double& den, double& num, double& lden) const;

    int n_;
    Quadrature q_;
    LaguerreRule lag_;
};

// cached per-n instance (thread-safe)
const VonMises& von_mises(int n);

double order_parameter_c(int n, double kappa);
double sigma_tilde(int n, double kappa);
double solve_kappa(int n, double sigma);
double beta(int n, double kappa);
double fvm_density(int n, double kappa, double x);
double fvm_free_energy(int n, double kappa);

struct RatePredictions {
    double subcritical = 0;      // (n-1)(sigma-1/n)
    double heat = 0;             // 2 n sigma, valid whenever J = 0
    double poincare_lb = 0;      // (n-1) e^{-2 kappa}
    double supercritical_lb = 0; // poincare_lb * beta
    double near_threshold = 0;   // 2(n-1)(1/n - sigma)
    double critical_slope = 0;   // 2(n-1)/(n(n+2))
};

// Constants that do not apply to the regime of sigma are NaN.
RatePredictions asymptotic_rate_bound(int n, double sigma);

struct EquilibriumSummary {
    int n = 0;
    double sigma = 0;
    Regime regime = Regime::subcritical;
    double kappa = 0, c = 0, beta = 0;
    RatePredictions rates;
};

EquilibriumSummary summarize_equilibrium(int n, double sigma);

} // namespace doi
