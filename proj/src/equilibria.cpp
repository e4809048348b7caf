#include "doi/equilibria.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace doi {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// above this kappa the Gauss rule in x under-resolves e^{kappa x}
constexpr double kLaguerreSwitch = 100.0;

void check_n(int n)
{
    if (n < 2) throw std::invalid_argument("dimension n must be >= 2");
}

// a_0 = 1, a_{p+1} = a_p / ((2p+n)(2p+2)); returns A_p = a_p kappa^{2p}
std::vector<double> series_terms(int n, double kappa)
{
    if (kappa > 50.0) throw std::invalid_argument("series evaluation limited to kappa <= 50");
    std::vector<double> A{1.0};
    double sum = 1.0;
    const double k2 = kappa * kappa;
    for (int p = 0; p < 10000; ++p) {
        double next = A.back() * k2 / ((2.0 * p + n) * (2.0 * p + 2.0));
        A.push_back(next);
        sum += next;
        if (next < 1e-18 * sum && next <= A[A.size() - 2]) break;
    }
    return A;
}

} // namespace

std::string_view to_string(Regime r)
{
    switch (r) {
    case Regime::subcritical: return "subcritical";
    case Regime::critical: return "critical";
    case Regime::supercritical: return "supercritical";
    }
    return "?";
}

Regime classify_regime(int n, double sigma)
{
    check_n(n);
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
    const double th = 1.0 / n;
    if (sigma < th - kRegimeTol) return Regime::supercritical;
    if (sigma <= th + kRegimeTol) return Regime::critical;
    return Regime::subcritical;
}

VonMises::VonMises(int n, int order)
    : n_(n), q_(build_quadrature(n, order)), lag_(build_gauss_laguerre(0.5 * (n - 3), 96))
{
}

void VonMises::moments(double kappa, double& den, double& num, double& lden) const
{
    den = num = 0.0;
    const auto& x = q_.nodes;
    const auto& w = q_.weights;
    if (kappa < 1.0) {
        // pair +-x: cosh/sinh forms, no cancellation as kappa -> 0
        for (std::size_t i = 0; i < x.size(); ++i) {
            den += w[i] * std::cosh(kappa * x[i]);
            num += w[i] * x[i] * std::sinh(kappa * x[i]);
        }
        lden = 0.0;
    } else if (kappa <= kLaguerreSwitch) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            double e = std::exp(kappa * (x[i] - 1.0));
            den += w[i] * e;
            num += w[i] * x[i] * e;
        }
        lden = kappa;
    } else {
        // x = 1 - s/kappa, weight s^a e^{-s} (2 - s/kappa)^a
        const double a = 0.5 * (n_ - 3);
        for (std::size_t j = 0; j < lag_.nodes.size(); ++j) {
            double s = lag_.nodes[j];
            if (s >= 2.0 * kappa) break;
            double r = s / kappa;
            double g = lag_.weights[j] * std::pow(2.0 - r, a);
            den += g;
            num += g * (1.0 - r);
        }
        // int (1-x^2)^a dx = sqrt(pi) Gamma(a+1)/Gamma(a+3/2)
        double lB = 0.5 * std::log(M_PI) + std::lgamma(a + 1.0) - std::lgamma(a + 1.5);
        lden = kappa - (1.0 + a) * std::log(kappa) - lB;
    }
}

double VonMises::order_parameter(double kappa) const
{
    if (!(kappa >= 0.0)) throw std::invalid_argument("order_parameter: kappa must be >= 0");
    if (kappa == 0.0) return 0.0;
    double den, num, lden;
    moments(kappa, den, num, lden);
    return num / den;
}

double VonMises::order_parameter_series(double kappa) const
{
    if (!(kappa >= 0.0)) throw std::invalid_argument("order_parameter_series: kappa must be >= 0");
    auto A = series_terms(n_, kappa);
    double s1 = 0.0, sc = 0.0;
    for (std::size_t p = 0; p < A.size(); ++p) {
        s1 += A[p];
        sc += A[p] / (2.0 * p + n_);
    }
    return kappa * sc / s1;
}

double VonMises::sigma_tilde(double kappa) const
{
    if (!(kappa > 0.0)) throw std::invalid_argument("sigma_tilde: kappa must be > 0");
    return order_parameter(kappa) / kappa;
}

double VonMises::solve_kappa(double sigma) const
{
    if (!(sigma > 0.0)) throw std::invalid_argument("solve_kappa: sigma must be > 0");
    if (classify_regime(n_, sigma) != Regime::supercritical)
        throw RegimeError("solve_kappa: no positive root for sigma >= 1/n");
    double lo = 0.0, hi = 1.0;
    while (sigma_tilde(hi) >= sigma) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e8) throw std::runtime_error("solve_kappa: bracket search failed");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
        double mid = 0.5 * (lo + hi);
        if (sigma_tilde(mid) > sigma)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double VonMises::beta(double kappa) const
{
    if (!(kappa >= 0.0)) throw std::invalid_argument("beta: kappa must be >= 0");
    if (kappa == 0.0) return 0.0;
    double c = order_parameter(kappa);
    return c * c + n_ * (c / kappa) - 1.0;
}

double VonMises::beta_series(double kappa) const
{
    if (!(kappa >= 0.0)) throw std::invalid_argument("beta_series: kappa must be >= 0");
    auto A = series_terms(n_, kappa);
    double s1 = 0.0, num = 0.0;
    const std::size_t P = A.size();
    for (std::size_t p = 0; p < P; ++p) {
        s1 += A[p];
        for (std::size_t q = 0; q < P; ++q) {
            double d = static_cast<double>(p) - static_cast<double>(q);
            num += 2.0 * d * d / ((2.0 * p + n_) * (2.0 * q + n_)) * A[p] * A[q];
        }
    }
    return num / (s1 * s1);
}

double VonMises::log_partition(double kappa) const
{
    if (!(kappa >= 0.0)) throw std::invalid_argument("log_partition: kappa must be >= 0");
    if (kappa == 0.0) return 0.0;
    double den, num, lden;
    moments(kappa, den, num, lden);
    return std::log(den) + lden;
}

double VonMises::density(double kappa, double x) const
{
    if (!(kappa >= 0.0)) throw std::invalid_argument("density: kappa must be >= 0");
    if (kappa == 0.0) return 1.0;
    return std::exp(kappa * x - log_partition(kappa));
}

double VonMises::second_moment(double kappa) const
{
    if (!(kappa >= 0.0)) throw std::invalid_argument("second_moment: kappa must be >= 0");
    const double lz = log_partition(kappa);
    return q_.integrate([&](double x) { return x * x * std::exp(kappa * x - lz); });
}

double VonMises::free_energy(double kappa, double sigma) const
{
    if (!(kappa >= 0.0)) throw std::invalid_argument("free_energy: kappa must be >= 0");
    if (kappa == 0.0) return 0.0;
    double c = order_parameter(kappa);
    return sigma * (kappa * c - log_partition(kappa)) - 0.5 * c * c;
}

double VonMises::free_energy(double kappa) const
{
    if (kappa == 0.0) return 0.0;
    return free_energy(kappa, sigma_tilde(kappa));
}

const VonMises& von_mises(int n)
{
    check_n(n);
    static std::mutex mu;
    static std::map<int, std::unique_ptr<VonMises>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<VonMises>(n);
    return *slot;
}

double order_parameter_c(int n, double kappa) { return von_mises(n).order_parameter(kappa); }
double sigma_tilde(int n, double kappa) { return von_mises(n).sigma_tilde(kappa); }
double solve_kappa(int n, double sigma) { return von_mises(n).solve_kappa(sigma); }
double beta(int n, double kappa) { return von_mises(n).beta(kappa); }
double fvm_density(int n, double kappa, double x) { return von_mises(n).density(kappa, x); }
double fvm_free_energy(int n, double kappa) { return von_mises(n).free_energy(kappa); }

RatePredictions asymptotic_rate_bound(int n, double sigma)
{
    Regime reg = classify_regime(n, sigma);
    RatePredictions r;
    r.heat = 2.0 * n * sigma;
    r.subcritical = r.poincare_lb = r.supercritical_lb = r.near_threshold = r.critical_slope = kNaN;
    switch (reg) {
    case Regime::subcritical:
        r.subcritical = (n - 1) * (sigma - 1.0 / n);
        break;
    case Regime::critical:
        r.critical_slope = 2.0 * (n - 1) / (n * (n + 2.0));
        break;
    case Regime::supercritical: {
        const auto& vm = von_mises(n);
        double kappa = vm.solve_kappa(sigma);
        r.poincare_lb = (n - 1) * std::exp(-2.0 * kappa);
        r.supercritical_lb = r.poincare_lb * vm.beta(kappa);
        r.near_threshold = 2.0 * (n - 1) * (1.0 / n - sigma);
        break;
    }
    }
    return r;
}

EquilibriumSummary summarize_equilibrium(int n, double sigma)
{
    EquilibriumSummary s;
    s.n = n;
    s.sigma = sigma;
    s.regime = classify_regime(n, sigma);
    if (s.regime == Regime::supercritical) {
        const auto& vm = von_mises(n);
        s.kappa = vm.solve_kappa(sigma);
        s.c = vm.order_parameter(s.kappa);
        s.beta = vm.beta(s.kappa);
    }
    s.rates = asymptotic_rate_bound(n, sigma);
    return s;
}

} // namespace doi
