#include "doi/harmonics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace doi {

namespace {

long long binomial(long long m, long long k)
{
    if (k < 0 || m < 0 || k > m) return 0;
    k = std::min(k, m - k);
    __int128 r = 1;
    for (long long i = 0; i < k; ++i) {
        r = r * (m - i) / (i + 1);  // exact: r*(m-i) is divisible by i+1
        if (r > static_cast<__int128>(9e18)) throw std::overflow_error("binomial overflow");
    }
    return static_cast<long long>(r);
}

void check_nl(int n, int l)
{
    if (n < 2) throw std::invalid_argument("dimension n must be >= 2");
    if (l < 0) throw std::invalid_argument("degree must be >= 0");
}

bool close_rel(double a, double b, double tol)
{
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace

long long dim_spherical_harmonics(int n, int l)
{
    check_nl(n, l);
    return binomial(n + l - 2, n - 2) + binomial(n + l - 3, n - 2);
}

long long dim_spherical_harmonics_diff(int n, int l)
{
    check_nl(n, l);
    return binomial(n + l - 1, n - 1) - binomial(n + l - 3, n - 1);
}

double laplace_eigenvalue(int n, int l)
{
    check_nl(n, l);
    return static_cast<double>(l) * (l + n - 2);
}

double conformal_eigenvalue(int n, int l)
{
    check_nl(n, l);
    if (l == 0) throw std::invalid_argument("conformal eigenvalue needs l >= 1");
    double p = 1.0;
    for (int k = l; k <= l + n - 2; ++k) p *= k;
    return p;
}

double gegenbauer_eval(double lambda, int i, double x)
{
    if (!(lambda > -0.5) || lambda == 0.0)
        throw std::invalid_argument("gegenbauer_eval: need lambda > -1/2, lambda != 0");
    if (i < 0) throw std::invalid_argument("gegenbauer_eval: negative degree");
    if (!(x >= -1.0 && x <= 1.0)) throw std::invalid_argument("gegenbauer_eval: x outside [-1,1]");
    double pm = 0.0, p = 1.0;
    for (int k = 0; k < i; ++k) {
        double pn = (2.0 * (k + lambda) * x * p - (k + 2.0 * lambda - 1.0) * pm) / (k + 1.0);
        pm = p;
        p = pn;
    }
    return p;
}

BasisTable::BasisTable(int n, int L) : n_(n), L_(L)
{
    if (n < 2) throw std::invalid_argument("BasisTable: n must be >= 2");
    if (L < 2) throw std::invalid_argument("BasisTable: L must be >= 2");

    lambda_.assign(L + 2, 0.0);
    conf_.assign(L + 1, 0.0);
    b_.assign(L + 1, 0.0);
    u_.assign(L + 1, 0.0);
    grad_lo_.assign(L + 2, 0.0);
    grad_hi_.assign(L + 1, 0.0);
    alpha_.assign(L + 2, 0.0);

    const double h = 0.5 * n;
    for (int l = 0; l <= L + 1; ++l) lambda_[l] = laplace_eigenvalue(n, l);
    for (int l = 1; l <= L; ++l) conf_[l] = conformal_eigenvalue(n, l);

    // b_l from the coupling formula; ratios of square roots, no factorials
    for (int l = 0; l <= L; ++l)
        b_[l] = std::sqrt(l + 1.0) * std::sqrt(l + n - 2.0) /
                (std::sqrt(l + h - 1.0) * std::sqrt(l + h));
    if (n == 2) {
        // Chebyshev case: Y_l = sqrt2 T_l, the l = 0 entry carries the sqrt2
        b_[0] = std::sqrt(2.0);
        for (int l = 1; l <= L; ++l) b_[l] = 1.0;
        alpha_[0] = 1.0;
        for (int l = 1; l <= L + 1; ++l) alpha_[l] = std::sqrt(2.0);
        for (int l = 0; l <= L; ++l) u_[l] = 0.5 * b_[l];
        for (int l = 1; l <= L + 1; ++l) grad_lo_[l] = 0.5 * b_[l - 1] * (l + n - 2);
        for (int l = 0; l <= L; ++l) grad_hi_[l] = -0.5 * b_[l] * l;
    } else {
        const double lam = h - 1.0;
        alpha_[0] = 1.0;
        for (int l = 0; l <= L; ++l) {
            double r2 = (l + 1.0) * (l + h) / ((l + n - 2.0) * (l + h - 1.0));
            alpha_[l + 1] = alpha_[l] * std::sqrt(r2);
        }
        for (int l = 0; l <= L; ++l) {
            double up = (l + 1.0) / (2.0 * (l + lam)) * alpha_[l] / alpha_[l + 1];
            double down = alpha_[l + 1] / alpha_[l] * (l + 2.0 * lam) / (2.0 * (l + 1.0 + lam));
            if (!close_rel(up, down, 1e-12))
                throw std::logic_error("BasisTable: x-multiplication not symmetric at l=" + std::to_string(l));
            u_[l] = up;
        }
        for (int l = 1; l <= L + 1; ++l)
            grad_lo_[l] = alpha_[l] / alpha_[l - 1] * (l + 2.0 * lam - 1.0) * (l + 2.0 * lam) /
                          (2.0 * (l + lam));
        for (int l = 0; l <= L; ++l)
            grad_hi_[l] = -alpha_[l] / alpha_[l + 1] * l * (l + 1.0) / (2.0 * (l + lam));

        // recurrence route against the closed coupling formula
        for (int l = 0; l <= L; ++l) {
            bool ok = close_rel(u_[l], 0.5 * b_[l], 1e-12) &&
                      close_rel(grad_hi_[l], -0.5 * b_[l] * l, 1e-12) &&
                      close_rel(grad_lo_[l + 1], 0.5 * b_[l] * (l + n - 1), 1e-12);
            if (!ok) throw std::logic_error("BasisTable: coupling mismatch at l=" + std::to_string(l));
        }
    }

    auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!finite(lambda_) || !finite(conf_) || !finite(b_) || !finite(u_) || !finite(grad_lo_) ||
        !finite(grad_hi_) || !finite(alpha_))
        throw std::overflow_error("BasisTable: non-finite coefficient for n=" + std::to_string(n) +
                                  ", L=" + std::to_string(L));
}

double BasisTable::max_b() const
{
    // l = 0 is excluded in the n=2 convention (b = 1 there for l >= 1)
    return *std::max_element(b_.begin() + 1, b_.end());
}

void BasisTable::write_tsv(std::ostream& os) const
{
    auto old = os.precision(17);
    os << "l\tlambda\tconf_lambda\tb\tu\tgrad_lo\tgrad_hi\n";
    for (int l = 0; l <= L_; ++l)
        os << l << '\t' << lambda_[l] << '\t' << conf_[l] << '\t' << b_[l] << '\t' << u_[l] << '\t'
           << grad_lo_[l] << '\t' << grad_hi_[l] << '\n';
    os.precision(old);
}

void eval_zonal_basis(const BasisTable& basis, double x, std::span<double> out)
{
    const int m = static_cast<int>(out.size());
    if (m < 2 || m > basis.L() + 2) throw std::invalid_argument("eval_zonal_basis: bad output length");
    auto u = basis.u();
    out[0] = 1.0;
    out[1] = x / u[0];
    for (int l = 1; l + 1 < m; ++l) out[l + 1] = (x * out[l] - u[l - 1] * out[l - 1]) / u[l];
}

} // namespace doi
