#pragma once

#include <iosfwd>
#include <span>
#include <vector>

namespace doi {

// k_l^(n): dimension of degree-l spherical harmonics on S^{n-1}.
long long dim_spherical_harmonics(int n, int l);
// Same number through the difference of two binomials; used as a check.
long long dim_spherical_harmonics_diff(int n, int l);

double laplace_eigenvalue(int n, int l);    // l(l+n-2)
double conformal_eigenvalue(int n, int l);  // l(l+1)...(l+n-2), l >= 1

// Gegenbauer P_i^(lambda)(x) by the three-term recurrence.
double gegenbauer_eval(double lambda, int i, double x);

// Spectral coefficients of the orthonormal zonal basis Y_l on S^{n-1},
// normalized against the unit-mass sphere measure and with Y_l(1) > 0.
class BasisTable {
public:
    BasisTable(int n, int L);

    int n() const { return n_; }
    int L() const { return L_; }

    // indexed by l; entries outside the documented range are zero
    std::span<const double> lambda() const { return lambda_; }          // 0..L+1
    std::span<const double> conf_lambda() const { return conf_; }       // 1..L
    std::span<const double> b() const { return b_; }                    // 0..L
    std::span<const double> u() const { return u_; }                    // 0..L
    std::span<const double> grad_lo() const { return grad_lo_; }        // 1..L+1
    std::span<const double> grad_hi() const { return grad_hi_; }        // 0..L
    // Y_l = alpha_l P_l^(n/2-1)  (n >= 3) or alpha_l T_l (n = 2)
    std::span<const double> alpha() const { return alpha_; }            // 0..L+1

    double lambda(int l) const { return lambda_[l]; }
    double conf_lambda(int l) const { return conf_[l]; }
    double u(int l) const { return u_[l]; }

    double max_b() const;
    void write_tsv(std::ostream& os) const;

private:
    int n_, L_;
    std::vector<double> lambda_, conf_, b_, u_, grad_lo_, grad_hi_, alpha_;
};

// Values of Y_0..Y_{m-1} at x through the orthonormal recurrence, m = out.size() <= L+2.
void eval_zonal_basis(const BasisTable& basis, double x, std::span<double> out);

} // namespace doi
