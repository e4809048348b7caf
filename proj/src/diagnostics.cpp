#include "doi/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace doi {

namespace {

struct LineFit {
    double slope = 0, intercept = 0, r2 = 0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y)
{
    const double m = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

void check_series(std::span<const double> t, std::span<const double> v)
{
    if (t.size() != v.size()) throw std::invalid_argument("rate fit: t and value lengths differ");
}

} // namespace

ZonalNodal::ZonalNodal(const BasisTable& basis, Quadrature q)
    : basis_(basis), q_(std::move(q)), stride_(basis.L() + 2)
{
    if (q_.n != basis_.n()) throw std::invalid_argument("ZonalNodal: quadrature and basis dimension differ");
    const int M = q_.order();
    Y_.resize(static_cast<std::size_t>(M) * stride_);
    for (int i = 0; i < M; ++i)
        eval_zonal_basis(basis_, q_.nodes[i], std::span<double>(&Y_[static_cast<std::size_t>(i) * stride_], stride_));
}

void ZonalNodal::evaluate(const ZonalField& f, std::vector<double>& val, std::vector<double>& egrad) const
{
    const int L = basis_.L();
    if (f.L != L || f.n != basis_.n()) throw std::invalid_argument("ZonalNodal: field does not match basis");
    auto g = axis_gradient(f.c, basis_);
    const int M = q_.order();
    val.assign(M, 0.0);
    egrad.assign(M, 0.0);
    for (int i = 0; i < M; ++i) {
        const double* y = &Y_[static_cast<std::size_t>(i) * stride_];
        double s = 0, d = 0;
        for (int l = 0; l <= L; ++l) s += f.c[l] * y[l];
        for (int l = 0; l <= L + 1; ++l) d += g[l] * y[l];
        val[i] = s;
        egrad[i] = d;
    }
}

ClippedValue ZonalNodal::free_energy(const ZonalField& f, double sigma, double clip_floor) const
{
    std::vector<double> v, g;
    evaluate(f, v, g);
    ClippedValue r;
    double s = 0;
    for (int i = 0; i < q_.order(); ++i) {
        double fi = v[i];
        if (fi <= clip_floor) {
            ++r.clipped;
            fi = clip_floor;
        }
        s += q_.weights[i] * fi * std::log(fi);
    }
    double j = f.flux();
    r.value = sigma * s - 0.5 * j * j;
    return r;
}

ClippedValue ZonalNodal::dissipation(const ZonalField& f, double sigma, double clip_floor) const
{
    std::vector<double> v, g;
    evaluate(f, v, g);
    ClippedValue r;
    double fisher = 0, m2 = 0;
    for (int i = 0; i < q_.order(); ++i) {
        double x = q_.nodes[i];
        double fi = v[i];
        m2 += q_.weights[i] * x * x * fi;
        if (fi <= clip_floor) {
            ++r.clipped;
            fi = clip_floor;
        }
        // |grad f|^2 = (e.grad f)^2 / (1 - x^2) for zonal f
        fisher += q_.weights[i] * g[i] * g[i] / ((1.0 - x * x) * fi);
    }
    const int n = basis_.n();
    double j = f.flux();
    r.value = sigma * sigma * fisher + (1.0 - 2.0 * (n - 1) * sigma) * j * j - j * j * m2;
    return r;
}

double ZonalNodal::min_value(const ZonalField& f) const
{
    std::vector<double> v, g;
    evaluate(f, v, g);
    return *std::min_element(v.begin(), v.end());
}

double ZonalNodal::second_moment(const ZonalField& f) const
{
    std::vector<double> v, g;
    evaluate(f, v, g);
    double m2 = 0;
    for (int i = 0; i < q_.order(); ++i) m2 += q_.weights[i] * q_.nodes[i] * q_.nodes[i] * v[i];
    return m2;
}

std::vector<double> axis_gradient(std::span<const double> c, const BasisTable& basis)
{
    const int L = basis.L();
    if (static_cast<int>(c.size()) != L + 1) throw std::invalid_argument("axis_gradient: length mismatch");
    auto gl = basis.grad_lo();
    auto gh = basis.grad_hi();
    std::vector<double> g(L + 2, 0.0);
    for (int l = 0; l <= L; ++l) {
        if (l >= 1) g[l - 1] += gl[l] * c[l];
        g[l + 1] += gh[l] * c[l];
    }
    return g;
}

EntropyPair entropy_pair(const ZonalField& f, const BasisTable& basis, double sigma)
{
    if (f.L != basis.L() || f.n != basis.n()) throw std::invalid_argument("entropy_pair: field does not match basis");
    const int n = f.n;
    double H = 0, S = 0;
    for (int l = 1; l <= f.L; ++l) {
        double c2 = f.c[l] * f.c[l] / basis.conf_lambda(l);
        H += c2;
        S += basis.lambda(l) * c2;
    }
    double fact = std::tgamma(n - 1.0);  // (n-2)!
    double j = f.flux();
    return {H, 2.0 * sigma * S - 2.0 * j * j / fact};
}

double sobolev_norm(const ZonalField& f, const BasisTable& basis, double s)
{
    if (f.L != basis.L()) throw std::invalid_argument("sobolev_norm: field does not match basis");
    double acc = 0;
    for (int l = 1; l <= f.L; ++l) acc += std::pow(basis.lambda(l), s) * f.c[l] * f.c[l];
    return std::sqrt(acc);
}

double l2_distance(const ZonalField& f)
{
    double acc = 0;
    for (int l = 1; l <= f.L; ++l) acc += f.c[l] * f.c[l];
    return std::sqrt(acc);
}

Commutator commutator_axis(std::span<const double> c, const BasisTable& basis)
{
    const int L = basis.L();
    if (static_cast<int>(c.size()) != L + 1) throw std::invalid_argument("commutator_axis: length mismatch");
    std::vector<double> d(L + 1, 0.0);
    for (int l = 1; l <= L; ++l) d[l] = c[l] / basis.conf_lambda(l);
    auto g = axis_gradient(d, basis);
    Commutator r;
    // int g e.grad(d) with c[0] taken as 0 (mean-zero g)
    for (int l = 1; l <= L; ++l) r.value += c[l] * g[l];
    // term sizes: each pairing c_l d_{l+1} grad_lo and c_l d_{l-1} grad_hi
    for (int l = 1; l <= L; ++l) {
        if (l + 1 <= L) r.scale += std::abs(c[l] * basis.grad_lo()[l + 1] * d[l + 1]);
        if (l - 1 >= 1) r.scale += std::abs(c[l] * basis.grad_hi()[l - 1] * d[l - 1]);
    }
    return r;
}

std::optional<double> gevrey_radius(std::span<const double> c, double floor)
{
    std::vector<double> x, y;
    for (std::size_t l = 1; l < c.size(); ++l) {
        double a = std::abs(c[l]);
        if (a > floor && std::isfinite(a)) {
            x.push_back(static_cast<double>(l));
            y.push_back(-std::log(a));
        }
    }
    if (x.size() < 8) return std::nullopt;
    return least_squares(x, y).slope;
}

RateFit fit_exponential_rate(std::span<const double> t, std::span<const double> v, RateWindow w)
{
    check_series(t, v);
    RateFit r;
    const std::size_t N = v.size();
    std::size_t first = N;
    for (std::size_t i = 0; i < N; ++i)
        if (v[i] < w.threshold) {
            first = i;
            break;
        }
    if (first == N) return r;
    std::size_t start = first;
    for (std::size_t i = first; i < N; ++i)
        if (!(v[i] > 0.0) || !std::isfinite(v[i])) {
            start = i + 1;
            r.shrunk = true;
        }
    if (start >= N) return r;
    start += static_cast<std::size_t>(std::floor((N - start) * (1.0 - w.fraction)));
    std::vector<double> x, y;
    for (std::size_t i = start; i < N; ++i) {
        x.push_back(t[i]);
        y.push_back(std::log(v[i]));
    }
    r.points = static_cast<int>(x.size());
    if (r.points < w.min_points) return r;
    auto f = least_squares(x, y);
    r.rate = -f.slope;
    r.r2 = f.r2;
    r.ok = true;
    return r;
}

RateFit fit_critical_slope(std::span<const double> t, std::span<const double> l2, RateWindow w)
{
    check_series(t, l2);
    RateFit r;
    const std::size_t N = l2.size();
    std::size_t start = 0;
    for (std::size_t i = 0; i < N; ++i)
        if (!(l2[i] > 0.0) || !std::isfinite(l2[i])) {
            start = i + 1;
            r.shrunk = true;
        }
    if (start >= N) return r;
    start += static_cast<std::size_t>(std::floor((N - start) * (1.0 - w.fraction)));
    std::vector<double> x, y;
    for (std::size_t i = start; i < N; ++i) {
        x.push_back(t[i]);
        y.push_back(1.0 / (l2[i] * l2[i]));
    }
    r.points = static_cast<int>(x.size());
    if (r.points < w.min_points) return r;
    auto f = least_squares(x, y);
    r.rate = f.slope;
    r.r2 = f.r2;
    r.ok = true;
    return r;
}

ConservationResiduals conservation_check(std::span<const double> t, std::span<const double> F,
                                         std::span<const double> D, std::span<const double> H,
                                         std::span<const double> Dtilde, bool check_F)
{
    const std::size_t N = t.size();
    if (F.size() != N || D.size() != N || H.size() != N || Dtilde.size() != N)
        throw std::invalid_argument("conservation_check: column lengths differ");
    ConservationResiduals r;
    r.F_checked = check_F;
    for (std::size_t i = 0; i + 1 < N; ++i) {
        double dt = t[i + 1] - t[i];
        if (!(dt > 0)) throw std::invalid_argument("conservation_check: times not increasing");
        if (check_F) r.F = std::max(r.F, std::abs((F[i + 1] - F[i]) / dt + 0.5 * (D[i] + D[i + 1])));
        r.H = std::max(r.H, std::abs((H[i + 1] - H[i]) / dt + 0.5 * (Dtilde[i] + Dtilde[i + 1])));
    }
    return r;
}

} // namespace doi
