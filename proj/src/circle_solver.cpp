#include "doi/circle_solver.hpp"

#include "doi/equilibria.hpp"
#include "doi/zonal_solver.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace doi {

namespace {

using cplx = std::complex<double>;

// y = a_1..a_K, b_1..b_K. In complex form f_k = (a_k - i b_k)/2,
//   df_k/dt = -sigma k^2 f_k - i k (v f_{k-1} + conj(v) f_{k+1}),  v = (J2 + i J1)/2,
// which is the transport term d/dtheta[(J.tau) f] split into k -> k+-1 couplings.
void circle_nonlinear(std::span<const double> y, int K, std::span<double> out)
{
    auto fk = [&](int k) -> cplx {
        if (k == 0) return {1.0, 0.0};
        if (k > K) return {0.0, 0.0};
        return {0.5 * y[k - 1], -0.5 * y[K + k - 1]};
    };
    const double J1 = 0.5 * y[0], J2 = 0.5 * y[K];
    const cplx v(0.5 * J2, 0.5 * J1);
    for (int k = 1; k <= K; ++k) {
        cplx p = v * fk(k - 1) + std::conj(v) * fk(k + 1);
        cplx d = cplx(0.0, -static_cast<double>(k)) * p;
        out[k - 1] = 2.0 * d.real();
        out[K + k - 1] = -2.0 * d.imag();
    }
}

std::vector<double> circle_diag(int K, double sigma)
{
    std::vector<double> d(2 * K);
    for (int k = 1; k <= K; ++k) d[k - 1] = d[K + k - 1] = -sigma * k * k;
    // linear part of the transport: a_1 and b_1 grow at rate 1/2 about f = 1
    d[0] += 0.5;
    d[K] += 0.5;
    return d;
}

void check_field(const CircleField& f)
{
    if (f.K < 1 || static_cast<int>(f.a.size()) != f.K + 1 || static_cast<int>(f.b.size()) != f.K + 1)
        throw std::invalid_argument("circle field: coefficient arrays must have length K+1");
}

} // namespace

void rhs_circle(const CircleField& f, double sigma, std::vector<double>& da, std::vector<double>& db)
{
    check_field(f);
    const int K = f.K;
    std::vector<double> y(2 * K), o(2 * K);
    for (int k = 1; k <= K; ++k) {
        if (!std::isfinite(f.a[k]) || !std::isfinite(f.b[k]))
            throw std::invalid_argument("rhs_circle: non-finite coefficient");
        y[k - 1] = f.a[k];
        y[K + k - 1] = f.b[k];
    }
    circle_nonlinear(y, K, o);
    da.assign(K + 1, 0.0);
    db.assign(K + 1, 0.0);
    for (int k = 1; k <= K; ++k) {
        da[k] = o[k - 1] - sigma * k * k * f.a[k];
        db[k] = o[K + k - 1] - sigma * k * k * f.b[k];
    }
}

CircleField circle_from_zonal(const ZonalField& z, double phi)
{
    if (z.n != 2) throw std::invalid_argument("circle_from_zonal: zonal field must have n = 2");
    CircleField f(z.L);
    for (int k = 1; k <= z.L; ++k) f.a[k] = std::sqrt(2.0) * z.c[k];
    return phi == 0.0 ? f : rotate(f, phi);
}

CircleField rotate(const CircleField& f, double phi)
{
    check_field(f);
    CircleField g(f.K);
    for (int k = 1; k <= f.K; ++k) {
        double c = std::cos(k * phi), s = std::sin(k * phi);
        g.a[k] = f.a[k] * c - f.b[k] * s;
        g.b[k] = f.a[k] * s + f.b[k] * c;
    }
    return g;
}

CircleStepper::CircleStepper(int K, double sigma) : K_(K), etd_(circle_diag(K, sigma))
{
    if (K < 1) throw std::invalid_argument("CircleStepper: K must be >= 1");
    if (!(sigma > 0)) throw std::invalid_argument("CircleStepper: sigma must be > 0");
}

void CircleStepper::step(std::span<double> y, double dt)
{
    if (!(dt > 0)) throw std::invalid_argument("step: dt must be > 0");
    etd_.step(y, dt, [this](std::span<const double> s, std::span<double> o) {
        circle_nonlinear(s, K_, o);
        o[0] -= 0.5 * s[0];
        o[K_] -= 0.5 * s[K_];
    });
}

void CircleStepper::step(CircleField& f, double dt)
{
    check_field(f);
    std::vector<double> y(2 * K_);
    for (int k = 1; k <= K_; ++k) {
        y[k - 1] = f.a[k];
        y[K_ + k - 1] = f.b[k];
    }
    step(y, dt);
    for (int k = 1; k <= K_; ++k) {
        f.a[k] = y[k - 1];
        f.b[k] = y[K_ + k - 1];
    }
}

CircleNodal::CircleNodal(int K, int M) : K_(K), M_(M > 0 ? M : std::max(4 * K, 64))
{
    if (M_ <= 2 * K_) throw std::invalid_argument("CircleNodal: need more than 2K grid points");
}

void CircleNodal::evaluate(const CircleField& f, std::vector<double>& val, std::vector<double>& dth) const
{
    if (f.K != K_) throw std::invalid_argument("CircleNodal: field does not match K");
    val.assign(M_, 1.0);
    dth.assign(M_, 0.0);
    for (int i = 0; i < M_; ++i) {
        double th = 2.0 * M_PI * i / M_;
        double v = 1.0, d = 0.0;
        for (int k = 1; k <= K_; ++k) {
            double c = std::cos(k * th), s = std::sin(k * th);
            v += f.a[k] * c + f.b[k] * s;
            d += k * (f.b[k] * c - f.a[k] * s);
        }
        val[i] = v;
        dth[i] = d;
    }
}

ClippedValue CircleNodal::free_energy(const CircleField& f, double sigma, double clip_floor) const
{
    std::vector<double> v, d;
    evaluate(f, v, d);
    ClippedValue r;
    double s = 0;
    for (int i = 0; i < M_; ++i) {
        double fi = v[i];
        if (fi <= clip_floor) {
            ++r.clipped;
            fi = clip_floor;
        }
        s += fi * std::log(fi);
    }
    s /= M_;
    double J1 = f.J1(), J2 = f.J2();
    r.value = sigma * s - 0.5 * (J1 * J1 + J2 * J2);
    return r;
}

ClippedValue CircleNodal::dissipation(const CircleField& f, double sigma, double clip_floor) const
{
    std::vector<double> v, d;
    evaluate(f, v, d);
    ClippedValue r;
    const double J1 = f.J1(), J2 = f.J2();
    double fisher = 0, proj = 0;
    for (int i = 0; i < M_; ++i) {
        double th = 2.0 * M_PI * i / M_;
        double wj = std::cos(th) * J1 + std::sin(th) * J2;
        proj += wj * wj * v[i];
        double fi = v[i];
        if (fi <= clip_floor) {
            ++r.clipped;
            fi = clip_floor;
        }
        fisher += d[i] * d[i] / fi;
    }
    fisher /= M_;
    proj /= M_;
    double J2n = J1 * J1 + J2 * J2;
    r.value = sigma * sigma * fisher + (1.0 - 2.0 * sigma) * J2n - proj;
    return r;
}

double CircleNodal::min_value(const CircleField& f) const
{
    std::vector<double> v, d;
    evaluate(f, v, d);
    return *std::min_element(v.begin(), v.end());
}

EntropyPair entropy_pair(const CircleField& f, double sigma)
{
    check_field(f);
    // orthonormal coefficients are a/sqrt2, b/sqrt2 and the conformal eigenvalue is k
    double H = 0, S = 0;
    for (int k = 1; k <= f.K; ++k) {
        double e = f.a[k] * f.a[k] + f.b[k] * f.b[k];
        H += e / (2.0 * k);
        S += k * e;
    }
    double J1 = f.J1(), J2 = f.J2();
    return {H, sigma * S - 2.0 * (J1 * J1 + J2 * J2)};
}

double l2_distance(const CircleField& f)
{
    double s = 0;
    for (int k = 1; k <= f.K; ++k) s += f.a[k] * f.a[k] + f.b[k] * f.b[k];
    return std::sqrt(0.5 * s);
}

OmegaTrack omega_track(std::span<const DiagnosticsRecord> records)
{
    OmegaTrack o;
    double prev = 0;
    for (const auto& r : records) {
        if (r.J.size() != 2) throw std::invalid_argument("omega_track: records need planar flux");
        double m = std::hypot(r.J[0], r.J[1]);
        o.magnitude.push_back(m);
        if (m == 0.0) {
            o.heat = true;
            o.angle.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        double a = std::atan2(r.J[1], r.J[0]);
        if (!o.angle.empty() && std::isfinite(prev)) a += 2.0 * M_PI * std::round((prev - a) / (2.0 * M_PI));
        o.angle.push_back(a);
        prev = a;
    }
    return o;
}

CircleSeries run_circle(const CircleConfig& cfg)
{
    const int K = cfg.K;
    if (K < 4) throw std::invalid_argument("run_circle: K must be >= 4");
    if (cfg.ic.K != K) throw std::invalid_argument("run_circle: initial field does not match K");
    check_field(cfg.ic);
    CircleNodal nodal(K);
    CircleStepper stepper(K, cfg.sigma);

    CircleSeries cs;
    const Regime reg = classify_regime(2, cfg.sigma);
    ZonalField fvm;
    if (reg == Regime::supercritical) {
        cs.kappa = solve_kappa(2, cfg.sigma);
        fvm = fvm_field(2, K, cs.kappa);
    }
    const double min0 = nodal.min_value(cfg.ic);
    const bool positive_ic = min0 > 0;
    cs.min_f = min0;

    std::vector<double> y(2 * K);
    for (int k = 1; k <= K; ++k) {
        y[k - 1] = cfg.ic.a[k];
        y[K + k - 1] = cfg.ic.b[k];
    }
    CircleField cur(K);
    double prevF = 0;

    auto out = [&](double t, std::span<const double> s) {
        for (int k = 1; k <= K; ++k) {
            cur.a[k] = s[k - 1];
            cur.b[k] = s[K + k - 1];
        }
        DiagnosticsRecord r;
        r.t = t;
        const double J1 = cur.J1(), J2 = cur.J2(), Jm = std::hypot(J1, J2);
        r.J = {J1, J2};
        auto Fv = nodal.free_energy(cur, cfg.sigma, cfg.clip_floor);
        auto Dv = nodal.dissipation(cur, cfg.sigma, cfg.clip_floor);
        r.F = Fv.value;
        r.D = Dv.value;
        r.clip_count = std::max(Fv.clipped, Dv.clipped);
        auto hp = entropy_pair(cur, cfg.sigma);
        r.H = hp.H;
        r.Dtilde = hp.Dtilde;
        r.l2 = l2_distance(cur);
        double h1 = 0;
        std::vector<double> amp(K + 1, 0.0);
        for (int k = 1; k <= K; ++k) {
            double e = cur.a[k] * cur.a[k] + cur.b[k] * cur.b[k];
            h1 += k * k * e;
            amp[k] = std::sqrt(0.5 * e);
        }
        r.hs = std::sqrt(0.5 * h1);
        r.alpha_crit = 2.0 * Jm;
        if (auto g = gevrey_radius(amp)) r.gevrey_r = *g;
        if (reg == Regime::supercritical && Jm > 0) {
            double phi = std::atan2(J2, J1), d = 0;
            for (int k = 1; k <= K; ++k) {
                double A = std::sqrt(2.0) * fvm.c[k] * std::cos(k * phi);
                double B = std::sqrt(2.0) * fvm.c[k] * std::sin(k * phi);
                d += (cur.a[k] - A) * (cur.a[k] - A) + (cur.b[k] - B) * (cur.b[k] - B);
            }
            r.dist_to_fvm = std::sqrt(0.5 * d);
        }
        r.min_f = nodal.min_value(cur);
        cs.min_f = std::min(cs.min_f, r.min_f);
        cs.clip_events += r.clip_count;
        if (cfg.check_free_energy && positive_ic && r.clip_count == 0 && !cs.records.empty()) {
            double tol = 1e-10 + 1e-8 * std::abs(prevF);
            if (r.F > prevF + tol) {
                std::vector<double> dump(s.begin(), s.end());
                throw NumericalAbort("free energy increased at t=" + std::to_string(t), t, dump);
            }
        }
        prevF = r.F;
        cs.t.push_back(t);
        cs.records.push_back(std::move(r));
        if (cfg.keep_fields) cs.fields.push_back(cur);
    };

    StepControl sc;
    sc.t_end = cfg.t_end;
    sc.dt_init = cfg.dt_init;
    sc.rel_tol = cfg.rel_tol;
    sc.output_dt = cfg.output_dt;
    sc.dt_max = cfg.dt_max;
    sc.adaptive = cfg.adaptive;
    cs.stats = drive(y, sc, [&](std::span<double> s, double dt) { stepper.step(s, dt); }, out);
    cs.final_field = cur;
    cs.omega = omega_track(cs.records);
    return cs;
}

} // namespace doi
