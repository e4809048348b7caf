#include "doi/zonal_solver.hpp"

#include "doi/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace doi {

IcSpec IcSpec::fvm(double kappa)
{
    IcSpec s;
    s.kind = Kind::fvm;
    s.kappa = kappa;
    return s;
}

IcSpec IcSpec::perturbed(double eps, std::vector<int> modes)
{
    IcSpec s;
    s.kind = Kind::perturbed;
    s.eps = eps;
    s.modes = std::move(modes);
    return s;
}

IcSpec IcSpec::from_coeffs(std::vector<double> c)
{
    IcSpec s;
    s.kind = Kind::coeffs;
    s.coeffs = std::move(c);
    return s;
}

IcSpec IcSpec::from_nodes(std::function<double(double)> f)
{
    IcSpec s;
    s.kind = Kind::nodes;
    s.node_fn = std::move(f);
    return s;
}

namespace {

// nonlinear part  j [ (n-1) (x f)_k - (e.grad f)_k ],  k = 1..L,  y = c_1..c_L
void nonlinear(std::span<const double> y, const BasisTable& B, std::span<double> out)
{
    const int L = B.L();
    const int n = B.n();
    auto gl = B.grad_lo();
    auto gh = B.grad_hi();
    auto u = B.u();
    const double j = y[0] / std::sqrt(static_cast<double>(n));
    for (int k = 1; k <= L; ++k) {
        double dn = k == 1 ? 1.0 : y[k - 2];
        double up = k < L ? y[k] : 0.0;  // c_{L+1} dropped
        double transport = gl[k + 1] * up + gh[k - 1] * dn;
        double growth = (n - 1) * (u[k] * up + u[k - 1] * dn);
        out[k - 1] = j * (growth - transport);
    }
}

void eval_at(const BasisTable& B, const ZonalField& f, const Quadrature& q, std::vector<double>& vals)
{
    std::vector<double> Y(B.L() + 1);
    vals.resize(q.order());
    for (int i = 0; i < q.order(); ++i) {
        eval_zonal_basis(B, q.nodes[i], Y);
        double s = 0;
        for (int l = 0; l <= B.L(); ++l) s += f.c[l] * Y[l];
        vals[i] = s;
    }
}

void project_nodes(const std::function<double(double)>& g, const BasisTable& B, const Quadrature& q,
                   Projection& p)
{
    std::vector<double> Y(B.L() + 1);
    double e = 0;
    std::vector<double> c(B.L() + 1, 0.0);
    for (int i = 0; i < q.order(); ++i) {
        double x = q.nodes[i];
        double v = g(x);
        if (!std::isfinite(v)) throw std::invalid_argument("initial condition: non-finite node value");
        eval_zonal_basis(B, x, Y);
        for (int l = 0; l <= B.L(); ++l) c[l] += q.weights[i] * v * Y[l];
        e += q.weights[i] * v * v;
    }
    if (std::abs(c[0] - 1.0) > 1e-10)
        throw std::invalid_argument("initial condition must have unit mass (got " + std::to_string(c[0]) + ")");
    for (int l = 1; l <= B.L(); ++l) {
        p.field.c[l] = c[l];
        e -= c[l] * c[l];
    }
    p.residual = std::max(0.0, e - c[0] * c[0]);
}

} // namespace

ZonalField fvm_field(int n, int L, double kappa)
{
    ZonalField f(n, L);
    if (kappa == 0.0) return f;
    const double k = std::abs(kappa);
    const auto& vm = von_mises(n);
    const double lz = vm.log_partition(k);
    BasisTable B(n, L);
    Quadrature q = build_quadrature(n, std::max(2 * L + 2, 200));
    std::vector<double> Y(L + 1);
    for (int i = 0; i < q.order(); ++i) {
        double x = q.nodes[i];
        double m = std::exp(k * x - lz);
        eval_zonal_basis(B, x, Y);
        for (int l = 1; l <= L; ++l) f.c[l] += q.weights[i] * m * Y[l];
    }
    f.c[1] = std::sqrt(static_cast<double>(n)) * vm.order_parameter(k);  // exact flux relation
    if (kappa < 0)
        for (int l = 1; l <= L; l += 2) f.c[l] = -f.c[l];
    return f;
}

Projection project_ic(const IcSpec& ic, const BasisTable& B, const Quadrature& q)
{
    if (q.n != B.n()) throw std::invalid_argument("project_ic: quadrature dimension differs from basis");
    const int n = B.n(), L = B.L();
    Projection p;
    p.field = ZonalField(n, L);
    switch (ic.kind) {
    case IcSpec::Kind::uniform:
        break;
    case IcSpec::Kind::fvm: {
        if (!(ic.kappa >= 0)) throw std::invalid_argument("fvm initial condition needs kappa >= 0");
        p.field = fvm_field(n, L, ic.kappa);
        if (ic.kappa > 0) {
            const auto& vm = von_mises(n);
            double m2 = std::exp(vm.log_partition(2 * ic.kappa) - 2 * vm.log_partition(ic.kappa));
            double kept = 0;
            for (double c : p.field.c) kept += c * c;
            p.residual = std::max(0.0, m2 - kept);
        }
        break;
    }
    case IcSpec::Kind::perturbed:
        if (!std::isfinite(ic.eps)) throw std::invalid_argument("perturbed initial condition: bad amplitude");
        for (int m : ic.modes) {
            if (m < 1 || m > L) throw std::invalid_argument("perturbed mode " + std::to_string(m) + " outside 1..L");
            p.field.c[m] = ic.eps;
        }
        break;
    case IcSpec::Kind::coeffs:
        for (std::size_t i = 0; i < ic.coeffs.size(); ++i) {
            double v = ic.coeffs[i];
            if (!std::isfinite(v)) throw std::invalid_argument("coefficient list has a non-finite entry");
            if (static_cast<int>(i) + 1 <= L)
                p.field.c[i + 1] = v;
            else
                p.residual += v * v;
        }
        break;
    case IcSpec::Kind::nodes:
        if (!ic.node_fn) throw std::invalid_argument("node-value initial condition without a function");
        project_nodes(ic.node_fn, B, q, p);
        break;
    }
    std::vector<double> vals;
    eval_at(B, p.field, q, vals);
    p.min_node = *std::min_element(vals.begin(), vals.end());
    p.nonpositive = !(p.min_node > 0);
    return p;
}

void rhs(const ZonalField& f, const BasisTable& B, double sigma, std::span<double> out)
{
    if (f.n != B.n() || f.L != B.L()) throw std::invalid_argument("rhs: field does not match basis");
    if (static_cast<int>(out.size()) != f.L + 1) throw std::invalid_argument("rhs: output length must be L+1");
    for (double v : f.c)
        if (!std::isfinite(v)) throw std::invalid_argument("rhs: non-finite coefficient");
    std::span<const double> y(f.c.data() + 1, f.L);
    nonlinear(y, B, out.subspan(1));
    out[0] = 0.0;
    for (int k = 1; k <= f.L; ++k) out[k] += -sigma * B.lambda(k) * f.c[k];
}

std::vector<double> rhs(const ZonalField& f, const BasisTable& B, double sigma)
{
    std::vector<double> out(f.L + 1);
    rhs(f, B, sigma, out);
    return out;
}

namespace {
// The transport term has one linear piece, the c_0 = 1 coupling in k = 1
// (rate (n-1)/n). It goes on the exact diagonal with the diffusion so the
// linearization about the uniform state is integrated exactly.
double uniform_growth(const BasisTable& B)
{
    return ((B.n() - 1) * B.u(0) - B.grad_hi()[0]) / std::sqrt(static_cast<double>(B.n()));
}

std::vector<double> linear_diag(const BasisTable& B, double sigma)
{
    std::vector<double> d(B.L());
    for (int k = 1; k <= B.L(); ++k) d[k - 1] = -sigma * B.lambda(k);
    d[0] += uniform_growth(B);
    return d;
}
} // namespace

ZonalStepper::ZonalStepper(const BasisTable& basis, double sigma)
    : basis_(basis), sigma_(sigma), growth_(uniform_growth(basis)), etd_(linear_diag(basis, sigma))
{
    if (!(sigma > 0)) throw std::invalid_argument("ZonalStepper: sigma must be > 0");
}

void ZonalStepper::step(std::span<double> y, double dt)
{
    if (!(dt > 0)) throw std::invalid_argument("step: dt must be > 0");
    etd_.step(y, dt, [this](std::span<const double> s, std::span<double> o) {
        nonlinear(s, basis_, o);
        o[0] -= growth_ * s[0];
    });
}

void ZonalStepper::step(ZonalField& f, double dt)
{
    step(std::span<double>(f.c.data() + 1, f.L), dt);
    for (int l = 1; l <= f.L; ++l)
        if (!std::isfinite(f.c[l])) throw NumericalAbort("non-finite state after step", 0.0, f.c);
}

ZonalField step(const ZonalField& f, const BasisTable& basis, double sigma, double dt)
{
    ZonalStepper s(basis, sigma);
    ZonalField g = f;
    s.step(g, dt);
    return g;
}

TimeSeries run(const SolverConfig& cfg)
{
    if (cfg.L < 4) throw std::invalid_argument("run: L must be >= 4");
    if (!(cfg.t_end > 0) || !(cfg.dt_init > 0)) throw std::invalid_argument("run: t_end and dt must be > 0");
    const int n = cfg.n, L = cfg.L;
    BasisTable B(n, L);
    ZonalNodal nodal(B, build_quadrature(n, cfg.quad_order > 0 ? cfg.quad_order : std::max(2 * L, 16)));
    Quadrature qic = build_quadrature(n, std::max(2 * L + 2, 128));

    TimeSeries ts;
    ts.ic = project_ic(cfg.ic, B, qic);
    const bool positive_ic = !ts.ic.nonpositive;

    const Regime reg = classify_regime(n, cfg.sigma);
    ZonalField fvm;
    if (reg == Regime::supercritical) {
        ts.kappa = solve_kappa(n, cfg.sigma);
        fvm = fvm_field(n, L, ts.kappa);
    }

    ZonalStepper stepper(B, cfg.sigma);
    std::vector<double> y(ts.ic.field.c.begin() + 1, ts.ic.field.c.end());
    ZonalField cur(n, L);
    double prevF = 0;
    ts.min_f = ts.ic.min_node;

    auto out = [&](double t, std::span<const double> s) {
        std::copy(s.begin(), s.end(), cur.c.begin() + 1);
        DiagnosticsRecord r;
        r.t = t;
        double j = cur.flux();
        r.J = {j};
        auto Fv = nodal.free_energy(cur, cfg.sigma, cfg.clip_floor);
        auto Dv = nodal.dissipation(cur, cfg.sigma, cfg.clip_floor);
        r.F = Fv.value;
        r.D = Dv.value;
        r.clip_count = std::max(Fv.clipped, Dv.clipped);
        auto hp = entropy_pair(cur, B, cfg.sigma);
        r.H = hp.H;
        r.Dtilde = hp.Dtilde;
        r.l2 = l2_distance(cur);
        r.hs = sobolev_norm(cur, B, 1.0);
        r.alpha_crit = n * std::abs(j);
        if (auto g = gevrey_radius(cur.c)) r.gevrey_r = *g;
        if (reg == Regime::supercritical && j != 0.0) {
            double sgn = j > 0 ? 1.0 : -1.0, d = 0;
            for (int l = 1; l <= L; ++l) {
                double m = (l % 2 == 1 ? sgn : 1.0) * fvm.c[l];
                d += (cur.c[l] - m) * (cur.c[l] - m);
            }
            r.dist_to_fvm = std::sqrt(d);
        }
        r.min_f = nodal.min_value(cur);
        ts.min_f = std::min(ts.min_f, r.min_f);
        ts.clip_events += r.clip_count;

        if (cfg.check_free_energy && positive_ic && r.clip_count == 0 && !ts.records.empty()) {
            double tol = 1e-10 + 1e-8 * std::abs(prevF);
            if (r.F > prevF + tol)
                throw NumericalAbort("free energy increased at t=" + std::to_string(t), t, cur.c);
        }
        prevF = r.F;
        ts.t.push_back(t);
        ts.records.push_back(std::move(r));
        if (cfg.keep_fields) ts.fields.push_back(cur);
    };

    StepControl sc;
    sc.t_end = cfg.t_end;
    sc.dt_init = cfg.dt_init;
    sc.rel_tol = cfg.rel_tol;
    sc.output_dt = cfg.output_dt;
    sc.dt_max = cfg.dt_max;
    sc.adaptive = cfg.adaptive;
    ts.stats = drive(y, sc, [&](std::span<double> s, double dt) { stepper.step(s, dt); }, out);
    ts.final_field = cur;
    return ts;
}

} // namespace doi
