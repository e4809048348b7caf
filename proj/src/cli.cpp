#include "doi/cli.hpp"

#include "doi/circle_solver.hpp"
#include "doi/diagnostics.hpp"
#include "doi/equilibria.hpp"
#include "doi/harmonics.hpp"
#include "doi/io.hpp"
#include "doi/particles.hpp"
#include "doi/zonal_solver.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace doi::cli {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string s)
{
    auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
    return out;
}

double to_double(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument("");
        return d;
    } catch (const std::exception&) {
        throw UsageError("--" + key + ": expected a number, got '" + v + "'");
    }
}

long long to_int(const std::string& key, const std::string& v)
{
    try {
        std::size_t pos = 0;
        long long d = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return d;
    } catch (const std::exception&) {
        throw UsageError("--" + key + ": expected an integer, got '" + v + "'");
    }
}

struct KeySpec {
    std::string name, def, help;
};

// Effective key/value set of one subcommand: defaults < config file < flags.
class Settings {
public:
    std::map<std::string, std::string> values;

    const std::string& str(const std::string& k) const
    {
        auto it = values.find(k);
        if (it == values.end()) throw std::logic_error("unknown setting " + k);
        return it->second;
    }
    double num(const std::string& k, double lo = -INFINITY, double hi = INFINITY, bool open_lo = false) const
    {
        double v = to_double(k, str(k));
        if (v < lo || v > hi || (open_lo && v == lo))
            throw UsageError("--" + k + " = " + str(k) + " outside its valid range");
        return v;
    }
    long long integer(const std::string& k, long long lo, long long hi) const
    {
        long long v = to_int(k, str(k));
        if (v < lo || v > hi) throw UsageError("--" + k + " = " + str(k) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return v;
    }
    bool flag(const std::string& k) const
    {
        std::string v = str(k);
        std::transform(v.begin(), v.end(), v.begin(), ::tolower);
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw UsageError("--" + k + ": expected true/false, got '" + str(k) + "'");
    }
    json echo() const
    {
        json j = json::object();
        for (auto& [k, v] : values) j[k] = v;
        return j;
    }
};

std::uint64_t to_seed(const std::string& v)
{
    try {
        std::size_t pos = 0;
        unsigned long long s = std::stoull(v, &pos);
        if (pos != v.size() || v.find('-') != std::string::npos) throw std::invalid_argument("");
        return s;
    } catch (const std::exception&) {
        throw UsageError("--seed: expected a non-negative integer, got '" + v + "'");
    }
}

std::filesystem::path out_dir(const Settings& s) { return std::filesystem::path(s.str("out")); }

void write_json(const std::filesystem::path& p, const json& j) { write_atomic(p, j.dump(2) + "\n"); }

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ---------------------------------------------------------------- equilibrium

int cmd_equilibrium(const Settings& s)
{
    const int n = static_cast<int>(s.integer("n", 2, 64));
    auto grid = parse_sigma_grid(s.str("sigma"), n);
    for (double sg : grid)
        if (!(sg > 0) || sg > 2.0 / n + 1e-15)
            throw UsageError("--sigma grid must lie in (0, 2/n]");
    CsvTable csv({"sigma", "regime", "kappa", "c", "beta", "rate_sub", "rate_heat", "rate_super_lb", "rate_crit_slope"});
    for (double sg : grid) {
        auto e = summarize_equilibrium(n, sg);
        std::vector<double> row{e.kappa, e.c, e.beta, e.rates.subcritical, e.rates.heat, e.rates.supercritical_lb,
                                e.rates.critical_slope};
        csv.add_row({fmt17(sg), std::string(to_string(e.regime))}, row);
    }
    auto p = out_dir(s) / "equilibrium.csv";
    write_atomic(p, csv.str());
    std::cout << csv.str();
    std::cerr << "wrote " << p.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- solve

IcSpec zonal_ic(const IcArg& a, int n, double sigma)
{
    switch (a.kind) {
    case IcArg::Kind::uniform:
        return IcSpec::uniform();
    case IcArg::Kind::fvm: {
        double k = a.kappa;
        if (a.kappa_from_sigma) {
            if (classify_regime(n, sigma) != Regime::supercritical)
                throw UsageError("--ic fvm:equilibrium needs sigma < 1/n");
            k = solve_kappa(n, sigma);
        }
        return IcSpec::fvm(k);
    }
    case IcArg::Kind::perturbed:
        for (int m : a.modes)
            if (m < 1) throw UsageError("--ic perturbed: zonal modes must be positive");
        return IcSpec::perturbed(a.eps, a.modes);
    case IcArg::Kind::coeffs: {
        std::filesystem::path p(a.path);
        if (p.extension() == ".json") {
            ZonalField f = load_summary_field(p);
            if (f.n != n) throw UsageError("--ic coeffs: summary was written for n=" + std::to_string(f.n));
            return IcSpec::from_coeffs(std::vector<double>(f.c.begin() + 1, f.c.end()));
        }
        return IcSpec::from_coeffs(read_number_list(p));
    }
    case IcArg::Kind::aligned:
        break;
    }
    throw UsageError("--ic aligned is only meaningful for particles");
}

struct StepKeys {
    double t_end, dt, rel_tol, output_dt, dt_max;
    bool fixed;
};

StepKeys step_keys(const Settings& s)
{
    StepKeys k;
    k.t_end = s.num("t-end", 0, INFINITY, true);
    k.dt = s.num("dt", 0, INFINITY, true);
    k.fixed = s.flag("fixed-step");
    k.rel_tol = s.num("rel-tol", 0, 1);
    if (!k.fixed && !(k.rel_tol > 0)) throw UsageError("--rel-tol must be > 0 for adaptive stepping");
    k.output_dt = s.num("output-dt", 0, INFINITY, true);
    k.dt_max = s.num("dt-max", 0, INFINITY);
    return k;
}

RateWindow rate_window(const Settings& s)
{
    RateWindow w;
    w.fraction = s.num("window", 0, 1, true);
    w.threshold = s.num("threshold", 0, INFINITY, true);
    return w;
}

template <class Rec>
std::vector<double> column(const std::vector<Rec>& r, double Rec::*m)
{
    std::vector<double> v;
    v.reserve(r.size());
    for (const auto& x : r) v.push_back(x.*m);
    return v;
}

json fits_json(const std::vector<double>& t, const std::vector<DiagnosticsRecord>& recs, Regime reg, RateWindow w)
{
    json j;
    auto l2 = column(recs, &DiagnosticsRecord::l2);
    auto fit = fit_exponential_rate(t, l2, w);
    j["fitted_rate"] = fit.ok ? json(fit.rate) : json(nullptr);
    j["fitted_rate_r2"] = fit.ok ? json(fit.r2) : json(nullptr);
    j["fitted_rate_points"] = fit.points;
    j["fitted_rate_window_shrunk"] = fit.shrunk;
    if (reg == Regime::critical) {
        auto cs = fit_critical_slope(t, l2, w);
        j["critical_slope"] = cs.ok ? json(cs.rate) : json(nullptr);
    } else {
        j["critical_slope"] = nullptr;
    }
    if (reg == Regime::supercritical) {
        auto d = column(recs, &DiagnosticsRecord::dist_to_fvm);
        RateWindow wd = w;
        auto fd = fit_exponential_rate(t, d, wd);
        // the decaying quantity is the distance to the equilibrium, not to 1
        j["fitted_rate"] = fd.ok ? json(fd.rate) : json(nullptr);
        j["fitted_rate_r2"] = fd.ok ? json(fd.r2) : json(nullptr);
        j["fitted_rate_points"] = fd.points;
        j["fitted_rate_window_shrunk"] = fd.shrunk;
        j["fitted_rate_column"] = "dist_to_fvm";
    } else {
        j["fitted_rate_column"] = "l2";
    }
    auto cons = conservation_check(t, column(recs, &DiagnosticsRecord::F), column(recs, &DiagnosticsRecord::D),
                                   column(recs, &DiagnosticsRecord::H), column(recs, &DiagnosticsRecord::Dtilde));
    j["conservation_F"] = cons.F;
    j["conservation_H"] = cons.H;
    return j;
}

json predictions_json(int n, double sigma)
{
    auto e = summarize_equilibrium(n, sigma);
    json j;
    j["regime"] = std::string(to_string(e.regime));
    j["kappa"] = e.kappa;
    j["c"] = e.c;
    j["beta"] = e.beta;
    j["rate_sub"] = num_or_null(e.rates.subcritical);
    j["rate_heat"] = num_or_null(e.rates.heat);
    j["rate_super_lb"] = num_or_null(e.rates.supercritical_lb);
    j["rate_near_threshold"] = num_or_null(e.rates.near_threshold);
    j["rate_crit_slope"] = num_or_null(e.rates.critical_slope);
    return j;
}

int cmd_solve(const Settings& s)
{
    SolverConfig c;
    c.n = static_cast<int>(s.integer("n", 2, 64));
    c.L = static_cast<int>(s.integer("L", 4, 4096));
    c.sigma = parse_sigma(s.str("sigma"), c.n);
    auto k = step_keys(s);
    c.t_end = k.t_end;
    c.dt_init = k.dt;
    c.rel_tol = k.rel_tol;
    c.adaptive = !k.fixed;
    c.output_dt = k.output_dt;
    c.dt_max = k.dt_max;
    c.clip_floor = s.num("clip-floor", 0, 1, true);
    c.quad_order = static_cast<int>(s.integer("quad-order", 0, 100000));
    if (c.quad_order != 0 && c.quad_order < 4) throw UsageError("--quad-order must be 0 (auto) or >= 4");
    c.ic = zonal_ic(parse_ic(s.str("ic")), c.n, c.sigma);
    const bool snaps = s.flag("snapshots");
    c.keep_fields = snaps;
    auto w = rate_window(s);
    auto dir = out_dir(s);

    if (s.flag("basis-table")) {
        std::ostringstream os;
        BasisTable(c.n, c.L).write_tsv(os);
        write_atomic(dir / "basis_table.tsv", os.str());
    }

    TimeSeries ts = run(c);
    if (ts.ic.nonpositive)
        std::cerr << "warning: initial density is not positive at every node (min " << ts.ic.min_node
                  << "); entropy diagnostics clip at " << c.clip_floor << "\n";

    CsvTable csv({"t", "j", "F", "D", "H", "Dtilde", "l2", "hs", "gevrey_r", "alpha_crit", "dist_to_fvm", "min_f",
                  "clip_count"});
    for (const auto& r : ts.records)
        csv.add_row({r.t, r.J[0], r.F, r.D, r.H, r.Dtilde, r.l2, r.hs, r.gevrey_r, r.alpha_crit, r.dist_to_fvm, r.min_f,
                     static_cast<double>(r.clip_count)});
    write_atomic(dir / "timeseries.csv", csv.str());

    if (snaps) {
        std::string body = "t";
        for (int l = 1; l <= c.L; ++l) body += "\tc" + std::to_string(l);
        body += "\n";
        for (std::size_t i = 0; i < ts.fields.size(); ++i) {
            body += fmt17(ts.t[i]);
            for (int l = 1; l <= c.L; ++l) body += "\t" + fmt17(ts.fields[i].c[l]);
            body += "\n";
        }
        write_atomic(dir / "snapshots.tsv", body);
    }

    const Regime reg = classify_regime(c.n, c.sigma);
    json j = fits_json(ts.t, ts.records, reg, w);
    j["command"] = "solve";
    j["config"] = s.echo();
    j["sigma_value"] = c.sigma;
    j["final"] = {{"t", ts.t.back()}, {"n", c.n}, {"L", c.L}, {"coefficients", ts.final_field.c}};
    j["j_final"] = ts.final_field.flux();
    j["predictions"] = predictions_json(c.n, c.sigma);
    j["projection"] = {{"residual", ts.ic.residual}, {"min_node", ts.ic.min_node}, {"nonpositive", ts.ic.nonpositive}};
    j["checks"] = {{"min_f", ts.min_f}, {"clip_events", ts.clip_events}};
    j["steps"] = {{"accepted", ts.stats.accepted}, {"rejected", ts.stats.rejected}};
    write_json(dir / "summary.json", j);
    std::cout << "solve: t_end=" << ts.t.back() << " j=" << fmt17(ts.final_field.flux())
              << " l2=" << fmt17(ts.records.back().l2) << " -> " << (dir / "summary.json").string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- circle

CircleField circle_ic(const IcArg& a, int K, double sigma, double phi)
{
    CircleField f(K);
    switch (a.kind) {
    case IcArg::Kind::uniform:
        break;
    case IcArg::Kind::fvm: {
        double k = a.kappa;
        if (a.kappa_from_sigma) {
            if (classify_regime(2, sigma) != Regime::supercritical)
                throw UsageError("--ic fvm:equilibrium needs sigma < 1/2");
            k = solve_kappa(2, sigma);
        }
        f = circle_from_zonal(fvm_field(2, K, k));
        break;
    }
    case IcArg::Kind::perturbed:
        for (int m : a.modes) {
            int k = std::abs(m);
            if (k < 1 || k > K) throw UsageError("--ic perturbed: mode outside 1..K");
            (m > 0 ? f.a : f.b)[k] = std::sqrt(2.0) * a.eps;
        }
        break;
    case IcArg::Kind::coeffs: {
        std::filesystem::path p(a.path);
        if (p.extension() == ".json") {
            json j = json::parse(read_file(p));
            auto A = j.at("final").at("a").get<std::vector<double>>();
            auto B = j.at("final").at("b").get<std::vector<double>>();
            for (int k = 1; k <= K && k < static_cast<int>(A.size()); ++k) {
                f.a[k] = A[k];
                f.b[k] = B[k];
            }
        } else {
            auto v = read_number_list(p);
            if (v.size() % 2) throw UsageError("--ic coeffs: circle lists are pairs 'a_k b_k'");
            for (std::size_t i = 0; 2 * i < v.size() && static_cast<int>(i) < K; ++i) {
                f.a[i + 1] = v[2 * i];
                f.b[i + 1] = v[2 * i + 1];
            }
        }
        break;
    }
    case IcArg::Kind::aligned:
        throw UsageError("--ic aligned is only meaningful for particles");
    }
    return phi == 0.0 ? f : rotate(f, phi);
}

int cmd_circle(const Settings& s)
{
    CircleConfig c;
    c.K = static_cast<int>(s.integer("K", 4, 4096));
    c.sigma = parse_sigma(s.str("sigma"), 2);
    auto k = step_keys(s);
    c.t_end = k.t_end;
    c.dt_init = k.dt;
    c.rel_tol = k.rel_tol;
    c.adaptive = !k.fixed;
    c.output_dt = k.output_dt;
    c.dt_max = k.dt_max;
    c.clip_floor = s.num("clip-floor", 0, 1, true);
    c.ic = circle_ic(parse_ic(s.str("ic")), c.K, c.sigma, s.num("phi"));
    c.keep_fields = false;
    auto w = rate_window(s);
    auto dir = out_dir(s);

    CircleSeries cs = run_circle(c);
    CsvTable csv({"t", "j", "F", "D", "H", "Dtilde", "l2", "hs", "gevrey_r", "J1", "J2", "omega_angle", "alpha_crit",
                  "dist_to_fvm", "min_f", "clip_count"});
    for (std::size_t i = 0; i < cs.records.size(); ++i) {
        const auto& r = cs.records[i];
        csv.add_row({r.t, cs.omega.magnitude[i], r.F, r.D, r.H, r.Dtilde, r.l2, r.hs, r.gevrey_r, r.J[0], r.J[1],
                     cs.omega.angle[i], r.alpha_crit, r.dist_to_fvm, r.min_f, static_cast<double>(r.clip_count)});
    }
    write_atomic(dir / "timeseries.csv", csv.str());

    const Regime reg = classify_regime(2, c.sigma);
    json j = fits_json(cs.t, cs.records, reg, w);
    j["command"] = "circle";
    j["config"] = s.echo();
    j["sigma_value"] = c.sigma;
    j["final"] = {{"t", cs.t.back()}, {"K", c.K}, {"a", cs.final_field.a}, {"b", cs.final_field.b}};
    j["J_final"] = {cs.final_field.J1(), cs.final_field.J2()};
    j["omega_angle_final"] = num_or_null(cs.omega.angle.back());
    j["heat_regime"] = cs.omega.heat;
    j["predictions"] = predictions_json(2, c.sigma);
    j["checks"] = {{"min_f", cs.min_f}, {"clip_events", cs.clip_events}};
    j["steps"] = {{"accepted", cs.stats.accepted}, {"rejected", cs.stats.rejected}};
    write_json(dir / "summary.json", j);
    std::cout << "circle: t_end=" << cs.t.back() << " |J|=" << fmt17(cs.omega.magnitude.back()) << " -> "
              << (dir / "summary.json").string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- particles

int cmd_particles(const Settings& s)
{
    const int n = static_cast<int>(s.integer("n", 2, kMaxDim));
    const long long N = s.integer("N", 1, 0xffffffffLL);
    const double sigma = parse_sigma(s.str("sigma"), n);
    const std::uint64_t seed = to_seed(s.str("seed"));
    ParticleRunConfig rc;
    rc.sigma = sigma;
    rc.dt = s.num("dt", 0, INFINITY, true);
    rc.t_end = s.num("t-end", 0, INFINITY, true);
    rc.output_dt = s.num("output-dt", 0, INFINITY, true);
    if (std::abs(std::lround(rc.output_dt / rc.dt) * rc.dt - rc.output_dt) > 1e-9 * rc.output_dt)
        throw UsageError("--output-dt must be a multiple of --dt");
    double avg_from = s.num("avg-from");
    if (avg_from < 0) avg_from = 0.5 * rc.t_end;
    auto ic = parse_ic(s.str("ic"));

    std::vector<double> axis(n, 0.0);
    axis[n - 1] = 1.0;
    std::vector<double> pos;
    switch (ic.kind) {
    case IcArg::Kind::uniform:
        pos = sample_fvm(n, 0.0, axis, N, seed);
        break;
    case IcArg::Kind::fvm: {
        double k = ic.kappa;
        if (ic.kappa_from_sigma) {
            if (classify_regime(n, sigma) != Regime::supercritical)
                throw UsageError("--ic fvm:equilibrium needs sigma < 1/n");
            k = solve_kappa(n, sigma);
        }
        pos = sample_fvm(n, k, axis, N, seed);
        break;
    }
    case IcArg::Kind::aligned:
        pos.assign(static_cast<std::size_t>(N) * n, 0.0);
        for (long long i = 0; i < N; ++i) pos[i * n + n - 1] = 1.0;
        break;
    default:
        throw UsageError("--ic for particles: uniform, fvm:KAPPA, fvm:equilibrium or aligned");
    }
    auto dir = out_dir(s);
    auto series = run_particles(make_ensemble(n, std::move(pos), rc.dt, seed), rc);

    std::vector<std::string> header{"t", "|J|"};
    for (int d = 1; d <= n; ++d) header.push_back("J" + std::to_string(d));
    CsvTable csv(header);
    double acc = 0;
    int cnt = 0;
    for (std::size_t i = 0; i < series.t.size(); ++i) {
        std::vector<double> row{series.t[i], series.magnitude[i]};
        row.insert(row.end(), series.J[i].begin(), series.J[i].end());
        csv.add_row(row);
        if (series.t[i] >= avg_from - 1e-12) {
            acc += series.magnitude[i];
            ++cnt;
        }
    }
    write_atomic(dir / "particles.csv", csv.str());
    if (!s.str("dump").empty()) {
        std::ostringstream os;
        write_positions(os, series.final_state);
        write_atomic(s.str("dump"), os.str());
    }
    json j;
    j["command"] = "particles";
    j["config"] = s.echo();
    j["sigma_value"] = sigma;
    j["mean_abs_J"] = cnt ? json(acc / cnt) : json(nullptr);
    j["mean_from"] = avg_from;
    j["abs_J_final"] = series.magnitude.back();
    j["predictions"] = predictions_json(n, sigma);
    write_json(dir / "summary.json", j);
    std::cout << "particles: N=" << N << " <|J|>=" << (cnt ? fmt17(acc / cnt) : "nan") << " -> "
              << (dir / "particles.csv").string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- sweep

int worker_count(std::size_t jobs)
{
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* e = std::getenv("DOI_NUM_THREADS")) {
        long v = std::strtol(e, nullptr, 10);
        if (v >= 1) hw = static_cast<unsigned>(v);
    }
    return static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(hw, jobs)));
}

int cmd_sweep(const Settings& s)
{
    const int n = static_cast<int>(s.integer("n", 2, 64));
    auto grid = parse_sigma_grid(s.str("sigma"), n);
    for (double sg : grid)
        if (!(sg > 0)) throw UsageError("--sigma grid values must be > 0");
    SolverConfig base;
    base.n = n;
    base.L = static_cast<int>(s.integer("L", 4, 4096));
    auto k = step_keys(s);
    base.t_end = k.t_end;
    base.dt_init = k.dt;
    base.rel_tol = k.rel_tol;
    base.adaptive = !k.fixed;
    base.output_dt = k.output_dt;
    base.dt_max = k.dt_max;
    base.keep_fields = false;
    auto ic = parse_ic(s.str("ic"));
    if (ic.kind == IcArg::Kind::fvm && ic.kappa_from_sigma)
        throw UsageError("--ic fvm:equilibrium is not available in sweeps");
    base.ic = zonal_ic(ic, n, 0.5 / n);
    auto dir = out_dir(s);
    std::filesystem::create_directories(dir / "sweep_runs");

    struct Row {
        double j = kNaN, pred = 0, err = kNaN;
        std::string regime, status = "ok";
    };
    std::vector<Row> rows(grid.size());
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (std::size_t i; (i = next.fetch_add(1)) < grid.size();) {
            Row& r = rows[i];
            SolverConfig c = base;
            c.sigma = grid[i];
            try {
                auto e = summarize_equilibrium(n, c.sigma);
                r.regime = std::string(to_string(e.regime));
                r.pred = e.c;
                TimeSeries ts = run(c);
                r.j = ts.final_field.flux();
                r.err = std::abs(r.j - r.pred);
                json j;
                j["sigma"] = c.sigma;
                j["j_final"] = r.j;
                j["predicted"] = r.pred;
                j["final"] = {{"t", ts.t.back()}, {"n", n}, {"L", c.L}, {"coefficients", ts.final_field.c}};
                write_json(dir / "sweep_runs" / ("run_" + std::to_string(i) + ".json"), j);
            } catch (const std::exception& ex) {
                r.status = std::string("failed: ") + ex.what();
                std::replace(r.status.begin(), r.status.end(), ',', ';');
            }
        }
    };
    int nt = worker_count(grid.size());
    std::vector<std::thread> pool;
    for (int t = 1; t < nt; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    std::string body = "sigma,j_final,c_kappa_predicted,abs_error,regime,status\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
        body += fmt17(grid[i]) + "," + fmt17(rows[i].j) + "," + fmt17(rows[i].pred) + "," + fmt17(rows[i].err) + "," +
                rows[i].regime + "," + rows[i].status + "\n";
    write_atomic(dir / "sweep.csv", body);
    std::cout << body;
    return kExitOk;
}

// ---------------------------------------------------------------- rates

int cmd_rates(const Settings& s)
{
    if (s.str("csv").empty()) throw UsageError("rates: --csv PATH is required");
    CsvData d = read_csv(s.str("csv"));
    int it = d.column("t"), ic = d.column(s.str("column"));
    if (it < 0) throw UsageError("rates: CSV has no 't' column");
    if (ic < 0) throw UsageError("rates: CSV has no column '" + s.str("column") + "'");
    auto w = rate_window(s);
    std::string mode = s.str("mode");
    RateFit f;
    if (mode == "exp")
        f = fit_exponential_rate(d.columns[it], d.columns[ic], w);
    else if (mode == "critical")
        f = fit_critical_slope(d.columns[it], d.columns[ic], w);
    else
        throw UsageError("--mode must be exp or critical");
    if (f.shrunk) std::cerr << "warning: nonpositive values shortened the fit window\n";
    json j;
    j["mode"] = mode;
    j["column"] = s.str("column");
    j["rate"] = f.ok ? json(f.rate) : json(nullptr);
    j["r2"] = f.ok ? json(f.r2) : json(nullptr);
    j["points"] = f.points;
    j["window_shrunk"] = f.shrunk;
    std::cout << j.dump() << "\n";
    return f.ok ? kExitOk : kExitAbort;
}

// ---------------------------------------------------------------- dispatch

struct Command {
    std::string name, help;
    std::vector<KeySpec> keys;
    int (*fn)(const Settings&);
};

std::vector<KeySpec> step_key_specs(const std::string& t_end, const std::string& output_dt)
{
    return {{"t-end", t_end, "final time"},
            {"dt", "1e-3", "initial (or fixed) time step"},
            {"rel-tol", "1e-8", "step-doubling relative tolerance"},
            {"fixed-step", "false", "fixed steps of --dt instead of adaptive control"},
            {"output-dt", output_dt, "snapshot interval"},
            {"dt-max", "0", "largest step (0: snapshot interval)"}};
}

std::vector<Command> commands()
{
    std::vector<Command> cs;
    cs.push_back({"equilibrium", "equilibrium concentration, order parameter and rate constants over a sigma grid",
                  {{"n", "3", "ambient dimension"},
                   {"sigma", "0.02:0.6:30", "sigma, list a,b,c, range lo:hi:count or 'critical'"},
                   {"out", ".", "output directory"}},
                  cmd_equilibrium});

    std::vector<KeySpec> solve{{"n", "3", "ambient dimension"},
                               {"sigma", "0.5", "noise intensity or 'critical'"},
                               {"L", "64", "spectral truncation degree"}};
    for (auto& k : step_key_specs("10", "0.1")) solve.push_back(k);
    for (auto k : std::vector<KeySpec>{{"ic", "perturbed:0.1", "uniform | fvm:KAPPA | fvm:equilibrium | perturbed:EPS[,MODES] | coeffs:PATH"},
                                       {"clip-floor", "1e-12", "floor for log f"},
                                       {"quad-order", "0", "quadrature order (0: 2L)"},
                                       {"snapshots", "false", "write coefficient snapshots TSV"},
                                       {"basis-table", "false", "write the basis coefficient table TSV"},
                                       {"window", "0.5", "trailing fraction used by rate fits"},
                                       {"threshold", "1e-2", "fits start once l2 drops below this"},
                                       {"out", ".", "output directory"}})
        solve.push_back(k);
    cs.push_back({"solve", "axisymmetric spectral solve on S^{n-1}", solve, cmd_solve});

    std::vector<KeySpec> circ{{"K", "64", "Fourier truncation"}, {"sigma", "0.3", "noise intensity or 'critical'"}};
    for (auto& k : step_key_specs("10", "0.1")) circ.push_back(k);
    for (auto k : std::vector<KeySpec>{{"ic", "perturbed:0.1", "as for solve; negative perturbed modes are sine modes"},
                                       {"phi", "0", "rotate the initial condition by this angle"},
                                       {"clip-floor", "1e-12", "floor for log f"},
                                       {"window", "0.5", "trailing fraction used by rate fits"},
                                       {"threshold", "1e-2", "fits start once l2 drops below this"},
                                       {"out", ".", "output directory"}})
        circ.push_back(k);
    cs.push_back({"circle", "full Fourier solve on the circle (n = 2)", circ, cmd_circle});

    cs.push_back({"particles", "N-particle alignment dynamics on S^{n-1}",
                  {{"n", "3", "ambient dimension"},
                   {"N", "10000", "number of particles"},
                   {"sigma", "0.2", "noise intensity or 'critical'"},
                   {"seed", "1", "RNG seed"},
                   {"dt", "1e-3", "time step"},
                   {"t-end", "1", "final time"},
                   {"output-dt", "0.01", "flux sampling interval (multiple of dt)"},
                   {"ic", "uniform", "uniform | fvm:KAPPA | fvm:equilibrium | aligned"},
                   {"avg-from", "-1", "time-average |J| from here (negative: t_end/2)"},
                   {"dump", "", "write final positions to this binary file"},
                   {"out", ".", "output directory"}},
                  cmd_particles});

    std::vector<KeySpec> sw{{"n", "3", "ambient dimension"},
                            {"sigma", "0.2:0.5:7", "sigma grid"},
                            {"L", "32", "spectral truncation degree"}};
    for (auto& k : step_key_specs("200", "1")) sw.push_back(k);
    sw.push_back({"ic", "perturbed:0.1", "initial condition shared by all runs"});
    sw.push_back({"out", ".", "output directory"});
    cs.push_back({"sweep", "final flux against the equilibrium prediction over a sigma grid", sw, cmd_sweep});

    cs.push_back({"rates", "re-fit a decay rate from a stored time-series CSV",
                  {{"csv", "", "time-series CSV"},
                   {"column", "l2", "column to fit"},
                   {"mode", "exp", "exp (log-linear) or critical (value^-2 linear)"},
                   {"window", "0.5", "trailing fraction of eligible rows"},
                   {"threshold", "1e-2", "rows become eligible once the value drops below this (exp mode)"}},
                  cmd_rates});
    return cs;
}

void write_abort_dump(const std::filesystem::path& dir, const NumericalAbort& e, std::filesystem::path& where)
{
    json j;
    j["message"] = e.what();
    j["t"] = e.t;
    std::vector<json> st;
    for (double v : e.state) st.push_back(num_or_null(v));
    j["state"] = st;
    where = dir / "abort_dump.json";
    write_json(where, j);
}

} // namespace

double parse_sigma(const std::string& s, int n)
{
    if (trim(s) == "critical") return 1.0 / n;
    double v = to_double("sigma", trim(s));
    if (!(v > 0)) throw UsageError("--sigma must be > 0");
    return v;
}

std::vector<double> parse_sigma_grid(const std::string& s0, int n)
{
    std::string s = trim(s0);
    std::vector<double> g;
    if (s.find(':') != std::string::npos) {
        auto p = split(s, ':');
        if (p.size() != 3) throw UsageError("--sigma range must be lo:hi:count");
        double lo = parse_sigma(p[0], n), hi = parse_sigma(p[1], n);
        long long m = to_int("sigma", p[2]);
        if (m < 1 || m > 100000 || hi < lo) throw UsageError("--sigma range: need hi >= lo and 1 <= count");
        for (long long i = 0; i < m; ++i) g.push_back(m == 1 ? lo : lo + (hi - lo) * i / (m - 1));
    } else {
        for (auto& t : split(s, ',')) g.push_back(parse_sigma(t, n));
    }
    if (g.empty()) throw UsageError("--sigma: empty grid");
    return g;
}

IcArg parse_ic(const std::string& s0)
{
    std::string s = trim(s0);
    IcArg a;
    auto colon = s.find(':');
    std::string kind = s.substr(0, colon), rest = colon == std::string::npos ? "" : s.substr(colon + 1);
    if (kind == "uniform" && rest.empty()) {
        a.kind = IcArg::Kind::uniform;
    } else if (kind == "aligned" && rest.empty()) {
        a.kind = IcArg::Kind::aligned;
    } else if (kind == "fvm") {
        a.kind = IcArg::Kind::fvm;
        if (rest == "equilibrium") {
            a.kappa_from_sigma = true;
        } else {
            a.kappa = to_double("ic", rest);
            if (a.kappa < 0) throw UsageError("--ic fvm: kappa must be >= 0");
        }
    } else if (kind == "perturbed") {
        a.kind = IcArg::Kind::perturbed;
        auto p = split(rest, ',');
        if (p.empty() || p[0].empty()) throw UsageError("--ic perturbed:EPS[,MODES]");
        a.eps = to_double("ic", p[0]);
        if (p.size() > 1) {
            a.modes.clear();
            for (std::size_t i = 1; i < p.size(); ++i) {
                long long m = to_int("ic", p[i]);
                if (m == 0) throw UsageError("--ic perturbed: mode 0 is the fixed mass");
                a.modes.push_back(static_cast<int>(m));
            }
        }
    } else if (kind == "coeffs" && !rest.empty()) {
        a.kind = IcArg::Kind::coeffs;
        a.path = rest;
    } else {
        throw UsageError("--ic: expected uniform | fvm:KAPPA | perturbed:EPS[,MODES] | coeffs:PATH, got '" + s + "'");
    }
    return a;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& p)
{
    std::ifstream in(p);
    if (!in) throw UsageError("cannot read config file " + p.string());
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(p.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
        std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
        std::replace(k.begin(), k.end(), '_', '-');
        if (k.empty()) throw UsageError(p.string() + ":" + std::to_string(lineno) + ": empty key");
        kv[k] = v;
    }
    return kv;
}

ZonalField load_summary_field(const std::filesystem::path& p)
{
    json j = json::parse(read_file(p));
    const auto& f = j.at("final");
    ZonalField z;
    z.n = f.at("n").get<int>();
    z.L = f.at("L").get<int>();
    z.c = f.at("coefficients").get<std::vector<double>>();
    if (static_cast<int>(z.c.size()) != z.L + 1) throw std::invalid_argument("summary: coefficient count != L+1");
    return z;
}

int run_cli(const std::vector<std::string>& args)
{
    CLI::App app{"Doi-Onsager dipolar alignment: spectral solvers, equilibria, particles"};
    app.require_subcommand(1);
    auto cmds = commands();
    std::vector<CLI::App*> subs;
    std::vector<std::map<std::string, std::string>> raw(cmds.size());
    std::vector<std::map<std::string, CLI::Option*>> opts(cmds.size());
    std::vector<std::string> cfg_path(cmds.size());
    for (std::size_t i = 0; i < cmds.size(); ++i) {
        auto* sub = app.add_subcommand(cmds[i].name, cmds[i].help);
        for (const auto& k : cmds[i].keys) {
            raw[i][k.name] = k.def;
            opts[i][k.name] = sub->add_option("--" + k.name, raw[i][k.name], k.help + " [" + k.def + "]");
        }
        sub->add_option("--config", cfg_path[i], "key = value file; flags override it");
        subs.push_back(sub);
    }

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    std::size_t which = 0;
    while (which < subs.size() && !subs[which]->parsed()) ++which;
    const Command& cmd = cmds[which];
    Settings s;
    std::filesystem::path dir = ".";
    try {
        for (const auto& k : cmd.keys) s.values[k.name] = k.def;
        if (!cfg_path[which].empty()) {
            for (auto& [k, v] : read_config_file(cfg_path[which])) {
                if (!s.values.count(k)) throw UsageError("config file: unknown key '" + k + "' for " + cmd.name);
                s.values[k] = v;
            }
        }
        for (const auto& k : cmd.keys)
            if (opts[which][k.name]->count() > 0) s.values[k.name] = raw[which][k.name];
        if (s.values.count("out")) dir = s.values["out"];
        return cmd.fn(s);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericalAbort& e) {
        std::filesystem::path where;
        try {
            write_abort_dump(dir, e, where);
            std::cerr << "numerical abort: " << e.what() << "\ndiagnostic dump: " << where.string() << "\n";
        } catch (const std::exception&) {
            std::cerr << "numerical abort: " << e.what() << " (dump could not be written)\n";
        }
        return kExitAbort;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAbort;
    }
}

int run_cli(int argc, char** argv) { return run_cli(std::vector<std::string>(argv, argv + argc)); }

} // namespace doi::cli
