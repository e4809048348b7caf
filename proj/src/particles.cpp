#include "doi/particles.hpp"

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace doi {

namespace {

constexpr std::size_t kBlock = 4096;
constexpr char kMagic[8] = {'D', 'O', 'I', 'P', 'A', 'R', 'T', '1'};

std::uint64_t mix(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

template <class T>
T to_le(T v)
{
    if constexpr (std::endian::native == std::endian::little) return v;
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
    return v;
}

void check_positions(int n, std::span<const double> pos)
{
    if (n < 2) throw std::invalid_argument("particles: n must be >= 2");
    if (pos.empty() || pos.size() % n != 0) throw std::invalid_argument("particles: positions must be N x n, N >= 1");
}

} // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t k)
{
    return mix(mix(seed + 0x9e3779b97f4a7c15ULL) ^ (k * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

ParticleEnsemble make_ensemble(int n, std::vector<double> pos, double dt, std::uint64_t seed)
{
    check_positions(n, pos);
    if (n > kMaxDim) throw std::invalid_argument("particles: n above the supported maximum");
    if (!(dt > 0)) throw std::invalid_argument("particles: dt must be > 0");
    ParticleEnsemble e;
    e.n = n;
    e.N = pos.size() / n;
    e.pos = std::move(pos);
    e.dt = dt;
    e.seed = seed;
    e.rng.reserve(e.N);
    for (std::size_t k = 0; k < e.N; ++k) e.rng.emplace_back(stream_seed(seed, k));
    for (std::size_t k = 0; k < e.N; ++k) {
        double s = 0;
        for (int d = 0; d < n; ++d) s += e.pos[k * n + d] * e.pos[k * n + d];
        if (std::abs(std::sqrt(s) - 1.0) > 1e-9) throw std::invalid_argument("particles: positions must be unit vectors");
    }
    return e;
}

std::vector<double> sample_fvm(int n, double kappa, std::span<const double> Omega, std::size_t N,
                               std::uint64_t seed)
{
    if (n < 2) throw std::invalid_argument("sample_fvm: n must be >= 2");
    if (!(kappa >= 0)) throw std::invalid_argument("sample_fvm: kappa must be >= 0");
    if (static_cast<int>(Omega.size()) != n) throw std::invalid_argument("sample_fvm: axis has wrong length");
    double on = 0;
    for (double v : Omega) on += v * v;
    on = std::sqrt(on);
    if (!(on > 0)) throw std::invalid_argument("sample_fvm: zero axis");
    std::vector<double> ax(n);
    for (int d = 0; d < n; ++d) ax[d] = Omega[d] / on;

    // tabulated CDF of theta, density e^{kappa(cos th - 1)} sin^{n-2} th on [0, pi]
    const int G = 8192;
    std::vector<double> th(G + 1), cdf(G + 1, 0.0);
    auto dens = [&](double t) { return std::exp(kappa * (std::cos(t) - 1.0)) * std::pow(std::sin(t), n - 2); };
    double prev = dens(0.0);
    for (int i = 0; i <= G; ++i) th[i] = M_PI * i / G;
    for (int i = 1; i <= G; ++i) {
        double cur = dens(th[i]);
        cdf[i] = cdf[i - 1] + 0.5 * (prev + cur) * (th[i] - th[i - 1]);
        prev = cur;
    }
    for (double& v : cdf) v /= cdf[G];

    // Householder reflection taking e_n (the last axis) to ax
    std::vector<double> w(n, 0.0);
    for (int d = 0; d < n; ++d) w[d] = -ax[d];
    w[n - 1] += 1.0;
    double ww = 0;
    for (double v : w) ww += v * v;
    const bool reflect = ww > 1e-30;

    SplitMix64 g(stream_seed(seed, 0x5a3d1e5ULL));
    boost::random::normal_distribution<double> normal;
    boost::random::uniform_01<double> unif;
    std::vector<double> out(N * n), p(n), dir(std::max(1, n - 1));
    for (std::size_t k = 0; k < N; ++k) {
        double u = unif(g);
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        std::size_t i = std::clamp<std::size_t>(it - cdf.begin(), 1, G);
        double span = cdf[i] - cdf[i - 1];
        double t = th[i - 1] + (span > 0 ? (u - cdf[i - 1]) / span : 0.5) * (th[i] - th[i - 1]);
        double ct = std::cos(t), st = std::sin(t);
        if (n == 2) {
            dir[0] = unif(g) < 0.5 ? -1.0 : 1.0;
        } else {
            double s;
            do {
                s = 0;
                for (int d = 0; d < n - 1; ++d) {
                    dir[d] = normal(g);
                    s += dir[d] * dir[d];
                }
            } while (s < 1e-24);
            s = std::sqrt(s);
            for (int d = 0; d < n - 1; ++d) dir[d] /= s;
        }
        for (int d = 0; d < n - 1; ++d) p[d] = st * dir[d];
        p[n - 1] = ct;
        if (reflect) {
            double wp = 0;
            for (int d = 0; d < n; ++d) wp += w[d] * p[d];
            for (int d = 0; d < n; ++d) p[d] -= 2.0 * wp / ww * w[d];
        }
        double s = 0;
        for (int d = 0; d < n; ++d) s += p[d] * p[d];
        s = std::sqrt(s);
        for (int d = 0; d < n; ++d) out[k * n + d] = p[d] / s;
    }
    return out;
}

Flux empirical_flux(int n, std::span<const double> pos)
{
    check_positions(n, pos);
    const std::size_t N = pos.size() / n;
    const std::size_t nb = (N + kBlock - 1) / kBlock;
    std::vector<double> part(nb * n, 0.0);
#pragma omp parallel for schedule(static)
    for (std::size_t b = 0; b < nb; ++b) {
        std::size_t lo = b * kBlock, hi = std::min(N, lo + kBlock);
        for (std::size_t k = lo; k < hi; ++k)
            for (int d = 0; d < n; ++d) part[b * n + d] += pos[k * n + d];
    }
    Flux f;
    f.J.assign(n, 0.0);
    for (std::size_t b = 0; b < nb; ++b)
        for (int d = 0; d < n; ++d) f.J[d] += part[b * n + d];
    double m = 0;
    for (int d = 0; d < n; ++d) {
        f.J[d] /= static_cast<double>(N);
        m += f.J[d] * f.J[d];
    }
    f.magnitude = std::sqrt(m);
    return f;
}

Flux empirical_flux(const ParticleEnsemble& e) { return empirical_flux(e.n, e.pos); }

void em_step(ParticleEnsemble& e, double sigma)
{
    if (!(e.dt > 0)) throw std::invalid_argument("em_step: dt must be > 0");
    if (!(sigma >= 0)) throw std::invalid_argument("em_step: sigma must be >= 0");
    const int n = e.n;
    const std::size_t N = e.N;
    const Flux flux = empirical_flux(e);
    const double dt = e.dt, amp = std::sqrt(2.0 * sigma * dt);
    double D[kMaxDim];
    for (int d = 0; d < n; ++d) D[d] = flux.J[d] * dt;

    // all normals first, then the update sweep (faster than interleaving)
    std::vector<double>& xi = e.scratch;
    xi.resize(N * n);
    const boost::random::normal_distribution<double> normal_proto;
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < N; ++k) {
        boost::random::normal_distribution<double> normal(normal_proto);
        for (int d = 0; d < n; ++d) xi[k * n + d] = normal(e.rng[k]);
    }

#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < N; ++k) {
        double* w = &e.pos[k * n];
        const double* z = &xi[k * n];
        double v[kMaxDim], q[kMaxDim];
        double dot = 0;
        for (int d = 0; d < n; ++d) {
            v[d] = D[d] + amp * z[d];
            dot += w[d] * v[d];
        }
        // w + (I - w w^T) v has norm^2 = 1 + |P v|^2 >= 1, never degenerate
        double s = 0;
        for (int d = 0; d < n; ++d) {
            q[d] = w[d] + v[d] - dot * w[d];
            s += q[d] * q[d];
        }
        double inv = 1.0 / std::sqrt(s);
        for (int d = 0; d < n; ++d) w[d] = q[d] * inv;
    }
    e.t = (++e.steps) * dt;
}

void write_positions(std::ostream& os, const ParticleEnsemble& e)
{
    if (e.N > 0xffffffffULL) throw std::invalid_argument("write_positions: N does not fit the header");
    os.write(kMagic, 8);
    std::uint32_t n = to_le(static_cast<std::uint32_t>(e.n)), N = to_le(static_cast<std::uint32_t>(e.N));
    os.write(reinterpret_cast<const char*>(&n), 4);
    os.write(reinterpret_cast<const char*>(&N), 4);
    for (double v : e.pos) {
        double le = to_le(v);
        os.write(reinterpret_cast<const char*>(&le), 8);
    }
    if (!os) throw std::runtime_error("write_positions: stream error");
}

PositionDump read_positions(std::istream& is)
{
    char magic[8];
    std::uint32_t n, N;
    is.read(magic, 8);
    is.read(reinterpret_cast<char*>(&n), 4);
    is.read(reinterpret_cast<char*>(&N), 4);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("read_positions: bad header");
    PositionDump d;
    d.n = static_cast<int>(to_le(n));
    d.N = to_le(N);
    d.pos.resize(d.N * d.n);
    for (double& v : d.pos) {
        is.read(reinterpret_cast<char*>(&v), 8);
        v = to_le(v);
    }
    if (!is) throw std::runtime_error("read_positions: truncated data");
    return d;
}

ParticleSeries run_particles(ParticleEnsemble e, const ParticleRunConfig& cfg)
{
    if (cfg.dt != e.dt) e.dt = cfg.dt;
    if (!(cfg.dt > 0) || !(cfg.t_end > 0) || !(cfg.output_dt > 0))
        throw std::invalid_argument("run_particles: dt, t_end and output interval must be positive");
    long per_out = std::lround(cfg.output_dt / cfg.dt);
    long total = std::lround(cfg.t_end / cfg.dt);
    if (per_out < 1 || std::abs(per_out * cfg.dt - cfg.output_dt) > 1e-9 * cfg.output_dt)
        throw std::invalid_argument("run_particles: output interval must be a multiple of dt");
    ParticleSeries s;
    auto record = [&]() {
        Flux f = empirical_flux(e);
        s.t.push_back(e.t);
        s.J.push_back(f.J);
        s.magnitude.push_back(f.magnitude);
    };
    e.t = 0;
    e.steps = 0;
    record();
    for (long k = 1; k <= total; ++k) {
        em_step(e, cfg.sigma);
        if (k % per_out == 0 || k == total) record();
    }
    s.final_state = std::move(e);
    return s;
}

} // namespace doi
