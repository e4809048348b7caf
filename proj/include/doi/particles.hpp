#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

namespace doi {

// Steele-Lea-Flood SplitMix64; one per particle.
class SplitMix64 {
public:
    using result_type = std::uint64_t;
    explicit SplitMix64(std::uint64_t s = 0) : state_(s) {}
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()()
    {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

// Starting state of particle k's stream: two rounds of the SplitMix finalizer
// over (seed, k), so nearby seeds and indices land far apart.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t k);

inline constexpr int kMaxDim = 16;

struct ParticleEnsemble {
    int n = 0;
    std::size_t N = 0;
    std::vector<double> pos;  // N x n row-major, unit rows
    double t = 0;
    double dt = 1e-3;
    std::uint64_t seed = 0;
    std::vector<SplitMix64> rng;
    long steps = 0;
    std::vector<double> scratch;  // normals of the current step
};

ParticleEnsemble make_ensemble(int n, std::vector<double> pos, double dt, std::uint64_t seed);

// i.i.d. Fisher-Von Mises samples about the unit axis Omega (length n)
std::vector<double> sample_fvm(int n, double kappa, std::span<const double> Omega, std::size_t N,
                               std::uint64_t seed);

struct Flux {
    std::vector<double> J;
    double magnitude = 0;
};
// Blocked summation in a fixed order: identical for any thread count.
Flux empirical_flux(int n, std::span<const double> pos);
Flux empirical_flux(const ParticleEnsemble& e);

// One projected Euler-Maruyama step with J frozen at the pre-step state.
void em_step(ParticleEnsemble& e, double sigma);

// 16-byte header "DOIPART1", u32 n, u32 N, then little-endian float64 rows.
void write_positions(std::ostream& os, const ParticleEnsemble& e);
struct PositionDump {
    int n = 0;
    std::size_t N = 0;
    std::vector<double> pos;
};
PositionDump read_positions(std::istream& is);

struct ParticleSeries {
    std::vector<double> t;
    std::vector<std::vector<double>> J;
    std::vector<double> magnitude;
    ParticleEnsemble final_state;
};

struct ParticleRunConfig {
    double sigma = 0.2;
    double dt = 1e-3;
    double t_end = 1.0;
    double output_dt = 0.1;
};

// Records the flux at t = 0 and every output_dt (a multiple of dt).
ParticleSeries run_particles(ParticleEnsemble e, const ParticleRunConfig& cfg);

} // namespace doi
