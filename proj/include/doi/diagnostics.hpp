#pragma once

#include "doi/field.hpp"
#include "doi/harmonics.hpp"
#include "doi/quadrature.hpp"

#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace doi {

inline constexpr double kClipFloor = 1e-12;

struct DiagnosticsRecord {
    double t = 0;
    std::vector<double> J;  // flux vector (length 1 for zonal runs: the axial j)
    double F = 0, D = 0, H = 0, Dtilde = 0;
    double l2 = 0;
    double hs = 0;            // homogeneous H^1 norm of f-1
    double alpha_crit = 0;    // n |J|
    double gevrey_r = std::numeric_limits<double>::quiet_NaN();
    double dist_to_fvm = std::numeric_limits<double>::quiet_NaN();
    double min_f = 0;         // smallest nodal value
    int clip_count = 0;       // nodes where f <= clip floor in log terms
};

struct ClippedValue {
    double value = 0;
    int clipped = 0;
};

// Nodal evaluation of zonal fields and the integrals that need f at nodes.
class ZonalNodal {
public:
    ZonalNodal(const BasisTable& basis, Quadrature q);

    const Quadrature& quadrature() const { return q_; }
    const BasisTable& basis() const { return basis_; }

    // f and e.grad f = (1-x^2) f'(x) at the quadrature nodes
    void evaluate(const ZonalField& f, std::vector<double>& val, std::vector<double>& egrad) const;

    ClippedValue free_energy(const ZonalField& f, double sigma, double clip_floor = kClipFloor) const;
    ClippedValue dissipation(const ZonalField& f, double sigma, double clip_floor = kClipFloor) const;
    double min_value(const ZonalField& f) const;
    double second_moment(const ZonalField& f) const;  // int x^2 f

private:
    BasisTable basis_;
    Quadrature q_;
    std::vector<double> Y_;  // M x (L+2) row-major
    int stride_;
};

// Coefficients of e.grad f in Y_0..Y_{L+1}.
std::vector<double> axis_gradient(std::span<const double> c, const BasisTable& basis);

struct EntropyPair {
    double H = 0, Dtilde = 0;
};
EntropyPair entropy_pair(const ZonalField& f, const BasisTable& basis, double sigma);

// (sum_{l>=1} lambda_l^s c_l^2)^{1/2}
double sobolev_norm(const ZonalField& f, const BasisTable& basis, double s);
double l2_distance(const ZonalField& f);  // ||f - 1||

// Axis component of int g grad(conf_laplacian^{-1} g) for mean-zero g
// (c[0] ignored), plus the sum of absolute term sizes as a scale.
struct Commutator {
    double value = 0, scale = 0;
};
Commutator commutator_axis(std::span<const double> c, const BasisTable& basis);

// slope of -log|c_l| over l >= 1 where |c_l| > floor; absent with < 8 modes
std::optional<double> gevrey_radius(std::span<const double> c, double floor = 1e-14);

struct RateWindow {
    double fraction = 0.5;    // trailing share of the eligible snapshots
    double threshold = 1e-2;  // eligible once the value drops below this
    int min_points = 10;
};

struct RateFit {
    double rate = std::numeric_limits<double>::quiet_NaN();
    double r2 = std::numeric_limits<double>::quiet_NaN();
    int points = 0;
    bool shrunk = false;  // nonpositive values forced a shorter window
    bool ok = false;
};

// -slope of log value against t
RateFit fit_exponential_rate(std::span<const double> t, std::span<const double> v, RateWindow w = {});
// slope of value^{-2} against t on the trailing window (threshold ignored)
RateFit fit_critical_slope(std::span<const double> t, std::span<const double> l2, RateWindow w = {});

struct ConservationResiduals {
    double F = 0, H = 0;
    bool F_checked = false;
};
// max_i |(X_{i+1}-X_i)/dt_i + (Y_i+Y_{i+1})/2| for (F,D) and (H,Dtilde)
ConservationResiduals conservation_check(std::span<const double> t, std::span<const double> F,
                                         std::span<const double> D, std::span<const double> H,
                                         std::span<const double> Dtilde, bool check_F = true);

} // namespace doi
