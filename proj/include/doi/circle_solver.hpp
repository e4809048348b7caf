#pragma once

#include "doi/diagnostics.hpp"
#include "doi/exp_stepper.hpp"
#include "doi/field.hpp"
#include "doi/integrate.hpp"

#include <span>
#include <vector>

namespace doi {

// da/dt, db/dt for k = 1..K (index 0 of both outputs is 0)
void rhs_circle(const CircleField& f, double sigma, std::vector<double>& da, std::vector<double>& db);

// a_k = sqrt2 c_k: the n = 2 zonal field about the axis theta = phi
CircleField circle_from_zonal(const ZonalField& z, double phi = 0.0);
// rotate by phi: f(theta) -> f(theta - phi)
CircleField rotate(const CircleField& f, double phi);

class CircleStepper {
public:
    CircleStepper(int K, double sigma);
    void step(std::span<double> y, double dt);  // y = a_1..a_K, b_1..b_K
    void step(CircleField& f, double dt);

private:
    int K_;
    Etd2Stepper etd_;
};

// Nodal diagnostics on a uniform theta grid.
class CircleNodal {
public:
    CircleNodal(int K, int M = 0);  // M = 0: max(4K, 64) points
    ClippedValue free_energy(const CircleField& f, double sigma, double clip_floor = kClipFloor) const;
    ClippedValue dissipation(const CircleField& f, double sigma, double clip_floor = kClipFloor) const;
    double min_value(const CircleField& f) const;
    void evaluate(const CircleField& f, std::vector<double>& val, std::vector<double>& dtheta) const;

private:
    int K_, M_;
};

EntropyPair entropy_pair(const CircleField& f, double sigma);
double l2_distance(const CircleField& f);

struct CircleConfig {
    int K = 64;
    double sigma = 0.3;
    double t_end = 10;
    double dt_init = 1e-3;
    double rel_tol = 1e-8;
    bool adaptive = true;
    double output_dt = 0.1;
    double dt_max = 0;
    CircleField ic;  // K must match
    double clip_floor = kClipFloor;
    bool check_free_energy = true;
    bool keep_fields = true;
};

struct OmegaTrack {
    std::vector<double> angle;      // unwrapped, radians
    std::vector<double> magnitude;  // |J|
    bool heat = false;              // |J| = 0 at some snapshot: no direction
};

struct CircleSeries {
    std::vector<double> t;
    std::vector<CircleField> fields;
    std::vector<DiagnosticsRecord> records;  // J = (J1, J2)
    OmegaTrack omega;
    CircleField final_field;
    StepStats stats;
    double kappa = 0;
    double min_f = 0;
    int clip_events = 0;
};

CircleSeries run_circle(const CircleConfig& cfg);

OmegaTrack omega_track(std::span<const DiagnosticsRecord> records);

} // namespace doi
