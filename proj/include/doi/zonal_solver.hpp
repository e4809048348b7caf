#pragma once

#include "doi/diagnostics.hpp"
#include "doi/exp_stepper.hpp"
#include "doi/field.hpp"
#include "doi/harmonics.hpp"
#include "doi/integrate.hpp"
#include "doi/quadrature.hpp"

#include <functional>
#include <span>
#include <vector>

namespace doi {

struct IcSpec {
    enum class Kind { uniform, fvm, perturbed, coeffs, nodes };
    Kind kind = Kind::uniform;
    double kappa = 0;              // fvm
    double eps = 0;                // perturbed
    std::vector<int> modes{1, 2};  // perturbed
    std::vector<double> coeffs;    // coeffs: c_1, c_2, ...
    std::function<double(double)> node_fn;  // nodes: f(x)

    static IcSpec uniform() { return {}; }
    static IcSpec fvm(double kappa);
    static IcSpec perturbed(double eps, std::vector<int> modes = {1, 2});
    static IcSpec from_coeffs(std::vector<double> c);
    static IcSpec from_nodes(std::function<double(double)> f);
};

struct Projection {
    ZonalField field;
    double residual = 0;  // L2 energy of the discarded modes
    double min_node = 1;  // smallest value at the projection nodes
    bool nonpositive = false;
};

// Quadrature should be finer than the basis (order >= L+1).
Projection project_ic(const IcSpec& ic, const BasisTable& basis, const Quadrature& q);

// Coefficients of M_kappa (kappa may be negative: axis reversed).
ZonalField fvm_field(int n, int L, double kappa);

// dc/dt for l = 0..L (entry 0 is always 0)
void rhs(const ZonalField& f, const BasisTable& basis, double sigma, std::span<double> out);
std::vector<double> rhs(const ZonalField& f, const BasisTable& basis, double sigma);

// One exponential RK2 step; exact on the diffusion part.
class ZonalStepper {
public:
    ZonalStepper(const BasisTable& basis, double sigma);
    void step(std::span<double> y, double dt);  // y = c_1..c_L
    void step(ZonalField& f, double dt);

private:
    const BasisTable& basis_;
    double sigma_;
    double growth_;
    Etd2Stepper etd_;
};
ZonalField step(const ZonalField& f, const BasisTable& basis, double sigma, double dt);

struct SolverConfig {
    int n = 3;
    int L = 64;
    double sigma = 0.5;
    double t_end = 10;
    double dt_init = 1e-3;
    double rel_tol = 1e-8;
    bool adaptive = true;
    double output_dt = 0.1;
    double dt_max = 0;
    IcSpec ic;
    double clip_floor = kClipFloor;
    int quad_order = 0;  // 0: 2L
    bool check_free_energy = true;
    bool keep_fields = true;
};

struct TimeSeries {
    std::vector<double> t;
    std::vector<ZonalField> fields;  // empty unless keep_fields
    std::vector<DiagnosticsRecord> records;
    ZonalField final_field;
    Projection ic;
    StepStats stats;
    double kappa = 0;  // equilibrium concentration when supercritical
    int clip_events = 0;
    double min_f = 0;  // over all snapshots
};

TimeSeries run(const SolverConfig& cfg);

} // namespace doi
