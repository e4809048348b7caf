#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace doi {

// Blow-up, non-finite state or a violated runtime invariant. Carries the
// offending state for a diagnostic dump.
struct NumericalAbort : std::runtime_error {
    double t = 0;
    std::vector<double> state;
    NumericalAbort(const std::string& what, double t_, std::vector<double> s)
        : std::runtime_error(what), t(t_), state(std::move(s))
    {
    }
};

struct StepControl {
    double t_end = 1.0;
    double dt_init = 1e-3;
    double rel_tol = 1e-8;
    double output_dt = 0.1;
    double dt_max = 0;      // 0: bounded by output_dt only
    bool adaptive = true;   // false: fixed dt_init steps
    double blowup = 1e12;
};

struct StepStats {
    long accepted = 0, rejected = 0;
    double dt_min = std::numeric_limits<double>::infinity();
    double dt_max = 0;
};

inline double l2_norm(std::span<const double> v)
{
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline void check_state(std::span<const double> y, double t, double blowup)
{
    double nrm = 0;
    for (double x : y) {
        if (!std::isfinite(x))
            throw NumericalAbort("non-finite coefficient at t=" + std::to_string(t), t, {y.begin(), y.end()});
        nrm += x * x;
    }
    if (std::sqrt(nrm) > blowup)
        throw NumericalAbort("coefficient norm above blow-up threshold at t=" + std::to_string(t), t,
                             {y.begin(), y.end()});
}

// Integrates y from 0 to t_end. `step(y, dt)` advances in place; `out(t, y)`
// is called at t = 0, every output_dt and at t_end exactly. Adaptive mode
// uses step doubling with error measured relative to ||y||.
template <class StepFn, class OutFn>
StepStats drive(std::vector<double>& y, const StepControl& c, StepFn&& step, OutFn&& out)
{
    if (!(c.t_end > 0) || !(c.dt_init > 0) || !(c.output_dt > 0))
        throw std::invalid_argument("drive: t_end, dt and output interval must be positive");
    StepStats st;
    out(0.0, std::span<const double>(y));
    auto note = [&](double h) {
        st.dt_min = std::min(st.dt_min, h);
        st.dt_max = std::max(st.dt_max, h);
    };

    if (!c.adaptive) {
        const double dt = c.dt_init;
        long per_out = std::lround(c.output_dt / dt);
        long total = std::lround(c.t_end / dt);
        if (per_out < 1 || std::abs(per_out * dt - c.output_dt) > 1e-9 * c.output_dt ||
            std::abs(total * dt - c.t_end) > 1e-9 * c.t_end)
            throw std::invalid_argument("fixed stepping: output interval and t_end must be multiples of dt");
        std::span<double> ys(y);
        for (long s = 1; s <= total; ++s) {
            step(ys, dt);
            ++st.accepted;
            note(dt);
            double t = s * dt;
            check_state(y, t, c.blowup);
            if (s % per_out == 0 || s == total) out(t, std::span<const double>(y));
        }
        return st;
    }

    if (!(c.rel_tol > 0)) throw std::invalid_argument("adaptive stepping needs rel_tol > 0");
    const double cap = c.dt_max > 0 ? std::min(c.dt_max, c.output_dt) : c.output_dt;
    std::vector<double> big(y.size()), half(y.size());
    double t = 0.0, dt = std::min(c.dt_init, cap);
    for (long k = 1;; ++k) {
        const double next = std::min(k * c.output_dt, c.t_end);
        while (t < next) {
            double h = std::min(dt, cap);
            bool land = false;
            if (t + h >= next - 1e-12 * std::max(1.0, next)) {
                h = next - t;
                land = true;
            }
            big = y;
            step(std::span<double>(big), h);
            half = y;
            step(std::span<double>(half), 0.5 * h);
            step(std::span<double>(half), 0.5 * h);
            double diff = 0;
            for (std::size_t i = 0; i < y.size(); ++i) diff += (big[i] - half[i]) * (big[i] - half[i]);
            diff = std::sqrt(diff);
            double scale = c.rel_tol * std::max(l2_norm(half), 1e-300);
            double err = diff == 0 ? 0.0 : diff / scale;
            if (!std::isfinite(err)) check_state(half, t + h, c.blowup);
            double fac = err == 0 ? 2.0 : std::clamp(0.9 * std::pow(err, -1.0 / 3.0), 0.2, 2.0);
            if (err <= 1.0) {
                y.swap(half);
                t = land ? next : t + h;
                ++st.accepted;
                note(h);
                check_state(y, t, c.blowup);
                if (land && h < dt)
                    dt = fac >= 1.0 ? dt : std::min(dt, h * fac);
                else
                    dt = h * fac;
            } else {
                ++st.rejected;
                dt = h * fac;
            }
            if (dt < 1e-14 * std::max(1.0, t))
                throw NumericalAbort("step size underflow at t=" + std::to_string(t), t, y);
        }
        out(t, std::span<const double>(y));
        if (next >= c.t_end) break;
    }
    return st;
}

} // namespace doi
