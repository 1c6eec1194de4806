#pragma once

// Classical limit of the driven, damped Duffing oscillator in the scaled coordinate u = beta q:
//   u'' + 2 gamma u' + u^3 - u + g cos t = 0
// (u'' + 2 gamma u' + u + g cos t = 0 in SHO mode), optionally with additive white noise on v.

#include <cstdint>
#include <numbers>
#include <vector>

#include "qjump/fock.hpp"

namespace qjump {

struct PhasePoint {
    double u = 0.0;
    double v = 0.0;
};

struct ClassicalConfig {
    double step = 2.0 * std::numbers::pi / 1024.0;
    double sample_interval = 2.0 * std::numbers::pi / 64.0;
    double t_transient = 50.0;  // drive periods, discarded
    double t_record = 500.0;    // drive periods
    PhasePoint start{0.5, 0.0};

    void validate() const;
};

struct ClassicalTrajectory {
    std::vector<double> sample_times;  // drive periods, starting after the transient
    std::vector<double> x;             // u = beta q
    std::vector<double> v;
    PhysicalParams params;
    double noise_amp = 0.0;
    std::uint64_t seed = 0;
    double sample_dt = 0.0;  // absolute sample spacing
};

struct LyapunovResult {
    double exponent = 0.0;  // per unit time
    bool converged = false;
    double relative_fluctuation = 0.0;  // spread of the running estimate over the last half
};

// Noise level matching the vacuum diffusion of the damped mode: beta * sqrt(2 gamma).
double default_noise_amp(const PhysicalParams& params);

// Deterministic right-hand side (u', v') at time t.
PhasePoint classical_rhs(const PhysicalParams& params, double t, PhasePoint y);

// Classical fourth-order Runge-Kutta step; h may be negative.
PhasePoint rk4_step(const PhysicalParams& params, double t, PhasePoint y, double h);

// Noise-free flow from t0 to t1 with fixed step magnitude `step` (t1 < t0 integrates backwards).
PhasePoint integrate_deterministic(const PhysicalParams& params, PhasePoint start, double t0, double t1,
                                   double step = 2.0 * std::numbers::pi / 1024.0);

// Langevin realisation: du = v dt, dv = f(u, v, t) dt + noise_amp dW. The drift is advanced
// with an RK4 step and the Wiener increment added afterwards (Euler-Maruyama in the noise).
// Throws NumericalError on divergence.
ClassicalTrajectory integrate_langevin(const PhysicalParams& params, double noise_amp, const ClassicalConfig& cfg,
                                       std::uint64_t seed);

// Largest Lyapunov exponent by tangent-vector renormalization once per drive period.
// The first tenth of t_total is discarded as transient.
LyapunovResult lyapunov_exponent(const PhysicalParams& params, double t_total,
                                 double step = 2.0 * std::numbers::pi / 1024.0, PhasePoint start = {0.5, 0.0});

// State on the noise-free attractor after `periods` drive periods from `start`, at a time
// where the drive phase is zero.
PhasePoint attractor_point(const PhysicalParams& params, double periods = 200.0, PhasePoint start = {0.5, 0.0});

// Coherent amplitude with <q> = u / beta and <p> = v / beta.
cplx coherent_amplitude(const PhysicalParams& params, PhasePoint point);

}  // namespace qjump
