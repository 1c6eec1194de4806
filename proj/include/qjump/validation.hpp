#pragma once

// Oracle checks of the simulator against closed forms and the density-matrix integrator:
// unravelling consistency, the harmonic steady state, Poisson waiting times and the classical
// Lyapunov signs. Each check reports named metrics and a pass flag.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qjump/spectra.hpp"

namespace qjump {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    std::vector<std::pair<std::string, double>> metrics;

    double metric(const std::string& key) const;  // throws InvalidArgument for unknown keys
};

struct ValidationOptions {
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    // Multiplies the detection rate of every quantum-jump run (see JumpSolverConfig);
    // anything other than 1 should make the rate-sensitive checks fail.
    double fault_rate_scale = 1.0;
};

// Check groups accepted by run_validation's filter, in execution order.
const std::vector<std::string>& validation_groups();

// Ensemble mean of <q>(t) over 200 trajectories against the density matrix (dim 30, beta 1,
// g 0.3, gamma 0.125, 5 drive periods, coherent start alpha = 1.5): every sample within 4
// standard errors. Leakage is reported, not enforced (both sides share the basis).
CheckResult check_unravelling(const ValidationOptions& opt);

// Driven harmonic oscillator (g 0.3, beta 0.1, gamma 0.125) from vacuum: detections per unit
// time over 300 steady periods within 5% of 2 gamma <n> from the closed form, >= 2000 jumps.
CheckResult check_sho_rate(const ValidationOptions& opt);

// Density matrix at dim 256 after 80 time units (20 energy damping times) against the closed
// form coherent amplitude: |tr(rho a) - alpha(t)| < 1e-3 over one further drive period.
CheckResult check_sho_density(const ValidationOptions& opt);

// Undriven oscillator in a coherent state with <n> = 400: the first 10 waiting times of 200
// trajectories (rate nearly constant over that span) pass a Kolmogorov-Smirnov test against
// the exponential law at significance 0.01.
CheckResult check_poisson(const ValidationOptions& opt);

// Classical limit: Lyapunov exponent positive at g = 0.3 and non-positive at g = 0.1
// (gamma 0.125), with the same signs at half the step.
CheckResult check_lyapunov(const ValidationOptions& opt);

// Runs the groups named in `only` (all when empty): "unravelling", "sho-steady" (rate and
// density checks), "poisson", "lyapunov". Throws InvalidArgument for unknown group names.
std::vector<CheckResult> run_validation(const std::vector<std::string>& only, const ValidationOptions& opt);

// Two-sided Kolmogorov-Smirnov statistic of `samples` against Exp(rate) and its asymptotic
// p-value (Stephens' small-sample correction). Throws InvalidArgument for empty input or
// rate <= 0.
std::pair<double, double> ks_exponential(std::vector<double> samples, double rate);

// Relative Parseval mismatch |sum(psd) * resolution / variance - 1| of welch_psd on a
// series; a check of the estimator normalization.
double parseval_error(const TimeSeries& series, std::size_t segment_len, double overlap, Window window);

}  // namespace qjump
