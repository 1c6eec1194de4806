#pragma once

// Quantum-jump (photon counting) unravelling of the damped oscillator master equation.
//
// Between detections the unnormalized state follows d|psi>/dt = [-i H(t) - L^dag L / 2] |psi>;
// a detection happens when its squared norm decays to a uniform random threshold, at which
// point |psi> -> L|psi> / ||L|psi>||. The statistics of the detection times are those of the
// Ito increment equation with Poissonian dN of mean <L^dag L> dt.

#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "qjump/fock.hpp"

namespace qjump {

struct JumpSolverConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double norm_bisect_tol = 1e-10;  // jump-time location tolerance on the squared norm
    double sample_interval = 2.0 * std::numbers::pi / 64.0;
    double t_transient = 50.0;  // drive periods, simulated then flagged
    double t_record = 500.0;    // drive periods
    double max_step = 0.05;
    double leakage_bound = 1e-6;
    // Propagate only the Fock levels carrying population (plus a margin); levels above are
    // exactly zero. Cuts the explicit-integrator stiffness, which grows with the square of
    // the highest propagated level.
    bool adaptive_window = true;
    // Fault injection for validation: multiplies the log-norm decay seen by the jump
    // threshold, so 0.5 halves the detection rate. Must stay 1 for physics runs.
    double fault_rate_scale = 1.0;

    void validate() const;
};

struct TrajectoryRecord {
    std::vector<double> sample_times;  // drive periods
    std::vector<double> q_mean;
    std::vector<double> p_mean;
    std::vector<double> n_mean;
    std::vector<double> jump_times;  // absolute time
    std::size_t record_start = 0;    // first sample index after the transient
    double t_record_start = 0.0;     // absolute time at which the recorded window starts
    double t_end = 0.0;              // absolute time of the last sample
    double sample_dt = 0.0;          // absolute sample spacing
    double leakage_max = 0.0;
    double norm_deviation_max = 0.0;  // max | ||psi||^2 - 1 | over reported samples
    std::uint64_t seed = 0;
    PhysicalParams params;
    JumpSolverConfig config;
    std::size_t dim = 0;
    std::size_t steps_accepted = 0;
    std::size_t steps_rejected = 0;
    double mean_window = 0.0;  // average number of propagated levels per step

    // Number of detections inside the recorded window.
    std::size_t recorded_jump_count() const;
    // Jump times inside the recorded window.
    std::vector<double> recorded_jump_times() const;
};

// Fused evaluation of the non-Hermitian drift [-i H(t) - L^dag L / 2] psi.
class DriftKernel {
public:
    DriftKernel(const HamiltonianParts& parts, const BandedOperator& lindblad);

    std::size_t dim() const noexcept { return dim_; }
    // Evaluates on the leading psi.size() levels (a window of the basis).
    void operator()(double t, std::span<const cplx> psi, std::span<cplx> out) const;
    // <psi| L^dag L |psi> (unnormalized)
    double emission_rate(std::span<const cplx> psi) const;

private:
    struct Band {
        int offset;
        std::vector<double> re;
        std::vector<double> im;
        bool has_re;
        bool has_im;
    };
    static std::vector<Band> collect(const BandedOperator& op);
    static void accumulate(const Band& band, double scale, const double* x, double* y, int n);

    std::size_t dim_;
    double omega_;
    std::vector<Band> static_bands_;
    std::vector<Band> drive_bands_;
    std::vector<double> rate_diag_;  // diagonal of L^dag L
};

// d psi/dt = [-i H(t) - L^dag L / 2] psi for the unnormalized state.
StateVector effective_drift(const StateVector& state, double t, const HamiltonianParts& parts,
                            const BandedOperator& lindblad);

// L|psi> / ||L|psi>||; throws ContractViolation when <L^dag L> < 1e-14.
StateVector apply_jump(const StateVector& state, const BandedOperator& lindblad);

// One realisation of the unravelling. Bit-reproducible for fixed (seed, cfg, params, dim).
// Throws LeakageError when the tail population exceeds cfg.leakage_bound and NumericalError
// when the integrator fails.
TrajectoryRecord evolve_trajectory(const PhysicalParams& params, const JumpSolverConfig& cfg,
                                   const StateVector& init, std::uint64_t seed);

// Independent trajectories keyed by (master_seed, index); `jobs` worker threads. The result is
// ordered by index and does not depend on `jobs`.
std::vector<TrajectoryRecord> evolve_ensemble(const PhysicalParams& params, const JumpSolverConfig& cfg,
                                              const StateVector& init, std::uint64_t master_seed,
                                              std::size_t count, std::size_t jobs = 1);

}  // namespace qjump
