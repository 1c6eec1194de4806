#pragma once

// Dense density-matrix integration of the Lindblad master equation
//   d rho/dt = -i [H(t), rho] + L rho L^dag - {L^dag L, rho} / 2
// on small truncated bases, and the closed-form steady state of the driven damped harmonic
// oscillator. Both serve as reference solutions for the trajectory solver.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "qjump/fock.hpp"

namespace qjump {

class DensityMatrix {
public:
    // Requires a square matrix of size >= 2; invariants are checked by validate().
    explicit DensityMatrix(Eigen::MatrixXcd elements);
    // |psi><psi| for a normalized state.
    static DensityMatrix pure(const StateVector& state);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(rho_.rows()); }
    const Eigen::MatrixXcd& elements() const noexcept { return rho_; }

    cplx trace() const { return rho_.trace(); }
    // max |rho - rho^dag|
    double hermiticity_error() const;
    double min_eigenvalue() const;
    // tr(rho A)
    cplx expectation(const BandedOperator& op) const;

    // Throws ContractViolation unless rho is Hermitian within 1e-10, has unit trace within
    // 1e-9 and no eigenvalue below -1e-8.
    void validate() const;

private:
    Eigen::MatrixXcd rho_;
};

struct DensitySolverConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double max_step = 0.05;
    double trace_tolerance = 1e-6;  // allowed drift of tr(rho) from its initial value
};

// Largest basis accepted by evolve_density: dense evolution is an oracle for small
// instances; the harmonic oscillator (whose generator stays narrow-banded) may use more.
inline constexpr std::size_t kDensityMaxDim = 64;
inline constexpr std::size_t kDensityMaxDimSho = 256;

// rho(t) on t_grid (non-decreasing, starting at or after 0; rho0 is taken at t = 0).
// The superoperator is applied matrix-free with three banded-times-dense products per
// evaluation. Throws NumericalError if the trace drifts by more than cfg.trace_tolerance.
std::vector<DensityMatrix> evolve_density(const PhysicalParams& params, std::size_t dim, const DensityMatrix& rho0,
                                          const std::vector<double>& t_grid, const DensitySolverConfig& cfg = {});

// Long-time coherent amplitude alpha(t) = A e^{-it} + B e^{+it} of the driven damped
// harmonic oscillator (no cross-term in the Hamiltonian).
struct SteadyAmplitude {
    cplx A;
    cplx B;

    cplx alpha(double t) const;
    // Time-averaged photon number |A|^2 + |B|^2.
    double mean_photon_number() const;
};

// Throws UndampedResonance for gamma = 0 (no steady state) and InvalidArgument when sho_mode
// is off.
SteadyAmplitude sho_steady_amplitude(const PhysicalParams& params);

}  // namespace qjump
