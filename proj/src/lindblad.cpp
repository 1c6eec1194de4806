#include "qjump/lindblad.hpp"

#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "qjump/errors.hpp"
#include "qjump/rk853.hpp"

namespace qjump {

namespace {

constexpr double kHermitianTol = 1e-10;
constexpr double kTraceTol = 1e-9;
constexpr double kPositivityTol = -1e-8;

using MatMap = Eigen::Map<Eigen::MatrixXcd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXcd>;

// out = A X column by column (X column-major, d x d).
void apply_columns(const BandedOperator& a, const cplx* x, cplx* out, std::size_t d) {
    for (std::size_t c = 0; c < d; ++c) {
        a.apply(std::span<const cplx>(x + c * d, d), std::span<cplx>(out + c * d, d));
    }
}

void apply_columns_add(const BandedOperator& a, cplx alpha, const cplx* x, cplx* out, std::size_t d) {
    for (std::size_t c = 0; c < d; ++c) {
        a.apply_add(alpha, std::span<const cplx>(x + c * d, d), std::span<cplx>(out + c * d, d));
    }
}

}  // namespace

DensityMatrix::DensityMatrix(Eigen::MatrixXcd elements) : rho_(std::move(elements)) {
    if (rho_.rows() != rho_.cols()) throw DimensionMismatch("density matrix must be square");
    if (rho_.rows() < 2) throw InvalidDimension("density matrix dimension must be at least 2");
}

DensityMatrix DensityMatrix::pure(const StateVector& state) {
    if (!state.is_normalized()) throw ContractViolation("pure-state density matrix needs a normalized state");
    const auto amp = state.amplitudes();
    const Eigen::Map<const Eigen::VectorXcd> v(amp.data(), static_cast<Eigen::Index>(amp.size()));
    return DensityMatrix(v * v.adjoint());
}

double DensityMatrix::hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

double DensityMatrix::min_eigenvalue() const {
    const Eigen::MatrixXcd h = 0.5 * (rho_ + rho_.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

cplx DensityMatrix::expectation(const BandedOperator& op) const {
    if (op.dim() != dim()) throw DimensionMismatch("operator and density matrix dimensions differ");
    // tr(rho A) = sum_{i,k} rho(k, i) A(i, k), visiting only the bands of A.
    const int d = static_cast<int>(dim());
    const int bw = static_cast<int>(op.bandwidth());
    cplx s{};
    for (int k = -bw; k <= bw; ++k) {
        const auto band = op.band(k);
        for (int i = std::max(0, -k); i < std::min(d, d - k); ++i) {
            s += rho_(i + k, i) * band[static_cast<std::size_t>(i)];
        }
    }
    return s;
}

void DensityMatrix::validate() const {
    const double herm = hermiticity_error();
    if (herm > kHermitianTol) {
        throw ContractViolation("density matrix not Hermitian (deviation " + std::to_string(herm) + ")");
    }
    const double tr_err = std::abs(trace() - 1.0);
    if (tr_err > kTraceTol) {
        throw ContractViolation("density matrix trace deviates from 1 by " + std::to_string(tr_err));
    }
    const double ev = min_eigenvalue();
    if (ev < kPositivityTol) {
        throw ContractViolation("density matrix has negative eigenvalue " + std::to_string(ev));
    }
}

std::vector<DensityMatrix> evolve_density(const PhysicalParams& params, std::size_t dim, const DensityMatrix& rho0,
                                          const std::vector<double>& t_grid, const DensitySolverConfig& cfg) {
    params.validate();
    if (rho0.dim() != dim) throw DimensionMismatch("rho0 dimension differs from dim");
    const std::size_t cap = params.sho_mode ? kDensityMaxDimSho : kDensityMaxDim;
    if (dim > cap) {
        throw InvalidDimension("dense evolution is limited to dim <= " + std::to_string(cap) + ", got " +
                               std::to_string(dim));
    }
    if (!(cfg.trace_tolerance > 0.0)) throw InvalidArgument("trace_tolerance must be positive");
    rho0.validate();
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] >= 0.0) || (i > 0 && t_grid[i] < t_grid[i - 1])) {
            throw InvalidArgument("t_grid must be non-negative and non-decreasing");
        }
    }

    const HamiltonianParts parts = build_hamiltonian(params, dim);
    const BandedOperator lindblad = build_lindblad(params, dim);
    const BandedOperator decay = lindblad.adjoint() * lindblad;
    const auto nz = decay.nonzero_offsets();
    Eigen::VectorXd decay_diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    for (int k : nz) {
        if (k != 0) throw InvalidArgument("evolve_density requires a diagonal L^dag L");
        const auto b = decay.band(0);
        for (std::size_t i = 0; i < dim; ++i) decay_diag(static_cast<Eigen::Index>(i)) = b[i].real();
    }

    const auto d = static_cast<Eigen::Index>(dim);
    Eigen::MatrixXcd hr(d, d), lr(d, d), lr_adj(d, d), jump(d, d);
    // Valid for Hermitian rho, which the flow preserves: rho H = (H rho)^dag.
    auto rhs = [&](double t, std::span<const cplx> y, std::span<cplx> dy) {
        const ConstMatMap rho(y.data(), d, d);
        MatMap out(dy.data(), d, d);
        apply_columns(parts.h_static, rho.data(), hr.data(), dim);
        const double c = std::cos(parts.drive_frequency * t);
        if (c != 0.0) apply_columns_add(parts.h_drive, c, rho.data(), hr.data(), dim);
        apply_columns(lindblad, rho.data(), lr.data(), dim);
        lr_adj = lr.adjoint();
        apply_columns(lindblad, lr_adj.data(), jump.data(), dim);  // L (L rho)^dag = (L rho L^dag)^dag
        out.noalias() = cplx{0.0, -1.0} * (hr - hr.adjoint());
        out += jump.adjoint();
        out -= 0.5 * (decay_diag.asDiagonal() * rho + rho * decay_diag.asDiagonal());
    };

    const std::size_t n = dim * dim;
    RungeKutta853<decltype(rhs)> integrator(n, rhs, StepControl{cfg.rel_tol, cfg.abs_tol, cfg.max_step}, n);
    std::vector<cplx> y(rho0.elements().data(), rho0.elements().data() + n);
    const cplx tr0 = rho0.trace();

    std::vector<DensityMatrix> out;
    out.reserve(t_grid.size());
    double t = 0.0;
    for (const double target : t_grid) {
        while (t < target) {
            const double h_limit = target - t;
            const double h = integrator.step(t, y, h_limit);
            t = (h == h_limit) ? target : t + h;
        }
        const ConstMatMap rho(y.data(), d, d);
        const double drift = std::abs(rho.trace() - tr0);
        if (!(drift <= cfg.trace_tolerance)) {
            throw NumericalError("trace drift " + std::to_string(drift) + " at t = " + std::to_string(t));
        }
        out.emplace_back(Eigen::MatrixXcd(rho));
    }
    return out;
}

cplx SteadyAmplitude::alpha(double t) const { return A * std::polar(1.0, -t) + B * std::polar(1.0, t); }

double SteadyAmplitude::mean_photon_number() const { return std::norm(A) + std::norm(B); }

SteadyAmplitude sho_steady_amplitude(const PhysicalParams& params) {
    if (params.gamma == 0.0) throw UndampedResonance("no steady state for an undamped driven oscillator (gamma = 0)");
    params.validate();
    if (!params.sho_mode) throw InvalidArgument("sho_steady_amplitude requires sho_mode");
    // alpha' = -(i + gamma) alpha - i c (e^{it} + e^{-it}) with c = g / (2 sqrt2 beta);
    // matching e^{-it} and e^{+it} terms gives the two coefficients.
    const double c = params.g / (2.0 * std::numbers::sqrt2 * params.beta);
    const cplx i{0.0, 1.0};
    return {-i * c / params.gamma, -i * c / (2.0 * i + params.gamma)};
}

}  // namespace qjump
