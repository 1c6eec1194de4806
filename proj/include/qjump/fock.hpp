#pragma once

// Truncated Fock-basis representation of a single bosonic mode: states, banded
// operators, and the driven Duffing / harmonic oscillator Hamiltonians.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qjump {

using cplx = std::complex<double>;

// Physical parameters of the oscillator. Time is measured in units where the
// drive frequency is 1.
struct PhysicalParams {
    double beta = 0.1;    // correspondence scaling, (0, 1]
    double gamma = 0.125; // damping rate
    double g = 0.3;       // drive amplitude
    bool sho_mode = false;

    // Throws InvalidArgument naming the offending field.
    void validate() const;
};

class StateVector {
public:
    explicit StateVector(std::size_t dim);
    StateVector(std::vector<cplx> amplitudes);

    // Fock state |n>.
    static StateVector basis(std::size_t dim, std::size_t n);

    std::size_t dim() const noexcept { return amp_.size(); }
    std::span<cplx> amplitudes() noexcept { return amp_; }
    std::span<const cplx> amplitudes() const noexcept { return amp_; }
    cplx& operator[](std::size_t i) { return amp_[i]; }
    const cplx& operator[](std::size_t i) const { return amp_[i]; }

    double norm2() const noexcept;
    bool is_normalized(double tol = 1e-9) const noexcept;
    // Rescales to unit norm; throws ContractViolation on the zero vector.
    void normalize();

    // Population in the top `fraction` of the levels (at least one level).
    double tail_population(double fraction = 0.05) const noexcept;

private:
    std::vector<cplx> amp_;
};

// Square matrix with nonzero entries only for |row - col| <= bandwidth.
// Diagonal with offset k (col = row + k) is stored row-indexed: band(k)[i] = A(i, i + k);
// entries of band(k) whose column falls outside [0, dim) are kept at zero.
class BandedOperator {
public:
    BandedOperator(std::size_t dim, std::size_t bandwidth, bool hermitian = false);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t bandwidth() const noexcept { return bw_; }
    bool hermitian() const noexcept { return hermitian_; }

    cplx operator()(std::size_t row, std::size_t col) const;
    void set(std::size_t row, std::size_t col, cplx value);

    std::span<const cplx> band(int offset) const;
    std::span<cplx> band(int offset);

    // Offsets whose diagonal holds at least one nonzero entry.
    std::vector<int> nonzero_offsets() const;

    // y = A x
    void apply(std::span<const cplx> x, std::span<cplx> y) const;
    // y += alpha A x
    void apply_add(cplx alpha, std::span<const cplx> x, std::span<cplx> y) const;

    BandedOperator adjoint() const;
    BandedOperator scaled(cplx factor) const;
    // Keeps the top-left dim x dim block.
    BandedOperator truncated(std::size_t dim) const;
    // Upper diagonals become authoritative; lower diagonals are overwritten with their
    // conjugates and the main diagonal is made real, so the operator is Hermitian exactly.
    BandedOperator& make_hermitian();

    Eigen::MatrixXcd dense() const;

    friend BandedOperator operator+(const BandedOperator& a, const BandedOperator& b);
    friend BandedOperator operator-(const BandedOperator& a, const BandedOperator& b);
    // Banded product; the result bandwidth is the sum of the operand bandwidths
    // (capped at dim - 1).
    friend BandedOperator operator*(const BandedOperator& a, const BandedOperator& b);

private:
    std::size_t index(int offset) const { return static_cast<std::size_t>(offset + static_cast<int>(bw_)) * dim_; }

    std::size_t dim_;
    std::size_t bw_;
    bool hermitian_;
    std::vector<cplx> bands_;
};

struct Quadratures {
    BandedOperator q;
    BandedOperator p;
    BandedOperator n;
};

// H(t) = h_static + cos(drive_frequency * t) * h_drive.
struct HamiltonianParts {
    BandedOperator h_static;
    BandedOperator h_drive;
    double drive_frequency = 1.0;

    BandedOperator at(double t) const;
};

// Annihilation operator a|n> = sqrt(n)|n-1>.
BandedOperator build_ladder(std::size_t dim);

// q = (a + a^dag)/sqrt(2), p = i(a^dag - a)/sqrt(2), n = a^dag a.
Quadratures build_quadratures(std::size_t dim);

// Duffing: p^2/2 + (beta^2/4) q^4 - q^2/2 + (gamma/2)(qp + pq), or p^2/2 + q^2/2 in SHO mode;
// the drive part is (g/beta) q in both cases. Matrix elements are those of the untruncated
// operators restricted to the first dim levels.
HamiltonianParts build_hamiltonian(const PhysicalParams& params, std::size_t dim);

// L = sqrt(2 gamma) a
BandedOperator build_lindblad(const PhysicalParams& params, std::size_t dim);

// <psi|A|psi> for a normalized state.
cplx expectation(const StateVector& state, const BandedOperator& op);
// Real part of the expectation of a Hermitian operator; throws NumericalError if the
// imaginary part exceeds 1e-9.
double expectation_real(const StateVector& state, const BandedOperator& op);

// Coherent state |alpha> truncated to dim levels and renormalized. Requires
// |alpha|^2 + 6|alpha| < dim, otherwise throws LeakageError.
StateVector coherent_state(cplx alpha, std::size_t dim);

}  // namespace qjump
