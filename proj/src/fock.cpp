#include "qjump/fock.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qjump/errors.hpp"

namespace qjump {

namespace {

void check_dim(std::size_t dim) {
    if (dim < 2) {
        throw InvalidDimension("Fock dimension must be at least 2, got " + std::to_string(dim));
    }
}

// Extra levels used when forming operator products so that the truncated result
// carries the untruncated matrix elements.
constexpr std::size_t kProductPadding = 4;

}  // namespace

void PhysicalParams::validate() const {
    if (!(beta > 0.0 && beta <= 1.0)) {
        throw InvalidArgument("beta must lie in (0, 1], got " + std::to_string(beta));
    }
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw InvalidArgument("gamma must be positive, got " + std::to_string(gamma));
    }
    if (!(g >= 0.0) || !std::isfinite(g)) {
        throw InvalidArgument("g must be non-negative, got " + std::to_string(g));
    }
}

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(std::size_t dim) : amp_(dim) { check_dim(dim); }

StateVector::StateVector(std::vector<cplx> amplitudes) : amp_(std::move(amplitudes)) { check_dim(amp_.size()); }

StateVector StateVector::basis(std::size_t dim, std::size_t n) {
    StateVector s(dim);
    if (n >= dim) {
        throw InvalidArgument("basis level " + std::to_string(n) + " outside dimension " + std::to_string(dim));
    }
    s.amp_[n] = 1.0;
    return s;
}

double StateVector::norm2() const noexcept {
    double s = 0.0;
    for (const auto& c : amp_) s += std::norm(c);
    return s;
}

bool StateVector::is_normalized(double tol) const noexcept { return std::abs(norm2() - 1.0) <= tol; }

void StateVector::normalize() {
    const double n2 = norm2();
    if (!(n2 > 0.0) || !std::isfinite(n2)) {
        throw ContractViolation("cannot normalize a state with squared norm " + std::to_string(n2));
    }
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& c : amp_) c *= inv;
}

double StateVector::tail_population(double fraction) const noexcept {
    const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(amp_.size()))));
    double s = 0.0;
    for (std::size_t i = amp_.size() - count; i < amp_.size(); ++i) s += std::norm(amp_[i]);
    return s;
}

// ---------------------------------------------------------------------------
// BandedOperator

BandedOperator::BandedOperator(std::size_t dim, std::size_t bandwidth, bool hermitian)
    : dim_(dim), bw_(std::min(bandwidth, dim - 1)), hermitian_(hermitian) {
    check_dim(dim);
    bands_.assign((2 * bw_ + 1) * dim_, cplx{});
}

cplx BandedOperator::operator()(std::size_t row, std::size_t col) const {
    if (row >= dim_ || col >= dim_) throw InvalidArgument("matrix index out of range");
    const long k = static_cast<long>(col) - static_cast<long>(row);
    if (std::abs(k) > static_cast<long>(bw_)) return {};
    return bands_[index(static_cast<int>(k)) + row];
}

void BandedOperator::set(std::size_t row, std::size_t col, cplx value) {
    if (row >= dim_ || col >= dim_) throw InvalidArgument("matrix index out of range");
    const long k = static_cast<long>(col) - static_cast<long>(row);
    if (std::abs(k) > static_cast<long>(bw_)) {
        throw InvalidArgument("element (" + std::to_string(row) + ", " + std::to_string(col) + ") outside bandwidth");
    }
    bands_[index(static_cast<int>(k)) + row] = value;
}

std::span<const cplx> BandedOperator::band(int offset) const {
    if (std::abs(offset) > static_cast<int>(bw_)) throw InvalidArgument("band offset outside bandwidth");
    return {bands_.data() + index(offset), dim_};
}

std::span<cplx> BandedOperator::band(int offset) {
    if (std::abs(offset) > static_cast<int>(bw_)) throw InvalidArgument("band offset outside bandwidth");
    return {bands_.data() + index(offset), dim_};
}

std::vector<int> BandedOperator::nonzero_offsets() const {
    std::vector<int> out;
    const int bw = static_cast<int>(bw_);
    for (int k = -bw; k <= bw; ++k) {
        const auto b = band(k);
        if (std::any_of(b.begin(), b.end(), [](const cplx& c) { return c != cplx{}; })) out.push_back(k);
    }
    return out;
}

void BandedOperator::apply(std::span<const cplx> x, std::span<cplx> y) const {
    if (y.size() != dim_) throw DimensionMismatch("output length does not match operator dimension");
    std::fill(y.begin(), y.end(), cplx{});
    apply_add(1.0, x, y);
}

void BandedOperator::apply_add(cplx alpha, std::span<const cplx> x, std::span<cplx> y) const {
    if (x.size() != dim_ || y.size() != dim_) {
        throw DimensionMismatch("vector length does not match operator dimension " + std::to_string(dim_));
    }
    const int bw = static_cast<int>(bw_);
    const int n = static_cast<int>(dim_);
    for (int k = -bw; k <= bw; ++k) {
        const cplx* b = bands_.data() + index(k);
        const int lo = std::max(0, -k);
        const int hi = std::min(n, n - k);
        for (int i = lo; i < hi; ++i) y[i] += alpha * b[i] * x[i + k];
    }
}

BandedOperator BandedOperator::adjoint() const {
    BandedOperator out(dim_, bw_, hermitian_);
    const int bw = static_cast<int>(bw_);
    const int n = static_cast<int>(dim_);
    for (int k = -bw; k <= bw; ++k) {
        const auto src = band(k);
        auto dst = out.band(-k);
        for (int i = std::max(0, -k); i < std::min(n, n - k); ++i) dst[i + k] = std::conj(src[i]);
    }
    return out;
}

BandedOperator BandedOperator::scaled(cplx factor) const {
    BandedOperator out(*this);
    for (auto& c : out.bands_) c *= factor;
    if (factor.imag() != 0.0) out.hermitian_ = false;
    return out;
}

BandedOperator BandedOperator::truncated(std::size_t dim) const {
    check_dim(dim);
    if (dim > dim_) throw InvalidDimension("cannot truncate to a larger dimension");
    BandedOperator out(dim, bw_, hermitian_);
    const int bw = static_cast<int>(out.bw_);
    const int n = static_cast<int>(dim);
    for (int k = -bw; k <= bw; ++k) {
        const auto src = band(k);
        auto dst = out.band(k);
        for (int i = std::max(0, -k); i < std::min(n, n - k); ++i) dst[i] = src[i];
    }
    return out;
}

BandedOperator& BandedOperator::make_hermitian() {
    const int bw = static_cast<int>(bw_);
    const int n = static_cast<int>(dim_);
    auto diag = band(0);
    for (auto& c : diag) c = {c.real(), 0.0};
    for (int k = 1; k <= bw; ++k) {
        const auto upper = band(k);
        auto lower = band(-k);
        // A(i+k, i) = conj(A(i, i+k))
        for (int i = 0; i < n - k; ++i) lower[i + k] = std::conj(upper[i]);
    }
    hermitian_ = true;
    return *this;
}

Eigen::MatrixXcd BandedOperator::dense() const {
    const auto n = static_cast<Eigen::Index>(dim_);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    const int bw = static_cast<int>(bw_);
    for (int k = -bw; k <= bw; ++k) {
        const auto b = band(k);
        for (int i = std::max(0, -k); i < std::min<int>(n, n - k); ++i) m(i, i + k) = b[i];
    }
    return m;
}

namespace {

BandedOperator combine(const BandedOperator& a, const BandedOperator& b, double sign) {
    if (a.dim() != b.dim()) throw DimensionMismatch("operator dimensions differ");
    const std::size_t bw = std::max(a.bandwidth(), b.bandwidth());
    BandedOperator out(a.dim(), bw, a.hermitian() && b.hermitian());
    const int n = static_cast<int>(a.dim());
    for (int k = -static_cast<int>(bw); k <= static_cast<int>(bw); ++k) {
        auto dst = out.band(k);
        const int lo = std::max(0, -k);
        const int hi = std::min(n, n - k);
        if (std::abs(k) <= static_cast<int>(a.bandwidth())) {
            const auto src = a.band(k);
            for (int i = lo; i < hi; ++i) dst[i] += src[i];
        }
        if (std::abs(k) <= static_cast<int>(b.bandwidth())) {
            const auto src = b.band(k);
            for (int i = lo; i < hi; ++i) dst[i] += sign * src[i];
        }
    }
    return out;
}

}  // namespace

BandedOperator operator+(const BandedOperator& a, const BandedOperator& b) { return combine(a, b, 1.0); }

BandedOperator operator-(const BandedOperator& a, const BandedOperator& b) { return combine(a, b, -1.0); }

BandedOperator operator*(const BandedOperator& a, const BandedOperator& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("operator dimensions differ");
    const int n = static_cast<int>(a.dim());
    const int bwa = static_cast<int>(a.bandwidth());
    const int bwb = static_cast<int>(b.bandwidth());
    BandedOperator out(a.dim(), a.bandwidth() + b.bandwidth(), false);
    const int bwc = static_cast<int>(out.bandwidth());
    for (int ka = -bwa; ka <= bwa; ++ka) {
        const auto ba = a.band(ka);
        for (int kb = -bwb; kb <= bwb; ++kb) {
            const int kc = ka + kb;
            if (std::abs(kc) > bwc) continue;
            const auto bb = b.band(kb);
            auto bc = out.band(kc);
            // C(i, i+ka+kb) += A(i, i+ka) B(i+ka, i+ka+kb)
            for (int i = 0; i < n; ++i) {
                const int mid = i + ka;
                const int col = mid + kb;
                if (mid < 0 || mid >= n || col < 0 || col >= n) continue;
                bc[i] += ba[i] * bb[mid];
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// HamiltonianParts

BandedOperator HamiltonianParts::at(double t) const {
    return h_static + h_drive.scaled(std::cos(drive_frequency * t));
}

// ---------------------------------------------------------------------------
// Builders

BandedOperator build_ladder(std::size_t dim) {
    check_dim(dim);
    BandedOperator a(dim, 1);
    auto upper = a.band(1);
    for (std::size_t i = 0; i + 1 < dim; ++i) upper[i] = std::sqrt(static_cast<double>(i + 1));
    return a;
}

Quadratures build_quadratures(std::size_t dim) {
    check_dim(dim);
    const BandedOperator a = build_ladder(dim);
    const BandedOperator ad = a.adjoint();
    const double s = 1.0 / std::sqrt(2.0);

    BandedOperator q = (a + ad).scaled(s);
    q.make_hermitian();
    BandedOperator p = (ad - a).scaled(cplx{0.0, s});
    p.make_hermitian();
    BandedOperator n(dim, 0, true);
    auto diag = n.band(0);
    for (std::size_t i = 0; i < dim; ++i) diag[i] = static_cast<double>(i);
    return {std::move(q), std::move(p), std::move(n)};
}

HamiltonianParts build_hamiltonian(const PhysicalParams& params, std::size_t dim) {
    params.validate();
    check_dim(dim);

    const std::size_t ext = dim + kProductPadding;
    const Quadratures big = build_quadratures(ext);
    const BandedOperator q2 = big.q * big.q;
    const BandedOperator p2 = big.p * big.p;

    BandedOperator h_static(ext, 4);
    if (params.sho_mode) {
        h_static = (p2 + q2).scaled(0.5);
    } else {
        const BandedOperator q4 = q2 * q2;
        const BandedOperator cross = big.q * big.p + big.p * big.q;
        h_static = p2.scaled(0.5) + q4.scaled(params.beta * params.beta / 4.0) - q2.scaled(0.5) +
                   cross.scaled(params.gamma / 2.0);
    }
    BandedOperator hs = h_static.truncated(dim);
    // Keep only the diagonals that can be nonzero (q^4 reaches offset 4).
    BandedOperator trimmed(dim, std::min<std::size_t>(4, dim - 1));
    const int keep = static_cast<int>(std::min(trimmed.bandwidth(), hs.bandwidth()));
    for (int k = -keep; k <= keep; ++k) {
        const auto src = hs.band(k);
        auto dst = trimmed.band(k);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    trimmed.make_hermitian();

    const Quadratures small = build_quadratures(dim);
    BandedOperator drive = small.q.scaled(params.g / params.beta);
    drive.make_hermitian();
    return {std::move(trimmed), std::move(drive), 1.0};
}

BandedOperator build_lindblad(const PhysicalParams& params, std::size_t dim) {
    params.validate();
    return build_ladder(dim).scaled(std::sqrt(2.0 * params.gamma));
}

cplx expectation(const StateVector& state, const BandedOperator& op) {
    if (state.dim() != op.dim()) {
        throw DimensionMismatch("state dimension " + std::to_string(state.dim()) + " does not match operator dimension " +
                                std::to_string(op.dim()));
    }
    if (!state.is_normalized()) throw ContractViolation("expectation requires a normalized state");
    std::vector<cplx> tmp(state.dim());
    op.apply(state.amplitudes(), tmp);
    cplx s{};
    for (std::size_t i = 0; i < tmp.size(); ++i) s += std::conj(state[i]) * tmp[i];
    return s;
}

double expectation_real(const StateVector& state, const BandedOperator& op) {
    const cplx v = expectation(state, op);
    if (std::abs(v.imag()) > 1e-9) {
        std::ostringstream msg;
        msg << "expectation of a Hermitian operator has imaginary part " << v.imag();
        throw NumericalError(msg.str());
    }
    return v.real();
}

StateVector coherent_state(cplx alpha, std::size_t dim) {
    check_dim(dim);
    const double r = std::abs(alpha);
    if (!(r * r + 6.0 * r < static_cast<double>(dim))) {
        throw LeakageError("coherent amplitude " + std::to_string(r) + " too large for dimension " + std::to_string(dim),
                           0.0, 1.0);
    }
    StateVector s(dim);
    if (r == 0.0) {
        s[0] = 1.0;
        return s;
    }
    // log|c_n| = n log r - log(n!)/2, shifted by its maximum to avoid overflow.
    const double lr = std::log(r);
    const double phase = std::arg(alpha);
    std::vector<double> logs(dim);
    double peak = -1e300;
    for (std::size_t n = 0; n < dim; ++n) {
        logs[n] = static_cast<double>(n) * lr - 0.5 * std::lgamma(static_cast<double>(n) + 1.0);
        peak = std::max(peak, logs[n]);
    }
    for (std::size_t n = 0; n < dim; ++n) {
        s[n] = std::polar(std::exp(logs[n] - peak), static_cast<double>(n) * phase);
    }
    s.normalize();
    return s;
}

}  // namespace qjump
