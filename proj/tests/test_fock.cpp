#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qjump/errors.hpp"
#include "qjump/fock.hpp"

using namespace qjump;

namespace {

StateVector apply(const BandedOperator& op, const StateVector& s) {
    StateVector out(s.dim());
    op.apply(s.amplitudes(), out.amplitudes());
    return out;
}

}  // namespace

TEST_CASE("ladder operator lowers Fock states") {
    const auto a = build_ladder(4);
    const auto from_vacuum = apply(a, StateVector::basis(4, 0));
    CHECK(from_vacuum.norm2() == 0.0);

    const auto from_three = apply(a, StateVector::basis(4, 3));
    CHECK(from_three[2].real() == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
    CHECK(from_three.norm2() == doctest::Approx(3.0));

    const auto big = build_ladder(64);
    CHECK(big(2, 3).real() == doctest::Approx(1.7320508).epsilon(1e-7));
    // Dense matrix from the recursion a|n> = sqrt(n)|n-1>.
    const auto dense = big.dense();
    for (int r = 0; r < 64; ++r) {
        for (int c = 0; c < 64; ++c) {
            const double expect = c == r + 1 ? std::sqrt(static_cast<double>(c)) : 0.0;
            CHECK(std::abs(dense(r, c) - expect) < 1e-15);
        }
    }
    CHECK_THROWS_AS(build_ladder(1), InvalidDimension);
}

TEST_CASE("quadratures obey the canonical commutator away from the edge") {
    const auto quad = build_quadratures(32);
    const auto qp = (quad.q * quad.p).dense();
    const auto pq = (quad.p * quad.q).dense();
    double worst = 0.0;
    for (int r = 0; r < 30; ++r) {
        for (int c = 0; c < 30; ++c) {
            const cplx expect = r == c ? cplx(0.0, 1.0) : cplx(0.0);
            worst = std::max(worst, std::abs(qp(r, c) - pq(r, c) - expect));
        }
    }
    CHECK(worst < 1e-12);

    const auto vac = StateVector::basis(32, 0);
    CHECK(expectation_real(vac, quad.q * quad.q) == doctest::Approx(0.5));
    CHECK(expectation_real(vac, quad.n) == 0.0);
    CHECK(std::abs(expectation_real(coherent_state(1.5, 32), quad.n) - 2.25) < 1e-8);
}

TEST_CASE("coherent state expectations") {
    const auto quad = build_quadratures(64);
    const auto s = coherent_state(2.0, 64);
    CHECK(expectation_real(s, quad.q) == doctest::Approx(2.0 * std::numbers::sqrt2).epsilon(1e-10));
    CHECK(std::abs(expectation_real(s, quad.p)) < 1e-15);

    const auto cplx_state = coherent_state(cplx(1.0, -0.5), 64);
    CHECK(expectation_real(cplx_state, quad.p) == doctest::Approx(-0.5 * std::numbers::sqrt2).epsilon(1e-10));

    const auto vac = coherent_state(0.0, 8);
    CHECK(vac[0] == cplx(1.0));
    for (std::size_t k = 1; k < 8; ++k) CHECK(vac[k] == cplx(0.0));

    CHECK(std::abs(expectation_real(coherent_state(1.0, 32), quad.n.truncated(32)) - 1.0) < 1e-10);
    CHECK(std::abs(coherent_state(cplx(3.0, 4.0), 128).norm2() - 1.0) < 1e-12);
    CHECK_THROWS_AS(coherent_state(5.0, 40), LeakageError);
}

TEST_CASE("Lindblad operator emission rate") {
    PhysicalParams p;
    p.gamma = 0.125;
    const auto l = build_lindblad(p, 160);
    const auto ldl = l.adjoint() * l;
    CHECK(expectation_real(StateVector::basis(160, 0), ldl) == 0.0);
    CHECK(expectation_real(coherent_state(std::sqrt(72.0), 160), ldl) == doctest::Approx(18.0).epsilon(1e-9));
}

TEST_CASE("Hamiltonian matrix elements match the untruncated operators") {
    PhysicalParams p;
    p.beta = 0.3;
    p.gamma = 0.2;
    p.g = 0.7;
    const std::size_t dim = 24;
    const auto parts = build_hamiltonian(p, dim);
    // Reference built in a larger basis and cut down, so q^4 near the edge is exact.
    const auto big = build_quadratures(dim + 8);
    const auto q = big.q, pp = big.p;
    const auto h_ref = (pp * pp).scaled(0.5) + (q * q * q * q).scaled(p.beta * p.beta / 4.0) - (q * q).scaled(0.5) +
                       (q * pp + pp * q).scaled(p.gamma / 2.0);
    const auto expect = h_ref.truncated(dim).dense();
    const auto got = parts.h_static.dense();
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((parts.h_drive.dense() - q.truncated(dim).scaled(p.g / p.beta).dense()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((got - got.adjoint()).cwiseAbs().maxCoeff() == 0.0);

    PhysicalParams sho = p;
    sho.sho_mode = true;
    const auto hs = build_hamiltonian(sho, dim).h_static.dense();
    for (int k = 0; k < static_cast<int>(dim); ++k) CHECK(hs(k, k).real() == doctest::Approx(k + 0.5));
    CHECK(parts.at(std::numbers::pi).dense().isApprox((parts.h_static - parts.h_drive).dense()));
}

TEST_CASE("banded operator algebra") {
    BandedOperator a(5, 1);
    a.set(0, 1, {1.0, 2.0});
    a.set(3, 2, 4.0);
    CHECK(a(0, 1) == cplx(1.0, 2.0));
    CHECK(a(1, 0) == cplx(0.0));
    CHECK_THROWS_AS(a.set(0, 3, 1.0), InvalidArgument);
    CHECK(a.adjoint()(1, 0) == cplx(1.0, -2.0));
    CHECK(a.nonzero_offsets() == std::vector<int>{-1, 1});

    const auto prod = a * a.adjoint();
    CHECK(prod.bandwidth() == 2);
    CHECK(prod.dense().isApprox(a.dense() * a.dense().adjoint()));

    StateVector x(std::vector<cplx>{1.0, 2.0, 3.0, 4.0, 5.0});
    StateVector y(5);
    a.apply(x.amplitudes(), y.amplitudes());
    CHECK(y[0] == cplx(2.0, 4.0));
    CHECK(y[3] == cplx(12.0));
    CHECK_THROWS_AS(a.apply(x.amplitudes(), StateVector(4).amplitudes()), DimensionMismatch);
    CHECK_THROWS_AS(a + BandedOperator(4, 1), DimensionMismatch);
}

TEST_CASE("state vector invariants") {
    StateVector s(std::vector<cplx>{3.0, cplx(0.0, 4.0)});
    CHECK(s.norm2() == 25.0);
    CHECK_FALSE(s.is_normalized());
    s.normalize();
    CHECK(s.is_normalized());
    CHECK_THROWS_AS(StateVector(3).normalize(), ContractViolation);
    CHECK_THROWS_AS(StateVector::basis(3, 3), InvalidArgument);

    StateVector t(40);
    t[39] = 1.0;
    CHECK(t.tail_population() == 1.0);  // top 5 % of 40 levels = 2 levels
    t[39] = 0.0;
    t[37] = 1.0;
    CHECK(t.tail_population() == 0.0);
}

TEST_CASE("physical parameter validation names the field") {
    PhysicalParams p;
    p.beta = 0.0;
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("beta"), InvalidArgument);
    p = {};
    p.gamma = -1.0;
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("gamma"), InvalidArgument);
    p = {};
    p.g = -0.1;
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("g must"), InvalidArgument);
}
