#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qjump/classical.hpp"
#include "qjump/errors.hpp"
#include "qjump/spectra.hpp"

using namespace qjump;

namespace {

PhysicalParams duffing(double g) {
    PhysicalParams p;
    p.g = g;
    p.beta = 0.1;
    p.gamma = 0.125;
    return p;
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

TEST_CASE("undriven oscillator settles in the right-hand well") {
    const auto end = integrate_deterministic(duffing(0.0), {1.0, 0.0}, 0.0, 200.0);
    CHECK(end.u == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(end.v) < 1e-9);
    const auto from_off = integrate_deterministic(duffing(0.0), {1.4, 0.2}, 0.0, 300.0);
    CHECK(from_off.u == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("energy never increases without drive and noise") {
    ClassicalConfig cfg;
    cfg.t_transient = 0.0;
    cfg.t_record = 20.0;
    cfg.start = {1.8, 0.4};
    const auto traj = integrate_langevin(duffing(0.0), 0.0, cfg, 1);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < traj.x.size(); ++i) {
        const double u = traj.x[i], v = traj.v[i];
        const double e = v * v / 2.0 + u * u * u * u / 4.0 - u * u / 2.0;
        CHECK(e <= prev + 1e-12);
        prev = e;
    }
}

TEST_CASE("right-hand side and RK4 step") {
    const auto f = classical_rhs(duffing(0.3), 0.0, {2.0, 1.0});
    CHECK(f.u == 1.0);
    CHECK(f.v == doctest::Approx(2.0 - 8.0 - 0.25 - 0.3));
    PhysicalParams s = duffing(0.0);
    s.sho_mode = true;
    // Damped harmonic motion: forward then backward returns to the start.
    const auto fwd = rk4_step(s, 0.0, {1.0, 0.0}, 0.01);
    const auto back = rk4_step(s, 0.01, fwd, -0.01);
    CHECK(back.u == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(back.v) < 1e-9);
}

TEST_CASE("Lyapunov exponent signs") {
    CHECK(lyapunov_exponent(duffing(0.0), kTwoPi * 300).exponent < 0.0);

    const double t = kTwoPi * 2000;
    const auto chaotic = lyapunov_exponent(duffing(0.3), t);
    const auto chaotic_fine = lyapunov_exponent(duffing(0.3), t, kTwoPi / 2048.0);
    const auto chaotic_long = lyapunov_exponent(duffing(0.3), 2.0 * t);
    CHECK(chaotic.exponent > 0.0);
    CHECK(chaotic_fine.exponent > 0.0);
    CHECK(chaotic_long.exponent > 0.0);

    const auto periodic = lyapunov_exponent(duffing(0.1), t);
    const auto periodic_fine = lyapunov_exponent(duffing(0.1), t, kTwoPi / 2048.0);
    CHECK(periodic.exponent <= 0.0);
    CHECK(periodic_fine.exponent <= 0.0);

    CHECK_THROWS_AS(lyapunov_exponent(duffing(0.3), kTwoPi * 5), InvalidArgument);
}

TEST_CASE("chaotic classical spectrum is broadband relative to the periodic one") {
    ClassicalConfig cfg;
    cfg.t_record = 600.0;
    const auto spectrum = [&](double g) {
        const auto tr = integrate_langevin(duffing(g), 0.0, cfg, 1);
        return welch_psd({tr.sample_dt, tr.x, 0.0});
    };
    const double chaotic = spectral_flatness(spectrum(0.3), {0.1, 3.0});
    const double periodic = spectral_flatness(spectrum(0.1), {0.1, 3.0});
    CHECK(chaotic >= 5.0 * periodic);
}

TEST_CASE("noisy realisations decorrelate but share their spectrum") {
    ClassicalConfig cfg;
    cfg.t_record = 600.0;
    const auto a = integrate_langevin(duffing(0.3), 0.05, cfg, 1);
    const auto b = integrate_langevin(duffing(0.3), 0.05, cfg, 2);
    CHECK(a.x != b.x);
    const auto pa = welch_psd({a.sample_dt, a.x, 0.0});
    const auto pb = welch_psd({b.sample_dt, b.x, 0.0});
    // Integrated power in [0.1, 3] agrees to within the estimator scatter of ~9 segments.
    double sa = 0.0, sb = 0.0;
    for (std::size_t k = 0; k < pa.freqs.size(); ++k) {
        if (pa.freqs[k] < 0.1 || pa.freqs[k] > 3.0) continue;
        sa += pa.psd[k];
        sb += pb.psd[k];
    }
    CHECK(sa / sb == doctest::Approx(1.0).epsilon(0.2));
    CHECK(std::abs(spectral_flatness(pa, {0.1, 3.0}) - spectral_flatness(pb, {0.1, 3.0})) < 0.1);

    const auto again = integrate_langevin(duffing(0.3), 0.05, cfg, 1);
    CHECK(again.x == a.x);
}

TEST_CASE("attractor helpers") {
    const auto p = duffing(0.1);
    const auto pt = attractor_point(p);
    // Strobing one drive period later returns to the same point on a period-1 orbit.
    const auto next = integrate_deterministic(p, pt, 0.0, kTwoPi);
    CHECK(next.u == doctest::Approx(pt.u).epsilon(1e-6));
    CHECK(next.v == doctest::Approx(pt.v).epsilon(1e-6));
    const cplx alpha = coherent_amplitude(p, {0.5, -0.2});
    CHECK(alpha.real() * std::numbers::sqrt2 == doctest::Approx(5.0));
    CHECK(alpha.imag() * std::numbers::sqrt2 == doctest::Approx(-2.0));
    CHECK(default_noise_amp(p) == doctest::Approx(0.1 * std::sqrt(0.25)));
}

TEST_CASE("classical configuration checks") {
    ClassicalConfig cfg;
    cfg.sample_interval = 0.1;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    CHECK_THROWS_AS(integrate_langevin(duffing(0.3), -1.0, cfg, 1), InvalidArgument);
}
