#include <doctest.h>

#include <cmath>
#include <map>

#include "qjump/errors.hpp"
#include "qjump/experiments.hpp"

using namespace qjump;

namespace {

// Spectrum on the default grid (resolution 1/128 up to 4.5) with a flat unit background and
// single-bin lines of the given power.
PowerSpectrum lines(const std::map<double, double>& peaks) {
    PowerSpectrum s;
    s.segment_len = 8192;
    s.dt = 2.0 * std::numbers::pi / 64.0;
    for (int k = 0; k <= 576; ++k) {
        s.freqs.push_back(k / 128.0);
        s.psd.push_back(1.0);
    }
    for (const auto& [f, p] : peaks) s.psd[static_cast<std::size_t>(std::lround(f * 128.0))] = p;
    return s;
}

ExperimentConfig short_config(double periods, std::size_t segment) {
    ExperimentConfig cfg;
    cfg.solver.t_transient = 20.0;
    cfg.solver.t_record = periods;
    cfg.segment_len = segment;
    return cfg;
}

}  // namespace

TEST_CASE("classifier rules on synthetic spectra") {
    const ClassifierThresholds th;
    CHECK(classify_regime(lines({{1.0, 1e4}}), lines({{1.0, 1e3}}), th) == Regime::Periodic1);
    CHECK(classify_regime(lines({{1.0, 1e4}, {3.0, 1e2}}), lines({{2.0, 1e3}, {1.0, 1e2}}), th) ==
          Regime::Periodic2x);
    CHECK(classify_regime(lines({{1.0, 1e4}, {1.37, 1e3}, {1.81, 1e3}}), lines({{2.0, 1e3}}), th) ==
          Regime::QuasiPeriodic);
    // Harmonics of the drive line do not count as independent frequencies.
    CHECK(classify_regime(lines({{1.0, 1e4}, {2.0, 1e3}, {3.0, 1e3}}), lines({{2.0, 1e3}}), th) ==
          Regime::Periodic2x);
    CHECK(classify_regime(lines({}), lines({}), th) == Regime::ChaoticLike);
    CHECK(classify_regime(lines({{1.5, 1e4}}), lines({{0.7, 1e3}}), th) == Regime::Unclassified);
    // Broadband power wins over any line structure.
    auto noisy = lines({{1.0, 1e4}});
    for (std::size_t k = 0; k < noisy.psd.size(); k += 2) noisy.psd[k] = 30.0;
    CHECK(classify_regime(noisy, lines({{1.0, 1e3}}), th) == Regime::ChaoticLike);

    const auto a = lines({{1.0, 1e4}, {1.37, 1e3}});
    CHECK(classify_regime(a, a, th) == classify_regime(a, a, th));

    auto coarse = lines({{1.0, 1e4}});
    coarse.freqs.pop_back();
    coarse.psd.pop_back();
    CHECK_THROWS_AS(classify_regime(coarse, lines({{1.0, 1e4}}), th), DimensionMismatch);
}

TEST_CASE("threshold validation") {
    ClassifierThresholds th;
    th.quasi_prominence_db = th.peak_prominence_db - 1.0;
    CHECK_THROWS_AS(th.validate(), InvalidArgument);
    th = {};
    th.min_quasi_peaks = 1;
    CHECK_THROWS_AS(th.validate(), InvalidArgument);
    th = {};
    th.chaotic_flatness = 1.5;
    CHECK_THROWS_AS(th.validate(), InvalidArgument);
}

TEST_CASE("non-harmonic peak filter") {
    const std::vector<SpectralPeak> peaks{{1.0, 0, 0}, {2.01, 0, 0}, {1.5, 0, 0}, {0.5, 0, 0}, {2.2, 0, 0}};
    const auto kept = non_harmonic_peaks(peaks, 0.02);
    REQUIRE(kept.size() == 3);
    CHECK(kept[0].freq == 1.0);
    CHECK(kept[1].freq == 1.5);
    CHECK(kept[2].freq == 2.2);
}

TEST_CASE("regime and initial-state names round trip") {
    for (const auto r : {Regime::Periodic1, Regime::ChaoticLike, Regime::Periodic2x, Regime::QuasiPeriodic,
                         Regime::Unclassified}) {
        CHECK(regime_from_string(to_string(r)) == r);
    }
    CHECK_THROWS_AS(regime_from_string("Chaos"), InvalidArgument);
    CHECK(initial_state_from_string("vacuum") == InitialState::Vacuum);
    CHECK_THROWS_AS(initial_state_from_string("thermal"), InvalidArgument);
}

TEST_CASE("automatic basis size") {
    PhysicalParams p;
    p.g = 0.1;
    CHECK(auto_dimension(p) == 256);
    p.g = 0.3;
    CHECK(auto_dimension(p) == 384);
    p.g = 1.25;
    CHECK(auto_dimension(p) == 704);
    p.g = 2.5;
    CHECK(auto_dimension(p) == 1024);
    p.sho_mode = true;
    CHECK(auto_dimension(p) == 256);
}

TEST_CASE("run seeds depend on master seed and drive only") {
    CHECK(run_seed(1, 0.3) == run_seed(1, 0.1 + 0.2));
    CHECK(run_seed(1, 0.3) != run_seed(2, 0.3));
    CHECK(run_seed(1, 0.3) != run_seed(1, 0.35));
}

TEST_CASE("initial states") {
    ExperimentConfig cfg;
    PhysicalParams p;
    p.g = 0.1;
    const auto quad = build_quadratures(256);
    const auto s = initial_state(cfg, p, 256);
    const auto pt = attractor_point(p);
    CHECK(expectation_real(s, quad.q) == doctest::Approx(pt.u / p.beta).epsilon(1e-9));
    CHECK(expectation_real(s, quad.p) == doctest::Approx(pt.v / p.beta).epsilon(1e-9));
    cfg.init = InitialState::Vacuum;
    CHECK(initial_state(cfg, p, 256)[0] == cplx(1.0));
    p.sho_mode = true;
    cfg.init = InitialState::Attractor;
    CHECK(initial_state(cfg, p, 256)[0] == cplx(1.0));
}

TEST_CASE("sweep grid") {
    const auto full = sweep_grid(0.05, 3.0, 0.05);
    REQUIRE(full.size() == 60);
    CHECK(full.front() == doctest::Approx(0.05));
    CHECK(full.back() == doctest::Approx(3.0));
    CHECK(sweep_grid(0.4, 0.4, 1.0) == std::vector<double>{0.4});
    CHECK(sweep_grid(0.4, 0.5, 1.0) == std::vector<double>{0.4});
    CHECK_THROWS_AS(sweep_grid(0.1, 1.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(sweep_grid(0.0, 1.0, 0.1), InvalidArgument);
    CHECK_THROWS_AS(sweep_grid(0.5, 0.4, 0.1), InvalidArgument);
    CHECK_THROWS_AS(sweep_grid(0.5, 3.5, 0.1), InvalidArgument);
}

TEST_CASE("weak drive is periodic at the drive frequency") {
    const auto res = run_duffing_case(0.1, short_config(64.0, 2048), 1);
    CHECK(res.summary.regime == Regime::Periodic1);
    CHECK(res.record.dim == 256);
    CHECK(res.leakage_max < 1e-6);
    CHECK(res.norm_deviation_max < 1e-9);
    CHECK(res.portrait.size() == 64 * 64 + 1);
    CHECK(res.jump_count == res.record.recorded_jump_count());
    CHECK_THROWS_AS(run_duffing_case(3.5, short_config(64.0, 2048), 1), InvalidArgument);
}

TEST_CASE("sweep rows reproduce single runs and do not depend on the worker count") {
    auto cfg = short_config(16.0, 512);
    cfg.dim = 256;
    const auto single = run_duffing_case(0.15, cfg, 5);
    const auto one_row = run_drive_sweep(0.15, 0.15, 1.0, cfg, 5);
    REQUIRE(one_row.rows.size() == 1);
    CHECK(one_row.psd_q.front() == single.psd_q.psd);
    CHECK(one_row.rows.front().seed == single.seed);

    cfg.jobs = 1;
    const auto serial = run_drive_sweep(0.1, 0.2, 0.05, cfg, 5);
    cfg.jobs = 3;
    const auto threaded = run_drive_sweep(0.1, 0.2, 0.05, cfg, 5);
    REQUIRE(serial.g_values.size() == 3);
    CHECK(serial.psd_q == threaded.psd_q);
    CHECK(serial.psd_n == threaded.psd_n);
    CHECK(serial.regime_labels == threaded.regime_labels);
    // The middle row is the same run as a single case at that g.
    CHECK(serial.psd_q[1] == run_duffing_case(serial.g_values[1], cfg, 5).psd_q.psd);
}

TEST_CASE("harmonic oscillator without drive is dark") {
    ExperimentConfig cfg = short_config(10.0, 256);
    cfg.params.g = 0.0;
    const auto res = run_sho_check(cfg, 3);
    CHECK(res.dark);
    CHECK(res.status == "dark");
    CHECK_FALSE(res.psd_n.has_value());
}

TEST_CASE("harmonic oscillator detection rate over 200 periods") {
    ExperimentConfig cfg;
    cfg.solver.t_transient = 50.0;
    cfg.solver.t_record = 200.0;
    const auto res = run_sho_check(cfg, 8);
    CHECK(res.predicted_rate == doctest::Approx(18.07).epsilon(1e-3));
    const double per_period = static_cast<double>(res.record.recorded_jump_count()) / 200.0;
    CHECK(per_period == doctest::Approx(2.0 * std::numbers::pi * res.predicted_rate).epsilon(0.1));
    CHECK(res.q_peak_ok);
}
