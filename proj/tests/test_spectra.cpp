#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qjump/errors.hpp"
#include "qjump/spectra.hpp"
#include "qjump/validation.hpp"

using namespace qjump;

namespace {

constexpr double kDt = 2.0 * std::numbers::pi / 64.0;

// Sinusoids at normalized frequencies (multiples of the drive) sampled at the default rate.
TimeSeries tones(std::size_t n, const std::vector<std::pair<double, double>>& freq_amp) {
    TimeSeries s{kDt, std::vector<double>(n, 0.0), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [f, a] : freq_amp) s.values[i] += a * std::cos(f * kDt * static_cast<double>(i));
    }
    return s;
}

TimeSeries white(std::size_t n, double sigma, unsigned seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> d(0.0, sigma);
    TimeSeries s{kDt, std::vector<double>(n), 0.0};
    for (auto& v : s.values) v = d(eng);
    return s;
}

}  // namespace

TEST_CASE("binning detections into increments") {
    const auto empty = bin_jump_increments({}, 0.5, 0.0, 10.0);
    CHECK(empty.values.size() == 20);
    for (const double v : empty.values) CHECK(v == 0.0);

    const auto counts = bin_jump_increments({0.1, 0.2, 1.5}, 1.0, 0.0, 2.0);
    CHECK(counts.values == std::vector<double>{2.0, 1.0});
    CHECK(counts.t0 == 0.0);

    CHECK_THROWS_AS(bin_jump_increments({}, 1.0, 2.0, 2.0), InvalidArgument);
    CHECK_THROWS_AS(bin_jump_increments({}, 0.0, 0.0, 2.0), InvalidArgument);
    CHECK_THROWS_AS(bin_jump_increments({}, 3.0, 0.0, 2.0), InvalidArgument);
}

TEST_CASE("Poisson stream increments have unit Fano factor") {
    std::mt19937_64 eng(3);
    std::exponential_distribution<double> wait(18.0);
    std::vector<double> times;
    for (double t = wait(eng); t < 100.0; t += wait(eng)) times.push_back(t);
    const double dt = kDt;
    const auto s = bin_jump_increments(times, dt, 0.0, 100.0);
    double mean = 0.0, var = 0.0;
    for (const double v : s.values) mean += v;
    mean /= static_cast<double>(s.values.size());
    for (const double v : s.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(s.values.size() - 1);
    CHECK(mean == doctest::Approx(18.0 * dt).epsilon(0.1));
    CHECK(var / mean == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("sinusoid at the drive frequency") {
    const double a = 1.7;
    const auto s = tones(64 * 1024, {{1.0, a}});
    const auto psd = welch_psd(s);
    CHECK(psd.resolution() == doctest::Approx(1.0 / 128.0));
    const auto peaks = dominant_peaks(psd, 1, 10.0);
    REQUIRE(peaks.size() == 1);
    CHECK(within_one_bin(psd, peaks.front().freq, 1.0));
    double power = 0.0;
    for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
        if (std::abs(psd.freqs[k] - 1.0) <= 4.0 * psd.resolution()) power += psd.psd[k] * psd.resolution();
    }
    CHECK(power == doctest::Approx(a * a / 2.0).epsilon(0.03));
}

TEST_CASE("peak ordering follows power") {
    const auto psd = welch_psd(tones(64 * 512, {{1.0, 1.0}, {2.0, 2.0}}));
    const auto peaks = dominant_peaks(psd, 2, 10.0);
    REQUIRE(peaks.size() == 2);
    CHECK(within_one_bin(psd, peaks[0].freq, 2.0));
    CHECK(within_one_bin(psd, peaks[1].freq, 1.0));
    CHECK(peaks[0].prominence_db > peaks[1].prominence_db);
}

TEST_CASE("white noise is flat and Parseval holds") {
    const auto s = white(64 * 1024, 0.8, 1);
    const auto psd = welch_psd(s);
    CHECK(spectral_flatness(psd, {0.1, 30.0}) > 0.9);
    CHECK(parseval_error(s, 8192, 0.5, Window::Hann) < 0.02);
    CHECK(parseval_error(s, 4096, 0.25, Window::Rectangular) < 0.02);
    CHECK(parseval_error(tones(64 * 512, {{1.0, 1.0}, {3.3, 0.2}}), 8192, 0.5, Window::Hann) < 0.02);
}

TEST_CASE("degenerate inputs") {
    TimeSeries zeros{kDt, std::vector<double>(1024, 0.0), 0.0};
    const auto psd = welch_psd(zeros, 256);
    for (const double v : psd.psd) CHECK(v == 0.0);
    CHECK_THROWS_AS(spectral_flatness(psd, {0.1, 3.0}), ContractViolation);
    CHECK_THROWS_AS(welch_psd(zeros, 2048), InvalidArgument);
    CHECK_THROWS_AS(welch_psd(zeros, 256, 1.0), InvalidArgument);
    CHECK_THROWS_AS(welch_psd(zeros, 8), InvalidArgument);
    TimeSeries bad{kDt, {1.0, NAN}, 0.0};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    CHECK_THROWS_AS(window_from_string("hamming"), InvalidArgument);
    CHECK(window_from_string(to_string(Window::Rectangular)) == Window::Rectangular);
}

TEST_CASE("flatness limits") {
    PowerSpectrum flat;
    PowerSpectrum spike;
    for (int k = 0; k < 512; ++k) {
        flat.freqs.push_back(k / 128.0);
        flat.psd.push_back(2.5);
        spike.freqs.push_back(k / 128.0);
        spike.psd.push_back(k == 128 ? 1.0 : 0.0);
    }
    CHECK(spectral_flatness(flat, {0.1, 3.0}) == doctest::Approx(1.0));
    CHECK(spectral_flatness(spike, {0.1, 3.0}) < 0.01);
    CHECK_THROWS_AS(spectral_flatness(flat, {3.0, 0.1}), InvalidArgument);
    CHECK_THROWS_AS(spectral_flatness(flat, {3.001, 3.002}), InvalidArgument);
    CHECK(band_median(flat) == 2.5);
}

TEST_CASE("estimator is deterministic") {
    const auto s = white(16384, 1.0, 9);
    CHECK(welch_psd(s, 1024).psd == welch_psd(s, 1024).psd);
}
