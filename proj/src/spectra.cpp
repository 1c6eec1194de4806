#include "qjump/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "qjump/errors.hpp"

namespace qjump {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kLogFloor = 1e-300;

// FFTW planning is not thread-safe; execution of an existing plan is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Owns a real-to-complex plan and its aligned buffers.
class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n) {
        std::lock_guard lock(fftw_planner_mutex());
        in_ = fftw_alloc_real(n);
        out_ = fftw_alloc_complex(n / 2 + 1);
        if (in_ == nullptr || out_ == nullptr) {
            fftw_free(in_);
            fftw_free(out_);
            throw NumericalError("FFT buffer allocation failed");
        }
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
        if (plan_ == nullptr) {
            fftw_free(in_);
            fftw_free(out_);
            throw NumericalError("FFT planning failed");
        }
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;
    ~RealFft() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(in_);
        fftw_free(out_);
    }

    double* input() noexcept { return in_; }
    void execute() noexcept { fftw_execute(plan_); }
    double power(std::size_t k) const noexcept { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }

private:
    std::size_t n_;
    double* in_ = nullptr;
    fftw_complex* out_ = nullptr;
    fftw_plan plan_ = nullptr;
};

std::vector<double> window_weights(Window w, std::size_t n) {
    std::vector<double> out(n, 1.0);
    if (w == Window::Hann) {
        // Periodic Hann, the usual choice for spectral averaging.
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n)));
        }
    }
    return out;
}

// Indices of the bins inside the band; whole spectrum for an empty band specification.
std::pair<std::size_t, std::size_t> band_range(const PowerSpectrum& s, FrequencyBand band) {
    if (band.hi <= band.lo) return {0, s.freqs.size()};
    const auto lo = std::lower_bound(s.freqs.begin(), s.freqs.end(), band.lo);
    const auto hi = std::upper_bound(s.freqs.begin(), s.freqs.end(), band.hi);
    return {static_cast<std::size_t>(lo - s.freqs.begin()), static_cast<std::size_t>(hi - s.freqs.begin())};
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace

void TimeSeries::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time series dt must be positive");
    if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
        throw InvalidArgument("time series holds non-finite values");
    }
}

std::string to_string(Window w) { return w == Window::Hann ? "hann" : "rectangular"; }

Window window_from_string(const std::string& name) {
    if (name == "hann") return Window::Hann;
    if (name == "rectangular") return Window::Rectangular;
    throw InvalidArgument("unknown window '" + name + "' (expected hann or rectangular)");
}

double PowerSpectrum::resolution() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }

TimeSeries bin_jump_increments(const std::vector<double>& jump_times, double dt, double t_start, double t_end) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("bin width dt must be positive");
    if (!(t_end > t_start)) throw InvalidArgument("jump window is empty (t_end <= t_start)");
    const double span = (t_end - t_start) / dt;
    const auto bins = static_cast<std::size_t>(std::floor(span + 1e-9 * std::max(1.0, span)));
    if (bins == 0) throw InvalidArgument("jump window is shorter than one bin");

    TimeSeries out{dt, std::vector<double>(bins, 0.0), t_start};
    const double t_stop = t_start + static_cast<double>(bins) * dt;
    for (const double t : jump_times) {
        if (t < t_start || t >= t_stop) continue;
        auto k = static_cast<std::size_t>(std::floor((t - t_start) / dt));
        // Guard against rounding placing a time just below a bin edge into the next bin.
        if (k >= bins) k = bins - 1;
        out.values[k] += 1.0;
    }
    return out;
}

PowerSpectrum welch_psd(const TimeSeries& series, std::size_t segment_len, double overlap, Window window) {
    series.validate();
    if (segment_len < 16) throw InvalidArgument("segment_len must be at least 16");
    if (segment_len > series.values.size()) {
        throw InvalidArgument("segment_len " + std::to_string(segment_len) + " exceeds series length " +
                              std::to_string(series.values.size()));
    }
    if (!(overlap >= 0.0 && overlap < 1.0)) throw InvalidArgument("overlap must lie in [0, 1)");

    const std::size_t n = series.values.size();
    const auto step = std::max<std::size_t>(
        1, segment_len - static_cast<std::size_t>(std::llround(overlap * static_cast<double>(segment_len))));
    const std::size_t segments = (n - segment_len) / step + 1;
    const std::vector<double> w = window_weights(window, segment_len);
    double w2 = 0.0;
    for (const double x : w) w2 += x * x;

    double mean = 0.0;
    for (const double x : series.values) mean += x;
    mean /= static_cast<double>(n);

    const std::size_t bins = segment_len / 2 + 1;
    std::vector<double> acc(bins, 0.0);
    RealFft fft(segment_len);
    for (std::size_t s = 0; s < segments; ++s) {
        const double* x = series.values.data() + s * step;
        double* in = fft.input();
        for (std::size_t i = 0; i < segment_len; ++i) in[i] = (x[i] - mean) * w[i];
        fft.execute();
        for (std::size_t k = 0; k < bins; ++k) acc[k] += fft.power(k);
    }

    // Density per unit (angular) normalized frequency nu = 2 pi f: |X_k|^2 dt / (sum w^2),
    // doubled for the folded negative frequencies, divided by 2 pi for d nu = 2 pi df.
    PowerSpectrum out;
    out.freqs.resize(bins);
    out.psd.resize(bins);
    const double dnu = kTwoPi / (static_cast<double>(segment_len) * series.dt);
    const double scale = series.dt / (w2 * static_cast<double>(segments) * kTwoPi);
    for (std::size_t k = 0; k < bins; ++k) {
        const bool folded = k != 0 && !(segment_len % 2 == 0 && k == bins - 1);
        out.freqs[k] = static_cast<double>(k) * dnu;
        out.psd[k] = acc[k] * scale * (folded ? 2.0 : 1.0);
    }
    out.segment_count = segments;
    out.window = window;
    out.segment_len = segment_len;
    out.overlap = overlap;
    out.dt = series.dt;
    return out;
}

double spectral_flatness(const PowerSpectrum& spectrum, FrequencyBand band) {
    if (!(band.hi > band.lo)) throw InvalidArgument("flatness band must have hi > lo");
    const auto [lo, hi] = band_range(spectrum, band);
    if (lo >= hi) throw InvalidArgument("flatness band contains no frequency bins");
    double log_sum = 0.0, sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        log_sum += std::log(std::max(spectrum.psd[i], kLogFloor));
        sum += spectrum.psd[i];
    }
    if (!(sum > 0.0)) throw ContractViolation("flatness band holds no positive power");
    const auto count = static_cast<double>(hi - lo);
    return std::clamp(std::exp(log_sum / count) / (sum / count), 0.0, 1.0);
}

double band_median(const PowerSpectrum& spectrum, FrequencyBand band) {
    const auto [lo, hi] = band_range(spectrum, band);
    return median_of({spectrum.psd.begin() + static_cast<std::ptrdiff_t>(lo),
                      spectrum.psd.begin() + static_cast<std::ptrdiff_t>(hi)});
}

std::vector<SpectralPeak> dominant_peaks(const PowerSpectrum& spectrum, std::size_t k, double min_prominence_db,
                                         FrequencyBand band) {
    if (k == 0) throw InvalidArgument("dominant_peaks needs k >= 1");
    const auto [lo, hi] = band_range(spectrum, band);
    const double median = band_median(spectrum, band);
    const auto& p = spectrum.psd;
    std::vector<SpectralPeak> peaks;
    for (std::size_t i = std::max<std::size_t>(lo, 1); i < hi; ++i) {
        const bool left = p[i] > p[i - 1];
        const bool right = (i + 1 == p.size()) || p[i] >= p[i + 1];
        if (!left || !right || !(p[i] > 0.0)) continue;
        const double prom = median > 0.0 ? 10.0 * std::log10(p[i] / median) : INFINITY;
        if (prom < min_prominence_db) continue;
        peaks.push_back({spectrum.freqs[i], p[i], prom});
    }
    std::sort(peaks.begin(), peaks.end(), [](const SpectralPeak& a, const SpectralPeak& b) {
        return a.power != b.power ? a.power > b.power : a.freq < b.freq;
    });
    if (peaks.size() > k) peaks.resize(k);
    return peaks;
}

bool within_one_bin(const PowerSpectrum& spectrum, double freq, double target) {
    return std::abs(freq - target) <= spectrum.resolution() * (1.0 + 1e-9);
}

}  // namespace qjump
