#pragma once

// Sampled series, photon-count increments, Welch power spectra on a frequency axis
// normalized to the drive (drive frequency = 1.0), and scalar spectral diagnostics.

#include <cstddef>
#include <string>
#include <vector>

namespace qjump {

struct TimeSeries {
    double dt = 0.0;  // sample spacing (time units)
    std::vector<double> values;
    double t0 = 0.0;

    // Throws InvalidArgument unless dt > 0 and all values are finite.
    void validate() const;
};

enum class Window { Hann, Rectangular };

std::string to_string(Window w);
// Accepts "hann" and "rectangular"; throws InvalidArgument otherwise.
Window window_from_string(const std::string& name);

struct PowerSpectrum {
    std::vector<double> freqs;  // normalized: drive frequency 1/(2 pi) cycles per unit time -> 1.0
    std::vector<double> psd;    // power per unit normalized frequency, one-sided
    std::size_t segment_count = 0;
    Window window = Window::Hann;
    std::size_t segment_len = 0;
    double overlap = 0.0;
    double dt = 0.0;  // sample spacing of the source series

    // Spacing of the normalized frequency grid.
    double resolution() const;
};

struct FrequencyBand {
    double lo = 0.0;
    double hi = 0.0;
};

struct SpectralPeak {
    double freq = 0.0;
    double power = 0.0;
    double prominence_db = 0.0;  // 10 log10(power / median)
};

// values[k] = number of jumps in [t_start + k dt, t_start + (k + 1) dt) for the
// floor((t_end - t_start) / dt) whole bins of the window (a window that is an integer
// number of bins long, up to rounding, is covered exactly). Throws InvalidArgument for
// dt <= 0 or a window shorter than one bin.
TimeSeries bin_jump_increments(const std::vector<double>& jump_times, double dt, double t_start, double t_end);

// Averaged modified periodogram: the series mean is removed, segments of segment_len samples
// overlapping by the given fraction are windowed and transformed, and the one-sided density
// is scaled so that sum(psd) * resolution() equals the variance of the series.
// Throws InvalidArgument if segment_len < 16, segment_len exceeds the series, or the overlap
// is outside [0, 1).
PowerSpectrum welch_psd(const TimeSeries& series, std::size_t segment_len = 8192, double overlap = 0.5,
                        Window window = Window::Hann);

// Geometric over arithmetic mean of the psd in the band (inclusive); zero bins are floored at
// 1e-300 before the logarithm. Throws InvalidArgument for an empty band and
// ContractViolation when the band holds no positive power.
double spectral_flatness(const PowerSpectrum& spectrum, FrequencyBand band);

// Median psd over the band (whole spectrum when band.hi <= band.lo).
double band_median(const PowerSpectrum& spectrum, FrequencyBand band = {});

// Up to k local maxima sorted by decreasing power whose power exceeds the band median by at
// least min_prominence_db decibels. The zero-frequency bin is never a peak. A band with
// hi <= lo means the whole spectrum.
std::vector<SpectralPeak> dominant_peaks(const PowerSpectrum& spectrum, std::size_t k, double min_prominence_db,
                                         FrequencyBand band = {});

// True when freq lies within one frequency bin of target.
bool within_one_bin(const PowerSpectrum& spectrum, double freq, double target);

}  // namespace qjump
