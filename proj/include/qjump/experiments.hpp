#pragma once

// The numerical experiments: harmonic-oscillator white-noise check, single Duffing runs with
// spectra and phase portraits, the drive-amplitude sweep, and rule-based regime labels.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qjump/classical.hpp"
#include "qjump/fock.hpp"
#include "qjump/jumps.hpp"
#include "qjump/spectra.hpp"

namespace qjump {

enum class Regime { Periodic1, ChaoticLike, Periodic2x, QuasiPeriodic, Unclassified };

std::string to_string(Regime r);
// Inverse of to_string; throws InvalidArgument for unknown names.
Regime regime_from_string(const std::string& name);

struct ClassifierThresholds {
    // <q> spectrum flatness over flatness_band above which a run is ChaoticLike.
    double chaotic_flatness = 0.06;
    FrequencyBand flatness_band{0.1, 3.0};
    // Peaks are searched in peak_band and must rise this far above the band median; the
    // top-peak rules use the strongest such peak of each spectrum.
    FrequencyBand peak_band{0.1, 4.0};
    double peak_prominence_db = 10.0;
    // Stricter level for the peaks counted by the quasi-periodic rule.
    double quasi_prominence_db = 14.0;
    std::size_t max_peaks = 12;
    // Two frequencies are harmonically related when one lies within this relative distance
    // of an integer multiple of the other.
    double harmonic_tolerance = 0.02;
    std::size_t min_quasi_peaks = 3;

    void validate() const;
};

enum class InitialState {
    Attractor,  // coherent state at the noise-free classical attractor (drive phase zero)
    Vacuum,
};

std::string to_string(InitialState s);
InitialState initial_state_from_string(const std::string& name);

struct ExperimentConfig {
    PhysicalParams params;  // g is overridden per run where an experiment sets it
    JumpSolverConfig solver;
    std::size_t dim = 0;  // 0 selects auto_dimension()
    InitialState init = InitialState::Attractor;
    std::size_t segment_len = 8192;
    double overlap = 0.5;
    Window window = Window::Hann;
    ClassifierThresholds thresholds;
    std::size_t ensemble = 1;  // >1 averages spectra over independent trajectories
    std::size_t jobs = 1;

    void validate() const;
};

// Basis size for a run: 256 in harmonic mode; for the Duffing oscillator twice the largest
// photon number u^2+v^2 / (2 beta^2) met on the noise-free attractor plus 128, rounded up to
// a multiple of 64, and at least 256.
std::size_t auto_dimension(const PhysicalParams& params);

// Initial state selected by cfg.init for the given parameters and basis size (vacuum in
// harmonic mode regardless of cfg.init, as the linear response has no classical attractor
// distinct from the steady state).
StateVector initial_state(const ExperimentConfig& cfg, const PhysicalParams& params, std::size_t dim);

// Stream seed of the run at drive amplitude g: depends on (master_seed, g) only, so a sweep
// row reproduces the single run at the same g.
std::uint64_t run_seed(std::uint64_t master_seed, double g);

// <q> over the recorded window as a uniformly sampled series.
TimeSeries q_series(const TrajectoryRecord& rec);
// Detections per sample interval over the recorded window.
TimeSeries jump_series(const TrajectoryRecord& rec);

// Number of peaks in `peaks` (taken in order) that are pairwise non-harmonic, greedily
// keeping a peak only if no kept peak is within `tolerance` of an integer multiple or
// submultiple of it.
std::vector<SpectralPeak> non_harmonic_peaks(const std::vector<SpectralPeak>& peaks, double tolerance);

// Rule-based label, first match wins:
//   1. <q> flatness above chaotic_flatness                           -> ChaoticLike
//   2. both top peaks at 1.0 (within one bin)                        -> Periodic1
//   3. >= min_quasi_peaks non-harmonic <q> peaks above quasi level   -> QuasiPeriodic
//   4. jump-spectrum top peak at 2.0 and <q> top peak at 1.0         -> Periodic2x
//   else Unclassified.
// Quasi-periodic motion keeps the strong drive line in <q> (and its doubled image in the jump
// record), so its sidebands must be tested before the frequency-doubling rule.
// Throws DimensionMismatch when the two spectra are on different grids.
Regime classify_regime(const PowerSpectrum& psd_q, const PowerSpectrum& psd_n, const ClassifierThresholds& th = {});

struct SpectralSummary {
    double flatness_q = 0.0;  // over thresholds.flatness_band
    std::vector<SpectralPeak> peaks_q;
    std::vector<SpectralPeak> peaks_n;
    std::size_t non_harmonic_q = 0;  // among <q> peaks above quasi_prominence_db
    Regime regime = Regime::Unclassified;
};

SpectralSummary summarize_spectra(const PowerSpectrum& psd_q, const PowerSpectrum& psd_n,
                                  const ClassifierThresholds& th);

struct DuffingCaseResult {
    double g = 0.0;
    std::uint64_t seed = 0;
    TrajectoryRecord record;  // first trajectory of the ensemble
    PowerSpectrum psd_q;
    PowerSpectrum psd_n;
    std::vector<PhasePoint> portrait;  // (<q>, <p>) after the transient
    SpectralSummary summary;
    std::size_t jump_count = 0;  // detections in the recorded window, summed over the ensemble
    double leakage_max = 0.0;
    double norm_deviation_max = 0.0;
};

// Full pipeline at one drive amplitude, g in (0, 3]. Seeded with run_seed(master_seed, g).
DuffingCaseResult run_duffing_case(double g, const ExperimentConfig& cfg, std::uint64_t master_seed);

struct ShoCheckResult {
    TrajectoryRecord record;
    std::optional<PowerSpectrum> psd_q;  // absent for a dark run
    std::optional<PowerSpectrum> psd_n;
    bool dark = false;  // no detections: flatness checks are skipped
    double flatness_n = 0.0;           // over [0.1, 4.0]
    double max_peak_above_median_db = 0.0;  // largest jump-spectrum local maximum in [0.1, 4.0]
    double q_peak_freq = 0.0;
    bool flatness_ok = false;  // flatness_n > 0.8
    bool peaks_ok = false;     // no jump-spectrum peak > 3 dB above the band median
    bool q_peak_ok = false;    // <q> top peak within one bin of 1.0
    double jump_rate = 0.0;        // detections per unit time in the recorded window
    double predicted_rate = 0.0;   // 2 gamma <n> from the closed-form steady state
    std::string status;            // "pass", "fail" or "dark"
};

inline constexpr FrequencyBand kWhiteNoiseBand{0.1, 4.0};
inline constexpr double kWhiteNoiseFlatness = 0.8;
inline constexpr double kWhiteNoisePeakDb = 3.0;

// Driven harmonic oscillator: spectra of <q> and of the detection increments. Forces
// sho_mode; the configured g, beta and gamma are used as given.
ShoCheckResult run_sho_check(const ExperimentConfig& cfg, std::uint64_t seed);

struct SweepRow {
    double g = 0.0;
    std::uint64_t seed = 0;
    std::size_t dim = 0;
    Regime regime = Regime::Unclassified;
    double flatness_q = 0.0;
    std::vector<SpectralPeak> peaks_q;
    std::vector<SpectralPeak> peaks_n;
    std::size_t jump_count = 0;
    double leakage_max = 0.0;
    double wall_seconds = 0.0;
    std::string error;  // empty on success
};

struct SweepResult {
    std::vector<double> g_values;
    std::vector<double> freqs;
    std::vector<std::vector<double>> psd_q;  // g x freq; NaN rows for failed runs
    std::vector<std::vector<double>> psd_n;
    std::vector<Regime> regime_labels;
    std::vector<SweepRow> rows;
    std::uint64_t master_seed = 0;
};

// Grid g_min, g_min + step, ... up to g_max (inclusive within rounding); a step larger than
// the range gives the single value g_min. Requires 0 < g_min <= g_max <= 3 and step > 0.
std::vector<double> sweep_grid(double g_min, double g_max, double step);

// One run_duffing_case per grid value, cfg.jobs rows at a time. A failing row is kept as
// Unclassified with its error message; the result does not depend on cfg.jobs.
SweepResult run_drive_sweep(double g_min, double g_max, double step, const ExperimentConfig& cfg,
                            std::uint64_t master_seed);

}  // namespace qjump
