#include "qjump/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "qjump/errors.hpp"
#include "qjump/lindblad.hpp"
#include "qjump/parallel.hpp"
#include "qjump/rng.hpp"

namespace qjump {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxDrive = 3.0;
constexpr std::size_t kShoDim = 256;
constexpr std::size_t kMinDim = 256;
constexpr std::size_t kDimBlock = 64;

bool same_grid(const PowerSpectrum& a, const PowerSpectrum& b) {
    if (a.freqs.size() != b.freqs.size()) return false;
    for (std::size_t i = 0; i < a.freqs.size(); ++i) {
        if (std::abs(a.freqs[i] - b.freqs[i]) > 1e-12 * std::max(1.0, std::abs(a.freqs[i]))) return false;
    }
    return true;
}

// Element-wise mean of spectra on a common grid.
PowerSpectrum average_spectra(const std::vector<PowerSpectrum>& parts) {
    PowerSpectrum out = parts.front();
    for (std::size_t j = 1; j < parts.size(); ++j) {
        for (std::size_t i = 0; i < out.psd.size(); ++i) out.psd[i] += parts[j].psd[i];
        out.segment_count += parts[j].segment_count;
    }
    for (double& p : out.psd) p /= static_cast<double>(parts.size());
    return out;
}

}  // namespace

std::string to_string(Regime r) {
    switch (r) {
        case Regime::Periodic1: return "Periodic1";
        case Regime::ChaoticLike: return "ChaoticLike";
        case Regime::Periodic2x: return "Periodic2x";
        case Regime::QuasiPeriodic: return "QuasiPeriodic";
        case Regime::Unclassified: return "Unclassified";
    }
    return "Unclassified";
}

Regime regime_from_string(const std::string& name) {
    for (Regime r : {Regime::Periodic1, Regime::ChaoticLike, Regime::Periodic2x, Regime::QuasiPeriodic,
                     Regime::Unclassified}) {
        if (to_string(r) == name) return r;
    }
    throw InvalidArgument("unknown regime label '" + name + "'");
}

std::string to_string(InitialState s) { return s == InitialState::Attractor ? "attractor" : "vacuum"; }

InitialState initial_state_from_string(const std::string& name) {
    if (name == "attractor") return InitialState::Attractor;
    if (name == "vacuum") return InitialState::Vacuum;
    throw InvalidArgument("unknown initial state '" + name + "' (expected attractor or vacuum)");
}

void ClassifierThresholds::validate() const {
    if (!(chaotic_flatness > 0.0 && chaotic_flatness < 1.0)) throw InvalidArgument("chaotic_flatness must lie in (0, 1)");
    if (!(flatness_band.hi > flatness_band.lo && flatness_band.lo >= 0.0)) throw InvalidArgument("invalid flatness band");
    if (!(peak_band.hi > peak_band.lo && peak_band.lo >= 0.0)) throw InvalidArgument("invalid peak band");
    if (!(quasi_prominence_db >= peak_prominence_db)) {
        throw InvalidArgument("quasi_prominence_db must not be below peak_prominence_db");
    }
    if (max_peaks == 0) throw InvalidArgument("max_peaks must be at least 1");
    if (!(harmonic_tolerance > 0.0 && harmonic_tolerance < 0.5)) throw InvalidArgument("harmonic_tolerance must lie in (0, 0.5)");
    if (min_quasi_peaks < 2) throw InvalidArgument("min_quasi_peaks must be at least 2");
}

void ExperimentConfig::validate() const {
    params.validate();
    solver.validate();
    thresholds.validate();
    if (dim != 0 && dim < 2) throw InvalidDimension("dim must be at least 2 (or 0 for automatic)");
    if (segment_len < 16) throw InvalidArgument("segment_len must be at least 16");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw InvalidArgument("overlap must lie in [0, 1)");
    if (ensemble == 0) throw InvalidArgument("ensemble must be at least 1");
    if (jobs == 0) throw InvalidArgument("jobs must be at least 1");
}

std::size_t auto_dimension(const PhysicalParams& params) {
    params.validate();
    if (params.sho_mode) return kShoDim;
    // Largest photon number on the noise-free attractor, sampled at every integration step.
    const double h = kTwoPi / 1024.0;
    PhasePoint y = attractor_point(params);
    double n_max = 0.0;
    double t = 0.0;
    for (int i = 0; i < 100 * 1024; ++i) {
        y = rk4_step(params, t, y, h);
        t += h;
        n_max = std::max(n_max, (y.u * y.u + y.v * y.v) / (2.0 * params.beta * params.beta));
    }
    const auto want = static_cast<std::size_t>(std::ceil(2.0 * n_max + 128.0));
    return std::max(kMinDim, (want + kDimBlock - 1) / kDimBlock * kDimBlock);
}

StateVector initial_state(const ExperimentConfig& cfg, const PhysicalParams& params, std::size_t dim) {
    if (params.sho_mode || cfg.init == InitialState::Vacuum) return StateVector::basis(dim, 0);
    return coherent_state(coherent_amplitude(params, attractor_point(params)), dim);
}

std::uint64_t run_seed(std::uint64_t master_seed, double g) {
    // Drive amplitudes are keyed at 1e-9 resolution so grid values from different sweeps that
    // denote the same g share a stream.
    return derive_seed(master_seed, static_cast<std::uint64_t>(std::llround(g * 1e9)));
}

TimeSeries q_series(const TrajectoryRecord& rec) {
    if (rec.record_start >= rec.q_mean.size()) throw InvalidArgument("trajectory has no recorded samples");
    return {rec.sample_dt,
            {rec.q_mean.begin() + static_cast<std::ptrdiff_t>(rec.record_start), rec.q_mean.end()},
            rec.t_record_start};
}

TimeSeries jump_series(const TrajectoryRecord& rec) {
    return bin_jump_increments(rec.jump_times, rec.sample_dt, rec.t_record_start, rec.t_end);
}

std::vector<SpectralPeak> non_harmonic_peaks(const std::vector<SpectralPeak>& peaks, double tolerance) {
    auto related = [tolerance](double a, double b) {
        const double hi = std::max(a, b), lo = std::min(a, b);
        if (!(lo > 0.0)) return true;
        const double m = std::max(1.0, std::round(hi / lo));
        return std::abs(hi - m * lo) <= tolerance * m * lo;
    };
    std::vector<SpectralPeak> kept;
    for (const auto& p : peaks) {
        if (std::none_of(kept.begin(), kept.end(), [&](const SpectralPeak& k) { return related(p.freq, k.freq); })) {
            kept.push_back(p);
        }
    }
    return kept;
}

SpectralSummary summarize_spectra(const PowerSpectrum& psd_q, const PowerSpectrum& psd_n,
                                  const ClassifierThresholds& th) {
    th.validate();
    if (!same_grid(psd_q, psd_n)) throw DimensionMismatch("spectra are on different frequency grids");
    SpectralSummary s;
    s.flatness_q = spectral_flatness(psd_q, th.flatness_band);
    s.peaks_q = dominant_peaks(psd_q, th.max_peaks, th.peak_prominence_db, th.peak_band);
    s.peaks_n = dominant_peaks(psd_n, th.max_peaks, th.peak_prominence_db, th.peak_band);
    const auto strong_q = dominant_peaks(psd_q, th.max_peaks, th.quasi_prominence_db, th.peak_band);
    s.non_harmonic_q = non_harmonic_peaks(strong_q, th.harmonic_tolerance).size();

    const auto top_at = [](const std::vector<SpectralPeak>& peaks, const PowerSpectrum& psd, double target) {
        return !peaks.empty() && within_one_bin(psd, peaks.front().freq, target);
    };
    if (s.flatness_q > th.chaotic_flatness) {
        s.regime = Regime::ChaoticLike;
    } else if (top_at(s.peaks_n, psd_n, 1.0) && top_at(s.peaks_q, psd_q, 1.0)) {
        s.regime = Regime::Periodic1;
    } else if (s.non_harmonic_q >= th.min_quasi_peaks) {
        s.regime = Regime::QuasiPeriodic;
    } else if (top_at(s.peaks_n, psd_n, 2.0) && top_at(s.peaks_q, psd_q, 1.0)) {
        s.regime = Regime::Periodic2x;
    }
    return s;
}

Regime classify_regime(const PowerSpectrum& psd_q, const PowerSpectrum& psd_n, const ClassifierThresholds& th) {
    return summarize_spectra(psd_q, psd_n, th).regime;
}

DuffingCaseResult run_duffing_case(double g, const ExperimentConfig& cfg, std::uint64_t master_seed) {
    if (!(g > 0.0 && g <= kMaxDrive)) throw InvalidArgument("drive amplitude g must lie in (0, 3]");
    cfg.validate();
    PhysicalParams params = cfg.params;
    params.g = g;
    params.sho_mode = false;
    const std::size_t dim = cfg.dim ? cfg.dim : auto_dimension(params);
    const StateVector init = initial_state(cfg, params, dim);

    DuffingCaseResult out;
    out.g = g;
    out.seed = run_seed(master_seed, g);
    std::vector<TrajectoryRecord> records;
    if (cfg.ensemble == 1) {
        records.push_back(evolve_trajectory(params, cfg.solver, init, out.seed));
    } else {
        records = evolve_ensemble(params, cfg.solver, init, out.seed, cfg.ensemble, cfg.jobs);
    }

    std::vector<PowerSpectrum> sq, sn;
    for (const auto& rec : records) {
        sq.push_back(welch_psd(q_series(rec), cfg.segment_len, cfg.overlap, cfg.window));
        sn.push_back(welch_psd(jump_series(rec), cfg.segment_len, cfg.overlap, cfg.window));
        out.jump_count += rec.recorded_jump_count();
        out.leakage_max = std::max(out.leakage_max, rec.leakage_max);
        out.norm_deviation_max = std::max(out.norm_deviation_max, rec.norm_deviation_max);
    }
    out.psd_q = average_spectra(sq);
    out.psd_n = average_spectra(sn);
    out.record = std::move(records.front());
    for (std::size_t i = out.record.record_start; i < out.record.q_mean.size(); ++i) {
        out.portrait.push_back({out.record.q_mean[i], out.record.p_mean[i]});
    }
    out.summary = summarize_spectra(out.psd_q, out.psd_n, cfg.thresholds);
    return out;
}

ShoCheckResult run_sho_check(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    PhysicalParams params = cfg.params;
    params.sho_mode = true;
    const std::size_t dim = cfg.dim ? cfg.dim : kShoDim;

    ShoCheckResult out;
    out.record = evolve_trajectory(params, cfg.solver, initial_state(cfg, params, dim), seed);
    const auto& rec = out.record;
    const double window = rec.t_end - rec.t_record_start;
    out.jump_rate = static_cast<double>(rec.recorded_jump_count()) / window;
    out.predicted_rate = 2.0 * params.gamma * sho_steady_amplitude(params).mean_photon_number();
    if (rec.recorded_jump_count() == 0) {
        out.dark = true;
        out.status = "dark";
        return out;
    }

    out.psd_q = welch_psd(q_series(rec), cfg.segment_len, cfg.overlap, cfg.window);
    out.psd_n = welch_psd(jump_series(rec), cfg.segment_len, cfg.overlap, cfg.window);
    out.flatness_n = spectral_flatness(*out.psd_n, kWhiteNoiseBand);
    const auto peaks_n = dominant_peaks(*out.psd_n, 1, -std::numeric_limits<double>::infinity(), kWhiteNoiseBand);
    out.max_peak_above_median_db = peaks_n.empty() ? 0.0 : peaks_n.front().prominence_db;
    const auto peaks_q = dominant_peaks(*out.psd_q, 1, -std::numeric_limits<double>::infinity(),
                                        cfg.thresholds.peak_band);
    out.q_peak_freq = peaks_q.empty() ? 0.0 : peaks_q.front().freq;

    out.flatness_ok = out.flatness_n > kWhiteNoiseFlatness;
    out.peaks_ok = out.max_peak_above_median_db <= kWhiteNoisePeakDb;
    out.q_peak_ok = !peaks_q.empty() && within_one_bin(*out.psd_q, out.q_peak_freq, 1.0);
    out.status = (out.flatness_ok && out.peaks_ok && out.q_peak_ok) ? "pass" : "fail";
    return out;
}

std::vector<double> sweep_grid(double g_min, double g_max, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) throw InvalidArgument("sweep step must be positive");
    if (!(g_min > 0.0)) throw InvalidArgument("g_min must be positive");
    if (!(g_max >= g_min)) throw InvalidArgument("g_max must not be below g_min");
    if (!(g_max <= kMaxDrive)) throw InvalidArgument("g_max must not exceed 3");
    const auto count = static_cast<std::size_t>(std::floor((g_max - g_min) / step + 1e-9)) + 1;
    std::vector<double> grid(count);
    // Rounded to 1e-12 so that, e.g., 0.05 + 5 * 0.05 prints and keys as 0.3.
    for (std::size_t i = 0; i < count; ++i) {
        grid[i] = std::round((g_min + static_cast<double>(i) * step) * 1e12) / 1e12;
    }
    return grid;
}

SweepResult run_drive_sweep(double g_min, double g_max, double step, const ExperimentConfig& cfg,
                            std::uint64_t master_seed) {
    cfg.validate();
    SweepResult out;
    out.master_seed = master_seed;
    out.g_values = sweep_grid(g_min, g_max, step);
    const std::size_t rows = out.g_values.size();
    out.rows.resize(rows);
    std::vector<std::optional<DuffingCaseResult>> results(rows);

    ExperimentConfig row_cfg = cfg;
    row_cfg.jobs = 1;  // parallelism is across rows
    const auto errors = parallel_for(rows, cfg.jobs, [&](std::size_t i) {
        const double g = out.g_values[i];
        SweepRow& row = out.rows[i];
        row.g = g;
        row.seed = run_seed(master_seed, g);
        const auto start = std::chrono::steady_clock::now();
        try {
            results[i] = run_duffing_case(g, row_cfg, master_seed);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });
    for (std::size_t i = 0; i < rows; ++i) {
        if (errors[i] && out.rows[i].error.empty()) out.rows[i].error = "unknown failure";
    }

    // Frequency grid: from any successful row, else from the configured estimator settings.
    const auto first_ok = std::find_if(results.begin(), results.end(), [](const auto& r) { return r.has_value(); });
    if (first_ok != results.end()) {
        out.freqs = (*first_ok)->psd_q.freqs;
    } else {
        const std::size_t bins = cfg.segment_len / 2 + 1;
        const double dnu = kTwoPi / (static_cast<double>(cfg.segment_len) * cfg.solver.sample_interval);
        out.freqs.resize(bins);
        for (std::size_t k = 0; k < bins; ++k) out.freqs[k] = static_cast<double>(k) * dnu;
    }
    const std::vector<double> nan_row(out.freqs.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < rows; ++i) {
        SweepRow& row = out.rows[i];
        if (results[i]) {
            const auto& r = *results[i];
            row.dim = r.record.dim;
            row.regime = r.summary.regime;
            row.flatness_q = r.summary.flatness_q;
            row.peaks_q = r.summary.peaks_q;
            row.peaks_n = r.summary.peaks_n;
            row.jump_count = r.jump_count;
            row.leakage_max = r.leakage_max;
            out.psd_q.push_back(r.psd_q.psd);
            out.psd_n.push_back(r.psd_n.psd);
        } else {
            row.regime = Regime::Unclassified;
            out.psd_q.push_back(nan_row);
            out.psd_n.push_back(nan_row);
        }
        out.regime_labels.push_back(row.regime);
    }
    return out;
}

}  // namespace qjump
