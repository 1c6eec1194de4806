// Command-line front end: parses flags (optionally from a key = value config file), runs one
// experiment, and writes CSV data, JSON sidecars, SVG figures and a run manifest.
//
// Exit status: 0 on success, 1 when a run fails (the manifest still records the error) or a
// validation check fails, 2 for usage errors.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qjump/classical.hpp"
#include "qjump/errors.hpp"
#include "qjump/experiments.hpp"
#include "qjump/io.hpp"
#include "qjump/jumps.hpp"
#include "qjump/lindblad.hpp"
#include "qjump/spectra.hpp"
#include "qjump/svg.hpp"
#include "qjump/validation.hpp"

namespace fs = std::filesystem;
using namespace qjump;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// A usage problem found after parsing (inconsistent values); reported with exit status 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Every option of every command; each subcommand binds the subset it uses.
struct Options {
    fs::path config;
    fs::path out = "out";
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
    bool plots = true;

    PhysicalParams params;
    bool sho = false;
    std::size_t dim = 0;
    std::string init = "attractor";
    double periods = 500.0;
    double transient = 50.0;
    int samples_per_period = 64;
    JumpSolverConfig solver;

    std::size_t segment_len = 8192;
    double overlap = 0.5;
    std::string window = "hann";
    ClassifierThresholds thresholds;
    std::size_t ensemble = 1;

    double g_min = 0.05, g_max = 3.0, g_step = 0.05;

    std::optional<double> noise;
    double classical_step_divisor = 1024.0;
    double lyapunov_periods = 2000.0;
    double u0 = 0.5, v0 = 0.0;

    fs::path input;
    std::string column = "q_mean";
    double t_start = 0.0;
    std::optional<double> t_end;
    std::optional<double> dt;

    std::vector<std::string> only;
};

void add_output(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config, "read options from a key = value file (flags override it)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "output directory")->capture_default_str();
    cmd->add_option("--seed", o.seed, "master seed (random and recorded when absent)");
    cmd->add_flag("!--no-plots", o.plots, "skip SVG figures");
}

void add_physics(CLI::App* cmd, Options& o) {
    cmd->add_option("--beta", o.params.beta, "correspondence scaling beta")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--gamma", o.params.gamma, "damping rate Gamma")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

void add_solver(CLI::App* cmd, Options& o) {
    cmd->add_option("--dim", o.dim, "Fock basis size (0: automatic)")->capture_default_str();
    cmd->add_option("--init", o.init, "initial state")
        ->check(CLI::IsMember({"attractor", "vacuum"}))
        ->capture_default_str();
    cmd->add_option("--periods", o.periods, "recorded drive periods")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--transient", o.transient, "discarded drive periods")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--samples-per-period", o.samples_per_period, "expectation samples per drive period")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--rel-tol", o.solver.rel_tol, "integrator relative tolerance")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--abs-tol", o.solver.abs_tol, "integrator absolute tolerance")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--jump-tol", o.solver.norm_bisect_tol, "jump-time tolerance on the squared norm")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--max-step", o.solver.max_step, "largest integration step")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--leakage-bound", o.solver.leakage_bound, "largest allowed population in the top 5% of levels")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_flag("!--full-basis", o.solver.adaptive_window, "propagate every Fock level at every step");
    cmd->add_option("--fault-rate-scale", o.solver.fault_rate_scale, "debug: scale the detection rate")
        ->check(CLI::PositiveNumber)
        ->group("");
}

void add_spectral(CLI::App* cmd, Options& o) {
    cmd->add_option("--segment-len", o.segment_len, "Welch segment length (samples)")->capture_default_str();
    cmd->add_option("--overlap", o.overlap, "Welch segment overlap fraction")
        ->check(CLI::Range(0.0, 0.99))
        ->capture_default_str();
    cmd->add_option("--window", o.window, "taper")->check(CLI::IsMember({"hann", "rectangular"}))->capture_default_str();
}

void add_classifier(CLI::App* cmd, Options& o) {
    auto& t = o.thresholds;
    cmd->add_option("--chaotic-flatness", t.chaotic_flatness, "flatness above which a run is ChaoticLike")
        ->capture_default_str();
    cmd->add_option("--peak-db", t.peak_prominence_db, "peak level above the band median (dB)")
        ->capture_default_str();
    cmd->add_option("--quasi-db", t.quasi_prominence_db, "peak level counted by the quasi-periodic rule (dB)")
        ->capture_default_str();
    cmd->add_option("--harmonic-tol", t.harmonic_tolerance, "relative tolerance of harmonic relations")
        ->capture_default_str();
    cmd->add_option("--min-quasi-peaks", t.min_quasi_peaks, "non-harmonic peaks needed for QuasiPeriodic")
        ->capture_default_str();
    cmd->add_option("--ensemble", o.ensemble, "trajectories whose spectra are averaged")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

void add_jobs(CLI::App* cmd, Options& o) {
    cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
}

JumpSolverConfig solver_config(const Options& o) {
    JumpSolverConfig c = o.solver;
    c.t_record = o.periods;
    c.t_transient = o.transient;
    c.sample_interval = kTwoPi / o.samples_per_period;
    return c;
}

ExperimentConfig experiment_config(const Options& o) {
    ExperimentConfig c;
    c.params = o.params;
    c.solver = solver_config(o);
    c.dim = o.dim;
    c.init = initial_state_from_string(o.init);
    c.segment_len = o.segment_len;
    c.overlap = o.overlap;
    c.window = window_from_string(o.window);
    c.thresholds = o.thresholds;
    c.ensemble = o.ensemble;
    c.jobs = o.jobs;
    return c;
}

// Collects written files for the manifest.
class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

    fs::path path(const std::string& name) const { return dir_ / name; }
    void add(const fs::path& p) { files_.push_back(p.string()); }
    const std::vector<std::string>& files() const { return files_; }

    void csv(const std::string& name, const std::function<void(const fs::path&)>& writer) {
        writer(path(name));
        add(path(name));
    }
    void json_file(const std::string& name, const json& doc) {
        write_json(path(name), doc);
        add(path(name));
    }
    void svg(bool enabled, const std::string& name, const std::string& text) {
        if (!enabled) return;
        write_text(path(name), text);
        add(path(name));
    }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

PlotSeries spectrum_series(const std::string& label, const PowerSpectrum& s) { return {label, s.freqs, s.psd}; }

std::string spectrum_svg(const std::string& title, const std::vector<PlotSeries>& series) {
    return svg_line_plot({title, "frequency / drive frequency", "power spectral density", true, 0.0, 4.0}, series);
}

void write_record(Outputs& out, const TrajectoryRecord& rec, bool plots) {
    out.csv("trajectory.csv", [&](const fs::path& p) { write_trajectory_csv(p, rec); });
    out.csv("jumps.csv", [&](const fs::path& p) { write_jumps_csv(p, rec); });
    out.json_file("trajectory.json", trajectory_sidecar(rec));
    if (plots) {
        std::vector<double> t(rec.sample_times.size());
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = kTwoPi * rec.sample_times[i];
        out.svg(true, "q_mean.svg",
                svg_line_plot({"<q>(t)", "t", "<q>", false, 0.0, 0.0}, {{"", t, rec.q_mean}}));
        const std::vector<double> q(rec.q_mean.begin() + static_cast<std::ptrdiff_t>(rec.record_start),
                                    rec.q_mean.end());
        const std::vector<double> p(rec.p_mean.begin() + static_cast<std::ptrdiff_t>(rec.record_start),
                                    rec.p_mean.end());
        out.svg(true, "portrait.svg", svg_scatter({"phase portrait after transient", "<q>", "<p>"}, q, p));
    }
}

void write_spectrum(Outputs& out, const std::string& stem, const PowerSpectrum& s) {
    out.csv(stem + ".csv", [&](const fs::path& p) { write_spectrum_csv(p, s); });
    out.json_file(stem + ".json", spectrum_sidecar(s));
}

using Command = std::function<json(const Options&, std::uint64_t seed, Outputs&, RunManifest&)>;

json cmd_trajectory(const Options& o, std::uint64_t seed, Outputs& out, RunManifest& m) {
    ExperimentConfig cfg = experiment_config(o);
    cfg.params.sho_mode = o.sho;
    cfg.validate();
    m.config = to_json(cfg);
    const std::size_t dim = cfg.dim ? cfg.dim : auto_dimension(cfg.params);
    m.config["dim_used"] = dim;
    const TrajectoryRecord rec = evolve_trajectory(cfg.params, cfg.solver, initial_state(cfg, cfg.params, dim), seed);
    write_record(out, rec, o.plots);
    return {{"jumps", rec.jump_times.size()},
            {"recorded_jumps", rec.recorded_jump_count()},
            {"leakage_max", rec.leakage_max},
            {"norm_deviation_max", rec.norm_deviation_max}};
}

json cmd_sho_check(const Options& o, std::uint64_t seed, Outputs& out, RunManifest& m) {
    ExperimentConfig cfg = experiment_config(o);
    cfg.params.sho_mode = true;
    cfg.validate();
    m.config = to_json(cfg);
    const ShoCheckResult r = run_sho_check(cfg, seed);
    write_record(out, r.record, o.plots);
    json res = {{"status", r.status},
                {"dark", r.dark},
                {"jump_rate", r.jump_rate},
                {"predicted_rate", r.predicted_rate},
                {"recorded_jumps", r.record.recorded_jump_count()}};
    if (r.dark) return res;
    write_spectrum(out, "spectrum_q", *r.psd_q);
    write_spectrum(out, "spectrum_n", *r.psd_n);
    out.svg(o.plots, "spectra.svg",
            spectrum_svg("harmonic oscillator spectra",
                         {spectrum_series("<q>", *r.psd_q), spectrum_series("detections", *r.psd_n)}));
    res["flatness_n"] = r.flatness_n;
    res["max_peak_above_median_db"] = r.max_peak_above_median_db;
    res["q_peak_freq"] = r.q_peak_freq;
    res["flatness_ok"] = r.flatness_ok;
    res["peaks_ok"] = r.peaks_ok;
    res["q_peak_ok"] = r.q_peak_ok;
    std::cout << "sho-check: " << r.status << " (flatness " << r.flatness_n << ", max peak "
              << r.max_peak_above_median_db << " dB, <q> peak at " << r.q_peak_freq << ")\n";
    return res;
}

json summary_json(const SpectralSummary& s) {
    return {{"regime", to_string(s.regime)},
            {"flatness_q", s.flatness_q},
            {"non_harmonic_q", s.non_harmonic_q},
            {"peaks_q", to_json(s.peaks_q)},
            {"peaks_n", to_json(s.peaks_n)}};
}

json cmd_duffing_case(const Options& o, std::uint64_t seed, Outputs& out, RunManifest& m) {
    const ExperimentConfig cfg = experiment_config(o);
    cfg.validate();
    m.config = to_json(cfg);
    const DuffingCaseResult r = run_duffing_case(o.params.g, cfg, seed);
    write_record(out, r.record, o.plots);
    write_spectrum(out, "spectrum_q", r.psd_q);
    write_spectrum(out, "spectrum_n", r.psd_n);
    out.svg(o.plots, "spectra.svg",
            spectrum_svg("spectra at g = " + std::to_string(r.g),
                         {spectrum_series("<q>", r.psd_q), spectrum_series("detections", r.psd_n)}));
    std::cout << "duffing-case g=" << r.g << ": " << to_string(r.summary.regime) << " (flatness "
              << r.summary.flatness_q << ", " << r.summary.non_harmonic_q << " non-harmonic peaks)\n";
    json res = summary_json(r.summary);
    res["g"] = r.g;
    res["run_seed"] = r.seed;
    res["dim"] = r.record.dim;
    res["jump_count"] = r.jump_count;
    res["leakage_max"] = r.leakage_max;
    res["norm_deviation_max"] = r.norm_deviation_max;
    return res;
}

json cmd_sweep(const Options& o, std::uint64_t seed, Outputs& out, RunManifest& m) {
    const ExperimentConfig cfg = experiment_config(o);
    cfg.validate();
    sweep_grid(o.g_min, o.g_max, o.g_step);  // reject a bad grid before any work
    m.config = to_json(cfg);
    m.config["g_min"] = o.g_min;
    m.config["g_max"] = o.g_max;
    m.config["g_step"] = o.g_step;
    const SweepResult r = run_drive_sweep(o.g_min, o.g_max, o.g_step, cfg, seed);
    for (const auto& p : write_sweep(out.path(""), r)) out.add(p);
    const PlotAxes heat{"", "frequency / drive frequency", "g", false, 0.0, 4.0};
    PlotAxes hq = heat, hn = heat;
    hq.title = "<q> spectra over drive amplitude (log10)";
    hn.title = "detection spectra over drive amplitude (log10)";
    out.svg(o.plots, "heatmap_q.svg", svg_heatmap(hq, r.freqs, r.g_values, r.psd_q, true));
    out.svg(o.plots, "heatmap_n.svg", svg_heatmap(hn, r.freqs, r.g_values, r.psd_n, true));

    json rows = json::array();
    std::size_t failed = 0;
    for (const auto& row : r.rows) {
        json j = {{"g", row.g},
                  {"seed", row.seed},
                  {"dim", row.dim},
                  {"regime", to_string(row.regime)},
                  {"flatness_q", row.flatness_q},
                  {"peaks_q", to_json(row.peaks_q)},
                  {"peaks_n", to_json(row.peaks_n)},
                  {"jump_count", row.jump_count},
                  {"leakage_max", row.leakage_max},
                  {"wall_seconds", row.wall_seconds}};
        if (!row.error.empty()) {
            j["error"] = row.error;
            ++failed;
        }
        rows.push_back(j);
        std::cout << "g=" << row.g << " " << to_string(row.regime) << (row.error.empty() ? "" : " (" + row.error + ")")
                  << '\n';
    }
    return {{"rows", rows}, {"failed_rows", failed}};
}

json cmd_classical(const Options& o, std::uint64_t seed, Outputs& out, RunManifest& m) {
    o.params.validate();
    ClassicalConfig cc;
    cc.step = kTwoPi / o.classical_step_divisor;
    cc.sample_interval = kTwoPi / o.samples_per_period;
    cc.t_transient = o.transient;
    cc.t_record = o.periods;
    cc.start = {o.u0, o.v0};
    cc.validate();
    PhysicalParams params = o.params;
    params.sho_mode = o.sho;
    const double noise = o.noise.value_or(default_noise_amp(params));
    m.config = {{"params", to_json(params)}, {"classical", to_json(cc)}, {"noise_amp", noise},
                {"lyapunov_periods", o.lyapunov_periods}};

    const ClassicalTrajectory traj = integrate_langevin(params, noise, cc, seed);
    out.csv("classical.csv", [&](const fs::path& p) { write_classical_csv(p, traj); });
    const PowerSpectrum s = welch_psd({traj.sample_dt, traj.x, 0.0}, o.segment_len, o.overlap,
                                      window_from_string(o.window));
    write_spectrum(out, "spectrum_u", s);
    const LyapunovResult ly = lyapunov_exponent(params, o.lyapunov_periods * kTwoPi, cc.step, cc.start);
    const double flatness = spectral_flatness(s, o.thresholds.flatness_band);
    json res = {{"lyapunov_exponent", ly.exponent},
                {"lyapunov_converged", ly.converged},
                {"lyapunov_relative_fluctuation", ly.relative_fluctuation},
                {"flatness_u", flatness},
                {"noise_amp", noise}};
    out.json_file("lyapunov.json", res);
    out.svg(o.plots, "spectrum_u.svg", spectrum_svg("classical spectrum of u", {spectrum_series("u", s)}));
    out.svg(o.plots, "portrait.svg", svg_scatter({"classical phase portrait", "u", "v"}, traj.x, traj.v));
    std::cout << "classical g=" << params.g << ": lyapunov " << ly.exponent << ", flatness " << flatness << '\n';
    return res;
}

json cmd_spectrum(const Options& o, std::uint64_t, Outputs& out, RunManifest& m) {
    m.inputs.push_back(o.input.string());
    TimeSeries series;
    if (o.column == "t_jump") {
        if (!o.dt || !o.t_end) throw UsageError("--column t_jump needs --dt and --t-end");
        series = bin_jump_increments(read_csv_column(o.input, "t_jump"), *o.dt, o.t_start, *o.t_end);
    } else {
        const auto t = read_csv_column(o.input, "t");
        const auto v = read_csv_column(o.input, o.column);
        if (t.size() < 2) throw InvalidArgument("input has fewer than two samples");
        series.dt = o.dt.value_or(t[1] - t[0]);
        // Half a sample of slack so a start time that falls on a sample keeps it.
        const double t_stop = o.t_end.value_or(t.back()) + 0.5 * series.dt;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] + 0.5 * series.dt >= o.t_start && t[i] <= t_stop) series.values.push_back(v[i]);
        }
        series.t0 = o.t_start;
    }
    m.config = {{"column", o.column},
                {"t_start", o.t_start},
                {"segment_len", o.segment_len},
                {"overlap", o.overlap},
                {"window", o.window}};
    const PowerSpectrum s = welch_psd(series, o.segment_len, o.overlap, window_from_string(o.window));
    write_spectrum(out, "spectrum", s);
    out.svg(o.plots, "spectrum.svg", spectrum_svg("spectrum of " + o.column, {spectrum_series(o.column, s)}));
    const auto peaks = dominant_peaks(s, 5, o.thresholds.peak_prominence_db, o.thresholds.peak_band);
    return {{"samples", series.values.size()}, {"peaks", to_json(peaks)}};
}

json cmd_density(const Options& o, std::uint64_t, Outputs& out, RunManifest& m) {
    PhysicalParams params = o.params;
    params.sho_mode = o.sho;
    params.validate();
    if (o.dim < 2) throw UsageError("density needs --dim (at least 2)");
    std::vector<double> grid;
    const double dt = kTwoPi / o.samples_per_period;
    const auto count = static_cast<std::size_t>(std::llround(o.periods * o.samples_per_period));
    for (std::size_t i = 0; i <= count; ++i) grid.push_back(static_cast<double>(i) * dt);
    m.config = {{"params", to_json(params)}, {"dim", o.dim}, {"periods", o.periods}, {"init", "vacuum"}};
    const auto rho = evolve_density(params, o.dim, DensityMatrix::pure(StateVector::basis(o.dim, 0)), grid);
    const Quadratures quad = build_quadratures(o.dim);
    std::vector<double> q, p, n;
    for (const auto& r : rho) {
        q.push_back(r.expectation(quad.q).real());
        p.push_back(r.expectation(quad.p).real());
        n.push_back(r.expectation(quad.n).real());
    }
    out.csv("density.csv", [&](const fs::path& path) { write_density_csv(path, grid, q, p, n); });
    out.svg(o.plots, "density_q.svg", svg_line_plot({"tr(rho q)", "t", "<q>", false, 0.0, 0.0}, {{"", grid, q}}));
    return {{"samples", grid.size()}, {"final_n", n.back()}};
}

json cmd_validate(const Options& o, std::uint64_t seed, Outputs& out, RunManifest& m) {
    ValidationOptions vo{seed, o.jobs, o.solver.fault_rate_scale};
    m.config = {{"only", o.only}, {"fault_rate_scale", vo.fault_rate_scale}, {"jobs", o.jobs}};
    const auto checks = run_validation(o.only, vo);
    json arr = json::array();
    bool all = true;
    for (const auto& c : checks) {
        arr.push_back(to_json(c));
        all = all && c.passed;
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    }
    json res = {{"all_passed", all}, {"checks", arr}};
    out.json_file("validation.json", res);
    return res;
}

// Applies `key = value` lines of the config file to options of `cmd` not given as flags; keys
// are option names without the leading dashes.
void apply_config_file(CLI::App* cmd, const fs::path& path) {
    for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(path.string())) {
        if (!item.parents.empty()) throw CLI::ConversionError("config sections are not supported: " + item.fullname());
        CLI::Option* opt = cmd->get_option_no_throw("--" + item.name);
        if (opt == nullptr || item.name == "config") {
            throw CLI::ConversionError("unknown key '" + item.name + "' in " + path.string());
        }
        if (opt->count() > 0) continue;
        if (opt->get_type_size() == 0) {
            // Flags take true/false.
            if (item.inputs.size() != 1) throw CLI::ConversionError("flag '" + item.name + "' needs one value");
            const std::string& v = item.inputs.front();
            if (v == "true" || v == "1") {
                opt->add_result(opt->get_flag_value(opt->get_name(), "true"));
            } else if (v != "false" && v != "0") {
                throw CLI::ConversionError("flag '" + item.name + "' takes true or false");
            }
        } else {
            opt->add_result(item.inputs);
        }
        opt->run_callback();
    }
}

// Runs a command with manifest bookkeeping; returns the process exit status.
int execute(const std::string& name, const Command& cmd, const Options& o) {
    RunManifest manifest;
    manifest.command = name;
    manifest.seed_was_random = !o.seed.has_value();
    manifest.master_seed = o.seed ? *o.seed : (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^
                                                   std::random_device{}();
    Outputs out(o.out);
    const auto start = std::chrono::steady_clock::now();
    int status = 0;
    try {
        fs::create_directories(o.out);
        manifest.results = cmd(o, manifest.master_seed, out, manifest);
        if (name == "validate" && !manifest.results.value("all_passed", false)) status = kExitFailure;
    } catch (const UsageError& e) {
        std::cerr << name << ": " << e.what() << '\n';
        manifest.error = e.what();
        status = kExitUsage;
    } catch (const InvalidArgument& e) {
        // Raised while validating the configuration or its inputs.
        std::cerr << name << ": invalid argument: " << e.what() << '\n';
        manifest.error = e.what();
        status = kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << name << ": run failed: " << e.what() << '\n';
        manifest.error = e.what();
        status = kExitFailure;
    }
    manifest.outputs = out.files();
    manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const fs::path manifest_path = o.out / "manifest.json";
    manifest.outputs.push_back(manifest_path.string());
    try {
        write_json(manifest_path, manifest.to_json());
    } catch (const std::exception& e) {
        std::cerr << name << ": cannot write manifest: " << e.what() << '\n';
        if (status == 0) status = kExitFailure;
    }
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum-jump trajectories of the driven, damped Duffing oscillator"};
    app.require_subcommand(1);
    Options o;
    std::string chosen;
    std::vector<std::pair<CLI::App*, Command>> commands;

    const auto add = [&](const std::string& name, const std::string& help, Command cmd) {
        CLI::App* sub = app.add_subcommand(name, help);
        add_output(sub, o);
        commands.emplace_back(sub, std::move(cmd));
        return sub;
    };

    auto* traj = add("trajectory", "one quantum-jump trajectory", cmd_trajectory);
    add_physics(traj, o);
    traj->add_option("--g", o.params.g, "drive amplitude")->check(CLI::NonNegativeNumber)->capture_default_str();
    traj->add_flag("--sho", o.sho, "driven harmonic oscillator instead of the Duffing oscillator");
    add_solver(traj, o);

    auto* sho = add("sho-check", "white-noise check of the driven harmonic oscillator", cmd_sho_check);
    add_physics(sho, o);
    sho->add_option("--g", o.params.g, "drive amplitude")->check(CLI::NonNegativeNumber)->capture_default_str();
    add_solver(sho, o);
    add_spectral(sho, o);

    auto* duff = add("duffing-case", "spectra, portrait and regime label at one drive amplitude", cmd_duffing_case);
    add_physics(duff, o);
    duff->add_option("--g", o.params.g, "drive amplitude in (0, 3]")
        ->check(CLI::Range(0.0, 3.0))
        ->capture_default_str();
    add_solver(duff, o);
    add_spectral(duff, o);
    add_classifier(duff, o);
    add_jobs(duff, o);

    auto* sweep = add("sweep", "regime labels and spectra over a drive-amplitude grid", cmd_sweep);
    add_physics(sweep, o);
    sweep->add_option("--g-min", o.g_min, "first drive amplitude")->capture_default_str();
    sweep->add_option("--g-max", o.g_max, "last drive amplitude")->capture_default_str();
    sweep->add_option("--step", o.g_step, "grid step")->capture_default_str();
    add_solver(sweep, o);
    add_spectral(sweep, o);
    add_classifier(sweep, o);
    add_jobs(sweep, o);

    auto* cl = add("classical", "Langevin realisation and Lyapunov exponent of the classical limit", cmd_classical);
    add_physics(cl, o);
    cl->add_option("--g", o.params.g, "drive amplitude")->check(CLI::NonNegativeNumber)->capture_default_str();
    cl->add_flag("--sho", o.sho, "harmonic restoring force");
    cl->add_option("--noise", o.noise, "noise amplitude on v (default beta sqrt(2 gamma); 0: deterministic)")
        ->check(CLI::NonNegativeNumber);
    cl->add_option("--periods", o.periods, "recorded drive periods")->check(CLI::PositiveNumber)->capture_default_str();
    cl->add_option("--transient", o.transient, "discarded drive periods")->capture_default_str();
    cl->add_option("--steps-per-period", o.classical_step_divisor, "integration steps per drive period")
        ->capture_default_str();
    cl->add_option("--samples-per-period", o.samples_per_period, "samples per drive period")->capture_default_str();
    cl->add_option("--lyapunov-periods", o.lyapunov_periods, "drive periods for the Lyapunov estimate")
        ->capture_default_str();
    cl->add_option("--u0", o.u0, "initial u")->capture_default_str();
    cl->add_option("--v0", o.v0, "initial v")->capture_default_str();
    add_spectral(cl, o);

    auto* spec = add("spectrum", "recompute a power spectrum from a stored CSV", cmd_spectrum);
    spec->add_option("--input", o.input, "trajectory.csv, classical.csv or jumps.csv")->required()->check(
        CLI::ExistingFile);
    spec->add_option("--column", o.column, "column to analyse (t_jump bins detections)")->capture_default_str();
    spec->add_option("--t-start", o.t_start, "ignore samples before this time")->capture_default_str();
    spec->add_option("--t-end", o.t_end, "ignore samples after this time");
    spec->add_option("--dt", o.dt, "sample spacing (bin width for t_jump)")->check(CLI::PositiveNumber);
    add_spectral(spec, o);

    auto* dens = add("density", "density-matrix evolution from vacuum (small bases)", cmd_density);
    add_physics(dens, o);
    dens->add_option("--g", o.params.g, "drive amplitude")->check(CLI::NonNegativeNumber)->capture_default_str();
    dens->add_flag("--sho", o.sho, "driven harmonic oscillator");
    dens->add_option("--dim", o.dim, "Fock basis size")->required();
    dens->add_option("--periods", o.periods, "drive periods")->check(CLI::PositiveNumber)->capture_default_str();
    dens->add_option("--samples-per-period", o.samples_per_period, "samples per drive period")->capture_default_str();

    auto* val = add("validate", "oracle checks; exit 0 iff all pass", cmd_validate);
    val->add_option("--only", o.only, "check groups to run")->check(CLI::IsMember(validation_groups()));
    val->add_option("--fault-rate-scale", o.solver.fault_rate_scale, "debug: scale every detection rate")
        ->check(CLI::PositiveNumber);
    add_jobs(val, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    for (const auto& [sub, cmd] : commands) {
        if (!sub->parsed()) continue;
        if (!o.config.empty()) {
            try {
                apply_config_file(sub, o.config);
            } catch (const CLI::Error& e) {
                std::cerr << sub->get_name() << ": config: " << e.what() << '\n';
                return kExitUsage;
            }
        }
        return execute(sub->get_name(), cmd, o);
    }
    return kExitUsage;
}
