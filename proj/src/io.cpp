#include "qjump/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "qjump/errors.hpp"

namespace qjump {

namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Shortest representation that reads back to the same double; NaN is written as "nan".
std::string num(double x) {
    if (std::isnan(x)) return "nan";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, res.ptr};
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw NumericalError("write to '" + path.string() + "' failed");
}

}  // namespace

json to_json(const PhysicalParams& p) {
    return {{"beta", p.beta}, {"gamma", p.gamma}, {"g", p.g}, {"sho_mode", p.sho_mode}};
}

json to_json(const JumpSolverConfig& c) {
    return {{"rel_tol", c.rel_tol},
            {"abs_tol", c.abs_tol},
            {"norm_bisect_tol", c.norm_bisect_tol},
            {"sample_interval", c.sample_interval},
            {"t_transient_periods", c.t_transient},
            {"t_record_periods", c.t_record},
            {"max_step", c.max_step},
            {"leakage_bound", c.leakage_bound},
            {"adaptive_window", c.adaptive_window},
            {"fault_rate_scale", c.fault_rate_scale}};
}

json to_json(const ClassifierThresholds& t) {
    return {{"chaotic_flatness", t.chaotic_flatness},
            {"flatness_band", {t.flatness_band.lo, t.flatness_band.hi}},
            {"peak_band", {t.peak_band.lo, t.peak_band.hi}},
            {"peak_prominence_db", t.peak_prominence_db},
            {"quasi_prominence_db", t.quasi_prominence_db},
            {"max_peaks", t.max_peaks},
            {"harmonic_tolerance", t.harmonic_tolerance},
            {"min_quasi_peaks", t.min_quasi_peaks}};
}

json to_json(const ExperimentConfig& c) {
    return {{"params", to_json(c.params)},
            {"solver", to_json(c.solver)},
            {"dim", c.dim},
            {"init", to_string(c.init)},
            {"segment_len", c.segment_len},
            {"overlap", c.overlap},
            {"window", to_string(c.window)},
            {"thresholds", to_json(c.thresholds)},
            {"ensemble", c.ensemble},
            {"jobs", c.jobs}};
}

json to_json(const ClassicalConfig& c) {
    return {{"step", c.step},
            {"sample_interval", c.sample_interval},
            {"t_transient_periods", c.t_transient},
            {"t_record_periods", c.t_record},
            {"start", {c.start.u, c.start.v}}};
}

json to_json(const SpectralPeak& p) {
    return {{"freq", p.freq}, {"power", p.power}, {"prominence_db", p.prominence_db}};
}

json to_json(const std::vector<SpectralPeak>& peaks) {
    json arr = json::array();
    for (const auto& p : peaks) arr.push_back(to_json(p));
    return arr;
}

json to_json(const CheckResult& r) {
    json metrics = json::object();
    for (const auto& [k, v] : r.metrics) metrics[k] = v;
    return {{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"metrics", metrics}};
}

void write_trajectory_csv(const fs::path& path, const TrajectoryRecord& rec) {
    auto out = open_out(path);
    out << "t,q_mean,p_mean,n_mean\n";
    for (std::size_t i = 0; i < rec.sample_times.size(); ++i) {
        out << num(kTwoPi * rec.sample_times[i]) << ',' << num(rec.q_mean[i]) << ',' << num(rec.p_mean[i]) << ','
            << num(rec.n_mean[i]) << '\n';
    }
    finish(out, path);
}

void write_jumps_csv(const fs::path& path, const TrajectoryRecord& rec) {
    auto out = open_out(path);
    out << "t_jump\n";
    for (const double t : rec.jump_times) out << num(t) << '\n';
    finish(out, path);
}

json trajectory_sidecar(const TrajectoryRecord& rec) {
    return {{"format_version", kFormatVersion},
            {"params", to_json(rec.params)},
            {"solver", to_json(rec.config)},
            {"seed", rec.seed},
            {"dim", rec.dim},
            {"t_record_start", rec.t_record_start},
            {"t_end", rec.t_end},
            {"sample_dt", rec.sample_dt},
            {"record_start_index", rec.record_start},
            {"jump_count", rec.jump_times.size()},
            {"recorded_jump_count", rec.recorded_jump_count()},
            {"leakage_max", rec.leakage_max},
            {"norm_deviation_max", rec.norm_deviation_max},
            {"steps_accepted", rec.steps_accepted},
            {"steps_rejected", rec.steps_rejected},
            {"mean_window", rec.mean_window}};
}

void write_spectrum_csv(const fs::path& path, const PowerSpectrum& s) {
    auto out = open_out(path);
    out << "freq,psd\n";
    for (std::size_t i = 0; i < s.freqs.size(); ++i) out << num(s.freqs[i]) << ',' << num(s.psd[i]) << '\n';
    finish(out, path);
}

json spectrum_sidecar(const PowerSpectrum& s) {
    return {{"format_version", kFormatVersion},
            {"estimator", "welch"},
            {"window", to_string(s.window)},
            {"segment_len", s.segment_len},
            {"overlap", s.overlap},
            {"segment_count", s.segment_count},
            {"sample_dt", s.dt},
            {"resolution", s.resolution()},
            {"frequency_unit", "drive frequency"},
            {"detrend", "global mean"}};
}

void write_density_csv(const fs::path& path, const std::vector<double>& t_grid, const std::vector<double>& q,
                       const std::vector<double>& p, const std::vector<double>& n) {
    if (q.size() != t_grid.size() || p.size() != t_grid.size() || n.size() != t_grid.size()) {
        throw DimensionMismatch("density CSV columns differ in length");
    }
    auto out = open_out(path);
    out << "t,q,p,n\n";
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        out << num(t_grid[i]) << ',' << num(q[i]) << ',' << num(p[i]) << ',' << num(n[i]) << '\n';
    }
    finish(out, path);
}

void write_classical_csv(const fs::path& path, const ClassicalTrajectory& traj) {
    auto out = open_out(path);
    out << "t,u,v\n";
    for (std::size_t i = 0; i < traj.sample_times.size(); ++i) {
        out << num(kTwoPi * traj.sample_times[i]) << ',' << num(traj.x[i]) << ',' << num(traj.v[i]) << '\n';
    }
    finish(out, path);
}

std::vector<fs::path> write_sweep(const fs::path& dir, const SweepResult& sweep) {
    std::vector<fs::path> files;
    const auto matrix = [&](const std::string& name, const std::vector<std::vector<double>>& m) {
        const fs::path path = dir / name;
        auto out = open_out(path);
        out << 'g';
        for (const double f : sweep.freqs) out << ',' << num(f);
        out << '\n';
        for (std::size_t i = 0; i < sweep.g_values.size(); ++i) {
            out << num(sweep.g_values[i]);
            for (const double v : m[i]) out << ',' << num(v);
            out << '\n';
        }
        finish(out, path);
        files.push_back(path);
    };
    matrix("psd_q.csv", sweep.psd_q);
    matrix("psd_n.csv", sweep.psd_n);

    const fs::path rows_path = dir / "sweep_rows.csv";
    auto out = open_out(rows_path);
    out << "g,seed,dim,regime,flatness_q,top_peak_q,top_peak_n,jump_count,leakage_max,error\n";
    for (const auto& r : sweep.rows) {
        const auto top = [](const std::vector<SpectralPeak>& p) { return p.empty() ? std::nan("") : p.front().freq; };
        std::string err = r.error;
        for (char& c : err) {
            if (c == ',' || c == '\n' || c == '"') c = ' ';
        }
        out << num(r.g) << ',' << r.seed << ',' << r.dim << ',' << to_string(r.regime) << ',' << num(r.flatness_q)
            << ',' << num(top(r.peaks_q)) << ',' << num(top(r.peaks_n)) << ',' << r.jump_count << ','
            << num(r.leakage_max) << ',' << err << '\n';
    }
    finish(out, rows_path);
    files.push_back(rows_path);
    return files;
}

void write_json(const fs::path& path, const json& doc) {
    auto out = open_out(path);
    out << doc.dump(2) << '\n';
    finish(out, path);
}

std::vector<double> read_csv_column(const fs::path& path, const std::string& column) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("'" + path.string() + "' is empty");
    std::size_t index = 0;
    bool found = false;
    {
        std::stringstream header(line);
        std::string name;
        for (std::size_t i = 0; std::getline(header, name, ','); ++i) {
            if (name == column) {
                index = i;
                found = true;
                break;
            }
        }
    }
    if (!found) throw InvalidArgument("'" + path.string() + "' has no column '" + column + "'");

    std::vector<double> values;
    for (std::size_t row = 2; std::getline(in, line); ++row) {
        if (line.empty()) continue;
        std::stringstream fields(line);
        std::string cell;
        for (std::size_t i = 0; i <= index; ++i) {
            if (!std::getline(fields, cell, ',')) {
                throw InvalidArgument("'" + path.string() + "' line " + std::to_string(row) + " is too short");
            }
        }
        double v = 0.0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
            throw InvalidArgument("'" + path.string() + "' line " + std::to_string(row) + ": bad number '" + cell +
                                  "'");
        }
        values.push_back(v);
    }
    return values;
}

json RunManifest::to_json() const {
    json doc = {{"format_version", kFormatVersion},
                {"tool_version", kToolVersion},
                {"command", command},
                {"master_seed", master_seed},
                {"seed_was_random", seed_was_random},
                {"config", config},
                {"inputs", inputs},
                {"outputs", outputs},
                {"wall_seconds", wall_seconds},
                {"status", error.empty() ? "ok" : "error"}};
    if (!error.empty()) doc["error"] = error;
    if (!results.empty()) doc["results"] = results;
    return doc;
}

}  // namespace qjump
