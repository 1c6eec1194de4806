#pragma once

// Data artifacts: CSV files (the source of truth, full double precision), JSON sidecars
// describing how they were produced, and the run manifest written by every command.
// Column layouts are versioned by kFormatVersion and listed in the README.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qjump/classical.hpp"
#include "qjump/experiments.hpp"
#include "qjump/jumps.hpp"
#include "qjump/spectra.hpp"
#include "qjump/validation.hpp"

namespace qjump {

using json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";

json to_json(const PhysicalParams& p);
json to_json(const JumpSolverConfig& c);
json to_json(const ClassifierThresholds& t);
json to_json(const ExperimentConfig& c);
json to_json(const ClassicalConfig& c);
json to_json(const SpectralPeak& p);
json to_json(const std::vector<SpectralPeak>& peaks);
json to_json(const CheckResult& r);

// t (absolute time), q_mean, p_mean, n_mean; one row per sample including the transient.
void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& rec);
// Single column t_jump (absolute time), all detections including the transient.
void write_jumps_csv(const std::filesystem::path& path, const TrajectoryRecord& rec);
// Parameters, solver settings, seed, dimension and the numerical-health figures of a record.
json trajectory_sidecar(const TrajectoryRecord& rec);

// freq, psd (freq normalized to the drive frequency).
void write_spectrum_csv(const std::filesystem::path& path, const PowerSpectrum& s);
json spectrum_sidecar(const PowerSpectrum& s);

// t, q, p, n from a sequence of density matrices on t_grid.
void write_density_csv(const std::filesystem::path& path, const std::vector<double>& t_grid,
                       const std::vector<double>& q, const std::vector<double>& p, const std::vector<double>& n);

// t (absolute time), u, v.
void write_classical_csv(const std::filesystem::path& path, const ClassicalTrajectory& traj);

// Sweep matrices as g x freq CSVs (psd_q.csv, psd_n.csv: first column g, header lists the
// frequencies) and one row per g in sweep_rows.csv. Returns the files written.
std::vector<std::filesystem::path> write_sweep(const std::filesystem::path& dir, const SweepResult& sweep);

void write_json(const std::filesystem::path& path, const json& doc);

// Reads one named column of a CSV with a header row; throws InvalidArgument when the file,
// the column, or a numeric value is missing.
std::vector<double> read_csv_column(const std::filesystem::path& path, const std::string& column);

struct RunManifest {
    std::string command;
    json config = json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::uint64_t master_seed = 0;
    bool seed_was_random = false;
    double wall_seconds = 0.0;
    std::string error;  // empty on success
    json results = json::object();

    json to_json() const;
};

}  // namespace qjump
