#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qjump/errors.hpp"
#include "qjump/io.hpp"
#include "qjump/svg.hpp"

using namespace qjump;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "qjump_unit_io";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

TrajectoryRecord tiny_record() {
    TrajectoryRecord rec;
    rec.sample_times = {0.0, 0.5, 1.0};
    rec.q_mean = {0.1, -0.2, 1.0 / 3.0};
    rec.p_mean = {0.0, 0.5, 0.25};
    rec.n_mean = {1.0, 2.0, 3.0};
    rec.jump_times = {0.75, 5.0};
    rec.record_start = 1;
    rec.t_record_start = std::numbers::pi;
    rec.t_end = 2.0 * std::numbers::pi;
    rec.dim = 16;
    rec.seed = 99;
    return rec;
}

}  // namespace

TEST_CASE("trajectory CSV round trips at full precision") {
    const auto path = scratch("traj.csv");
    const auto rec = tiny_record();
    write_trajectory_csv(path, rec);
    CHECK(slurp(path).rfind("t,q_mean,p_mean,n_mean\n", 0) == 0);
    CHECK(read_csv_column(path, "q_mean") == rec.q_mean);
    const auto t = read_csv_column(path, "t");
    CHECK(t[1] == doctest::Approx(std::numbers::pi));

    write_jumps_csv(scratch("jumps.csv"), rec);
    CHECK(read_csv_column(scratch("jumps.csv"), "t_jump") == rec.jump_times);

    const auto side = trajectory_sidecar(rec);
    CHECK(side["format_version"] == kFormatVersion);
    CHECK(side["recorded_jump_count"] == 1);
    CHECK(side["seed"] == 99);
}

TEST_CASE("CSV reader rejects malformed input") {
    CHECK_THROWS_AS(read_csv_column(scratch("missing.csv"), "x"), InvalidArgument);
    const auto path = scratch("bad.csv");
    std::ofstream(path) << "a,b\n1,2\n3,oops\n";
    CHECK(read_csv_column(path, "a") == std::vector<double>{1.0, 3.0});
    CHECK_THROWS_AS(read_csv_column(path, "b"), InvalidArgument);
    CHECK_THROWS_AS(read_csv_column(path, "c"), InvalidArgument);
}

TEST_CASE("writers are byte-deterministic") {
    const auto rec = tiny_record();
    write_trajectory_csv(scratch("a.csv"), rec);
    write_trajectory_csv(scratch("b.csv"), rec);
    CHECK(slurp(scratch("a.csv")) == slurp(scratch("b.csv")));
}

TEST_CASE("manifest records errors and results") {
    RunManifest m;
    m.command = "trajectory";
    m.master_seed = 7;
    m.error = "bad thing";
    const auto doc = m.to_json();
    CHECK(doc["status"] == "error");
    CHECK(doc["error"] == "bad thing");
    CHECK(doc["tool_version"] == kToolVersion);
    m.error.clear();
    CHECK(m.to_json()["status"] == "ok");
    CHECK_FALSE(m.to_json().contains("error"));
}

TEST_CASE("configuration serialization lists every threshold") {
    const auto doc = to_json(ClassifierThresholds{});
    for (const char* key : {"chaotic_flatness", "flatness_band", "peak_band", "peak_prominence_db",
                            "quasi_prominence_db", "max_peaks", "harmonic_tolerance", "min_quasi_peaks"}) {
        CHECK(doc.contains(key));
    }
    CHECK(to_json(ExperimentConfig{})["init"] == "attractor");
}

TEST_CASE("SVG output is well formed") {
    PlotAxes axes{"title <&>", "x", "y", true, 0.0, 0.0};
    const auto svg = svg_line_plot(axes, {PlotSeries{"series", {1.0, 2.0, 3.0}, {1.0, 10.0, 100.0}}});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("title &lt;&amp;&gt;") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK_THROWS_AS(svg_line_plot(axes, {PlotSeries{"", {1.0}, {1.0, 2.0}}}), DimensionMismatch);
    CHECK_THROWS_AS(svg_heatmap(axes, {1.0, 2.0}, {0.1}, {{1.0}}, false), DimensionMismatch);
}
