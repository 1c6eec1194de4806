#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

// Behaviour of the command-line tool, exercised through the built executable.

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "qjump_unit_cli";

struct Run {
    int code = -1;
    std::string output;  // stdout and stderr
};

Run run(const std::string& args) {
    fs::create_directories(kRoot);
    const fs::path log = kRoot / "last.log";
    const std::string cmd = std::string(QJUMP_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream s;
    s << in.rdbuf();
    r.output = s.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "manifest.json")); }

std::string out_dir(const std::string& name) {
    const fs::path d = kRoot / name;
    fs::remove_all(d);
    return d.string();
}

}  // namespace

TEST_CASE("bad drive amplitude is a usage error naming the flag") {
    const auto r = run("trajectory --g -1 --out " + out_dir("neg"));
    CHECK(r.code == 2);
    CHECK(r.output.find("--g") != std::string::npos);
}

TEST_CASE("zero sweep step is a usage error recorded in the manifest") {
    const auto dir = out_dir("step0");
    const auto r = run("sweep --step 0 --seed 1 --out " + dir);
    CHECK(r.code == 2);
    const auto m = manifest(dir);
    CHECK(m["status"] == "error");
    CHECK(m["error"].get<std::string>().find("step") != std::string::npos);
}

TEST_CASE("unknown subcommand and unknown option") {
    CHECK(run("frobnicate").code == 2);
    CHECK(run("trajectory --no-such-flag 1 --out " + out_dir("unk")).code == 2);
}

TEST_CASE("trajectory runs are reproducible byte for byte") {
    const std::string flags = "trajectory --g 0.3 --beta 0.1 --gamma 0.125 --periods 6 --transient 2 --seed 7 ";
    const auto a = out_dir("traj_a"), b = out_dir("traj_b");
    REQUIRE(run(flags + "--out " + a).code == 0);
    REQUIRE(run(flags + "--no-plots --out " + b).code == 0);
    for (const char* f : {"trajectory.csv", "jumps.csv"}) {
        CHECK(fs::exists(fs::path(a) / f));
        CHECK(slurp(fs::path(a) / f) == slurp(fs::path(b) / f));
    }
    CHECK(fs::exists(fs::path(a) / "portrait.svg"));
    CHECK_FALSE(fs::exists(fs::path(b) / "portrait.svg"));
    const auto m = manifest(a);
    CHECK(m["status"] == "ok");
    CHECK(m["master_seed"] == 7);
    CHECK(m["seed_was_random"] == false);
}

TEST_CASE("a missing seed is drawn and recorded") {
    const auto dir = out_dir("random_seed");
    REQUIRE(run("trajectory --sho --g 0.3 --periods 2 --transient 0 --no-plots --out " + dir).code == 0);
    const auto m = manifest(dir);
    CHECK(m["seed_was_random"] == true);
    const auto seed = m["master_seed"].get<std::uint64_t>();
    const auto again = out_dir("random_seed_again");
    REQUIRE(run("trajectory --sho --g 0.3 --periods 2 --transient 0 --no-plots --seed " + std::to_string(seed) +
                " --out " + again)
                .code == 0);
    CHECK(slurp(fs::path(dir) / "jumps.csv") == slurp(fs::path(again) / "jumps.csv"));
}

TEST_CASE("config file values apply and flags override them") {
    fs::create_directories(kRoot);
    const fs::path cfg = kRoot / "run.ini";
    std::ofstream(cfg) << "# harmonic run\ng = 0.3\nperiods = 3\ntransient = 0\nseed = 4\n";
    const auto from_file = out_dir("cfg_file");
    REQUIRE(run("trajectory --sho --no-plots --config " + cfg.string() + " --out " + from_file).code == 0);
    auto m = manifest(from_file);
    CHECK(m["master_seed"] == 4);
    CHECK(m["config"]["solver"]["t_record_periods"] == 3.0);

    const auto overridden = out_dir("cfg_override");
    REQUIRE(run("trajectory --sho --no-plots --periods 2 --config " + cfg.string() + " --out " + overridden).code ==
            0);
    m = manifest(overridden);
    CHECK(m["config"]["solver"]["t_record_periods"] == 2.0);

    std::ofstream(cfg) << "bogus_key = 1\n";
    CHECK(run("trajectory --sho --config " + cfg.string() + " --out " + out_dir("cfg_bad")).code == 2);
}

TEST_CASE("sweep output does not depend on the worker count") {
    const std::string flags =
        "sweep --g-min 0.1 --g-max 0.2 --step 0.05 --periods 16 --transient 4 --segment-len 512 --dim 256 --seed 3 ";
    const auto a = out_dir("sweep_1"), b = out_dir("sweep_3");
    REQUIRE(run(flags + "--jobs 1 --out " + a).code == 0);
    REQUIRE(run(flags + "--jobs 3 --out " + b).code == 0);
    for (const char* f : {"psd_q.csv", "psd_n.csv", "sweep_rows.csv"}) {
        CHECK(slurp(fs::path(a) / f) == slurp(fs::path(b) / f));
    }
    CHECK(fs::exists(fs::path(a) / "heatmap_q.svg"));
}

TEST_CASE("spectrum of a saved column") {
    const auto traj = out_dir("spec_src");
    REQUIRE(run("trajectory --sho --g 0.3 --periods 40 --transient 10 --seed 2 --no-plots --out " + traj).code == 0);
    const auto dir = out_dir("spec");
    const auto csv = (fs::path(traj) / "trajectory.csv").string();
    CHECK(run("spectrum --input " + csv + " --column q_mean --t-start 62.9 --segment-len 1024 --out " + dir).code ==
          0);
    CHECK(fs::exists(fs::path(dir) / "spectrum.csv"));
    CHECK(run("spectrum --input " + csv + " --column nope --out " + out_dir("spec_bad")).code == 2);
}

TEST_CASE("validation filter and fault injection") {
    const auto dir = out_dir("val_lyap");
    REQUIRE(run("validate --only lyapunov --out " + dir).code == 0);
    const auto m = manifest(dir);
    REQUIRE(m["results"]["checks"].size() == 1);
    CHECK(m["results"]["checks"][0]["name"] == "lyapunov");

    CHECK(run("validate --only poisson --fault-rate-scale 0.5 --out " + out_dir("val_fault")).code == 1);
    CHECK(run("validate --only nothing --out " + out_dir("val_bad")).code == 2);
}
