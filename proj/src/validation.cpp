#include "qjump/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "qjump/classical.hpp"
#include "qjump/errors.hpp"
#include "qjump/experiments.hpp"
#include "qjump/jumps.hpp"
#include "qjump/lindblad.hpp"
#include "qjump/rng.hpp"

namespace qjump {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Seed streams of the individual checks under the master seed.
enum Stream : std::uint64_t { kUnravelling = 1, kShoRate = 2, kPoisson = 3 };

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

PhysicalParams sho_reference() {
    PhysicalParams p;
    p.beta = 0.1;
    p.gamma = 0.125;
    p.g = 0.3;
    p.sho_mode = true;
    return p;
}

}  // namespace

double CheckResult::metric(const std::string& key) const {
    for (const auto& [k, v] : metrics) {
        if (k == key) return v;
    }
    throw InvalidArgument("check '" + name + "' has no metric '" + key + "'");
}

const std::vector<std::string>& validation_groups() {
    static const std::vector<std::string> groups{"unravelling", "sho-steady", "poisson", "lyapunov"};
    return groups;
}

CheckResult check_unravelling(const ValidationOptions& opt) {
    constexpr std::size_t kDim = 30;
    constexpr std::size_t kTrajectories = 200;
    constexpr double kPeriods = 5.0;
    constexpr double kSigmas = 4.0;

    PhysicalParams params;
    params.beta = 1.0;
    params.gamma = 0.125;
    params.g = 0.3;
    JumpSolverConfig cfg;
    cfg.t_transient = 0.0;
    cfg.t_record = kPeriods;
    cfg.fault_rate_scale = opt.fault_rate_scale;
    // The ensemble-average identity holds exactly in any truncated basis, and both sides
    // share this one, so population reaching the top levels does not bias the comparison. It
    // does get there: a detection renormalizes by 1/sqrt(<n>) and lifts the top levels of
    // low-<n> states. The guard is therefore off and the figure is reported instead.
    cfg.leakage_bound = 1.0;
    // From vacuum all members coincide until the first detection, the sample standard error
    // is zero and any deviation fails. A coherent start (rate 2 gamma |alpha|^2 = 0.56) has
    // about ten detections in the ensemble by the first sample, which keeps the early-time
    // distribution of the mean close enough to normal for a 4 SE bound to be meaningful.
    const StateVector init = coherent_state(1.5, kDim);

    const auto ensemble = evolve_ensemble(params, cfg, init, derive_seed(opt.seed, kUnravelling), kTrajectories,
                                          opt.jobs);
    const auto& times = ensemble.front().sample_times;
    std::vector<double> t_abs(times.size());
    std::transform(times.begin(), times.end(), t_abs.begin(), [](double p) { return kTwoPi * p; });
    const auto rho = evolve_density(params, kDim, DensityMatrix::pure(init), t_abs);
    const Quadratures quad = build_quadratures(kDim);

    CheckResult out{"unravelling", true, "", {}};
    double worst_ratio = 0.0, worst_dev = 0.0, worst_t = 0.0;
    std::size_t failures = 0;
    const auto m = static_cast<double>(kTrajectories);
    for (std::size_t i = 0; i < times.size(); ++i) {
        double mean = 0.0, sq = 0.0;
        for (const auto& rec : ensemble) mean += rec.q_mean[i];
        mean /= m;
        for (const auto& rec : ensemble) sq += (rec.q_mean[i] - mean) * (rec.q_mean[i] - mean);
        const double se = std::sqrt(sq / (m - 1.0) / m);
        const double dev = std::abs(mean - rho[i].expectation(quad.q).real());
        // At t = 0 all members coincide; the floor covers integrator error there.
        const double allowed = kSigmas * se + 1e-6;
        if (dev > allowed) ++failures;
        const double ratio = dev / allowed;
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            worst_dev = dev;
            worst_t = times[i];
        }
    }
    double leakage = 0.0;
    for (const auto& rec : ensemble) leakage = std::max(leakage, rec.leakage_max);
    out.passed = failures == 0;
    out.metrics = {{"samples", static_cast<double>(times.size())},
                   {"leakage_max", leakage},
                   {"failing_samples", static_cast<double>(failures)},
                   {"worst_ratio_to_allowed", worst_ratio},
                   {"worst_deviation", worst_dev},
                   {"worst_time_periods", worst_t}};
    out.detail = "max deviation / (4 SE + 1e-6) = " + fmt(worst_ratio) + " at t = " + fmt(worst_t) + " periods";
    return out;
}

CheckResult check_sho_rate(const ValidationOptions& opt) {
    constexpr double kTolerance = 0.05;
    constexpr std::size_t kMinJumps = 2000;
    ExperimentConfig cfg;
    cfg.params = sho_reference();
    cfg.solver.t_transient = 50.0;
    cfg.solver.t_record = 300.0;
    cfg.solver.fault_rate_scale = opt.fault_rate_scale;
    const ShoCheckResult r = run_sho_check(cfg, derive_seed(opt.seed, kShoRate));
    const std::size_t jumps = r.record.recorded_jump_count();
    const double rel = std::abs(r.jump_rate / r.predicted_rate - 1.0);

    CheckResult out{"sho-rate", jumps >= kMinJumps && rel < kTolerance, "", {}};
    out.metrics = {{"jump_rate", r.jump_rate},
                   {"predicted_rate", r.predicted_rate},
                   {"relative_error", rel},
                   {"jumps", static_cast<double>(jumps)}};
    out.detail = "rate " + fmt(r.jump_rate) + " vs 2 gamma <n> = " + fmt(r.predicted_rate) + " (" +
                 std::to_string(jumps) + " jumps)";
    return out;
}

CheckResult check_sho_density(const ValidationOptions&) {
    constexpr std::size_t kDim = 256;
    constexpr double kSettle = 80.0;
    constexpr double kTolerance = 1e-3;
    const PhysicalParams params = sho_reference();
    const SteadyAmplitude steady = sho_steady_amplitude(params);

    std::vector<double> grid;
    for (int k = 0; k <= 8; ++k) grid.push_back(kSettle + kTwoPi * k / 8.0);
    const auto rho = evolve_density(params, kDim, DensityMatrix::pure(StateVector::basis(kDim, 0)), grid);
    const BandedOperator a = build_ladder(kDim);
    const BandedOperator n = build_quadratures(kDim).n;

    double worst = 0.0, n_mean = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        worst = std::max(worst, std::abs(rho[i].expectation(a) - steady.alpha(grid[i])));
        n_mean += rho[i].expectation(n).real() / static_cast<double>(grid.size());
    }
    CheckResult out{"sho-density", worst < kTolerance, "", {}};
    out.metrics = {{"max_amplitude_error", worst},
                   {"mean_photon_number_density", n_mean},
                   {"mean_photon_number_closed_form", steady.mean_photon_number()}};
    out.detail = "max |tr(rho a) - alpha(t)| = " + fmt(worst) + ", <n> = " + fmt(n_mean) + " vs " +
                 fmt(steady.mean_photon_number());
    return out;
}

CheckResult check_poisson(const ValidationOptions& opt) {
    constexpr double kAlpha = 20.0;
    constexpr std::size_t kDim = 640;
    constexpr std::size_t kTrajectories = 200;
    constexpr std::size_t kWaitsPerTrajectory = 10;
    constexpr double kWindow = 0.25;  // time units; about 25 expected detections
    constexpr double kSignificance = 0.01;

    PhysicalParams params;
    params.beta = 0.1;
    params.gamma = 0.125;
    params.g = 0.0;
    params.sho_mode = true;
    JumpSolverConfig cfg;
    cfg.t_transient = 0.0;
    cfg.t_record = kWindow / kTwoPi;
    cfg.fault_rate_scale = opt.fault_rate_scale;
    const auto ensemble = evolve_ensemble(params, cfg, coherent_state(kAlpha, kDim), derive_seed(opt.seed, kPoisson),
                                          kTrajectories, opt.jobs);

    // The coherent state is unchanged by a detection and its photon number decays as
    // e^{-2 gamma t}; the reference rate is the mean of 2 gamma <n> over the expected span
    // of the first waits (a 2.5% drift at most).
    const double rate0 = 2.0 * params.gamma * kAlpha * kAlpha;
    const double span = static_cast<double>(kWaitsPerTrajectory) / rate0;
    const double decay = 2.0 * params.gamma * span;
    const double rate = rate0 * (1.0 - std::exp(-decay)) / decay;

    std::vector<double> waits;
    std::size_t short_runs = 0;
    for (const auto& rec : ensemble) {
        if (rec.jump_times.size() < kWaitsPerTrajectory) ++short_runs;
        double prev = 0.0;
        for (std::size_t j = 0; j < std::min(kWaitsPerTrajectory, rec.jump_times.size()); ++j) {
            waits.push_back(rec.jump_times[j] - prev);
            prev = rec.jump_times[j];
        }
    }
    const auto [d, p] = ks_exponential(waits, rate);
    CheckResult out{"poisson", p > kSignificance && waits.size() >= 2000 && short_runs == 0, "", {}};
    out.metrics = {{"ks_statistic", d},
                   {"p_value", p},
                   {"samples", static_cast<double>(waits.size())},
                   {"reference_rate", rate},
                   {"short_trajectories", static_cast<double>(short_runs)}};
    out.detail = "KS D = " + fmt(d) + ", p = " + fmt(p) + " over " + std::to_string(waits.size()) + " waits";
    return out;
}

CheckResult check_lyapunov(const ValidationOptions&) {
    constexpr double kTotal = 2000.0 * kTwoPi;
    constexpr double kStep = kTwoPi / 512.0;
    PhysicalParams params;
    params.beta = 0.1;
    params.gamma = 0.125;

    auto exponent = [&](double g, double step) {
        PhysicalParams p = params;
        p.g = g;
        return lyapunov_exponent(p, kTotal, step).exponent;
    };
    const double chaotic = exponent(0.3, kStep), chaotic_half = exponent(0.3, kStep / 2.0);
    const double periodic = exponent(0.1, kStep), periodic_half = exponent(0.1, kStep / 2.0);
    CheckResult out{"lyapunov", chaotic > 0.0 && chaotic_half > 0.0 && periodic <= 0.0 && periodic_half <= 0.0, "",
                    {}};
    out.metrics = {{"lambda_g0.3", chaotic},
                   {"lambda_g0.3_half_step", chaotic_half},
                   {"lambda_g0.1", periodic},
                   {"lambda_g0.1_half_step", periodic_half}};
    out.detail = "lambda(0.3) = " + fmt(chaotic) + " / " + fmt(chaotic_half) + ", lambda(0.1) = " + fmt(periodic) +
                 " / " + fmt(periodic_half);
    return out;
}

std::vector<CheckResult> run_validation(const std::vector<std::string>& only, const ValidationOptions& opt) {
    const auto& groups = validation_groups();
    for (const auto& name : only) {
        if (std::find(groups.begin(), groups.end(), name) == groups.end()) {
            throw InvalidArgument("unknown validation group '" + name + "'");
        }
    }
    const auto wanted = [&](const std::string& g) {
        return only.empty() || std::find(only.begin(), only.end(), g) != only.end();
    };
    std::vector<CheckResult> out;
    if (wanted("unravelling")) out.push_back(check_unravelling(opt));
    if (wanted("sho-steady")) {
        out.push_back(check_sho_rate(opt));
        out.push_back(check_sho_density(opt));
    }
    if (wanted("poisson")) out.push_back(check_poisson(opt));
    if (wanted("lyapunov")) out.push_back(check_lyapunov(opt));
    return out;
}

std::pair<double, double> ks_exponential(std::vector<double> samples, double rate) {
    if (samples.empty()) throw InvalidArgument("KS test needs at least one sample");
    if (!(rate > 0.0)) throw InvalidArgument("exponential rate must be positive");
    std::sort(samples.begin(), samples.end());
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double cdf = 1.0 - std::exp(-rate * std::max(samples[i], 0.0));
        d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    // Kolmogorov distribution Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2), x = (sqrt n + 0.12 +
    // 0.11 / sqrt n) D.
    const double x = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    if (x < 0.2) {
        p = 1.0;
    } else {
        for (int k = 1; k <= 100; ++k) {
            const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * x * x);
            p += term;
            if (std::abs(term) < 1e-12) break;
        }
    }
    return {d, std::clamp(p, 0.0, 1.0)};
}

double parseval_error(const TimeSeries& series, std::size_t segment_len, double overlap, Window window) {
    const PowerSpectrum s = welch_psd(series, segment_len, overlap, window);
    const double mean = std::accumulate(series.values.begin(), series.values.end(), 0.0) /
                        static_cast<double>(series.values.size());
    double var = 0.0;
    for (const double v : series.values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(series.values.size());
    const double total = std::accumulate(s.psd.begin(), s.psd.end(), 0.0) * s.resolution();
    return std::abs(total / var - 1.0);
}

}  // namespace qjump
