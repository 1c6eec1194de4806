#include "qjump/classical.hpp"

#include <cmath>
#include <string>

#include "qjump/errors.hpp"
#include "qjump/rng.hpp"

namespace qjump {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double restoring(const PhysicalParams& params, double u) { return params.sho_mode ? -u : u - u * u * u; }

double restoring_slope(const PhysicalParams& params, double u) { return params.sho_mode ? -1.0 : 1.0 - 3.0 * u * u; }

std::size_t steps_per(double interval, double step, const char* what) {
    const double ratio = interval / step;
    const double r = std::round(ratio);
    if (r < 1.0 || std::abs(ratio - r) > 1e-9 * ratio) {
        throw InvalidArgument(std::string(what) + " must be an integer multiple of the integration step");
    }
    return static_cast<std::size_t>(r);
}

}  // namespace

void ClassicalConfig::validate() const {
    if (!(step > 0.0)) throw InvalidArgument("step must be positive");
    if (!(t_transient >= 0.0)) throw InvalidArgument("t_transient must be non-negative");
    if (!(t_record > 0.0)) throw InvalidArgument("t_record must be positive");
    steps_per(sample_interval, step, "sample_interval");
    steps_per(kTwoPi, sample_interval, "drive period");
}

double default_noise_amp(const PhysicalParams& params) { return params.beta * std::sqrt(2.0 * params.gamma); }

PhasePoint classical_rhs(const PhysicalParams& params, double t, PhasePoint y) {
    return {y.v, restoring(params, y.u) - 2.0 * params.gamma * y.v - params.g * std::cos(t)};
}

PhasePoint rk4_step(const PhysicalParams& params, double t, PhasePoint y, double h) {
    const PhasePoint k1 = classical_rhs(params, t, y);
    const PhasePoint k2 = classical_rhs(params, t + 0.5 * h, {y.u + 0.5 * h * k1.u, y.v + 0.5 * h * k1.v});
    const PhasePoint k3 = classical_rhs(params, t + 0.5 * h, {y.u + 0.5 * h * k2.u, y.v + 0.5 * h * k2.v});
    const PhasePoint k4 = classical_rhs(params, t + h, {y.u + h * k3.u, y.v + h * k3.v});
    return {y.u + h / 6.0 * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
            y.v + h / 6.0 * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};
}

PhasePoint integrate_deterministic(const PhysicalParams& params, PhasePoint start, double t0, double t1, double step) {
    if (!(step > 0.0)) throw InvalidArgument("step must be positive");
    const double span = t1 - t0;
    const auto n = static_cast<std::size_t>(std::ceil(std::abs(span) / step - 1e-9));
    if (n == 0) return start;
    const double h = span / static_cast<double>(n);
    PhasePoint y = start;
    for (std::size_t i = 0; i < n; ++i) y = rk4_step(params, t0 + static_cast<double>(i) * h, y, h);
    return y;
}

ClassicalTrajectory integrate_langevin(const PhysicalParams& params, double noise_amp, const ClassicalConfig& cfg,
                                       std::uint64_t seed) {
    params.validate();
    cfg.validate();
    if (!(noise_amp >= 0.0)) throw InvalidArgument("noise_amp must be non-negative");

    const std::size_t per_sample = steps_per(cfg.sample_interval, cfg.step, "sample_interval");
    const std::size_t per_period = steps_per(kTwoPi, cfg.sample_interval, "drive period");
    const double h = cfg.sample_interval / static_cast<double>(per_sample);
    const auto transient = static_cast<std::size_t>(std::llround(cfg.t_transient * per_period));
    const auto recorded = static_cast<std::size_t>(std::llround(cfg.t_record * per_period));
    const double kick = noise_amp * std::sqrt(h);

    ClassicalTrajectory out;
    out.params = params;
    out.noise_amp = noise_amp;
    out.seed = seed;
    out.sample_dt = cfg.sample_interval;
    out.sample_times.reserve(recorded + 1);
    out.x.reserve(recorded + 1);
    out.v.reserve(recorded + 1);

    Rng rng(seed);
    PhasePoint y = cfg.start;
    std::size_t step_index = 0;
    for (std::size_t k = 0; k <= transient + recorded; ++k) {
        if (k >= transient) {
            if (!std::isfinite(y.u) || !std::isfinite(y.v)) {
                throw NumericalError("classical trajectory diverged near t = " + std::to_string(step_index * h));
            }
            out.sample_times.push_back(static_cast<double>(k) / static_cast<double>(per_period));
            out.x.push_back(y.u);
            out.v.push_back(y.v);
        }
        if (k == transient + recorded) break;
        for (std::size_t s = 0; s < per_sample; ++s, ++step_index) {
            y = rk4_step(params, static_cast<double>(step_index) * h, y, h);
            if (kick > 0.0) y.v += kick * rng.normal();
        }
        if (!std::isfinite(y.u) || !std::isfinite(y.v) || std::abs(y.u) > 1e6) {
            throw NumericalError("classical trajectory diverged near t = " + std::to_string(step_index * h));
        }
    }
    return out;
}

LyapunovResult lyapunov_exponent(const PhysicalParams& params, double t_total, double step, PhasePoint start) {
    params.validate();
    if (!(t_total > 0.0) || !(step > 0.0)) throw InvalidArgument("t_total and step must be positive");

    const auto per_period = static_cast<std::size_t>(std::ceil(kTwoPi / step - 1e-9));
    const double h = kTwoPi / static_cast<double>(per_period);
    const auto periods = static_cast<std::size_t>(std::floor(t_total / kTwoPi));
    if (periods < 10) throw InvalidArgument("t_total must cover at least 10 drive periods");
    const std::size_t skip = periods / 10;

    // Flow of (u, v) together with the tangent vector (du, dv).
    struct Tangent {
        PhasePoint y;
        PhasePoint d;
    };
    auto rhs = [&params](double t, const Tangent& s) {
        const PhasePoint fy = classical_rhs(params, t, s.y);
        const PhasePoint fd{s.d.v, restoring_slope(params, s.y.u) * s.d.u - 2.0 * params.gamma * s.d.v};
        return Tangent{fy, fd};
    };
    auto axpy = [](const Tangent& s, double a, const Tangent& k) {
        return Tangent{{s.y.u + a * k.y.u, s.y.v + a * k.y.v}, {s.d.u + a * k.d.u, s.d.v + a * k.d.v}};
    };

    Tangent s{start, {1.0, 0.0}};
    double sum = 0.0;
    std::vector<double> running;
    running.reserve(periods - skip);
    for (std::size_t p = 0; p < periods; ++p) {
        for (std::size_t i = 0; i < per_period; ++i) {
            const double t = (static_cast<double>(p * per_period + i)) * h;
            const Tangent k1 = rhs(t, s);
            const Tangent k2 = rhs(t + 0.5 * h, axpy(s, 0.5 * h, k1));
            const Tangent k3 = rhs(t + 0.5 * h, axpy(s, 0.5 * h, k2));
            const Tangent k4 = rhs(t + h, axpy(s, h, k3));
            s.y.u += h / 6.0 * (k1.y.u + 2 * k2.y.u + 2 * k3.y.u + k4.y.u);
            s.y.v += h / 6.0 * (k1.y.v + 2 * k2.y.v + 2 * k3.y.v + k4.y.v);
            s.d.u += h / 6.0 * (k1.d.u + 2 * k2.d.u + 2 * k3.d.u + k4.d.u);
            s.d.v += h / 6.0 * (k1.d.v + 2 * k2.d.v + 2 * k3.d.v + k4.d.v);
        }
        const double len = std::hypot(s.d.u, s.d.v);
        if (!std::isfinite(len) || len == 0.0 || !std::isfinite(s.y.u)) {
            throw NumericalError("tangent dynamics degenerated during Lyapunov estimate");
        }
        s.d.u /= len;
        s.d.v /= len;
        if (p >= skip) {
            sum += std::log(len);
            running.push_back(sum / (static_cast<double>(p - skip + 1) * kTwoPi));
        }
    }

    LyapunovResult r;
    r.exponent = running.back();
    const std::size_t half = running.size() / 2;
    double lo = running[half], hi = running[half];
    for (std::size_t i = half; i < running.size(); ++i) {
        lo = std::min(lo, running[i]);
        hi = std::max(hi, running[i]);
    }
    r.relative_fluctuation = (hi - lo) / std::max(std::abs(r.exponent), 1e-300);
    r.converged = r.relative_fluctuation <= 0.1;
    return r;
}

PhasePoint attractor_point(const PhysicalParams& params, double periods, PhasePoint start) {
    params.validate();
    const auto n = static_cast<std::size_t>(std::llround(periods));
    return integrate_deterministic(params, start, 0.0, static_cast<double>(n) * kTwoPi);
}

cplx coherent_amplitude(const PhysicalParams& params, PhasePoint point) {
    const double s = 1.0 / (params.beta * std::sqrt(2.0));
    return {point.u * s, point.v * s};
}

}  // namespace qjump
