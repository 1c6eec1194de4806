#include "qjump/jumps.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "qjump/rk853.hpp"
#include "qjump/errors.hpp"
#include "qjump/parallel.hpp"
#include "qjump/rng.hpp"

namespace qjump {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDarkRate = 1e-14;

// Active-window bookkeeping: levels with population above kWindowFloor count as support;
// the window extends kWindowMargin levels beyond it, in blocks of kWindowBlock.
constexpr double kWindowFloor = 1e-18;
constexpr std::size_t kWindowMargin = 32;
constexpr std::size_t kWindowBlock = 16;

std::size_t support_top(std::span<const cplx> v) {
    std::size_t i = v.size();
    while (i > 0 && std::norm(v[i - 1]) <= kWindowFloor) --i;
    return i;
}

std::size_t round_up(std::size_t x, std::size_t block) { return (x + block - 1) / block * block; }

double squared_norm(std::span<const cplx> v) {
    const double* d = reinterpret_cast<const double*>(v.data());
    double s = 0.0;
    for (std::size_t i = 0; i < 2 * v.size(); ++i) s += d[i] * d[i];
    return s;
}

// Re <a|b>
double real_inner(std::span<const cplx> a, std::span<const cplx> b) {
    const double* x = reinterpret_cast<const double*>(a.data());
    const double* y = reinterpret_cast<const double*>(b.data());
    double s = 0.0;
    for (std::size_t i = 0; i < 2 * a.size(); ++i) s += x[i] * y[i];
    return s;
}

double tail_population(std::span<const cplx> v, double fraction = 0.05) {
    const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(v.size()))));
    double s = 0.0;
    for (std::size_t i = v.size() - count; i < v.size(); ++i) s += std::norm(v[i]);
    return s;
}

// Root of the cubic Hermite interpolant of the squared norm on [0, h], used as the first
// guess for the detection time.
double hermite_guess(double h, double n0, double d0, double n1, double d1, double target) {
    auto value = [&](double tau) {
        const double s = tau / h;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
        const double h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s);
        const double h11 = s * s * (s - 1);
        return h00 * n0 + h10 * h * d0 + h01 * n1 + h11 * h * d1 - target;
    };
    double lo = 0.0, hi = h;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (value(mid) > 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

void JumpSolverConfig::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw InvalidArgument("rel_tol and abs_tol must be positive");
    if (!(norm_bisect_tol > 0.0)) throw InvalidArgument("norm_bisect_tol must be positive");
    if (!(max_step > 0.0)) throw InvalidArgument("max_step must be positive");
    if (!(leakage_bound > 0.0)) throw InvalidArgument("leakage_bound must be positive");
    if (!(t_transient >= 0.0)) throw InvalidArgument("t_transient must be non-negative");
    if (!(t_record > 0.0)) throw InvalidArgument("t_record must be positive");
    if (!(fault_rate_scale > 0.0)) throw InvalidArgument("fault_rate_scale must be positive");
    if (!(sample_interval > 0.0)) throw InvalidArgument("sample_interval must be positive");
    const double per_period = kTwoPi / sample_interval;
    if (std::abs(per_period - std::round(per_period)) > 1e-9 * per_period) {
        throw InvalidArgument("sample_interval must divide the drive period 2*pi");
    }
}

std::size_t TrajectoryRecord::recorded_jump_count() const {
    return static_cast<std::size_t>(jump_times.end() -
                                    std::lower_bound(jump_times.begin(), jump_times.end(), t_record_start));
}

std::vector<double> TrajectoryRecord::recorded_jump_times() const {
    return {std::lower_bound(jump_times.begin(), jump_times.end(), t_record_start), jump_times.end()};
}

// ---------------------------------------------------------------------------
// DriftKernel

DriftKernel::DriftKernel(const HamiltonianParts& parts, const BandedOperator& lindblad)
    : dim_(parts.h_static.dim()), omega_(parts.drive_frequency) {
    if (parts.h_drive.dim() != dim_ || lindblad.dim() != dim_) {
        throw DimensionMismatch("Hamiltonian and Lindblad operator dimensions differ");
    }
    const BandedOperator decay = lindblad.adjoint() * lindblad;
    const BandedOperator generator = parts.h_static.scaled(cplx{0.0, -1.0}) + decay.scaled(-0.5);
    static_bands_ = collect(generator);
    drive_bands_ = collect(parts.h_drive.scaled(cplx{0.0, -1.0}));
    rate_diag_.assign(dim_, 0.0);
    const auto nz = decay.nonzero_offsets();
    if (std::any_of(nz.begin(), nz.end(), [](int k) { return k != 0; })) {
        throw InvalidArgument("DriftKernel requires a diagonal L^dag L");
    }
    if (!nz.empty()) {
        const auto d = decay.band(0);
        for (std::size_t i = 0; i < dim_; ++i) rate_diag_[i] = d[i].real();
    }
}

std::vector<DriftKernel::Band> DriftKernel::collect(const BandedOperator& op) {
    std::vector<Band> out;
    for (int k : op.nonzero_offsets()) {
        Band b{k, std::vector<double>(op.dim()), std::vector<double>(op.dim()), false, false};
        const auto src = op.band(k);
        for (std::size_t i = 0; i < op.dim(); ++i) {
            b.re[i] = src[i].real();
            b.im[i] = src[i].imag();
            b.has_re = b.has_re || b.re[i] != 0.0;
            b.has_im = b.has_im || b.im[i] != 0.0;
        }
        out.push_back(std::move(b));
    }
    return out;
}

void DriftKernel::accumulate(const Band& band, double scale, const double* x, double* y, int n) {
    const int k = band.offset;
    const int lo = std::max(0, -k);
    const int hi = std::min(n, n - k);
    const double* br = band.re.data();
    const double* bi = band.im.data();
    const double* xs = x + 2 * k;
    // Most bands of the generator are purely real or purely imaginary; skip the zero half.
    if (!band.has_im) {
        for (int i = lo; i < hi; ++i) {
            const double c = scale * br[i];
            y[2 * i] += c * xs[2 * i];
            y[2 * i + 1] += c * xs[2 * i + 1];
        }
    } else if (!band.has_re) {
        for (int i = lo; i < hi; ++i) {
            const double c = scale * bi[i];
            y[2 * i] -= c * xs[2 * i + 1];
            y[2 * i + 1] += c * xs[2 * i];
        }
    } else {
        for (int i = lo; i < hi; ++i) {
            const double xr = xs[2 * i];
            const double xi = xs[2 * i + 1];
            y[2 * i] += scale * (br[i] * xr - bi[i] * xi);
            y[2 * i + 1] += scale * (br[i] * xi + bi[i] * xr);
        }
    }
}

void DriftKernel::operator()(double t, std::span<const cplx> psi, std::span<cplx> out) const {
    const int n = static_cast<int>(psi.size());
    const double* x = reinterpret_cast<const double*>(psi.data());
    double* y = reinterpret_cast<double*>(out.data());
    std::fill(y, y + 2 * n, 0.0);
    for (const auto& b : static_bands_) accumulate(b, 1.0, x, y, n);
    const double c = std::cos(omega_ * t);
    if (c != 0.0) {
        for (const auto& b : drive_bands_) accumulate(b, c, x, y, n);
    }
}

double DriftKernel::emission_rate(std::span<const cplx> psi) const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += rate_diag_[i] * std::norm(psi[i]);
    return s;
}

// ---------------------------------------------------------------------------

StateVector effective_drift(const StateVector& state, double t, const HamiltonianParts& parts,
                            const BandedOperator& lindblad) {
    if (state.dim() != parts.h_static.dim() || state.dim() != lindblad.dim()) {
        throw DimensionMismatch("state and operator dimensions differ");
    }
    const std::size_t dim = state.dim();
    StateVector out(dim);
    parts.at(t).apply_add(cplx{0.0, -1.0}, state.amplitudes(), out.amplitudes());
    std::vector<cplx> lpsi(dim);
    lindblad.apply(state.amplitudes(), lpsi);
    lindblad.adjoint().apply_add(-0.5, lpsi, out.amplitudes());
    return out;
}

StateVector apply_jump(const StateVector& state, const BandedOperator& lindblad) {
    if (state.dim() != lindblad.dim()) throw DimensionMismatch("state and Lindblad operator dimensions differ");
    std::vector<cplx> out(state.dim());
    lindblad.apply(state.amplitudes(), out);
    const double rate = squared_norm(out) / state.norm2();
    if (!(rate >= kDarkRate)) {
        throw ContractViolation("jump requested from a dark state (<L^dag L> = " + std::to_string(rate) + ")");
    }
    StateVector s(std::move(out));
    s.normalize();
    return s;
}

// ---------------------------------------------------------------------------

TrajectoryRecord evolve_trajectory(const PhysicalParams& params, const JumpSolverConfig& cfg,
                                   const StateVector& init, std::uint64_t seed) {
    params.validate();
    cfg.validate();
    if (!init.is_normalized()) throw ContractViolation("initial state must be normalized");

    const std::size_t dim = init.dim();
    const HamiltonianParts parts = build_hamiltonian(params, dim);
    const BandedOperator lindblad = build_lindblad(params, dim);
    const Quadratures quad = build_quadratures(dim);
    const DriftKernel kernel(parts, lindblad);

    auto rhs = [&kernel](double t, std::span<const cplx> y, std::span<cplx> dy) { kernel(t, y, dy); };
    RungeKutta853<decltype(rhs)> integrator(dim, rhs, StepControl{cfg.rel_tol, cfg.abs_tol, cfg.max_step}, dim);
    Rng rng(seed);

    const auto per_period = static_cast<std::size_t>(std::llround(kTwoPi / cfg.sample_interval));
    const double dt = kTwoPi / static_cast<double>(per_period);
    const auto transient_samples = static_cast<std::size_t>(std::llround(cfg.t_transient * per_period));
    const auto total_samples = transient_samples + static_cast<std::size_t>(std::llround(cfg.t_record * per_period)) + 1;

    TrajectoryRecord rec;
    rec.seed = seed;
    rec.params = params;
    rec.config = cfg;
    rec.dim = dim;
    rec.sample_dt = dt;
    rec.record_start = transient_samples;
    rec.t_record_start = static_cast<double>(transient_samples) * dt;
    rec.t_end = static_cast<double>(total_samples - 1) * dt;
    rec.sample_times.reserve(total_samples);
    rec.q_mean.reserve(total_samples);
    rec.p_mean.reserve(total_samples);
    rec.n_mean.reserve(total_samples);

    StateVector state(init);
    std::vector<cplx> start(dim), start_rate(dim), trial(dim);
    const double scale = cfg.fault_rate_scale;

    auto record_sample = [&](std::size_t k) {
        const double dev = std::abs(state.norm2() - 1.0);
        rec.norm_deviation_max = std::max(rec.norm_deviation_max, dev);
        rec.sample_times.push_back(static_cast<double>(k) / static_cast<double>(per_period));
        rec.q_mean.push_back(expectation_real(state, quad.q));
        rec.p_mean.push_back(expectation_real(state, quad.p));
        rec.n_mean.push_back(std::max(0.0, expectation_real(state, quad.n)));
    };
    auto check_leakage = [&](double t) {
        const double leak = tail_population(state.amplitudes());
        rec.leakage_max = std::max(rec.leakage_max, leak);
        if (leak > cfg.leakage_bound) {
            throw LeakageError("tail population " + std::to_string(leak) + " exceeds bound at t = " + std::to_string(t), t,
                               leak);
        }
    };

    std::span<cplx> full = state.amplitudes();
    std::size_t window = dim;
    auto update_window = [&] {
        if (!cfg.adaptive_window) return;
        const std::size_t top = support_top(full.first(window));
        const std::size_t want = std::min(dim, round_up(top + kWindowMargin, kWindowBlock));
        if (want > window || want + 2 * kWindowBlock < window) {
            if (want < window) std::fill(full.begin() + static_cast<std::ptrdiff_t>(want),
                                         full.begin() + static_cast<std::ptrdiff_t>(window), cplx{});
            window = want;
            integrator.resize(window);
        }
    };

    // log of the squared norm accumulated since the last detection, and the detection
    // threshold log r.
    double log_decay = 0.0;
    double threshold = std::log(rng.uniform_open());
    double t = 0.0;
    std::size_t k = 0;
    double window_sum = 0.0;
    check_leakage(t);
    record_sample(k);
    update_window();

    while (k + 1 < total_samples) {
        const double t_target = static_cast<double>(k + 1) * dt;
        const std::span<cplx> psi = full.first(window);
        const std::span<cplx> psi_start(start.data(), window);
        const std::span<cplx> psi_rate(start_rate.data(), window);
        std::copy(psi.begin(), psi.end(), psi_start.begin());
        if (!integrator.primed()) integrator.prime(t, psi);
        const auto d0 = integrator.derivative();
        std::copy(d0.begin(), d0.end(), psi_rate.begin());

        const double h_limit = t_target - t;
        const double h = integrator.step(t, psi, h_limit);
        const double n1 = squared_norm(psi);
        if (!std::isfinite(n1)) throw NumericalError("non-finite state at t = " + std::to_string(t));
        const bool hits_target = (h == h_limit);
        window_sum += static_cast<double>(window);

        if (scale * (log_decay + std::log(n1)) <= threshold) {
            // Detection inside (t, t + h]: locate the time at which the squared norm equals
            // the threshold, re-integrating from the start of the step.
            const double target = std::exp(threshold / scale - log_decay);
            const double tol = cfg.norm_bisect_tol * std::exp(-log_decay);
            double tau = h;
            if (std::abs(n1 - target) > tol) {
                const std::span<cplx> psi_trial(trial.data(), window);
                const double slope0 = 2.0 * real_inner(psi_start, psi_rate);
                const double slope1 = 2.0 * real_inner(psi, integrator.derivative());
                double lo = 0.0, hi = h;
                double f_lo = 1.0 - target, f_hi = n1 - target;
                tau = hermite_guess(h, 1.0, slope0, n1, slope1, target);
                int side = 0;
                for (int iter = 0; iter < 200; ++iter) {
                    integrator.fixed_step(t, psi_start, psi_rate, tau, psi_trial);
                    const double f = squared_norm(psi_trial) - target;
                    if (std::abs(f) <= tol || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, t)) {
                        break;
                    }
                    // Illinois variant of regula falsi; the bracket shrinks monotonically.
                    if (f > 0.0) {
                        lo = tau;
                        f_lo = f;
                        if (side == -1) f_hi *= 0.5;
                        side = -1;
                    } else {
                        hi = tau;
                        f_hi = f;
                        if (side == 1) f_lo *= 0.5;
                        side = 1;
                    }
                    tau = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
                    if (!(tau > lo && tau < hi)) tau = 0.5 * (lo + hi);
                }
                std::copy(psi_trial.begin(), psi_trial.end(), psi.begin());
            }
            state = apply_jump(state, lindblad);
            full = state.amplitudes();
            integrator.invalidate();
            const double t_jump = t + tau;
            if (!rec.jump_times.empty() && !(t_jump > rec.jump_times.back())) {
                throw NumericalError("non-increasing detection time at t = " + std::to_string(t_jump));
            }
            rec.jump_times.push_back(t_jump);
            log_decay = 0.0;
            threshold = std::log(rng.uniform_open());
            t = (hits_target && tau == h) ? t_target : t_jump;
        } else {
            log_decay += std::log(n1);
            const double inv = 1.0 / std::sqrt(n1);
            for (auto& c : psi) c *= inv;
            integrator.scale_derivative(inv);
            t = hits_target ? t_target : t + h;
        }
        check_leakage(t);
        update_window();
        if (t == t_target) {
            ++k;
            record_sample(k);
        }
    }
    rec.steps_accepted = integrator.accepted_steps();
    rec.steps_rejected = integrator.rejected_steps();
    rec.mean_window = rec.steps_accepted ? window_sum / static_cast<double>(rec.steps_accepted) : 0.0;
    return rec;
}

std::vector<TrajectoryRecord> evolve_ensemble(const PhysicalParams& params, const JumpSolverConfig& cfg,
                                              const StateVector& init, std::uint64_t master_seed,
                                              std::size_t count, std::size_t jobs) {
    std::vector<TrajectoryRecord> out(count);
    const auto errors = parallel_for(count, jobs, [&](std::size_t i) {
        out[i] = evolve_trajectory(params, cfg, init, derive_seed(master_seed, i));
    });
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

}  // namespace qjump
