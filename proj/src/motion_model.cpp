#include "hrc/motion_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "hrc/error.hpp"

namespace hrc {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;
// Relative grid growth for the completion-time scan: step = kGridRatio * (t - onset).
constexpr double kGridRatio = 0.02;

struct ScanWindow {
    double onset = 0.0;  // earliest effective t0 of a moving axis
    double begin = 0.0;
    double min_step = 0.0;
    double mode_lo = 0.0;  // speed is monotone outside the span of axis modes
    double mode_hi = 0.0;
};

bool moving(const LognormalComponent& eff) { return eff.D != 0.0; }

ScanWindow scan_window(const ActionMotionModel& m, double t_start) {
    ScanWindow w;
    double onset = std::numeric_limits<double>::infinity();
    double fine = std::numeric_limits<double>::infinity();
    double mode_lo = std::numeric_limits<double>::infinity();
    double mode_hi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < kAxes; ++i) {
        const auto eff = apply(m.axes[i], m.beta[i]);
        if (!moving(eff)) continue;
        onset = std::min(onset, eff.t0);
        fine = std::min(fine, std::exp(eff.mu - 4.0 * eff.sigma));
        const double mode = eff.t0 + std::exp(eff.mu - eff.sigma * eff.sigma);
        mode_lo = std::min(mode_lo, mode);
        mode_hi = std::max(mode_hi, mode);
    }
    if (!std::isfinite(onset)) {
        throw DegenerateProfileError("velocity profile has zero amplitude on every axis");
    }
    w.onset = onset;
    w.begin = std::max(t_start, onset);
    w.min_step = kGridRatio * fine;
    w.mode_hi = std::max(mode_hi, w.begin);
    w.mode_lo = std::clamp(mode_lo, w.begin, w.mode_hi);
    return w;
}

double next_grid_time(const ScanWindow& w, double t) {
    return t + std::max(w.min_step, kGridRatio * (t - w.onset));
}

SpeedPeak grid_peak(const ActionMotionModel& m, const ScanWindow& w) {
    SpeedPeak best{w.mode_lo, speed_at(m, w.mode_lo)};
    for (double t = next_grid_time(w, w.mode_lo); t < w.mode_hi; t = next_grid_time(w, t)) {
        const double s = speed_at(m, t);
        if (s > best.speed) best = {t, s};
    }
    if (w.mode_hi > w.mode_lo) {
        const double s = speed_at(m, w.mode_hi);
        if (s > best.speed) best = {w.mode_hi, s};
    }
    return best;
}

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
}

}  // namespace

void validate(const LognormalComponent& c) {
    if (!std::isfinite(c.D) || !std::isfinite(c.t0) || !std::isfinite(c.mu) ||
        !std::isfinite(c.sigma)) {
        throw ValidationError("lognormal component has non-finite fields");
    }
    if (c.sigma <= 0.0) throw ValidationError("lognormal sigma must be positive");
}

void validate(const AdaptationParams& b) {
    if (!std::isfinite(b.S_t) || !std::isfinite(b.s_t) || !std::isfinite(b.S_D)) {
        throw ValidationError("adaptation parameters have non-finite fields");
    }
    if (b.S_t <= 0.0) throw ValidationError("time scaling S_t must be positive");
}

void validate(const ActionMotionModel& m) {
    for (int i = 0; i < kAxes; ++i) {
        validate(m.axes[i]);
        validate(m.beta[i]);
    }
    if (!finite(m.start_position) || !finite(m.goal_position)) {
        throw ValidationError("model positions must be finite");
    }
}

double lognormal_pdf(double t, double t0, double mu, double sigma) {
    if (!std::isfinite(t) || !std::isfinite(t0) || !std::isfinite(mu) || !std::isfinite(sigma)) {
        throw NumericError("lognormal_pdf called with non-finite input");
    }
    if (t <= t0) return 0.0;
    const double u = t - t0;
    const double z = (std::log(u) - mu) / sigma;
    return kInvSqrt2Pi / (sigma * u) * std::exp(-0.5 * z * z);
}

LognormalComponent apply(const LognormalComponent& c, const AdaptationParams& b) {
    return {b.S_D * c.D, b.S_t * c.t0 + b.s_t, c.mu + std::log(b.S_t), c.sigma};
}

AdaptationParams compose(const AdaptationParams& first, const AdaptationParams& second) {
    return {first.S_t * second.S_t, second.S_t * first.s_t + second.s_t, first.S_D * second.S_D};
}

double axis_velocity(const LognormalComponent& c, const AdaptationParams& b, double t) {
    const auto eff = apply(c, b);
    if (eff.D == 0.0) return 0.0;
    return eff.D * lognormal_pdf(t, eff.t0, eff.mu, eff.sigma);
}

Vec2 velocity_at(const ActionMotionModel& m, double t) {
    return {axis_velocity(m.axes[0], m.beta[0], t), axis_velocity(m.axes[1], m.beta[1], t)};
}

double speed_at(const ActionMotionModel& m, double t) { return velocity_at(m, t).norm(); }

Vec2 displacement_at(const ActionMotionModel& m, double t) {
    Vec2 d;
    for (int i = 0; i < kAxes; ++i) {
        const auto eff = apply(m.axes[i], m.beta[i]);
        if (t <= eff.t0) continue;
        const double z = (std::log(t - eff.t0) - eff.mu) / eff.sigma;
        d[i] = eff.D * 0.5 * std::erfc(-z / std::numbers::sqrt2);
    }
    return d;
}

BetaVector beta_gradient(const LognormalComponent& c, const AdaptationParams& b, double t) {
    const auto eff = apply(c, b);
    if (t <= eff.t0) return {0.0, 0.0, 0.0};
    const double u = t - eff.t0;
    const double z = (std::log(u) - eff.mu) / eff.sigma;
    const double pdf = kInvSqrt2Pi / (eff.sigma * u) * std::exp(-0.5 * z * z);
    const double d_onset = pdf * (1.0 + z / eff.sigma) / u;
    const double d_logmean = pdf * z / eff.sigma;
    return {eff.D * (d_onset * c.t0 + d_logmean / b.S_t), eff.D * d_onset, c.D * pdf};
}

AlphaVector alpha_gradient(const LognormalComponent& c, const AdaptationParams& b, double t) {
    const auto eff = apply(c, b);
    if (t <= eff.t0) return {0.0, 0.0, 0.0, 0.0};
    const double u = t - eff.t0;
    const double z = (std::log(u) - eff.mu) / eff.sigma;
    const double pdf = kInvSqrt2Pi / (eff.sigma * u) * std::exp(-0.5 * z * z);
    const double d_onset = pdf * (1.0 + z / eff.sigma) / u;
    const double d_logmean = pdf * z / eff.sigma;
    const double d_logstd = pdf * (z * z - 1.0) / eff.sigma;
    return {b.S_D * pdf, eff.D * d_onset * b.S_t, eff.D * d_logmean, eff.D * d_logstd};
}

SpeedPeak peak_speed(const ActionMotionModel& m, double t_start) {
    const auto w = scan_window(m, t_start);
    const auto best = grid_peak(m, w);
    check_finite(best.speed, "peak speed");
    return best;
}

double completion_time(const ActionMotionModel& m, double v_min, double t_start) {
    if (!(v_min > 0.0) || !std::isfinite(v_min)) {
        throw ValidationError("completion threshold v_min must be positive");
    }
    const auto w = scan_window(m, t_start);

    // Pass 1: global peak on the grid.
    const auto [peak_t, peak_s] = grid_peak(m, w);
    check_finite(peak_s, "peak speed");
    if (peak_s < v_min) {
        throw DegenerateProfileError("peak speed never exceeds the completion threshold");
    }

    // Pass 2: first grid point after the peak below threshold.
    double prev = peak_t;
    double t = next_grid_time(w, peak_t);
    constexpr int kMaxSteps = 1'000'000;
    int steps = 0;
    while (speed_at(m, t) >= v_min) {
        prev = t;
        t = next_grid_time(w, t);
        if (++steps > kMaxSteps) throw NumericError("completion-time scan did not terminate");
    }

    // Bisection on [prev, t]: speed(prev) >= v_min > speed(t).
    double lo = prev;
    double hi = t;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (speed_at(m, mid) >= v_min) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return hi;
}

std::vector<TrajectorySample> synthesize_trajectory(const ActionMotionModel& m, double dt,
                                                    double noise_std, std::uint64_t seed,
                                                    double t_end) {
    if (!(dt > 0.0)) throw ValidationError("trajectory time step must be positive");
    if (t_end <= 0.0) {
        const double v_min = 0.01 * peak_speed(m).speed;
        t_end = 1.2 * completion_time(m, v_min);
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::vector<TrajectorySample> out;
    out.reserve(static_cast<std::size_t>(t_end / dt) + 2);
    Vec2 position = m.start_position;
    for (std::size_t j = 0;; ++j) {
        const double t = static_cast<double>(j) * dt;
        if (t > t_end + 1e-12) break;
        const Vec2 v = velocity_at(m, t);
        Vec2 observed = v;
        if (noise_std > 0.0) {
            observed.x += noise_std * noise(rng);
            observed.y += noise_std * noise(rng);
        }
        out.push_back({t, position, observed});
        position += v * dt;
    }
    return out;
}

}  // namespace hrc
