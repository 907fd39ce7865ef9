#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hrc/geometry.hpp"

namespace hrc {

inline constexpr int kAxes = 2;

// One lognormal velocity stroke along a single axis.
struct LognormalComponent {
    double D = 0.0;      // amplitude (signed displacement)
    double t0 = 0.0;     // onset shift, s
    double mu = 0.0;     // log-time mean
    double sigma = 1.0;  // log-time standard deviation, > 0

    friend bool operator==(const LognormalComponent&, const LognormalComponent&) = default;
};

// Time scaling/shift and amplitude scaling applied on top of a nominal
// component: t0 -> S_t*t0 + s_t, mu -> mu + ln S_t, D -> S_D*D.
struct AdaptationParams {
    double S_t = 1.0;
    double s_t = 0.0;
    double S_D = 1.0;

    static constexpr AdaptationParams identity() { return {}; }
    friend bool operator==(const AdaptationParams&, const AdaptationParams&) = default;
};

// Parameter order used by every gradient over AdaptationParams.
enum BetaIndex : int { kScaleTime = 0, kShiftTime = 1, kScaleAmplitude = 2 };
// Parameter order used by gradients over LognormalComponent.
enum AlphaIndex : int { kAmplitude = 0, kOnset = 1, kLogMean = 2, kLogStd = 3 };

using BetaVector = std::array<double, 3>;
using AlphaVector = std::array<double, 4>;

struct ActionMotionModel {
    std::string action_id;
    std::array<LognormalComponent, kAxes> axes{};
    std::array<AdaptationParams, kAxes> beta{};
    Vec2 start_position{};
    Vec2 goal_position{};
};

// Throws ValidationError when sigma <= 0, S_t <= 0 or any field is non-finite.
void validate(const LognormalComponent& c);
void validate(const AdaptationParams& b);
void validate(const ActionMotionModel& m);

// Lognormal density of (t - t0); zero on t <= t0.
double lognormal_pdf(double t, double t0, double mu, double sigma);

// Component with the adaptation folded in.
LognormalComponent apply(const LognormalComponent& c, const AdaptationParams& b);

// Adaptation equivalent to applying `first` and then `second`.
AdaptationParams compose(const AdaptationParams& first, const AdaptationParams& second);

double axis_velocity(const LognormalComponent& c, const AdaptationParams& b, double t);
Vec2 velocity_at(const ActionMotionModel& m, double t);
double speed_at(const ActionMotionModel& m, double t);

// Closed-form integral of the velocity from the profile onset to t.
Vec2 displacement_at(const ActionMotionModel& m, double t);

// d v_axis / d beta at t, ordered by BetaIndex.
BetaVector beta_gradient(const LognormalComponent& c, const AdaptationParams& b, double t);
// d v_axis / d alpha at t, ordered by AlphaIndex.
AlphaVector alpha_gradient(const LognormalComponent& c, const AdaptationParams& b, double t);

struct SpeedPeak {
    double time = 0.0;
    double speed = 0.0;
};

// Global maximum of |v| located on the same grid completion_time scans.
SpeedPeak peak_speed(const ActionMotionModel& m, double t_start = 0.0);

/// Predicted end of the motion: the earliest time after the global speed peak
/// at which |v| drops below v_min. The scan starts at t_start (model time).
/// Throws DegenerateProfileError when the peak speed never reaches v_min.
double completion_time(const ActionMotionModel& m, double v_min, double t_start = 0.0);

struct TrajectorySample {
    double t = 0.0;
    Vec2 position{};
    Vec2 velocity{};
};

// Samples at t = 0, dt, 2dt, ... up to t_end. Positions are Euler-integrated
// from the clean velocity; reported velocities carry optional Gaussian noise.
// A non-positive t_end runs to 1.2x the completion time at 1% of peak speed.
std::vector<TrajectorySample> synthesize_trajectory(const ActionMotionModel& m, double dt,
                                                    double noise_std, std::uint64_t seed,
                                                    double t_end = -1.0);

}  // namespace hrc
