#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "hrc/motion_model.hpp"

namespace hrc {

struct VelocitySample {
    double t = 0.0;
    Vec2 v{};
};

struct Trajectory {
    std::string trajectory_id;
    std::string action_id;
    std::string subject_id;
    std::vector<VelocitySample> samples;
};

struct TrajectoryCorpus {
    std::vector<Trajectory> trajectories;
};

inline constexpr std::size_t kMinSamplesPerTrajectory = 8;

// Nonempty, time-ordered, at least kMinSamplesPerTrajectory samples each.
void validate(const TrajectoryCorpus& corpus);

using AxisComponents = std::array<LognormalComponent, kAxes>;

struct FitOptions {
    int max_iterations = 500;
    double tolerance = 1e-8;       // relative residual change at exit
    double initial_damping = 1e-3; // times the mean diagonal of J^T J
    double min_sigma = 1e-3;
    // An axis whose mean net displacement is at most this fraction of the
    // other axis's is taken as still: D = 0, timing copied from the other axis.
    double still_axis_ratio = 0.02;
};

struct AxisFit {
    LognormalComponent alpha;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> accepted_residuals;  // S after each accepted step, starting with S(init)
};

struct FitResult {
    AxisComponents alpha{};
    double residual = 0.0;  // S(alpha*) summed over axes
    int iterations = 0;     // max over axes
    bool converged = false;
    std::array<AxisFit, kAxes> axes{};
};

// S(alpha) = sum over trajectories and samples of |v_j - v_hat(t_j)|^2.
double fit_residual(const TrajectoryCorpus& corpus, const AxisComponents& alpha);

/// Levenberg-Marquardt fit of the nominal per-axis lognormal parameters.
/// Each axis is an independent 4-parameter problem. Damping starts at
/// initial_damping * mean(diag(J^T J)), grows x10 on rejected steps and
/// shrinks /10 on accepted ones. sigma >= min_sigma and t0 >= 0 are enforced
/// by projection. A still axis (see FitOptions) is not iterated. Throws SingularSystemError / NumericError.
FitResult fit_nominal(const TrajectoryCorpus& corpus, const AxisComponents& init, const FitOptions& opts = {});

// Net displacement per axis, averaged over trajectories (trapezoid rule).
Vec2 mean_displacement(const TrajectoryCorpus& corpus);

// Moment heuristic with sigma = 0.4: t0 and mu are chosen so that profile
// peaks at the observed peak time and crosses 5% of the peak at the observed
// onset; D from the per-axis displacement. Throws ValidationError on an
// all-zero corpus.
AxisComponents default_init(const TrajectoryCorpus& corpus);

/// CSV with a header naming at least trajectory_id, t, vx, vy; optional
/// action_id and subject_id columns. Rows of one trajectory must be contiguous.
TrajectoryCorpus parse_corpus_csv(std::string_view text);
std::string to_csv(const TrajectoryCorpus& corpus);

}  // namespace hrc
