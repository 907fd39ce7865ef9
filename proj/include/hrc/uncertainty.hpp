#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hrc/online_adaptation.hpp"

namespace hrc {

// beta ~ N(mean, diag(cov_diag)) per axis.
struct ParameterDistribution {
    BetaSet mean{};
    AxisBetaVectors cov_diag{};
};

// cov_diag = w_unc .* |grad_v + grad_K| per axis. Throws NumericError on
// non-finite gradients and ValidationError on negative weights.
AxisBetaVectors build_covariance(const AxisBetaVectors& grad_v, const AxisBetaVectors& grad_K, const BetaVector& w_unc);

struct CompletionTimeBelief {
    double t_bar = 0.0;
    double sigma_t = 0.0;
    int n_samples = 0;
    int n_degenerate = 0;
    std::vector<double> samples;  // accepted samples, kept for diagnostics

    double radius() const { return 3.0 * sigma_t; }
};

// A model plus the speed threshold that defines its completion.
struct PredictionTarget {
    ActionMotionModel model;
    double v_min = 0.0;
};

// 1% of the speed peak of the model's nominal (identity-beta) profile.
double default_threshold(const ActionMotionModel& model);

inline constexpr double kSampleTruncation = 4.0;  // standard deviations

/// Draws n beta samples (truncated at +-4 std, S_t clamped to >= 1e-2),
/// evaluates completion_time for each and summarizes mean/std. Deterministic
/// given seed. Throws InvalidBeliefError when more than n/2 samples are
/// degenerate, ValidationError when n < 2.
CompletionTimeBelief sample_completion_times(const ActionMotionModel& model, const ParameterDistribution& dist,
                                             int n, double v_min, std::uint64_t seed);

// Beta draws shared by every target of one planning event.
std::vector<BetaSet> draw_betas(const ParameterDistribution& dist, int n, std::uint64_t seed);

struct HorizonBeliefs {
    CompletionTimeBelief current;  // remaining time of the current action
    std::vector<CompletionTimeBelief> horizon;
};

/// Beliefs for one planning event. The current action's samples are shifted
/// by the elapsed time and floored at 0; every future target is evaluated on
/// the same beta draws (the worker's shared characteristics).
HorizonBeliefs horizon_beliefs(const PredictionTarget& current, double elapsed,
                               const std::vector<PredictionTarget>& future, const ParameterDistribution& dist, int n,
                               std::uint64_t seed);

// Beliefs for future actions only (no current action).
std::vector<CompletionTimeBelief> future_beliefs(const std::vector<PredictionTarget>& future,
                                                 const ParameterDistribution& dist, int n, std::uint64_t seed);

struct BeliefLogRow {
    double event_time = 0.0;
    std::string action_id;
    double t_bar = 0.0;
    double sigma_t = 0.0;
    int n_degenerate = 0;
};

std::string belief_csv(const std::vector<BeliefLogRow>& rows);

}  // namespace hrc
