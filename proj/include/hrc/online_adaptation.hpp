#pragma once

#include <array>
#include <string>
#include <vector>

#include "hrc/motion_model.hpp"

namespace hrc {

using BetaSet = std::array<AdaptationParams, kAxes>;
using AxisBetaVectors = std::array<BetaVector, kAxes>;

constexpr AxisBetaVectors uniform_damping(double v) { return {{{v, v, v}, {v, v, v}}}; }

struct Observation {
    double t = 0.0;  // model time since the action started, s
    Vec2 v{};
};

struct SceneInfo {
    Vec2 goal_position{};
    Vec2 current_position{};
    Vec2 current_velocity{};
    double t_k = 0.0;
};

struct SceneWeights {
    double gamma1 = 1.0;   // distance-to-goal mismatch, per m^2
    double gamma2 = 1.0;   // velocity prediction error
    double gamma3 = 10.0;  // terminal velocity
};

struct SceneTerms {
    double J1 = 0.0;
    double J2 = 0.0;
    double J3 = 0.0;
    double K = 0.0;
    double t_hat_f = 0.0;
};

struct AdaptationStepReport {
    BetaSet beta_before{};
    BetaSet beta_after{};
    std::array<double, kAxes> residual{};  // v_hat - v per axis
    AxisBetaVectors grad_v{};              // d v_hat / d beta per axis
    AxisBetaVectors grad_K{};              // d K / d beta per axis
    SceneTerms scene{};
    double t_hat_f = 0.0;                  // NaN when the profile is degenerate
    bool overdue = false;                  // t_hat_f <= t_k
    int backtracks = 0;
    double stall_shift = 0.0;              // s_t added by reanchor_stall
};

// Lower clamp kept on S_t so ln S_t stays defined.
inline constexpr double kMinTimeScale = 1e-2;

BetaSet betas_of(const ActionMotionModel& m);
ActionMotionModel with_betas(ActionMotionModel m, const BetaSet& beta);

/// Damped per-parameter correction from one velocity sample:
/// beta_i -= (v_hat_i - v_i) * g ./ (g.^2 + lambda_i), g = d v_hat_i / d beta_i.
/// Infinite damping leaves beta unchanged. Throws NumericError on a
/// non-finite observation. v_min feeds the reported t_hat_f.
std::pair<ActionMotionModel, AdaptationStepReport> residual_update(const ActionMotionModel& model,
                                                                   const Observation& obs,
                                                                   const AxisBetaVectors& lambda, double v_min);

// K = g1*J1 + g2*J2 + g3*J3 evaluated at the model's current t_hat_f.
// J1 uses the signed remaining travel integral from t_k to t_hat_f.
SceneTerms scene_objective(const ActionMotionModel& model, const SceneInfo& scene, const SceneWeights& w,
                           double v_min);

struct SceneUpdateOptions {
    SceneWeights weights{};
    AxisBetaVectors damping = uniform_damping(1.0);
    double v_min = 1e-3;
    double fd_step = 1e-5;   // relative central-difference step over beta
    int max_backtracks = 30; // x10 on lambda' each time K would increase
};

// Central-difference gradient of K over both axes' beta.
AxisBetaVectors scene_gradient(const ActionMotionModel& model, const SceneInfo& scene, const SceneUpdateOptions& opts);

/// Descent step on K: beta_i -= K * dK ./ (dK.^2 + lambda'_i), with lambda'
/// scaled up until K does not increase (beta kept when no scale works).
/// Throws DegenerateProfileError when t_hat_f cannot be computed.
std::pair<ActionMotionModel, AdaptationStepReport> scene_update(const ActionMotionModel& model,
                                                                const SceneInfo& scene,
                                                                const SceneUpdateOptions& opts);

// Copies beta onto every model; nominal lognormal parameters untouched.
std::vector<ActionMotionModel> propagate_beta(std::vector<ActionMotionModel> models, const BetaSet& beta);

// Per-axis damping for (S_t, s_t, S_D). Small values make every sample
// apply a near-full correction to all three parameters at once.
inline constexpr BetaVector kDefaultResidualDamping{1.0, 10.0, 1.0};

/// When the model already predicts the end of the motion (t_hat_f <= t_k)
/// while more than `fraction` of the start-goal distance is left, shifts s_t
/// on both axes so the predicted remaining travel equals the remaining
/// distance. Returns the shift applied (0 when not triggered).
double reanchor_stall(ActionMotionModel& model, const SceneInfo& scene, double v_min, double fraction);

struct AdaptationConfig {
    AxisBetaVectors residual_damping{{kDefaultResidualDamping, kDefaultResidualDamping}};
    SceneUpdateOptions scene{};
    double stall_fraction = 0.03; // <= 0 disables reanchor_stall
};

struct AdaptationTraceRow {
    double t_k = 0.0;
    BetaSet beta{};
    SceneTerms scene{};
    double t_hat_f = 0.0;
};

/// Sequential adaptation of one action model from a stream of samples:
/// residual_update on each sample followed by scene_update.
class AdaptationStream {
public:
    AdaptationStream(ActionMotionModel model, AdaptationConfig config);

    // Runs both updates and returns the combined report: residual and grad_v
    // from the residual step, K terms and grad_K from the scene step.
    const AdaptationStepReport& observe(const Observation& obs, const SceneInfo& scene);

    const ActionMotionModel& model() const { return model_; }
    const std::vector<AdaptationTraceRow>& trace() const { return trace_; }
    const AdaptationStepReport* last() const { return has_last_ ? &last_ : nullptr; }

private:
    ActionMotionModel model_;
    AdaptationConfig config_;
    std::vector<AdaptationTraceRow> trace_;
    AdaptationStepReport last_{};
    bool has_last_ = false;
};

std::string trace_csv(const std::vector<AdaptationTraceRow>& rows);

}  // namespace hrc
