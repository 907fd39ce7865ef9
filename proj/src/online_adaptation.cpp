#include "hrc/online_adaptation.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "hrc/error.hpp"

namespace hrc {

namespace {

constexpr int kTravelIntervals = 96;  // Simpson panels for the remaining-travel integral

double& beta_ref(AdaptationParams& b, int j) {
    switch (j) {
        case kScaleTime: return b.S_t;
        case kShiftTime: return b.s_t;
        default: return b.S_D;
    }
}

double beta_get(const AdaptationParams& b, int j) {
    return j == kScaleTime ? b.S_t : (j == kShiftTime ? b.s_t : b.S_D);
}

void clamp(AdaptationParams& b) { b.S_t = std::max(b.S_t, kMinTimeScale); }

double safe_completion(const ActionMotionModel& m, double v_min) {
    try {
        return completion_time(m, v_min);
    } catch (const DegenerateProfileError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

// Signed integral of |v_hat| from a to b.
double travel(const ActionMotionModel& m, double a, double b) {
    if (a == b) return 0.0;
    const double h = (b - a) / kTravelIntervals;
    double s = speed_at(m, a) + speed_at(m, b);
    for (int i = 1; i < kTravelIntervals; ++i) s += (i % 2 ? 4.0 : 2.0) * speed_at(m, a + i * h);
    return s * h / 3.0;
}

}  // namespace

BetaSet betas_of(const ActionMotionModel& m) { return m.beta; }

ActionMotionModel with_betas(ActionMotionModel m, const BetaSet& beta) {
    m.beta = beta;
    return m;
}

std::pair<ActionMotionModel, AdaptationStepReport> residual_update(const ActionMotionModel& model,
                                                                   const Observation& obs,
                                                                   const AxisBetaVectors& lambda, double v_min) {
    if (!std::isfinite(obs.t) || !finite(obs.v)) throw NumericError("non-finite observation");
    AdaptationStepReport rep;
    rep.beta_before = model.beta;
    ActionMotionModel out = model;
    for (int i = 0; i < kAxes; ++i) {
        const double v_hat = axis_velocity(model.axes[i], model.beta[i], obs.t);
        const double r = v_hat - obs.v[i];
        const auto g = beta_gradient(model.axes[i], model.beta[i], obs.t);
        rep.residual[i] = r;
        rep.grad_v[i] = g;
        for (int j = 0; j < 3; ++j) {
            if (lambda[i][j] < 0.0) throw ValidationError("damping must be nonnegative");
            const double denom = g[j] * g[j] + lambda[i][j];
            if (!(denom > 0.0) || std::isinf(denom)) continue;
            beta_ref(out.beta[i], j) -= r * g[j] / denom;
        }
        clamp(out.beta[i]);
    }
    rep.beta_after = out.beta;
    rep.t_hat_f = safe_completion(out, v_min);
    rep.overdue = !(rep.t_hat_f > obs.t);
    return {out, rep};
}

SceneTerms scene_objective(const ActionMotionModel& model, const SceneInfo& scene, const SceneWeights& w,
                           double v_min) {
    SceneTerms s;
    s.t_hat_f = completion_time(model, v_min);
    const double remaining = distance(scene.goal_position, scene.current_position);
    const double e1 = remaining - travel(model, scene.t_k, s.t_hat_f);
    s.J1 = e1 * e1;
    s.J2 = (scene.current_velocity - velocity_at(model, scene.t_k)).squared_norm();
    s.J3 = velocity_at(model, s.t_hat_f).squared_norm();
    s.K = w.gamma1 * s.J1 + w.gamma2 * s.J2 + w.gamma3 * s.J3;
    return s;
}

AxisBetaVectors scene_gradient(const ActionMotionModel& model, const SceneInfo& scene,
                               const SceneUpdateOptions& opts) {
    AxisBetaVectors grad{};
    for (int i = 0; i < kAxes; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double h = opts.fd_step * std::max(1.0, std::abs(beta_get(model.beta[i], j)));
            ActionMotionModel plus = model;
            ActionMotionModel minus = model;
            beta_ref(plus.beta[i], j) += h;
            beta_ref(minus.beta[i], j) -= h;
            const double kp = scene_objective(plus, scene, opts.weights, opts.v_min).K;
            const double km = scene_objective(minus, scene, opts.weights, opts.v_min).K;
            grad[i][j] = (kp - km) / (2.0 * h);
        }
    }
    return grad;
}

std::pair<ActionMotionModel, AdaptationStepReport> scene_update(const ActionMotionModel& model,
                                                                const SceneInfo& scene,
                                                                const SceneUpdateOptions& opts) {
    const auto& w = opts.weights;
    if (w.gamma1 < 0.0 || w.gamma2 < 0.0 || w.gamma3 < 0.0) throw ValidationError("scene weights must be nonnegative");
    AdaptationStepReport rep;
    rep.beta_before = model.beta;
    rep.scene = scene_objective(model, scene, w, opts.v_min);
    rep.t_hat_f = rep.scene.t_hat_f;
    ActionMotionModel out = model;

    if (rep.scene.K > 0.0) {
        rep.grad_K = scene_gradient(model, scene, opts);
        double scale = 1.0;
        for (int attempt = 0; attempt <= opts.max_backtracks; ++attempt, scale *= 10.0) {
            ActionMotionModel trial = model;
            for (int i = 0; i < kAxes; ++i) {
                for (int j = 0; j < 3; ++j) {
                    const double g = rep.grad_K[i][j];
                    const double denom = g * g + scale * opts.damping[i][j];
                    if (!(denom > 0.0) || std::isinf(denom)) continue;
                    beta_ref(trial.beta[i], j) -= rep.scene.K * g / denom;
                }
                clamp(trial.beta[i]);
            }
            SceneTerms terms;
            try {
                terms = scene_objective(trial, scene, w, opts.v_min);
            } catch (const DegenerateProfileError&) {
                ++rep.backtracks;
                continue;
            }
            if (terms.K <= rep.scene.K) {
                out = trial;
                rep.t_hat_f = terms.t_hat_f;
                break;
            }
            ++rep.backtracks;
        }
    }
    rep.beta_after = out.beta;
    rep.overdue = !(rep.t_hat_f > scene.t_k);
    return {out, rep};
}

double reanchor_stall(ActionMotionModel& model, const SceneInfo& scene, double v_min, double fraction) {
    if (!(fraction > 0.0)) return 0.0;
    const double path = distance(model.goal_position, model.start_position);
    const double remaining = distance(scene.goal_position, scene.current_position);
    if (!(remaining > fraction * path)) return 0.0;
    double tf = 0.0;
    try {
        tf = completion_time(model, v_min);
    } catch (const DegenerateProfileError&) {
        return 0.0;
    }
    if (tf > scene.t_k) return 0.0;

    // Travel from u to t_hat_f decreases in u; find u with travel == remaining.
    double onset = tf;
    for (int i = 0; i < kAxes; ++i) onset = std::min(onset, apply(model.axes[i], model.beta[i]).t0);
    onset = std::max(onset, 0.0);
    double lo = onset;
    double hi = tf;
    if (travel(model, lo, tf) <= remaining) {
        hi = lo;
    } else {
        for (int it = 0; it < 60 && hi - lo > 1e-6; ++it) {
            const double mid = 0.5 * (lo + hi);
            (travel(model, mid, tf) > remaining ? lo : hi) = mid;
        }
    }
    const double shift = scene.t_k - hi;
    if (!(shift > 0.0)) return 0.0;
    for (auto& b : model.beta) b.s_t += shift;
    return shift;
}

std::vector<ActionMotionModel> propagate_beta(std::vector<ActionMotionModel> models, const BetaSet& beta) {
    for (auto& m : models) m.beta = beta;
    return models;
}

AdaptationStream::AdaptationStream(ActionMotionModel model, AdaptationConfig config)
    : model_(std::move(model)), config_(config) {
    validate(model_);
}

const AdaptationStepReport& AdaptationStream::observe(const Observation& obs, const SceneInfo& scene) {
    auto [after_residual, r1] = residual_update(model_, obs, config_.residual_damping, config_.scene.v_min);
    AdaptationStepReport combined = r1;
    try {
        auto [after_scene, r2] = scene_update(after_residual, scene, config_.scene);
        model_ = std::move(after_scene);
        combined.grad_K = r2.grad_K;
        combined.scene = r2.scene;
        combined.t_hat_f = r2.t_hat_f;
        combined.overdue = r2.overdue;
        combined.backtracks = r2.backtracks;
    } catch (const DegenerateProfileError&) {
        // Residual step collapsed the profile; keep the previous model.
        combined.beta_after = model_.beta;
        combined.t_hat_f = std::numeric_limits<double>::quiet_NaN();
        combined.overdue = true;
        last_ = combined;
        has_last_ = true;
        trace_.push_back({obs.t, model_.beta, combined.scene, combined.t_hat_f});
        return last_;
    }
    combined.stall_shift = reanchor_stall(model_, scene, config_.scene.v_min, config_.stall_fraction);
    if (combined.stall_shift > 0.0) {
        try {
            combined.t_hat_f = completion_time(model_, config_.scene.v_min);
        } catch (const DegenerateProfileError&) {
            combined.t_hat_f = std::numeric_limits<double>::quiet_NaN();
        }
        combined.overdue = !(combined.t_hat_f > obs.t);
    }
    combined.beta_before = r1.beta_before;
    combined.beta_after = model_.beta;
    last_ = combined;
    has_last_ = true;
    trace_.push_back({obs.t, model_.beta, combined.scene, combined.t_hat_f});
    return last_;
}

std::string trace_csv(const std::vector<AdaptationTraceRow>& rows) {
    std::ostringstream out;
    out.precision(10);
    out << "t_k,S_t_x,s_t_x,S_D_x,S_t_y,s_t_y,S_D_y,K,J1,J2,J3,t_hat_f\n";
    for (const auto& r : rows) {
        out << r.t_k;
        for (const auto& b : r.beta) out << ',' << b.S_t << ',' << b.s_t << ',' << b.S_D;
        out << ',' << r.scene.K << ',' << r.scene.J1 << ',' << r.scene.J2 << ',' << r.scene.J3 << ',' << r.t_hat_f
            << '\n';
    }
    return out.str();
}

}  // namespace hrc
