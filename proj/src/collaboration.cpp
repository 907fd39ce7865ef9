#include "hrc/collaboration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "hrc/error.hpp"

namespace hrc {

namespace {

constexpr double kTimeEps = 1e-9;

double point_estimate(const ActionMotionModel& m, double v_min, double fallback) {
    try {
        return completion_time(m, v_min);
    } catch (const DegenerateProfileError&) {
        return fallback;
    }
}

}  // namespace

std::string_view to_string(Indicator ind) {
    switch (ind) {
        case Indicator::human: return "h";
        case Indicator::robot: return "r";
        default: return "";
    }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Coordinator::Coordinator(const Scenario& scenario, PlannerSettings planner, std::uint64_t seed)
    : scenario_(&scenario),
      planner_(planner),
      seed_(seed),
      status_(scenario.tree.size()),
      indicators_(scenario.tree.size(), Indicator::none) {}

double Coordinator::robot_progress() const {
    if (!robot_) return 0.0;
    const double tr = scenario_->tree.actions()[*robot_].t_r_nominal;
    return std::clamp(robot_elapsed_ / tr, 0.0, 1.0);
}

void Coordinator::log(const std::string& kind, const std::string& action, const std::string& detail) {
    events_.push_back({status_.clock, kind, action, detail});
}

void Coordinator::tick(double dt) {
    if (!(dt > 0.0)) throw ValidationError("tick needs a positive dt");
    status_.clock += dt;
    if (robot_) {
        robot_elapsed_ += dt;
        if (robot_elapsed_ >= scenario_->tree.actions()[*robot_].t_r_nominal - kTimeEps) {
            const auto done_action = *robot_;
            status_.complete(done_action);
            records_.push_back({id(done_action), Agent::robot, robot_started_, status_.clock});
            indicators_[done_action] = Indicator::none;
            robot_.reset();
            log("robot_finish", id(done_action));
            if (!done()) replan("robot_finish");
            return;
        }
    }
    if (!robot_ && !done() && status_.clock - last_plan_time_ >= planner_.idle_replan_period - kTimeEps) {
        replan("idle");
    }
}

bool Coordinator::can_human_start(std::size_t action, std::string* reason) const {
    auto fail = [&](const char* why) {
        if (reason) *reason = why;
        return false;
    };
    if (action >= scenario_->tree.size()) return fail("unknown action");
    if (human_) return fail("human already holds an object");
    if (robot_ && *robot_ == action) return fail("robot is executing this action");
    if (status_.completed(action)) return fail("action already completed");
    if (!scenario_->tree.actions()[action].human_capable) return fail("action is robot-only");
    const auto avail = available_actions(scenario_->tree, status_);
    if (std::find(avail.begin(), avail.end(), action) == avail.end()) return fail("predecessors not completed");
    if (robot_ && scenario_->tree.conflict(action, *robot_)) return fail("conflicts with the robot's action");
    return true;
}

void Coordinator::human_start(std::size_t action) {
    std::string why;
    if (!can_human_start(action, &why)) throw ValidationError("cannot start '" + id(action) + "': " + why);
    status_.start(action, Agent::human);
    human_ = action;
    human_started_ = status_.clock;
    indicators_[action] = Indicator::human;
    AdaptationConfig cfg = scenario_->adaptation;
    cfg.scene.v_min = scenario_->v_min[action];
    stream_.emplace(with_betas(*scenario_->models[action], worker_beta_), cfg);
    log("human_start", id(action));
    replan("human_start");
}

void Coordinator::human_observe(double t_local, Vec2 velocity, Vec2 object_position) {
    if (!human_ || !stream_) return;
    const auto& nominal = *scenario_->models[*human_];
    const SceneInfo scene{nominal.goal_position, object_position, velocity, t_local};
    const auto& rep = stream_->observe({t_local, velocity}, scene);
    WindowEntry e;
    for (int i = 0; i < kAxes; ++i) {
        for (int j = 0; j < 3; ++j) e.residual_grad[i][j] = rep.residual[i] * rep.grad_v[i][j];
        e.grad_K[i] = rep.grad_K[i];
    }
    window_.push_back(e);
    while (window_.size() > static_cast<std::size_t>(planner_.gradient_window)) window_.pop_front();
    worker_beta_ = stream_->model().beta;
}

void Coordinator::human_finish() {
    if (!human_) throw ValidationError("human holds no action");
    const auto a = *human_;
    status_.complete(a);
    records_.push_back({id(a), Agent::human, human_started_, status_.clock});
    indicators_[a] = Indicator::none;
    human_.reset();
    stream_.reset();
    human_idle_since_ = status_.clock;
    log("human_finish", id(a));
    if (!done()) replan("human_finish");
}

void Coordinator::human_abort() {
    if (!human_) throw ValidationError("human holds no action");
    const auto a = *human_;
    status_.abort(a);
    indicators_[a] = Indicator::none;
    human_.reset();
    stream_.reset();
    human_idle_since_ = status_.clock;
    log("human_abort", id(a));
    replan("human_abort");
}

ParameterDistribution Coordinator::distribution() const {
    ParameterDistribution d;
    d.mean = stream_ ? stream_->model().beta : worker_beta_;
    if (window_.empty()) return d;
    AxisBetaVectors rg{};
    AxisBetaVectors gk{};
    for (const auto& e : window_) {
        for (int i = 0; i < kAxes; ++i) {
            for (int j = 0; j < 3; ++j) {
                rg[i][j] += e.residual_grad[i][j];
                gk[i][j] += e.grad_K[i][j];
            }
        }
    }
    const double n = static_cast<double>(window_.size());
    for (int i = 0; i < kAxes; ++i) {
        for (int j = 0; j < 3; ++j) {
            rg[i][j] /= n;
            gk[i][j] /= n;
        }
    }
    BetaVector w{};
    for (int j = 0; j < 3; ++j) w[j] = planner_.g_unc * planner_.w_unc[j];
    d.cov_diag = build_covariance(rg, gk, w);
    return d;
}

PlanningInstance Coordinator::build_instance(const std::vector<std::size_t>& horizon, bool absent, int& failures) {
    const auto& specs = scenario_->tree.actions();
    PlanningInstance inst;
    inst.epsilon = planner_.epsilon;
    for (auto i : horizon) {
        const auto& s = specs[i];
        inst.action_ids.push_back(s.id);
        inst.human_capable.push_back(s.human_capable && !(absent && s.robot_capable));
        inst.robot_capable.push_back(s.robot_capable);
        inst.t_r.push_back(s.robot_capable ? s.t_r_nominal : 0.0);
        inst.t_h_bar.push_back(0.0);
        inst.sigma_h.push_back(0.0);
    }

    if (planner_.kind == PlannerKind::baseline) {
        for (std::size_t k = 0; k < horizon.size(); ++k) {
            if (inst.human_capable[k]) inst.t_h_bar[k] = specs[horizon[k]].t_h_nominal;
        }
        if (human_) inst.t0_bar = std::max(0.0, specs[*human_].t_h_nominal - human_elapsed());
        return inst;
    }

    const auto dist = distribution();
    std::vector<std::size_t> slots;
    std::vector<PredictionTarget> future;
    for (std::size_t k = 0; k < horizon.size(); ++k) {
        if (!inst.human_capable[k]) continue;
        slots.push_back(k);
        future.push_back({with_betas(*scenario_->models[horizon[k]], dist.mean), scenario_->v_min[horizon[k]]});
    }
    const auto seed = mix_seed(seed_, plan_count_);
    const double now = status_.clock;
    auto log_belief = [&](const std::string& action, const CompletionTimeBelief& b) {
        belief_log_.push_back({now, action, b.t_bar, b.sigma_t, b.n_degenerate});
    };
    auto point_fill = [&]() {
        for (std::size_t s = 0; s < slots.size(); ++s) {
            inst.t_h_bar[slots[s]] = point_estimate(future[s].model, future[s].v_min, specs[horizon[slots[s]]].t_h_nominal);
        }
    };
    try {
        std::vector<CompletionTimeBelief> beliefs;
        if (human_) {
            const PredictionTarget current{stream_->model(), scenario_->v_min[*human_]};
            auto hb = horizon_beliefs(current, human_elapsed(), future, dist, planner_.n_samples, seed);
            inst.t0_bar = hb.current.t_bar;
            inst.sigma_0 = hb.current.radius();
            log_belief(id(*human_), hb.current);
            beliefs = std::move(hb.horizon);
        } else if (!future.empty()) {
            beliefs = future_beliefs(future, dist, planner_.n_samples, seed);
        }
        for (std::size_t s = 0; s < beliefs.size(); ++s) {
            inst.t_h_bar[slots[s]] = beliefs[s].t_bar;
            inst.sigma_h[slots[s]] = beliefs[s].radius();
            log_belief(inst.action_ids[slots[s]], beliefs[s]);
        }
    } catch (const InvalidBeliefError& e) {
        ++failures;
        log("belief_fallback", human_ ? id(*human_) : std::string(), e.what());
        inst.sigma_0 = 0.0;
        for (auto& s : inst.sigma_h) s = 0.0;
        inst.t0_bar = human_ ? std::max(0.0, point_estimate(stream_->model(), scenario_->v_min[*human_],
                                                            specs[*human_].t_h_nominal) - human_elapsed())
                             : 0.0;
        point_fill();
    }
    return inst;
}

void Coordinator::start_robot(std::size_t action) {
    status_.start(action, Agent::robot);
    robot_ = action;
    robot_elapsed_ = 0.0;
    robot_started_ = status_.clock;
    indicators_[action] = Indicator::robot;
    log("robot_start", id(action));
}

void Coordinator::replan(const std::string& trigger) {
    last_plan_time_ = status_.clock;
    const auto horizon = parallel_actions(scenario_->tree, status_, human_);
    for (std::size_t i = 0; i < indicators_.size(); ++i) {
        if (status_.pending(i)) indicators_[i] = Indicator::none;
    }
    if (horizon.empty()) return;

    PlanRecord rec;
    rec.time = status_.clock;
    rec.trigger = trigger;
    rec.current_action = human_ ? id(*human_) : std::string();
    rec.human_absent = !human_ && status_.clock - human_idle_since_ >= planner_.absence_timeout;
    rec.instance = build_instance(horizon, rec.human_absent, rec.belief_failures);
    ++plan_count_;

    const auto t0 = std::chrono::steady_clock::now();
    rec.assignment = solve(planner_.kind, rec.instance);
    solve_ms_.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());

    for (std::size_t k = 0; k < horizon.size(); ++k) {
        indicators_[horizon[k]] = rec.assignment.x_r[k] ? Indicator::robot : Indicator::human;
    }
    if (!robot_) {
        if (const auto pick = select_robot_action(rec.assignment, rec.instance)) {
            rec.robot_dispatch = rec.instance.action_ids[*pick];
            start_robot(horizon[*pick]);
        }
    }
    log("plan", rec.current_action, trigger);
    plans_.push_back(std::move(rec));
}

}  // namespace hrc
