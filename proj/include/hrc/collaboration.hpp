#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "hrc/scenario.hpp"
#include "hrc/uncertainty.hpp"

namespace hrc {

enum class Indicator { none, human, robot };
std::string_view to_string(Indicator ind);  // "", "h", "r"

struct PlanRecord {
    double time = 0.0;
    std::string trigger;
    std::string current_action;  // empty when the human holds nothing
    bool human_absent = false;
    PlanningInstance instance;
    Assignment assignment;
    std::string robot_dispatch;  // empty when the robot was busy or got nothing
    int belief_failures = 0;
};

struct ActionRecord {
    std::string action_id;
    Agent agent = Agent::human;
    double start = 0.0;
    double end = 0.0;

    friend bool operator==(const ActionRecord&, const ActionRecord&) = default;
};

struct LogEvent {
    double time = 0.0;
    std::string kind;  // human_start, human_finish, human_abort, robot_start, robot_finish, plan, belief_fallback
    std::string action_id;
    std::string detail;

    friend bool operator==(const LogEvent&, const LogEvent&) = default;
};

/// The run-time loop shared by the simulator and the interactive session:
/// tracks task progress, adapts the current human action model from hand
/// velocity samples, turns the adaptation gradients into completion-time
/// beliefs, replans and dispatches the robot. Single-threaded.
class Coordinator {
public:
    Coordinator(const Scenario& scenario, PlannerSettings planner, std::uint64_t seed);

    const Scenario& scenario() const { return *scenario_; }
    const PlannerSettings& planner() const { return planner_; }
    double clock() const { return status_.clock; }
    const TaskStatus& status() const { return status_; }
    bool done() const { return status_.all_completed(); }

    // Advances the clock and the robot; completes the robot action and runs
    // periodic replans while the robot idles.
    void tick(double dt);

    // Human side. start/finish/abort replan immediately.
    bool can_human_start(std::size_t action, std::string* reason = nullptr) const;
    void human_start(std::size_t action);
    // t_local: seconds since the human started the current action.
    void human_observe(double t_local, Vec2 velocity, Vec2 object_position);
    void human_finish();
    void human_abort();
    std::optional<std::size_t> human_action() const { return human_; }
    double human_elapsed() const { return human_ ? status_.clock - human_started_ : 0.0; }

    std::optional<std::size_t> robot_action() const { return robot_; }
    double robot_progress() const;  // in [0, 1]

    void replan(const std::string& trigger);

    const std::vector<Indicator>& indicators() const { return indicators_; }
    const PlanRecord* last_plan() const { return plans_.empty() ? nullptr : &plans_.back(); }
    const std::vector<PlanRecord>& plans() const { return plans_; }
    const std::vector<ActionRecord>& actions() const { return records_; }
    const std::vector<LogEvent>& events() const { return events_; }
    const std::vector<BeliefLogRow>& belief_log() const { return belief_log_; }
    const std::vector<double>& solve_times_ms() const { return solve_ms_; }

    // Shared worker characteristics and the current covariance.
    const BetaSet& worker_beta() const { return worker_beta_; }
    ParameterDistribution distribution() const;
    // Adapted model of the current human action.
    const ActionMotionModel* current_model() const { return stream_ ? &stream_->model() : nullptr; }

private:
    struct WindowEntry {
        AxisBetaVectors residual_grad{};
        AxisBetaVectors grad_K{};
    };

    PlanningInstance build_instance(const std::vector<std::size_t>& horizon, bool absent, int& failures);
    void start_robot(std::size_t action);
    void log(const std::string& kind, const std::string& action, const std::string& detail = {});
    const std::string& id(std::size_t i) const { return scenario_->tree.actions()[i].id; }

    const Scenario* scenario_;
    PlannerSettings planner_;
    std::uint64_t seed_;
    TaskStatus status_;

    std::optional<std::size_t> human_;
    double human_started_ = 0.0;
    double human_idle_since_ = 0.0;
    std::optional<AdaptationStream> stream_;
    BetaSet worker_beta_{};
    std::deque<WindowEntry> window_;

    std::optional<std::size_t> robot_;
    double robot_elapsed_ = 0.0;
    double robot_started_ = 0.0;

    double last_plan_time_ = -1e300;
    std::uint64_t plan_count_ = 0;
    std::vector<Indicator> indicators_;
    std::vector<PlanRecord> plans_;
    std::vector<ActionRecord> records_;
    std::vector<LogEvent> events_;
    std::vector<BeliefLogRow> belief_log_;
    std::vector<double> solve_ms_;
};

// Deterministic per-event seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace hrc
