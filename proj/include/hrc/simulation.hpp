#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hrc/collaboration.hpp"

namespace hrc {

/// Scripted worker: ground-truth motion per action (nominal model with the
/// profile's time scale applied) and the windows during which the hand idles.
struct WorkerProfile {
    std::string name;
    ProfileKind kind = ProfileKind::efficient;
    std::vector<double> lazy_scale;  // by action index, 1 when not lazy
    std::vector<std::pair<double, double>> slack_windows;
    std::vector<std::optional<ActionMotionModel>> base_models;  // ground truth by action index

    bool slacking_at(double t) const;
};

// Lazy scales are drawn per human-capable action in index order from the seed.
WorkerProfile make_worker(const Scenario& scenario, const ProfileSpec& spec, std::uint64_t seed);

/// Picks the human's next action among available, human-capable actions that
/// do not clash with in-progress work: the plan's "h" actions first, then any
/// action not reserved for the robot, smallest nominal t_h wins (lowest index
/// on ties). Before the first plan the scenario's first action is preferred.
std::optional<std::size_t> human_action_sequencer(const Scenario& scenario, const TaskStatus& status,
                                                  const std::vector<Indicator>& indicators, bool have_plan);

struct PlanSummary {
    double time = 0.0;
    std::string trigger;
    std::string current_action;
    std::vector<std::string> horizon;
    std::string assignment;  // one 'h' or 'r' per horizon action
    double t_plan = 0.0;
    double protection = 0.0;
    double t0_bar = 0.0;
    double sigma_0 = 0.0;
    std::vector<double> t_h_bar;
    std::vector<double> sigma_h;
    std::string robot_dispatch;

    friend bool operator==(const PlanSummary&, const PlanSummary&) = default;
};

PlanSummary summarize(const PlanRecord& rec);

struct EpisodeMetrics {
    std::string profile;
    PlannerKind planner = PlannerKind::robust;
    std::uint64_t seed = 0;
    double completion_time = 0.0;  // clock at the last completion
    bool watchdog = false;
    std::string diagnostic;        // state dump when the watchdog fired
    std::vector<ActionRecord> actions;
    std::vector<PlanSummary> plans;
    std::vector<LogEvent> events;
    std::vector<BeliefLogRow> beliefs;
    std::vector<double> lazy_scale;
    // Wall-clock solve times; excluded from comparisons.
    std::vector<double> solve_times_ms;

    // Agent that executed an action, nullopt when it never completed.
    std::optional<Agent> executed_by(const std::string& action_id) const;
    // Deterministic content only (no solve times).
    bool same_outcome(const EpisodeMetrics& o) const;
};

/// Discrete-time episode: scripted hand + constant-rate robot around one
/// Coordinator.
class Simulation {
public:
    Simulation(const Scenario& scenario, const ProfileSpec& profile, PlannerSettings planner, SimSettings sim,
               std::uint64_t seed);

    // Starts the first human action; called by the first step() if needed.
    void begin();
    void step();
    bool done() const { return coord_.done(); }
    bool watchdog_expired() const { return coord_.clock() >= watchdog_limit_; }

    const Coordinator& coordinator() const { return coord_; }
    const WorkerProfile& worker() const { return worker_; }
    const std::vector<Vec2>& object_positions() const { return positions_; }
    Vec2 hand_position() const { return hand_; }
    double motion_time() const { return tau_; }
    double watchdog_limit() const { return watchdog_limit_; }

    EpisodeMetrics metrics() const;

private:
    void start_next_human();
    void update_robot_object();

    const Scenario* scenario_;
    SimSettings sim_;
    std::uint64_t seed_;
    WorkerProfile worker_;
    Coordinator coord_;
    std::mt19937_64 noise_rng_;
    std::normal_distribution<double> noise_{0.0, 1.0};

    std::vector<Vec2> positions_;
    Vec2 hand_{};
    double tau_ = 0.0;       // motion clock of the current human action
    double tf_true_ = 0.0;   // ground-truth completion of the current action
    double noise_std_ = 0.0;
    bool begun_ = false;
    double watchdog_limit_ = 0.0;
};

EpisodeMetrics run_episode(const Scenario& scenario, const std::string& profile, PlannerKind planner,
                           std::uint64_t seed);
EpisodeMetrics run_episode(const Scenario& scenario, const ProfileSpec& profile, PlannerSettings planner,
                           SimSettings sim, std::uint64_t seed);

json to_json(const EpisodeMetrics& m);
// Per-action rows: action_id,agent,start,end.
std::string actions_csv(const EpisodeMetrics& m);
std::string events_json_lines(const EpisodeMetrics& m);

}  // namespace hrc
