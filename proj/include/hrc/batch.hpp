#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hrc/simulation.hpp"

namespace hrc {

inline constexpr int kBatchSchemaVersion = 1;

struct BatchOptions {
    std::vector<std::string> profiles{"efficient", "lazy", "slacking"};
    std::vector<PlannerKind> planners{PlannerKind::baseline, PlannerKind::robust};
    std::uint64_t seed = 0;  // episodes use seed, seed + 1, ...
    int n_seeds = 10;
    int jobs = 1;            // concurrent episodes
    PlannerSettings planner{};
    SimSettings sim{};
};

struct BatchRow {
    std::string profile;
    PlannerKind planner = PlannerKind::robust;
    std::uint64_t seed = 0;
    double completion_time = 0.0;
    bool watchdog = false;
    int plans = 0;
    std::vector<std::string> robot_actions;  // executed by the robot, task order
    double wall_seconds = 0.0;               // not part of the CSV
};

// Rows come back ordered by (profile, planner, seed) as listed in the options,
// regardless of which worker finished first.
std::vector<BatchRow> run_batch(const Scenario& scenario, const BatchOptions& opts);

// Per-episode CSV preceded by a "# hrc-batch v1" schema line.
std::string batch_csv(const std::vector<BatchRow>& rows);

struct BatchCell {
    std::string profile;
    PlannerKind planner = PlannerKind::robust;
    int episodes = 0;
    int flagged = 0;               // watchdog rows, excluded from the mean
    double mean_completion = 0.0;  // NaN when no unflagged episode
};

std::vector<BatchCell> summarize_batch(const std::vector<BatchRow>& rows, const BatchOptions& opts);
std::string summary_csv(const std::vector<BatchCell>& cells);
// Planner rows by profile columns, mean completion time in seconds.
std::string summary_table(const std::vector<BatchCell>& cells, const BatchOptions& opts);

}  // namespace hrc
