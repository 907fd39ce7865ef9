#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hrc/json_io.hpp"
#include "hrc/online_adaptation.hpp"
#include "hrc/robust_planner.hpp"
#include "hrc/task_model.hpp"

namespace hrc {

// Axis-aligned designated area.
struct Region {
    Vec2 center{};
    Vec2 half_size{};

    bool contains(Vec2 p) const {
        return std::abs(p.x - center.x) <= half_size.x && std::abs(p.y - center.y) <= half_size.y;
    }
};

struct SceneObject {
    std::string action_id;
    Vec2 start{};
    Region area{};
    double radius = 0.03;
};

enum class ProfileKind { efficient, lazy, slacking };
std::string_view to_string(ProfileKind kind);
ProfileKind parse_profile_kind(std::string_view s);

struct ProfileSpec {
    std::string name;
    ProfileKind kind = ProfileKind::efficient;
    double lazy_min = 2.0;  // S_t drawn per action from [lazy_min, lazy_max]
    double lazy_max = 3.0;
    std::vector<std::pair<double, double>> slack_windows;  // task-clock seconds
};

struct SimSettings {
    double dt = 0.01;
    double noise_fraction = 0.02;  // observation noise std over peak speed
    double watchdog_factor = 10.0; // times the sum of nominal durations
};

struct PlannerSettings {
    PlannerKind kind = PlannerKind::robust;
    double epsilon = 0.005;
    int n_samples = 200;
    double g_unc = 1.0;              // s per unit gradient
    BetaVector w_unc{1.0, 1.0, 1.0};
    int gradient_window = 25;        // samples averaged into the covariance
    double idle_replan_period = 0.5; // s between replans while the robot idles
    // Human without an action for this long is planned as absent (robot-capable
    // work only goes to the robot). Infinite disables it.
    double absence_timeout = std::numeric_limits<double>::infinity();
};

/// Everything one collaboration episode needs: the task, per-action nominal
/// motion models, the board layout and the default loop settings.
struct Scenario {
    TaskTree tree;
    std::vector<std::optional<ActionMotionModel>> models;  // by action index; empty for robot-only
    std::vector<double> v_min;                             // completion threshold per action
    std::vector<SceneObject> objects;                      // by action index
    std::vector<ProfileSpec> profiles;
    std::string first_action;
    SimSettings sim{};
    PlannerSettings planner{};
    AdaptationConfig adaptation{};

    const ProfileSpec& profile(std::string_view name) const;
    double nominal_duration_sum() const;
};

/// Scenario file (JSON, "hrc-scenario" v1). "task" and "models" are paths
/// relative to base_dir. Models lacking start/goal take them from the
/// object layout; every human-capable action needs a model whose motion ends
/// inside its area.
Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);

Scenario make_scenario(TaskTree tree, std::vector<ActionMotionModel> models, std::vector<SceneObject> objects);

json to_json(const PlannerSettings& p);
json to_json(const SimSettings& s);
json to_json(const AdaptationConfig& a);
// Each reader starts from `base` and overrides the fields present in j.
PlannerSettings planner_settings_from_json(const json& j, PlannerSettings base = {});
SimSettings sim_settings_from_json(const json& j, SimSettings base = {});
AdaptationConfig adaptation_from_json(const json& j, AdaptationConfig base = {});

}  // namespace hrc
