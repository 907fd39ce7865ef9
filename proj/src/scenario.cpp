#include "hrc/scenario.hpp"

#include <algorithm>

#include "hrc/error.hpp"
#include "hrc/model_file.hpp"
#include "hrc/uncertainty.hpp"

namespace hrc {

namespace {

Vec2 point(const json& j, const std::string& ctx) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ValidationError(ctx + " must be [x, y]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

BetaVector triple(const json& j, const std::string& ctx) {
    if (!j.is_array() || j.size() != 3) throw ValidationError(ctx + " must have three numbers");
    BetaVector v{};
    for (std::size_t i = 0; i < 3; ++i) {
        if (!j[i].is_number()) throw ValidationError(ctx + " must have three numbers");
        v[i] = j[i].get<double>();
    }
    return v;
}

json triple_json(const BetaVector& v) { return json::array({v[0], v[1], v[2]}); }

template <class T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j[key].get<T>();
        } catch (const json::exception&) {
            throw ValidationError(std::string("field '") + key + "' has the wrong type");
        }
    }
}

ProfileSpec parse_profile(const std::string& name, const json& j) {
    ProfileSpec p;
    p.name = name;
    p.kind = parse_profile_kind(require_string(j, "kind", "profile '" + name + "'"));
    if (j.contains("scale_range")) {
        const auto& r = j["scale_range"];
        if (!r.is_array() || r.size() != 2) throw ValidationError("profile '" + name + "': scale_range needs 2 numbers");
        p.lazy_min = r[0].get<double>();
        p.lazy_max = r[1].get<double>();
    }
    if (!(p.lazy_min > 0.0) || p.lazy_max < p.lazy_min) {
        throw ValidationError("profile '" + name + "': scale_range must be positive and ordered");
    }
    if (j.contains("slack_windows")) {
        for (const auto& w : j["slack_windows"]) {
            if (!w.is_array() || w.size() != 2) throw ValidationError("profile '" + name + "': bad slack window");
            p.slack_windows.emplace_back(w[0].get<double>(), w[1].get<double>());
        }
    }
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : p.slack_windows) {
        if (!(a < b) || a < prev) throw ValidationError("profile '" + name + "': slack windows must be disjoint and ordered");
        prev = b;
    }
    return p;
}

}  // namespace

std::string_view to_string(ProfileKind kind) {
    switch (kind) {
        case ProfileKind::efficient: return "efficient";
        case ProfileKind::lazy: return "lazy";
        default: return "slacking";
    }
}

ProfileKind parse_profile_kind(std::string_view s) {
    if (s == "efficient") return ProfileKind::efficient;
    if (s == "lazy") return ProfileKind::lazy;
    if (s == "slacking") return ProfileKind::slacking;
    throw ValidationError("unknown profile kind '" + std::string(s) + "'");
}

const ProfileSpec& Scenario::profile(std::string_view name) const {
    for (const auto& p : profiles) {
        if (p.name == name) return p;
    }
    throw ConfigError("scenario has no profile '" + std::string(name) + "'");
}

double Scenario::nominal_duration_sum() const {
    double s = 0.0;
    for (const auto& a : tree.actions()) s += std::max(a.human_capable ? a.t_h_nominal : 0.0, a.robot_capable ? a.t_r_nominal : 0.0);
    return s;
}

Scenario make_scenario(TaskTree tree, std::vector<ActionMotionModel> models, std::vector<SceneObject> objects) {
    const auto n = tree.size();
    std::vector<std::optional<ActionMotionModel>> by_index(n);
    for (auto& m : models) {
        const auto idx = tree.index_of(m.action_id);
        if (!idx) throw ValidationError("model for unknown action '" + m.action_id + "'");
        by_index[*idx] = std::move(m);
    }
    std::vector<SceneObject> objs(n);
    std::vector<bool> placed(n, false);
    for (auto& o : objects) {
        const auto i = tree.require_index(o.action_id);
        if (placed[i]) throw ValidationError("duplicate object for action '" + o.action_id + "'");
        if (!(o.radius > 0.0) || !(o.area.half_size.x > 0.0) || !(o.area.half_size.y > 0.0)) {
            throw ValidationError("object '" + o.action_id + "' needs a positive radius and area");
        }
        placed[i] = true;
        objs[i] = std::move(o);
    }
    std::vector<double> v_min(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& spec = tree.actions()[i];
        if (!placed[i]) throw ValidationError("action '" + spec.id + "' has no object");
        auto& m = by_index[i];
        if (!spec.human_capable) continue;
        if (!m) throw ValidationError("human-capable action '" + spec.id + "' has no motion model");
        if (m->start_position == Vec2{} && m->goal_position == Vec2{}) {
            m->start_position = objs[i].start;
            m->goal_position = objs[i].area.center;
        }
        v_min[i] = default_threshold(*m);
        const double tf = completion_time(*m, v_min[i]);
        const Vec2 end = objs[i].start + displacement_at(*m, tf);
        if (!objs[i].area.contains(end)) {
            throw ValidationError("motion model of '" + spec.id + "' does not end inside its area");
        }
    }
    return Scenario{std::move(tree), std::move(by_index), std::move(v_min), std::move(objs), {}, {}, {}, {}, {}};
}

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
    const json doc = parse_json(text, "scenario file");
    check_header(doc, "hrc-scenario", 1);
    auto tree = TaskTree::parse(read_text_file(base_dir / require_string(doc, "task", "scenario")));
    auto models = parse_model_set(read_text_file(base_dir / require_string(doc, "models", "scenario")));
    std::vector<SceneObject> objects;
    const auto& objs = require_field(doc, "objects", "scenario");
    if (!objs.is_array()) throw ValidationError("scenario: 'objects' must be an array");
    for (const auto& o : objs) {
        SceneObject so;
        so.action_id = require_string(o, "action", "object");
        const std::string ctx = "object '" + so.action_id + "'";
        so.start = point(require_field(o, "start", ctx), ctx + " start");
        const auto& area = require_field(o, "area", ctx);
        so.area.center = point(require_field(area, "center", ctx), ctx + " area center");
        so.area.half_size = point(require_field(area, "half_size", ctx), ctx + " area half_size");
        if (o.contains("radius")) so.radius = require_number(o, "radius", ctx);
        objects.push_back(std::move(so));
    }
    Scenario sc = make_scenario(std::move(tree), std::move(models), std::move(objects));
    if (doc.contains("profiles")) {
        for (const auto& [name, p] : doc["profiles"].items()) sc.profiles.push_back(parse_profile(name, p));
    }
    sc.first_action = doc.value("first_action", std::string());
    if (!sc.first_action.empty()) {
        const auto i = sc.tree.require_index(sc.first_action);
        if (!sc.tree.actions()[i].human_capable) throw ValidationError("first_action must be human-capable");
    }
    if (doc.contains("sim")) sc.sim = sim_settings_from_json(doc["sim"]);
    if (doc.contains("planner")) sc.planner = planner_settings_from_json(doc["planner"]);
    if (doc.contains("adaptation")) sc.adaptation = adaptation_from_json(doc["adaptation"]);
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    return parse_scenario(read_text_file(path), path.parent_path());
}

json to_json(const PlannerSettings& p) {
    json j = {{"kind", to_string(p.kind)},
              {"epsilon", p.epsilon},
              {"samples", p.n_samples},
              {"g_unc", p.g_unc},
              {"w_unc", triple_json(p.w_unc)},
              {"gradient_window", p.gradient_window},
              {"idle_replan_period", p.idle_replan_period}};
    j["absence_timeout"] = std::isfinite(p.absence_timeout) ? json(p.absence_timeout) : json(nullptr);
    return j;
}

json to_json(const SimSettings& s) {
    return {{"dt", s.dt}, {"noise_fraction", s.noise_fraction}, {"watchdog_factor", s.watchdog_factor}};
}

json to_json(const AdaptationConfig& a) {
    const auto& w = a.scene.weights;
    return {{"residual_damping", triple_json(a.residual_damping[0])},
            {"scene_damping", triple_json(a.scene.damping[0])},
            {"weights", json::array({w.gamma1, w.gamma2, w.gamma3})},
            {"stall_fraction", a.stall_fraction}};
}

PlannerSettings planner_settings_from_json(const json& j, PlannerSettings p) {
    if (!j.is_object()) throw ValidationError("planner settings must be an object");
    if (j.contains("kind")) p.kind = parse_planner_kind(j["kind"].get<std::string>());
    read_if(j, "epsilon", p.epsilon);
    read_if(j, "samples", p.n_samples);
    read_if(j, "g_unc", p.g_unc);
    if (j.contains("w_unc")) p.w_unc = triple(j["w_unc"], "w_unc");
    read_if(j, "gradient_window", p.gradient_window);
    read_if(j, "idle_replan_period", p.idle_replan_period);
    if (j.contains("absence_timeout")) {
        p.absence_timeout = j["absence_timeout"].is_null() ? std::numeric_limits<double>::infinity()
                                                           : j["absence_timeout"].get<double>();
    }
    if (!(p.epsilon > 0.0 && p.epsilon < 1.0)) throw ValidationError("epsilon must lie in (0, 1)");
    if (p.n_samples < 2) throw ValidationError("samples must be at least 2");
    if (!(p.g_unc >= 0.0)) throw ValidationError("g_unc must be nonnegative");
    if (p.gradient_window < 1) throw ValidationError("gradient_window must be positive");
    if (!(p.idle_replan_period > 0.0)) throw ValidationError("idle_replan_period must be positive");
    if (!(p.absence_timeout > 0.0)) throw ValidationError("absence_timeout must be positive");
    return p;
}

SimSettings sim_settings_from_json(const json& j, SimSettings s) {
    if (!j.is_object()) throw ValidationError("sim settings must be an object");
    read_if(j, "dt", s.dt);
    read_if(j, "noise_fraction", s.noise_fraction);
    read_if(j, "watchdog_factor", s.watchdog_factor);
    if (!(s.dt > 0.0)) throw ValidationError("dt must be positive");
    if (!(s.noise_fraction >= 0.0)) throw ValidationError("noise_fraction must be nonnegative");
    if (!(s.watchdog_factor > 0.0)) throw ValidationError("watchdog_factor must be positive");
    return s;
}

AdaptationConfig adaptation_from_json(const json& j, AdaptationConfig a) {
    if (!j.is_object()) throw ValidationError("adaptation settings must be an object");
    if (j.contains("residual_damping")) {
        const auto v = triple(j["residual_damping"], "residual_damping");
        a.residual_damping = {v, v};
    }
    if (j.contains("scene_damping")) {
        const auto v = triple(j["scene_damping"], "scene_damping");
        a.scene.damping = {v, v};
    }
    if (j.contains("weights")) {
        const auto v = triple(j["weights"], "weights");
        a.scene.weights = {v[0], v[1], v[2]};
    }
    read_if(j, "stall_fraction", a.stall_fraction);
    if (!(a.stall_fraction >= 0.0 && a.stall_fraction < 1.0)) throw ValidationError("stall_fraction must lie in [0, 1)");
    for (const auto& axis : a.residual_damping) {
        for (double d : axis) {
            if (!(d >= 0.0)) throw ValidationError("damping must be nonnegative");
        }
    }
    return a;
}

}  // namespace hrc
