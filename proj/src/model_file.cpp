#include "hrc/model_file.hpp"

#include <set>

#include "hrc/error.hpp"

namespace hrc {

namespace {

Vec2 read_point(const json& j, std::string_view ctx) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ValidationError(std::string(ctx) + " must be [x, y]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::vector<ActionMotionModel> parse_model_set(std::string_view text) {
    const json doc = parse_json(text, "model file");
    check_header(doc, "hrc-motion-models", 1);
    const auto& actions = require_field(doc, "actions", "model file");
    if (!actions.is_array()) throw ValidationError("model file: 'actions' must be an array");
    std::vector<ActionMotionModel> out;
    std::set<std::string> seen;
    for (const auto& a : actions) {
        ActionMotionModel m;
        m.action_id = require_string(a, "action_id", "model");
        const std::string ctx = "model '" + m.action_id + "'";
        if (!seen.insert(m.action_id).second) throw ValidationError("duplicate " + ctx);
        const auto& axes = require_field(a, "axes", ctx);
        if (!axes.is_array() || axes.size() != kAxes) throw ValidationError(ctx + ": 'axes' needs two entries");
        for (int i = 0; i < kAxes; ++i) {
            const auto& c = axes[static_cast<std::size_t>(i)];
            m.axes[i] = {require_number(c, "D", ctx), require_number(c, "t0", ctx), require_number(c, "mu", ctx),
                         require_number(c, "sigma", ctx)};
        }
        if (a.contains("beta")) {
            const auto& beta = a["beta"];
            if (!beta.is_array() || beta.size() != kAxes) throw ValidationError(ctx + ": 'beta' needs two entries");
            for (int i = 0; i < kAxes; ++i) {
                const auto& b = beta[static_cast<std::size_t>(i)];
                m.beta[i] = {require_number(b, "S_t", ctx), require_number(b, "s_t", ctx), require_number(b, "S_D", ctx)};
            }
        }
        if (a.contains("start")) m.start_position = read_point(a["start"], ctx + " start");
        if (a.contains("goal")) m.goal_position = read_point(a["goal"], ctx + " goal");
        validate(m);
        out.push_back(std::move(m));
    }
    return out;
}

json to_json(const std::vector<ActionMotionModel>& models) {
    json actions = json::array();
    for (const auto& m : models) {
        json axes = json::array();
        json beta = json::array();
        for (int i = 0; i < kAxes; ++i) {
            const auto& c = m.axes[i];
            axes.push_back({{"D", c.D}, {"t0", c.t0}, {"mu", c.mu}, {"sigma", c.sigma}});
            const auto& b = m.beta[i];
            beta.push_back({{"S_t", b.S_t}, {"s_t", b.s_t}, {"S_D", b.S_D}});
        }
        actions.push_back({{"action_id", m.action_id},
                           {"axes", axes},
                           {"beta", beta},
                           {"start", {m.start_position.x, m.start_position.y}},
                           {"goal", {m.goal_position.x, m.goal_position.y}}});
    }
    return {{"format", "hrc-motion-models"}, {"version", 1}, {"actions", actions}};
}

const ActionMotionModel* find_model(const std::vector<ActionMotionModel>& models, std::string_view action_id) {
    for (const auto& m : models) {
        if (m.action_id == action_id) return &m;
    }
    return nullptr;
}

}  // namespace hrc
