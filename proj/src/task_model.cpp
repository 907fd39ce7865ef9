#include "hrc/task_model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "hrc/error.hpp"
#include "hrc/json_io.hpp"

namespace hrc {

std::string_view to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::sequential: return "sequential";
        case NodeKind::parallel: return "parallel";
        case NodeKind::independent: return "independent";
        case NodeKind::action: return "action";
    }
    return "?";
}

std::string_view to_string(Agent agent) { return agent == Agent::human ? "human" : "robot"; }

std::string_view to_string(ActionState state) {
    switch (state) {
        case ActionState::pending: return "pending";
        case ActionState::in_progress: return "in_progress";
        case ActionState::completed: return "completed";
    }
    return "?";
}

namespace {

NodeKind parse_kind(const std::string& s) {
    if (s == "sequential") return NodeKind::sequential;
    if (s == "parallel") return NodeKind::parallel;
    if (s == "independent") return NodeKind::independent;
    if (s == "action") return NodeKind::action;
    throw ValidationError("unknown node kind '" + s + "'");
}

ActionSpec parse_action(const json& j) {
    ActionSpec a;
    a.id = require_string(j, "id", "action");
    const std::string ctx = "action '" + a.id + "'";
    a.motion = j.value("motion", std::string{});
    a.object = j.value("object", std::string{});
    a.human_capable = require_bool(j, "human_capable", ctx);
    a.robot_capable = require_bool(j, "robot_capable", ctx);
    a.t_h_nominal = j.contains("t_h") ? require_number(j, "t_h", ctx) : 0.0;
    a.t_r_nominal = j.contains("t_r") ? require_number(j, "t_r", ctx) : 0.0;
    if (j.contains("conflicts")) {
        const auto& c = j.at("conflicts");
        if (!c.is_array()) throw ValidationError(ctx + ": conflicts must be an array");
        for (const auto& id : c) {
            if (!id.is_string()) throw ValidationError(ctx + ": conflict ids must be strings");
            a.conflicts.push_back(id.get<std::string>());
        }
    }
    return a;
}

TaskNode parse_node(const json& j) {
    TaskNode node;
    node.kind = parse_kind(require_string(j, "kind", "task node"));
    node.name = j.value("name", std::string{});
    if (node.kind == NodeKind::action) {
        node.action = parse_action(require_field(j, "action", "action node"));
        if (node.name.empty()) node.name = node.action->id;
        if (j.contains("children")) throw ValidationError("action node '" + node.name + "' has children");
        return node;
    }
    const auto& children = require_field(j, "children", "task node '" + node.name + "'");
    if (!children.is_array()) throw ValidationError("children must be an array");
    for (const auto& c : children) node.children.push_back(parse_node(c));
    return node;
}

// Depth-first collection of actions with their sequential predecessors.
void collect(const TaskNode& node, std::vector<const ActionSpec*>& actions,
             std::vector<std::vector<std::size_t>>& preds, std::vector<std::size_t>& inherited) {
    if (node.kind == NodeKind::action) {
        if (!node.action) throw ValidationError("action node without action spec");
        if (!node.children.empty()) throw ValidationError("action node with children");
        actions.push_back(&*node.action);
        preds.push_back(inherited);
        return;
    }
    if (node.children.empty()) {
        throw ValidationError("internal node '" + node.name + "' has no children");
    }
    const std::size_t base = inherited.size();
    for (const auto& child : node.children) {
        const std::size_t first = actions.size();
        collect(child, actions, preds, inherited);
        if (node.kind == NodeKind::sequential) {
            // Everything under this child precedes later siblings.
            for (std::size_t i = first; i < actions.size(); ++i) inherited.push_back(i);
        }
    }
    inherited.resize(base);
}

}  // namespace

TaskTree::TaskTree(TaskNode root) : root_(std::move(root)) {
    std::vector<const ActionSpec*> ptrs;
    std::vector<std::size_t> inherited;
    collect(root_, ptrs, predecessors_, inherited);

    std::unordered_map<std::string, std::size_t> ids;
    for (const auto* a : ptrs) {
        if (a->id.empty()) throw ValidationError("action with empty id");
        if (!ids.emplace(a->id, actions_.size()).second) {
            throw ValidationError("duplicate action id '" + a->id + "'");
        }
        if (!a->human_capable && !a->robot_capable) {
            throw ValidationError("action '" + a->id + "' has no capable agent");
        }
        if (a->human_capable && !(a->t_h_nominal > 0.0 && std::isfinite(a->t_h_nominal))) {
            throw ValidationError("action '" + a->id + "': t_h must be positive for a human-capable action");
        }
        if (a->robot_capable && !(a->t_r_nominal > 0.0 && std::isfinite(a->t_r_nominal))) {
            throw ValidationError("action '" + a->id + "': t_r must be positive for a robot-capable action");
        }
        actions_.push_back(*a);
    }
    for (auto& p : predecessors_) std::sort(p.begin(), p.end());

    const std::size_t n = actions_.size();
    conflict_.assign(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& other : actions_[i].conflicts) {
            const auto it = ids.find(other);
            if (it == ids.end()) {
                throw ValidationError("action '" + actions_[i].id + "' conflicts with unknown action '" + other + "'");
            }
            if (it->second == i) throw ValidationError("action '" + other + "' conflicts with itself");
            conflict_[i][it->second] = true;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (conflict_[i][j] && !conflict_[j][i]) {
                throw ValidationError("asymmetric conflict: '" + actions_[i].id + "' lists '" + actions_[j].id +
                                      "' but not the reverse");
            }
        }
    }
}

TaskTree TaskTree::parse(std::string_view text) {
    const json doc = parse_json(text, "task file");
    check_header(doc, "hrc-task", 1);
    return TaskTree(parse_node(require_field(doc, "root", "task file")));
}

std::optional<std::size_t> TaskTree::index_of(std::string_view id) const {
    for (std::size_t i = 0; i < actions_.size(); ++i) {
        if (actions_[i].id == id) return i;
    }
    return std::nullopt;
}

std::size_t TaskTree::require_index(std::string_view id) const {
    if (auto i = index_of(id)) return *i;
    throw ValidationError("unknown action '" + std::string(id) + "'");
}

bool TaskTree::conflict(std::size_t a, std::size_t b) const { return conflict_.at(a).at(b); }

void TaskStatus::start(std::size_t i, Agent agent) {
    auto& s = status_.at(i);
    if (s.state != ActionState::pending) throw ValidationError("action is not pending");
    if (in_progress_by(agent)) throw ValidationError(std::string(to_string(agent)) + " is already busy");
    s = {ActionState::in_progress, agent};
}

void TaskStatus::complete(std::size_t i) {
    auto& s = status_.at(i);
    if (s.state != ActionState::in_progress) throw ValidationError("only in-progress actions can complete");
    s.state = ActionState::completed;
}

void TaskStatus::abort(std::size_t i) {
    auto& s = status_.at(i);
    if (s.state != ActionState::in_progress) throw ValidationError("only in-progress actions can be aborted");
    s = {};
}

std::optional<std::size_t> TaskStatus::in_progress_by(Agent agent) const {
    for (std::size_t i = 0; i < status_.size(); ++i) {
        if (status_[i].state == ActionState::in_progress && status_[i].agent == agent) return i;
    }
    return std::nullopt;
}

bool TaskStatus::all_completed() const {
    return std::all_of(status_.begin(), status_.end(),
                       [](const ActionStatus& s) { return s.state == ActionState::completed; });
}

std::vector<std::size_t> available_actions(const TaskTree& tree, const TaskStatus& status) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        if (!status.pending(i)) continue;
        const auto& preds = tree.predecessors(i);
        if (std::all_of(preds.begin(), preds.end(), [&](std::size_t p) { return status.completed(p); })) {
            out.push_back(i);
        }
    }
    return out;
}

std::vector<std::size_t> parallel_actions(const TaskTree& tree, const TaskStatus& status,
                                          std::optional<std::size_t> current_human_action) {
    std::vector<std::size_t> busy;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        if (status[i].state == ActionState::in_progress) busy.push_back(i);
    }
    if (current_human_action && *current_human_action >= tree.size()) {
        throw ValidationError("current human action is not in the tree");
    }
    std::vector<std::size_t> out;
    for (std::size_t i : available_actions(tree, status)) {
        if (current_human_action && (i == *current_human_action || tree.conflict(i, *current_human_action))) {
            continue;
        }
        if (std::any_of(busy.begin(), busy.end(), [&](std::size_t b) { return tree.conflict(i, b); })) continue;
        out.push_back(i);
    }
    return out;
}

std::vector<std::string> parallel_actions(const TaskTree& tree, const TaskStatus& status,
                                          std::string_view current_human_action) {
    return ids_of(tree, parallel_actions(tree, status, tree.require_index(current_human_action)));
}

std::vector<std::string> ids_of(const TaskTree& tree, const std::vector<std::size_t>& indices) {
    std::vector<std::string> ids;
    ids.reserve(indices.size());
    for (auto i : indices) ids.push_back(tree.actions().at(i).id);
    return ids;
}

}  // namespace hrc
