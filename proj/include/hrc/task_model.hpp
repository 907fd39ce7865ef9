#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hrc {

enum class NodeKind { sequential, parallel, independent, action };

std::string_view to_string(NodeKind kind);

struct ActionSpec {
    std::string id;
    std::string motion;
    std::string object;
    double t_h_nominal = 0.0;  // empirical human duration, s
    double t_r_nominal = 0.0;  // robot duration, s
    bool human_capable = false;
    bool robot_capable = false;
    std::vector<std::string> conflicts;
};

struct TaskNode {
    NodeKind kind = NodeKind::action;
    std::string name;
    std::vector<TaskNode> children;    // empty iff kind == action
    std::optional<ActionSpec> action;  // present iff kind == action
};

/// Validated sequential/parallel/independent task hierarchy. Actions are
/// indexed by declaration order (depth-first, left to right); every ordering
/// the planner exposes follows that index.
class TaskTree {
public:
    explicit TaskTree(TaskNode root);

    // Parses and validates a task file (JSON). Throws ParseError on syntax
    // errors (with a line number) and ValidationError on invariant violations.
    static TaskTree parse(std::string_view text);

    const TaskNode& root() const { return root_; }
    const std::vector<ActionSpec>& actions() const { return actions_; }
    std::size_t size() const { return actions_.size(); }

    std::optional<std::size_t> index_of(std::string_view id) const;
    // Throws ValidationError for unknown ids.
    std::size_t require_index(std::string_view id) const;
    const ActionSpec& action(std::string_view id) const { return actions_[require_index(id)]; }

    bool conflict(std::size_t a, std::size_t b) const;
    // Actions that must be completed before `index` may start.
    const std::vector<std::size_t>& predecessors(std::size_t index) const {
        return predecessors_[index];
    }

private:
    TaskNode root_;
    std::vector<ActionSpec> actions_;
    std::vector<std::vector<std::size_t>> predecessors_;
    std::vector<std::vector<bool>> conflict_;
};

enum class Agent { human, robot };
enum class ActionState { pending, in_progress, completed };

std::string_view to_string(Agent agent);
std::string_view to_string(ActionState state);

struct ActionStatus {
    ActionState state = ActionState::pending;
    Agent agent = Agent::human;  // meaningful unless pending
};

/// Per-action execution state. Enforces one in-progress action per agent and
/// that completion never reverts.
class TaskStatus {
public:
    explicit TaskStatus(std::size_t n_actions = 0) : status_(n_actions) {}

    double clock = 0.0;

    std::size_t size() const { return status_.size(); }
    const ActionStatus& operator[](std::size_t i) const { return status_.at(i); }

    void start(std::size_t i, Agent agent);
    void complete(std::size_t i);
    // In-progress back to pending (an abandoned grab).
    void abort(std::size_t i);

    std::optional<std::size_t> in_progress_by(Agent agent) const;
    bool pending(std::size_t i) const { return status_.at(i).state == ActionState::pending; }
    bool completed(std::size_t i) const { return status_.at(i).state == ActionState::completed; }
    bool all_completed() const;

private:
    std::vector<ActionStatus> status_;
};

// Pending actions whose sequential predecessors are all completed, in
// declaration order.
std::vector<std::size_t> available_actions(const TaskTree& tree, const TaskStatus& status);

/// Planning horizon around the human's current action: available actions that
/// do not conflict with it or with any other in-progress action. Pass nullopt
/// when the human is not executing anything.
std::vector<std::size_t> parallel_actions(const TaskTree& tree, const TaskStatus& status,
                                          std::optional<std::size_t> current_human_action);

// Id-based convenience over the index form. Throws ValidationError when the
// id is not in the tree.
std::vector<std::string> parallel_actions(const TaskTree& tree, const TaskStatus& status,
                                          std::string_view current_human_action);

std::vector<std::string> ids_of(const TaskTree& tree, const std::vector<std::size_t>& indices);

}  // namespace hrc
