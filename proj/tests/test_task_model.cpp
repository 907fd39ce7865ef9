#include <algorithm>
#include <set>

#include "doctest.h"
#include "hrc/error.hpp"
#include "hrc/json_io.hpp"
#include "hrc/task_model.hpp"
#include "support.hpp"

using namespace hrc;

namespace {

TaskTree desktop() { return TaskTree::parse(read_text_file(test::data_dir() / "desktop_assembly.task.json")); }

std::string action_json(const std::string& id, const std::string& conflicts = "") {
    return R"({"kind":"action","name":")" + id + R"(","action":{"id":")" + id +
           R"(","t_h":1,"t_r":1,"human_capable":true,"robot_capable":true,"conflicts":[)" + conflicts + "]}}";
}

std::string task_doc(const std::string& root) { return R"({"format":"hrc-task","version":1,"root":)" + root + "}"; }

std::set<std::string> ids(const TaskTree& t, const std::vector<std::size_t>& v) {
    auto names = ids_of(t, v);
    return {names.begin(), names.end()};
}

// Walks the tree and checks every left sibling under every sequential
// ancestor of `target` is completed.
bool precedence_ok(const TaskNode& n, const std::string& target, const TaskTree& t, const TaskStatus& s,
                   std::vector<std::vector<const TaskNode*>>& blockers) {
    if (n.kind == NodeKind::action) return n.action->id == target;
    for (std::size_t c = 0; c < n.children.size(); ++c) {
        std::vector<const TaskNode*> left;
        if (n.kind == NodeKind::sequential) {
            for (std::size_t d = 0; d < c; ++d) left.push_back(&n.children[d]);
        }
        blockers.push_back(left);
        if (precedence_ok(n.children[c], target, t, s, blockers)) return true;
        blockers.pop_back();
    }
    return false;
}

bool subtree_done(const TaskNode& n, const TaskTree& t, const TaskStatus& s) {
    if (n.kind == NodeKind::action) return s.completed(t.require_index(n.action->id));
    return std::all_of(n.children.begin(), n.children.end(), [&](const TaskNode& c) { return subtree_done(c, t, s); });
}

}  // namespace

TEST_SUITE("task_model") {
    TEST_CASE("desktop tree structure") {
        const auto t = desktop();
        CHECK(t.root().kind == NodeKind::independent);
        CHECK(t.size() == 5);
        const TaskNode* body = nullptr;
        for (const auto& c : t.root().children) {
            if (c.name == "assemble main body") body = &c;
        }
        REQUIRE(body != nullptr);
        CHECK(body->kind == NodeKind::sequential);
        CHECK(body->children.front().kind == NodeKind::parallel);
        CHECK(body->children.front().name == "motherboard");
        CHECK(t.conflict(t.require_index("hood"), t.require_index("label")));
        CHECK_FALSE(t.action("hood").robot_capable);
    }

    TEST_CASE("single action tree") {
        const auto t = TaskTree::parse(task_doc(action_json("only")));
        CHECK(t.size() == 1);
        CHECK(t.root().kind == NodeKind::action);
        TaskStatus s(1);
        CHECK(ids(t, available_actions(t, s)) == std::set<std::string>{"only"});
    }

    TEST_CASE("conflicts must be symmetric") {
        const auto both = task_doc(R"({"kind":"independent","name":"r","children":[)" + action_json("a", "\"b\"") + "," +
                                   action_json("b", "\"a\"") + "]}");
        CHECK_NOTHROW(TaskTree::parse(both));
        const auto one = task_doc(R"({"kind":"independent","name":"r","children":[)" + action_json("a", "\"b\"") + "," +
                                  action_json("b") + "]}");
        CHECK_THROWS_AS(TaskTree::parse(one), ValidationError);
    }

    TEST_CASE("invalid task files") {
        CHECK_THROWS_AS(TaskTree::parse("{\"format\":\"hrc-task\",\n\"version\":1,\n\"root\": {"), ParseError);
        try {
            TaskTree::parse("{\"format\":\"hrc-task\",\n\"version\":1,\n\"root\": {");
        } catch (const ParseError& e) {
            CHECK(e.line() >= 3);
        }
        const auto dup = task_doc(R"({"kind":"parallel","name":"r","children":[)" + action_json("a") + "," +
                                  action_json("a") + "]}");
        CHECK_THROWS_AS(TaskTree::parse(dup), ValidationError);
        const auto nobody = task_doc(
            R"({"kind":"action","name":"x","action":{"id":"x","human_capable":false,"robot_capable":false}})");
        CHECK_THROWS_AS(TaskTree::parse(nobody), ValidationError);
    }

    TEST_CASE("available actions") {
        const auto t = desktop();
        TaskStatus s(t.size());
        CHECK(ids(t, available_actions(t, s)) == std::set<std::string>{"fan", "memory", "tape", "label"});
        for (auto id : {"fan", "memory", "tape", "label", "hood"}) {
            s.start(t.require_index(id), Agent::human);
            s.complete(t.require_index(id));
        }
        CHECK(available_actions(t, s).empty());

        const auto chain = TaskTree::parse(task_doc(R"({"kind":"sequential","name":"c","children":[)" +
                                                   action_json("a") + "," + action_json("b") + "," +
                                                   action_json("c") + "]}"));
        TaskStatus cs(3);
        cs.start(0, Agent::robot);
        cs.complete(0);
        CHECK(ids(chain, available_actions(chain, cs)) == std::set<std::string>{"b"});
    }

    TEST_CASE("hood opens after the motherboard") {
        const auto t = desktop();
        TaskStatus s(t.size());
        for (auto id : {"fan", "memory", "tape"}) {
            s.start(t.require_index(id), Agent::human);
            s.complete(t.require_index(id));
        }
        CHECK(ids(t, available_actions(t, s)) == std::set<std::string>{"label", "hood"});
    }

    TEST_CASE("parallel actions around the human action") {
        const auto t = desktop();
        TaskStatus s(t.size());
        s.start(t.require_index("fan"), Agent::human);
        CHECK(parallel_actions(t, s, "fan") == std::vector<std::string>{"label", "memory", "tape"});

        TaskStatus h(t.size());
        for (auto id : {"fan", "memory", "tape"}) {
            h.start(t.require_index(id), Agent::human);
            h.complete(t.require_index(id));
        }
        h.start(t.require_index("hood"), Agent::human);
        CHECK(parallel_actions(t, h, "hood").empty());

        TaskStatus last(t.size());
        for (auto id : {"fan", "memory", "tape", "label"}) {
            last.start(t.require_index(id), Agent::human);
            last.complete(t.require_index(id));
        }
        last.start(t.require_index("hood"), Agent::human);
        CHECK(parallel_actions(t, last, "hood").empty());
        CHECK_THROWS_AS(parallel_actions(t, last, "nothing"), ValidationError);
    }

    TEST_CASE("robot in progress excludes conflicting actions") {
        const auto t = desktop();
        TaskStatus s(t.size());
        for (auto id : {"fan", "memory", "tape"}) {
            s.start(t.require_index(id), Agent::human);
            s.complete(t.require_index(id));
        }
        s.start(t.require_index("label"), Agent::robot);
        CHECK(parallel_actions(t, s, std::nullopt).empty());
        CHECK(available_actions(t, s) == std::vector<std::size_t>{t.require_index("hood")});
    }

    TEST_CASE("status invariants") {
        TaskStatus s(3);
        s.start(0, Agent::human);
        CHECK_THROWS_AS(s.start(1, Agent::human), ValidationError);
        s.start(1, Agent::robot);
        CHECK(s.in_progress_by(Agent::robot) == 1u);
        s.complete(0);
        CHECK_THROWS_AS(s.start(0, Agent::human), ValidationError);
        CHECK_THROWS_AS(s.abort(0), ValidationError);
        s.abort(1);
        CHECK(s.pending(1));
        CHECK_FALSE(s.all_completed());
    }

    TEST_CASE("exhaustive precedence, conflict and monotonicity checks") {
        const auto t = desktop();
        const std::size_t n = t.size();
        // every assignment of {pending, completed} per action, plus each in-progress choice
        for (std::uint32_t done = 0; done < (1u << n); ++done) {
            TaskStatus s(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (done & (1u << i)) {
                    s.start(i, Agent::robot);
                    s.complete(i);
                }
            }
            const auto avail = available_actions(t, s);
            CHECK(avail == available_actions(t, s));
            CHECK(std::is_sorted(avail.begin(), avail.end()));
            for (auto a : avail) {
                std::vector<std::vector<const TaskNode*>> blockers;
                REQUIRE(precedence_ok(t.root(), t.actions()[a].id, t, s, blockers));
                for (const auto& level : blockers) {
                    for (const auto* b : level) CHECK(subtree_done(*b, t, s));
                }
            }
            for (std::size_t extra = 0; extra < n; ++extra) {
                if (!s.pending(extra)) continue;
                TaskStatus more(n);
                for (std::size_t i = 0; i < n; ++i) {
                    if (s.completed(i) || i == extra) {
                        more.start(i, Agent::robot);
                        more.complete(i);
                    }
                }
                const auto grown = available_actions(t, more);
                for (auto a : avail) {
                    if (a != extra) CHECK(std::find(grown.begin(), grown.end(), a) != grown.end());
                }
            }
            for (auto cur : avail) {
                TaskStatus busy = s;
                busy.start(cur, Agent::human);
                for (auto p : parallel_actions(t, busy, cur)) {
                    CHECK(p != cur);
                    CHECK_FALSE(t.conflict(p, cur));
                }
            }
        }
    }
}
