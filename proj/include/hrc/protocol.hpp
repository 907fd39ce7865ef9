#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hrc/geometry.hpp"
#include "hrc/json_io.hpp"

namespace hrc {

// Newline-delimited JSON frames; every frame carries "kind" and "version".
inline constexpr int kProtocolVersion = 1;

enum class InboundKind { pointer_move, button_down, button_up, start, reset, tick };
std::string_view to_string(InboundKind kind);

struct InboundMessage {
    InboundKind kind = InboundKind::pointer_move;
    Vec2 position{};
    double timestamp = 0.0;        // client seconds, nondecreasing per session
    std::string planner;           // start only; empty keeps the session default
    std::optional<std::uint64_t> seed;  // start only
    double dt = 0.0;               // tick only (replay files)
};

// Throws ParseError on malformed JSON, unknown kinds, wrong version or
// missing fields. Never returns a partially filled message.
InboundMessage decode_inbound(std::string_view line);
std::string encode(const InboundMessage& msg);

struct ObjectSnapshot {
    std::string action_id;
    Vec2 position{};
    std::string indicator;  // "h", "r" or ""
    std::string status;     // pending, in_progress, completed
    std::string agent;      // executing agent for in_progress/completed, else ""

    friend bool operator==(const ObjectSnapshot&, const ObjectSnapshot&) = default;
};

struct BeliefSnapshot {
    std::string action_id;
    double t_bar = 0.0;
    double sigma = 0.0;  // 3-sigma radius the planner used

    friend bool operator==(const BeliefSnapshot&, const BeliefSnapshot&) = default;
};

struct StateSnapshot {
    std::uint64_t seq = 0;
    double clock = 0.0;
    bool running = false;
    bool done = false;
    std::string planner;
    std::vector<ObjectSnapshot> objects;
    std::string human_action;
    std::string robot_action;
    double robot_progress = 0.0;
    double t0_bar = 0.0;
    double sigma_0 = 0.0;
    std::vector<BeliefSnapshot> beliefs;
    double t_plan = 0.0;

    friend bool operator==(const StateSnapshot&, const StateSnapshot&) = default;
};

json to_json(const StateSnapshot& s);
StateSnapshot snapshot_from_json(const json& j);
std::string encode(const StateSnapshot& s);
StateSnapshot decode_snapshot(std::string_view line);

std::string encode_error(std::string_view reason, std::string_view detail = {});

}  // namespace hrc
