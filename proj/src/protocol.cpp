#include "hrc/protocol.hpp"

#include <cmath>

#include "hrc/error.hpp"

namespace hrc {

namespace {

InboundKind parse_kind(const std::string& s) {
    if (s == "pointer_move") return InboundKind::pointer_move;
    if (s == "button_down") return InboundKind::button_down;
    if (s == "button_up") return InboundKind::button_up;
    if (s == "start") return InboundKind::start;
    if (s == "reset") return InboundKind::reset;
    if (s == "tick") return InboundKind::tick;
    throw ParseError("unknown frame kind '" + s + "'");
}

double number(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) throw ParseError(std::string("frame field '") + key + "' must be a number");
    const double v = it->get<double>();
    if (!std::isfinite(v)) throw ParseError(std::string("frame field '") + key + "' must be finite");
    return v;
}

Vec2 point(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
        throw ParseError(std::string("frame field '") + key + "' must be [x, y]");
    }
    return {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

json point_json(Vec2 p) { return json::array({p.x, p.y}); }

}  // namespace

std::string_view to_string(InboundKind kind) {
    switch (kind) {
        case InboundKind::pointer_move: return "pointer_move";
        case InboundKind::button_down: return "button_down";
        case InboundKind::button_up: return "button_up";
        case InboundKind::start: return "start";
        case InboundKind::reset: return "reset";
        default: return "tick";
    }
}

InboundMessage decode_inbound(std::string_view line) {
    json j;
    try {
        j = json::parse(line.begin(), line.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed frame: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("frame must be a JSON object");
    if (!j.contains("kind") || !j["kind"].is_string()) throw ParseError("frame lacks a string 'kind'");
    if (!j.contains("version") || !j["version"].is_number_integer()) throw ParseError("frame lacks an integer 'version'");
    if (j["version"].get<int>() != kProtocolVersion) {
        throw ParseError("unsupported protocol version " + std::to_string(j["version"].get<int>()));
    }
    InboundMessage m;
    m.kind = parse_kind(j["kind"].get<std::string>());
    switch (m.kind) {
        case InboundKind::pointer_move:
        case InboundKind::button_down:
        case InboundKind::button_up:
            m.position = point(j, "position");
            m.timestamp = number(j, "timestamp");
            break;
        case InboundKind::start:
            if (j.contains("planner")) {
                if (!j["planner"].is_string()) throw ParseError("frame field 'planner' must be a string");
                m.planner = j["planner"].get<std::string>();
            }
            if (j.contains("seed")) {
                if (!j["seed"].is_number_unsigned()) throw ParseError("frame field 'seed' must be a nonnegative integer");
                m.seed = j["seed"].get<std::uint64_t>();
            }
            if (j.contains("timestamp")) m.timestamp = number(j, "timestamp");
            break;
        case InboundKind::reset:
            if (j.contains("timestamp")) m.timestamp = number(j, "timestamp");
            break;
        case InboundKind::tick:
            m.dt = number(j, "dt");
            if (!(m.dt > 0.0)) throw ParseError("tick dt must be positive");
            break;
    }
    return m;
}

std::string encode(const InboundMessage& m) {
    json j = {{"kind", to_string(m.kind)}, {"version", kProtocolVersion}};
    switch (m.kind) {
        case InboundKind::pointer_move:
        case InboundKind::button_down:
        case InboundKind::button_up:
            j["position"] = point_json(m.position);
            j["timestamp"] = m.timestamp;
            break;
        case InboundKind::start:
            if (!m.planner.empty()) j["planner"] = m.planner;
            if (m.seed) j["seed"] = *m.seed;
            break;
        case InboundKind::reset: break;
        case InboundKind::tick: j["dt"] = m.dt; break;
    }
    return j.dump();
}

json to_json(const StateSnapshot& s) {
    json objects = json::array();
    for (const auto& o : s.objects) {
        objects.push_back({{"action_id", o.action_id},
                           {"position", point_json(o.position)},
                           {"indicator", o.indicator},
                           {"status", o.status},
                           {"agent", o.agent}});
    }
    json beliefs = json::array();
    for (const auto& b : s.beliefs) beliefs.push_back({{"action_id", b.action_id}, {"t_bar", b.t_bar}, {"sigma", b.sigma}});
    return {{"kind", "snapshot"},
            {"version", kProtocolVersion},
            {"seq", s.seq},
            {"clock", s.clock},
            {"running", s.running},
            {"done", s.done},
            {"planner", s.planner},
            {"objects", objects},
            {"human_action", s.human_action},
            {"robot_action", s.robot_action},
            {"robot_progress", s.robot_progress},
            {"t0_bar", s.t0_bar},
            {"sigma_0", s.sigma_0},
            {"beliefs", beliefs},
            {"t_plan", s.t_plan}};
}

StateSnapshot snapshot_from_json(const json& j) {
    try {
        if (j.at("kind").get<std::string>() != "snapshot") throw ParseError("not a snapshot frame");
        StateSnapshot s;
        s.seq = j.at("seq").get<std::uint64_t>();
        s.clock = j.at("clock").get<double>();
        s.running = j.at("running").get<bool>();
        s.done = j.at("done").get<bool>();
        s.planner = j.at("planner").get<std::string>();
        for (const auto& o : j.at("objects")) {
            s.objects.push_back({o.at("action_id").get<std::string>(),
                                 {o.at("position").at(0).get<double>(), o.at("position").at(1).get<double>()},
                                 o.at("indicator").get<std::string>(),
                                 o.at("status").get<std::string>(),
                                 o.at("agent").get<std::string>()});
        }
        s.human_action = j.at("human_action").get<std::string>();
        s.robot_action = j.at("robot_action").get<std::string>();
        s.robot_progress = j.at("robot_progress").get<double>();
        s.t0_bar = j.at("t0_bar").get<double>();
        s.sigma_0 = j.at("sigma_0").get<double>();
        for (const auto& b : j.at("beliefs")) {
            s.beliefs.push_back({b.at("action_id").get<std::string>(), b.at("t_bar").get<double>(), b.at("sigma").get<double>()});
        }
        s.t_plan = j.at("t_plan").get<double>();
        return s;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed snapshot: ") + e.what());
    }
}

std::string encode(const StateSnapshot& s) { return to_json(s).dump(); }

StateSnapshot decode_snapshot(std::string_view line) {
    json j;
    try {
        j = json::parse(line.begin(), line.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed snapshot: ") + e.what());
    }
    return snapshot_from_json(j);
}

std::string encode_error(std::string_view reason, std::string_view detail) {
    json j = {{"kind", "error"}, {"version", kProtocolVersion}, {"reason", reason}};
    if (!detail.empty()) j["detail"] = detail;
    return j.dump();
}

}  // namespace hrc
