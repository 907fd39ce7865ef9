#include "hrc/session.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hrc/error.hpp"

namespace hrc {

namespace {

constexpr double kTimeEps = 1e-9;

std::string_view status_name(ActionState s) { return to_string(s); }

}  // namespace

SessionConfig default_session_config(const Scenario& scenario) {
    SessionConfig c;
    c.planner = scenario.planner;
    if (!std::isfinite(c.planner.absence_timeout)) c.planner.absence_timeout = 5.0;
    return c;
}

Session::Session(const Scenario& scenario, SessionConfig config) : scenario_(&scenario), config_(config) {
    if (config_.velocity_window < 1) throw ValidationError("velocity_window must be positive");
    if (!(config_.snapshot_period > 0.0)) throw ValidationError("snapshot_period must be positive");
    for (const auto& o : scenario.objects) positions_.push_back(o.start);
}

std::vector<std::string> Session::handle_line(std::string_view line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
    if (line.empty()) return {};
    InboundMessage msg;
    try {
        msg = decode_inbound(line);
    } catch (const ParseError& e) {
        return {encode_error("malformed_frame", e.what())};
    }
    return handle(msg);
}

std::vector<std::string> Session::handle(const InboundMessage& msg) {
    const bool pointer = msg.kind == InboundKind::pointer_move || msg.kind == InboundKind::button_down ||
                         msg.kind == InboundKind::button_up;
    if (pointer) {
        if (msg.timestamp < last_timestamp_) return {encode_error("timestamp_regressed", "pointer timestamps must not decrease")};
        if (!finite(msg.position)) return {encode_error("malformed_frame", "non-finite position")};
    }
    recorded_.push_back(encode(msg));
    if (pointer) last_timestamp_ = msg.timestamp;

    switch (msg.kind) {
        case InboundKind::start: return on_start(msg);
        case InboundKind::reset: return on_reset();
        case InboundKind::tick: return on_tick(msg.dt);
        default: break;
    }
    pointer_to(msg.position);
    if (!running()) {
        if (msg.kind == InboundKind::pointer_move) return {};
        return {encode_error("not_started", "send a start frame first")};
    }
    if (msg.kind == InboundKind::button_down) return on_down(msg);
    if (msg.kind == InboundKind::button_up) return on_up();
    return {};
}

std::vector<std::string> Session::on_start(const InboundMessage& msg) {
    if (running()) return {encode_error("already_started", "send reset before starting again")};
    PlannerSettings p = config_.planner;
    if (!msg.planner.empty()) {
        try {
            p.kind = parse_planner_kind(msg.planner);
        } catch (const Error& e) {
            recorded_.pop_back();
            return {encode_error("bad_planner", e.what())};
        }
    }
    if (msg.seed) config_.seed = *msg.seed;
    config_.planner = p;
    coord_ = std::make_unique<Coordinator>(*scenario_, p, config_.seed);
    coord_->replan("start");
    sync_robot_object(std::nullopt);
    return {emit_snapshot()};
}

std::vector<std::string> Session::on_reset() {
    coord_.reset();
    grabbed_.reset();
    pointer_samples_.clear();
    positions_.clear();
    for (const auto& o : scenario_->objects) positions_.push_back(o.start);
    last_snapshot_ = -1e300;
    return {emit_snapshot()};
}

std::vector<std::string> Session::on_down(const InboundMessage&) {
    if (grabbed_) return {encode_error("already_grabbing")};
    if (coord_->done()) return {encode_error("task_completed")};
    std::optional<std::size_t> best;
    double best_d = 0.0;
    for (std::size_t i = 0; i < positions_.size(); ++i) {
        if (coord_->status().completed(i)) continue;
        const double d = distance(pointer_, positions_[i]);
        if (d <= config_.grab_factor * scenario_->objects[i].radius && (!best || d < best_d)) {
            best = i;
            best_d = d;
        }
    }
    if (!best) return {};
    std::string why;
    if (!coord_->can_human_start(*best, &why)) {
        return {encode_error("grab_rejected", scenario_->tree.actions()[*best].id + ": " + why)};
    }
    const auto before = coord_->robot_action();
    coord_->human_start(*best);
    grabbed_ = best;
    grab_offset_ = positions_[*best] - pointer_;
    pointer_samples_.assign(1, pointer_);
    sync_robot_object(before);
    return {emit_snapshot()};
}

std::vector<std::string> Session::on_up() {
    if (!grabbed_) return {};
    const auto i = *grabbed_;
    grabbed_.reset();
    pointer_samples_.clear();
    const auto before = coord_->robot_action();
    if (scenario_->objects[i].area.contains(positions_[i])) {
        coord_->human_finish();
    } else {
        coord_->human_abort();
        positions_[i] = scenario_->objects[i].start;
    }
    sync_robot_object(before);
    return {emit_snapshot()};
}

std::vector<std::string> Session::on_tick(double dt) {
    std::vector<std::string> out;
    if (!running() || coord_->done()) return out;
    const auto before = coord_->robot_action();
    coord_->tick(dt);
    sync_robot_object(before);
    if (grabbed_ && coord_->human_action() == grabbed_) {
        pointer_samples_.push_back(pointer_);
        while (pointer_samples_.size() > static_cast<std::size_t>(config_.velocity_window) + 1) {
            pointer_samples_.pop_front();
        }
        coord_->human_observe(coord_->human_elapsed(), pointer_velocity(dt), positions_[*grabbed_]);
    }
    if (coord_->done() || coord_->clock() - last_snapshot_ >= config_.snapshot_period - kTimeEps) {
        out.push_back(emit_snapshot());
    }
    return out;
}

void Session::pointer_to(Vec2 p) {
    pointer_ = p;
    if (grabbed_) positions_[*grabbed_] = pointer_ + grab_offset_;
}

Vec2 Session::pointer_velocity(double dt) const {
    if (pointer_samples_.size() < 2) return {};
    const auto n = static_cast<double>(pointer_samples_.size() - 1);
    // Mean of consecutive differences collapses to (last - first) / span.
    return (pointer_samples_.back() - pointer_samples_.front()) * (1.0 / (n * dt));
}

void Session::sync_robot_object(std::optional<std::size_t> before) {
    if (before && coord_->status().completed(*before)) positions_[*before] = scenario_->objects[*before].area.center;
    if (const auto r = coord_->robot_action()) {
        const auto& o = scenario_->objects[*r];
        positions_[*r] = o.start + coord_->robot_progress() * (o.area.center - o.start);
    }
}

StateSnapshot Session::snapshot() const {
    StateSnapshot s;
    s.seq = seq_;
    s.running = running();
    s.planner = std::string(to_string(config_.planner.kind));
    const auto& specs = scenario_->tree.actions();
    for (std::size_t i = 0; i < specs.size(); ++i) {
        ObjectSnapshot o;
        o.action_id = specs[i].id;
        o.position = positions_[i];
        if (coord_) {
            const auto& st = coord_->status()[i];
            o.indicator = std::string(to_string(coord_->indicators()[i]));
            o.status = std::string(status_name(st.state));
            if (st.state != ActionState::pending) o.agent = std::string(to_string(st.agent));
        } else {
            o.status = "pending";
        }
        s.objects.push_back(std::move(o));
    }
    if (!coord_) return s;
    s.clock = coord_->clock();
    s.done = coord_->done();
    if (const auto h = coord_->human_action()) s.human_action = specs[*h].id;
    if (const auto r = coord_->robot_action()) s.robot_action = specs[*r].id;
    s.robot_progress = coord_->robot_progress();
    if (const auto* p = coord_->last_plan()) {
        s.t0_bar = p->instance.t0_bar;
        s.sigma_0 = p->instance.sigma_0;
        s.t_plan = p->assignment.t_plan;
        for (std::size_t k = 0; k < p->instance.k(); ++k) {
            if (!p->instance.human_capable[k]) continue;
            s.beliefs.push_back({p->instance.action_ids[k], p->instance.t_h_bar[k], p->instance.sigma_h[k]});
        }
    }
    return s;
}

std::string Session::emit_snapshot() {
    ++seq_;
    last_snapshot_ = coord_ ? coord_->clock() : 0.0;
    return encode(snapshot());
}

std::string Session::replay_text() const {
    json header = {{"kind", "session"}, {"version", kProtocolVersion}, {"planner", to_string(config_.planner.kind)},
                   {"seed", config_.seed}};
    std::string out = header.dump() + "\n";
    for (const auto& f : recorded_) out += f + "\n";
    return out;
}

std::vector<std::string> replay(const Scenario& scenario, SessionConfig config, std::string_view text) {
    std::vector<std::string> lines;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    std::size_t first = 0;
    if (!lines.empty()) {
        json j = parse_json(lines[0], "replay header");
        if (j.is_object() && j.value("kind", std::string()) == "session") {
            if (j.value("version", 0) != kProtocolVersion) throw ParseError("unsupported replay version", 1);
            if (j.contains("planner")) config.planner.kind = parse_planner_kind(j["planner"].get<std::string>());
            if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
            first = 1;
        }
    }
    Session s(scenario, config);
    std::vector<std::string> out;
    for (std::size_t i = first; i < lines.size(); ++i) {
        auto frames = s.handle_line(lines[i]);
        out.insert(out.end(), frames.begin(), frames.end());
    }
    return out;
}

}  // namespace hrc
