#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hrc/collaboration.hpp"
#include "hrc/protocol.hpp"

namespace hrc {

struct SessionConfig {
    PlannerSettings planner{};
    std::uint64_t seed = 0;
    double snapshot_period = 0.05;  // session seconds between snapshots
    double grab_factor = 1.5;       // grab radius over object radius
    int velocity_window = 5;        // finite differences averaged per velocity
};

// Session defaults: scenario loop settings plus a finite absence timeout so an
// absent human never stalls robot-capable work.
SessionConfig default_session_config(const Scenario& scenario);

/// One interactive collaboration. Every mutation happens through handle()
/// (inbound frames, ticks included), so a recorded frame sequence replays
/// to the same outbound frames.
class Session {
public:
    Session(const Scenario& scenario, SessionConfig config);

    // Decodes and applies one frame; malformed frames yield an error frame.
    std::vector<std::string> handle_line(std::string_view line);
    std::vector<std::string> handle(const InboundMessage& msg);

    StateSnapshot snapshot() const;
    bool running() const { return coord_ != nullptr; }
    const Coordinator* coordinator() const { return coord_.get(); }
    const std::vector<Vec2>& object_positions() const { return positions_; }
    std::optional<std::size_t> grabbed() const { return grabbed_; }

    // Every frame applied so far (encoded), ticks included.
    const std::vector<std::string>& recorded() const { return recorded_; }
    std::string replay_text() const;

private:
    std::vector<std::string> on_start(const InboundMessage& msg);
    std::vector<std::string> on_reset();
    std::vector<std::string> on_down(const InboundMessage& msg);
    std::vector<std::string> on_up();
    std::vector<std::string> on_tick(double dt);
    void pointer_to(Vec2 p);
    void sync_robot_object(std::optional<std::size_t> before);
    Vec2 pointer_velocity(double dt) const;
    std::string emit_snapshot();

    const Scenario* scenario_;
    SessionConfig config_;
    std::unique_ptr<Coordinator> coord_;
    std::vector<Vec2> positions_;
    Vec2 pointer_{};
    double last_timestamp_ = -1e300;
    std::deque<Vec2> pointer_samples_;  // one per tick while grabbing
    std::optional<std::size_t> grabbed_;
    Vec2 grab_offset_{};
    double last_snapshot_ = -1e300;
    std::uint64_t seq_ = 0;
    std::vector<std::string> recorded_;
};

/// Replay file: one frame per line; an optional first line
/// {"kind":"session","version":1,"planner":...,"seed":...} overrides the
/// session config. Returns every outbound frame in order.
std::vector<std::string> replay(const Scenario& scenario, SessionConfig config, std::string_view text);

}  // namespace hrc
