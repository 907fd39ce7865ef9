#pragma once

#include <atomic>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "hrc/session.hpp"

namespace hrc {

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8765;              // frame protocol; 0 picks a free port
    int max_sessions = 8;
    double tick_dt = 0.01;        // session seconds per tick, one tick per wall dt
    std::filesystem::path record_dir;  // replay files of finished sessions, empty disables
    std::filesystem::path static_dir;  // served over HTTP when non-empty
    int http_port = 8080;
};

/// TCP server speaking the newline-delimited frame protocol. Each connection
/// owns one Session driven by a single thread that interleaves inbound frames
/// and wall-clock ticks, so all mutations of a session are serialized.
class SessionServer {
public:
    SessionServer(const Scenario& scenario, SessionConfig session, ServerConfig config);
    ~SessionServer();

    // Binds and starts accepting in the background. Throws ConfigError when
    // the socket cannot be bound.
    void start();
    void stop();
    int port() const { return bound_port_; }
    int http_port() const { return bound_http_port_; }
    int active_sessions() const { return active_.load(); }

private:
    void accept_loop();
    void serve_connection(int fd, int id);

    const Scenario* scenario_;
    SessionConfig session_config_;
    ServerConfig config_;
    int listen_fd_ = -1;
    int bound_port_ = 0;
    int bound_http_port_ = 0;
    std::atomic<bool> stopping_{false};
    std::atomic<int> active_{0};
    std::atomic<int> next_id_{0};
    std::thread acceptor_;
    std::vector<std::thread> workers_;
    std::mutex workers_mutex_;
    struct Http;
    Http* http_ = nullptr;
    std::thread http_thread_;
};

}  // namespace hrc
