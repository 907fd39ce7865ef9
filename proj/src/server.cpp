#include "hrc/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "httplib.h"

#include "hrc/error.hpp"
#include "hrc/json_io.hpp"

namespace hrc {

struct SessionServer::Http {
    httplib::Server server;
};

namespace {

bool send_all(int fd, const std::string& data) {
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        off += static_cast<std::size_t>(n);
    }
    return true;
}

bool send_frames(int fd, const std::vector<std::string>& frames) {
    if (frames.empty()) return true;
    std::string out;
    for (const auto& f : frames) {
        out += f;
        out += '\n';
    }
    return send_all(fd, out);
}

}  // namespace

SessionServer::SessionServer(const Scenario& scenario, SessionConfig session, ServerConfig config)
    : scenario_(&scenario), session_config_(session), config_(std::move(config)) {
    if (!(config_.tick_dt > 0.0)) throw ConfigError("tick_dt must be positive");
    if (config_.max_sessions < 1) throw ConfigError("max_sessions must be positive");
}

SessionServer::~SessionServer() { stop(); }

void SessionServer::start() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw ConfigError(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(config_.port));
    if (::inet_pton(AF_INET, config_.host.c_str(), &addr.sin_addr) != 1) {
        throw ConfigError("bad listen address '" + config_.host + "'");
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
        const std::string why = std::strerror(errno);
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw ConfigError("cannot listen on " + config_.host + ":" + std::to_string(config_.port) + ": " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    bound_port_ = ntohs(addr.sin_port);

    if (!config_.static_dir.empty()) {
        http_ = new Http;
        if (!http_->server.set_mount_point("/", config_.static_dir.string())) {
            throw ConfigError("static directory " + config_.static_dir.string() + " does not exist");
        }
        http_->server.Get("/protocol", [this](const httplib::Request&, httplib::Response& res) {
            res.set_content(json{{"version", kProtocolVersion}, {"port", bound_port_}}.dump(), "application/json");
        });
        if (config_.http_port == 0) {
            bound_http_port_ = http_->server.bind_to_any_port(config_.host);
        } else if (http_->server.bind_to_port(config_.host, config_.http_port)) {
            bound_http_port_ = config_.http_port;
        } else {
            throw ConfigError("cannot bind HTTP port " + std::to_string(config_.http_port));
        }
        http_thread_ = std::thread([this] { http_->server.listen_after_bind(); });
    }
    acceptor_ = std::thread([this] { accept_loop(); });
}

void SessionServer::stop() {
    if (stopping_.exchange(true)) return;
    if (acceptor_.joinable()) acceptor_.join();
    {
        std::lock_guard<std::mutex> lock(workers_mutex_);
        for (auto& w : workers_) {
            if (w.joinable()) w.join();
        }
        workers_.clear();
    }
    if (listen_fd_ >= 0) ::close(listen_fd_);
    listen_fd_ = -1;
    if (http_) {
        http_->server.stop();
        if (http_thread_.joinable()) http_thread_.join();
        delete http_;
        http_ = nullptr;
    }
}

void SessionServer::accept_loop() {
    while (!stopping_) {
        pollfd p{listen_fd_, POLLIN, 0};
        if (::poll(&p, 1, 100) <= 0) continue;
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) continue;
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        if (active_.load() >= config_.max_sessions) {
            send_frames(fd, {encode_error("server_full", "session limit reached")});
            ::close(fd);
            continue;
        }
        ++active_;
        const int id = next_id_++;
        std::lock_guard<std::mutex> lock(workers_mutex_);
        workers_.emplace_back([this, fd, id] { serve_connection(fd, id); });
    }
}

void SessionServer::serve_connection(int fd, int id) {
    using clock = std::chrono::steady_clock;
    Session session(*scenario_, session_config_);
    const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(config_.tick_dt));
    auto next_tick = clock::now() + period;
    std::string buffer;
    char chunk[4096];
    InboundMessage tick;
    tick.kind = InboundKind::tick;
    tick.dt = config_.tick_dt;
    bool open = send_frames(fd, {encode(session.snapshot())});

    while (open && !stopping_) {
        const auto now = clock::now();
        const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(next_tick - now).count();
        pollfd p{fd, POLLIN, 0};
        const int ready = ::poll(&p, 1, static_cast<int>(std::max<long long>(0, wait)));
        if (ready > 0) {
            const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
            if (n <= 0) break;
            buffer.append(chunk, static_cast<std::size_t>(n));
            std::size_t pos;
            while ((pos = buffer.find('\n')) != std::string::npos) {
                const std::string line = buffer.substr(0, pos);
                buffer.erase(0, pos + 1);
                if (!send_frames(fd, session.handle_line(line))) {
                    open = false;
                    break;
                }
            }
            if (buffer.size() > (1u << 20)) {
                send_frames(fd, {encode_error("frame_too_long")});
                break;
            }
        }
        if (clock::now() >= next_tick) {
            if (open && !send_frames(fd, session.handle(tick))) open = false;
            next_tick += period;
            if (clock::now() - next_tick > 10 * period) next_tick = clock::now() + period;
        }
    }
    ::close(fd);
    if (!config_.record_dir.empty()) {
        try {
            write_text_file(config_.record_dir / ("session-" + std::to_string(id) + ".ndjson"), session.replay_text());
        } catch (const Error&) {
            // recording is best effort
        }
    }
    --active_;
}

}  // namespace hrc
