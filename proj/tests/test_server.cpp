#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <functional>
#include <optional>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "hrc/error.hpp"
#include "hrc/json_io.hpp"
#include "hrc/server.hpp"
#include "support.hpp"

using namespace hrc;
using Clock = std::chrono::steady_clock;

namespace {

const Scenario& desktop() {
    static const Scenario sc = load_scenario(test::scenario_path());
    return sc;
}

class Client {
public:
    explicit Client(int port) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<std::uint16_t>(port));
        ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
        connected_ = ::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0;
    }
    ~Client() { ::close(fd_); }
    Client(const Client&) = delete;
    Client& operator=(const Client&) = delete;

    bool connected() const { return connected_; }

    void send(const std::string& line) {
        const std::string data = line + "\n";
        ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
    }

    // Empty when nothing arrived in time or the peer closed.
    std::optional<std::string> next(int timeout_ms = 2000) {
        const auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
        for (;;) {
            const auto pos = buf_.find('\n');
            if (pos != std::string::npos) {
                std::string line = buf_.substr(0, pos);
                buf_.erase(0, pos + 1);
                return line;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
            if (left <= 0) return std::nullopt;
            pollfd p{fd_, POLLIN, 0};
            if (::poll(&p, 1, static_cast<int>(left)) <= 0) return std::nullopt;
            char chunk[4096];
            const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n <= 0) return std::nullopt;
            buf_.append(chunk, static_cast<std::size_t>(n));
        }
    }

    std::optional<json> wait_for(const std::function<bool(const json&)>& pred, int timeout_ms = 5000) {
        const auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
        while (Clock::now() < deadline) {
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
            const auto line = next(static_cast<int>(std::max<long long>(1, left)));
            if (!line) return std::nullopt;
            auto j = json::parse(*line);
            if (pred(j)) return j;
        }
        return std::nullopt;
    }

private:
    int fd_ = -1;
    bool connected_ = false;
    std::string buf_;
};

std::string move(const char* kind, Vec2 p, double ts) {
    return json{{"kind", kind}, {"version", 1}, {"position", {p.x, p.y}}, {"timestamp", ts}}.dump();
}

const json* object(const json& snap, const std::string& id) {
    for (const auto& o : snap["objects"]) {
        if (o["action_id"] == id) return &o;
    }
    return nullptr;
}

bool memory_done(const json& j) {
    if (j["kind"] != "snapshot") return false;
    const auto* o = object(j, "memory");
    return o && (*o)["status"] == "completed";
}

ServerConfig local(int max_sessions = 4) {
    ServerConfig c;
    c.port = 0;
    c.max_sessions = max_sessions;
    return c;
}

}  // namespace

TEST_SUITE("server") {
    TEST_CASE("drag over the socket completes memory promptly") {
        SessionServer server(desktop(), default_session_config(desktop()), local());
        server.start();
        REQUIRE(server.port() > 0);
        Client c(server.port());
        REQUIRE(c.connected());
        const auto hello = c.next();
        REQUIRE(hello);
        const auto first = decode_snapshot(*hello);
        CHECK_FALSE(first.running);
        CHECK(first.objects.size() == 5);

        c.send(R"({"kind":"start","version":1,"seed":5})");
        REQUIRE(c.wait_for([](const json& j) { return j["kind"] == "snapshot" && j["running"] == true; }));
        const auto& obj = desktop().objects[desktop().tree.require_index("memory")];
        c.send(move("button_down", obj.start, 0.0));
        for (int i = 1; i <= 20; ++i) {
            c.send(move("pointer_move", obj.start + (obj.area.center - obj.start) * (i / 20.0), i * 0.02));
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        const auto sent = Clock::now();
        c.send(move("button_up", obj.area.center, 0.45));
        const auto done = c.wait_for(memory_done, 2000);
        const auto latency = std::chrono::duration<double, std::milli>(Clock::now() - sent).count();
        REQUIRE(done);
        CHECK((*object(*done, "memory"))["agent"] == "human");
        CHECK((*object(*done, "memory"))["indicator"] == "");
        CHECK(latency < 100.0);
        server.stop();
    }

    TEST_CASE("errors travel as frames and the session survives") {
        SessionServer server(desktop(), default_session_config(desktop()), local());
        server.start();
        Client c(server.port());
        REQUIRE(c.next());
        c.send("{broken");
        const auto e = c.wait_for([](const json& j) { return j["kind"] == "error"; });
        REQUIRE(e);
        CHECK((*e)["reason"] == "malformed_frame");
        c.send(R"({"kind":"start","version":1})");
        CHECK(c.wait_for([](const json& j) { return j["kind"] == "snapshot" && j["running"] == true; }));
        server.stop();
    }

    TEST_CASE("session limit") {
        SessionServer server(desktop(), default_session_config(desktop()), local(1));
        server.start();
        Client a(server.port());
        REQUIRE(a.next());
        Client b(server.port());
        const auto refused = b.next();
        REQUIRE(refused);
        const auto j = json::parse(*refused);
        CHECK(j["kind"] == "error");
        CHECK(j["reason"] == "server_full");
        CHECK_FALSE(b.next(300));
        server.stop();
    }

    TEST_CASE("reconnect starts from a fresh board snapshot") {
        SessionServer server(desktop(), default_session_config(desktop()), local(1));
        server.start();
        {
            Client a(server.port());
            REQUIRE(a.next());
            a.send(R"({"kind":"start","version":1})");
            REQUIRE(a.wait_for([](const json& j) { return j["kind"] == "snapshot" && j["running"] == true; }));
        }
        std::optional<std::string> hello;
        for (int attempt = 0; attempt < 50 && !hello; ++attempt) {
            Client b(server.port());
            auto line = b.next();
            if (line && json::parse(*line)["kind"] == "snapshot") hello = line;
            else std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
        REQUIRE(hello);
        const auto s = decode_snapshot(*hello);
        CHECK_FALSE(s.running);
        for (std::size_t i = 0; i < s.objects.size(); ++i) CHECK(s.objects[i].position == desktop().objects[i].start);
        server.stop();
    }

    TEST_CASE("finished sessions are recorded and replay deterministically") {
        test::TempDir dir("hrc-server-record");
        auto cfg = local();
        cfg.record_dir = dir.path;
        SessionServer server(desktop(), default_session_config(desktop()), cfg);
        server.start();
        {
            Client c(server.port());
            REQUIRE(c.next());
            c.send(R"({"kind":"start","version":1,"seed":9})");
            REQUIRE(c.wait_for([](const json& j) { return j["kind"] == "snapshot" && j["running"] == true; }));
            c.send(move("pointer_move", {0.4, 0.4}, 0.1));
            REQUIRE(c.wait_for([](const json& j) { return j["kind"] == "snapshot" && j["clock"].get<double>() > 0.2; }));
        }
        const auto file = dir.path / "session-0.ndjson";
        for (int i = 0; i < 100 && !std::filesystem::exists(file); ++i) {
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
        server.stop();
        REQUIRE(std::filesystem::exists(file));
        const auto text = read_text_file(file);
        const auto a = replay(desktop(), default_session_config(desktop()), text);
        const auto b = replay(desktop(), default_session_config(desktop()), text);
        REQUIRE_FALSE(a.empty());
        CHECK(a == b);
        CHECK(decode_snapshot(a.back()).running);
    }

    TEST_CASE("static assets and protocol descriptor over HTTP") {
        test::TempDir dir("hrc-server-static");
        write_text_file(dir.path / "index.html", "<!doctype html><title>board</title>");
        auto cfg = local();
        cfg.static_dir = dir.path;
        cfg.http_port = 0;
        SessionServer server(desktop(), default_session_config(desktop()), cfg);
        server.start();
        REQUIRE(server.http_port() > 0);
        httplib::Client http("127.0.0.1", server.http_port());
        const auto page = http.Get("/index.html");
        REQUIRE(page);
        CHECK(page->status == 200);
        CHECK(page->body == "<!doctype html><title>board</title>");
        const auto proto = http.Get("/protocol");
        REQUIRE(proto);
        const auto j = json::parse(proto->body);
        CHECK(j["version"] == kProtocolVersion);
        CHECK(j["port"] == server.port());
        CHECK(http.Get("/missing.js")->status == 404);
        server.stop();
    }

    TEST_CASE("bad configurations") {
        auto cfg = local();
        cfg.tick_dt = 0.0;
        CHECK_THROWS_AS(SessionServer(desktop(), default_session_config(desktop()), cfg), ConfigError);
        cfg = local();
        cfg.host = "not-an-address";
        SessionServer s(desktop(), default_session_config(desktop()), cfg);
        CHECK_THROWS_AS(s.start(), ConfigError);
        cfg = local();
        cfg.static_dir = "/nonexistent/dir";
        SessionServer t(desktop(), default_session_config(desktop()), cfg);
        CHECK_THROWS_AS(t.start(), ConfigError);
    }
}
