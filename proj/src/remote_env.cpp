#include "dmescope/remote_env.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "dmescope/errors.hpp"

namespace dmescope {

using nlohmann::json;

namespace {

void send_all(int fd, const std::string& data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        auto n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) throw TransportError(std::string("send failed: ") + std::strerror(errno));
        sent += static_cast<std::size_t>(n);
    }
}

// Next '\n'-terminated line; nullopt on orderly EOF.
std::optional<std::string> read_line(int fd, std::string& buffer) {
    for (;;) {
        if (auto nl = buffer.find('\n'); nl != std::string::npos) {
            auto line = buffer.substr(0, nl);
            buffer.erase(0, nl + 1);
            return line;
        }
        char chunk[4096];
        auto n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n < 0 && errno == EINTR) continue;
        if (n < 0) throw TransportError(std::string("recv failed: ") + std::strerror(errno));
        if (n == 0) return std::nullopt;
        buffer.append(chunk, static_cast<std::size_t>(n));
    }
}

}  // namespace

bool parse_tcp_address(const std::string& addr, std::string& host, std::uint16_t& port) {
    std::string rest = addr;
    if (rest.rfind("tcp://", 0) == 0) rest = rest.substr(6);
    auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0) return false;
    host = rest.substr(0, colon);
    try {
        auto p = std::stoul(rest.substr(colon + 1));
        if (p == 0 || p > 65535) return false;
        port = static_cast<std::uint16_t>(p);
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

// ---- client ----------------------------------------------------------------

RemoteEnvironment::RemoteEnvironment(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const auto service = std::to_string(port);
    if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
        throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
    for (auto* ai = res; ai; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) continue;
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            fd_ = fd;
            break;
        }
        ::close(fd);
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) throw TransportError("cannot connect to " + host + ":" + service);
}

RemoteEnvironment::~RemoteEnvironment() {
    if (fd_ >= 0) ::close(fd_);
}

json RemoteEnvironment::call(const std::string& op, const json& args) {
    send_all(fd_, json{{"op", op}, {"args", args}}.dump() + "\n");
    auto line = read_line(fd_, buffer_);
    if (!line) throw TransportError("environment closed the connection during '" + op + "'");
    auto reply = json::parse(*line, nullptr, false);
    if (reply.is_discarded() || !reply.is_object()) throw TransportError("malformed reply to '" + op + "'");
    if (!reply.value("ok", false)) {
        const auto error = reply.value("error", std::string("unknown error"));
        if (op == "restore") throw LookupError(error);
        throw TransportError("environment rejected '" + op + "': " + error);
    }
    return reply.value("data", json(nullptr));
}

UiSnapshot RemoteEnvironment::current_snapshot() {
    auto data = call("snapshot");
    if (data.is_string()) return parse_snapshot(data.get<std::string>());
    return snapshot_from_json(data);
}

PerformResult RemoteEnvironment::perform(const UiEvent& e) {
    auto data = call("perform", json{{"event", to_json(e)}});
    return PerformResult{data.value("valid", true), data.value("crashed", false), data.value("message", std::string{})};
}

SnapshotId RemoteEnvironment::save_snapshot() { return call("save").get<SnapshotId>(); }

void RemoteEnvironment::restore_snapshot(SnapshotId id) { call("restore", json{{"id", id}}); }

std::vector<std::string> RemoteEnvironment::drain_log() { return call("log").get<std::vector<std::string>>(); }

std::string RemoteEnvironment::screen_description() { return call("describe").get<std::string>(); }

std::string RemoteEnvironment::app_name() {
    try {
        return call("info").value("app", std::string("remote"));
    } catch (const TransportError&) {
        return "remote";
    }
}

std::optional<StringTable> RemoteEnvironment::string_table() {
    try {
        auto info = call("info");
        auto it = info.find("string_table");
        if (it == info.end() || !it->is_array()) return std::nullopt;
        StringTable t;
        for (const auto& s : *it)
            if (s.is_string()) t.constants.insert(s.get<std::string>());
        return t;
    } catch (const TransportError&) {
        return std::nullopt;
    }
}

// ---- server ----------------------------------------------------------------

json handle_request(Environment& env, const json& request) {
    try {
        if (!request.is_object()) return {{"ok", false}, {"error", "request must be an object"}};
        const auto op = request.value("op", std::string{});
        const auto args = request.value("args", json::object());
        json data;
        if (op == "snapshot") {
            data = to_json(env.current_snapshot());
        } else if (op == "perform") {
            auto r = env.perform(event_from_json(args.at("event")));
            data = {{"valid", r.valid}, {"crashed", r.crashed}, {"message", r.message}};
        } else if (op == "save") {
            data = env.save_snapshot();
        } else if (op == "restore") {
            env.restore_snapshot(args.at("id").get<SnapshotId>());
        } else if (op == "log") {
            data = env.drain_log();
        } else if (op == "describe") {
            data = env.screen_description();
        } else if (op == "info") {
            data = {{"app", env.app_name()}};
            if (auto t = env.string_table()) data["string_table"] = t->constants;
        } else {
            return {{"ok", false}, {"error", "unknown op '" + op + "'"}};
        }
        return {{"ok", true}, {"data", data}};
    } catch (const std::exception& e) {
        return {{"ok", false}, {"error", e.what()}};
    }
}

EnvironmentServer::EnvironmentServer(Environment& env, std::uint16_t port, const std::string& bind_address)
    : env_(env) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw TransportError(std::string("socket failed: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, bind_address.c_str(), &addr.sin_addr) != 1) {
        ::close(listen_fd_);
        throw TransportError("invalid bind address " + bind_address);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 4) != 0) {
        const std::string err = std::strerror(errno);
        ::close(listen_fd_);
        throw TransportError("cannot listen on port " + std::to_string(port) + ": " + err);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

EnvironmentServer::~EnvironmentServer() { stop(); }

void EnvironmentServer::serve_one() {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
        if (stopped_) return;
        throw TransportError(std::string("accept failed: ") + std::strerror(errno));
    }
    std::string buffer;
    try {
        while (auto line = read_line(fd, buffer)) {
            if (line->empty()) continue;
            auto req = json::parse(*line, nullptr, false);
            auto reply = req.is_discarded() ? json{{"ok", false}, {"error", "malformed JSON request"}}
                                            : handle_request(env_, req);
            send_all(fd, reply.dump() + "\n");
        }
    } catch (const TransportError&) {
        // Peer went away mid-exchange; the next connection starts clean.
    }
    ::close(fd);
}

void EnvironmentServer::serve_forever() {
    while (!stopped_) serve_one();
}

void EnvironmentServer::stop() {
    if (stopped_) return;
    stopped_ = true;
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
}

}  // namespace dmescope
