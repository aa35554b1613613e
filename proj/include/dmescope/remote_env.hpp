#pragma once

#include <atomic>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "dmescope/env.hpp"

namespace dmescope {

/// Client for an environment served over TCP as newline-delimited JSON:
/// requests `{op, args}`, responses `{ok, data}` or `{ok: false, error}`.
/// Ops: snapshot, perform, save, restore, log, describe (plus optional info).
class RemoteEnvironment final : public Environment {
public:
    /// Throws TransportError when the connection fails.
    RemoteEnvironment(const std::string& host, std::uint16_t port);
    ~RemoteEnvironment() override;

    RemoteEnvironment(const RemoteEnvironment&) = delete;
    RemoteEnvironment& operator=(const RemoteEnvironment&) = delete;

    UiSnapshot current_snapshot() override;
    PerformResult perform(const UiEvent& e) override;
    SnapshotId save_snapshot() override;
    void restore_snapshot(SnapshotId id) override;
    std::vector<std::string> drain_log() override;
    std::string screen_description() override;
    std::string app_name() override;
    std::optional<StringTable> string_table() override;

private:
    nlohmann::json call(const std::string& op, const nlohmann::json& args = nlohmann::json::object());

    int fd_ = -1;
    std::string buffer_;
};

/// Answers one protocol request against `env`; never throws.
nlohmann::json handle_request(Environment& env, const nlohmann::json& request);

/// Listens on `port` (0 picks a free one) and serves connections one at a
/// time until `stop()`.
class EnvironmentServer {
public:
    EnvironmentServer(Environment& env, std::uint16_t port, const std::string& bind_address = "127.0.0.1");
    ~EnvironmentServer();

    EnvironmentServer(const EnvironmentServer&) = delete;
    EnvironmentServer& operator=(const EnvironmentServer&) = delete;

    std::uint16_t port() const noexcept { return port_; }

    /// Serves a single connection until the peer closes it.
    void serve_one();
    void serve_forever();
    void stop();

private:
    Environment& env_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopped_{false};
};

/// Splits `tcp://host:port` (the prefix is optional).
bool parse_tcp_address(const std::string& addr, std::string& host, std::uint16_t& port);

}  // namespace dmescope
