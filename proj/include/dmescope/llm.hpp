#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace dmescope {

enum class PromptKind { Plan, UiChange, Progress, Oracle, Sibling, Explore };

std::string_view to_string(PromptKind k) noexcept;
PromptKind prompt_kind_from_string(std::string_view s);

enum class Role { System, User, Assistant };

std::string_view to_string(Role r) noexcept;

struct ChatMessage {
    Role role = Role::User;
    std::string text;
};

/// Screenshot bytes, or a textual screen description (`text/plain`).
struct Attachment {
    std::string media_type;
    std::string data;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    std::vector<Attachment> attachments;
    double temperature = 0.0;
    PromptKind tag = PromptKind::Plan;
};

struct Usage {
    std::int64_t requests = 0;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

/// Hex FNV-1a digest over the roles and texts of the request's messages.
std::string digest(const ChatRequest& req);

/// Chat-completion provider. `send` checks request invariants, forwards to the
/// implementation and accumulates usage. Safe for concurrent use.
class LlmBackend {
public:
    LlmBackend() = default;
    LlmBackend(LlmBackend&& other) noexcept : usage_(other.usage()) {}
    LlmBackend& operator=(LlmBackend&&) = delete;
    virtual ~LlmBackend() = default;

    std::string send(const ChatRequest& req);
    Usage usage() const;

protected:
    struct Reply {
        std::string text;
        std::optional<std::int64_t> prompt_tokens;
        std::optional<std::int64_t> completion_tokens;
    };
    virtual Reply do_send(const ChatRequest& req) = 0;

private:
    mutable std::mutex mutex_;
    Usage usage_;
};

/// Deterministic backend answering from a table of `{tag, match, response}`
/// entries; first match wins. `match` is a substring, a list of substrings
/// that must all occur, or `digest:<hex>`.
class ScriptedBackend final : public LlmBackend {
public:
    struct Entry {
        PromptKind tag;
        std::vector<std::string> substrings;
        std::optional<std::string> digest;
        std::string response;
    };

    explicit ScriptedBackend(std::vector<Entry> entries) : entries_(std::move(entries)) {}

    static ScriptedBackend from_json(const nlohmann::json& j);
    static ScriptedBackend load(const std::string& path);

    const std::vector<Entry>& entries() const noexcept { return entries_; }

protected:
    Reply do_send(const ChatRequest& req) override;

private:
    std::vector<Entry> entries_;
};

/// OpenAI-compatible chat-completions client.
class HttpBackend final : public LlmBackend {
public:
    struct Config {
        std::string base_url;  // e.g. https://api.openai.com/v1
        std::string api_key;
        std::string model;
        std::chrono::milliseconds timeout{60000};
        int max_attempts = 3;
        std::chrono::milliseconds initial_backoff{1000};
    };

    explicit HttpBackend(Config cfg);

    /// Reads DME_LLM_BASE_URL, DME_LLM_API_KEY and DME_LLM_MODEL.
    static std::optional<Config> config_from_env();

protected:
    Reply do_send(const ChatRequest& req) override;

private:
    Config cfg_;
    std::string scheme_host_port_;
    std::string path_prefix_;
};

/// The first JSON object in `text`: a fenced ```json block if present,
/// otherwise the first balanced `{...}` that parses.
std::optional<nlohmann::json> extract_json_object(std::string_view text);

/// Named context fields substituted into a prompt template's `{{field}}` slots.
using PromptContext = std::map<std::string, std::string>;

const std::string& prompt_template(PromptKind k);

/// Renders a single user message. Throws ContractError when the template uses
/// a field the context lacks or a field is empty.
ChatRequest render_prompt(PromptKind k, const PromptContext& ctx);

}  // namespace dmescope
