#include "dmescope/llm.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "dmescope/errors.hpp"

namespace dmescope {

using nlohmann::json;

namespace {

const std::map<std::string, std::string, std::less<>>& templates() {
    static const std::map<std::string, std::string, std::less<>> kTemplates{
#include "prompt_templates.inc"
    };
    return kTemplates;
}

std::int64_t approx_tokens(std::string_view s) {
    std::int64_t n = 0;
    bool in_word = false;
    for (char c : s) {
        bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

}  // namespace

std::string_view to_string(PromptKind k) noexcept {
    switch (k) {
        case PromptKind::Plan: return "plan";
        case PromptKind::UiChange: return "ui_change";
        case PromptKind::Progress: return "progress";
        case PromptKind::Oracle: return "oracle";
        case PromptKind::Sibling: return "sibling";
        case PromptKind::Explore: return "explore";
    }
    return "plan";
}

PromptKind prompt_kind_from_string(std::string_view s) {
    for (auto k : {PromptKind::Plan, PromptKind::UiChange, PromptKind::Progress, PromptKind::Oracle,
                   PromptKind::Sibling, PromptKind::Explore})
        if (to_string(k) == s) return k;
    throw ParseError("unknown prompt tag '" + std::string(s) + "'", 0);
}

std::string_view to_string(Role r) noexcept {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

std::string digest(const ChatRequest& req) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        h ^= 0xff;
        h *= 0x100000001b3ULL;
    };
    for (const auto& m : req.messages) {
        mix(to_string(m.role));
        mix(m.text);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---- LlmBackend ------------------------------------------------------------

std::string LlmBackend::send(const ChatRequest& req) {
    if (req.messages.empty()) throw ContractError("chat request has no messages");
    if (req.tag == PromptKind::Oracle && req.temperature != 0.0)
        throw ContractError("oracle requests must use temperature 0");
    if (req.temperature < 0.0) throw ContractError("negative temperature");
    Reply r = do_send(req);
    std::int64_t prompt = 0;
    if (!r.prompt_tokens)
        for (const auto& m : req.messages) prompt += approx_tokens(m.text);
    std::lock_guard lock(mutex_);
    ++usage_.requests;
    usage_.prompt_tokens += r.prompt_tokens.value_or(prompt);
    usage_.completion_tokens += r.completion_tokens.value_or(approx_tokens(r.text));
    return std::move(r.text);
}

Usage LlmBackend::usage() const {
    std::lock_guard lock(mutex_);
    return usage_;
}

// ---- ScriptedBackend -------------------------------------------------------

ScriptedBackend ScriptedBackend::from_json(const json& j) {
    if (!j.is_array()) throw ParseError("script must be a JSON array", 0);
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j[i];
        try {
            Entry entry;
            entry.tag = prompt_kind_from_string(e.at("tag").get<std::string>());
            const auto& m = e.at("match");
            if (m.is_string()) {
                auto s = m.get<std::string>();
                if (s.rfind("digest:", 0) == 0)
                    entry.digest = s.substr(7);
                else
                    entry.substrings.push_back(std::move(s));
            } else {
                entry.substrings = m.get<std::vector<std::string>>();
            }
            const auto& r = e.at("response");
            entry.response = r.is_string() ? r.get<std::string>() : r.dump();
            entries.push_back(std::move(entry));
        } catch (const json::exception& ex) {
            throw ParseError("script entry " + std::to_string(i) + ": " + ex.what(), 0);
        }
    }
    return ScriptedBackend(std::move(entries));
}

ScriptedBackend ScriptedBackend::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(path, "cannot open script file");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return from_json(json::parse(ss.str()));
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what(), e.byte > 0 ? e.byte - 1 : 0);
    }
}

LlmBackend::Reply ScriptedBackend::do_send(const ChatRequest& req) {
    std::string text;
    for (const auto& m : req.messages) {
        text += m.text;
        text += '\n';
    }
    const auto d = digest(req);
    for (const auto& e : entries_) {
        if (e.tag != req.tag) continue;
        if (e.digest) {
            if (*e.digest == d) return {e.response, {}, {}};
            continue;
        }
        bool all = true;
        for (const auto& s : e.substrings)
            if (text.find(s) == std::string::npos) {
                all = false;
                break;
            }
        if (all) return {e.response, {}, {}};
    }
    throw UnscriptedPrompt(std::string(to_string(req.tag)), d);
}

// ---- HttpBackend -----------------------------------------------------------

HttpBackend::HttpBackend(Config cfg) : cfg_(std::move(cfg)) {
    const auto& url = cfg_.base_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ContractError("base URL needs a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    if (cfg_.max_attempts < 1) cfg_.max_attempts = 1;
}

std::optional<HttpBackend::Config> HttpBackend::config_from_env() {
    const char* base = std::getenv("DME_LLM_BASE_URL");
    const char* key = std::getenv("DME_LLM_API_KEY");
    const char* model = std::getenv("DME_LLM_MODEL");
    if (!base || !model) return std::nullopt;
    Config c;
    c.base_url = base;
    c.api_key = key ? key : "";
    c.model = model;
    return c;
}

LlmBackend::Reply HttpBackend::do_send(const ChatRequest& req) {
    json messages = json::array();
    for (std::size_t i = 0; i < req.messages.size(); ++i) {
        const auto& m = req.messages[i];
        const bool last_user = m.role == Role::User && i + 1 == req.messages.size();
        if (!last_user || req.attachments.empty()) {
            messages.push_back({{"role", to_string(m.role)}, {"content", m.text}});
            continue;
        }
        std::string text = m.text;
        json parts = json::array();
        for (const auto& a : req.attachments) {
            if (a.media_type.rfind("text/", 0) == 0) {
                text += "\n\n" + a.data;
            } else {
                parts.push_back({{"type", "image_url"},
                                 {"image_url",
                                  {{"url", "data:" + a.media_type + ";base64," + httplib::detail::base64_encode(a.data)}}}});
            }
        }
        parts.insert(parts.begin(), json{{"type", "text"}, {"text", text}});
        messages.push_back({{"role", to_string(m.role)}, {"content", parts}});
    }
    const json body{{"model", cfg_.model}, {"messages", messages}, {"temperature", req.temperature}};
    const auto payload = body.dump();

    httplib::Client client(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    std::string last_error;
    auto backoff = cfg_.initial_backoff;
    for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
        auto res = client.Post(path_prefix_ + "/chat/completions", headers, payload, "application/json");
        bool retriable = true;
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
        } else if (res->status == 200) {
            try {
                auto j = json::parse(res->body);
                Reply r;
                r.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
                if (auto u = j.find("usage"); u != j.end() && u->is_object()) {
                    if (u->contains("prompt_tokens")) r.prompt_tokens = u->at("prompt_tokens").get<std::int64_t>();
                    if (u->contains("completion_tokens"))
                        r.completion_tokens = u->at("completion_tokens").get<std::int64_t>();
                }
                return r;
            } catch (const json::exception& e) {
                throw TransportError(std::string("malformed chat-completions response: ") + e.what());
            }
        } else {
            last_error = "HTTP " + std::to_string(res->status);
            retriable = res->status == 429 || res->status >= 500;
        }
        if (!retriable) break;
        if (attempt < cfg_.max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw TransportError("chat request failed after retries: " + last_error);
}

// ---- structured output -----------------------------------------------------

std::optional<json> extract_json_object(std::string_view text) {
    auto try_parse = [](std::string_view s) -> std::optional<json> {
        auto j = json::parse(s, nullptr, false);
        if (j.is_discarded() || !j.is_object()) return std::nullopt;
        return j;
    };
    if (auto fence = text.find("```"); fence != std::string_view::npos) {
        auto body = text.find('\n', fence);
        auto close = body == std::string_view::npos ? body : text.find("```", body);
        if (close != std::string_view::npos)
            if (auto j = try_parse(text.substr(body + 1, close - body - 1))) return j;
    }
    for (std::size_t start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}' && --depth == 0) {
                if (auto j = try_parse(text.substr(start, i - start + 1))) return j;
                break;
            }
        }
    }
    return std::nullopt;
}

// ---- prompts ---------------------------------------------------------------

const std::string& prompt_template(PromptKind k) {
    const auto& t = templates();
    return t.find(to_string(k))->second;
}

ChatRequest render_prompt(PromptKind k, const PromptContext& ctx) {
    const auto& tpl = prompt_template(k);
    std::string out;
    std::size_t pos = 0;
    for (;;) {
        auto open = tpl.find("{{", pos);
        if (open == std::string::npos) {
            out.append(tpl, pos, std::string::npos);
            break;
        }
        auto close = tpl.find("}}", open);
        out.append(tpl, pos, open - pos);
        const auto field = tpl.substr(open + 2, close - open - 2);
        auto it = ctx.find(field);
        if (it == ctx.end() || it->second.empty())
            throw ContractError("prompt '" + std::string(to_string(k)) + "' is missing context field '" + field + "'");
        out += it->second;
        pos = close + 2;
    }
    while (!out.empty() && out.back() == '\n') out.pop_back();

    ChatRequest req;
    req.tag = k;
    req.temperature = k == PromptKind::Explore ? 0.7 : 0.0;
    req.messages.push_back({Role::User, std::move(out)});
    return req;
}

}  // namespace dmescope
