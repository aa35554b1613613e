#include "dmescope/oracle.hpp"

#include <algorithm>
#include <array>

#include "dmescope/errors.hpp"

namespace dmescope {

using nlohmann::json;

std::string_view to_string(Outcome o) noexcept {
    switch (o) {
        case Outcome::Bug: return "Bug";
        case Outcome::NoBug: return "NoBug";
        case Outcome::Indeterminate: return "Indeterminate";
    }
    return "Indeterminate";
}

std::string_view to_string(BugKind k) noexcept { return k == BugKind::Crash ? "Crash" : "Logical"; }

const std::string& dme_definition(DmfType t) {
    static const std::array<std::string, 5> kDefinitions{
        "A logical error occurs if the target data was not correctly added to the data container. "
        "Focus on whether the target data appears in the data container after the operation.",
        "A logical error occurs if the target data was not correctly modified as expected. "
        "Focus on whether the target data has been updated with the correct values.",
        "A logical error occurs if the target data was not correctly removed. "
        "Focus on whether the target data is still present or correctly removed in the data container.",
        "A logical error occurs if the target data was not correctly fetched or displayed as expected. "
        "Focus on whether the target data's details are correctly displayed.",
        "A logical error occurs if the target data does not appear in the search results as expected. "
        "Focus on whether the target data appears in the results.",
    };
    return kDefinitions[static_cast<std::size_t>(t)];
}

std::string render_dum_state(const std::optional<DumState>& s) {
    if (!s) return "(not on screen)";
    if (s->items.empty()) return "(no items)";
    std::string out;
    for (std::size_t i = 0; i < s->items.size(); ++i) {
        if (i) out += '\n';
        out += std::to_string(i + 1) + ". " + json(s->items[i].texts).dump();
    }
    return out;
}

namespace {

std::string render_target(const DmfInstance& dmf) {
    if (dmf.target_item) return json(dmf.target_item->texts).dump();
    if (!dmf.user_inputs.empty()) return json(dmf.user_inputs).dump();
    return "(none)";
}

// Message part of a logcat line ("E AndroidRuntime: ..." or "E/AndroidRuntime(42): ..."), trimmed.
std::string logcat_body(const std::string& line) {
    std::string s = line;
    if (auto tag = s.find("AndroidRuntime"); tag != std::string::npos)
        if (auto colon = s.find(": ", tag); colon != std::string::npos) s = s.substr(colon + 2);
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace

Verdict adjudicate(const DmfInstance& dmf, const DumState& before, const std::optional<DumState>& after,
                   LlmBackend& backend, const OracleContext& ctx) {
    PromptContext pc{
        {"dmf_type", std::string(to_string(dmf.dmf_type))},
        {"goal", dmf.goal.description.empty() ? initial_goal(dmf.dmf_type).description : dmf.goal.description},
        {"definition", dme_definition(dmf.dmf_type)},
        {"dum_before", render_dum_state(before)},
        {"dum_after", render_dum_state(after)},
        {"target", render_target(dmf)},
        {"user_inputs", dmf.user_inputs.empty() ? "(none)" : json(dmf.user_inputs).dump()},
        {"result_screen", ctx.result_screen.empty() ? "(not available)" : ctx.result_screen},
    };
    auto req = render_prompt(PromptKind::Oracle, pc);
    auto reply = extract_json_object(backend.send(req));
    if (!reply) return {Outcome::Indeterminate, "unparseable oracle reply"};
    auto bug = reply->find("bug");
    if (bug == reply->end() || !bug->is_boolean()) return {Outcome::Indeterminate, "oracle reply lacks 'bug'"};
    std::string reason = reply->value("reason", std::string{});
    if (reason.empty()) reason = bug->get<bool>() ? "reported as bug" : "reported as correct";
    return {bug->get<bool>() ? Outcome::Bug : Outcome::NoBug, std::move(reason)};
}

bool majority_bug(std::span<const Verdict> verdicts) {
    return std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.outcome == Outcome::Bug; }) >=
           2;
}

std::optional<BugReport> decide(const DmfInstance& dmf, const DumState& before, const std::optional<DumState>& after,
                                LlmBackend* backend, const OracleContext& ctx) {
    PostconditionResult structural;
    const bool mutating = dmf.dmf_type == DmfType::Create || dmf.dmf_type == DmfType::Update ||
                          dmf.dmf_type == DmfType::Delete;
    if (!after && mutating) {
        structural = {PostOutcome::Fail, "data container missing after manipulation"};
    } else if (!after) {
        structural = {PostOutcome::Indeterminate, "container not on result screen"};
    } else {
        structural = structural_postcondition(dmf.dmf_type, before, *after, dmf.target_item, dmf.user_inputs);
    }

    BugReport report;
    report.kind = BugKind::Logical;
    report.dmf = dmf;
    report.before = before;
    report.after = after;

    if (structural.outcome == PostOutcome::Pass) return std::nullopt;
    if (structural.outcome == PostOutcome::Fail) {
        report.reason = structural.reason;
        return report;
    }
    if (!backend) return std::nullopt;
    for (int i = 0; i < kAdjudicatorRuns; ++i) report.verdicts.push_back(adjudicate(dmf, before, after, *backend, ctx));
    if (!majority_bug(report.verdicts)) return std::nullopt;
    report.reason = "adjudicated";
    return report;
}

std::optional<std::string> detect_crash(std::span<const std::string> log) {
    static constexpr std::string_view kSimCrash = "SIM-CRASH ";
    for (std::size_t i = 0; i < log.size(); ++i) {
        const auto& line = log[i];
        if (auto p = line.find(kSimCrash); p != std::string::npos) {
            auto j = json::parse(line.substr(p + kSimCrash.size()), nullptr, false);
            if (!j.is_discarded() && j.is_object())
                return j.value("error", std::string("Crash")) + " at " + j.value("handler", std::string("unknown"));
            return line.substr(p + kSimCrash.size());
        }
        if (line.find("FATAL EXCEPTION") != std::string::npos) {
            std::string exception;
            std::string frame;
            for (std::size_t k = i + 1; k < log.size() && frame.empty(); ++k) {
                auto body = logcat_body(log[k]);
                if (body.rfind("at ", 0) == 0)
                    frame = body.substr(3);
                else if (exception.empty() && !body.empty() && body.rfind("Process:", 0) != 0)
                    exception = body;
            }
            std::string sig = exception.empty() ? "FATAL EXCEPTION" : exception;
            if (!frame.empty()) sig += " at " + frame;
            return sig;
        }
    }
    return std::nullopt;
}

// ---- JSON ------------------------------------------------------------------

json to_json(const Verdict& v) { return json{{"outcome", std::string(to_string(v.outcome))}, {"reason", v.reason}}; }

Verdict verdict_from_json(const json& j) {
    const auto o = j.at("outcome").get<std::string>();
    Outcome out = Outcome::Indeterminate;
    if (o == "Bug") out = Outcome::Bug;
    else if (o == "NoBug") out = Outcome::NoBug;
    else if (o != "Indeterminate") throw ParseError("unknown verdict outcome '" + o + "'", 0);
    return {out, j.value("reason", std::string{})};
}

json to_json(const BugReport& r) {
    json verdicts = json::array();
    for (const auto& v : r.verdicts) verdicts.push_back(to_json(v));
    json j{{"kind", std::string(to_string(r.kind))},
           {"app", r.app},
           {"dmf_type", std::string(to_string(r.dmf.dmf_type))},
           {"goal", to_json(r.dmf.goal)},
           {"verdicts", verdicts},
           {"reproduction", to_json(std::span<const UiEvent>(r.reproduction))},
           {"dmf_start", r.dmf_start},
           {"setup", to_json(std::span<const UiEvent>(r.dmf.setup))},
           {"before", to_json(r.before)},
           {"after", r.after ? to_json(*r.after) : json(nullptr)},
           {"reason", r.reason},
           {"first_seen_run", r.first_seen_run},
           {"dmf", to_json(r.dmf)}};
    if (r.crash_signature) j["crash_signature"] = *r.crash_signature;
    return j;
}

BugReport bug_report_from_json(const json& j) {
    BugReport r;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "Crash") r.kind = BugKind::Crash;
    else if (kind != "Logical") throw ParseError("unknown report kind '" + kind + "'", 0);
    r.app = j.value("app", std::string{});
    r.dmf = dmf_from_json(j.at("dmf"));
    for (const auto& v : j.value("verdicts", json::array())) r.verdicts.push_back(verdict_from_json(v));
    r.reproduction = events_from_json(j.at("reproduction"));
    r.dmf_start = j.value("dmf_start", std::size_t{0});
    r.before = dum_state_from_json(j.at("before"));
    if (auto it = j.find("after"); it != j.end() && !it->is_null()) r.after = dum_state_from_json(*it);
    if (auto it = j.find("crash_signature"); it != j.end() && !it->is_null()) r.crash_signature = it->get<std::string>();
    r.reason = j.value("reason", std::string{});
    r.first_seen_run = j.value("first_seen_run", 0);
    return r;
}

}  // namespace dmescope
