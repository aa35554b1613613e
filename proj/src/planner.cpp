#include "dmescope/planner.hpp"

#include <algorithm>
#include <cctype>

#include "dmescope/errors.hpp"
#include "dmescope/oracle.hpp"

namespace dmescope {

using nlohmann::json;

std::vector<UiEvent> ActionHistory::events() const {
    std::vector<UiEvent> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.event);
    return out;
}

std::string ActionHistory::render() const {
    if (entries.empty()) return "(none)";
    std::string out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i) out += '\n';
        out += std::to_string(i + 1) + ". " + describe(entries[i].event) + " => " + entries[i].change_summary;
    }
    return out;
}

std::string_view to_string(ProgressStatus s) noexcept {
    switch (s) {
        case ProgressStatus::InProgress: return "InProgress";
        case ProgressStatus::Complete: return "Complete";
        case ProgressStatus::Stuck: return "Stuck";
    }
    return "InProgress";
}

std::string render_progress(const StepPlaybook& playbook, const Progress& p) {
    std::string out;
    for (std::size_t i = 0; i < playbook.steps.size(); ++i) {
        if (i) out += '\n';
        out += std::to_string(i + 1) + ". " + playbook.steps[i];
        if (p.status == ProgressStatus::Complete || i < p.current_step_index) out += " (done)";
        else if (i == p.current_step_index) out += " <- current";
    }
    return out;
}

std::string render_actions(std::span<const UiEvent> available) {
    std::string out;
    for (std::size_t i = 0; i < available.size(); ++i) {
        if (i) out += '\n';
        out += std::to_string(i) + ": " + describe(available[i]);
    }
    return out;
}

std::string describe(const Dum& d) {
    return d.container.describe() + " on screen '" + d.screen_id + "' with " + std::to_string(d.members.size()) +
           " items";
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// A structured plan reply mapped onto the offered actions; nullopt if invalid.
std::optional<UiEvent> choose(const json& reply, std::span<const UiEvent> available) {
    std::optional<UiEvent> picked;
    if (auto idx = reply.find("index"); idx != reply.end() && idx->is_number_integer()) {
        auto i = idx->get<long long>();
        if (i < 0 || static_cast<std::size_t>(i) >= available.size()) return std::nullopt;
        picked = available[static_cast<std::size_t>(i)];
    } else if (auto act = reply.find("action"); act != reply.end() && act->is_string()) {
        EventType type;
        try {
            type = event_type_from_string(act->get<std::string>());
        } catch (const Error&) {
            return std::nullopt;
        }
        const std::string target = reply.value("target", std::string{});
        for (const auto& e : available) {
            if (e.type != type) continue;
            if (type == EventType::Back ||
                (e.target && (e.target->resource_id == target || e.target->text == target ||
                              e.target->describe() == target))) {
                if (type == EventType::Scroll && reply.contains("direction") &&
                    reply.value("direction", std::string{}) != e.payload)
                    continue;
                picked = e;
                break;
            }
        }
        if (!picked) return std::nullopt;
    } else {
        return std::nullopt;
    }
    if (picked->type == EventType::InputText) {
        auto text = reply.value("text", std::string{});
        if (text.empty()) return std::nullopt;
        picked->payload = std::move(text);
    }
    return picked;
}

}  // namespace

std::optional<UiEvent> plan_next_action(const PlanRequest& req, LlmBackend& backend) {
    if (req.available.empty()) throw ContractError("no available actions to plan over");
    if (!req.dum || !req.history) throw ContractError("plan request needs a DUM and an action history");
    PromptContext ctx{
        {"dmf_type", std::string(to_string(req.goal.dmf_type))},
        {"goal", req.goal.description},
        {"dum", describe(*req.dum)},
        {"screen", req.screen.empty() ? "(not available)" : req.screen},
        {"available_actions", render_actions(req.available)},
        {"action_history", req.history->render()},
        {"progress", render_progress(general_steps(req.goal.dmf_type), req.progress)},
    };
    auto chat = render_prompt(PromptKind::Plan, ctx);
    for (int round = 0; round < 2; ++round) {
        auto text = backend.send(chat);
        if (auto reply = extract_json_object(text))
            if (auto e = choose(*reply, req.available)) return e;
        chat.messages.push_back({Role::Assistant, text});
        chat.messages.push_back({Role::User,
                                 "That choice is not one of the available actions. Choose again from the list and "
                                 "reply with one JSON object."});
    }
    return std::nullopt;
}

std::string extract_ui_changes(const UiEvent& last, const Dum& dum, const UiSnapshot& before, const UiSnapshot& after,
                               LlmBackend* backend) {
    const auto diff = diff_snapshots(before, after);
    const auto fallback = render_diff(diff);
    if (diff.empty() || !backend) return fallback;
    PromptContext ctx{
        {"last_action", describe(last)},
        {"dum", describe(dum)},
        {"screen_before", screen_description(before)},
        {"screen_after", screen_description(after)},
        {"diff", fallback},
    };
    try {
        auto text = backend->send(render_prompt(PromptKind::UiChange, ctx));
        auto b = text.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return fallback;
        auto e = text.find_last_not_of(" \t\r\n");
        std::string summary = text.substr(b, e - b + 1);
        std::replace(summary.begin(), summary.end(), '\n', ' ');
        return summary;
    } catch (const Error&) {
        return fallback;
    }
}

Progress check_task_progress(const Goal& goal, const ActionHistory& history, const StepPlaybook& playbook,
                             const Progress& previous, LlmBackend& backend) {
    if (history.entries.empty()) return previous;
    if (previous.status != ProgressStatus::InProgress) return previous;
    std::string steps;
    for (std::size_t i = 0; i < playbook.steps.size(); ++i) {
        if (i) steps += '\n';
        steps += std::to_string(i + 1) + ". " + playbook.steps[i];
    }
    PromptContext ctx{
        {"dmf_type", std::string(to_string(goal.dmf_type))},
        {"goal", goal.description},
        {"general_steps", steps},
        {"action_history", history.render()},
    };
    auto reply = extract_json_object(backend.send(render_prompt(PromptKind::Progress, ctx)));
    if (!reply) return previous;
    Progress next = previous;
    if (auto s = reply->find("next_step"); s != reply->end() && s->is_number_integer()) {
        auto one_based = s->get<long long>();
        std::size_t idx = one_based <= 1 ? 0 : static_cast<std::size_t>(one_based - 1);
        if (!playbook.steps.empty()) idx = std::min(idx, playbook.steps.size() - 1);
        next.current_step_index = std::max(previous.current_step_index, idx);
    } else if (!reply->contains("done")) {
        return previous;
    }
    if (reply->value("done", false)) next.status = ProgressStatus::Complete;
    return next;
}

std::vector<Goal> discover_sibling_goals(const Goal& goal, const ActionHistory& history,
                                         std::span<const Goal> attempted, LlmBackend& backend) {
    std::string tried;
    for (const auto& g : attempted) {
        if (!tried.empty()) tried += '\n';
        tried += "- " + g.description;
    }
    PromptContext ctx{
        {"dmf_type", std::string(to_string(goal.dmf_type))},
        {"goal", goal.description},
        {"action_history", history.render()},
        {"attempted_goals", tried.empty() ? "(none)" : tried},
    };
    std::optional<json> reply;
    try {
        reply = extract_json_object(backend.send(render_prompt(PromptKind::Sibling, ctx)));
    } catch (const UnscriptedPrompt&) {
        throw;
    } catch (const TransportError&) {
        return {};
    }
    if (!reply) return {};
    auto goals = reply->find("goals");
    if (goals == reply->end() || !goals->is_array()) return {};

    std::vector<std::string> seen;
    for (const auto& g : attempted) seen.push_back(lower(g.description));
    seen.push_back(lower(goal.description));
    std::vector<Goal> out;
    for (const auto& g : *goals) {
        if (!g.is_string()) continue;
        auto desc = g.get<std::string>();
        if (desc.empty()) continue;
        auto key = lower(desc);
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
        out.push_back(Goal{goal.dmf_type, std::move(desc)});
    }
    return out;
}

std::optional<DataItem> item_touched_by(const UiSnapshot& s, const Dum& dum, const UiEvent& e) {
    if (!e.target) return std::nullopt;
    auto path = resolve(s, *e.target);
    if (!path) return std::nullopt;
    auto m = match_dum(s, dum);
    if (!m) return std::nullopt;
    for (const auto& member : m->members) {
        const auto& mp = member.path;
        if (mp.size() <= path->size() && std::equal(mp.begin(), mp.end(), path->begin())) {
            const Widget* w = find_widget(s.root, mp);
            return DataItem{collect_texts(*w), member};
        }
    }
    return std::nullopt;
}

namespace {

struct Attempt {
    ActionHistory history;
    Progress progress;
    std::optional<DataItem> target;
};

bool contains_goal(std::span<const Goal> goals, const Goal& g) {
    auto key = lower(g.description);
    return std::any_of(goals.begin(), goals.end(), [&](const Goal& o) { return lower(o.description) == key; });
}

}  // namespace

CollectResult collect_dmfs(Environment& env, SnapshotId baseline, const Dum& dum, LlmBackend& backend,
                           const CollectConfig& cfg, std::span<const UiEvent> setup) {
    CollectResult result;
    auto note = [&](std::string line) { result.log.push_back(std::move(line)); };

    for (auto type : cfg.types) {
        const auto tname = std::string(to_string(type));
        std::vector<Goal> queue{initial_goal(type)};
        std::vector<Goal> attempted;
        bool siblings_asked = false;

        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            const Goal goal = queue[qi];
            if (contains_goal(attempted, goal)) continue;
            attempted.push_back(goal);
            bool precondition_failed = false;

            for (int attempt = 0; attempt < std::max(1, cfg.attempts_per_goal); ++attempt) {
                Attempt a;
                DumState before;
                try {
                    env.restore_snapshot(baseline);
                    env.drain_log();
                    const auto s0 = env.current_snapshot();
                    if (!match_dum(s0, dum)) {
                        note(tname + ": data container not on the baseline screen; skipped");
                        precondition_failed = true;
                        break;
                    }
                    before = extract_dum_state(s0, dum);
                    if (!precondition_holds(type, before)) {
                        note(tname + ": precondition does not hold; skipped");
                        precondition_failed = true;
                        break;
                    }

                    bool crashed = false;
                    while (a.history.step_count() < cfg.max_steps) {
                        const auto s = env.current_snapshot();
                        const auto executed = a.history.events();
                        const auto available = enumerate_actions(s, executed);
                        PlanRequest pr{goal, &dum, env.screen_description(), available, &a.history, a.progress};
                        auto ev = plan_next_action(pr, backend);
                        if (!ev) {
                            a.progress.status = ProgressStatus::Stuck;
                            break;
                        }
                        if (!a.target && (type == DmfType::Update || type == DmfType::Delete ||
                                          type == DmfType::Read))
                            a.target = item_touched_by(s, dum, *ev);
                        auto res = env.perform(*ev);
                        if (!res.valid) {
                            note(tname + ": '" + goal.description + "' chose an inapplicable action: " + res.message);
                            a.progress.status = ProgressStatus::Stuck;
                            break;
                        }
                        const auto log = env.drain_log();
                        if (res.crashed || detect_crash(log)) {
                            crashed = true;
                            break;
                        }
                        const auto s2 = env.current_snapshot();
                        HistoryEntry entry{*ev, extract_ui_changes(*ev, dum, s, s2, &backend), diff_snapshots(s, s2)};
                        a.history.entries.push_back(std::move(entry));
                        a.progress =
                            check_task_progress(goal, a.history, general_steps(type), a.progress, backend);
                        if (a.progress.status == ProgressStatus::Complete) break;
                    }
                    if (crashed) {
                        note(tname + ": '" + goal.description + "' crashed the app; attempt dropped");
                        continue;
                    }
                    if (a.progress.status != ProgressStatus::Complete) {
                        note(tname + ": '" + goal.description + "' did not complete (" +
                             std::string(to_string(a.progress.status)) + ")");
                        continue;
                    }

                    DmfInstance inst;
                    inst.dmf_type = type;
                    inst.goal = goal;
                    inst.events = a.history.events();
                    inst.dum = dum;
                    inst.user_inputs = user_inputs_of(inst.events);
                    inst.snapshot_pre = baseline;
                    inst.setup.assign(setup.begin(), setup.end());
                    if (type == DmfType::Create || type == DmfType::Search) {
                        if (!inst.user_inputs.empty()) inst.target_item = DataItem{inst.user_inputs, Locator{}};
                    } else {
                        inst.target_item = a.target;
                    }
                    if ((type == DmfType::Update || type == DmfType::Delete) && !inst.target_item) {
                        note(tname + ": '" + goal.description + "' touched no data item; dropped");
                        continue;
                    }

                    const auto s_end = env.current_snapshot();
                    std::optional<DumState> after;
                    if (match_dum(s_end, dum)) after = extract_dum_state(s_end, dum);
                    auto report = decide(inst, before, after, &backend, {env.screen_description()});
                    inst.snapshot_post = env.save_snapshot();
                    if (report) {
                        note(tname + ": '" + goal.description + "' failed validation (" + report->reason + ")");
                        continue;
                    }
                    note(tname + ": '" + goal.description + "' validated with " + std::to_string(inst.events.size()) +
                         " events");
                    result.instances.push_back(inst);

                    if (!siblings_asked) {
                        siblings_asked = true;
                        std::vector<Goal> known = queue;
                        for (auto& g : discover_sibling_goals(goal, a.history, known, backend))
                            if (!contains_goal(queue, g)) queue.push_back(std::move(g));
                    }
                    break;
                } catch (const TransportError& e) {
                    note(tname + ": '" + goal.description + "' aborted: " + e.what());
                } catch (const UnscriptedPrompt& e) {
                    note(tname + ": '" + goal.description + "' aborted: " + e.what());
                }
            }
            if (precondition_failed) break;
        }
    }
    return result;
}

}  // namespace dmescope
