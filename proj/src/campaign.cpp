#include "dmescope/campaign.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "dmescope/errors.hpp"
#include "dmescope/planner.hpp"
#include "dmescope/sim.hpp"

namespace dmescope {

using nlohmann::json;

bool replay_setup(Environment& env, std::span<const UiEvent> setup) {
    for (const auto& e : setup)
        if (!env.perform(e).valid) return false;
    return true;
}

// ---- exploration -----------------------------------------------------------

namespace {

std::optional<UiEvent> explorer_choice(LlmBackend& backend, const UiSnapshot& s, std::span<const UiEvent> available,
                                       const ActionHistory& history, const std::string& screen) {
    PromptContext ctx{
        {"screen", screen.empty() ? screen_description(s) : screen},
        {"available_actions", render_actions(available)},
        {"action_history", history.render()},
    };
    auto reply = extract_json_object(backend.send(render_prompt(PromptKind::Explore, ctx)));
    if (!reply) return std::nullopt;
    auto idx = reply->find("index");
    if (idx == reply->end() || !idx->is_number_integer()) return std::nullopt;
    auto i = idx->get<long long>();
    if (i < 0 || static_cast<std::size_t>(i) >= available.size()) return std::nullopt;
    UiEvent e = available[static_cast<std::size_t>(i)];
    if (e.type == EventType::InputText) {
        e.payload = reply->value("text", std::string{});
        if (e.payload.empty()) return std::nullopt;
    }
    return e;
}

}  // namespace

std::vector<DumRecord> explore_for_dums(Environment& env, LlmBackend* backend, const ExploreConfig& cfg) {
    StringTable strings;
    if (cfg.strings) strings = *cfg.strings;
    else if (auto t = env.string_table()) strings = *t;

    std::vector<DumRecord> found;
    std::set<std::pair<std::string, std::string>> seen;
    std::vector<UiEvent> performed;
    ActionHistory history;
    std::mt19937_64 rng(cfg.seed);

    auto scan = [&](const UiSnapshot& s) {
        for (auto& d : identify_dums(s, strings, cfg.dum)) {
            if (!seen.insert({d.screen_id, d.item_signature}).second) continue;
            found.push_back(DumRecord{std::move(d), env.save_snapshot(), performed});
        }
    };

    env.drain_log();
    scan(env.current_snapshot());
    for (std::size_t step = 0; step < cfg.budget; ++step) {
        const auto s = env.current_snapshot();
        const auto available = enumerate_actions(s, {});
        std::optional<UiEvent> e;
        if (backend) {
            try {
                e = explorer_choice(*backend, s, available, history, env.screen_description());
            } catch (const Error&) {
                e.reset();
            }
        }
        if (!e) e = random_event(rng, s);
        const auto res = env.perform(*e);
        env.drain_log();
        if (!res.valid) continue;
        performed.push_back(*e);
        const auto after = env.current_snapshot();
        history.entries.push_back({*e, render_diff(diff_snapshots(s, after)), {}});
        if (history.entries.size() > 5) history.entries.erase(history.entries.begin());
        scan(after);
    }
    return found;
}

// ---- campaign --------------------------------------------------------------

std::string report_key(const BugReport& r) {
    if (r.kind == BugKind::Crash) return "Crash|" + r.crash_signature.value_or("");
    return "Logical|" + std::string(to_string(r.dmf.dmf_type)) + "|" + r.reason;
}

namespace {

std::size_t geometric(std::mt19937_64& rng, double mean) {
    if (mean <= 0) return 0;
    const double continue_p = mean / (1.0 + mean);
    std::size_t k = 0;
    while (static_cast<double>(rng() >> 11) * 0x1.0p-53 < continue_p) ++k;
    return k;
}

bool binds_target(DmfType t) { return t == DmfType::Update || t == DmfType::Delete || t == DmfType::Read; }

std::optional<DumState> dum_state_if_present(const UiSnapshot& s, const Dum& d) {
    if (!match_dum(s, d)) return std::nullopt;
    return extract_dum_state(s, d);
}

struct DmfRun {
    enum class End { Judged, Crashed, Aborted, OutOfBudget } end = End::Aborted;
    std::optional<BugReport> report;
    std::string note;
};

// Replays the DMF's own events from the current state and judges the result.
DmfRun run_dmf(Environment& env, const DmfInstance& dmf, LlmBackend* backend, std::vector<UiEvent>& reproduction,
               std::size_t& steps, std::size_t budget) {
    DmfRun out;
    const auto s0 = env.current_snapshot();
    if (s0.screen_id != dmf.dum.screen_id || !match_dum(s0, dmf.dum)) {
        out.note = "data container not on screen";
        return out;
    }
    const auto before = extract_dum_state(s0, dmf.dum);
    if (!precondition_holds(dmf.dmf_type, before)) {
        out.note = "precondition does not hold";
        return out;
    }

    DmfInstance judged = dmf;
    std::optional<DataItem> touched;
    for (const auto& ev : dmf.events) {
        if (steps >= budget) {
            out.end = DmfRun::End::OutOfBudget;
            return out;
        }
        const auto s = env.current_snapshot();
        if (ev.target && !resolve(s, *ev.target)) {
            out.note = "could not re-resolve " + describe(ev);
            return out;
        }
        if (!touched && binds_target(dmf.dmf_type)) touched = item_touched_by(s, dmf.dum, ev);
        const auto res = env.perform(ev);
        ++steps;
        reproduction.push_back(ev);
        const auto log = env.drain_log();
        if (auto sig = detect_crash(log); sig || res.crashed) {
            BugReport r;
            r.kind = BugKind::Crash;
            r.dmf = dmf;
            r.before = before;
            r.crash_signature = sig.value_or(res.message);
            r.reason = *r.crash_signature;
            out.report = std::move(r);
            out.end = DmfRun::End::Crashed;
            return out;
        }
        if (!res.valid) {
            out.note = describe(ev) + " did not apply: " + res.message;
            return out;
        }
    }
    if (binds_target(dmf.dmf_type)) {
        if (!touched && dmf.dmf_type != DmfType::Read) {
            out.note = "no data item touched";
            return out;
        }
        judged.target_item = touched;
    }
    const auto s_end = env.current_snapshot();
    out.report = decide(judged, before, dum_state_if_present(s_end, dmf.dum), backend, {env.screen_description()});
    out.end = DmfRun::End::Judged;
    return out;
}

std::string setup_key(const std::vector<UiEvent>& setup) {
    return to_json(std::span<const UiEvent>(setup)).dump();
}

}  // namespace

CampaignResult run_campaign(Environment& env, std::span<const DmfInstance> dmfs, LlmBackend* backend,
                            const CampaignConfig& cfg) {
    if (dmfs.empty()) throw ContractError("campaign needs at least one DMF instance");
    CampaignResult result;
    auto note = [&](std::string s) { result.log.push_back(std::move(s)); };
    const auto app = env.app_name();

    try {
        env.drain_log();
        const SnapshotId launch = env.save_snapshot();
        std::map<std::string, SnapshotId> baselines;
        for (const auto& d : dmfs) {
            const auto key = setup_key(d.setup);
            if (baselines.count(key)) continue;
            env.restore_snapshot(launch);
            if (!replay_setup(env, d.setup)) throw LookupError("setup events of a " + std::string(to_string(d.dmf_type)) +
                                                               " instance no longer apply");
            env.drain_log();
            baselines[key] = env.save_snapshot();
        }

        std::mt19937_64 rng(cfg.seed);
        std::set<std::string> seen;
        auto file = [&](BugReport r, std::vector<UiEvent> reproduction, std::size_t dmf_start) {
            r.app = app;
            r.reproduction = std::move(reproduction);
            r.dmf_start = dmf_start;
            r.first_seen_run = cfg.run;
            const auto key = report_key(r);
            if (!seen.insert(key).second) return;
            note("trial " + std::to_string(result.trials) + ": new report " + key);
            result.reports.push_back(std::move(r));
        };

        for (std::size_t i = 0; result.steps < cfg.budget; ++i) {
            const auto& dmf = dmfs[i % dmfs.size()];
            ++result.trials;
            env.restore_snapshot(baselines.at(setup_key(dmf.setup)));
            env.drain_log();

            std::vector<UiEvent> reproduction;
            bool crashed = false;
            const auto k = geometric(rng, cfg.interleave_ratio);
            for (std::size_t j = 0; j < k && result.steps < cfg.budget; ++j) {
                const auto s = env.current_snapshot();
                const auto e = random_event(rng, s);
                const auto res = env.perform(e);
                ++result.steps;
                reproduction.push_back(e);
                const auto log = env.drain_log();
                if (auto sig = detect_crash(log); sig || res.crashed) {
                    BugReport r;
                    r.kind = BugKind::Crash;
                    r.dmf = dmf;
                    if (auto st = dum_state_if_present(s, dmf.dum)) r.before = *st;
                    r.crash_signature = sig.value_or(res.message);
                    r.reason = *r.crash_signature;
                    const auto start = reproduction.size();
                    file(std::move(r), std::move(reproduction), start);
                    crashed = true;
                    break;
                }
            }
            if (crashed || result.steps >= cfg.budget) continue;

            const auto dmf_start = reproduction.size();
            auto run = run_dmf(env, dmf, backend, reproduction, result.steps, cfg.budget);
            switch (run.end) {
                case DmfRun::End::Aborted:
                    ++result.aborted;
                    note("trial " + std::to_string(result.trials) + " (" + std::string(to_string(dmf.dmf_type)) +
                         ") aborted: " + run.note);
                    break;
                case DmfRun::End::OutOfBudget: break;
                case DmfRun::End::Crashed:
                case DmfRun::End::Judged:
                    if (run.report) file(std::move(*run.report), std::move(reproduction), dmf_start);
                    break;
            }
        }
    } catch (const TransportError& e) {
        result.error = e.what();
        note(std::string("campaign stopped: ") + e.what());
    }
    return result;
}

ReplayOutcome replay_report(Environment& env, const BugReport& report, LlmBackend* backend) {
    ReplayOutcome out;
    env.drain_log();
    if (!replay_setup(env, report.dmf.setup)) {
        out.detail = "setup events no longer apply";
        return out;
    }
    env.drain_log();
    if (report.dmf_start > report.reproduction.size()) throw ContractError("report dmf_start beyond reproduction");

    for (std::size_t i = 0; i < report.dmf_start; ++i) {
        const auto res = env.perform(report.reproduction[i]);
        const auto log = env.drain_log();
        if (auto sig = detect_crash(log); sig || res.crashed) {
            BugReport r = report;
            r.crash_signature = sig.value_or(res.message);
            out.reproduced = report.kind == BugKind::Crash && r.crash_signature == report.crash_signature;
            out.detail = "crash: " + *r.crash_signature;
            out.report = std::move(r);
            return out;
        }
    }
    if (report.kind == BugKind::Crash && report.dmf_start == report.reproduction.size()) {
        out.detail = "no crash observed";
        return out;
    }

    DmfInstance dmf = report.dmf;
    dmf.events.assign(report.reproduction.begin() + static_cast<std::ptrdiff_t>(report.dmf_start),
                      report.reproduction.end());
    std::vector<UiEvent> reproduction;
    std::size_t steps = 0;
    auto run = run_dmf(env, dmf, backend, reproduction, steps, dmf.events.size());
    switch (run.end) {
        case DmfRun::End::Aborted:
        case DmfRun::End::OutOfBudget: out.detail = "replay aborted: " + run.note; return out;
        case DmfRun::End::Crashed:
            out.report = std::move(run.report);
            out.detail = "crash: " + out.report->crash_signature.value_or("");
            out.reproduced = report.kind == BugKind::Crash && out.report->crash_signature == report.crash_signature;
            return out;
        case DmfRun::End::Judged: break;
    }
    if (!run.report) {
        out.detail = "DMF passed on replay";
        return out;
    }
    out.report = std::move(run.report);
    out.detail = "verdict: " + out.report->reason;
    out.reproduced = report.kind == BugKind::Logical && out.report->reason == report.reason;
    return out;
}

json to_json(const DumRecord& r) {
    return json{{"dum", to_json(r.dum)},
                {"snapshot", r.snapshot},
                {"setup", to_json(std::span<const UiEvent>(r.setup))}};
}

DumRecord dum_record_from_json(const json& j) {
    DumRecord r;
    r.dum = dum_from_json(j.at("dum"));
    r.snapshot = j.value("snapshot", SnapshotId{0});
    if (auto it = j.find("setup"); it != j.end()) r.setup = events_from_json(*it);
    return r;
}

}  // namespace dmescope
