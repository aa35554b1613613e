#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dmescope/dmf.hpp"
#include "dmescope/dum.hpp"
#include "dmescope/env.hpp"
#include "dmescope/llm.hpp"
#include "dmescope/ui_model.hpp"

namespace dmescope {

struct HistoryEntry {
    UiEvent event;
    std::string change_summary;
    UiDiff diff;
};

struct ActionHistory {
    std::vector<HistoryEntry> entries;

    std::size_t step_count() const noexcept { return entries.size(); }
    std::vector<UiEvent> events() const;
    /// `1. <event> => <summary>` per line, "(none)" when empty.
    std::string render() const;
};

enum class ProgressStatus { InProgress, Complete, Stuck };

std::string_view to_string(ProgressStatus s) noexcept;

struct Progress {
    std::size_t current_step_index = 0;
    ProgressStatus status = ProgressStatus::InProgress;

    bool operator==(const Progress&) const = default;
};

/// Numbered steps with "(done)" before and "<- current" on the current step.
std::string render_progress(const StepPlaybook& playbook, const Progress& p);

/// "0: <event>" per line.
std::string render_actions(std::span<const UiEvent> available);

std::string describe(const Dum& d);

struct PlanRequest {
    Goal goal;
    const Dum* dum = nullptr;
    std::string screen;
    std::span<const UiEvent> available;
    const ActionHistory* history = nullptr;
    Progress progress;
};

/// Picks one of `available`. An invalid choice is re-asked once; a second
/// invalid choice gives nullopt (the attempt is stuck).
std::optional<UiEvent> plan_next_action(const PlanRequest& req, LlmBackend& backend);

/// One-to-three sentence summary of what `last` changed. Falls back to the
/// templated diff rendering when the backend is absent or fails.
std::string extract_ui_changes(const UiEvent& last, const Dum& dum, const UiSnapshot& before, const UiSnapshot& after,
                               LlmBackend* backend);

/// Never moves backward; an unparseable reply keeps `previous`.
Progress check_task_progress(const Goal& goal, const ActionHistory& history, const StepPlaybook& playbook,
                             const Progress& previous, LlmBackend& backend);

/// Same-type goals not yet attempted (case-insensitive), in reply order.
std::vector<Goal> discover_sibling_goals(const Goal& goal, const ActionHistory& history,
                                         std::span<const Goal> attempted, LlmBackend& backend);

struct CollectConfig {
    std::size_t max_steps = kDefaultMaxSteps;
    int attempts_per_goal = 1;
    std::vector<DmfType> types{kAllDmfTypes.begin(), kAllDmfTypes.end()};
};

struct CollectResult {
    std::vector<DmfInstance> instances;
    std::vector<std::string> log;
};

/// Collects validated DMF instances for `dum`, starting every attempt from
/// the saved `baseline` snapshot. `setup` is recorded on each instance.
CollectResult collect_dmfs(Environment& env, SnapshotId baseline, const Dum& dum, LlmBackend& backend,
                           const CollectConfig& cfg = {}, std::span<const UiEvent> setup = {});

/// The DUM item whose subtree contains the widget `e` targets in `s`.
std::optional<DataItem> item_touched_by(const UiSnapshot& s, const Dum& dum, const UiEvent& e);

}  // namespace dmescope
