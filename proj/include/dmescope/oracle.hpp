#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dmescope/dmf.hpp"
#include "dmescope/dum.hpp"
#include "dmescope/llm.hpp"

namespace dmescope {

enum class Outcome { Bug, NoBug, Indeterminate };

std::string_view to_string(Outcome o) noexcept;

struct Verdict {
    Outcome outcome = Outcome::Indeterminate;
    std::string reason;

    bool operator==(const Verdict&) const = default;
};

enum class BugKind { Logical, Crash };

std::string_view to_string(BugKind k) noexcept;

struct BugReport {
    BugKind kind = BugKind::Logical;
    std::string app;
    DmfInstance dmf;
    std::vector<Verdict> verdicts;
    DumState before;
    std::optional<DumState> after;
    /// Everything performed after the baseline restore, interleaved events included.
    std::vector<UiEvent> reproduction;
    /// Index into `reproduction` where the DMF's own events begin.
    std::size_t dmf_start = 0;
    std::optional<std::string> crash_signature;
    /// Structural failure reason, or "adjudicated" when the vote decided.
    std::string reason;
    int first_seen_run = 0;
};

/// The natural-language logical-error definition for a DMF type.
const std::string& dme_definition(DmfType t);

/// Renders items one per line as JSON text arrays; "(no items)" when empty,
/// "(not on screen)" when absent.
std::string render_dum_state(const std::optional<DumState>& s);

struct OracleContext {
    /// Textual description of the screen after the manipulation.
    std::string result_screen;
};

/// One temperature-0 oracle call. Unparseable replies give Indeterminate.
Verdict adjudicate(const DmfInstance& dmf, const DumState& before, const std::optional<DumState>& after,
                   LlmBackend& backend, const OracleContext& ctx = {});

/// True iff at least two verdicts are Bug.
bool majority_bug(std::span<const Verdict> verdicts);

inline constexpr int kAdjudicatorRuns = 3;

/// Structural check first; only Indeterminate escalates to three adjudicator
/// runs. Without a backend an Indeterminate case yields no report.
std::optional<BugReport> decide(const DmfInstance& dmf, const DumState& before, const std::optional<DumState>& after,
                                LlmBackend* backend, const OracleContext& ctx = {});

/// Crash signature from log lines: simulator `SIM-CRASH {...}` events, or a
/// platform fatal-exception line plus the first stack frame.
std::optional<std::string> detect_crash(std::span<const std::string> log);

nlohmann::json to_json(const Verdict& v);
Verdict verdict_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BugReport& r);
BugReport bug_report_from_json(const nlohmann::json& j);

}  // namespace dmescope
