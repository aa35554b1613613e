#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dmescope/dmf.hpp"
#include "dmescope/dum.hpp"
#include "dmescope/env.hpp"
#include "dmescope/llm.hpp"
#include "dmescope/oracle.hpp"

namespace dmescope {

struct DumRecord {
    Dum dum;
    /// Valid only within the session that explored; `setup` re-creates it.
    SnapshotId snapshot = 0;
    std::vector<UiEvent> setup;
};

struct ExploreConfig {
    std::size_t budget = 0;
    std::uint64_t seed = 0;
    DumConfig dum;
    /// Falls back to the environment's own table, then to an empty one.
    std::optional<StringTable> strings;
};

/// Checks the launch screen, then takes `budget` exploration steps (model
/// chosen, or random when the backend is absent or fails), recording each new
/// DUM once per (screen, item signature) with a saved snapshot.
std::vector<DumRecord> explore_for_dums(Environment& env, LlmBackend* backend, const ExploreConfig& cfg);

/// Replays `setup` from the current state; false if an event did not apply.
bool replay_setup(Environment& env, std::span<const UiEvent> setup);

struct CampaignConfig {
    std::size_t budget = 500;  // performed events, interleaved ones included
    std::uint64_t seed = 7;
    double interleave_ratio = 3.0;
    int run = 1;
};

struct CampaignResult {
    std::vector<BugReport> reports;  // deduplicated, in discovery order
    std::size_t steps = 0;
    std::size_t trials = 0;
    std::size_t aborted = 0;
    std::vector<std::string> log;
    /// Set when the environment failed and the campaign stopped early.
    std::optional<std::string> error;
};

/// Round-robin over `dmfs`: restore the DMF's baseline, perform a geometric
/// number of random events, replay the DMF and judge it. The environment must
/// be freshly launched when called.
CampaignResult run_campaign(Environment& env, std::span<const DmfInstance> dmfs, LlmBackend* backend,
                            const CampaignConfig& cfg);

/// Dedup identity of a report.
std::string report_key(const BugReport& r);

struct ReplayOutcome {
    bool reproduced = false;
    std::optional<BugReport> report;
    std::string detail;
};

/// Re-executes a report's setup and reproduction on a freshly launched
/// environment and re-judges the DMF.
ReplayOutcome replay_report(Environment& env, const BugReport& report, LlmBackend* backend);

nlohmann::json to_json(const DumRecord& r);
DumRecord dum_record_from_json(const nlohmann::json& j);

}  // namespace dmescope
