#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dmescope/dmf.hpp"
#include "dmescope/dum.hpp"
#include "dmescope/ui_model.hpp"

namespace dmescope {

struct PerformResult {
    /// False when the event did not resolve or did not apply; nothing changed.
    bool valid = true;
    bool crashed = false;
    std::string message;
};

/// A drivable app: simulator, remote device bridge, or test double.
/// Instances are single-session; callers must not perform concurrently.
class Environment {
public:
    virtual ~Environment() = default;

    virtual UiSnapshot current_snapshot() = 0;
    virtual PerformResult perform(const UiEvent& e) = 0;
    virtual SnapshotId save_snapshot() = 0;
    /// Throws LookupError for ids this session never issued.
    virtual void restore_snapshot(SnapshotId id) = 0;
    virtual std::vector<std::string> drain_log() = 0;
    virtual std::string screen_description() = 0;

    virtual std::string app_name() { return "app"; }
    /// String constants shipped with the app, when the environment knows them.
    virtual std::optional<StringTable> string_table() { return std::nullopt; }
};

}  // namespace dmescope
