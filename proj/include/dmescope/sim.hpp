#pragma once

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dmescope/env.hpp"

namespace dmescope {

enum class FaultKind {
    SkipRefreshAfterCreate,
    SkipRefreshAfterDelete,
    WrongFieldOnUpdate,
    StaleSearchResults,
    CrashOnEffect,
};

std::string_view to_string(FaultKind k) noexcept;

struct FaultSpec {
    FaultKind kind;
    std::string anchor;  // transition id
    std::string field;   // WrongFieldOnUpdate: field written instead
    std::string error = "NullDeref";
    std::string handler;
};

using Record = std::map<std::string, std::string>;

/// Deterministic in-memory app driven by a declarative JSON spec
/// (`spec_version: 1`): screens built from widget templates, record stores
/// bound to list containers, event-triggered transitions with effects, and
/// optional injected faults.
class SimEnvironment final : public Environment {
public:
    /// Throws LoadError naming the offending JSON path.
    static std::unique_ptr<SimEnvironment> from_json(const nlohmann::json& spec);
    static std::unique_ptr<SimEnvironment> load(const std::string& path);

    ~SimEnvironment() override;

    UiSnapshot current_snapshot() override;
    PerformResult perform(const UiEvent& e) override;
    SnapshotId save_snapshot() override;
    void restore_snapshot(SnapshotId id) override;
    std::vector<std::string> drain_log() override;
    std::string screen_description() override;
    std::string app_name() override;
    std::optional<StringTable> string_table() override;

    /// Records of a store in insertion order (test hook).
    std::vector<Record> store_records(const std::string& store) const;
    const std::vector<FaultSpec>& faults() const noexcept;

    struct Impl;

private:
    explicit SimEnvironment(std::unique_ptr<Impl> impl);

    std::unique_ptr<Impl> impl_;
};

/// Words typed by random InputText events.
const std::vector<std::string>& random_lexicon();

/// Uniform choice over every action the snapshot offers.
UiEvent random_event(std::mt19937_64& rng, const UiSnapshot& s);

}  // namespace dmescope
