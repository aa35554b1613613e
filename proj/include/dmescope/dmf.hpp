#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dmescope/dum.hpp"
#include "dmescope/ui_model.hpp"

namespace dmescope {

enum class DmfType { Create, Update, Delete, Read, Search };

inline constexpr std::array<DmfType, 5> kAllDmfTypes{DmfType::Create, DmfType::Update, DmfType::Delete,
                                                      DmfType::Read, DmfType::Search};

std::string_view to_string(DmfType t) noexcept;
DmfType dmf_type_from_string(std::string_view s);

struct Goal {
    DmfType dmf_type = DmfType::Create;
    std::string description;

    bool operator==(const Goal&) const = default;
};

/// The default objective for a DMF type.
Goal initial_goal(DmfType t);

struct StepPlaybook {
    DmfType dmf_type;
    std::vector<std::string> steps;
};

/// Abstract stages for triggering each DMF type. References stay valid for the
/// program's lifetime.
const StepPlaybook& general_steps(DmfType t);

using SnapshotId = std::int64_t;

inline constexpr std::size_t kDefaultMaxSteps = 10;

/// One collected functionality: {Pre} events {Post}.
struct DmfInstance {
    DmfType dmf_type = DmfType::Create;
    Goal goal;
    std::vector<UiEvent> events;
    Dum dum;
    std::vector<std::string> user_inputs;
    SnapshotId snapshot_pre = 0;
    SnapshotId snapshot_post = 0;
    std::optional<DataItem> target_item;
    /// Events that lead from app launch to the first page; lets a fresh
    /// environment re-create `snapshot_pre`.
    std::vector<UiEvent> setup;
};

/// Non-empty InputText payloads in order.
std::vector<std::string> user_inputs_of(std::span<const UiEvent> events);

/// Create only needs the container; every other type needs at least one item.
bool precondition_holds(DmfType t, const DumState& state);

enum class PostOutcome { Pass, Fail, Indeterminate };

std::string_view to_string(PostOutcome o) noexcept;

struct PostconditionResult {
    PostOutcome outcome = PostOutcome::Indeterminate;
    std::string reason;
};

/// Mechanical count/membership check. Throws ContractError when Delete or
/// Update is checked without a target item.
PostconditionResult structural_postcondition(DmfType t, const DumState& before, const DumState& after,
                                             const std::optional<DataItem>& target,
                                             std::span<const std::string> inputs);

nlohmann::json to_json(const Goal& g);
Goal goal_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DmfInstance& d);
DmfInstance dmf_from_json(const nlohmann::json& j);

}  // namespace dmescope
