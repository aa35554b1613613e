#include "dmescope/dmf.hpp"

#include <algorithm>
#include <map>

#include "dmescope/errors.hpp"

namespace dmescope {

using nlohmann::json;

std::string_view to_string(DmfType t) noexcept {
    switch (t) {
        case DmfType::Create: return "Create";
        case DmfType::Update: return "Update";
        case DmfType::Delete: return "Delete";
        case DmfType::Read: return "Read";
        case DmfType::Search: return "Search";
    }
    return "Create";
}

DmfType dmf_type_from_string(std::string_view s) {
    for (auto t : kAllDmfTypes)
        if (to_string(t) == s) return t;
    throw ParseError("unknown DMF type '" + std::string(s) + "'", 0);
}

std::string_view to_string(PostOutcome o) noexcept {
    switch (o) {
        case PostOutcome::Pass: return "Pass";
        case PostOutcome::Fail: return "Fail";
        case PostOutcome::Indeterminate: return "Indeterminate";
    }
    return "Indeterminate";
}

Goal initial_goal(DmfType t) {
    switch (t) {
        case DmfType::Create: return {t, "Create a new data item in the data container"};
        case DmfType::Update: return {t, "Modify an existing data item in the data container"};
        case DmfType::Delete: return {t, "Delete a data item from the data container"};
        case DmfType::Read: return {t, "View the details of a data item in the data container"};
        case DmfType::Search: return {t, "Search for a data item in the data container"};
    }
    return {t, ""};
}

const StepPlaybook& general_steps(DmfType t) {
    static const std::array<StepPlaybook, 5> kPlaybooks{{
        {DmfType::Create,
         {"Open the create page", "Choose the creation type", "Enter the creation information", "Submit and save",
          "Return"}},
        {DmfType::Update,
         {"Select the data to edit", "Open the edit page", "Enter the modification information", "Submit and save",
          "Return"}},
        {DmfType::Delete, {"Select the data to delete", "Delete the data", "Confirm the deletion", "Return"}},
        {DmfType::Read, {"Select the data to read", "Open the detail page", "Read the detail"}},
        {DmfType::Search, {"Open the search page", "Enter the search keyword", "Read the search result"}},
    }};
    return kPlaybooks[static_cast<std::size_t>(t)];
}

std::vector<std::string> user_inputs_of(std::span<const UiEvent> events) {
    std::vector<std::string> out;
    for (const auto& e : events)
        if (e.type == EventType::InputText && !e.payload.empty()) out.push_back(e.payload);
    return out;
}

bool precondition_holds(DmfType t, const DumState& state) {
    return t == DmfType::Create || !state.items.empty();
}

namespace {

using Texts = std::vector<std::string>;

std::map<Texts, int> multiset_of(const DumState& s) {
    std::map<Texts, int> m;
    for (const auto& item : s.items) ++m[item.texts];
    return m;
}

bool shows(const Texts& texts, const std::string& value) {
    return std::any_of(texts.begin(), texts.end(),
                       [&](const std::string& t) { return t.find(value) != std::string::npos; });
}

PostconditionResult create_post(const DumState& before, const DumState& after, std::span<const std::string> inputs) {
    const auto nb = before.items.size();
    const auto na = after.items.size();
    if (na != nb + 1) return {PostOutcome::Fail, "item count not increased by one"};

    std::vector<std::string> named;
    for (const auto& in : inputs)
        if (!in.empty()) named.push_back(in);
    if (named.empty()) return {PostOutcome::Pass, "one item added"};

    // Items present after but not before (multiset difference).
    auto remaining = multiset_of(before);
    for (const auto& item : after.items) {
        auto it = remaining.find(item.texts);
        if (it != remaining.end() && it->second > 0) {
            --it->second;
            continue;
        }
        for (const auto& n : named)
            if (shows(item.texts, n)) return {PostOutcome::Pass, "added item shows user input"};
    }
    return {PostOutcome::Fail, "added item does not show user input"};
}

PostconditionResult delete_post(const DumState& before, const DumState& after, const DataItem& target) {
    const auto mb = multiset_of(before);
    const auto ma = multiset_of(after);
    auto count = [&](const std::map<Texts, int>& m) {
        auto it = m.find(target.texts);
        return it == m.end() ? 0 : it->second;
    };
    if (count(mb) == 0) return {PostOutcome::Indeterminate, "target not in container before deletion"};
    if (count(ma) >= count(mb)) return {PostOutcome::Fail, "item still present"};
    if (after.items.size() + 1 != before.items.size()) return {PostOutcome::Fail, "item count not reduced by one"};
    return {PostOutcome::Pass, "item removed"};
}

PostconditionResult update_post(const DumState& before, const DumState& after, const DataItem& target,
                                std::span<const std::string> inputs) {
    if (after.items.size() != before.items.size()) return {PostOutcome::Fail, "item count changed"};
    std::string edited;
    for (const auto& in : inputs)
        if (!in.empty()) edited = in;
    if (edited.empty()) return {PostOutcome::Indeterminate, "no edited value"};

    auto pos = std::find_if(before.items.begin(), before.items.end(),
                            [&](const DataItem& i) { return i.texts == target.texts; });
    if (pos == before.items.end()) return {PostOutcome::Indeterminate, "target not in container before update"};
    const auto idx = static_cast<std::size_t>(pos - before.items.begin());

    bool anywhere = std::any_of(after.items.begin(), after.items.end(),
                                [&](const DataItem& i) { return shows(i.texts, edited); });
    if (!anywhere) return {PostOutcome::Fail, "edited value not shown"};
    const auto& now = after.items[idx].texts;
    if (shows(now, edited) && now != before.items[idx].texts) return {PostOutcome::Pass, "item shows edited value"};
    return {PostOutcome::Indeterminate, "edited value shown but not at the target position"};
}

}  // namespace

PostconditionResult structural_postcondition(DmfType t, const DumState& before, const DumState& after,
                                             const std::optional<DataItem>& target,
                                             std::span<const std::string> inputs) {
    switch (t) {
        case DmfType::Create: return create_post(before, after, inputs);
        case DmfType::Delete:
            if (!target) throw ContractError("Delete postcondition needs a target item");
            return delete_post(before, after, *target);
        case DmfType::Update:
            if (!target) throw ContractError("Update postcondition needs a target item");
            return update_post(before, after, *target, inputs);
        case DmfType::Read:
        case DmfType::Search: return {PostOutcome::Indeterminate, "semantic check required"};
    }
    return {PostOutcome::Indeterminate, ""};
}

// ---- JSON ------------------------------------------------------------------

json to_json(const Goal& g) {
    return json{{"dmf_type", std::string(to_string(g.dmf_type))}, {"description", g.description}};
}

Goal goal_from_json(const json& j) {
    return Goal{dmf_type_from_string(j.at("dmf_type").get<std::string>()), j.at("description").get<std::string>()};
}

json to_json(const DmfInstance& d) {
    json j{{"dmf_type", std::string(to_string(d.dmf_type))},
           {"goal", to_json(d.goal)},
           {"events", to_json(std::span<const UiEvent>(d.events))},
           {"dum", to_json(d.dum)},
           {"user_inputs", d.user_inputs},
           {"snapshot_pre", d.snapshot_pre},
           {"snapshot_post", d.snapshot_post},
           {"setup", to_json(std::span<const UiEvent>(d.setup))}};
    j["target_item"] = d.target_item ? to_json(*d.target_item) : json(nullptr);
    return j;
}

DmfInstance dmf_from_json(const json& j) {
    DmfInstance d;
    d.dmf_type = dmf_type_from_string(j.at("dmf_type").get<std::string>());
    d.goal = goal_from_json(j.at("goal"));
    d.events = events_from_json(j.at("events"));
    d.dum = dum_from_json(j.at("dum"));
    d.user_inputs = j.value("user_inputs", std::vector<std::string>{});
    d.snapshot_pre = j.value("snapshot_pre", SnapshotId{0});
    d.snapshot_post = j.value("snapshot_post", SnapshotId{0});
    if (auto it = j.find("target_item"); it != j.end() && !it->is_null()) d.target_item = data_item_from_json(*it);
    if (auto it = j.find("setup"); it != j.end()) d.setup = events_from_json(*it);
    return d;
}

}  // namespace dmescope
