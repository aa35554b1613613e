#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dmescope/ui_model.hpp"

namespace dmescope {

/// A data container: a parent widget holding structurally similar item subtrees.
struct Dum {
    Locator container;
    std::string item_signature;  // hash of the item subtree's class shape
    std::vector<Locator> members;
    std::string screen_id;

    bool operator==(const Dum&) const = default;
};

struct DataItem {
    std::vector<std::string> texts;
    Locator locator;

    bool operator==(const DataItem&) const = default;
};

struct DumState {
    std::vector<DataItem> items;
    std::int64_t captured_at = 0;
};

/// App string constants; widgets showing only these are labels, not data.
struct StringTable {
    std::set<std::string> constants;

    bool contains(const std::string& s) const { return constants.count(s) != 0; }

    /// One constant per line, '#' lines are comments.
    static StringTable parse(std::string_view text);
};

struct DumConfig {
    double lambda = 0.5;
    double structure_threshold = 0.2;
    double align_threshold = 100.0;
};

/// Ordered-tree edit distance with unit costs, nodes equal iff same widget class.
std::size_t tree_edit_distance(const Widget& a, const Widget& b);

/// Edit distance normalised by the larger subtree's node count, in [0, 1].
double sim_structure(const Widget& a, const Widget& b);

/// Positional alignment in pixels; 0 for widgets stacked in a column or row
/// with matching extent.
double sim_align(const Widget& a, const Widget& b, double lambda = 0.5);

/// e.g. `LinearLayout(TextView,ImageView)`.
std::string class_shape(const Widget& w);
std::string item_signature(const Widget& w);

std::vector<Dum> identify_dums(const UiSnapshot& s, const StringTable& strings, const DumConfig& cfg = {});

/// Re-locate `d` in `s` and re-enumerate its members.
std::optional<Dum> match_dum(const UiSnapshot& s, const Dum& d);

/// Throws LookupError when the container is not on screen.
DumState extract_dum_state(const UiSnapshot& s, const Dum& d);

nlohmann::json to_json(const Dum& d);
Dum dum_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DataItem& item);
DataItem data_item_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DumState& s);
DumState dum_state_from_json(const nlohmann::json& j);

}  // namespace dmescope
