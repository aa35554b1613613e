#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace dmescope {

struct Bounds {
    int x1 = 0;
    int y1 = 0;
    int x2 = 0;
    int y2 = 0;

    int width() const noexcept { return x2 - x1; }
    int height() const noexcept { return y2 - y1; }
    double center_x() const noexcept { return (x1 + x2) / 2.0; }
    double center_y() const noexcept { return (y1 + y2) / 2.0; }

    bool operator==(const Bounds&) const = default;
};

enum class WidgetFlag : std::uint8_t {
    Clickable = 1U << 0,
    LongClickable = 1U << 1,
    Editable = 1U << 2,
    Scrollable = 1U << 3,  // vertical axis
    Enabled = 1U << 4,
    HScrollable = 1U << 5,  // horizontal axis
};

class WidgetFlags {
public:
    WidgetFlags() = default;
    WidgetFlags(std::initializer_list<WidgetFlag> flags) {
        for (auto f : flags) set(f);
    }

    bool has(WidgetFlag f) const noexcept { return (bits_ & static_cast<std::uint8_t>(f)) != 0; }
    void set(WidgetFlag f, bool on = true) noexcept {
        if (on)
            bits_ |= static_cast<std::uint8_t>(f);
        else
            bits_ &= static_cast<std::uint8_t>(~static_cast<std::uint8_t>(f));
    }
    std::uint8_t bits() const noexcept { return bits_; }

    bool operator==(const WidgetFlags&) const = default;

private:
    std::uint8_t bits_ = static_cast<std::uint8_t>(WidgetFlag::Enabled);
};

/// One node of a UI hierarchy. Empty `text` / `resource_id` mean absent.
struct Widget {
    std::string widget_class;
    std::string text;
    std::string resource_id;
    Bounds bounds;
    WidgetFlags flags;
    std::vector<Widget> children;

    std::size_t node_count() const noexcept;
    bool editable() const noexcept { return flags.has(WidgetFlag::Editable); }

    bool operator==(const Widget&) const = default;
};

struct UiSnapshot {
    Widget root;
    std::string screen_id;
    std::int64_t capture_seq = 0;

    bool operator==(const UiSnapshot&) const = default;
};

/// Sibling indices from the root down to a widget; the root itself is `{}`.
using WidgetPath = std::vector<int>;

/// Cross-snapshot handle for a widget. Identity is the resource id when present,
/// otherwise the widget class plus sibling path; `text` is the text signature
/// used to disambiguate repeated resource ids (list rows).
struct Locator {
    WidgetPath path;
    std::string resource_id;
    std::string widget_class;
    std::string text;

    std::string describe() const;

    bool operator==(const Locator&) const = default;
};

enum class EventType { Click, LongClick, InputText, Scroll, Back };

std::string_view to_string(EventType t) noexcept;
EventType event_type_from_string(std::string_view s);

struct UiEvent {
    EventType type = EventType::Back;
    std::optional<Locator> target;
    std::string payload;

    static UiEvent back() { return UiEvent{}; }

    bool operator==(const UiEvent&) const = default;
};

/// Equality used for action de-duplication: InputText events on the same widget
/// are the same action regardless of the text typed.
bool same_action(const UiEvent& a, const UiEvent& b);

/// Single-line rendering used in prompts and history, e.g.
/// `Click [add_btn] Button "Add"`.
std::string describe(const UiEvent& e);

struct WidgetRef {
    Locator locator;
    std::string parent;     // resource id or class of the parent widget
    std::string signature;  // class[id] "text"

    bool operator==(const WidgetRef&) const = default;
};

struct TextChange {
    Locator locator;
    std::string old_text;
    std::string new_text;

    bool operator==(const TextChange&) const = default;
};

struct AttrChange {
    Locator locator;
    std::string attribute;
    std::string old_value;
    std::string new_value;

    bool operator==(const AttrChange&) const = default;
};

struct ScreenTransition {
    std::string from;
    std::string to;

    bool operator==(const ScreenTransition&) const = default;
};

struct UiDiff {
    std::vector<WidgetRef> added;  // maximal added subtrees only
    std::vector<WidgetRef> removed;
    std::vector<TextChange> text_changed;
    std::vector<AttrChange> attr_changed;  // bounds / flags
    std::optional<ScreenTransition> screen_transition;

    bool empty() const noexcept {
        return added.empty() && removed.empty() && text_changed.empty() && attr_changed.empty() &&
               !screen_transition;
    }
};

// ---- tree helpers ----------------------------------------------------------

void for_each_preorder(const Widget& root,
                       const std::function<void(const Widget&, const WidgetPath&)>& visit);

const Widget* find_widget(const Widget& root, const WidgetPath& path) noexcept;

/// Own text for leaves, otherwise the non-empty descendant texts joined with
/// " | ". Editable widgets have an empty signature: their content is user data.
std::string text_signature(const Widget& w);

/// Visible texts of a subtree in pre-order, empty strings dropped.
std::vector<std::string> collect_texts(const Widget& w);

Locator make_locator(const Widget& root, const WidgetPath& path);

/// Resolve a locator against a snapshot; at most one widget.
std::optional<WidgetPath> resolve(const UiSnapshot& s, const Locator& loc);

// ---- operations ------------------------------------------------------------

/// Accepts either an accessibility-dump XML document or canonical JSON.
UiSnapshot parse_snapshot(std::string_view document);

/// Canonical JSON: sorted keys, compact, UTF-8.
std::string serialize_snapshot(const UiSnapshot& s);

/// Structural content of the snapshot without the capture counter.
std::string canonical_content(const UiSnapshot& s);

std::vector<UiEvent> enumerate_actions(const UiSnapshot& s, std::span<const UiEvent> executed);

UiDiff diff_snapshots(const UiSnapshot& before, const UiSnapshot& after);

/// Plain-language rendering of a diff; "No visible change." when empty.
std::string render_diff(const UiDiff& d);

/// Outline of a screen used in place of a screenshot.
std::string screen_description(const UiSnapshot& s);

// ---- JSON ------------------------------------------------------------------

nlohmann::json to_json(const Widget& w);
nlohmann::json to_json(const UiSnapshot& s);
nlohmann::json to_json(const Locator& l);
nlohmann::json to_json(const UiEvent& e);
Widget widget_from_json(const nlohmann::json& j);
UiSnapshot snapshot_from_json(const nlohmann::json& j);
Locator locator_from_json(const nlohmann::json& j);
UiEvent event_from_json(const nlohmann::json& j);
nlohmann::json to_json(std::span<const UiEvent> events);
std::vector<UiEvent> events_from_json(const nlohmann::json& j);

}  // namespace dmescope
