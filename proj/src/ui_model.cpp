#include "dmescope/ui_model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>

#include "dmescope/errors.hpp"
#include "xml_reader.hpp"

namespace dmescope {

using nlohmann::json;

std::size_t Widget::node_count() const noexcept {
    std::size_t n = 1;
    for (const auto& c : children) n += c.node_count();
    return n;
}

namespace {

constexpr std::array<std::pair<WidgetFlag, std::string_view>, 6> kFlagNames{{
    {WidgetFlag::Clickable, "clickable"},
    {WidgetFlag::LongClickable, "long_clickable"},
    {WidgetFlag::Editable, "editable"},
    {WidgetFlag::Scrollable, "scrollable"},
    {WidgetFlag::HScrollable, "h_scrollable"},
    {WidgetFlag::Enabled, "enabled"},
}};

std::string path_string(const WidgetPath& p) {
    std::string s;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) s += '/';
        s += std::to_string(p[i]);
    }
    return s;
}

std::string label(const Widget& w) {
    return w.resource_id.empty() ? w.widget_class : w.widget_class + "[" + w.resource_id + "]";
}

std::string signature(const Widget& w) {
    auto t = text_signature(w);
    return t.empty() ? label(w) : label(w) + " \"" + t + "\"";
}

std::string flags_string(WidgetFlags f) {
    std::string s;
    for (const auto& [flag, name] : kFlagNames) {
        if (!f.has(flag)) continue;
        if (!s.empty()) s += ',';
        s += name;
    }
    return s;
}

std::string bounds_string(const Bounds& b) {
    return "[" + std::to_string(b.x1) + "," + std::to_string(b.y1) + "][" + std::to_string(b.x2) + "," +
           std::to_string(b.y2) + "]";
}

void preorder(const Widget& w, WidgetPath& path,
              const std::function<void(const Widget&, const WidgetPath&)>& visit) {
    visit(w, path);
    for (std::size_t i = 0; i < w.children.size(); ++i) {
        path.push_back(static_cast<int>(i));
        preorder(w.children[i], path, visit);
        path.pop_back();
    }
}

void collect_texts_into(const Widget& w, std::vector<std::string>& out) {
    if (!w.text.empty()) out.push_back(w.text);
    for (const auto& c : w.children) collect_texts_into(c, out);
}

void collect_signature_texts(const Widget& w, std::vector<std::string>& out) {
    if (w.editable()) return;
    if (!w.text.empty()) out.push_back(w.text);
    for (const auto& c : w.children) collect_signature_texts(c, out);
}

// ---- XML -------------------------------------------------------------------

bool truthy(const xml::Element& el, std::string_view key, bool fallback) {
    auto v = el.attribute(key);
    if (!v) return fallback;
    return *v == "true";
}

Bounds parse_bounds(std::string_view s, std::size_t offset) {
    // "[x1,y1][x2,y2]"
    std::array<int, 4> v{};
    std::size_t pos = 0;
    auto number = [&](int& out) {
        auto end = s.data() + s.size();
        auto [ptr, ec] = std::from_chars(s.data() + pos, end, out);
        if (ec != std::errc()) throw ParseError("malformed bounds '" + std::string(s) + "'", offset);
        pos = static_cast<std::size_t>(ptr - s.data());
    };
    auto lit = [&](char c) {
        if (pos >= s.size() || s[pos] != c) throw ParseError("malformed bounds '" + std::string(s) + "'", offset);
        ++pos;
    };
    lit('[');
    number(v[0]);
    lit(',');
    number(v[1]);
    lit(']');
    lit('[');
    number(v[2]);
    lit(',');
    number(v[3]);
    lit(']');
    if (pos != s.size()) throw ParseError("malformed bounds '" + std::string(s) + "'", offset);
    Bounds b{v[0], v[1], v[2], v[3]};
    if (b.x2 < b.x1 || b.y2 < b.y1) throw ParseError("degenerate bounds '" + std::string(s) + "'", offset);
    return b;
}

Widget widget_from_xml(const xml::Element& el) {
    Widget w;
    w.widget_class = std::string(el.attribute("class").value_or(""));
    w.text = std::string(el.attribute("text").value_or(""));
    w.resource_id = std::string(el.attribute("resource-id").value_or(""));
    if (auto b = el.attribute("bounds")) w.bounds = parse_bounds(*b, el.offset);
    w.flags.set(WidgetFlag::Clickable, truthy(el, "clickable", false));
    w.flags.set(WidgetFlag::LongClickable, truthy(el, "long-clickable", false));
    bool editable = truthy(el, "editable", false) || w.widget_class.find("EditText") != std::string::npos;
    w.flags.set(WidgetFlag::Editable, editable);
    bool scrollable = truthy(el, "scrollable", false);
    auto axis = el.attribute("scroll-axis").value_or("vertical");
    w.flags.set(WidgetFlag::Scrollable, scrollable && (axis == "vertical" || axis == "both"));
    w.flags.set(WidgetFlag::HScrollable, scrollable && (axis == "horizontal" || axis == "both"));
    w.flags.set(WidgetFlag::Enabled, truthy(el, "enabled", true));
    for (const auto& child : el.children)
        if (child.name == "node") w.children.push_back(widget_from_xml(child));
    return w;
}

UiSnapshot snapshot_from_xml(std::string_view doc) {
    auto root = xml::parse(doc);
    UiSnapshot s;
    if (root.name == "node") {
        s.root = widget_from_xml(root);
    } else if (root.name == "hierarchy") {
        std::vector<const xml::Element*> nodes;
        for (const auto& c : root.children)
            if (c.name == "node") nodes.push_back(&c);
        if (nodes.size() == 1) {
            s.root = widget_from_xml(*nodes.front());
        } else {
            s.root.widget_class = "hierarchy";
            for (const auto* n : nodes) s.root.children.push_back(widget_from_xml(*n));
            if (!s.root.children.empty()) {
                Bounds u = s.root.children.front().bounds;
                for (const auto& c : s.root.children) {
                    u.x1 = std::min(u.x1, c.bounds.x1);
                    u.y1 = std::min(u.y1, c.bounds.y1);
                    u.x2 = std::max(u.x2, c.bounds.x2);
                    u.y2 = std::max(u.y2, c.bounds.y2);
                }
                s.root.bounds = u;
            }
        }
        s.screen_id = std::string(root.attribute("screen").value_or(""));
        if (auto seq = root.attribute("capture-seq")) {
            auto [p, ec] = std::from_chars(seq->data(), seq->data() + seq->size(), s.capture_seq);
            if (ec != std::errc()) throw ParseError("malformed capture-seq", root.offset);
        }
    } else {
        throw ParseError("unexpected root element <" + root.name + ">", root.offset);
    }
    return s;
}

// ---- diff ------------------------------------------------------------------

struct Differ {
    const UiSnapshot& before;
    const UiSnapshot& after;
    UiDiff out;

    void add_subtree(std::vector<WidgetRef>& dst, const UiSnapshot& snap, const Widget& parent,
                     const WidgetPath& path) {
        const Widget* w = find_widget(snap.root, path);
        dst.push_back(WidgetRef{make_locator(snap.root, path), parent.resource_id.empty() ? parent.widget_class
                                                                                          : parent.resource_id,
                                signature(*w)});
    }

    void node(const Widget& b, const WidgetPath& bp, const Widget& a, const WidgetPath& ap) {
        Locator loc = make_locator(after.root, ap);
        if (b.text != a.text) out.text_changed.push_back(TextChange{loc, b.text, a.text});
        if (b.widget_class != a.widget_class)
            out.attr_changed.push_back(AttrChange{loc, "class", b.widget_class, a.widget_class});
        if (b.resource_id != a.resource_id)
            out.attr_changed.push_back(AttrChange{loc, "resource_id", b.resource_id, a.resource_id});
        if (b.bounds != a.bounds)
            out.attr_changed.push_back(AttrChange{loc, "bounds", bounds_string(b.bounds), bounds_string(a.bounds)});
        if (b.flags != a.flags)
            out.attr_changed.push_back(AttrChange{loc, "flags", flags_string(b.flags), flags_string(a.flags)});

        // Occurrence matching: the i-th child with a given key in `b` pairs with
        // the i-th child with the same key in `a`; first by label+text, then by
        // label alone. Symmetric under argument swap.
        const auto nb = b.children.size();
        const auto na = a.children.size();
        std::vector<int> match_b(nb, -1);
        std::vector<int> match_a(na, -1);
        auto pass = [&](auto key_of) {
            std::map<std::string, std::vector<std::size_t>> ib;
            std::map<std::string, std::vector<std::size_t>> ia;
            for (std::size_t i = 0; i < nb; ++i)
                if (match_b[i] < 0) ib[key_of(b.children[i])].push_back(i);
            for (std::size_t i = 0; i < na; ++i)
                if (match_a[i] < 0) ia[key_of(a.children[i])].push_back(i);
            for (auto& [key, bs] : ib) {
                auto it = ia.find(key);
                if (it == ia.end()) continue;
                for (std::size_t k = 0; k < std::min(bs.size(), it->second.size()); ++k) {
                    match_b[bs[k]] = static_cast<int>(it->second[k]);
                    match_a[it->second[k]] = static_cast<int>(bs[k]);
                }
            }
        };
        pass([](const Widget& w) { return label(w) + '\x1f' + text_signature(w); });
        pass([](const Widget& w) { return label(w); });

        int last = -1;
        bool reordered = false;
        for (std::size_t i = 0; i < nb; ++i) {
            if (match_b[i] < 0) continue;
            if (match_b[i] < last) reordered = true;
            last = match_b[i];
        }
        if (reordered) out.attr_changed.push_back(AttrChange{loc, "child_order", "", ""});

        for (std::size_t i = 0; i < nb; ++i) {
            WidgetPath cbp = bp;
            cbp.push_back(static_cast<int>(i));
            if (match_b[i] < 0) {
                add_subtree(out.removed, before, b, cbp);
                continue;
            }
            WidgetPath cap = ap;
            cap.push_back(match_b[i]);
            node(b.children[i], cbp, a.children[static_cast<std::size_t>(match_b[i])], cap);
        }
        for (std::size_t i = 0; i < na; ++i) {
            if (match_a[i] >= 0) continue;
            WidgetPath cap = ap;
            cap.push_back(static_cast<int>(i));
            add_subtree(out.added, after, a, cap);
        }
    }
};

// ---- JSON helpers -----------------------------------------------------------

json opt_string(const std::string& s) { return s.empty() ? json(nullptr) : json(s); }

std::string string_or_empty(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return {};
    return it->get<std::string>();
}

}  // namespace

// ---- events ----------------------------------------------------------------

std::string_view to_string(EventType t) noexcept {
    switch (t) {
        case EventType::Click: return "Click";
        case EventType::LongClick: return "LongClick";
        case EventType::InputText: return "InputText";
        case EventType::Scroll: return "Scroll";
        case EventType::Back: return "Back";
    }
    return "Back";
}

EventType event_type_from_string(std::string_view s) {
    if (s == "Click") return EventType::Click;
    if (s == "LongClick") return EventType::LongClick;
    if (s == "InputText") return EventType::InputText;
    if (s == "Scroll") return EventType::Scroll;
    if (s == "Back") return EventType::Back;
    throw ParseError("unknown event type '" + std::string(s) + "'", 0);
}

std::string Locator::describe() const {
    std::string s = resource_id.empty() ? "<" + widget_class + "@" + path_string(path) + ">"
                                        : "[" + resource_id + "] " + widget_class;
    if (!text.empty()) s += " \"" + text + "\"";
    return s;
}

bool same_action(const UiEvent& a, const UiEvent& b) {
    if (a.type != b.type || a.target != b.target) return false;
    return a.type == EventType::InputText || a.payload == b.payload;
}

std::string describe(const UiEvent& e) {
    std::string s(to_string(e.type));
    if (e.target) s += " " + e.target->describe();
    if (e.type == EventType::InputText && !e.payload.empty()) s += " text=\"" + e.payload + "\"";
    if (e.type == EventType::Scroll && !e.payload.empty()) s += " direction=" + e.payload;
    return s;
}

// ---- tree helpers ----------------------------------------------------------

void for_each_preorder(const Widget& root,
                       const std::function<void(const Widget&, const WidgetPath&)>& visit) {
    WidgetPath path;
    preorder(root, path, visit);
}

const Widget* find_widget(const Widget& root, const WidgetPath& path) noexcept {
    const Widget* w = &root;
    for (int i : path) {
        if (i < 0 || static_cast<std::size_t>(i) >= w->children.size()) return nullptr;
        w = &w->children[static_cast<std::size_t>(i)];
    }
    return w;
}

std::string text_signature(const Widget& w) {
    if (w.editable()) return {};
    if (!w.text.empty()) return w.text;
    std::vector<std::string> texts;
    for (const auto& c : w.children) collect_signature_texts(c, texts);
    std::string s;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (i) s += " | ";
        s += texts[i];
    }
    return s;
}

std::vector<std::string> collect_texts(const Widget& w) {
    std::vector<std::string> out;
    collect_texts_into(w, out);
    return out;
}

Locator make_locator(const Widget& root, const WidgetPath& path) {
    const Widget* w = find_widget(root, path);
    if (!w) throw LookupError("no widget at path " + path_string(path));
    return Locator{path, w->resource_id, w->widget_class, text_signature(*w)};
}

std::optional<WidgetPath> resolve(const UiSnapshot& s, const Locator& loc) {
    struct Candidate {
        WidgetPath path;
        std::string text;
    };
    std::vector<Candidate> candidates;
    for_each_preorder(s.root, [&](const Widget& w, const WidgetPath& p) {
        if (w.widget_class != loc.widget_class) return;
        if (!loc.resource_id.empty() && w.resource_id != loc.resource_id) return;
        candidates.push_back({p, text_signature(w)});
    });
    if (candidates.empty()) return std::nullopt;
    if (!loc.resource_id.empty() && candidates.size() == 1) return candidates.front().path;

    std::vector<const Candidate*> text_matches;
    for (const auto& c : candidates)
        if (c.text == loc.text) text_matches.push_back(&c);
    for (const auto* c : text_matches)
        if (c->path == loc.path) return c->path;
    if (text_matches.empty()) return std::nullopt;
    if (loc.resource_id.empty() && loc.text.empty()) return std::nullopt;  // identity is the path
    return text_matches.front()->path;
}

// ---- parse / serialize -----------------------------------------------------

UiSnapshot parse_snapshot(std::string_view document) {
    std::size_t i = 0;
    while (i < document.size() && std::isspace(static_cast<unsigned char>(document[i]))) ++i;
    if (i == document.size()) throw ParseError("empty document", i);
    if (document[i] == '<') return snapshot_from_xml(document);
    json j;
    try {
        j = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), e.byte > 0 ? e.byte - 1 : 0);
    }
    try {
        return snapshot_from_json(j);
    } catch (const json::exception& e) {
        throw ParseError(std::string("schema violation: ") + e.what(), 0);
    }
}

std::string serialize_snapshot(const UiSnapshot& s) { return to_json(s).dump(); }

std::string canonical_content(const UiSnapshot& s) {
    json j = to_json(s);
    j.erase("capture_seq");
    return j.dump();
}

// ---- actions ---------------------------------------------------------------

std::vector<UiEvent> enumerate_actions(const UiSnapshot& s, std::span<const UiEvent> executed) {
    std::vector<UiEvent> out;
    auto offer = [&](UiEvent e) {
        for (const auto& done : executed)
            if (same_action(done, e)) return;
        for (const auto& existing : out)
            if (existing == e) return;
        out.push_back(std::move(e));
    };
    for_each_preorder(s.root, [&](const Widget& w, const WidgetPath& p) {
        if (!w.flags.has(WidgetFlag::Enabled)) return;
        auto loc = make_locator(s.root, p);
        if (w.flags.has(WidgetFlag::Clickable)) offer(UiEvent{EventType::Click, loc, {}});
        if (w.flags.has(WidgetFlag::LongClickable)) offer(UiEvent{EventType::LongClick, loc, {}});
        if (w.flags.has(WidgetFlag::Editable)) offer(UiEvent{EventType::InputText, loc, {}});
        if (w.flags.has(WidgetFlag::Scrollable)) {
            offer(UiEvent{EventType::Scroll, loc, "up"});
            offer(UiEvent{EventType::Scroll, loc, "down"});
        }
        if (w.flags.has(WidgetFlag::HScrollable)) {
            offer(UiEvent{EventType::Scroll, loc, "left"});
            offer(UiEvent{EventType::Scroll, loc, "right"});
        }
    });
    out.push_back(UiEvent::back());
    return out;
}

// ---- diff ------------------------------------------------------------------

UiDiff diff_snapshots(const UiSnapshot& before, const UiSnapshot& after) {
    Differ d{before, after, {}};
    d.node(before.root, {}, after.root, {});
    if (before.screen_id != after.screen_id) d.out.screen_transition = ScreenTransition{before.screen_id, after.screen_id};

    // A subtree that left one parent and reappeared under an equally labelled
    // one is a move, not an add/remove pair.
    auto& added = d.out.added;
    auto& removed = d.out.removed;
    for (auto it = added.begin(); it != added.end();) {
        auto r = std::find_if(removed.begin(), removed.end(), [&](const WidgetRef& x) {
            return x.signature == it->signature && x.parent == it->parent;
        });
        if (r != removed.end()) {
            removed.erase(r);
            it = added.erase(it);
        } else {
            ++it;
        }
    }
    return std::move(d.out);
}

std::string render_diff(const UiDiff& d) {
    if (d.empty()) return "No visible change.";
    std::ostringstream os;
    const char* sep = "";
    if (d.screen_transition) {
        os << "Screen changed from " << d.screen_transition->from << " to " << d.screen_transition->to << ".";
        sep = " ";
    }
    auto grouped = [&](const std::vector<WidgetRef>& refs, const char* verb) {
        std::vector<std::pair<std::string, std::vector<const WidgetRef*>>> groups;
        for (const auto& r : refs) {
            auto g = std::find_if(groups.begin(), groups.end(), [&](const auto& x) { return x.first == r.parent; });
            if (g == groups.end()) {
                groups.push_back({r.parent, {}});
                g = groups.end() - 1;
            }
            g->second.push_back(&r);
        }
        for (const auto& [parent, items] : groups) {
            os << sep << items.size() << (items.size() == 1 ? " widget " : " widgets ") << verb << " " << parent
               << " (";
            for (std::size_t i = 0; i < items.size() && i < 3; ++i) os << (i ? ", " : "") << items[i]->signature;
            if (items.size() > 3) os << ", ...";
            os << ").";
            sep = " ";
        }
    };
    grouped(d.added, "added under");
    grouped(d.removed, "removed from");
    for (std::size_t i = 0; i < d.text_changed.size() && i < 3; ++i) {
        const auto& c = d.text_changed[i];
        os << sep << "Text of " << c.locator.describe() << " changed from \"" << c.old_text << "\" to \""
           << c.new_text << "\".";
        sep = " ";
    }
    if (d.text_changed.size() > 3) os << sep << (d.text_changed.size() - 3) << " more text changes.";
    if (!d.attr_changed.empty())
        os << sep << d.attr_changed.size() << (d.attr_changed.size() == 1 ? " widget" : " widgets")
           << " changed layout or state.";
    return os.str();
}

std::string screen_description(const UiSnapshot& s) {
    std::ostringstream os;
    os << "Screen: " << (s.screen_id.empty() ? "(unnamed)" : s.screen_id) << "\n";
    for_each_preorder(s.root, [&](const Widget& w, const WidgetPath& p) {
        os << std::string(2 * p.size(), ' ') << "- " << label(w);
        if (!w.text.empty()) os << " \"" << w.text << "\"";
        std::string fl;
        for (const auto& [flag, name] : kFlagNames) {
            if (flag == WidgetFlag::Enabled || !w.flags.has(flag)) continue;
            fl += fl.empty() ? "" : ", ";
            fl += name;
        }
        if (!w.flags.has(WidgetFlag::Enabled)) fl += fl.empty() ? "disabled" : ", disabled";
        if (!fl.empty()) os << " (" << fl << ")";
        os << "\n";
    });
    return os.str();
}

// ---- JSON ------------------------------------------------------------------

json to_json(const Widget& w) {
    json children = json::array();
    for (const auto& c : w.children) children.push_back(to_json(c));
    json flags = json::array();
    for (const auto& [flag, name] : kFlagNames)
        if (w.flags.has(flag)) flags.push_back(name);
    return json{{"class", w.widget_class},
                {"text", opt_string(w.text)},
                {"resource_id", opt_string(w.resource_id)},
                {"bounds", {w.bounds.x1, w.bounds.y1, w.bounds.x2, w.bounds.y2}},
                {"flags", std::move(flags)},
                {"children", std::move(children)}};
}

json to_json(const UiSnapshot& s) {
    return json{{"screen_id", s.screen_id}, {"capture_seq", s.capture_seq}, {"root", to_json(s.root)}};
}

json to_json(const Locator& l) {
    return json{{"path", l.path}, {"resource_id", opt_string(l.resource_id)}, {"class", l.widget_class},
                {"text", opt_string(l.text)}};
}

json to_json(const UiEvent& e) {
    return json{{"type", std::string(to_string(e.type))},
                {"target", e.target ? to_json(*e.target) : json(nullptr)},
                {"payload", opt_string(e.payload)}};
}

json to_json(std::span<const UiEvent> events) {
    json arr = json::array();
    for (const auto& e : events) arr.push_back(to_json(e));
    return arr;
}

Widget widget_from_json(const json& j) {
    Widget w;
    w.widget_class = j.at("class").get<std::string>();
    w.text = string_or_empty(j, "text");
    w.resource_id = string_or_empty(j, "resource_id");
    if (auto it = j.find("bounds"); it != j.end() && !it->is_null()) {
        auto v = it->get<std::vector<int>>();
        if (v.size() != 4) throw ParseError("bounds must have 4 integers", 0);
        w.bounds = Bounds{v[0], v[1], v[2], v[3]};
        if (w.bounds.x2 < w.bounds.x1 || w.bounds.y2 < w.bounds.y1) throw ParseError("degenerate bounds", 0);
    }
    if (auto it = j.find("flags"); it != j.end() && !it->is_null()) {
        w.flags.set(WidgetFlag::Enabled, false);
        for (const auto& f : *it) {
            auto name = f.get<std::string>();
            for (const auto& [flag, fname] : kFlagNames)
                if (fname == name) w.flags.set(flag);
        }
    }
    if (auto it = j.find("children"); it != j.end() && !it->is_null())
        for (const auto& c : *it) w.children.push_back(widget_from_json(c));
    return w;
}

UiSnapshot snapshot_from_json(const json& j) {
    UiSnapshot s;
    s.root = widget_from_json(j.at("root"));
    s.screen_id = string_or_empty(j, "screen_id");
    if (auto it = j.find("capture_seq"); it != j.end() && !it->is_null()) s.capture_seq = it->get<std::int64_t>();
    return s;
}

Locator locator_from_json(const json& j) {
    Locator l;
    l.path = j.at("path").get<WidgetPath>();
    l.resource_id = string_or_empty(j, "resource_id");
    l.widget_class = j.at("class").get<std::string>();
    l.text = string_or_empty(j, "text");
    return l;
}

UiEvent event_from_json(const json& j) {
    UiEvent e;
    e.type = event_type_from_string(j.at("type").get<std::string>());
    if (auto it = j.find("target"); it != j.end() && !it->is_null()) e.target = locator_from_json(*it);
    e.payload = string_or_empty(j, "payload");
    return e;
}

std::vector<UiEvent> events_from_json(const json& j) {
    std::vector<UiEvent> out;
    for (const auto& e : j) out.push_back(event_from_json(e));
    return out;
}

}  // namespace dmescope
