#include "dmescope/sim.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "dmescope/errors.hpp"

namespace dmescope {

using nlohmann::json;

std::string_view to_string(FaultKind k) noexcept {
    switch (k) {
        case FaultKind::SkipRefreshAfterCreate: return "skip_refresh_after_create";
        case FaultKind::SkipRefreshAfterDelete: return "skip_refresh_after_delete";
        case FaultKind::WrongFieldOnUpdate: return "wrong_field_on_update";
        case FaultKind::StaleSearchResults: return "stale_search_results";
        case FaultKind::CrashOnEffect: return "crash_on_effect";
    }
    return "crash_on_effect";
}

namespace {

constexpr int kScreenWidth = 1080;
constexpr int kScreenHeight = 1920;
constexpr int kDefaultItemSize = 120;

enum class Layout { Vertical, Horizontal, None };

struct Template {
    std::string cls;
    std::string id;
    std::string text;
    WidgetFlags flags;
    Layout layout = Layout::Vertical;
    int size = 0;
    std::optional<Bounds> rect;
    std::vector<Template> children;
    std::string bind_store;
    std::shared_ptr<Template> item;
    bool query = false;
    std::string query_field;
};

enum class EffectKind { Navigate, Insert, Update, Delete, Query, Crash, None };

struct Effect {
    EffectKind kind = EffectKind::None;
    std::string to;
    std::string store;
    std::string container;
    std::string input;
    std::string error;
    std::string handler;
    std::map<std::string, std::string> values;
};

struct Transition {
    std::string id;
    std::string screen;
    EventType type = EventType::Click;
    std::string target;
    std::vector<Effect> effects;
};

struct StoreSpec {
    std::vector<std::string> fields;
    std::vector<Record> records;
};

struct Frame {
    std::string screen;
    std::map<std::string, std::string> inputs;
    std::map<std::string, std::string> queries;
};

struct StoredRecord {
    std::int64_t id = 0;
    Record fields;
};

struct Selection {
    std::string store;
    std::int64_t id = 0;
};

struct State {
    std::vector<Frame> stack;
    std::map<std::string, std::vector<StoredRecord>> stores;
    std::int64_t next_id = 1;
    std::optional<Selection> selection;
    // Rendered record lists per "screen/container"; lags the store only under
    // an injected refresh fault.
    std::map<std::string, std::vector<StoredRecord>> displayed;
    std::int64_t seq = 0;
};

}  // namespace

struct SimAppSpec {
    std::string app;
    std::string initial_screen;
    std::vector<std::string> string_table;
    std::map<std::string, StoreSpec> stores;
    std::map<std::string, Template> screens;
    std::vector<Transition> transitions;
    std::vector<FaultSpec> faults;

    const FaultSpec* fault_for(const std::string& transition) const {
        for (const auto& f : faults)
            if (f.anchor == transition) return &f;
        return nullptr;
    }
};

struct SimEnvironment::Impl {
    std::shared_ptr<const SimAppSpec> spec;
    State state;
    std::map<SnapshotId, State> saved;
    SnapshotId next_snapshot = 1;
    std::vector<std::string> log;
};

namespace {

// ---- loading ---------------------------------------------------------------

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw LoadError(path, what); }

const json& field(const json& j, const std::string& key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) fail(path + "." + key, "required field missing");
    return *it;
}

std::string string_field(const json& j, const std::string& key, const std::string& path) {
    const auto& v = field(j, key, path);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

std::string optional_string(const json& j, const std::string& key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return {};
    if (!it->is_string()) fail(path + "." + key, "expected a string");
    return it->get<std::string>();
}

Template parse_template(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected a widget template object");
    Template t;
    t.cls = string_field(j, "class", path);
    t.id = optional_string(j, "id", path);
    t.text = optional_string(j, "text", path);
    if (t.cls.find("EditText") != std::string::npos) t.flags.set(WidgetFlag::Editable);
    if (auto it = j.find("flags"); it != j.end()) {
        if (!it->is_array()) fail(path + ".flags", "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto p = path + ".flags[" + std::to_string(i) + "]";
            if (!(*it)[i].is_string()) fail(p, "expected a string");
            const auto f = (*it)[i].get<std::string>();
            if (f == "clickable") t.flags.set(WidgetFlag::Clickable);
            else if (f == "long_clickable") t.flags.set(WidgetFlag::LongClickable);
            else if (f == "editable") t.flags.set(WidgetFlag::Editable);
            else if (f == "scrollable") t.flags.set(WidgetFlag::Scrollable);
            else if (f == "h_scrollable") t.flags.set(WidgetFlag::HScrollable);
            else if (f == "disabled") t.flags.set(WidgetFlag::Enabled, false);
            else fail(p, "unknown flag '" + f + "'");
        }
    }
    if (auto it = j.find("layout"); it != j.end()) {
        const auto l = it->is_string() ? it->get<std::string>() : std::string{};
        if (l == "vertical") t.layout = Layout::Vertical;
        else if (l == "horizontal") t.layout = Layout::Horizontal;
        else if (l == "none") t.layout = Layout::None;
        else fail(path + ".layout", "expected vertical, horizontal or none");
    }
    if (auto it = j.find("size"); it != j.end()) {
        if (!it->is_number_integer() || it->get<int>() < 0) fail(path + ".size", "expected a non-negative integer");
        t.size = it->get<int>();
    }
    if (auto it = j.find("rect"); it != j.end()) {
        if (!it->is_array() || it->size() != 4) fail(path + ".rect", "expected [x1, y1, x2, y2]");
        Bounds b{(*it)[0].get<int>(), (*it)[1].get<int>(), (*it)[2].get<int>(), (*it)[3].get<int>()};
        if (b.x2 < b.x1 || b.y2 < b.y1) fail(path + ".rect", "degenerate rectangle");
        t.rect = b;
    }
    if (auto it = j.find("children"); it != j.end()) {
        if (!it->is_array()) fail(path + ".children", "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i)
            t.children.push_back(parse_template((*it)[i], path + ".children[" + std::to_string(i) + "]"));
    }
    if (auto it = j.find("bind"); it != j.end()) {
        const auto bp = path + ".bind";
        if (!it->is_object()) fail(bp, "expected an object");
        if (t.id.empty()) fail(path + ".id", "bound containers need an id");
        if (!t.children.empty()) fail(path + ".children", "bound containers render their children from the store");
        t.bind_store = string_field(*it, "store", bp);
        t.item = std::make_shared<Template>(parse_template(field(*it, "item", bp), bp + ".item"));
        if (auto q = it->find("query"); q != it->end()) {
            if (!q->is_boolean()) fail(bp + ".query", "expected a boolean");
            t.query = q->get<bool>();
        }
        t.query_field = optional_string(*it, "query_field", bp);
    }
    return t;
}

Effect parse_effect(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an effect object");
    Effect e;
    const auto kind = string_field(j, "kind", path);
    auto values = [&] {
        const auto& v = field(j, "values", path);
        if (!v.is_object()) fail(path + ".values", "expected an object");
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (!it->is_string()) fail(path + ".values." + it.key(), "expected a string");
            e.values[it.key()] = it->get<std::string>();
        }
    };
    if (kind == "navigate") {
        e.kind = EffectKind::Navigate;
        e.to = string_field(j, "to", path);
    } else if (kind == "store_insert") {
        e.kind = EffectKind::Insert;
        e.store = string_field(j, "store", path);
        values();
    } else if (kind == "store_update") {
        e.kind = EffectKind::Update;
        e.store = string_field(j, "store", path);
        values();
    } else if (kind == "store_delete") {
        e.kind = EffectKind::Delete;
        e.store = string_field(j, "store", path);
    } else if (kind == "store_query") {
        e.kind = EffectKind::Query;
        e.container = string_field(j, "container", path);
        e.input = string_field(j, "input", path);
    } else if (kind == "crash") {
        e.kind = EffectKind::Crash;
        e.error = string_field(j, "error", path);
        e.handler = string_field(j, "handler", path);
    } else if (kind == "none") {
        e.kind = EffectKind::None;
    } else {
        fail(path + ".kind", "unknown effect kind '" + kind + "'");
    }
    return e;
}

void collect_templates(const Template& t, std::vector<const Template*>& out) {
    out.push_back(&t);
    for (const auto& c : t.children) collect_templates(c, out);
    if (t.item) collect_templates(*t.item, out);
}

std::vector<std::string> placeholders(const std::string& text) {
    std::vector<std::string> out;
    for (std::size_t p = text.find('{'); p != std::string::npos; p = text.find('{', p + 1)) {
        auto close = text.find('}', p);
        if (close == std::string::npos) break;
        out.push_back(text.substr(p + 1, close - p - 1));
    }
    return out;
}

std::shared_ptr<const SimAppSpec> parse_spec(const json& j) {
    if (!j.is_object()) fail("$", "expected an app-spec object");
    auto spec = std::make_shared<SimAppSpec>();
    const auto& version = field(j, "spec_version", "$");
    if (!version.is_number_integer() || version.get<int>() != 1) fail("$.spec_version", "only version 1 is supported");
    spec->app = string_field(j, "app", "$");
    spec->initial_screen = string_field(j, "initial_screen", "$");

    if (auto it = j.find("string_table"); it != j.end()) {
        if (!it->is_array()) fail("$.string_table", "expected an array of strings");
        for (std::size_t i = 0; i < it->size(); ++i) {
            if (!(*it)[i].is_string()) fail("$.string_table[" + std::to_string(i) + "]", "expected a string");
            spec->string_table.push_back((*it)[i].get<std::string>());
        }
    }

    if (auto it = j.find("stores"); it != j.end()) {
        if (!it->is_object()) fail("$.stores", "expected an object");
        for (auto s = it->begin(); s != it->end(); ++s) {
            const auto sp = "$.stores." + s.key();
            StoreSpec st;
            const auto& fields = field(*s, "fields", sp);
            if (!fields.is_array() || fields.empty()) fail(sp + ".fields", "expected a non-empty array");
            for (const auto& f : fields) {
                if (!f.is_string()) fail(sp + ".fields", "expected strings");
                st.fields.push_back(f.get<std::string>());
            }
            if (auto r = s->find("records"); r != s->end()) {
                if (!r->is_array()) fail(sp + ".records", "expected an array");
                for (std::size_t i = 0; i < r->size(); ++i) {
                    const auto rp = sp + ".records[" + std::to_string(i) + "]";
                    if (!(*r)[i].is_object()) fail(rp, "expected an object");
                    Record rec;
                    for (const auto& f : st.fields) rec[f] = "";
                    for (auto kv = (*r)[i].begin(); kv != (*r)[i].end(); ++kv) {
                        if (std::find(st.fields.begin(), st.fields.end(), kv.key()) == st.fields.end())
                            fail(rp + "." + kv.key(), "field not declared by the store");
                        if (!kv->is_string()) fail(rp + "." + kv.key(), "expected a string");
                        rec[kv.key()] = kv->get<std::string>();
                    }
                    st.records.push_back(std::move(rec));
                }
            }
            spec->stores.emplace(s.key(), std::move(st));
        }
    }

    const auto& screens = field(j, "screens", "$");
    if (!screens.is_object() || screens.empty()) fail("$.screens", "expected a non-empty object");
    for (auto s = screens.begin(); s != screens.end(); ++s) {
        const auto sp = "$.screens." + s.key();
        if (!s->is_object()) fail(sp, "expected an object");
        spec->screens.emplace(s.key(), parse_template(field(*s, "root", sp), sp + ".root"));
    }
    if (!spec->screens.count(spec->initial_screen)) fail("$.initial_screen", "unknown screen '" + spec->initial_screen + "'");

    // Bindings must name declared stores; item placeholders declared fields.
    for (const auto& [key, root] : spec->screens) {
        std::vector<const Template*> all;
        collect_templates(root, all);
        std::set<std::string> ids;
        for (const auto* t : all) {
            if (t->bind_store.empty()) continue;
            auto st = spec->stores.find(t->bind_store);
            if (st == spec->stores.end())
                fail("$.screens." + key + " (" + t->id + ").bind.store", "unknown store '" + t->bind_store + "'");
            std::vector<const Template*> item;
            collect_templates(*t->item, item);
            for (const auto* it : item)
                for (const auto& ph : placeholders(it->text))
                    if (ph.rfind("selected.", 0) != 0 &&
                        std::find(st->second.fields.begin(), st->second.fields.end(), ph) == st->second.fields.end())
                        fail("$.screens." + key + " (" + t->id + ").bind.item", "unknown field '" + ph + "'");
            if (!t->query_field.empty() && std::find(st->second.fields.begin(), st->second.fields.end(),
                                                     t->query_field) == st->second.fields.end())
                fail("$.screens." + key + " (" + t->id + ").bind.query_field", "unknown field '" + t->query_field + "'");
        }
    }

    const auto& transitions = field(j, "transitions", "$");
    if (!transitions.is_array()) fail("$.transitions", "expected an array");
    std::set<std::string> transition_ids;
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        const auto tp = "$.transitions[" + std::to_string(i) + "]";
        const auto& tj = transitions[i];
        if (!tj.is_object()) fail(tp, "expected an object");
        Transition t;
        t.id = string_field(tj, "id", tp);
        if (!transition_ids.insert(t.id).second) fail(tp + ".id", "duplicate transition id '" + t.id + "'");
        t.screen = string_field(tj, "screen", tp);
        if (!spec->screens.count(t.screen)) fail(tp + ".screen", "unknown screen '" + t.screen + "'");
        const auto& on = field(tj, "on", tp);
        try {
            t.type = event_type_from_string(string_field(on, "type", tp + ".on"));
        } catch (const ParseError&) {
            fail(tp + ".on.type", "unknown event type");
        }
        t.target = optional_string(on, "target", tp + ".on");
        if (t.type != EventType::Back && t.target.empty()) fail(tp + ".on.target", "required for non-Back events");
        const auto& effects = field(tj, "effects", tp);
        if (!effects.is_array()) fail(tp + ".effects", "expected an array");
        for (std::size_t k = 0; k < effects.size(); ++k) {
            const auto ep = tp + ".effects[" + std::to_string(k) + "]";
            auto e = parse_effect(effects[k], ep);
            if (e.kind == EffectKind::Navigate && e.to != "@back" && !spec->screens.count(e.to))
                fail(ep + ".to", "unknown screen '" + e.to + "'");
            if ((e.kind == EffectKind::Insert || e.kind == EffectKind::Update || e.kind == EffectKind::Delete)) {
                auto st = spec->stores.find(e.store);
                if (st == spec->stores.end()) fail(ep + ".store", "unknown store '" + e.store + "'");
                for (const auto& [k2, v] : e.values)
                    if (std::find(st->second.fields.begin(), st->second.fields.end(), k2) == st->second.fields.end())
                        fail(ep + ".values." + k2, "field not declared by the store");
            }
            t.effects.push_back(std::move(e));
        }
        spec->transitions.push_back(std::move(t));
    }

    if (auto it = j.find("faults"); it != j.end()) {
        if (!it->is_array()) fail("$.faults", "expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto fp = "$.faults[" + std::to_string(i) + "]";
            const auto& fj = (*it)[i];
            FaultSpec f{};
            const auto kind = string_field(fj, "kind", fp);
            bool known = false;
            for (auto k : {FaultKind::SkipRefreshAfterCreate, FaultKind::SkipRefreshAfterDelete,
                           FaultKind::WrongFieldOnUpdate, FaultKind::StaleSearchResults, FaultKind::CrashOnEffect})
                if (to_string(k) == kind) {
                    f.kind = k;
                    known = true;
                }
            if (!known) fail(fp + ".kind", "unknown fault kind '" + kind + "'");
            f.anchor = string_field(fj, "anchor", fp);
            auto t = std::find_if(spec->transitions.begin(), spec->transitions.end(),
                                  [&](const Transition& tr) { return tr.id == f.anchor; });
            if (t == spec->transitions.end()) fail(fp + ".anchor", "unknown transition '" + f.anchor + "'");
            if (spec->fault_for(f.anchor)) fail(fp + ".anchor", "transition already carries a fault");
            auto has = [&](EffectKind k) {
                return std::any_of(t->effects.begin(), t->effects.end(), [&](const Effect& e) { return e.kind == k; });
            };
            const std::map<FaultKind, EffectKind> needs{{FaultKind::SkipRefreshAfterCreate, EffectKind::Insert},
                                                        {FaultKind::SkipRefreshAfterDelete, EffectKind::Delete},
                                                        {FaultKind::WrongFieldOnUpdate, EffectKind::Update},
                                                        {FaultKind::StaleSearchResults, EffectKind::Query}};
            if (auto n = needs.find(f.kind); n != needs.end() && !has(n->second))
                fail(fp + ".anchor", kind + " cannot anchor transition '" + f.anchor + "'");
            if (f.kind == FaultKind::WrongFieldOnUpdate) {
                f.field = string_field(fj, "field", fp);
                const auto& upd = *std::find_if(t->effects.begin(), t->effects.end(),
                                                [](const Effect& e) { return e.kind == EffectKind::Update; });
                const auto& fields = spec->stores.at(upd.store).fields;
                if (std::find(fields.begin(), fields.end(), f.field) == fields.end())
                    fail(fp + ".field", "field not declared by store '" + upd.store + "'");
            }
            if (f.kind == FaultKind::CrashOnEffect) {
                if (auto e = optional_string(fj, "error", fp); !e.empty()) f.error = e;
                f.handler = optional_string(fj, "handler", fp);
                if (f.handler.empty()) f.handler = f.anchor + "_handler";
            }
            spec->faults.push_back(std::move(f));
        }
    }
    return spec;
}

// ---- rendering -------------------------------------------------------------

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

const StoredRecord* selected_record(const State& st) {
    if (!st.selection) return nullptr;
    auto it = st.stores.find(st.selection->store);
    if (it == st.stores.end()) return nullptr;
    for (const auto& r : it->second)
        if (r.id == st.selection->id) return &r;
    return nullptr;
}

// Substitutes {field}, {selected.field} and {input:id} placeholders.
std::string eval_text(const std::string& text, const Record* item, const State& st, const Frame* frame) {
    if (text.find('{') == std::string::npos) return text;
    std::string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto open = text.find('{', pos);
        auto close = open == std::string::npos ? open : text.find('}', open);
        if (close == std::string::npos) {
            out.append(text, pos, std::string::npos);
            break;
        }
        out.append(text, pos, open - pos);
        const auto name = text.substr(open + 1, close - open - 1);
        if (name.rfind("selected.", 0) == 0) {
            if (const auto* r = selected_record(st))
                if (auto f = r->fields.find(name.substr(9)); f != r->fields.end()) out += f->second;
        } else if (name.rfind("input:", 0) == 0) {
            if (frame)
                if (auto f = frame->inputs.find(name.substr(6)); f != frame->inputs.end()) out += f->second;
        } else if (item) {
            if (auto f = item->find(name); f != item->end()) out += f->second;
        }
        pos = close + 1;
    }
    return out;
}

std::string container_key(const std::string& screen, const std::string& id) { return screen + "/" + id; }

std::string input_key(const Template& t, const WidgetPath& path) {
    if (!t.id.empty()) return t.id;
    std::string k = "@";
    for (int i : path) k += "/" + std::to_string(i);
    return k;
}

struct Rendered {
    UiSnapshot snap;
    std::map<WidgetPath, Selection> items;
};

class Renderer {
public:
    Renderer(const SimAppSpec& spec, const State& st) : spec_(spec), st_(st), frame_(st.stack.back()) {}

    Rendered run() {
        Rendered r;
        r.snap.screen_id = frame_.screen;
        r.snap.capture_seq = st_.seq;
        WidgetPath path;
        r.snap.root = build(spec_.screens.at(frame_.screen), Bounds{0, 0, kScreenWidth, kScreenHeight}, nullptr, path,
                            r.items);
        return r;
    }

private:
    Widget build(const Template& t, Bounds rect, const Record* item, WidgetPath& path,
                 std::map<WidgetPath, Selection>& items) {
        Widget w;
        w.widget_class = t.cls;
        w.resource_id = t.id;
        w.flags = t.flags;
        w.bounds = t.rect ? *t.rect : rect;
        if (w.flags.has(WidgetFlag::Editable)) {
            auto it = frame_.inputs.find(input_key(t, path));
            w.text = it == frame_.inputs.end() ? std::string{} : it->second;
        } else {
            w.text = eval_text(t.text, item, st_, &frame_);
        }

        if (t.item) {
            auto shown = st_.displayed.find(container_key(frame_.screen, t.id));
            int y = w.bounds.y1;
            const int h = t.item->size > 0 ? t.item->size : kDefaultItemSize;
            if (shown != st_.displayed.end()) {
                for (std::size_t i = 0; i < shown->second.size(); ++i) {
                    path.push_back(static_cast<int>(i));
                    items[path] = Selection{t.bind_store, shown->second[i].id};
                    w.children.push_back(build(*t.item, Bounds{w.bounds.x1, y, w.bounds.x2, y + h},
                                               &shown->second[i].fields, path, items));
                    path.pop_back();
                    y += h;
                }
            }
            return w;
        }

        const auto rects = layout(t, w.bounds);
        for (std::size_t i = 0; i < t.children.size(); ++i) {
            path.push_back(static_cast<int>(i));
            w.children.push_back(build(t.children[i], rects[i], item, path, items));
            path.pop_back();
        }
        return w;
    }

    static std::vector<Bounds> layout(const Template& t, Bounds r) {
        std::vector<Bounds> out;
        if (t.layout == Layout::None) {
            out.assign(t.children.size(), r);
            return out;
        }
        const bool vertical = t.layout == Layout::Vertical;
        const int extent = vertical ? r.height() : r.width();
        int fixed = 0;
        int flexible = 0;
        for (const auto& c : t.children) {
            if (c.rect) continue;
            if (c.size > 0) fixed += c.size;
            else ++flexible;
        }
        const int flex = flexible ? std::max(0, (extent - fixed) / flexible) : 0;
        int cursor = vertical ? r.y1 : r.x1;
        for (const auto& c : t.children) {
            if (c.rect) {
                out.push_back(*c.rect);
                continue;
            }
            const int size = c.size > 0 ? c.size : flex;
            if (vertical) out.push_back(Bounds{r.x1, cursor, r.x2, cursor + size});
            else out.push_back(Bounds{cursor, r.y1, cursor + size, r.y2});
            cursor += size;
        }
        return out;
    }

    const SimAppSpec& spec_;
    const State& st_;
    const Frame& frame_;
};

void collect_bound(const Template& t, std::vector<const Template*>& out) {
    if (t.item) out.push_back(&t);
    for (const auto& c : t.children) collect_bound(c, out);
}

void mount_inputs(const Template& t, const State& st, Frame& f, WidgetPath& path) {
    if (t.flags.has(WidgetFlag::Editable)) {
        auto v = eval_text(t.text, nullptr, st, nullptr);
        if (!v.empty()) f.inputs[input_key(t, path)] = v;
    }
    for (std::size_t i = 0; i < t.children.size(); ++i) {
        path.push_back(static_cast<int>(i));
        mount_inputs(t.children[i], st, f, path);
        path.pop_back();
    }
}

Frame mount(const SimAppSpec& spec, const State& st, const std::string& screen) {
    Frame f;
    f.screen = screen;
    WidgetPath path;
    mount_inputs(spec.screens.at(screen), st, f, path);
    return f;
}

std::vector<StoredRecord> visible_records(const Template& t, const std::vector<StoredRecord>& records,
                                          const Frame& frame) {
    if (!t.query) return records;
    auto q = frame.queries.find(t.id);
    if (q == frame.queries.end()) return {};
    const auto needle = lower(q->second);
    std::vector<StoredRecord> out;
    for (const auto& r : records) {
        bool hit = false;
        for (const auto& [k, v] : r.fields)
            if ((t.query_field.empty() || k == t.query_field) && lower(v).find(needle) != std::string::npos) hit = true;
        if (hit) out.push_back(r);
    }
    return out;
}

// Re-renders the current screen's bound containers from the stores, except
// containers of `stale` stores which keep what they showed (or the
// pre-transition records if they never showed anything).
void refresh(const SimAppSpec& spec, State& st, const std::set<std::string>& stale,
             const std::map<std::string, std::vector<StoredRecord>>& pre) {
    const auto& frame = st.stack.back();
    std::vector<const Template*> bound;
    collect_bound(spec.screens.at(frame.screen), bound);
    for (const auto* t : bound) {
        const auto key = container_key(frame.screen, t->id);
        if (stale.count(t->bind_store)) {
            if (!st.displayed.count(key)) st.displayed[key] = visible_records(*t, pre.at(t->bind_store), frame);
            continue;
        }
        st.displayed[key] = visible_records(*t, st.stores.at(t->bind_store), frame);
    }
}

State initial_state(const SimAppSpec& spec) {
    State st;
    for (const auto& [name, store] : spec.stores) {
        auto& records = st.stores[name];
        for (const auto& r : store.records) records.push_back(StoredRecord{st.next_id++, r});
    }
    st.stack.push_back(mount(spec, st, spec.initial_screen));
    refresh(spec, st, {}, st.stores);
    return st;
}

std::string crash_line(const std::string& error, const std::string& handler) {
    return "E/sim: SIM-CRASH " + json{{"error", error}, {"handler", handler}}.dump();
}

}  // namespace

// ---- SimEnvironment --------------------------------------------------------

SimEnvironment::SimEnvironment(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
SimEnvironment::~SimEnvironment() = default;

std::unique_ptr<SimEnvironment> SimEnvironment::from_json(const json& spec) {
    auto impl = std::make_unique<Impl>();
    impl->spec = parse_spec(spec);
    impl->state = initial_state(*impl->spec);
    impl->log.push_back("I/sim: launched " + impl->spec->app + " on screen " + impl->spec->initial_screen);
    return std::unique_ptr<SimEnvironment>(new SimEnvironment(std::move(impl)));
}

std::unique_ptr<SimEnvironment> SimEnvironment::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(path, "cannot open app spec");
    std::stringstream ss;
    ss << in.rdbuf();
    auto j = json::parse(ss.str(), nullptr, false);
    if (j.is_discarded()) throw LoadError(path, "not valid JSON");
    return from_json(j);
}

UiSnapshot SimEnvironment::current_snapshot() { return Renderer(*impl_->spec, impl_->state).run().snap; }

PerformResult SimEnvironment::perform(const UiEvent& e) {
    const auto& spec = *impl_->spec;
    auto& st = impl_->state;
    auto& log = impl_->log;
    const auto rendered = Renderer(spec, st).run();
    const std::string screen = st.stack.back().screen;

    const Transition* transition = nullptr;
    auto find_transition = [&](EventType type, const std::string& target) -> const Transition* {
        for (const auto& t : spec.transitions)
            if (t.screen == screen && t.type == type && (type == EventType::Back || t.target == target)) return &t;
        return nullptr;
    };

    PerformResult result;
    if (e.type == EventType::Back) {
        transition = find_transition(EventType::Back, "");
        if (!transition) {
            if (st.stack.size() > 1) {
                st.stack.pop_back();
                log.push_back("I/sim: back to " + st.stack.back().screen);
            } else {
                log.push_back("I/sim: back ignored on root screen");
            }
        }
    } else {
        if (!e.target) return {false, false, "event has no target"};
        const auto path = resolve(rendered.snap, *e.target);
        if (!path) return {false, false, "target " + e.target->describe() + " not on screen"};
        const Widget* w = find_widget(rendered.snap.root, *path);
        if (!w->flags.has(WidgetFlag::Enabled)) return {false, false, "target is disabled"};
        switch (e.type) {
            case EventType::Click:
            case EventType::LongClick: {
                const auto flag = e.type == EventType::Click ? WidgetFlag::Clickable : WidgetFlag::LongClickable;
                if (!w->flags.has(flag)) return {false, false, "target does not accept " + std::string(to_string(e.type))};
                for (auto p = *path;; p.pop_back()) {
                    if (auto it = rendered.items.find(p); it != rendered.items.end()) {
                        st.selection = it->second;
                        break;
                    }
                    if (p.empty()) break;
                }
                transition = find_transition(e.type, w->resource_id);
                if (!transition)
                    log.push_back("I/sim: " + std::string(to_string(e.type)) + " on " + e.target->describe() +
                                  " has no handler");
                break;
            }
            case EventType::InputText: {
                if (!w->flags.has(WidgetFlag::Editable)) return {false, false, "target is not editable"};
                if (e.payload.empty()) return {false, false, "InputText needs a payload"};
                // Locate the template path key: editable ids are unique per screen.
                std::string key = w->resource_id;
                if (key.empty()) {
                    key = "@";
                    for (int i : *path) key += "/" + std::to_string(i);
                }
                st.stack.back().inputs[key] = e.payload;
                log.push_back("I/sim: typed into " + e.target->describe());
                break;
            }
            case EventType::Scroll: {
                const bool vertical = e.payload == "up" || e.payload == "down";
                const bool horizontal = e.payload == "left" || e.payload == "right";
                if (!(vertical && w->flags.has(WidgetFlag::Scrollable)) &&
                    !(horizontal && w->flags.has(WidgetFlag::HScrollable)))
                    return {false, false, "target cannot scroll " + e.payload};
                log.push_back("I/sim: scrolled " + e.payload);
                break;
            }
            case EventType::Back: break;
        }
    }

    std::set<std::string> stale;
    const auto pre = st.stores;
    if (transition) {
        log.push_back("I/sim: transition " + transition->id);
        const FaultSpec* fault = spec.fault_for(transition->id);
        auto crash = [&](const std::string& error, const std::string& handler) {
            log.push_back(crash_line(error, handler));
            st.stack.clear();
            st.selection.reset();
            st.displayed.clear();
            st.stack.push_back(mount(spec, st, spec.initial_screen));
            result.crashed = true;
            result.message = error + " at " + handler;
        };
        if (fault && fault->kind == FaultKind::CrashOnEffect) {
            crash(fault->error, fault->handler);
        } else {
            for (const auto& eff : transition->effects) {
                auto& frame = st.stack.back();
                if (eff.kind == EffectKind::Navigate) {
                    if (eff.to == "@back") {
                        if (st.stack.size() > 1) st.stack.pop_back();
                    } else {
                        auto it = std::find_if(st.stack.begin(), st.stack.end(),
                                               [&](const Frame& f) { return f.screen == eff.to; });
                        if (it != st.stack.end()) st.stack.erase(it + 1, st.stack.end());
                        else st.stack.push_back(mount(spec, st, eff.to));
                    }
                } else if (eff.kind == EffectKind::Insert) {
                    Record rec;
                    for (const auto& f : spec.stores.at(eff.store).fields) rec[f] = "";
                    for (const auto& [k, v] : eff.values) rec[k] = eval_text(v, nullptr, st, &frame);
                    st.stores[eff.store].push_back(StoredRecord{st.next_id++, std::move(rec)});
                    if (fault && fault->kind == FaultKind::SkipRefreshAfterCreate) stale.insert(eff.store);
                } else if (eff.kind == EffectKind::Update) {
                    if (!st.selection || st.selection->store != eff.store) {
                        log.push_back("W/sim: update without a selected " + eff.store + " record");
                        continue;
                    }
                    std::map<std::string, std::string> values;
                    for (const auto& [k, v] : eff.values) values[k] = eval_text(v, nullptr, st, &frame);
                    for (auto& r : st.stores[eff.store]) {
                        if (r.id != st.selection->id) continue;
                        for (const auto& [k, v] : values) {
                            if (fault && fault->kind == FaultKind::WrongFieldOnUpdate) r.fields[fault->field] = v;
                            else r.fields[k] = v;
                        }
                    }
                } else if (eff.kind == EffectKind::Delete) {
                    if (!st.selection || st.selection->store != eff.store) {
                        log.push_back("W/sim: delete without a selected " + eff.store + " record");
                        continue;
                    }
                    auto& recs = st.stores[eff.store];
                    const auto id = st.selection->id;
                    recs.erase(std::remove_if(recs.begin(), recs.end(), [&](const StoredRecord& r) { return r.id == id; }),
                               recs.end());
                    st.selection.reset();
                    if (fault && fault->kind == FaultKind::SkipRefreshAfterDelete) stale.insert(eff.store);
                } else if (eff.kind == EffectKind::Query) {
                    if (fault && fault->kind == FaultKind::StaleSearchResults) continue;
                    auto in = frame.inputs.find(eff.input);
                    frame.queries[eff.container] = in == frame.inputs.end() ? std::string{} : in->second;
                } else if (eff.kind == EffectKind::Crash) {
                    crash(eff.error, eff.handler);
                    break;
                }
            }
        }
    }
    ++st.seq;
    refresh(spec, st, stale, pre);
    return result;
}

SnapshotId SimEnvironment::save_snapshot() {
    const auto id = impl_->next_snapshot++;
    impl_->saved.emplace(id, impl_->state);
    return id;
}

void SimEnvironment::restore_snapshot(SnapshotId id) {
    auto it = impl_->saved.find(id);
    if (it == impl_->saved.end()) throw LookupError("unknown snapshot id " + std::to_string(id));
    impl_->state = it->second;
}

std::vector<std::string> SimEnvironment::drain_log() {
    std::vector<std::string> out;
    out.swap(impl_->log);
    return out;
}

std::string SimEnvironment::screen_description() { return dmescope::screen_description(current_snapshot()); }

std::string SimEnvironment::app_name() { return impl_->spec->app; }

std::optional<StringTable> SimEnvironment::string_table() {
    StringTable t;
    t.constants.insert(impl_->spec->string_table.begin(), impl_->spec->string_table.end());
    return t;
}

std::vector<Record> SimEnvironment::store_records(const std::string& store) const {
    auto it = impl_->state.stores.find(store);
    if (it == impl_->state.stores.end()) throw LookupError("unknown store '" + store + "'");
    std::vector<Record> out;
    for (const auto& r : it->second) out.push_back(r.fields);
    return out;
}

const std::vector<FaultSpec>& SimEnvironment::faults() const noexcept { return impl_->spec->faults; }

// ---- random events ---------------------------------------------------------

const std::vector<std::string>& random_lexicon() {
    static const std::vector<std::string> kWords{"alpha", "bravo", "charlie", "delta",
                                                 "echo",  "foxtrot", "golf", "hotel"};
    return kWords;
}

UiEvent random_event(std::mt19937_64& rng, const UiSnapshot& s) {
    auto actions = enumerate_actions(s, {});
    auto e = actions[static_cast<std::size_t>(rng() % actions.size())];
    if (e.type == EventType::InputText) {
        const auto& words = random_lexicon();
        e.payload = words[static_cast<std::size_t>(rng() % words.size())];
    }
    return e;
}

}  // namespace dmescope
