#include "dmescope/dum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <unordered_map>

#include "dmescope/errors.hpp"

namespace dmescope {

using nlohmann::json;

StringTable StringTable::parse(std::string_view text) {
    StringTable t;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty() && line.front() != '#') t.constants.emplace(line);
        start = end + 1;
    }
    return t;
}

// ---- tree edit distance (Zhang & Shasha 1989) -------------------------------

namespace {

struct PostorderTree {
    std::vector<int> label;     // 1-based
    std::vector<int> leftmost;  // 1-based postorder index of leftmost leaf
    std::vector<int> keyroots;

    PostorderTree(const Widget& root, std::unordered_map<std::string, int>& interned) {
        label.push_back(0);
        leftmost.push_back(0);
        visit(root, interned);
        std::map<int, int> highest;
        for (int i = 1; i < static_cast<int>(label.size()); ++i) highest[leftmost[static_cast<std::size_t>(i)]] = i;
        for (const auto& [l, i] : highest) keyroots.push_back(i);
        std::sort(keyroots.begin(), keyroots.end());
    }

    int size() const { return static_cast<int>(label.size()) - 1; }

private:
    int visit(const Widget& w, std::unordered_map<std::string, int>& interned) {
        int first_leaf = -1;
        for (const auto& c : w.children) {
            int lm = visit(c, interned);
            if (first_leaf < 0) first_leaf = lm;
        }
        auto [it, inserted] = interned.emplace(w.widget_class, static_cast<int>(interned.size()));
        label.push_back(it->second);
        int self = static_cast<int>(label.size()) - 1;
        leftmost.push_back(first_leaf < 0 ? self : first_leaf);
        return leftmost.back();
    }
};

}  // namespace

std::size_t tree_edit_distance(const Widget& a, const Widget& b) {
    std::unordered_map<std::string, int> interned;
    PostorderTree ta(a, interned);
    PostorderTree tb(b, interned);
    const int na = ta.size();
    const int nb = tb.size();

    std::vector<std::vector<int>> td(static_cast<std::size_t>(na + 1), std::vector<int>(static_cast<std::size_t>(nb + 1), 0));
    std::vector<std::vector<int>> fd(static_cast<std::size_t>(na + 2), std::vector<int>(static_cast<std::size_t>(nb + 2), 0));
    auto L1 = [&](int i) { return ta.leftmost[static_cast<std::size_t>(i)]; };
    auto L2 = [&](int j) { return tb.leftmost[static_cast<std::size_t>(j)]; };
    auto at = [](std::vector<std::vector<int>>& m, int x, int y) -> int& {
        return m[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
    };

    for (int i : ta.keyroots) {
        for (int j : tb.keyroots) {
            const int li = L1(i);
            const int lj = L2(j);
            at(fd, 0, 0) = 0;
            for (int x = li; x <= i; ++x) at(fd, x - li + 1, 0) = at(fd, x - li, 0) + 1;
            for (int y = lj; y <= j; ++y) at(fd, 0, y - lj + 1) = at(fd, 0, y - lj) + 1;
            for (int x = li; x <= i; ++x) {
                for (int y = lj; y <= j; ++y) {
                    const int fx = x - li + 1;
                    const int fy = y - lj + 1;
                    const int del = at(fd, fx - 1, fy) + 1;
                    const int ins = at(fd, fx, fy - 1) + 1;
                    if (L1(x) == li && L2(y) == lj) {
                        const int cost = ta.label[static_cast<std::size_t>(x)] == tb.label[static_cast<std::size_t>(y)] ? 0 : 1;
                        at(fd, fx, fy) = std::min({del, ins, at(fd, fx - 1, fy - 1) + cost});
                        at(td, x, y) = at(fd, fx, fy);
                    } else {
                        at(fd, fx, fy) = std::min({del, ins, at(fd, L1(x) - li, L2(y) - lj) + at(td, x, y)});
                    }
                }
            }
        }
    }
    return static_cast<std::size_t>(at(td, na, nb));
}

double sim_structure(const Widget& a, const Widget& b) {
    const auto n = std::max(a.node_count(), b.node_count());
    return static_cast<double>(tree_edit_distance(a, b)) / static_cast<double>(n);
}

double sim_align(const Widget& a, const Widget& b, double lambda) {
    const auto& ba = a.bounds;
    const auto& bb = b.bounds;
    const double column = std::abs(ba.center_x() - bb.center_x()) + lambda * std::abs(ba.height() - bb.height());
    const double row = std::abs(ba.center_y() - bb.center_y()) + lambda * std::abs(ba.width() - bb.width());
    return std::min(column, row);
}

std::string class_shape(const Widget& w) {
    std::string s = w.widget_class;
    if (w.children.empty()) return s;
    s += '(';
    for (std::size_t i = 0; i < w.children.size(); ++i) {
        if (i) s += ',';
        s += class_shape(w.children[i]);
    }
    s += ')';
    return s;
}

std::string item_signature(const Widget& w) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : class_shape(w)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---- identification --------------------------------------------------------

namespace {

struct Candidate {
    const Widget* widget;
    WidgetPath path;
};

bool is_prefix(const WidgetPath& prefix, const WidgetPath& p) {
    return prefix.size() <= p.size() && std::equal(prefix.begin(), prefix.end(), p.begin());
}

}  // namespace

std::vector<Dum> identify_dums(const UiSnapshot& s, const StringTable& strings, const DumConfig& cfg) {
    std::vector<Candidate> nodes;
    for_each_preorder(s.root, [&](const Widget& w, const WidgetPath& p) {
        if (!p.empty()) nodes.push_back({&w, p});
    });

    std::vector<std::size_t> sizes(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) sizes[i] = nodes[i].widget->node_count();

    auto linked = [&](std::size_t i, std::size_t j) {
        if (sim_align(*nodes[i].widget, *nodes[j].widget, cfg.lambda) > cfg.align_threshold) return false;
        // Edit distance is at least the size difference.
        const double n = static_cast<double>(std::max(sizes[i], sizes[j]));
        const double gap = static_cast<double>(sizes[i] > sizes[j] ? sizes[i] - sizes[j] : sizes[j] - sizes[i]);
        if (gap / n > cfg.structure_threshold) return false;
        return sim_structure(*nodes[i].widget, *nodes[j].widget) <= cfg.structure_threshold;
    };

    // Greedy pre-order clustering: join the first cluster holding any linked member.
    std::vector<std::vector<std::size_t>> clusters;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        bool added = false;
        for (auto& cluster : clusters) {
            for (std::size_t m : cluster) {
                if (linked(i, m)) {
                    cluster.push_back(i);
                    added = true;
                    break;
                }
            }
            if (added) break;
        }
        if (!added) clusters.push_back({i});
    }

    struct Proposal {
        WidgetPath container;
        std::vector<std::size_t> members;
    };
    std::vector<Proposal> proposals;
    for (const auto& cluster : clusters) {
        if (cluster.size() < 2) continue;
        // A container is one parent; split the cluster by parent.
        std::map<WidgetPath, std::vector<std::size_t>> by_parent;
        for (std::size_t m : cluster) {
            WidgetPath parent(nodes[m].path.begin(), nodes[m].path.end() - 1);
            by_parent[parent].push_back(m);
        }
        for (auto& [parent, members] : by_parent) {
            // Keep members linked to another member under the same parent.
            bool changed = true;
            while (changed && members.size() >= 2) {
                changed = false;
                for (auto it = members.begin(); it != members.end(); ++it) {
                    bool has_link = std::any_of(members.begin(), members.end(),
                                                [&](std::size_t o) { return o != *it && linked(*it, o); });
                    if (!has_link) {
                        members.erase(it);
                        changed = true;
                        break;
                    }
                }
            }
            if (members.size() < 2) continue;

            bool all_constant = std::all_of(members.begin(), members.end(), [&](std::size_t m) {
                auto texts = collect_texts(*nodes[m].widget);
                return std::all_of(texts.begin(), texts.end(), [&](const std::string& t) { return strings.contains(t); });
            });
            if (all_constant) continue;
            std::sort(members.begin(), members.end());
            proposals.push_back({parent, members});
        }
    }

    // Drop containers nested inside another container's items.
    std::vector<Dum> out;
    for (std::size_t i = 0; i < proposals.size(); ++i) {
        bool nested = false;
        for (std::size_t j = 0; j < proposals.size() && !nested; ++j) {
            if (i == j) continue;
            for (std::size_t m : proposals[j].members)
                if (is_prefix(nodes[m].path, proposals[i].container)) {
                    nested = true;
                    break;
                }
        }
        if (nested) continue;
        Dum d;
        d.container = make_locator(s.root, proposals[i].container);
        d.item_signature = item_signature(*nodes[proposals[i].members.front()].widget);
        for (std::size_t m : proposals[i].members) d.members.push_back(make_locator(s.root, nodes[m].path));
        d.screen_id = s.screen_id;
        out.push_back(std::move(d));
    }
    return out;
}

// ---- matching & extraction -------------------------------------------------

std::optional<Dum> match_dum(const UiSnapshot& s, const Dum& d) {
    auto matches_items = [&](const Widget& w) {
        return std::any_of(w.children.begin(), w.children.end(),
                           [&](const Widget& c) { return item_signature(c) == d.item_signature; });
    };

    std::optional<WidgetPath> found;
    if (!d.container.resource_id.empty()) {
        for_each_preorder(s.root, [&](const Widget& w, const WidgetPath& p) {
            if (!found && w.resource_id == d.container.resource_id && w.widget_class == d.container.widget_class)
                found = p;
        });
    } else if (const Widget* w = find_widget(s.root, d.container.path);
               w && w->widget_class == d.container.widget_class && (w->children.empty() || matches_items(*w))) {
        found = d.container.path;
    }
    if (!found) {
        for_each_preorder(s.root, [&](const Widget& w, const WidgetPath& p) {
            if (!found && w.widget_class == d.container.widget_class && matches_items(w)) found = p;
        });
    }
    if (!found) return std::nullopt;

    Dum m;
    m.container = make_locator(s.root, *found);
    m.item_signature = d.item_signature;
    m.screen_id = s.screen_id;
    const Widget* container = find_widget(s.root, *found);
    for (std::size_t i = 0; i < container->children.size(); ++i) {
        if (item_signature(container->children[i]) != d.item_signature) continue;
        WidgetPath p = *found;
        p.push_back(static_cast<int>(i));
        m.members.push_back(make_locator(s.root, p));
    }
    return m;
}

DumState extract_dum_state(const UiSnapshot& s, const Dum& d) {
    auto m = match_dum(s, d);
    if (!m) throw LookupError("data container " + d.container.describe() + " not found on screen '" + s.screen_id + "'");
    DumState st;
    st.captured_at = s.capture_seq;
    for (const auto& loc : m->members) {
        const Widget* w = find_widget(s.root, loc.path);
        st.items.push_back(DataItem{collect_texts(*w), loc});
    }
    return st;
}

// ---- JSON ------------------------------------------------------------------

json to_json(const Dum& d) {
    json members = json::array();
    for (const auto& m : d.members) members.push_back(to_json(m));
    return json{{"container", to_json(d.container)},
                {"item_signature", d.item_signature},
                {"members", std::move(members)},
                {"screen_id", d.screen_id}};
}

Dum dum_from_json(const json& j) {
    Dum d;
    d.container = locator_from_json(j.at("container"));
    d.item_signature = j.at("item_signature").get<std::string>();
    for (const auto& m : j.at("members")) d.members.push_back(locator_from_json(m));
    d.screen_id = j.value("screen_id", std::string{});
    return d;
}

json to_json(const DataItem& item) { return json{{"texts", item.texts}, {"locator", to_json(item.locator)}}; }

DataItem data_item_from_json(const json& j) {
    DataItem item;
    item.texts = j.at("texts").get<std::vector<std::string>>();
    if (auto it = j.find("locator"); it != j.end() && !it->is_null()) item.locator = locator_from_json(*it);
    return item;
}

json to_json(const DumState& s) {
    json items = json::array();
    for (const auto& i : s.items) items.push_back(to_json(i));
    return json{{"items", std::move(items)}, {"captured_at", s.captured_at}};
}

DumState dum_state_from_json(const json& j) {
    DumState s;
    for (const auto& i : j.at("items")) s.items.push_back(data_item_from_json(i));
    s.captured_at = j.value("captured_at", std::int64_t{0});
    return s;
}

}  // namespace dmescope
