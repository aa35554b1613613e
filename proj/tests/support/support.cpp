#include "support.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "dmescope/llm.hpp"
#include "dmescope/planner.hpp"
#include "dmescope/sim.hpp"

#ifndef DMESCOPE_FIXTURE_DIR
#error "DMESCOPE_FIXTURE_DIR must point at the fixtures directory"
#endif

namespace dmescope::test {

std::string fixture(const std::string& relative) { return std::string(DMESCOPE_FIXTURE_DIR) + "/" + relative; }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json_file(const std::string& path) { return nlohmann::json::parse(read_file(path)); }

Widget node(std::string cls, std::vector<Widget> children) {
    Widget w;
    w.widget_class = std::move(cls);
    w.children = std::move(children);
    return w;
}

Widget node_at(std::string cls, Bounds b, std::vector<Widget> children) {
    Widget w = node(std::move(cls), std::move(children));
    w.bounds = b;
    return w;
}

Widget random_tree(std::mt19937_64& rng, std::size_t nodes, std::size_t labels) {
    static const char* kClasses[] = {"LinearLayout", "TextView", "ImageView", "Button", "FrameLayout", "EditText"};
    auto label = [&] { return std::string(kClasses[rng() % std::min<std::size_t>(labels, 6)]); };
    Widget root = node(label());
    // Attach each new node under a uniformly chosen existing node, as its last child.
    std::vector<WidgetPath> paths{{}};
    for (std::size_t i = 1; i < nodes; ++i) {
        const WidgetPath parent = paths[rng() % paths.size()];
        Widget* p = &root;
        for (int k : parent) p = &p->children[static_cast<std::size_t>(k)];
        p->children.push_back(node(label()));
        WidgetPath child = parent;
        child.push_back(static_cast<int>(p->children.size() - 1));
        paths.push_back(child);
    }
    return root;
}

namespace {

struct Flat {
    std::vector<std::string> label;
    std::vector<int> parent;
    std::vector<std::vector<bool>> ancestor;  // ancestor[i][j]: i is a proper ancestor of j
};

Flat flatten(const Widget& root) {
    Flat f;
    std::function<void(const Widget&, int)> walk = [&](const Widget& w, int parent) {
        const int id = static_cast<int>(f.label.size());
        f.label.push_back(w.widget_class);
        f.parent.push_back(parent);
        for (const auto& c : w.children) walk(c, id);
    };
    walk(root, -1);
    const std::size_t n = f.label.size();
    f.ancestor.assign(n, std::vector<bool>(n, false));
    for (std::size_t j = 0; j < n; ++j)
        for (int p = f.parent[j]; p >= 0; p = f.parent[static_cast<std::size_t>(p)])
            f.ancestor[static_cast<std::size_t>(p)][j] = true;
    return f;
}

}  // namespace

std::size_t brute_force_edit_distance(const Widget& a, const Widget& b) {
    const Flat fa = flatten(a);
    const Flat fb = flatten(b);
    const std::size_t na = fa.label.size();
    const std::size_t nb = fb.label.size();
    std::size_t best = na + nb;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;

    // Nodes of `a` in preorder are either left unmapped or mapped to a node of
    // `b` with a larger preorder index than the previous mapped one.
    std::function<void(std::size_t, std::size_t, std::size_t)> search = [&](std::size_t i, std::size_t next_b,
                                                                            std::size_t relabels) {
        if (i == na) {
            const std::size_t m = pairs.size();
            best = std::min(best, relabels + (na - m) + (nb - m));
            return;
        }
        search(i + 1, next_b, relabels);
        for (std::size_t j = next_b; j < nb; ++j) {
            bool ok = true;
            for (const auto& [pi, pj] : pairs) {
                if (fa.ancestor[pi][i] != fb.ancestor[pj][j]) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            pairs.emplace_back(i, j);
            search(i + 1, j + 1, relabels + (fa.label[i] == fb.label[j] ? 0 : 1));
            pairs.pop_back();
        }
    };
    search(0, 0, 0);
    return best;
}

namespace {

std::size_t occurrences(const DumState& s, const std::vector<std::string>& texts) {
    std::size_t n = 0;
    for (const auto& item : s.items)
        if (item.texts == texts) ++n;
    return n;
}

bool contains_value(const std::vector<std::string>& texts, const std::string& value) {
    for (const auto& t : texts)
        if (t.find(value) != std::string::npos) return true;
    return false;
}

}  // namespace

PostOutcome multiset_oracle(DmfType t, const DumState& before, const DumState& after,
                            const std::optional<DataItem>& target, std::span<const std::string> inputs) {
    std::vector<std::string> named;
    for (const auto& in : inputs)
        if (!in.empty()) named.push_back(in);

    switch (t) {
        case DmfType::Create: {
            if (after.items.size() != before.items.size() + 1) return PostOutcome::Fail;
            if (named.empty()) return PostOutcome::Pass;
            // An after item is new when its text list occurs more often after than before.
            for (const auto& item : after.items) {
                if (occurrences(after, item.texts) <= occurrences(before, item.texts)) continue;
                for (const auto& n : named)
                    if (contains_value(item.texts, n)) return PostOutcome::Pass;
            }
            return PostOutcome::Fail;
        }
        case DmfType::Delete: {
            const std::size_t was = occurrences(before, target->texts);
            if (was == 0) return PostOutcome::Indeterminate;
            if (occurrences(after, target->texts) >= was) return PostOutcome::Fail;
            return after.items.size() + 1 == before.items.size() ? PostOutcome::Pass : PostOutcome::Fail;
        }
        case DmfType::Update: {
            if (after.items.size() != before.items.size()) return PostOutcome::Fail;
            if (named.empty()) return PostOutcome::Indeterminate;
            const std::string& edited = named.back();
            std::size_t idx = before.items.size();
            for (std::size_t i = 0; i < before.items.size(); ++i) {
                if (before.items[i].texts == target->texts) {
                    idx = i;
                    break;
                }
            }
            if (idx == before.items.size()) return PostOutcome::Indeterminate;
            bool anywhere = false;
            for (const auto& item : after.items) anywhere = anywhere || contains_value(item.texts, edited);
            if (!anywhere) return PostOutcome::Fail;
            const auto& now = after.items[idx].texts;
            if (contains_value(now, edited) && now != before.items[idx].texts) return PostOutcome::Pass;
            return PostOutcome::Indeterminate;
        }
        case DmfType::Read:
        case DmfType::Search: return PostOutcome::Indeterminate;
    }
    return PostOutcome::Indeterminate;
}

DumState state_of(const std::vector<std::vector<std::string>>& items) {
    DumState s;
    for (const auto& texts : items) s.items.push_back(DataItem{texts, Locator{}});
    return s;
}

std::vector<DmfInstance> collect_app(const std::string& app, const std::string& script,
                                     const std::vector<DmfType>& types) {
    auto env = SimEnvironment::load(app);
    auto backend = ScriptedBackend::load(script);
    ExploreConfig ecfg;
    auto dums = explore_for_dums(*env, nullptr, ecfg);
    CollectConfig cfg;
    cfg.types = types;
    std::vector<DmfInstance> out;
    for (const auto& rec : dums) {
        env->restore_snapshot(rec.snapshot);
        env->drain_log();
        const auto baseline = env->save_snapshot();
        auto res = collect_dmfs(*env, baseline, rec.dum, backend, cfg, rec.setup);
        out.insert(out.end(), res.instances.begin(), res.instances.end());
    }
    return out;
}

CampaignResult fuzz_app(const std::string& app, std::span<const DmfInstance> dmfs, const std::string& script,
                        std::size_t budget, std::uint64_t seed) {
    auto env = SimEnvironment::load(app);
    auto backend = ScriptedBackend::load(script);
    CampaignConfig cfg;
    cfg.budget = budget;
    cfg.seed = seed;
    return run_campaign(*env, dmfs, &backend, cfg);
}

std::vector<CorpusEntry> fault_corpus() {
    std::vector<CorpusEntry> out;
    for (const auto& e : read_json_file(fixture("corpus.json"))) {
        CorpusEntry c{fixture(e.at("twin")), fixture(e.at("faulty")), fixture(e.at("script")), {}, e.at("fault")};
        for (const auto& t : e.at("types")) c.types.push_back(dmf_type_from_string(t.get<std::string>()));
        out.push_back(std::move(c));
    }
    return out;
}

bool perform_steps(Environment& env, const nlohmann::json& steps) {
    for (const auto& st : steps) {
        const auto type = event_type_from_string(st.at("type").get<std::string>());
        const auto target = st.value("target", std::string{});
        const auto actions = enumerate_actions(env.current_snapshot(), {});
        auto it = std::find_if(actions.begin(), actions.end(), [&](const UiEvent& e) {
            if (e.type != type) return false;
            if (type == EventType::Back) return true;
            return e.target && (e.target->resource_id == target || e.target->text == target);
        });
        if (it == actions.end()) return false;
        UiEvent e = *it;
        if (type == EventType::InputText) e.payload = st.value("text", std::string{});
        if (!env.perform(e).valid) return false;
    }
    return true;
}

}  // namespace dmescope::test
